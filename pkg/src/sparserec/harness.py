"""Experiment drivers: recovery benchmarks over noise levels, image
reconstruction, isometry-constant scans, and stability-constant grids.

Every driver consumes an :class:`~sparserec.config.ExperimentConfig`, writes
CSV (and image) artifacts into ``output_dir``, and returns the same data as
Python structures.  Outputs are byte-identical across runs of the same
config except for wall-time columns.  Numeric CSV fields use 12 significant
digits with ``.`` as the decimal separator.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .ensembles import EnsembleSpec, generate
from .linops import compose
from .noisemodel import NoiseSpec, apply_noise, epsilon_gaussian
from .rip import RipEntry, RipReport, check_exact_condition, check_stable_condition, \
    measure, stability_constants
from .rng import derived_seed, substream
from .signals import approx_errors, gen_compressible, gen_sparse_spikes, \
    standard_test_image, top_k
from .solvers import RecoveryProblem, oracle_ls, solve_bpdn, solve_tv
from .wavelets import WaveletTransform2D

# Disjoint seed-derivation domains so signal, noise, and operator streams
# can never collide for any realistic trial/row count.
_SIGNAL_BASE = 1 << 40
_NOISE_BASE = 2 << 40
_OP_BASE = 3 << 40

_TRIAL_HEADER = ("trial,seed,sigma,epsilon,recovery_error,oracle_error,"
                 "residual_norm,iterations,wall_time,converged")
_SUMMARY_HEADER = "sigma,epsilon,mean_error,trials_converged,trials_total"


def _g(x: float) -> str:
    return f"{x:.12g}"


@dataclass
class TrialRecord:
    """One recovery trial: identifiers, error metrics, solver effort."""

    trial: int
    seed: int
    sigma: float
    epsilon: float
    recovery_error: float
    oracle_error: float
    residual_norm: float
    iterations: int
    wall_time: float
    converged: bool

    def to_csv_row(self) -> str:
        return (f"{self.trial},{self.seed},{_g(self.sigma)},{_g(self.epsilon)},"
                f"{_g(self.recovery_error)},{_g(self.oracle_error)},"
                f"{_g(self.residual_norm)},{self.iterations},"
                f"{_g(self.wall_time)},{int(self.converged)}")


@dataclass
class SummaryRow:
    """Per-noise-level aggregate of a recovery table."""

    sigma: float
    epsilon: float
    mean_error: float
    trials_converged: int
    trials_total: int

    def to_csv_row(self) -> str:
        return (f"{_g(self.sigma)},{_g(self.epsilon)},{_g(self.mean_error)},"
                f"{self.trials_converged},{self.trials_total}")


@dataclass
class TableResult:
    rows: list[SummaryRow]
    records: list[TrialRecord]
    summary_path: Path
    trials_path: Path


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _run_table(cfg: ExperimentConfig, compressible: bool, name: str) -> TableResult:
    out = _out_dir(cfg)
    spec = EnsembleSpec(cfg.ensemble_kind, cfg.n, cfg.m, seed=cfg.master_seed,
                        normalize_columns=cfg.normalize_columns)
    op = generate(spec)  # one operator shared by every row and trial
    signals = []
    for t in range(cfg.trials):
        sseed = derived_seed(cfg.master_seed, _SIGNAL_BASE + t)
        if compressible:
            signals.append(gen_compressible(cfg.m, cfg.rate, cfg.const, sseed))
        else:
            signals.append(gen_sparse_spikes(cfg.m, cfg.k, sseed))
    rows: list[SummaryRow] = []
    records: list[TrialRecord] = []
    for row_idx, sigma in enumerate(cfg.sigmas):
        eps = epsilon_gaussian(sigma, cfg.n, cfg.lam)
        errors = []
        converged = 0
        for t in range(cfg.trials):
            x0 = signals[t]
            nseed = derived_seed(cfg.master_seed, _NOISE_BASE + (row_idx << 20) + t)
            e = substream(nseed).normal(0.0, sigma, cfg.n)
            y = op.forward(x0) + e
            t0 = time.perf_counter()
            res = solve_bpdn(RecoveryProblem(op, y, eps), cfg.solver)
            wall = time.perf_counter() - t0
            if compressible:
                support = top_k(x0, cfg.k)[1]
            else:
                support = np.flatnonzero(x0)
            x_or = oracle_ls(op, y, support)
            rec = TrialRecord(
                trial=t, seed=nseed, sigma=sigma, epsilon=eps,
                recovery_error=float(np.linalg.norm(res.x_sharp - x0)),
                oracle_error=float(np.linalg.norm(x_or - x0)),
                residual_norm=res.residual_norm,
                iterations=res.newton_iterations,
                wall_time=wall, converged=res.converged)
            records.append(rec)
            if res.converged:
                errors.append(rec.recovery_error)
                converged += 1
        mean_error = float(np.mean(errors)) if errors else float("nan")
        rows.append(SummaryRow(sigma, eps, mean_error, converged, cfg.trials))
    summary_path = out / f"{name}_summary.csv"
    trials_path = out / f"{name}_trials.csv"
    _write(summary_path, _SUMMARY_HEADER, (r.to_csv_row() for r in rows))
    _write(trials_path, _TRIAL_HEADER, (r.to_csv_row() for r in records))
    return TableResult(rows, records, summary_path, trials_path)


def run_table1(cfg: ExperimentConfig) -> TableResult:
    """Sparse spike recovery over the configured noise levels.

    One measurement operator (from ``master_seed``) is shared by all rows
    and trials; the same ``trials`` signals are reused across noise levels,
    while the noise realization is drawn fresh per (level, trial).
    """
    return _run_table(cfg, compressible=False, name="table1")


def run_table2(cfg: ExperimentConfig) -> TableResult:
    """Compressible (power-law) signal recovery over the noise levels."""
    return _run_table(cfg, compressible=True, name="table2")


# ---------------------------------------------------------------------------
# Portable graymap I/O (binary P5, 8-bit)
# ---------------------------------------------------------------------------

def write_pgm(path, img: np.ndarray) -> None:
    """Write a float image as 8-bit binary P5, affinely rescaled to 0..255."""
    arr = np.asarray(img, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"image must be 2-d, got shape {arr.shape}")
    lo = float(arr.min())
    hi = float(arr.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    pixels = np.clip(np.round((arr - lo) * scale), 0, 255).astype(np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary P5 graymap into floats in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary P5 graymap")
    # header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed through the end of the line
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    w, h, maxval = (int(t) for t in tokens)
    if maxval <= 0 or maxval > 255:
        raise ValueError(f"{path}: unsupported maxval {maxval} (need 1..255)")
    payload = data[pos:pos + w * h]
    if len(payload) < w * h:
        raise ValueError(f"{path}: pixel payload shorter than {w}x{h}")
    raw = np.frombuffer(payload, dtype=np.uint8)
    return raw.reshape(h, w).astype(float) / float(maxval)


# ---------------------------------------------------------------------------
# Image experiment
# ---------------------------------------------------------------------------

@dataclass
class ImageRunRecord:
    """One noise variant of the image experiment (both reconstructions)."""

    noise_kind: str
    error_norm: float          # realized ||e||
    epsilon: float
    coeff_error: float         # coefficient-domain l1 recovery
    tv_error: float            # total-variation recovery
    s_term_error: float        # best S-term coefficient approximation error
    error_bound: float         # 3 * (s_term_error + epsilon)
    coeff_converged: bool
    tv_converged: bool
    coeff_wall_time: float
    tv_wall_time: float

    def to_csv_row(self) -> str:
        return (f"{self.noise_kind},{_g(self.error_norm)},{_g(self.epsilon)},"
                f"{_g(self.coeff_error)},{_g(self.tv_error)},"
                f"{_g(self.s_term_error)},{_g(self.error_bound)},"
                f"{int(self.coeff_converged)},{int(self.tv_converged)},"
                f"{_g(self.coeff_wall_time)},{_g(self.tv_wall_time)}")


_IMAGE_HEADER = ("noise,error_norm,epsilon,coeff_error,tv_error,s_term_error,"
                 "error_bound,coeff_converged,tv_converged,coeff_wall_time,tv_wall_time")


@dataclass
class ImageResult:
    records: list[ImageRunRecord]
    side: int
    metrics_path: Path


def run_image(cfg: ExperimentConfig) -> ImageResult:
    """Reconstruct a unit-norm square image from subsampled trigonometric
    measurements, once per configured noise kind (white noise and uniform
    quantization), via both the coefficient-domain l1 program and total
    variation.  Writes recovered graymaps, lossless pixel CSVs, and a
    metrics table.
    """
    if cfg.ensemble_kind != "scrambled_fourier":
        raise ValueError(
            f"image experiment requires the scrambled_fourier ensemble, got {cfg.ensemble_kind!r}")
    side = math.isqrt(cfg.m)
    if side * side != cfg.m or side < 8 or side & (side - 1):
        raise ValueError(f"m={cfg.m} is not the square of a power-of-two side >= 8")
    out = _out_dir(cfg)
    if cfg.image_path:
        img = read_pgm(cfg.image_path)
        if img.shape[0] != img.shape[1]:
            raise ValueError(f"{cfg.image_path}: image must be square, got {img.shape}")
        if img.shape[0] != side:
            raise ValueError(
                f"{cfg.image_path}: image side {img.shape[0]} does not match m={cfg.m}")
    else:
        img = standard_test_image(side)
    x0 = img.ravel()
    x0 = x0 / float(np.linalg.norm(x0))  # unit-norm scene
    write_pgm(out / "image_original.pgm", x0.reshape(side, side))

    op = generate(EnsembleSpec(cfg.ensemble_kind, cfg.n, cfg.m, seed=cfg.master_seed,
                               normalize_columns=cfg.normalize_columns))
    wt = WaveletTransform2D(side)
    coeff_op = compose(op, wt)
    alpha0 = wt.forward(x0)
    y0 = op.forward(x0)
    s_keep = round(0.2 * cfg.n)
    s_term = approx_errors(alpha0, s_keep).l2_tail

    sigma = cfg.sigmas[0] if cfg.sigmas else 0.0
    variants = [
        NoiseSpec("gaussian", sigma=sigma, lam=cfg.lam,
                  seed=derived_seed(cfg.master_seed, _NOISE_BASE)),
        NoiseSpec("quantize", num_levels=cfg.num_levels, lam=cfg.lam,
                  seed=derived_seed(cfg.master_seed, _NOISE_BASE + 1)),
    ]
    records = []
    for nspec in variants:
        y, e, eps = apply_noise(y0, nspec)
        t0 = time.perf_counter()
        res_c = solve_bpdn(RecoveryProblem(coeff_op, y, eps), cfg.solver)
        wall_c = time.perf_counter() - t0
        t0 = time.perf_counter()
        res_tv = solve_tv(RecoveryProblem(op, y, eps, tv_shape=(side, side)), cfg.solver)
        wall_tv = time.perf_counter() - t0
        pix_c = wt.inverse(res_c.x_sharp)
        pix_tv = res_tv.x_sharp
        records.append(ImageRunRecord(
            noise_kind=nspec.kind,
            error_norm=float(np.linalg.norm(e)),
            epsilon=eps,
            coeff_error=float(np.linalg.norm(res_c.x_sharp - alpha0)),
            tv_error=float(np.linalg.norm(pix_tv - x0)),
            s_term_error=s_term,
            error_bound=3.0 * (s_term + eps),
            coeff_converged=res_c.converged,
            tv_converged=res_tv.converged,
            coeff_wall_time=wall_c,
            tv_wall_time=wall_tv,
        ))
        write_pgm(out / f"image_l1_{nspec.kind}.pgm", pix_c.reshape(side, side))
        write_pgm(out / f"image_tv_{nspec.kind}.pgm", pix_tv.reshape(side, side))
        _write(out / f"image_pixels_{nspec.kind}.csv", "index,l1_pixel,tv_pixel",
               (f"{i},{_g(pix_c[i])},{_g(pix_tv[i])}" for i in range(cfg.m)))
    metrics_path = out / "image_metrics.csv"
    _write(metrics_path, _IMAGE_HEADER, (r.to_csv_row() for r in records))
    return ImageResult(records, side, metrics_path)


# ---------------------------------------------------------------------------
# Isometry-constant scan and stability-constant grid
# ---------------------------------------------------------------------------

_RIP_HEADER = "S,delta,method,subsets_examined,exact_condition,stable_condition"


@dataclass
class RipScanResult:
    report: RipReport          # seed-averaged deltas
    rows: list[str]            # CSV body rows, including any warning row
    truncated_at: int | None
    csv_path: Path


def run_rip_scan(cfg: ExperimentConfig) -> RipScanResult:
    """Average isometry constants over seeded operators for S = 1..s_max.

    Emits one CSV row per subset size with the recovery-condition flags
    where every delta they need is available; sizes whose enumeration
    exceeds the subset budget truncate the scan with a warning row
    (unless sampling is configured via ``num_subsets``).
    """
    out = _out_dir(cfg)
    s_values = list(range(1, cfg.s_max + 1))
    reports = []
    for i in range(cfg.trials):
        spec = EnsembleSpec(cfg.ensemble_kind, cfg.n, cfg.m,
                            seed=derived_seed(cfg.master_seed, _OP_BASE + i),
                            normalize_columns=cfg.normalize_columns)
        mat = generate(spec).materialize()
        reports.append(measure(mat, s_values, budget=cfg.budget,
                               num_subsets=cfg.num_subsets,
                               seed=derived_seed(cfg.master_seed, _OP_BASE + i)))
    mean_report = RipReport(n=cfg.n, m=cfg.m)
    truncated_at = None
    for s in s_values:
        if all(s in rep.entries for rep in reports):
            delta = float(np.mean([rep.entries[s].delta for rep in reports]))
            first = reports[0].entries[s]
            subsets = sum(rep.entries[s].subsets_examined for rep in reports)
            mean_report.entries[s] = RipEntry(delta, first.method, subsets)
        else:
            truncated_at = s
            break
    rows = []
    for s in sorted(mean_report.entries):
        entry = mean_report.entries[s]
        exact = ""
        if all(j in mean_report.entries for j in (s, 2 * s, 3 * s)):
            exact = str(int(check_exact_condition(mean_report, s)))
        stable = ""
        if all(j in mean_report.entries for j in (3 * s, 4 * s)):
            stable = str(int(check_stable_condition(mean_report, s)))
        rows.append(f"{s},{_g(entry.delta)},{entry.method},"
                    f"{entry.subsets_examined},{exact},{stable}")
    if truncated_at is not None:
        rows.append(f"{truncated_at},,budget_exceeded,0,,")
    csv_path = out / "rip_scan.csv"
    _write(csv_path, _RIP_HEADER, rows)
    return RipScanResult(mean_report, rows, truncated_at, csv_path)


_CONSTANTS_HEADER = "ratio,delta,c_t0_m,c_s,c1_s,c2_s,valid"


@dataclass
class ConstantsResult:
    rows: list[str]
    csv_path: Path


def run_constants(cfg: ExperimentConfig) -> ConstantsResult:
    """Stability-constant grid over configured deltas and block ratios."""
    out = _out_dir(cfg)
    rows = []
    for ratio in cfg.ratios:
        for delta in cfg.deltas:
            sc = stability_constants(cfg.t0_size, cfg.t0_size * ratio, delta, delta)
            rows.append(f"{ratio},{_g(delta)},{_g(sc.c_t0_m)},{_g(sc.c_s)},"
                        f"{_g(sc.c1_s)},{_g(sc.c2_s)},{int(sc.valid)}")
    csv_path = out / "constants.csv"
    _write(csv_path, _CONSTANTS_HEADER, rows)
    return ConstantsResult(rows, csv_path)


def run_experiment(cfg: ExperimentConfig):
    """Dispatch on ``cfg.experiment``; returns the driver's result object."""
    drivers = {
        "table1": run_table1,
        "table2": run_table2,
        "image": run_image,
        "rip-scan": run_rip_scan,
        "constants": run_constants,
    }
    return drivers[cfg.experiment](cfg)
