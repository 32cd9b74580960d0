"""Command-line front end.

Verbs:
  gen                 write the configured operator / signal / image to disk
  recover             solve one recovery instance and write the result
  rip                 isometry-constant scan (same as `experiment rip-scan`)
  constants           stability-constant grid (same as `experiment constants`)
  experiment NAME     run a named experiment end to end

Common flags: ``--config PATH`` (strict key = value file), ``--seed N``
(overrides master_seed), ``--out DIR`` (overrides output_dir), and
``--full-scale`` (image experiment only: 256x256 scene, 25000 measurements).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .config import EXPERIMENTS, ExperimentConfig, default_config, load_config
from .ensembles import EnsembleSpec, generate
from .harness import run_experiment, write_pgm
from .linops import save_dense
from .noisemodel import epsilon_gaussian
from .rng import derived_seed, substream
from .signals import gen_compressible, gen_sparse_spikes, standard_test_image
from .solvers import RecoveryProblem, SolverResult, solve_bpdn, solve_tv

# gen only materializes operators below this entry count (64 MB of float64)
_GEN_DENSE_CAP = 1 << 23

_SIGNAL_BASE = 1 << 40
_NOISE_BASE = 2 << 40


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparserec",
        description="Sparse recovery toolkit: l1/TV programs, isometry analysis, "
                    "and reproducible experiments.")
    sub = parser.add_subparsers(dest="verb", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment config file")
    common.add_argument("--seed", type=int, metavar="N", help="override master_seed")
    common.add_argument("--out", metavar="DIR", help="override output_dir")
    common.add_argument("--full-scale", action="store_true",
                        help="image experiment only: 256x256 scene with 25000 measurements")
    sub.add_parser("gen", parents=[common],
                   help="write the configured operator / signal / image")
    sub.add_parser("recover", parents=[common],
                   help="solve one configured recovery instance")
    sub.add_parser("rip", parents=[common], help="isometry-constant scan")
    sub.add_parser("constants", parents=[common], help="stability-constant grid")
    exp = sub.add_parser("experiment", parents=[common], help="run a named experiment")
    exp.add_argument("name", choices=EXPERIMENTS)
    return parser


def _resolve_config(args, fallback_experiment: str) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = default_config(fallback_experiment)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.out is not None:
        cfg.output_dir = args.out
    if args.full_scale:
        if cfg.experiment != "image":
            raise ValueError("--full-scale applies to the image experiment only")
        cfg.m = 256 * 256
        cfg.n = 25000
    return cfg


def _signal_for(cfg: ExperimentConfig, trial: int) -> np.ndarray:
    sseed = derived_seed(cfg.master_seed, _SIGNAL_BASE + trial)
    if cfg.experiment == "table2":
        return gen_compressible(cfg.m, cfg.rate, cfg.const, sseed)
    return gen_sparse_spikes(cfg.m, cfg.k, sseed)


def _write_vector_csv(path: Path, x: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,value\n")
        for i, v in enumerate(x):
            fh.write(f"{i},{v:.12g}\n")


def _cmd_gen(cfg: ExperimentConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.experiment == "image":
        side = math.isqrt(cfg.m)
        img = standard_test_image(side)
        path = out / "image_original.pgm"
        write_pgm(path, img)
        print(f"wrote {path}")
    else:
        x0 = _signal_for(cfg, 0)
        path = out / "signal_000.csv"
        _write_vector_csv(path, x0)
        print(f"wrote {path}")
    if cfg.n * cfg.m <= _GEN_DENSE_CAP:
        op = generate(EnsembleSpec(cfg.ensemble_kind, cfg.n, cfg.m,
                                   seed=cfg.master_seed,
                                   normalize_columns=cfg.normalize_columns))
        path = out / "operator.bin"
        save_dense(op, path)
        print(f"wrote {path}")
    else:
        print(f"operator of {cfg.n}x{cfg.m} entries exceeds the gen cap; "
              "skipped (regenerate from the seed instead)")
    return 0


def _cmd_recover(cfg: ExperimentConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.experiment in ("rip-scan", "constants"):
        raise ValueError(f"nothing to recover for experiment {cfg.experiment!r}")
    op = generate(EnsembleSpec(cfg.ensemble_kind, cfg.n, cfg.m, seed=cfg.master_seed,
                               normalize_columns=cfg.normalize_columns))
    sigma = cfg.sigmas[0] if cfg.sigmas else 0.0
    eps = epsilon_gaussian(sigma, cfg.n, cfg.lam)
    noise_rng = substream(derived_seed(cfg.master_seed, _NOISE_BASE))
    if cfg.experiment == "image":
        side = math.isqrt(cfg.m)
        x0 = standard_test_image(side).ravel()
        x0 = x0 / float(np.linalg.norm(x0))
        y = op.forward(x0) + noise_rng.normal(0.0, sigma, cfg.n)
        res: SolverResult = solve_tv(RecoveryProblem(op, y, eps, tv_shape=(side, side)),
                                     cfg.solver)
        write_pgm(out / "recovered.pgm", res.x_sharp.reshape(side, side))
        print(f"wrote {out / 'recovered.pgm'}")
    else:
        x0 = _signal_for(cfg, 0)
        y = op.forward(x0) + noise_rng.normal(0.0, sigma, cfg.n)
        res = solve_bpdn(RecoveryProblem(op, y, eps), cfg.solver)
        print(f"recovery_error,{np.linalg.norm(res.x_sharp - x0):.12g}")
    path = out / "recovered.csv"
    _write_vector_csv(path, res.x_sharp)
    print(f"wrote {path}")
    print(SolverResult.CSV_HEADER)
    print(res.to_csv_row())
    return 0


def _cmd_experiment(cfg: ExperimentConfig) -> int:
    result = run_experiment(cfg)
    for attr in ("summary_path", "trials_path", "metrics_path", "csv_path"):
        path = getattr(result, attr, None)
        if path is not None:
            print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    fallback = {"gen": "table1", "recover": "table1",
                "rip": "rip-scan", "constants": "constants"}.get(args.verb)
    try:
        if args.verb == "experiment":
            if args.config:
                cfg = _resolve_config(args, args.name)
                if cfg.experiment != args.name:
                    raise ValueError(
                        f"config names experiment {cfg.experiment!r} but the "
                        f"command line says {args.name!r}")
            else:
                cfg = _resolve_config(args, args.name)
            return _cmd_experiment(cfg)
        cfg = _resolve_config(args, fallback)
        if args.verb == "rip":
            cfg.experiment = "rip-scan"
            return _cmd_experiment(cfg)
        if args.verb == "constants":
            cfg.experiment = "constants"
            return _cmd_experiment(cfg)
        if args.verb == "gen":
            return _cmd_gen(cfg)
        return _cmd_recover(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
