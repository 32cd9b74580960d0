"""Restricted isometry constants and recovery stability constants.

delta_S of an operator A is the smallest delta with

    (1 - delta) ||c||^2 <= ||A_T c||^2 <= (1 + delta) ||c||^2

over all column subsets T with |T| <= S.  Because the extreme Gram
eigenvalues over subsets of size < S are dominated by some superset of
size S (eigenvalue interlacing), scanning only |T| = S is exact.  The
exhaustive scan enumerates subsets and takes symmetric eigenvalues of the
S-by-S Grams; the sampled variant scans a seeded random sequence of
subsets and therefore always yields a lower bound.

Two sufficient conditions computed from measured deltas:

    exact recovery (sparse, noiseless):  delta_S + delta_2S + delta_3S < 1
    stable recovery (noisy):             delta_3S + 3 delta_4S < 2

The stability constants quantify the error bounds of the l1 programs.
With rho = |T0| / M and deltas measured at sizes M and M + |T0|:

    C_{T0,M} = sqrt(1 - delta_{M+|T0|}) - sqrt(rho) sqrt(1 + delta_M)

must be positive; then

    C_S   = 2 sqrt(1 + rho) / C_{T0,M}                      (sparse case)
    C_1,S = 2 (1 + sqrt(rho)) / C_{T0,M}                    (general, noise term)
    C_2,S = 2 (1+sqrt(rho)) sqrt(rho) sqrt(1+delta_M) / C_{T0,M} + 2 sqrt(rho)
                                                            (general, tail term)

and the recovery error of the residual-constrained l1 program obeys
``C_1,S * epsilon + C_2,S * l1-tail / sqrt(S)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .linops import MeasurementOperator
from .rng import sample_without_replacement, substream

DEFAULT_SUBSET_BUDGET = 2_000_000
_CHUNK = 2048


def _dense(a) -> np.ndarray:
    if isinstance(a, MeasurementOperator):
        return a.materialize()
    mat = np.asarray(a, dtype=float)
    if mat.ndim != 2:
        raise ValueError(f"operator must be 2-d, got shape {mat.shape}")
    return mat


def _delta_of_subsets(mat: np.ndarray, subsets: np.ndarray) -> float:
    """Max eigenvalue deviation from 1 over the stacked Gram matrices."""
    cols = mat[:, subsets]                      # (n, batch, S)
    sub = np.moveaxis(cols, 1, 0)               # (batch, n, S)
    gram = np.einsum("bns,bnt->bst", sub, sub)
    eig = np.linalg.eigvalsh(gram)
    return float(max(eig[:, -1].max() - 1.0, 1.0 - eig[:, 0].min()))


def delta_exhaustive(a, s: int, budget: int = DEFAULT_SUBSET_BUDGET) -> float:
    """Exact delta_S by enumerating all C(m, S) column subsets.

    Raises ValueError when the subset count exceeds ``budget`` -- use
    :func:`delta_sampled` for a certified lower bound instead.
    """
    mat = _dense(a)
    n, m = mat.shape
    if not 1 <= s <= m:
        raise ValueError(f"need 1 <= S <= {m}, got {s}")
    count = math.comb(m, s)
    if count > budget:
        raise ValueError(
            f"C({m},{s}) = {count} subsets exceeds the budget of {budget}; "
            "use delta_sampled for a lower bound"
        )
    best = 0.0
    it = itertools.combinations(range(m), s)
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            break
        best = max(best, _delta_of_subsets(mat, np.asarray(block, dtype=np.intp)))
    return best


def delta_sampled(a, s: int, num_subsets: int, seed: int) -> float:
    """Lower bound on delta_S from a seeded stream of random subsets.

    The subset stream depends only on ``seed``, so enlarging
    ``num_subsets`` keeps the earlier draws and the estimate is monotone
    nondecreasing in the sample count.
    """
    mat = _dense(a)
    n, m = mat.shape
    if not 1 <= s <= m:
        raise ValueError(f"need 1 <= S <= {m}, got {s}")
    if num_subsets < 1:
        raise ValueError(f"num_subsets must be positive, got {num_subsets}")
    rng = substream(seed)
    best = 0.0
    block = []
    for _ in range(num_subsets):
        block.append(np.sort(sample_without_replacement(rng, m, s)))
        if len(block) == _CHUNK:
            best = max(best, _delta_of_subsets(mat, np.asarray(block, dtype=np.intp)))
            block = []
    if block:
        best = max(best, _delta_of_subsets(mat, np.asarray(block, dtype=np.intp)))
    return best


def pairwise_delta2(a) -> float:
    """delta_2 of a unit-column operator: the largest |<a_i, a_j>|, i != j.

    Valid because the 2-by-2 Gram of unit columns has eigenvalues
    1 +- |<a_i, a_j>|.  Columns are required to be unit-norm to 1e-8.
    """
    mat = _dense(a)
    norms = np.linalg.norm(mat, axis=0)
    if np.abs(norms - 1.0).max() > 1e-8:
        raise ValueError("pairwise delta_2 oracle requires unit-norm columns")
    gram = mat.T @ mat
    np.fill_diagonal(gram, 0.0)
    return float(np.abs(gram).max())


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class RipEntry:
    delta: float
    method: str           # "exhaustive" or "sampled"
    subsets_examined: int


@dataclass
class RipReport:
    """Measured deltas for one operator, keyed by subset size S."""

    n: int
    m: int
    entries: dict[int, RipEntry] = field(default_factory=dict)

    def delta(self, s: int) -> float:
        if s not in self.entries:
            raise ValueError(f"no delta recorded for S={s}")
        return self.entries[s].delta

    def to_csv(self) -> str:
        lines = ["S,delta,method,subsets_examined"]
        for s in sorted(self.entries):
            e = self.entries[s]
            lines.append(f"{s},{e.delta:.17g},{e.method},{e.subsets_examined}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, n: int = 0, m: int = 0) -> "RipReport":
        lines = [ln for ln in text.strip().splitlines() if ln]
        if not lines or lines[0] != "S,delta,method,subsets_examined":
            raise ValueError("bad report header")
        rep = cls(n=n, m=m)
        for ln in lines[1:]:
            s_str, d_str, meth, cnt = ln.split(",")
            rep.entries[int(s_str)] = RipEntry(float(d_str), meth, int(cnt))
        return rep


def measure(a, s_values, budget: int = DEFAULT_SUBSET_BUDGET,
            num_subsets: int = 0, seed: int = 0) -> RipReport:
    """RipReport over the given subset sizes.

    Sizes whose exhaustive enumeration fits the budget are scanned exactly;
    the rest fall back to ``num_subsets`` sampled draws (skipped entirely
    when ``num_subsets`` is 0).
    """
    mat = _dense(a)
    n, m = mat.shape
    rep = RipReport(n=n, m=m)
    for s in s_values:
        count = math.comb(m, s)
        if count <= budget:
            rep.entries[s] = RipEntry(delta_exhaustive(mat, s, budget), "exhaustive", count)
        elif num_subsets > 0:
            rep.entries[s] = RipEntry(delta_sampled(mat, s, num_subsets, seed),
                                      "sampled", num_subsets)
    return rep


def check_exact_condition(report: RipReport, s: int) -> bool:
    """delta_S + delta_2S + delta_3S < 1 (noiseless exact-recovery regime)."""
    return report.delta(s) + report.delta(2 * s) + report.delta(3 * s) < 1.0


def check_stable_condition(report: RipReport, s: int) -> bool:
    """delta_3S + 3 delta_4S < 2 (stable-recovery regime)."""
    return report.delta(3 * s) + 3.0 * report.delta(4 * s) < 2.0


# ---------------------------------------------------------------------------
# Stability constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityConstants:
    """Closed-form constants of the l1 recovery error bounds."""

    t0_size: int
    block_size: int       # M: size of the comparison blocks
    rho: float            # t0_size / block_size
    delta_m: float
    delta_m_plus_t0: float
    c_t0_m: float
    c_s: float
    c1_s: float
    c2_s: float
    valid: bool           # c_t0_m > 0; the bounds are vacuous otherwise


def stability_constants(t0_size: int, block_size: int,
                        delta_m: float, delta_m_plus_t0: float) -> StabilityConstants:
    """Evaluate the stability constants for given subset sizes and deltas."""
    if t0_size < 1 or block_size < 1:
        raise ValueError("subset sizes must be positive")
    for name, d in (("delta_m", delta_m), ("delta_m_plus_t0", delta_m_plus_t0)):
        if not 0.0 <= d < 1.0:
            raise ValueError(f"{name} must lie in [0, 1), got {d}")
    rho = t0_size / block_size
    c = float(np.sqrt(1.0 - delta_m_plus_t0) - np.sqrt(rho) * np.sqrt(1.0 + delta_m))
    if c <= 0.0:
        return StabilityConstants(t0_size, block_size, rho, delta_m, delta_m_plus_t0,
                                  c, float("inf"), float("inf"), float("inf"), False)
    root_rho = np.sqrt(rho)
    c_s = float(2.0 * np.sqrt(1.0 + rho) / c)
    c1 = float(2.0 * (1.0 + root_rho) / c)
    c2 = float(2.0 * (1.0 + root_rho) * root_rho * np.sqrt(1.0 + delta_m) / c + 2.0 * root_rho)
    return StabilityConstants(t0_size, block_size, rho, delta_m, delta_m_plus_t0,
                              c, c_s, c1, c2, True)


def recovery_error_bound(constants: StabilityConstants, epsilon: float, x0) -> float:
    """Error bound C_1,S * epsilon + C_2,S * l1-tail(x0, S) / sqrt(S)."""
    if not constants.valid:
        raise ValueError("constants are invalid (c_t0_m <= 0); the bound is vacuous")
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    x0 = np.asarray(x0, dtype=float)
    s = constants.t0_size
    mags = np.sort(np.abs(x0))[::-1]
    tail = float(mags[s:].sum())
    return float(constants.c1_s * epsilon + constants.c2_s * tail / np.sqrt(s))
