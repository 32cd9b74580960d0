"""Measurement-noise models and the matched constraint radius.

For white Gaussian noise of level sigma on n measurements, the residual
constraint radius is chosen so the noise ball is exceeded only rarely:

    epsilon^2 = sigma^2 * (n + lam * sqrt(2 n)),

i.e. lam standard deviations above the mean of the chi-square law of
||e||^2.  Uniform quantization with step q has per-entry variance q^2/12
and fourth-moment spread q^2/(6 sqrt(5)) per sqrt(n), giving

    epsilon^2 = n q^2 / 12 + lam * sqrt(n) * q^2 / (6 sqrt(5)).

``lam`` defaults to 2 everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import substream

_KINDS = ("gaussian", "quantize")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise recipe: kind ("gaussian" or "quantize"), level, and stream seed."""

    kind: str
    sigma: float = 0.0
    num_levels: int = 10
    lam: float = 2.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {_KINDS}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        if self.num_levels < 2:
            raise ValueError(f"need at least 2 quantizer levels, got {self.num_levels}")


def epsilon_gaussian(sigma: float, n: int, lam: float = 2.0) -> float:
    """Constraint radius for white noise of standard deviation ``sigma``."""
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return float(sigma * np.sqrt(n + lam * np.sqrt(2.0 * n)))


def epsilon_quantization(q: float, n: int, lam: float = 2.0) -> float:
    """Constraint radius for uniform quantization with step ``q``."""
    if q < 0:
        raise ValueError(f"quantizer step must be nonnegative, got {q}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return float(np.sqrt(n * q * q / 12.0 + lam * np.sqrt(n) * q * q / (6.0 * np.sqrt(5.0))))


def quantize(y, num_levels: int) -> tuple[np.ndarray, float]:
    """Round each entry to the nearest of ``num_levels`` equispaced values.

    The levels span [min(y), max(y)] inclusive; returns the rounded vector
    and the level spacing q.  A constant input has no usable span.
    """
    y = np.asarray(y, dtype=float)
    if num_levels < 2:
        raise ValueError(f"need at least 2 quantizer levels, got {num_levels}")
    lo, hi = float(y.min()), float(y.max())
    if hi == lo:
        raise ValueError("cannot quantize a constant vector (zero dynamic range)")
    q = (hi - lo) / (num_levels - 1)
    return lo + np.round((y - lo) / q) * q, q


def apply_noise(y, spec: NoiseSpec) -> tuple[np.ndarray, np.ndarray, float]:
    """Corrupt clean measurements per ``spec``.

    Returns ``(y_noisy, e, epsilon)`` with ``e = y_noisy - y`` and the
    matched constraint radius.  Gaussian noise is drawn from the Philox
    substream keyed by ``spec.seed``.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if spec.kind == "gaussian":
        e = substream(spec.seed).normal(0.0, spec.sigma, n) if spec.sigma > 0 else np.zeros(n)
        return y + e, e, epsilon_gaussian(spec.sigma, n, spec.lam)
    if spec.kind == "quantize":
        y_noisy, q = quantize(y, spec.num_levels)
        return y_noisy, y_noisy - y, epsilon_quantization(q, n, spec.lam)
    raise ValueError(f"unknown noise kind {spec.kind!r}; expected one of {_KINDS}")
