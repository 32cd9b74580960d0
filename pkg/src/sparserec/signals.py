"""Test-signal generators and sparsity/approximation metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import fisher_yates, substream


def gen_sparse_spikes(m: int, k: int, seed: int) -> np.ndarray:
    """Length-m vector with k unit spikes of random sign.

    The support is a uniform k-subset (Fisher-Yates), sign flips are fair
    coin tosses from the same stream, so the vector has exactly k nonzero
    entries, all +-1, and l2 norm sqrt(k).
    """
    if not 0 <= k <= m:
        raise ValueError(f"need 0 <= k <= m, got k={k}, m={m}")
    rng = substream(seed)
    support = fisher_yates(rng, m)[:k]
    x = np.zeros(m)
    x[support] = 2.0 * rng.integers(0, 2, k) - 1.0
    return x


def gen_compressible(m: int, rate: float, const: float, seed: int) -> np.ndarray:
    """Power-law vector: sorted magnitudes const * t^(-rate), t = 1..m.

    Positions are a uniform random permutation and each entry carries a
    random sign; sorted magnitudes are deterministic, so every norm and
    tail metric is seed-independent.
    """
    if rate <= 0 or const <= 0:
        raise ValueError(f"rate and const must be positive, got {rate}, {const}")
    rng = substream(seed)
    template = const * np.arange(1, m + 1, dtype=float) ** (-rate)
    perm = fisher_yates(rng, m)
    signs = 2.0 * rng.integers(0, 2, m) - 1.0
    x = np.zeros(m)
    x[perm] = template * signs
    return x


def top_k(x, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Best k-term approximation of ``x`` and its (sorted) support.

    Ties in magnitude are broken toward the lower index.  ``k=0`` returns
    the zero vector and an empty support.
    """
    x = np.asarray(x, dtype=float)
    if not 0 <= k <= x.shape[0]:
        raise ValueError(f"need 0 <= k <= {x.shape[0]}, got {k}")
    order = np.argsort(-np.abs(x), kind="stable")
    support = np.sort(order[:k])
    out = np.zeros_like(x)
    out[support] = x[support]
    return out, support


@dataclass(frozen=True)
class ApproxErrors:
    """Tail norms of a best k-term approximation."""

    l1_tail: float
    l2_tail: float
    l1_tail_scaled: float  # l1 tail divided by sqrt(k); 0 when k == 0 tail is whole signal


def approx_errors(x, k: int) -> ApproxErrors:
    """l1/l2 norms of ``x`` minus its best k-term approximation (k >= 1)."""
    x = np.asarray(x, dtype=float)
    if k < 1:
        raise ValueError(f"k must be >= 1 (the scaled tail divides by sqrt(k)), got {k}")
    x_k, _ = top_k(x, k)
    tail = x - x_k
    l1 = float(np.abs(tail).sum())
    l2 = float(np.linalg.norm(tail))
    return ApproxErrors(l1_tail=l1, l2_tail=l2, l1_tail_scaled=l1 / np.sqrt(k))


def standard_test_image(side: int) -> np.ndarray:
    """Deterministic piecewise-smooth grayscale scene in [0, 1].

    A smooth illumination ramp with a broad cosine bump overlaid with flat
    geometric shapes (two rectangles, a disk, a thin bar), giving an image
    that is simultaneously wavelet-compressible and gradient-sparse apart
    from the smooth background.  Same scene at every resolution.
    """
    if side < 8:
        raise ValueError(f"side must be >= 8, got {side}")
    t = (np.arange(side) + 0.5) / side
    xx, yy = np.meshgrid(t, t)
    img = 0.25 + 0.30 * yy + 0.10 * np.cos(2.0 * np.pi * xx) * np.sin(np.pi * yy)
    img[(xx > 0.12) & (xx < 0.44) & (yy > 0.18) & (yy < 0.56)] = 0.85
    img[((xx - 0.68) ** 2 + (yy - 0.32) ** 2) < 0.030] = 0.10
    img[(xx > 0.52) & (xx < 0.92) & (yy > 0.68) & (yy < 0.80)] = 0.62
    img[(xx > 0.08) & (xx < 0.20) & (yy > 0.72) & (yy < 0.92)] = 0.95
    return np.clip(img, 0.0, 1.0)


def gradient_sparse_image(side: int) -> np.ndarray:
    """Piecewise-constant test scene: one off-center rectangle on zeros."""
    if side < 8:
        raise ValueError(f"side must be >= 8, got {side}")
    img = np.zeros((side, side))
    img[side // 4: side // 2 + side // 8, side // 5: side // 2 + side // 4] = 1.0
    return img
