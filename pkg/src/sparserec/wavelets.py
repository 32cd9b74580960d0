"""Orthonormal 8-tap Daubechies wavelet transforms with periodic boundary.

The scaling filter below is the classic 8-coefficient Daubechies filter with
four vanishing moments, quoted from the standard published table at full
double precision (sum h_k = sqrt(2), sum h_k^2 = 1).  Analysis is circular
convolution plus downsampling by two; synthesis is the exact transpose, so
the multi-level transform is orthonormal and the inverse equals the adjoint.

Each analysis level requires its input length to be an even number at least
the filter length (8); for a power-of-two length N that caps the depth at
log2(N) - 2 levels.
"""

from __future__ import annotations

import numpy as np

# Scaling (lowpass) filter taps h_0..h_7.
DB8_SCALING = np.array([
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
])

# Wavelet (highpass) filter by alternating flip: g_k = (-1)^k h_{7-k}.
DB8_WAVELET = ((-1.0) ** np.arange(8)) * DB8_SCALING[::-1]

_FILTER_LEN = 8


def default_levels(size: int) -> int:
    """Default decomposition depth for a power-of-two size: log2(size) - 3."""
    return max(1, int(np.log2(size)) - 3)


def _check_size(size: int, levels: int, what: str) -> None:
    if size < 2 or size & (size - 1) != 0:
        raise ValueError(f"{what} must be a power of two, got {size}")
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if size >> (levels - 1) < _FILTER_LEN:
        raise ValueError(
            f"{what} {size} supports at most {int(np.log2(size)) - 2} levels, got {levels}"
        )


def _analyze_level(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One analysis level along the last axis (circular convolve, keep evens)."""
    lo = np.zeros_like(v)
    hi = np.zeros_like(v)
    for k in range(_FILTER_LEN):
        shifted = np.roll(v, -k, axis=-1)
        lo += DB8_SCALING[k] * shifted
        hi += DB8_WAVELET[k] * shifted
    return lo[..., ::2], hi[..., ::2]


def _synthesize_level(approx: np.ndarray, detail: np.ndarray) -> np.ndarray:
    """Transpose of :func:`_analyze_level` along the last axis."""
    n = 2 * approx.shape[-1]
    up_lo = np.zeros(approx.shape[:-1] + (n,))
    up_lo[..., ::2] = approx
    up_hi = np.zeros_like(up_lo)
    up_hi[..., ::2] = detail
    out = np.zeros_like(up_lo)
    for k in range(_FILTER_LEN):
        out += DB8_SCALING[k] * np.roll(up_lo, k, axis=-1)
        out += DB8_WAVELET[k] * np.roll(up_hi, k, axis=-1)
    return out


class WaveletTransform1D:
    """Multi-level orthonormal wavelet transform of power-of-two vectors.

    Coefficient layout: coarsest approximation first, then details from
    coarsest to finest, concatenated into one vector of the input length.
    """

    def __init__(self, length: int, levels: int | None = None):
        self.length = int(length)
        self.levels = default_levels(self.length) if levels is None else int(levels)
        _check_size(self.length, self.levels, "length")
        self.size = self.length

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.length,):
            raise ValueError(f"expected vector of length {self.length}, got shape {x.shape}")
        details = []
        v = x
        for _ in range(self.levels):
            v, d = _analyze_level(v)
            details.append(d)
        return np.concatenate([v] + details[::-1])

    def inverse(self, coeffs) -> np.ndarray:
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (self.length,):
            raise ValueError(f"expected coefficients of length {self.length}, got shape {c.shape}")
        n_coarse = self.length >> self.levels
        v = c[:n_coarse]
        offset = n_coarse
        for _ in range(self.levels):
            d = c[offset:offset + v.shape[0]]
            v = _synthesize_level(v, d)
            offset += d.shape[0]
        return v


class WaveletTransform2D:
    """Separable multi-level orthonormal wavelet transform of square images.

    Coefficients are kept in the standard in-place layout: at each level the
    current top-left block is replaced by its four subbands, approximation in
    the top-left quadrant.  Vectors in and out are row-major flattenings of
    the side-by-side grid, so ``size == side * side``.
    """

    def __init__(self, side: int, levels: int | None = None):
        self.side = int(side)
        self.levels = default_levels(self.side) if levels is None else int(levels)
        _check_size(self.side, self.levels, "side")
        self.size = self.side * self.side

    def _as_image(self, x, name) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.shape == (self.size,):
            return arr.reshape(self.side, self.side).copy()
        if arr.shape == (self.side, self.side):
            return arr.copy()
        raise ValueError(
            f"{name} must have shape ({self.size},) or ({self.side}, {self.side}), got {arr.shape}"
        )

    def forward(self, x) -> np.ndarray:
        img = self._as_image(x, "x")
        s = self.side
        for _ in range(self.levels):
            block = img[:s, :s]
            lo, hi = _analyze_level(block)                 # along rows
            mixed = np.concatenate([lo, hi], axis=1)
            lo, hi = _analyze_level(mixed.T)               # along columns
            img[:s, :s] = np.concatenate([lo, hi], axis=1).T
            s //= 2
        return img.ravel()

    def inverse(self, coeffs) -> np.ndarray:
        img = self._as_image(coeffs, "coeffs")
        s = self.side >> self.levels
        for _ in range(self.levels):
            s *= 2
            half = s // 2
            block = img[:s, :s]
            # undo the column step: top half rows are approximations
            mixed = _synthesize_level(block[:half, :].T, block[half:, :].T).T
            # undo the row step: left half columns are approximations
            img[:s, :s] = _synthesize_level(mixed[:, :half], mixed[:, half:])
        return img.ravel()
