"""Measurement operators with exact adjoints.

Every operator maps R^m -> R^n through ``forward`` and exposes the transpose
through ``adjoint``; matrix-free variants (trigonometric rows, gradients,
compositions with orthonormal transforms) never materialize an n-by-m array
unless ``materialize`` is called explicitly.  Adjoint exactness -- the dot
test <A x, u> == <x, A^T u> to near machine precision -- is the load-bearing
contract here: the interior-point solvers trust it unconditionally.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"SPROP1"


def _as_vector(x, size: int, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != size:
        raise ValueError(f"{name} must be a vector of length {size}, got shape {x.shape}")
    return x


def check_index_set(indices, m: int) -> np.ndarray:
    """Validate a column index set: nonempty, strictly increasing, within [0, m)."""
    t = np.asarray(indices, dtype=np.int64)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("index set must be a nonempty 1-d integer array")
    if np.any(t < 0) or np.any(t >= m):
        raise ValueError(f"index set entries must lie in [0, {m})")
    if np.any(np.diff(t) <= 0):
        raise ValueError("index set entries must be strictly increasing")
    return t


class MeasurementOperator:
    """Abstract linear map R^m -> R^n with an exact adjoint.

    Attributes
    ----------
    n : int
        Number of rows (measurements).
    m : int
        Number of columns (signal length).
    """

    n: int
    m: int

    def forward(self, x) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, u) -> np.ndarray:
        raise NotImplementedError

    def column(self, j: int) -> np.ndarray:
        """Column j as a dense vector, computed by a unit-vector probe."""
        if not 0 <= j < self.m:
            raise ValueError(f"column index {j} out of range [0, {self.m})")
        e = np.zeros(self.m)
        e[j] = 1.0
        return self.forward(e)

    def materialize(self) -> np.ndarray:
        """Dense (n, m) array equal to this operator (unit-vector probes)."""
        out = np.empty((self.n, self.m))
        e = np.zeros(self.m)
        for j in range(self.m):
            e[j] = 1.0
            out[:, j] = self.forward(e)
            e[j] = 0.0
        return out

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"{type(self).__name__}(n={self.n}, m={self.m})"


class DenseOperator(MeasurementOperator):
    """Operator backed by an explicit (n, m) array."""

    def __init__(self, matrix):
        mat = np.asarray(matrix, dtype=float)
        if mat.ndim != 2:
            raise ValueError(f"matrix must be 2-d, got shape {mat.shape}")
        self.matrix = mat
        self.n, self.m = mat.shape

    def forward(self, x):
        return self.matrix @ _as_vector(x, self.m)

    def adjoint(self, u):
        return self.matrix.T @ _as_vector(u, self.n, "u")

    def column(self, j):
        if not 0 <= j < self.m:
            raise ValueError(f"column index {j} out of range [0, {self.m})")
        return self.matrix[:, j].copy()

    def materialize(self):
        return self.matrix.copy()


# ---------------------------------------------------------------------------
# Real trigonometric (DFT-like) orthonormal transform
#
# Row enumeration for even m:
#   row 0            : constant row, entries 1/sqrt(m)
#   rows 1 .. m/2-1  : sqrt(2/m) * cos(2 pi k t / m), k = row
#   row m/2          : alternating row, entries (-1)^t / sqrt(m)
#   rows m/2+1 .. m-1: sqrt(2/m) * sin(2 pi k t / m), k = row - m/2
# For odd m the alternating row is absent and the sine rows start at
# (m+1)/2 with k = row - (m-1)/2.  The resulting m-by-m matrix is real
# orthonormal; both directions are computed with a single real FFT.
# ---------------------------------------------------------------------------

def real_fourier_forward(x) -> np.ndarray:
    """Apply the orthonormal real trigonometric transform to ``x``."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    spec = np.fft.rfft(x)
    out = np.empty(m)
    rt_m = np.sqrt(m)
    amp = np.sqrt(2.0 / m)
    out[0] = spec[0].real / rt_m
    if m % 2 == 0:
        half = m // 2
        out[1:half] = amp * spec[1:half].real
        out[half] = spec[half].real / rt_m
        out[half + 1:] = -amp * spec[1:half].imag
    else:
        k = (m - 1) // 2
        out[1:k + 1] = amp * spec[1:k + 1].real
        out[k + 1:] = -amp * spec[1:k + 1].imag
    return out


def real_fourier_inverse(coeffs) -> np.ndarray:
    """Invert :func:`real_fourier_forward` (equals its transpose)."""
    c = np.asarray(coeffs, dtype=float)
    m = c.shape[0]
    rt_m = np.sqrt(m)
    amp = np.sqrt(m / 2.0)
    spec = np.zeros(m // 2 + 1, dtype=complex)
    spec[0] = c[0] * rt_m
    if m % 2 == 0:
        half = m // 2
        spec[1:half] = amp * (c[1:half] - 1j * c[half + 1:])
        spec[half] = c[half] * rt_m
    else:
        k = (m - 1) // 2
        spec[1:k + 1] = amp * (c[1:k + 1] - 1j * c[k + 1:])
    return np.fft.irfft(spec, n=m)


def real_trig_row(m: int, row: int) -> np.ndarray:
    """Closed-form row ``row`` of the m-point real trigonometric basis."""
    if not 0 <= row < m:
        raise ValueError(f"row index {row} out of range [0, {m})")
    t = np.arange(m)
    amp = np.sqrt(2.0 / m)
    if row == 0:
        return np.full(m, 1.0 / np.sqrt(m))
    if m % 2 == 0:
        half = m // 2
        if row == half:
            return np.where(t % 2 == 0, 1.0, -1.0) / np.sqrt(m)
        if row < half:
            return amp * np.cos(2.0 * np.pi * row * t / m)
        return amp * np.sin(2.0 * np.pi * (row - half) * t / m)
    k = (m - 1) // 2
    if row <= k:
        return amp * np.cos(2.0 * np.pi * row * t / m)
    return amp * np.sin(2.0 * np.pi * (row - k) * t / m)


def real_trig_basis(m: int) -> np.ndarray:
    """Dense m-by-m real trigonometric orthonormal matrix."""
    return np.vstack([real_trig_row(m, r) for r in range(m)])


class PartialFourierOperator(MeasurementOperator):
    """Selected rows of the real trigonometric basis, optionally column-scaled.

    Parameters
    ----------
    m : int
        Signal length.
    rows : array_like
        Strictly increasing row indices into the trigonometric basis.
    column_scale : array_like, optional
        Per-column multiplier applied to the input before the transform
        (used for column normalization).
    """

    def __init__(self, m: int, rows, column_scale=None):
        self.m = int(m)
        self.rows = check_index_set(rows, self.m)
        self.n = self.rows.shape[0]
        if column_scale is None:
            self.column_scale = None
        else:
            self.column_scale = _as_vector(column_scale, self.m, "column_scale").copy()

    def _scale_in(self, x):
        return x if self.column_scale is None else x * self.column_scale

    def forward(self, x):
        x = _as_vector(x, self.m)
        return real_fourier_forward(self._scale_in(x))[self.rows]

    def adjoint(self, u):
        u = _as_vector(u, self.n, "u")
        c = np.zeros(self.m)
        c[self.rows] = u
        return self._scale_in(real_fourier_inverse(c))


class ScrambledFourierOperator(PartialFourierOperator):
    """Partial trigonometric rows composed with a random column permutation.

    Column ``j`` of this operator is column ``perm[j]`` of the plain
    partial-Fourier operator on the same rows.  With the identity
    permutation the two coincide.
    """

    def __init__(self, m: int, rows, perm, column_scale=None):
        super().__init__(m, rows, column_scale=column_scale)
        perm = np.asarray(perm, dtype=np.int64)
        if perm.shape != (self.m,) or np.any(np.sort(perm) != np.arange(self.m)):
            raise ValueError(f"perm must be a permutation of arange({self.m})")
        self.perm = perm.copy()

    def forward(self, x):
        x = _as_vector(x, self.m)
        w = np.zeros(self.m)
        w[self.perm] = self._scale_in(x)
        return real_fourier_forward(w)[self.rows]

    def adjoint(self, u):
        u = _as_vector(u, self.n, "u")
        c = np.zeros(self.m)
        c[self.rows] = u
        return self._scale_in(real_fourier_inverse(c)[self.perm])


# ---------------------------------------------------------------------------
# Discrete gradient on an h-by-w grid
# ---------------------------------------------------------------------------

def grad_rows(img: np.ndarray) -> np.ndarray:
    """Forward difference along rows (next row minus current), zero on the last row."""
    out = np.zeros_like(img)
    out[:-1, :] = img[1:, :] - img[:-1, :]
    return out


def grad_cols(img: np.ndarray) -> np.ndarray:
    """Forward difference along columns, zero on the last column."""
    out = np.zeros_like(img)
    out[:, :-1] = img[:, 1:] - img[:, :-1]
    return out


def grad_rows_adjoint(p: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`grad_rows` (values on the last row are ignored)."""
    out = np.zeros_like(p)
    out[1:, :] += p[:-1, :]
    out[:-1, :] -= p[:-1, :]
    return out


def grad_cols_adjoint(q: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`grad_cols` (values on the last column are ignored)."""
    out = np.zeros_like(q)
    out[:, 1:] += q[:, :-1]
    out[:, :-1] -= q[:, :-1]
    return out


class Gradient2DOperator(MeasurementOperator):
    """Per-pixel forward-difference pairs on an h-by-w grid.

    Input is the row-major flattening of the grid (length h*w); output
    interleaves, per pixel in row-major order, the row difference followed
    by the column difference (length 2*h*w).  Differences across the last
    row/column are zero.
    """

    def __init__(self, height: int, width: int):
        if height < 1 or width < 1:
            raise ValueError("grid dimensions must be positive")
        self.height = int(height)
        self.width = int(width)
        self.m = self.height * self.width
        self.n = 2 * self.m

    def forward(self, x):
        img = _as_vector(x, self.m).reshape(self.height, self.width)
        out = np.empty((self.m, 2))
        out[:, 0] = grad_rows(img).ravel()
        out[:, 1] = grad_cols(img).ravel()
        return out.ravel()

    def adjoint(self, u):
        u = _as_vector(u, self.n, "u").reshape(self.m, 2)
        p = u[:, 0].reshape(self.height, self.width)
        q = u[:, 1].reshape(self.height, self.width)
        return (grad_rows_adjoint(p) + grad_cols_adjoint(q)).ravel()


# ---------------------------------------------------------------------------
# Orthonormal transforms and composition
# ---------------------------------------------------------------------------

class IdentityTransform:
    """Trivial orthonormal transform (coefficients equal the signal)."""

    def __init__(self, size: int):
        self.size = int(size)

    def forward(self, x):
        return _as_vector(x, self.size).copy()

    def inverse(self, coeffs):
        return _as_vector(coeffs, self.size, "coeffs").copy()


class DenseTransform:
    """Orthonormal transform given by an explicit matrix of analysis rows."""

    def __init__(self, matrix):
        mat = np.asarray(matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("transform matrix must be square")
        self.matrix = mat
        self.size = mat.shape[0]

    def forward(self, x):
        return self.matrix @ _as_vector(x, self.size)

    def inverse(self, coeffs):
        return self.matrix.T @ _as_vector(coeffs, self.size, "coeffs")


class RealFourierTransform:
    """The orthonormal real trigonometric transform as a transform object."""

    def __init__(self, size: int):
        self.size = int(size)

    def forward(self, x):
        return real_fourier_forward(_as_vector(x, self.size))

    def inverse(self, coeffs):
        return real_fourier_inverse(_as_vector(coeffs, self.size, "coeffs"))


def check_orthonormal_transform(transform, tol: float = 1e-10) -> None:
    rng = np.random.Generator(np.random.Philox(key=0x5452414E53464F52))
    for _ in range(2):
        x = rng.standard_normal(transform.size)
        back = transform.inverse(transform.forward(x))
        if np.linalg.norm(back - x) > tol * max(1.0, np.linalg.norm(x)):
            raise ValueError("transform failed the orthonormal round-trip probe")


class ComposedOperator(MeasurementOperator):
    """Measurement operator applied after an orthonormal synthesis.

    ``forward(coeffs) = outer.forward(transform.inverse(coeffs))`` -- the
    operator seen by a solver working in the transform's coefficient domain.
    """

    def __init__(self, outer: MeasurementOperator, transform):
        if outer.m != transform.size:
            raise ValueError(
                f"outer operator has {outer.m} columns but transform size is {transform.size}"
            )
        check_orthonormal_transform(transform)
        self.outer = outer
        self.transform = transform
        self.n = outer.n
        self.m = transform.size

    def forward(self, x):
        return self.outer.forward(self.transform.inverse(_as_vector(x, self.m)))

    def adjoint(self, u):
        return self.transform.forward(self.outer.adjoint(_as_vector(u, self.n, "u")))


def compose(outer: MeasurementOperator, transform) -> ComposedOperator:
    """Compose a measurement operator with an orthonormal synthesis step."""
    return ComposedOperator(outer, transform)


def restrict_columns(op: MeasurementOperator, indices) -> DenseOperator:
    """Dense operator made of the selected columns of ``op`` (probe per column)."""
    t = check_index_set(indices, op.m)
    cols = np.empty((op.n, t.shape[0]))
    for out_j, j in enumerate(t):
        cols[:, out_j] = op.column(int(j))
    return DenseOperator(cols)


# ---------------------------------------------------------------------------
# Dense serialization: magic "SPROP1", u32 n, u32 m, then n*m little-endian
# float64 values in row-major order.
# ---------------------------------------------------------------------------

def save_dense(op: MeasurementOperator, path) -> None:
    """Write the dense form of ``op`` to ``path`` in the binary format above."""
    mat = op.materialize()
    n, m = mat.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", n, m))
        fh.write(np.ascontiguousarray(mat, dtype="<f8").tobytes())


def load_dense(path) -> DenseOperator:
    """Read an operator written by :func:`save_dense`."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}; not a dense operator file")
        n, m = struct.unpack("<II", fh.read(8))
        data = fh.read(8 * n * m)
        if len(data) != 8 * n * m:
            raise ValueError("truncated dense operator file")
        mat = np.frombuffer(data, dtype="<f8").reshape(n, m).astype(float)
    return DenseOperator(mat)
