"""Seeded measurement-ensemble generators and coherence measures.

Five ensemble kinds are supported:

``gaussian_iid``
    Dense entries N(0, 1/n); column ``j`` is drawn from substream ``seed ^ j``
    so the operator is reproducible column by column.
``binary_pm``
    Dense entries +-1/sqrt(n), per-column substreams as above.
``partial_fourier``
    n rows of the real trigonometric basis, selected by a seeded
    Fisher-Yates shuffle of [0, m) (first n positions, sorted).
``scrambled_fourier``
    Same rows composed with a uniform random permutation of the columns.
``row_orthogonal``
    n rows of an m-by-m orthonormal matrix (a seeded QR draw by default, or
    a caller-supplied basis).

For subsampled ensembles the frequency/row sets are drawn without
replacement.  ``normalize_columns=True`` rescales every column to unit
l2 norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linops
from .rng import fisher_yates, substream

_KINDS = ("gaussian_iid", "binary_pm", "partial_fourier", "scrambled_fourier", "row_orthogonal")

# Stream tags for draws that are not per-column (XOR-ed into the seed).
_ROWS_STREAM = 0x526F7773 << 20
_PERM_STREAM = 0x5065726D << 20
_BASIS_STREAM = 0x42617369 << 20

# Dense kinds refuse to allocate beyond this many entries.
_DENSE_ENTRY_CAP = 1 << 27


@dataclass(frozen=True)
class EnsembleSpec:
    """Recipe for a measurement operator: kind, shape, seed, normalization."""

    kind: str
    n: int
    m: int
    seed: int
    normalize_columns: bool = False


def _validate(spec: EnsembleSpec) -> None:
    if spec.kind not in _KINDS:
        raise ValueError(f"unknown ensemble kind {spec.kind!r}; expected one of {_KINDS}")
    if spec.n < 1 or spec.m < 1:
        raise ValueError(f"dimensions must be positive, got n={spec.n}, m={spec.m}")
    if spec.kind != "gaussian_iid" and spec.kind != "binary_pm" and spec.n > spec.m:
        raise ValueError(f"subsampled ensembles need n <= m, got n={spec.n}, m={spec.m}")
    if spec.kind in ("gaussian_iid", "binary_pm", "row_orthogonal"):
        if spec.n * spec.m > _DENSE_ENTRY_CAP:
            raise ValueError(
                f"dense ensemble of {spec.n}x{spec.m} entries exceeds the allocation cap"
            )


def _dense_columns(spec: EnsembleSpec) -> np.ndarray:
    mat = np.empty((spec.n, spec.m))
    scale = 1.0 / np.sqrt(spec.n)
    for j in range(spec.m):
        rng = substream(spec.seed, j)
        if spec.kind == "gaussian_iid":
            mat[:, j] = rng.normal(0.0, scale, spec.n)
        else:
            mat[:, j] = (2.0 * rng.integers(0, 2, spec.n) - 1.0) * scale
    return mat


def _select_rows(spec: EnsembleSpec) -> np.ndarray:
    shuffled = fisher_yates(substream(spec.seed, _ROWS_STREAM), spec.m)
    return np.sort(shuffled[: spec.n])


def _trig_column_norms(m: int, rows: np.ndarray) -> np.ndarray:
    sq = np.zeros(m)
    for r in rows:
        sq += linops.real_trig_row(m, int(r)) ** 2
    return np.sqrt(sq)


def generate(spec: EnsembleSpec, basis=None) -> linops.MeasurementOperator:
    """Instantiate the operator described by ``spec``.

    ``basis`` optionally supplies the m-by-m orthonormal matrix for the
    ``row_orthogonal`` kind.  Identical specs produce bit-identical
    operators; any other ``kind`` raises ValueError.
    """
    _validate(spec)
    if spec.kind in ("gaussian_iid", "binary_pm"):
        mat = _dense_columns(spec)
        if spec.normalize_columns:
            mat /= np.linalg.norm(mat, axis=0)
        return linops.DenseOperator(mat)

    rows = _select_rows(spec)
    if spec.kind == "partial_fourier":
        scale = None
        if spec.normalize_columns:
            scale = 1.0 / _trig_column_norms(spec.m, rows)
        return linops.PartialFourierOperator(spec.m, rows, column_scale=scale)
    if spec.kind == "scrambled_fourier":
        perm = fisher_yates(substream(spec.seed, _PERM_STREAM), spec.m)
        scale = None
        if spec.normalize_columns:
            scale = 1.0 / _trig_column_norms(spec.m, rows)[perm]
        return linops.ScrambledFourierOperator(spec.m, rows, perm, column_scale=scale)

    # row_orthogonal
    if basis is None:
        gauss = substream(spec.seed, _BASIS_STREAM).standard_normal((spec.m, spec.m))
        q, r = np.linalg.qr(gauss)
        basis = q * np.sign(np.diag(r))
    else:
        basis = np.asarray(basis, dtype=float)
        if basis.shape != (spec.m, spec.m):
            raise ValueError(f"basis must be {spec.m}x{spec.m}, got {basis.shape}")
        dev = np.abs(basis.T @ basis - np.eye(spec.m)).max()
        if dev > 1e-8:
            raise ValueError(f"basis is not orthonormal (max deviation {dev:.3e})")
    mat = basis[rows, :].copy()
    if spec.normalize_columns:
        mat /= np.linalg.norm(mat, axis=0)
    return linops.DenseOperator(mat)


def coherence(basis) -> float:
    """sqrt(m) times the largest-magnitude entry of an orthonormal matrix.

    Always lies in [1, sqrt(m)]: 1 for perfectly flat bases, sqrt(m) when
    some basis vector aligns with a coordinate axis.
    """
    u = np.asarray(basis, dtype=float)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"basis must be square, got shape {u.shape}")
    m = u.shape[0]
    dev = np.abs(u.T @ u - np.eye(m)).max()
    if dev > 1e-8:
        raise ValueError(f"basis is not orthonormal (max deviation {dev:.3e})")
    return float(np.sqrt(m) * np.abs(u).max())


def mutual_coherence(phi, psi) -> float:
    """sqrt(m) times the largest inner product between rows of two bases.

    ``phi`` and ``psi`` are orthonormal transform objects (``forward`` /
    ``inverse`` / ``size``); each inner product is computed by probing a
    ``psi`` basis vector with ``phi`` analysis, so neither basis is
    materialized.
    """
    if phi.size != psi.size:
        raise ValueError(f"transform sizes differ: {phi.size} vs {psi.size}")
    m = phi.size
    linops.check_orthonormal_transform(phi, tol=1e-8)
    linops.check_orthonormal_transform(psi, tol=1e-8)
    e = np.zeros(m)
    best = 0.0
    for j in range(m):
        e[j] = 1.0
        best = max(best, float(np.abs(phi.forward(psi.inverse(e))).max()))
        e[j] = 0.0
    return float(np.sqrt(m) * best)
