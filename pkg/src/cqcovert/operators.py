"""Finite-dimensional Hermitian operator algebra.

Construction and validation of density operators, tensor products, partial
traces, spectral decompositions, matrix functions on supports, spectral
projections, and pinching.  All operations are pure functions over immutable
inputs; every state-like object is safe to share across threads.

Conventions
-----------
* Support cutoff: eigenvalues at or below ``rank_tolerance`` (default 1e-10)
  are treated as exactly zero.  Matrix logarithms and negative powers follow
  the pseudo-function convention: they act on the support and annihilate the
  kernel.
* Tensor products order subsystems left-to-right as channel uses 1..n.
* Kronecker products are capped at dimension ``CQCOVERT_DIM_CAP``
  (default 16384) so exact simulation stays in memory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionCapExceeded,
    DimensionMismatch,
    NotHermitian,
    NotPSD,
    TraceNotOne,
)

DEFAULT_RANK_TOL = 1e-10
HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
DEFAULT_DIM_CAP = 16384
ZERO_EIGENVALUE_TOL = 1e-12  # tie window for spectral sign projections
CLUSTER_TOL = 1e-9           # relative merge window for pinching eigenspaces


def dimension_cap() -> int:
    """Active Kronecker-product dimension cap (env ``CQCOVERT_DIM_CAP`` overrides)."""
    return int(os.environ.get("CQCOVERT_DIM_CAP", DEFAULT_DIM_CAP))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """Return (A + A†)/2."""
    return (a + a.conj().T) / 2


def require_hermitian(a: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Validate hermiticity of a square matrix and return its Hermitian part.

    Raises
    ------
    NotHermitian
        If the max absolute deviation |A - A†| exceeds ``tol``.
    DimensionMismatch
        If the input is not a square 2-d array.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if dev > tol:
        raise NotHermitian(f"hermiticity deviation {dev:.3e} exceeds {tol:.0e}")
    return hermitian_part(a)


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition with eigenvalues sorted in descending order.

    ``eigenvectors[:, i]`` is the unit eigenvector for ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def spectral_decomposition(a: np.ndarray) -> Spectrum:
    """Eigendecompose a Hermitian matrix, eigenvalues descending."""
    w, v = np.linalg.eigh(hermitian_part(np.asarray(a, dtype=complex)))
    order = np.argsort(w)[::-1]
    return Spectrum(eigenvalues=w[order], eigenvectors=v[:, order])


@dataclass(frozen=True)
class DensityOperator:
    """Validated unit-trace PSD Hermitian matrix.

    Use :func:`make_density` to construct; direct instantiation skips
    validation.  The matrix buffer is frozen after construction.
    """

    matrix: np.ndarray
    rank_tolerance: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectrum(self) -> Spectrum:
        return spectral_decomposition(self.matrix)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    @property
    def rank(self) -> int:
        return int(np.sum(self.spectrum.eigenvalues > self.rank_tolerance))

    def to_json(self) -> dict:
        return matrix_to_json(self.matrix)


def make_density(entries: np.ndarray, rank_tolerance: float = DEFAULT_RANK_TOL) -> DensityOperator:
    """Validate a complex matrix as a density operator.

    Parameters
    ----------
    entries
        Square complex matrix.
    rank_tolerance
        Eigenvalue cutoff below which the support is truncated.

    Raises
    ------
    NotHermitian, NotPSD, TraceNotOne
        When the corresponding invariant fails (tolerances 1e-12 / -1e-10 /
        1e-10 respectively).
    """
    m = require_hermitian(entries)
    w = np.linalg.eigvalsh(m)
    if w.min() < -PSD_TOL:
        raise NotPSD(f"minimum eigenvalue {w.min():.3e} below -{PSD_TOL:.0e}")
    tr = float(np.trace(m).real)
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceNotOne(f"trace {tr!r} deviates from 1 by more than {TRACE_TOL:.0e}")
    return DensityOperator(matrix=m, rank_tolerance=float(rank_tolerance))


def tensor(a: DensityOperator, b: DensityOperator) -> DensityOperator:
    """Kronecker product of two states; left factor is the earlier channel use."""
    out_dim = a.dim * b.dim
    cap = dimension_cap()
    if out_dim > cap:
        raise DimensionCapExceeded(f"product dimension {out_dim} exceeds cap {cap}")
    return DensityOperator(np.kron(a.matrix, b.matrix),
                           rank_tolerance=max(a.rank_tolerance, b.rank_tolerance))


def kron_power(a: DensityOperator, n: int) -> DensityOperator:
    """n-fold Kronecker power of a state (n >= 1)."""
    if n < 1:
        raise DimensionMismatch(f"kron power requires n >= 1, got {n}")
    out_dim = a.dim ** n
    cap = dimension_cap()
    if out_dim > cap:
        raise DimensionCapExceeded(f"dimension {a.dim}^{n} = {out_dim} exceeds cap {cap}")
    m = a.matrix
    for _ in range(n - 1):
        m = np.kron(m, a.matrix)
    return DensityOperator(m, rank_tolerance=a.rank_tolerance)


def partial_trace(joint: DensityOperator, dims: tuple[int, int], keep: str) -> DensityOperator:
    """Marginal of a bipartite state.

    Parameters
    ----------
    joint
        State on a ``dims[0] * dims[1]``-dimensional space, subsystem A first.
    dims
        ``(dA, dB)``.
    keep
        ``"A"`` or ``"B"``.
    """
    d_a, d_b = dims
    if joint.dim != d_a * d_b:
        raise DimensionMismatch(f"joint dim {joint.dim} != {d_a} * {d_b}")
    if keep not in ("A", "B"):
        raise DimensionMismatch(f"keep must be 'A' or 'B', got {keep!r}")
    t = joint.matrix.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        m = np.trace(t, axis1=1, axis2=3)
    else:
        m = np.trace(t, axis1=0, axis2=2)
    return DensityOperator(hermitian_part(m), rank_tolerance=joint.rank_tolerance)


def support_projector(a: DensityOperator) -> np.ndarray:
    """Orthogonal projector onto the span of eigenvectors above ``rank_tolerance``."""
    spec = a.spectrum
    cols = spec.eigenvectors[:, spec.eigenvalues > a.rank_tolerance]
    return cols @ cols.conj().T


def matrix_function(a: np.ndarray, f: Callable[[np.ndarray], np.ndarray],
                    rank_tolerance: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Apply ``f`` to the eigenvalues of a Hermitian matrix on its support.

    Eigenvalues at or below ``rank_tolerance`` map to 0 (pseudo-function
    convention), which absorbs the singularities of logs and negative powers.
    """
    spec = spectral_decomposition(a)
    w = spec.eigenvalues
    fw = np.zeros_like(w)
    on_support = w > rank_tolerance
    if np.any(on_support):
        fw[on_support] = f(w[on_support])
    v = spec.eigenvectors
    return hermitian_part((v * fw) @ v.conj().T)


def matrix_log(a: np.ndarray, rank_tolerance: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Pseudo-logarithm: log on the support, zero on the kernel."""
    return matrix_function(a, np.log, rank_tolerance)


def matrix_power(a: np.ndarray, c: float, rank_tolerance: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Pseudo-power ``A^c`` (negative and fractional c act on the support only)."""
    return matrix_function(a, lambda w: w ** c, rank_tolerance)


def matrix_pinv(a: np.ndarray, rank_tolerance: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose inverse of a Hermitian PSD matrix via its spectrum."""
    return matrix_power(a, -1.0, rank_tolerance)


def matrix_inv_sqrt(a: np.ndarray, rank_tolerance: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Pseudo inverse square root ``A^{-1/2}`` on the support."""
    return matrix_power(a, -0.5, rank_tolerance)


def spectral_projection_nonneg(a: np.ndarray, strict: bool = False,
                               zero_tol: float = ZERO_EIGENVALUE_TOL) -> np.ndarray:
    """Projector onto the non-negative (or strictly positive) eigenspaces.

    Eigenvalues within ``zero_tol`` of zero count as zero: they are included
    in the non-strict projector and excluded from the strict one.  The
    complement of the non-strict projector is the strictly-negative
    projector, and vice versa.
    """
    spec = spectral_decomposition(a)
    w = spec.eigenvalues
    mask = w > zero_tol if strict else w >= -zero_tol
    cols = spec.eigenvectors[:, mask]
    return cols @ cols.conj().T


def eigenvalue_clusters(eigenvalues: np.ndarray, cluster_tol: float = CLUSTER_TOL) -> np.ndarray:
    """Group near-degenerate eigenvalues into clusters.

    Adjacent sorted eigenvalues merge when their gap is at most
    ``cluster_tol * max(1, |w_i|, |w_j|)``.  Returns an integer cluster id
    per entry of ``eigenvalues`` (in the given order).
    """
    w = np.asarray(eigenvalues, dtype=float)
    order = np.argsort(w)
    ws = w[order]
    ids_sorted = np.zeros(len(ws), dtype=int)
    current = 0
    for i in range(1, len(ws)):
        scale = max(1.0, abs(ws[i - 1]), abs(ws[i]))
        if ws[i] - ws[i - 1] > cluster_tol * scale:
            current += 1
        ids_sorted[i] = current
    ids = np.empty(len(ws), dtype=int)
    ids[order] = ids_sorted
    return ids


def pinching(a: np.ndarray, b: np.ndarray, cluster_tol: float = CLUSTER_TOL) -> np.ndarray:
    """Dephase ``b`` in the eigenbasis blocks of ``a``.

    Computes the sum of ``E_i b E_i`` over the projectors ``E_i`` onto the
    distinct-eigenvalue spaces of ``a``; eigenvalues within ``cluster_tol``
    relative distance are merged into one eigenspace.  The result commutes
    with ``a`` and preserves traces against every operator commuting with
    ``a``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch {a.shape} vs {b.shape}")
    spec = spectral_decomposition(a)
    ids = eigenvalue_clusters(spec.eigenvalues, cluster_tol)
    v = spec.eigenvectors
    rotated = v.conj().T @ b @ v
    mask = ids[:, None] == ids[None, :]
    return v @ (rotated * mask) @ v.conj().T


# --- JSON wire format: {"dim": d, "re": [[...]], "im": [[...]]} ---

def matrix_to_json(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=complex)
    return {
        "dim": int(a.shape[0]),
        "re": a.real.tolist(),
        "im": a.imag.tolist(),
    }


def matrix_from_json(doc: dict) -> np.ndarray:
    try:
        dim = int(doc["dim"])
        re = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DimensionMismatch(f"malformed matrix document: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise DimensionMismatch(
            f"matrix document shapes {re.shape}/{im.shape} do not match dim {dim}")
    return re + 1j * im


# --- random generators for sweeps and tests ---

def ginibre_state(dim: int, rng: np.random.Generator, rank: int | None = None,
                  rank_tolerance: float = DEFAULT_RANK_TOL) -> DensityOperator:
    """Random density operator G G† / Tr from a complex Ginibre block."""
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    m = g @ g.conj().T
    m = m / np.trace(m).real
    return DensityOperator(hermitian_part(m), rank_tolerance=rank_tolerance)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return hermitian_part(g) * scale


def diagonal_state(probs: Sequence[float],
                   rank_tolerance: float = DEFAULT_RANK_TOL) -> DensityOperator:
    """Density operator with the given probability vector on the diagonal."""
    return make_density(np.diag(np.asarray(probs, dtype=complex)), rank_tolerance)
