"""Distance and divergence functionals between quantum states.

All divergences are returned in nats; unit conversion is a display concern.
An infinite divergence (support-containment failure) is reported as the
``math.inf`` sentinel rather than an exception so that scenario
classification can branch on it.  Small negative values inside the numerical
noise window ``(-1e-9, 0)`` are clipped to zero.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch, SupportViolation
from .operators import (
    DensityOperator,
    hermitian_part,
    matrix_log,
    matrix_power,
    support_projector,
)

SUPPORT_TOL = 1e-9   # Tr{(I - P_sigma) rho} below this declares containment
NEG_CLIP = 1e-9      # negative values above -NEG_CLIP clip to 0


def _check_dims(a: DensityOperator, b: DensityOperator) -> None:
    if a.dim != b.dim:
        raise DimensionMismatch(f"state dimensions differ: {a.dim} vs {b.dim}")


def _clip(value: float) -> float:
    if -NEG_CLIP < value < 0.0:
        return 0.0
    return value


def support_leak(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Probability mass of ``rho`` outside the support of ``sigma``."""
    _check_dims(rho, sigma)
    p = support_projector(sigma)
    return max(0.0, 1.0 - float(np.trace(p @ rho.matrix).real))


def supports_contained(rho: DensityOperator, sigma: DensityOperator,
                       tol: float = SUPPORT_TOL) -> bool:
    """Numerical proxy for supp(rho) ⊆ supp(sigma)."""
    return support_leak(rho, sigma) <= tol


def von_neumann_entropy(rho: DensityOperator) -> float:
    """Entropy -Tr{rho log rho} in nats."""
    w = rho.eigenvalues
    w = w[w > rho.rank_tolerance]
    return float(-np.sum(w * np.log(w)))


def relative_entropy(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Quantum relative entropy Tr{rho (log rho - log sigma)} in nats.

    Finite iff supp(rho) ⊆ supp(sigma); otherwise returns ``math.inf``.
    Both logarithms follow the pseudo-function-on-support convention.
    """
    _check_dims(rho, sigma)
    if not supports_contained(rho, sigma):
        return math.inf
    spec_s = sigma.spectrum
    on = spec_s.eigenvalues > sigma.rank_tolerance
    v = spec_s.eigenvectors[:, on]
    # <v_j| rho |v_j> weights for the cross term Tr{rho log sigma}
    weights = np.einsum("ij,ij->j", v.conj(), rho.matrix @ v).real
    cross = float(np.sum(weights * np.log(spec_s.eigenvalues[on])))
    return _clip(-von_neumann_entropy(rho) - cross)


def chi_squared(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Chi-squared divergence Tr{(rho - sigma)^2 sigma^{-1}}.

    ``sigma^{-1}`` is the pseudo-inverse on the support; returns ``math.inf``
    when supp(rho) is not contained in supp(sigma).
    """
    _check_dims(rho, sigma)
    if not supports_contained(rho, sigma):
        return math.inf
    delta = rho.matrix - sigma.matrix
    spec_s = sigma.spectrum
    on = spec_s.eigenvalues > sigma.rank_tolerance
    v = spec_s.eigenvectors[:, on]
    cols = delta @ v
    quad = np.sum(np.abs(cols) ** 2, axis=0) / spec_s.eigenvalues[on]
    return _clip(float(np.sum(quad)))


def trace_distance(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Trace norm of the difference, Tr|rho - sigma|, in [0, 2]."""
    _check_dims(rho, sigma)
    w = np.linalg.eigvalsh(rho.matrix - sigma.matrix)
    return float(np.sum(np.abs(w)))


def helstrom_error(rho_bar: DensityOperator, rho0: DensityOperator,
                   priors: tuple[float, float] = (0.5, 0.5)) -> float:
    """Minimum discrimination error between two states.

    For priors (p1, p0) on (rho_bar, rho0) the optimum over all two-outcome
    POVMs is ``(1 - ||p1 rho_bar - p0 rho0||_1) / 2``; with equal priors this
    is ``(1 - ||rho_bar - rho0||_1 / 2) / 2`` and lies in [0, 1/2].
    """
    _check_dims(rho_bar, rho0)
    p1, p0 = priors
    if p1 < 0 or p0 < 0 or abs(p1 + p0 - 1.0) > 1e-12:
        raise ValueError(f"priors must be a probability pair, got {priors}")
    w = np.linalg.eigvalsh(p1 * rho_bar.matrix - p0 * rho0.matrix)
    err = 0.5 * (1.0 - float(np.sum(np.abs(w))))
    return min(max(err, 0.0), 1.0)


def pinsker_gap(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Slack D(rho||sigma) - ||rho - sigma||_1^2 / 2 (both sides in nats).

    Non-negative up to numerical noise; infinite when D is infinite.
    """
    d = relative_entropy(rho, sigma)
    if math.isinf(d):
        return math.inf
    t = trace_distance(rho, sigma)
    return d - t * t / 2.0


def validate_distribution(probs, tol: float = 1e-12) -> np.ndarray:
    """Check a probability vector (nonnegative, sums to 1 within ``tol``)."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError(f"expected a 1-d probability vector, got shape {p.shape}")
    if p.min() < 0:
        raise ValueError(f"negative probability {p.min()!r}")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def holevo_information(probs, states: list[DensityOperator]) -> float:
    """Holevo information H(sum p_x s_x) - sum p_x H(s_x) of an ensemble, in nats."""
    p = validate_distribution(probs)
    if len(states) != p.size:
        raise DimensionMismatch(f"{p.size} probabilities for {len(states)} states")
    dim = states[0].dim
    for s in states:
        if s.dim != dim:
            raise DimensionMismatch("ensemble states have mixed dimensions")
    avg_matrix = sum(pi * s.matrix for pi, s in zip(p, states))
    avg = DensityOperator(hermitian_part(avg_matrix),
                          rank_tolerance=states[0].rank_tolerance)
    chi = von_neumann_entropy(avg) - sum(pi * von_neumann_entropy(s)
                                         for pi, s in zip(p, states))
    return max(0.0, chi) if chi > -NEG_CLIP else chi


def _require_contained(inner: DensityOperator, outer: DensityOperator, label: str) -> None:
    leak = support_leak(inner, outer)
    if leak > SUPPORT_TOL:
        raise SupportViolation(f"{label}: support leak {leak:.3e} exceeds {SUPPORT_TOL:.0e}")


def phi_functional(sigma1: DensityOperator, sigma0: DensityOperator,
                   r: float) -> tuple[float, float]:
    """Decoding-exponent functional and its analytic r-derivative.

    Returns ``(-log T(r), d/dr of that)`` where
    ``T(r) = Tr{sigma1 sigma0^{r/2} sigma1^{-r} sigma0^{r/2}}``, with all
    powers and logs taken on the respective supports.  The value vanishes at
    r = 0 and the derivative there equals the relative entropy
    D(sigma1||sigma0).

    Raises
    ------
    SupportViolation
        If supp(sigma1) is not contained in supp(sigma0).
    """
    _check_dims(sigma1, sigma0)
    _require_contained(sigma1, sigma0, "phi_functional")
    tol0, tol1 = sigma0.rank_tolerance, sigma1.rank_tolerance
    pow0_half = matrix_power(sigma0.matrix, r / 2.0, tol0)
    pow1_neg = matrix_power(sigma1.matrix, -r, tol1)
    log0 = matrix_log(sigma0.matrix, tol0)
    log1 = matrix_log(sigma1.matrix, tol1)
    x = pow0_half @ pow1_neg @ pow0_half
    t = float(np.trace(sigma1.matrix @ x).real)
    # d/dr sigma0^{r/2} = (log sigma0 / 2) sigma0^{r/2} on the support,
    # d/dr sigma1^{-r} = -(log sigma1) sigma1^{-r} on the support
    dx = 0.5 * (log0 @ x + x @ log0) - pow0_half @ log1 @ pow1_neg @ pow0_half
    dt = float(np.trace(sigma1.matrix @ dx).real)
    return -math.log(t), -dt / t


def psi_functional(rho1: DensityOperator, rho0: DensityOperator,
                   r: float) -> tuple[float, float]:
    """Covertness-exponent functional and its analytic r-derivative.

    Returns ``(log T(r), d/dr of that)`` where
    ``T(r) = Tr{rho1^{1+r} rho0^{-r}}`` under the pseudo-power convention.
    The value vanishes at r = 0 and the derivative there equals
    D(rho1||rho0); the derivative has the closed form
    ``Tr{rho0^{-r} rho1^{1+r} (log rho1 - log rho0)} / T(r)``.
    """
    _check_dims(rho1, rho0)
    _require_contained(rho1, rho0, "psi_functional")
    tol0, tol1 = rho0.rank_tolerance, rho1.rank_tolerance
    pow1 = matrix_power(rho1.matrix, 1.0 + r, tol1)
    pow0_neg = matrix_power(rho0.matrix, -r, tol0)
    log0 = matrix_log(rho0.matrix, tol0)
    log1 = matrix_log(rho1.matrix, tol1)
    t = float(np.trace(pow1 @ pow0_neg).real)
    num = float(np.trace(pow0_neg @ pow1 @ (log1 - log0)).real)
    return math.log(t), num / t


def overlap_trace(sigma0: DensityOperator, sigma1: DensityOperator) -> float:
    """Second-moment overlap Tr{sigma0^{-1} sigma1^2} (pseudo-inverse on support).

    Raises
    ------
    SupportViolation
        If supp(sigma1) is not contained in supp(sigma0).
    """
    _check_dims(sigma0, sigma1)
    _require_contained(sigma1, sigma0, "overlap_trace")
    spec = sigma0.spectrum
    on = spec.eigenvalues > sigma0.rank_tolerance
    v = spec.eigenvectors[:, on]
    cols = sigma1.matrix @ v
    return float(np.sum(np.sum(np.abs(cols) ** 2, axis=0) / spec.eigenvalues[on]))
