"""Closed-form scaling coefficients, input-distribution optimization, and
converse bounds.

The square-root-law coefficients are ratios of weighted relative entropies to
the square root of half the chi-squared divergence of the average
non-innocent adversary state.  All values are in nats; display conversion is
the CLI's concern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import (
    CqChannelPair,
    Povm,
    ScenarioClass,
    ScenarioReport,
    average_states,
    classify_scenario,
    induce_dmc,
    support_relations,
    SupportRelation,
)
from .divergences import (
    chi_squared,
    holevo_information,
    relative_entropy,
    supports_contained,
    validate_distribution,
)
from .errors import (
    AlphaOutOfRadius,
    SupportViolation,
    SupportViolationClassical,
    WrongRegime,
    ZeroChiSquared,
)
from .operators import (
    DensityOperator,
    hermitian_part,
    matrix_pinv,
    support_projector,
)

CLASSICAL_ZERO = 1e-12
CLASSICAL_LEAK_TOL = 1e-9


@dataclass(frozen=True)
class ScalingReport:
    """Scaling coefficients for a channel at a given input distribution.

    ``message_coeff`` and ``key_coeff`` are in nats per unit of
    sqrt(n * covertness divergence); ``kappa`` is present only in the
    SqrtNLogN regime.
    """

    message_coeff: float
    key_coeff: float
    ptilde: np.ndarray
    regime: ScenarioClass
    kappa: float | None = None

    def to_json(self, unit: str = "nats") -> dict:
        scale = 1.0 if unit == "nats" else 1.0 / math.log(2.0)
        return {
            "regime": self.regime.value,
            "message_coeff": self.message_coeff * scale,
            "key_coeff": self.key_coeff * scale,
            "unit": unit,
            "ptilde": self.ptilde.tolist(),
            "kappa": self.kappa,
        }


def admissible_symbols(channel: CqChannelPair) -> list[int]:
    """Symbols whose Bob and Willie states are both inside the innocent supports."""
    return [x for x, (b_rel, w_rel) in zip(channel.non_innocent, support_relations(channel))
            if b_rel is SupportRelation.CONTAINED and w_rel is SupportRelation.CONTAINED]


def _require_regime(channel: CqChannelPair, wanted: ScenarioClass) -> ScenarioReport:
    verdict = classify_scenario(channel)
    if verdict.scenario is not wanted:
        raise WrongRegime(f"channel classified {verdict.scenario.value}, "
                          f"operation requires {wanted.value}")
    return verdict


def _check_ptilde_support(channel: CqChannelPair, p: np.ndarray) -> None:
    admissible = set(admissible_symbols(channel))
    for weight, x in zip(p, channel.non_innocent):
        if weight > 0 and x not in admissible:
            raise WrongRegime(f"ptilde puts weight on symbol {x} whose supports "
                              "are not contained")


def _chi_squared_denominator(channel: CqChannelPair, p: np.ndarray) -> float:
    _, willie_avg = average_states(channel, p)
    chi2 = chi_squared(willie_avg, channel.willie_states[0])
    if not math.isfinite(chi2) or chi2 <= 0.0:
        raise ZeroChiSquared(f"chi-squared denominator {chi2!r}; the innocent "
                             "state must not be a mixture of the weighted symbols")
    return chi2


def _coefficient_pair(channel: CqChannelPair, p: np.ndarray) -> tuple[float, float]:
    # (message, key) coefficients without the regime gate
    denom = math.sqrt(_chi_squared_denominator(channel, p) / 2.0)
    d_bob = sum(pi * relative_entropy(channel.bob_states[x], channel.bob_states[0])
                for pi, x in zip(p, channel.non_innocent))
    d_willie = sum(pi * relative_entropy(channel.willie_states[x],
                                         channel.willie_states[0])
                   for pi, x in zip(p, channel.non_innocent))
    return d_bob / denom, max(0.0, d_willie - d_bob) / denom


def message_coefficient(channel: CqChannelPair, ptilde) -> float:
    """Optimal message-length coefficient sum p(x) D(bob_x||bob_0) / sqrt(chi2/2)."""
    p = validate_distribution(ptilde)
    _require_regime(channel, ScenarioClass.SQUARE_ROOT_LAW)
    _check_ptilde_support(channel, p)
    return _coefficient_pair(channel, p)[0]


def key_coefficient(channel: CqChannelPair, ptilde) -> float:
    """Key-length coefficient [sum p(x)(D_willie - D_bob)]^+ / sqrt(chi2/2)."""
    p = validate_distribution(ptilde)
    _require_regime(channel, ScenarioClass.SQUARE_ROOT_LAW)
    _check_ptilde_support(channel, p)
    return _coefficient_pair(channel, p)[1]


def scaling_report(channel: CqChannelPair, ptilde) -> ScalingReport:
    """Both square-root-law coefficients at a given input distribution."""
    p = validate_distribution(ptilde)
    _require_regime(channel, ScenarioClass.SQUARE_ROOT_LAW)
    _check_ptilde_support(channel, p)
    message, key = _coefficient_pair(channel, p)
    return ScalingReport(message_coeff=message, key_coeff=key,
                         ptilde=p, regime=ScenarioClass.SQUARE_ROOT_LAW)


def _classical_kl(row: np.ndarray, innocent_row: np.ndarray) -> float:
    zero = innocent_row <= CLASSICAL_ZERO
    leak = float(row[zero].sum())
    if leak > CLASSICAL_LEAK_TOL:
        raise SupportViolationClassical(
            f"induced row has mass {leak:.3e} outside the innocent row support")
    live = (~zero) & (row > 0)
    return float(np.sum(row[live] * np.log(row[live] / innocent_row[live])))


def product_measurement_coefficients(channel: CqChannelPair, povm: Povm,
                                     ptilde) -> ScalingReport:
    """Scaling coefficients when Bob is restricted to a per-use measurement.

    The numerators use classical relative entropies of the induced DMC rows;
    the denominator keeps the quantum chi-squared divergence at Willie.
    Never better than the joint-measurement coefficients.
    """
    p = validate_distribution(ptilde)
    _require_regime(channel, ScenarioClass.SQUARE_ROOT_LAW)
    _check_ptilde_support(channel, p)
    chi2 = _chi_squared_denominator(channel, p)
    dmc = induce_dmc(list(channel.bob_states), povm)
    kl = {x: _classical_kl(dmc[x], dmc[0]) for x in channel.non_innocent}
    num = sum(pi * kl[x] for pi, x in zip(p, channel.non_innocent))
    gap = sum(pi * (relative_entropy(channel.willie_states[x], channel.willie_states[0])
                    - kl[x])
              for pi, x in zip(p, channel.non_innocent))
    denom = math.sqrt(chi2 / 2.0)
    return ScalingReport(message_coeff=num / denom,
                         key_coeff=max(0.0, gap) / denom,
                         ptilde=p, regime=ScenarioClass.SQUARE_ROOT_LAW)


@dataclass(frozen=True)
class SqrtnLognReport:
    """Leading constant of the sqrt(n) log(n) upper bound.

    The schedule-dependent additive term is not computable at finite n and is
    carried symbolically in ``expression``.
    """

    kappa: float
    leading_constant: float
    ptilde: np.ndarray
    expression: str

    def to_json(self) -> dict:
        return {
            "regime": ScenarioClass.SQRT_N_LOG_N.value,
            "kappa": self.kappa,
            "leading_constant": self.leading_constant,
            "ptilde": self.ptilde.tolist(),
            "expression": self.expression,
        }


def sqrtnlogn_coefficient(channel: CqChannelPair, ptilde) -> SqrtnLognReport:
    """Escape probability kappa and the computable part of the upper bound.

    ``kappa = 1 - Tr{P_0 sum p(x) bob_x}`` with ``P_0`` the innocent-support
    projector at Bob; the reported constant is ``kappa / (2 sqrt(chi2/2))``.
    """
    p = validate_distribution(ptilde)
    _require_regime(channel, ScenarioClass.SQRT_N_LOG_N)
    for weight, x in zip(p, channel.non_innocent):
        if weight > 0 and not supports_contained(channel.willie_states[x],
                                                 channel.willie_states[0]):
            raise WrongRegime(f"ptilde puts weight on symbol {x} leaking at Willie")
    chi2 = _chi_squared_denominator(channel, p)
    p0 = support_projector(channel.bob_states[0])
    bob_avg, _ = average_states(channel, p)
    kappa = 1.0 - float(np.trace(p0 @ bob_avg.matrix).real)
    kappa = min(max(kappa, 0.0), 1.0)
    return SqrtnLognReport(
        kappa=kappa,
        leading_constant=kappa / (2.0 * math.sqrt(chi2 / 2.0)),
        ptilde=p,
        expression="kappa * (1/2 + lim log(1/iota)/log(n)) / sqrt(chi2/2); "
                   "the limit term depends on the vanishing schedule iota_n",
    )


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, len(u) + 1)
    cond = u + (1.0 - css) / idx > 0
    rho = idx[cond][-1]
    shift = (1.0 - css[rho - 1]) / rho
    return np.maximum(v + shift, 0.0)


def optimize_ptilde(channel: CqChannelPair, objective: str,
                    weight: float = 0.5, restarts: int = 20,
                    seed: int = 0) -> tuple[np.ndarray, ScalingReport]:
    """Heuristic search for a good input distribution on the simplex.

    Objectives: ``"max-message"`` maximizes the message coefficient,
    ``"min-key"`` minimizes the key coefficient, ``"tradeoff"`` maximizes
    message minus ``weight`` times key.  Projected-gradient ascent with step
    halving from ``restarts`` random starts plus the uniform start; the
    objective is a ratio of a linear form to the square root of a quadratic
    form and may be non-concave, so the result is best-found, not certified.
    """
    if objective not in ("max-message", "min-key", "tradeoff"):
        raise ValueError(f"unknown objective {objective!r}")
    _require_regime(channel, ScenarioClass.SQUARE_ROOT_LAW)
    admissible = admissible_symbols(channel)
    if not admissible:
        raise WrongRegime("no symbol with both supports contained")
    slots = {x: i for i, x in enumerate(channel.non_innocent)}

    def embed(q: np.ndarray) -> np.ndarray:
        full = np.zeros(channel.alphabet_size - 1)
        for value, x in zip(q, admissible):
            full[slots[x]] = value
        return full

    def score(q: np.ndarray) -> float:
        message, key = _coefficient_pair(channel, embed(project_simplex(q)))
        if objective == "max-message":
            return message
        if objective == "min-key":
            return -key
        return message - weight * key

    k = len(admissible)
    if k == 1:
        best = np.ones(1)
    else:
        rng = np.random.default_rng(np.random.SeedSequence((seed, 1)))
        starts = [np.full(k, 1.0 / k)]
        starts += [rng.dirichlet(np.ones(k)) for _ in range(restarts)]
        best, best_val = None, -math.inf
        h = 1e-7
        for start in starts:
            q = start.copy()
            val = score(q)
            step = 0.25
            for _ in range(500):
                grad = np.empty(k)
                for i in range(k):
                    bump = np.zeros(k)
                    bump[i] = h
                    grad[i] = (score(q + bump) - score(q - bump)) / (2 * h)
                while step > 1e-12:
                    candidate = project_simplex(q + step * grad)
                    cand_val = score(candidate)
                    if cand_val > val:
                        break
                    step /= 2.0
                else:
                    break  # no ascent along the gradient at the smallest step
                gain = cand_val - val
                q, val = candidate, cand_val
                step = min(step * 2.0, 1.0)
                if gain < 1e-9:
                    break
            if val > best_val + 1e-15:
                best, best_val = project_simplex(q), val
        best = best if best is not None else np.full(k, 1.0 / k)

    p_full = embed(project_simplex(best))
    return p_full, scaling_report(channel, p_full)


@dataclass(frozen=True)
class ConverseBounds:
    """Single-letter converse quantities at an average input distribution.

    ``log_m_upper`` bounds the message length from above through the
    receiver's Holevo information; ``log_mk_lower`` bounds message plus key
    from below through the adversary's.  The ``linear_*`` fields are the
    looser weighted-divergence bounds used for cross-checking the Holevo
    expansion identity ``chi = mu * sum p D(x||0) - D(mixture||innocent)``.
    """

    log_m_upper: float
    log_mk_lower: float
    chi_bob: float
    chi_willie: float
    linear_bob: float
    linear_willie: float
    d_mix_bob: float
    d_mix_willie: float

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in (
            "log_m_upper", "log_mk_lower", "chi_bob", "chi_willie",
            "linear_bob", "linear_willie", "d_mix_bob", "d_mix_willie")}


def converse_bounds(channel: CqChannelPair, ptilde, mu: float, n: int,
                    delta: float, epsilon: float) -> ConverseBounds:
    """Evaluate the converse bounds at innocent mass 1 - mu, non-innocent mu.

    ``log_m_upper = (n chi_bob + 1) / (1 - delta)`` and
    ``log_mk_lower = n chi_willie - epsilon`` in nats.
    """
    p = validate_distribution(ptilde)
    if not 0.0 <= mu < 1.0:
        raise ValueError(f"mu must lie in [0, 1), got {mu}")
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    p_bar = np.concatenate([[1.0 - mu], mu * p])
    chi_bob = holevo_information(p_bar, list(channel.bob_states))
    chi_willie = holevo_information(p_bar, list(channel.willie_states))
    linear_bob = mu * sum(
        pi * relative_entropy(channel.bob_states[x], channel.bob_states[0])
        for pi, x in zip(p, channel.non_innocent))
    linear_willie = mu * sum(
        pi * relative_entropy(channel.willie_states[x], channel.willie_states[0])
        for pi, x in zip(p, channel.non_innocent))

    def mix(states):
        m = (1.0 - mu) * states[0].matrix
        for pi, x in zip(p, channel.non_innocent):
            m = m + mu * pi * states[x].matrix
        return DensityOperator(hermitian_part(m), rank_tolerance=states[0].rank_tolerance)

    d_mix_bob = relative_entropy(mix(channel.bob_states), channel.bob_states[0])
    d_mix_willie = relative_entropy(mix(channel.willie_states), channel.willie_states[0])
    return ConverseBounds(
        log_m_upper=(n * chi_bob + 1.0) / (1.0 - delta),
        log_mk_lower=n * chi_willie - epsilon,
        chi_bob=chi_bob, chi_willie=chi_willie,
        linear_bob=linear_bob, linear_willie=linear_willie,
        d_mix_bob=d_mix_bob, d_mix_willie=d_mix_willie)


@dataclass(frozen=True)
class ExpansionCheck:
    """Residuals of the quadratic approximation of the relative entropy."""

    alphas: np.ndarray
    divergences: np.ndarray
    predictions: np.ndarray
    residuals: np.ndarray
    slope: float | None
    radius: float

    def to_json(self) -> dict:
        return {
            "alphas": self.alphas.tolist(),
            "divergences": self.divergences.tolist(),
            "predictions": self.predictions.tolist(),
            "residuals": self.residuals.tolist(),
            "slope": self.slope,
            "radius": self.radius,
        }


def expansion_radius(b: DensityOperator, c: DensityOperator) -> float:
    """Validity radius min(1, 1/||B^+ (C - B)||) in spectral norm."""
    x = matrix_pinv(b.matrix, b.rank_tolerance) @ (c.matrix - b.matrix)
    norm = float(np.linalg.norm(x, 2))
    return 1.0 if norm == 0.0 else min(1.0, 1.0 / norm)


def expansion_check(b: DensityOperator, c: DensityOperator,
                    alpha_grid) -> ExpansionCheck:
    """Check D(alpha C + (1-alpha) B || B) against alpha^2 chi2(C||B) / 2.

    Residuals shrink as the cube of the mixing weight inside the validity
    radius; the fitted log-log slope makes that testable.

    Raises
    ------
    AlphaOutOfRadius
        If any grid point exceeds the convergence radius.
    SupportViolation
        If supp(C) is not contained in supp(B).
    """
    if not supports_contained(c, b):
        raise SupportViolation("expansion requires supp(C) inside supp(B)")
    alphas = np.asarray(sorted(alpha_grid), dtype=float)
    if alphas.size and (alphas.min() < 0 or alphas.max() > 1):
        raise AlphaOutOfRadius("mixing weights must lie in [0, 1]")
    radius = expansion_radius(b, c)
    if alphas.size and alphas.max() > radius:
        raise AlphaOutOfRadius(f"alpha {alphas.max()} exceeds radius {radius:.6g}")
    chi2 = chi_squared(c, b)
    divergences, predictions = [], []
    for alpha in alphas:
        mixed = DensityOperator(
            hermitian_part(alpha * c.matrix + (1.0 - alpha) * b.matrix),
            rank_tolerance=b.rank_tolerance)
        divergences.append(relative_entropy(mixed, b))
        predictions.append(alpha ** 2 * chi2 / 2.0)
    divergences = np.array(divergences)
    predictions = np.array(predictions)
    residuals = np.abs(divergences - predictions)
    live = (alphas > 0) & (residuals > 0)
    slope = None
    if np.count_nonzero(live) >= 2:
        coeffs = np.polyfit(np.log(alphas[live]), np.log(residuals[live]), 1)
        slope = float(coeffs[0])
    return ExpansionCheck(alphas=alphas, divergences=divergences,
                          predictions=predictions, residuals=residuals,
                          slope=slope, radius=radius)
