"""Exact small-blocklength simulation of the random coding scheme.

Codebooks are sampled i.i.d. with a vanishing non-innocent symbol weight,
decoded with the square-root measurement built from pinched likelihood-ratio
projectors, and scored exactly: Bob's average error probability, the
covertness divergence of the average adversary state, and the optimal
detector error are all computed without sampling noise.  Trials are
independent tasks whose random streams derive from (master seed, blocklength,
trial index), so results do not depend on scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import CqChannelPair, average_states, uniform_nontrivial_ptilde
from .divergences import (
    SUPPORT_TOL,
    chi_squared,
    helstrom_error,
    relative_entropy,
    validate_distribution,
)
from .errors import (
    AlphaOutOfRange,
    DimensionCapExceeded,
    IndexMismatch,
    NoLeakage,
    ValidationError,
)
from .operators import (
    DEFAULT_RANK_TOL,
    DensityOperator,
    ZERO_EIGENVALUE_TOL,
    dimension_cap,
    eigenvalue_clusters,
    hermitian_part,
    kron_power,
    support_projector,
)


def _check_block_dim(dim: int, n: int) -> int:
    out = dim ** n
    cap = dimension_cap()
    if out > cap:
        raise DimensionCapExceeded(f"block dimension {dim}^{n} = {out} exceeds cap {cap}")
    return out


def product_state(states: Sequence[DensityOperator], symbols: Sequence[int]) -> DensityOperator:
    """Tensor product state of per-use outputs, channel use 1 leftmost."""
    _check_block_dim(states[0].dim, len(symbols))
    m = states[symbols[0]].matrix
    for x in symbols[1:]:
        m = np.kron(m, states[x].matrix)
    return DensityOperator(m, rank_tolerance=states[0].rank_tolerance)


@dataclass(frozen=True)
class Codebook:
    """Random codebook over the channel alphabet.

    ``symbols[m * k_count + k]`` is the n-symbol codeword for message m under
    key k (both 0-based).  Regeneration from the stored parameters is
    bit-exact.
    """

    n: int
    m_count: int
    k_count: int
    gamma: float
    seed: int
    ptilde: np.ndarray
    symbols: np.ndarray

    @property
    def alpha(self) -> float:
        return self.gamma / math.sqrt(self.n)

    def codeword(self, m: int, k: int) -> np.ndarray:
        return self.symbols[m * self.k_count + k]


def sample_codebook(channel: CqChannelPair, n: int, m_count: int, k_count: int,
                    gamma: float, ptilde, seed: int) -> Codebook:
    """Sample a codebook with i.i.d. symbols.

    Each symbol is innocent with probability ``1 - gamma/sqrt(n)`` and
    otherwise a non-innocent symbol drawn from ``ptilde``.  Deterministic
    given ``seed``.
    """
    if n < 1 or m_count < 1 or k_count < 1:
        raise ValidationError(f"need n, M, K >= 1, got {(n, m_count, k_count)}")
    p = validate_distribution(ptilde)
    if p.size != channel.alphabet_size - 1:
        raise ValidationError(f"ptilde has {p.size} entries for "
                              f"{channel.alphabet_size - 1} non-innocent symbols")
    alpha = gamma / math.sqrt(n)
    if not 0.0 <= alpha < 1.0:
        raise AlphaOutOfRange(f"gamma/sqrt(n) = {alpha!r} outside [0, 1)")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    rows = m_count * k_count
    send = rng.random((rows, n)) < alpha
    draws = rng.random((rows, n))
    cum = np.cumsum(p)
    picks = np.minimum(np.searchsorted(cum, draws, side="right"), p.size - 1) + 1
    symbols = np.where(send, picks, 0).astype(np.int64)
    symbols.flags.writeable = False
    return Codebook(n=n, m_count=m_count, k_count=k_count, gamma=float(gamma),
                    seed=int(seed), ptilde=p, symbols=symbols)


class ProductBasis:
    """Eigenstructure of the n-fold power of a single-use state.

    The eigenbasis of ``state^(x) n`` is the Kronecker power of the
    single-use eigenbasis and its eigenvalues are products of single-use
    eigenvalues; near-degenerate products are merged into pinching clusters.
    Shared across trials at a fixed blocklength.
    """

    def __init__(self, state: DensityOperator, n: int):
        _check_block_dim(state.dim, n)
        spec = state.spectrum
        single = np.where(spec.eigenvalues > state.rank_tolerance, spec.eigenvalues, 0.0)
        self.n = n
        self.single_dim = state.dim
        self.single_vectors = spec.eigenvectors
        values = single
        for _ in range(n - 1):
            values = np.kron(values, single)
        self.eigenvalues = values
        ids = eigenvalue_clusters(values)
        self.cluster_mask = ids[:, None] == ids[None, :]
        self.clusters = [np.flatnonzero(ids == c) for c in range(ids.max() + 1)]

    def rotate_single(self, matrix: np.ndarray) -> np.ndarray:
        """Conjugate a single-use operator into the single-use eigenbasis."""
        u = self.single_vectors
        return u.conj().T @ matrix @ u

    def rotated_block(self, states: Sequence[DensityOperator],
                      symbols: Sequence[int]) -> np.ndarray:
        """Product block state expressed in the rotated basis (O(dim^2))."""
        out = self.rotate_single(states[symbols[0]].matrix)
        for x in symbols[1:]:
            out = np.kron(out, self.rotate_single(states[x].matrix))
        return out

    def pinch_rotated(self, rotated: np.ndarray) -> np.ndarray:
        """Dephase a rotated-basis operator across the eigenvalue clusters."""
        return rotated * self.cluster_mask

    def to_original_basis(self, rotated: np.ndarray) -> np.ndarray:
        """Conjugate back: (u^(x) n) rotated (u^(x) n)^dagger without forming u^(x) n."""
        half = _kron_apply_left(self.single_vectors, self.n, rotated)
        return _kron_apply_left(self.single_vectors, self.n, half.conj().T).conj().T


def _kron_apply_left(u: np.ndarray, n: int, x: np.ndarray) -> np.ndarray:
    """Multiply (u^(x) n) @ x using axis-wise contractions, O(n d^2 dim)."""
    d = u.shape[0]
    cols = x.shape[1]
    t = x.reshape((d,) * n + (cols,))
    for axis in range(n):
        t = np.moveaxis(np.tensordot(u, t, axes=(1, axis)), 0, axis)
    return t.reshape(d ** n, cols)


@dataclass(frozen=True)
class DecoderPovm:
    """Sub-POVM decoder: per-message elements plus an implicit failure element."""

    elements: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def failure_element(self) -> np.ndarray:
        return np.eye(self.dim) - sum(self.elements)

    def validate(self, tol: float = 1e-8) -> None:
        """Check PSD elements and sum bounded by identity within ``tol``."""
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for i, e in enumerate(self.elements):
            if np.linalg.eigvalsh(e).min() < -tol:
                raise ValidationError(f"decoder element {i} not PSD within {tol:.0e}")
            total += e
        excess = np.linalg.eigvalsh(total).max() - 1.0
        if excess > tol:
            raise ValidationError(f"decoder sum exceeds identity by {excess:.3e}")


def build_srm_decoder(codebook: Codebook, channel: CqChannelPair, a: float,
                      key: int = 0, basis: ProductBasis | None = None) -> DecoderPovm:
    """Square-root-measurement decoder for the given key.

    Per-message projectors keep the strictly positive eigenspaces of the
    pinched codeword state minus ``e^a`` times the innocent block state; the
    elements are the projectors normalized symmetrically by the pseudo
    inverse square root of their sum, which yields a valid sub-POVM.

    Everything after the pinching is block-diagonal over the innocent
    state's eigenvalue clusters, so the spectral work is done cluster by
    cluster in the rotated basis.
    """
    if a < 0:
        raise ValidationError(f"threshold exponent a must be >= 0, got {a}")
    if not 0 <= key < codebook.k_count:
        raise IndexMismatch(f"key {key} outside 0..{codebook.k_count - 1}")
    _check_block_dim(channel.dim_bob, codebook.n)
    if basis is None:
        basis = ProductBasis(channel.bob_states[0], codebook.n)
    elif (basis.single_dim != channel.dim_bob
          or basis.eigenvalues.size != channel.dim_bob ** codebook.n):
        raise IndexMismatch("basis does not match the channel and blocklength")
    threshold = math.exp(a) * basis.eigenvalues

    dim = channel.dim_bob ** codebook.n
    projector_blocks = [dict() for _ in range(codebook.m_count)]
    total_blocks = {}
    for m in range(codebook.m_count):
        rotated = basis.rotated_block(channel.bob_states, codebook.codeword(m, key))
        for b, idx in enumerate(basis.clusters):
            block = rotated[np.ix_(idx, idx)] - np.diag(threshold[idx])
            w, v = np.linalg.eigh(hermitian_part(block))
            keep = v[:, w > ZERO_EIGENVALUE_TOL]
            proj = keep @ keep.conj().T
            projector_blocks[m][b] = proj
            total_blocks[b] = total_blocks.get(b, 0) + proj

    norm_blocks = {}
    for b, total in total_blocks.items():
        w, v = np.linalg.eigh(hermitian_part(total))
        inv_sqrt_w = np.where(w > DEFAULT_RANK_TOL, w, np.inf) ** -0.5
        norm_blocks[b] = (v * inv_sqrt_w) @ v.conj().T

    elements = []
    for m in range(codebook.m_count):
        rotated_element = np.zeros((dim, dim), dtype=complex)
        for b, idx in enumerate(basis.clusters):
            norm = norm_blocks[b]
            rotated_element[np.ix_(idx, idx)] = norm @ projector_blocks[m][b] @ norm
        elements.append(hermitian_part(basis.to_original_basis(rotated_element)))
    return DecoderPovm(elements=tuple(elements))


def _trace_product(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(a * b.T).real)


def exact_pe_bob(codebook: Codebook, channel: CqChannelPair,
                 decoder: DecoderPovm, key: int = 0) -> float:
    """Exact average decoding error (1/M) sum_m (1 - Tr{element_m state_m})."""
    if len(decoder.elements) != codebook.m_count:
        raise IndexMismatch(f"decoder has {len(decoder.elements)} elements "
                            f"for {codebook.m_count} messages")
    if not 0 <= key < codebook.k_count:
        raise IndexMismatch(f"key {key} outside 0..{codebook.k_count - 1}")
    total = 0.0
    for m in range(codebook.m_count):
        sig = product_state(channel.bob_states, codebook.codeword(m, key))
        total += 1.0 - _trace_product(decoder.elements[m], sig.matrix)
    return min(max(total / codebook.m_count, 0.0), 1.0)


def willie_average_state(codebook: Codebook, channel: CqChannelPair) -> DensityOperator:
    """Uniform mixture of the adversary's codeword block states."""
    _check_block_dim(channel.dim_willie, codebook.n)
    rows = codebook.m_count * codebook.k_count
    acc = None
    for row in codebook.symbols:
        m = product_state(channel.willie_states, row).matrix
        acc = m if acc is None else acc + m
    return DensityOperator(hermitian_part(acc / rows),
                           rank_tolerance=channel.willie_states[0].rank_tolerance)


def covertness_report(codebook: Codebook, channel: CqChannelPair,
                      innocent_block: DensityOperator | None = None,
                      ) -> tuple[float, float]:
    """Exact covertness divergence (nats) and optimal detector error.

    Compares the average adversary state against the innocent block state;
    ``innocent_block`` may be passed in to share its cached spectrum across
    trials.
    """
    rho_bar = willie_average_state(codebook, channel)
    if innocent_block is None:
        innocent_block = kron_power(channel.willie_states[0], codebook.n)
    d = relative_entropy(rho_bar, innocent_block)
    pe = helstrom_error(rho_bar, innocent_block)
    return d, pe


@dataclass(frozen=True)
class TrialReport:
    """Exact scores of one sampled code."""

    n: int
    gamma: float
    seed: int
    m_count: int
    k_count: int
    log_m_raw: float
    log_k_raw: float
    pe_bob: float
    covert_d: float
    pe_willie: float
    note: str = ""

    @property
    def log_m_nats(self) -> float:
        return math.log(self.m_count)

    @property
    def log_k_nats(self) -> float:
        return math.log(self.k_count)

    def to_json(self) -> dict:
        return {
            "n": self.n, "gamma": self.gamma, "seed": self.seed,
            "m_count": self.m_count, "k_count": self.k_count,
            "log_m_nats": self.log_m_nats, "log_k_nats": self.log_k_nats,
            "log_m_raw": self.log_m_raw, "log_k_raw": self.log_k_raw,
            "pe_bob": self.pe_bob, "covert_d_nats": self.covert_d,
            "pe_willie": self.pe_willie, "note": self.note,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs for a deterministic experiment sweep.

    Message and key counts follow the achievability formulas (rounded up to
    integers >= 1) unless overridden; ``epsilon_target`` defaults to the
    quadratic covertness prediction ``gamma^2 chi^2 / 2`` of the channel.
    """

    channel: CqChannelPair
    n_list: tuple[int, ...]
    gamma: float
    varsigma: float = 0.1
    mu: float = 0.1
    nu: float = 0.1
    trials: int = 1
    seed: int = 0
    ptilde: np.ndarray | None = None
    m_override: int | None = None
    k_override: int | None = None
    delta_target: float = 0.1
    epsilon_target: float | None = None
    workers: int = 1

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        """Build a config from its JSON document (channel given as a path)."""
        from .channel import load_channel
        try:
            channel = load_channel(doc["channel"])
            n_list = tuple(int(n) for n in doc["n"])
            gamma = float(doc["gamma"])
        except KeyError as exc:
            raise ValidationError(f"experiment config missing key {exc}") from exc
        ptilde = doc.get("ptilde")
        return cls(
            channel=channel, n_list=n_list, gamma=gamma,
            varsigma=float(doc.get("varsigma", 0.1)),
            mu=float(doc.get("mu", 0.1)),
            nu=float(doc.get("nu", 0.1)),
            trials=int(doc.get("trials", 1)),
            seed=int(doc.get("seed", 0)),
            ptilde=None if ptilde is None else np.asarray(ptilde, dtype=float),
            delta_target=float(doc.get("delta", 0.1)),
            epsilon_target=(None if doc.get("epsilon") is None
                            else float(doc["epsilon"])),
            workers=int(doc.get("workers", 1)))


def code_sizes(channel: CqChannelPair, ptilde, n: int, gamma: float,
               varsigma: float) -> tuple[int, int, float, float]:
    """Message/key counts from the achievable scaling.

    Returns ``(M, K, log_m_raw, log_k_raw)`` with the raw nat-valued sizes
    ``log M = (1 - varsigma) gamma sqrt(n) sum ptilde(x) D(bob_x || bob_0)``
    and ``log K = gamma sqrt(n) [(1 + varsigma) D_willie -
    (1 - varsigma) D_bob]^+`` rounded up to counts >= 1.
    """
    p = validate_distribution(ptilde)
    d_bob = sum(pi * relative_entropy(channel.bob_states[x], channel.bob_states[0])
                for pi, x in zip(p, channel.non_innocent))
    d_willie = sum(pi * relative_entropy(channel.willie_states[x], channel.willie_states[0])
                   for pi, x in zip(p, channel.non_innocent))
    if not (math.isfinite(d_bob) and math.isfinite(d_willie)):
        raise ValidationError("code sizing needs finite divergences: "
                              "supports must be contained for weighted symbols")
    root = gamma * math.sqrt(n)
    log_m_raw = (1.0 - varsigma) * root * d_bob
    log_k_raw = root * max(0.0, (1.0 + varsigma) * d_willie - (1.0 - varsigma) * d_bob)
    m = max(1, math.ceil(math.exp(log_m_raw) - 1e-12))
    k = max(1, math.ceil(math.exp(log_k_raw) - 1e-12))
    return m, k, log_m_raw, log_k_raw


def _trial_seed(master: int, n: int, trial: int) -> int:
    return int(np.random.SeedSequence((master, n, trial)).generate_state(
        1, dtype=np.uint64)[0])


def _weighted_bob_divergence(channel: CqChannelPair, p: np.ndarray) -> float:
    return sum(pi * relative_entropy(channel.bob_states[x], channel.bob_states[0])
               for pi, x in zip(p, channel.non_innocent))


def run_experiment(config: ExperimentConfig) -> list[TrialReport]:
    """Run all (n, trial) cells of the sweep and return reports in order.

    Deterministic given the config: per-trial randomness derives from
    (seed, n, trial index) only, so the worker count never changes results.
    """
    channel = config.channel
    p = (uniform_nontrivial_ptilde(channel) if config.ptilde is None
         else validate_distribution(config.ptilde))

    tasks = []
    for n in config.n_list:
        _check_block_dim(channel.dim_bob, n)
        _check_block_dim(channel.dim_willie, n)
        m, k, log_m_raw, log_k_raw = code_sizes(channel, p, n, config.gamma,
                                                config.varsigma)
        if config.m_override is not None:
            m = config.m_override
        if config.k_override is not None:
            k = config.k_override
        a = ((1.0 - config.nu) * (1.0 - config.mu) * config.gamma * math.sqrt(n)
             * _weighted_bob_divergence(channel, p))
        basis = ProductBasis(channel.bob_states[0], n)
        innocent_block = kron_power(channel.willie_states[0], n)
        note = "gamma=0: no signaling" if config.gamma == 0 else ""
        for t in range(config.trials):
            tasks.append((n, m, k, log_m_raw, log_k_raw, a, basis,
                          innocent_block, _trial_seed(config.seed, n, t), note))

    def run_one(task) -> TrialReport:
        n, m, k, log_m_raw, log_k_raw, a, basis, innocent_block, seed, note = task
        codebook = sample_codebook(channel, n, m, k, config.gamma, p, seed)
        pe_values = []
        for key in range(k):
            decoder = build_srm_decoder(codebook, channel, a, key=key, basis=basis)
            pe_values.append(exact_pe_bob(codebook, channel, decoder, key=key))
        covert_d, pe_willie = covertness_report(codebook, channel, innocent_block)
        return TrialReport(n=n, gamma=config.gamma, seed=seed, m_count=m, k_count=k,
                           log_m_raw=log_m_raw, log_k_raw=log_k_raw,
                           pe_bob=float(np.mean(pe_values)), covert_d=covert_d,
                           pe_willie=pe_willie, note=note)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(run_one, tasks))
    return [run_one(t) for t in tasks]


def select_best(reports: Sequence[TrialReport], delta_target: float,
                epsilon_target: float) -> TrialReport:
    """Code with the smallest normalized worst criterion.

    Minimizes ``max(pe_bob / delta_target, covert_d / epsilon_target)``; ties
    break towards the earliest report.
    """
    if not reports:
        raise ValidationError("select_best needs at least one report")

    def score(r: TrialReport) -> float:
        if not math.isfinite(r.covert_d):
            return math.inf
        return max(r.pe_bob / delta_target, r.covert_d / epsilon_target)

    best = min(range(len(reports)), key=lambda i: (score(reports[i]), i))
    return reports[best]


def default_epsilon_target(channel: CqChannelPair, ptilde, gamma: float) -> float:
    """Quadratic covertness prediction gamma^2 chi^2(avg non-innocent || innocent) / 2."""
    _, willie_avg = average_states(channel, ptilde)
    return gamma ** 2 * chi_squared(willie_avg, channel.willie_states[0]) / 2.0


@dataclass(frozen=True)
class NogoReport:
    """Impossibility experiment outcome.

    ``pe_willie`` is the exact error of the innocent-support projector
    detector; ``bob_bound`` the closed-form reliability floor
    ``max(0, 1/4 - sqrt(epsilon / c_min))``; ``pair_bound`` the explicit
    paired-codeword fidelity bound over the admissible codeword set.
    """

    epsilon: float
    pe_willie: float
    c_min: float
    bob_bound: float
    admissible_fraction: float
    pair_bound: float

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon, "pe_willie": self.pe_willie,
            "c_min": self.c_min, "bob_bound": self.bob_bound,
            "admissible_fraction": self.admissible_fraction,
            "pair_bound": self.pair_bound,
        }


def nogo_experiment(channel: CqChannelPair, codebook: Codebook,
                    epsilon: float) -> NogoReport:
    """Detection/reliability trade-off when every adversary state leaks.

    Requires every non-innocent adversary state to have support outside the
    innocent support, and pure receiver states so codeword blocks are pure.
    The adversary measures the projector onto the innocent block support; his
    exact error and the leakage constant ``c_min`` then feed the fidelity
    lower bound on the receiver's error.
    """
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    p0_willie = support_projector(channel.willie_states[0])
    for x in channel.non_innocent:
        inside = float(np.trace(p0_willie @ channel.willie_states[x].matrix).real)
        if 1.0 - inside <= SUPPORT_TOL:
            raise NoLeakage(f"willie[{x}] support is contained in the innocent support")
    for x in range(channel.alphabet_size):
        if channel.bob_states[x].rank != 1:
            raise ValidationError(f"bob[{x}] must be pure for the fidelity bound")

    inside_willie = np.array([
        float(np.trace(p0_willie @ channel.willie_states[x].matrix).real)
        for x in range(channel.alphabet_size)])
    sigma0 = channel.bob_states[0].matrix
    overlap_bob = np.array([
        float(np.trace(sigma0 @ channel.bob_states[x].matrix).real)
        for x in range(channel.alphabet_size)])

    rows = codebook.symbols
    detect = np.prod(inside_willie[rows], axis=1)   # Tr{P0^n block_m}
    fidelity = np.prod(np.clip(overlap_bob[rows], 0.0, 1.0), axis=1)
    pe_willie = float(np.mean(detect)) / 2.0

    signaling = fidelity < 1.0 - 1e-12
    if not np.any(signaling):
        raise ValidationError("every codeword is innocent; leakage constant undefined")
    c_values = (1.0 - detect[signaling]) / (1.0 - fidelity[signaling])
    c_min = float(np.min(c_values))

    bob_bound = max(0.0, 0.25 - math.sqrt(epsilon / c_min))

    admissible = np.flatnonzero(1.0 - fidelity <= 4.0 * epsilon / c_min)
    pair_total = 0.0
    for i in range(0, len(admissible) - 1, 2):
        f_left = fidelity[admissible[i]]
        f_right = fidelity[admissible[i + 1]]
        per_pair = (1.0 - math.sqrt(1.0 - f_left) - math.sqrt(1.0 - f_right)) / 2.0
        pair_total += 2.0 * max(0.0, per_pair)
    rows_total = codebook.m_count * codebook.k_count
    return NogoReport(epsilon=float(epsilon), pe_willie=pe_willie, c_min=c_min,
                      bob_bound=bob_bound,
                      admissible_fraction=len(admissible) / rows_total,
                      pair_bound=pair_total / rows_total)
