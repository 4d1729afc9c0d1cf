"""
This module implements the gentle 2-design measurement {E_{δ,z}}, z ∈ {0,1}^D.

The POVM is kept implicit as (design, δ). Outcomes are sampled through the
equivalent two-stage chain: draw m from the plain design measurement, then
flip every bit of the one-hot vector e_m with symmetric unary encoding
(RAPPOR). Elements are only materialized for small D (exact checks, audits
and the lower-bound machinery).
"""
import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from . import designs
from . import qmat

logger = logging.getLogger(__name__)

TAU_PROB = 1e-15
TAU_AUDIT = 1e-9
MAX_EXACT_D = 24
MAX_ENUMERATE_AUDIT_D = 12
ENUMERATION_CHUNK = 1 << 14


@dataclass(frozen=True)
class Outcome:
    """A measurement outcome z ∈ {0,1}^D."""
    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 1 or not np.all((b == 0) | (b == 1)):
            raise ValueError("Outcome bits must be a 1-D 0/1 vector.")
        object.__setattr__(self, "bits", b.astype(np.uint8))

    @property
    def weight(self) -> int:
        return int(self.bits.sum())

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @classmethod
    def from_string(cls, text: str) -> "Outcome":
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"Outcome string must contain only '0'/'1', got {text!r}.")
        return cls(np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0"))

    @classmethod
    def one_hot(cls, m: int, count: int) -> "Outcome":
        bits = np.zeros(count, dtype=np.uint8)
        bits[m] = 1
        return cls(bits)


OutcomeLike = Union[Outcome, np.ndarray, Sequence[int]]


def rappor_kernel(delta: float) -> Tuple[float, float]:
    """(P(bit on | it is the measured index), P(bit on | any other index))."""
    if delta < 0 or not np.isfinite(delta):
        raise ValueError(f"delta must be finite and non-negative, got {delta}.")
    half = np.exp(-delta / 2)
    return 1.0 / (1.0 + half), half / (1.0 + half)


@dataclass(frozen=True)
class GentlePovm:
    """
    The implicit gentle POVM built on a 2-design.

    Construct with GentlePovm.from_alpha for the gentle regime α ∈ [0, 1/2);
    GentlePovm.from_delta accepts any δ ≥ 0 for limit analyses.
    """
    design: designs.TwoDesign
    delta: float
    alpha: float = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self):
        delta = float(self.delta)
        if delta < 0 or not np.isfinite(delta):
            raise ValueError(f"delta must be finite and non-negative, got {delta}.")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "alpha", float(np.tanh(delta / 4)))
        object.__setattr__(self, "beta", float(1.0 / (np.exp(delta / 2) + 1.0)))

    @classmethod
    def from_alpha(cls, design: designs.TwoDesign, alpha: float) -> "GentlePovm":
        if not 0.0 <= alpha < 0.5:
            raise ValueError(f"alpha must lie in [0, 1/2), got {alpha}.")
        return cls(design, 4.0 * np.arctanh(alpha))

    @classmethod
    def from_delta(cls, design: designs.TwoDesign, delta: float) -> "GentlePovm":
        return cls(design, delta)

    @property
    def dim(self) -> int:
        return self.design.dim

    @property
    def count(self) -> int:
        return self.design.count

    @property
    def kernel(self) -> Tuple[float, float]:
        return rappor_kernel(self.delta)

    def materialize(self):
        """All 2^D elements as an ExplicitPovm (D ≤ MAX_EXACT_D)."""
        from .lowerbound import ExplicitPovm
        if self.count > MAX_EXACT_D:
            raise ValueError(f"Cannot materialize 2^{self.count} elements (D > {MAX_EXACT_D}).")
        outcomes = all_outcomes(self.count)
        return ExplicitPovm(element_stack(self, outcomes), labels=outcomes)


def _as_bits(z: OutcomeLike, count: int) -> np.ndarray:
    bits = z.bits if isinstance(z, Outcome) else Outcome(np.asarray(z)).bits
    if bits.shape[0] != count:
        raise ValueError(f"Outcome length {bits.shape[0]} does not match design count {count}.")
    return bits


def _as_bit_matrix(outcomes: Union[np.ndarray, Sequence[OutcomeLike]], count: int) -> np.ndarray:
    if isinstance(outcomes, np.ndarray) and outcomes.ndim == 2:
        z = outcomes
    else:
        z = np.array([o.bits if isinstance(o, Outcome) else np.asarray(o) for o in outcomes])
    if z.size == 0:
        return np.zeros((0, count), dtype=np.uint8)
    if z.ndim != 2 or z.shape[1] != count:
        raise ValueError(f"Outcomes must have length {count}.")
    if not np.all((z == 0) | (z == 1)):
        raise ValueError("Outcomes must be 0/1 vectors.")
    return z.astype(np.uint8)


def all_outcomes(count: int) -> np.ndarray:
    """Every z ∈ {0,1}^D as rows, ordered by binary value (bit 0 most significant)."""
    return np.concatenate(list(iter_outcome_chunks(count)), axis=0)


def iter_outcome_chunks(count: int, chunk: int = ENUMERATION_CHUNK) -> Iterator[np.ndarray]:
    if count > MAX_EXACT_D:
        raise ValueError(f"Exact enumeration requires D <= {MAX_EXACT_D}, got D={count}.")
    total = 1 << count
    shifts = np.arange(count - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        yield ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def _log_weights(povm: GentlePovm, z: np.ndarray) -> np.ndarray:
    # log of C^D (d/D) e^{-(δ/2)‖z − e_m‖₁}, shape (K, D).
    big_d, d = povm.count, povm.dim
    weight = z.sum(axis=1, keepdims=True).astype(float)
    dist = np.where(z == 1, weight - 1, weight + 1)
    log_c = -np.log1p(np.exp(-povm.delta / 2))
    return big_d * log_c + np.log(d / big_d) - 0.5 * povm.delta * dist


def element_stack(povm: GentlePovm, outcomes: Union[np.ndarray, Sequence[OutcomeLike]]) -> np.ndarray:
    """E_{δ,z} for every listed outcome, shape (K, d, d)."""
    z = _as_bit_matrix(outcomes, povm.count)
    weights = np.exp(_log_weights(povm, z))
    return np.einsum("km,mab->kab", weights, povm.design.projectors())


def povm_element(povm: GentlePovm, z: OutcomeLike) -> np.ndarray:
    """
    The element E_{δ,z} = C^D (d/D) Σ_m e^{−(δ/2)‖z−e_m‖₁}|v_m⟩⟨v_m| with
    C = e^{δ/2}/(e^{δ/2}+1).

    Args:
        povm: The gentle POVM.
        z: Outcome of length D.

    Returns:
        The d×d Hermitian PSD matrix.
    """
    bits = _as_bits(z, povm.count)
    return element_stack(povm, bits[None, :])[0]


def completeness_check(povm: GentlePovm, mode: str = "analytic") -> float:
    """
    Residual of Σ_z E_{δ,z} = I.

    'exact' sums every element (D ≤ 24) and returns ‖Σ − I‖_F. 'analytic'
    evaluates C^D[(a+1)^{D−1} + (a+1)^{D−1}a] with a = e^{−δ/2} and returns
    |scalar − 1|·√d.
    """
    d, big_d = povm.dim, povm.count
    if mode == "exact":
        if big_d > MAX_EXACT_D:
            raise ValueError(f"Exact completeness requires D <= {MAX_EXACT_D}, got D={big_d}.")
        column_weights = np.zeros(big_d)
        for z in iter_outcome_chunks(big_d):
            column_weights += np.exp(_log_weights(povm, z)).sum(axis=0)
        total = np.einsum("m,mab->ab", column_weights, povm.design.projectors())
        return float(np.linalg.norm(total - np.eye(d), "fro"))
    if mode == "analytic":
        a = np.exp(-povm.delta / 2)
        c = 1.0 / (1.0 + a)
        scalar = c ** big_d * ((a + 1) ** (big_d - 1) + (a + 1) ** (big_d - 1) * a)
        return float(abs(scalar - 1.0) * np.sqrt(d))
    raise ValueError(f"Unknown completeness mode {mode!r}; use 'exact' or 'analytic'.")


def _design_law(povm: GentlePovm, rho: qmat.MatrixLike) -> np.ndarray:
    p = designs.design_probabilities(povm.design, rho)
    return p / p.sum()


def chain_distribution(povm: GentlePovm, rho: qmat.MatrixLike,
                       outcomes: Union[np.ndarray, Sequence[OutcomeLike]]) -> np.ndarray:
    """Probability of each listed z under the two-stage chain (design draw, then RAPPOR)."""
    z = _as_bit_matrix(outcomes, povm.count).astype(bool)
    p = _design_law(povm, rho)
    p_on, p_off = povm.kernel
    other = np.where(z, p_off, 1.0 - p_off)
    selected = np.where(z, p_on, 1.0 - p_on)
    # P(z | m) = Π_{j<m} other_j · Π_{j>m} other_j · selected_m, without dividing by other_m.
    ones = np.ones((other.shape[0], 1))
    before = np.cumprod(np.hstack([ones, other[:, :-1]]), axis=1)
    after = np.cumprod(np.hstack([other[:, 1:], ones])[:, ::-1], axis=1)[:, ::-1]
    conditional = before * after * selected
    return conditional @ p


def outcome_probabilities(povm: GentlePovm, rho: qmat.MatrixLike,
                          outcomes: Union[np.ndarray, Sequence[OutcomeLike]]) -> np.ndarray:
    """Tr[ρ E_{δ,z}] for each listed z."""
    rho = qmat.as_matrix(rho)
    if rho.shape != (povm.dim, povm.dim):
        raise ValueError(f"Dimension mismatch: state {rho.shape} vs POVM dim {povm.dim}.")
    elements = element_stack(povm, outcomes)
    return np.einsum("kab,ba->k", elements, rho).real


def sample_outcome(povm: GentlePovm, rho: qmat.MatrixLike, rng: np.random.Generator) -> Outcome:
    """One outcome of the gentle measurement applied to ρ."""
    return Outcome(sample_outcomes(povm, rho, 1, rng)[0])


def sample_outcomes(povm: GentlePovm, rho: qmat.MatrixLike, n: int,
                    rng: np.random.Generator) -> np.ndarray:
    """n independent outcomes as an (n, D) uint8 array."""
    big_d = povm.count
    p = _design_law(povm, rho)
    p_on, p_off = povm.kernel
    measured = rng.choice(big_d, size=n, p=p)
    thresholds = np.full((n, big_d), p_off)
    thresholds[np.arange(n), measured] = p_on
    return (rng.random((n, big_d)) < thresholds).astype(np.uint8)


def sample_counts(povm: GentlePovm, rho: qmat.MatrixLike, n: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Column sums N_m of n outcomes, drawn without building the outcomes."""
    p = _design_law(povm, rho)
    p_on, p_off = povm.kernel
    measured = rng.multinomial(n, p)
    return (rng.binomial(measured, p_on) + rng.binomial(n - measured, p_off)).astype(np.int64)


def post_measurement_state(povm: GentlePovm, rho: qmat.MatrixLike, z: OutcomeLike) -> qmat.DensityMatrix:
    """√E ρ √E / Tr[ρE] for the observed outcome z."""
    rho = qmat.as_matrix(rho)
    element = povm_element(povm, z)
    if rho.shape != element.shape:
        raise ValueError(f"Dimension mismatch: state {rho.shape} vs POVM dim {povm.dim}.")
    prob = float(np.trace(rho @ element).real)
    if prob < TAU_PROB:
        raise ValueError(f"Outcome probability {prob:.3e} is below {TAU_PROB}; conditioning is meaningless.")
    root = qmat.psd_sqrt(element)
    post = root @ rho @ root / prob
    return qmat.DensityMatrix(0.5 * (post + post.conj().T))


def pure_disturbance(root: np.ndarray, states: np.ndarray) -> np.ndarray:
    """
    Trace distance between pure states ψ (rows) and M ψ/‖M ψ‖.

    For pure input and output this equals √(1 − |⟨ψ|M|ψ⟩|²/⟨ψ|M²|ψ⟩).
    """
    mapped = states @ root.T
    overlap = np.abs(np.einsum("na,na->n", states.conj(), mapped)) ** 2
    norm_sq = np.einsum("na,na->n", mapped.conj(), mapped).real
    return np.sqrt(np.clip(1.0 - overlap / norm_sq, 0.0, None))


@dataclass(frozen=True)
class KantorovichReport:
    lhs: float
    rhs: float
    extremal_state: np.ndarray
    extremal_lhs: float
    holds: bool
    extremal_tight: bool


def kantorovich_gentleness_bound(matrix: np.ndarray, psi: Union[qmat.PureState, np.ndarray]) -> KantorovichReport:
    """
    Checks 1 − |⟨ψ|M|ψ⟩|²/⟨ψ|M²|ψ⟩ ≤ ((λ_max−λ_min)/(λ_max+λ_min))² and
    that ψ* = (√λ_max|v_min⟩ + √λ_min|v_max⟩)/√(λ_min+λ_max) attains it.
    """
    evals, evecs = qmat.spectral_decomp(matrix)
    lo, hi = evals[0], evals[-1]
    if lo <= qmat.TAU_PSD:
        raise ValueError(f"Kantorovich bound needs a positive-definite matrix (min eigenvalue {lo:.3e}).")
    m = np.asarray(matrix, dtype=np.complex128)
    v = psi.amplitudes if isinstance(psi, qmat.PureState) else np.asarray(psi, dtype=np.complex128)

    def lhs_of(state: np.ndarray) -> float:
        mv = m @ state
        return float(1.0 - abs(np.vdot(state, mv)) ** 2 / np.vdot(mv, mv).real)

    rhs = float(((hi - lo) / (hi + lo)) ** 2)
    extremal = (np.sqrt(hi) * evecs[:, 0] + np.sqrt(lo) * evecs[:, -1]) / np.sqrt(lo + hi)
    lhs, extremal_lhs = lhs_of(v / np.linalg.norm(v)), lhs_of(extremal)
    return KantorovichReport(lhs=lhs, rhs=rhs, extremal_state=extremal, extremal_lhs=extremal_lhs,
                             holds=lhs <= rhs + 1e-10, extremal_tight=abs(extremal_lhs - rhs) <= 1e-10)


def element_disturbance_bound(element: np.ndarray) -> float:
    """(√λ_max − √λ_min)/(√λ_max + √λ_min), the worst pure-state disturbance of √E."""
    evals = np.clip(qmat.spectral_decomp(element)[0], 0.0, None)
    lo, hi = np.sqrt(evals[0]), np.sqrt(evals[-1])
    return float((hi - lo) / (hi + lo))


@dataclass(frozen=True)
class GentlenessReport:
    max_distance: float
    max_pure: float
    max_mixed: float
    bound: float
    argmax_kind: str
    argmax_state: Optional[np.ndarray]
    argmax_outcome: Optional[np.ndarray]
    passed: bool


def audit_outcomes(povm: GentlePovm, rng: Optional[np.random.Generator] = None,
                   n_outcomes: int = 256) -> np.ndarray:
    """All outcomes when D is small, otherwise draws from the chain at I/d."""
    if povm.count <= MAX_ENUMERATE_AUDIT_D:
        return all_outcomes(povm.count)
    if rng is None:
        raise ValueError("An rng is required to sample audit outcomes when D is large.")
    rho0 = qmat.maximally_mixed(povm.dim)
    sampled = sample_outcomes(povm, rho0, n_outcomes, rng)
    one_hots = np.eye(povm.count, dtype=np.uint8)
    return np.unique(np.concatenate([sampled, one_hots]), axis=0)


def gentleness_audit(povm: GentlePovm, rng: np.random.Generator, n_pure: int = 1000, n_mixed: int = 0,
                     outcomes: Optional[np.ndarray] = None, n_outcomes: int = 256) -> GentlenessReport:
    """
    Largest trace distance between a state and its post-measurement state.

    Args:
        povm: The gentle POVM to audit.
        rng: Generator for the state ensemble (and outcomes when D is large).
        n_pure: Haar pure states; eigenvectors and Kantorovich extremal
            states of every audited element are always added.
        n_mixed: Random mixed states, each checked against every outcome.
        outcomes: Explicit (K, D) outcome list; defaults to audit_outcomes.
        n_outcomes: Sampled outcomes when D is too large to enumerate.

    Returns:
        GentlenessReport against the bound tanh(δ/4).
    """
    d = povm.dim
    if outcomes is None:
        outcomes = audit_outcomes(povm, rng, n_outcomes)
    outcomes = _as_bit_matrix(outcomes, povm.count)
    pure = np.array([qmat.random_pure_state(d, rng).amplitudes for _ in range(n_pure)]).reshape(n_pure, d)
    mixed = [qmat.random_density(d, rng) for _ in range(n_mixed)]

    best = (0.0, "none", None, None)
    max_pure, max_mixed = 0.0, 0.0
    for start in range(0, outcomes.shape[0], 256):
        block = outcomes[start:start + 256]
        elements = element_stack(povm, block)
        evals, evecs = np.linalg.eigh(elements)
        roots = np.einsum("kab,kb,kcb->kac", evecs, np.sqrt(np.clip(evals, 0.0, None)), evecs.conj())
        for k, root in enumerate(roots):
            root_evals = np.sqrt(np.clip(evals[k], 0.0, None))
            lo, hi = root_evals[0], root_evals[-1]
            extremal = (np.sqrt(hi) * evecs[k][:, 0] + np.sqrt(lo) * evecs[k][:, -1]) / np.sqrt(lo + hi)
            candidates = np.vstack([pure, evecs[k].T, extremal[None, :]])
            dist = pure_disturbance(root, candidates)
            idx = int(np.argmax(dist))
            max_pure = max(max_pure, float(dist[idx]))
            if dist[idx] > best[0]:
                kind = "pure" if idx < n_pure else ("extremal" if idx == candidates.shape[0] - 1 else "eigenvector")
                best = (float(dist[idx]), kind, candidates[idx], block[k])
            for rho in mixed:
                m = rho.entries
                prob = float(np.trace(root @ m @ root).real)
                if prob < TAU_PROB:
                    continue
                post = root @ m @ root / prob
                dist_mixed = qmat.trace_norm_dist(m, post)
                max_mixed = max(max_mixed, dist_mixed)
                if dist_mixed > best[0]:
                    best = (dist_mixed, "mixed", m, block[k])

    bound = povm.alpha
    passed = best[0] <= bound + TAU_AUDIT
    logger.info("Gentleness audit d=%d alpha=%.4f: max distance %.6e over %d outcomes.",
                d, bound, best[0], outcomes.shape[0])
    return GentlenessReport(max_distance=best[0], max_pure=max_pure, max_mixed=max_mixed, bound=bound,
                            argmax_kind=best[1], argmax_state=best[2], argmax_outcome=best[3], passed=passed)


@dataclass(frozen=True)
class PrivacyReport:
    max_log_ratio: float
    bound: float
    argmax_index: int
    passed: bool


def log_eigen_ratios(elements: np.ndarray) -> np.ndarray:
    """log(λ_max/λ_min) per element; infinite when λ_min is numerically zero."""
    evals = np.linalg.eigvalsh(np.asarray(elements, dtype=np.complex128))
    lo, hi = evals[:, 0], evals[:, -1]
    singular = lo <= qmat.TAU_PSD * np.abs(hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(singular, np.inf, np.log(hi / np.where(singular, 1.0, lo)))
    return ratios


def privacy_of_elements(elements: np.ndarray, delta: float) -> PrivacyReport:
    ratios = log_eigen_ratios(elements)
    idx = int(np.argmax(ratios))
    worst = float(ratios[idx])
    return PrivacyReport(max_log_ratio=worst, bound=float(delta), argmax_index=idx,
                         passed=worst <= delta + TAU_AUDIT)


def privacy_audit(povm: GentlePovm, outcomes: Optional[np.ndarray] = None,
                  rng: Optional[np.random.Generator] = None, n_outcomes: int = 256) -> PrivacyReport:
    """max_z log(λ_max(E_{δ,z})/λ_min(E_{δ,z})) against δ."""
    if outcomes is None:
        outcomes = audit_outcomes(povm, rng, n_outcomes)
    worst: Optional[PrivacyReport] = None
    offset = 0
    z = _as_bit_matrix(outcomes, povm.count)
    for start in range(0, z.shape[0], 1024):
        report = privacy_of_elements(element_stack(povm, z[start:start + 1024]), povm.delta)
        if worst is None or report.max_log_ratio > worst.max_log_ratio:
            worst, offset = report, start
    if worst is None:
        return PrivacyReport(max_log_ratio=0.0, bound=povm.delta, argmax_index=-1, passed=True)
    return PrivacyReport(max_log_ratio=worst.max_log_ratio, bound=povm.delta,
                         argmax_index=offset + worst.argmax_index, passed=worst.passed)


class Duality(str, Enum):
    """Conversions between gentleness α and quantum differential privacy δ."""
    QDP_TO_GENTLE = "qdp_to_gentle"                    # α = tanh(δ/4)
    GENTLE_TO_QDP = "gentle_to_qdp"                    # δ = 4 arctanh(2α)
    GENTLE_TO_QDP_PD = "gentle_to_qdp_pd"              # δ = 4 arctanh(α), positive-definite elements
    QDP_TO_GENTLE_GENERAL = "qdp_to_gentle_general"    # α = tanh(δ/4)/2, inverse of GENTLE_TO_QDP


def duality_convert(direction: Union[Duality, str], value: float) -> float:
    """
    Converts between α and δ.

    Args:
        direction: A Duality member or its string value.
        value: α ∈ [0, 1/2) for gentle→qDP directions, δ ≥ 0 otherwise.

    Returns:
        The converted parameter.
    """
    direction = Duality(direction)
    if direction in (Duality.GENTLE_TO_QDP, Duality.GENTLE_TO_QDP_PD):
        if not 0.0 <= value < 0.5:
            raise ValueError(f"alpha must lie in [0, 1/2) for {direction.value}, got {value}.")
        factor = 2.0 if direction is Duality.GENTLE_TO_QDP else 1.0
        return float(4.0 * np.arctanh(factor * value))
    if value < 0 or not np.isfinite(value):
        raise ValueError(f"delta must be finite and non-negative, got {value}.")
    alpha = float(np.tanh(value / 4.0))
    return alpha / 2.0 if direction is Duality.QDP_TO_GENTLE_GENERAL else alpha


def write_outcome_stream(path: str, outcomes: Union[np.ndarray, Sequence[OutcomeLike]], append: bool = False) -> int:
    """Writes one '0'/'1' bitstring per line; returns the number of lines written."""
    rows = outcomes if isinstance(outcomes, np.ndarray) else [
        o.bits if isinstance(o, Outcome) else np.asarray(o) for o in outcomes]
    with open(path, "a" if append else "w") as f:
        for row in rows:
            f.write("".join("1" if b else "0" for b in row) + "\n")
    return len(rows)


def read_outcome_stream(path: str) -> Optional[np.ndarray]:
    """Reads an outcome stream into an (n, D) uint8 array, or None on failure."""
    if not os.path.isfile(path):
        logger.error("Outcome stream %s not found.", path)
        return None
    rows = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rows.append(Outcome.from_string(line).bits)
            except ValueError as e:
                logger.error("Bad outcome on line %d of %s: %s", lineno, path, e)
                return None
    if rows and len({r.shape[0] for r in rows}) != 1:
        logger.error("Outcome stream %s mixes bitstring lengths.", path)
        return None
    return np.array(rows, dtype=np.uint8)


def povm_to_json(povm: GentlePovm) -> Dict[str, Any]:
    return {"design": {"kind": "mub", "dim": povm.dim, "count": povm.count},
            "alpha": povm.alpha, "delta": povm.delta}


def povm_from_json(payload: Union[str, Dict[str, Any]]) -> GentlePovm:
    if isinstance(payload, str):
        payload = json.loads(payload)
    ref = payload["design"]
    if ref.get("kind") != "mub":
        raise ValueError(f"Unknown design kind {ref.get('kind')!r}.")
    design = designs.build_mub_design(int(ref["dim"]))
    return GentlePovm.from_delta(design, float(payload["delta"]))
