"""
This module holds the lower-bound machinery for certification around ρ0 = I/d.

A finite POVM induces the super-operator H̄(A) = Σ_y Tr[A E_y] E_y / Tr[E_y].
Its matrix in an orthonormal Hermitian basis, its spectrum, the adversarial
perturbation ensembles built from its least sensitive directions and the
χ² distance between the null and the averaged alternatives all live here,
together with the closed-form sample-size bounds.
"""
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special, stats

from . import gentle_povm
from . import qmat

logger = logging.getLogger(__name__)

TAU_CHANNEL = 1e-9
TAU_COMPLETE = 1e-9
TAU_CLUSTER = 1e-8
MAX_EXACT_DIRECTIONS = 12
AMPLITUDE_CONSTANT = 10.0 * np.sqrt(2.0)
CHI2_TARGET = 4.0 / 9.0


class InvalidRegimeError(ValueError):
    """Raised when a likelihood-ratio factor 1 + H_i(ν1, ν2) is not positive."""


@dataclass(frozen=True)
class ExplicitPovm:
    """
    A finite POVM given by its elements E_y, shape (K, d, d).

    With strict=False the completeness check is skipped, which lets audits
    inspect deliberately broken measurements.
    """
    elements: np.ndarray
    labels: Optional[np.ndarray] = None
    strict: bool = field(default=True, repr=False)

    def __post_init__(self):
        e = np.asarray(self.elements, dtype=np.complex128)
        if e.ndim != 3 or e.shape[1] != e.shape[2] or e.shape[0] == 0:
            raise ValueError(f"POVM elements must be a non-empty (K, d, d) stack, got {e.shape}.")
        if np.max(np.abs(e - np.conj(np.swapaxes(e, 1, 2)))) > qmat.TAU_HERM:
            raise ValueError("POVM elements must be Hermitian.")
        if np.min(np.linalg.eigvalsh(e)) < -qmat.TAU_PSD:
            raise ValueError("POVM elements must be positive semi-definite.")
        object.__setattr__(self, "elements", e)
        if self.strict and self.completeness_residual() > TAU_COMPLETE:
            raise ValueError(f"POVM elements do not sum to identity (residual {self.completeness_residual():.3e}).")

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return self.elements.shape[0]

    def completeness_residual(self) -> float:
        return float(np.max(np.abs(self.elements.sum(axis=0) - np.eye(self.dim))))

    def probabilities(self, rho: qmat.MatrixLike) -> np.ndarray:
        return np.einsum("yab,ba->y", self.elements, qmat.as_matrix(rho)).real

    @classmethod
    def projective(cls, vectors: np.ndarray) -> "ExplicitPovm":
        """Rank-one projectors onto the rows of an orthonormal basis (or a scaled frame)."""
        v = np.asarray(vectors, dtype=np.complex128)
        return cls(np.einsum("ya,yb->yab", v, v.conj()))

    @classmethod
    def trivial(cls, d: int) -> "ExplicitPovm":
        return cls(np.eye(d, dtype=np.complex128)[None, :, :])


@dataclass(frozen=True)
class SuperOpMatrix:
    """
    Matrix H[j, k] = ⟨V_j, H̄(V_k)⟩ with its spectrum.

    `eigenvalues`/`eigenvectors` cover the full space; the traceless_* fields
    diagonalize the block orthogonal to I/√d, ascending, with degenerate
    clusters resolved in basis-index order.
    """
    basis: qmat.HermitianBasis
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    traceless_eigenvalues: np.ndarray
    traceless_eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.dim

    def eigen_matrices(self) -> np.ndarray:
        """Traceless eigenvectors as Hermitian matrices, shape (d²−1, d, d)."""
        return np.einsum("jk,jab->kab", self.traceless_eigenvectors, self.basis.elements)

    def apply(self, a: np.ndarray) -> np.ndarray:
        """H̄(A) through the matrix representation."""
        coeffs = qmat.expand_in_basis(a, self.basis)
        return qmat.combine_from_basis(self.matrix @ coeffs, self.basis)


def _canonical_cluster(vectors: np.ndarray) -> np.ndarray:
    # Project unit vectors e_0, e_1, ... in order and keep the independent ones.
    k = vectors.shape[1]
    projector = vectors @ vectors.T
    chosen: List[np.ndarray] = []
    for idx in range(projector.shape[0]):
        candidate = projector[:, idx].copy()
        for prev in chosen:
            candidate -= prev * (prev @ candidate)
        norm = np.linalg.norm(candidate)
        if norm > 1e-6:
            chosen.append(candidate / norm)
        if len(chosen) == k:
            break
    return np.column_stack(chosen)


def _canonical_eigh(matrix: np.ndarray):
    evals, evecs = np.linalg.eigh(matrix)
    out = evecs.copy()
    start = 0
    while start < len(evals):
        stop = start + 1
        while stop < len(evals) and evals[stop] - evals[start] <= TAU_CLUSTER:
            stop += 1
        if stop - start > 1:
            out[:, start:stop] = _canonical_cluster(evecs[:, start:stop])
        else:
            # Fix the sign so the largest-magnitude entry is positive.
            col = out[:, start]
            out[:, start] = col * np.sign(col[np.argmax(np.abs(col))])
        start = stop
    return evals, out


def make_superop(matrix: np.ndarray, basis: qmat.HermitianBasis) -> SuperOpMatrix:
    """Wraps a d²×d² matrix with its full and traceless-block eigen data."""
    h = np.asarray(matrix, dtype=float)
    h_sym = 0.5 * (h + h.T)
    evals, evecs = np.linalg.eigh(h_sym)
    block_evals, block_evecs = _canonical_eigh(h_sym[:-1, :-1])
    traceless = np.vstack([block_evecs, np.zeros((1, block_evecs.shape[1]))])
    return SuperOpMatrix(basis=basis, matrix=h, eigenvalues=evals, eigenvectors=evecs,
                         traceless_eigenvalues=block_evals, traceless_eigenvectors=traceless)


def _basis_traces(elements: np.ndarray, basis: qmat.HermitianBasis) -> np.ndarray:
    # T[y, j] = Tr[V_j E_y]
    return np.einsum("jab,yba->yj", basis.elements, elements).real


def superop_from_povm(povm: ExplicitPovm, basis: Optional[qmat.HermitianBasis] = None,
                      rho0: Optional[qmat.MatrixLike] = None) -> SuperOpMatrix:
    """
    Matrix of H̄ for a finite POVM.

    Args:
        povm: The measurement.
        basis: Orthonormal Hermitian basis, generalized Gell-Mann by default.
        rho0: Reference state; the weight 1/Tr[E_y] becomes 1/(d·Tr[ρ0 E_y]).

    Returns:
        SuperOpMatrix with H[j,k] = Σ_y Tr[V_j E_y] Tr[V_k E_y] w_y.
    """
    d = povm.dim
    basis = basis or qmat.hermitian_basis(d)
    if basis.dim != d:
        raise ValueError(f"Dimension mismatch: basis {basis.dim} vs POVM {d}.")
    if rho0 is None:
        norm = np.einsum("yaa->y", povm.elements).real
    else:
        norm = d * povm.probabilities(rho0)
    if np.min(norm) <= gentle_povm.TAU_PROB:
        raise ValueError("POVM contains an element with (numerically) zero trace.")
    traces = _basis_traces(povm.elements, basis)
    return make_superop((traces / norm[:, None]).T @ traces, basis)


def apply_superop(povm: ExplicitPovm, a: np.ndarray) -> np.ndarray:
    """H̄(A) = Σ_y Tr[A E_y]/Tr[E_y] E_y evaluated directly."""
    weights = np.einsum("yab,ba->y", povm.elements, np.asarray(a)) / np.einsum("yaa->y", povm.elements)
    return np.einsum("y,yab->ab", weights, povm.elements)


def average_superop(povms: Sequence[ExplicitPovm], basis: Optional[qmat.HermitianBasis] = None) -> SuperOpMatrix:
    """H̄ = (1/n) Σ H_i over the per-copy measurements."""
    if not povms:
        raise ValueError("average_superop needs at least one POVM.")
    dims = {p.dim for p in povms}
    if len(dims) != 1:
        raise ValueError(f"POVMs of different dimensions: {sorted(dims)}.")
    basis = basis or qmat.hermitian_basis(dims.pop())
    matrices = [superop_from_povm(p, basis).matrix for p in povms]
    return make_superop(np.mean(matrices, axis=0), basis)


def gentle_class_weights(povm: gentle_povm.GentlePovm):
    """
    Diagonal and off-diagonal entries of G with H = B G Bᵀ for the gentle POVM,
    summing the 2^D outcomes by Hamming weight.
    """
    big_d, d = povm.count, povm.dim
    a = np.exp(-povm.delta / 2)
    c_pow = (1.0 / (1.0 + a)) ** big_d
    k = np.arange(big_d + 1)
    denom = k + (big_d - k) * a ** 2
    diag = a ** (k - 1.0) * (special.comb(big_d - 1, k - 1) + special.comb(big_d - 1, k) * a ** 4) / denom
    off = a ** (k - 1.0) * (special.comb(big_d - 2, k - 2) + 2 * special.comb(big_d - 2, k - 1) * a ** 2
                            + special.comb(big_d - 2, k) * a ** 4) / denom
    scale = c_pow * d / big_d
    return scale * diag.sum(), scale * off.sum()


def gentle_traceless_eigenvalue(povm: gentle_povm.GentlePovm) -> float:
    """The common eigenvalue of H̄ on traceless matrices for a gentle MUB POVM."""
    g_diag, g_off = gentle_class_weights(povm)
    d = povm.dim
    return float((g_diag - g_off) * povm.count / (d * (d + 1)))


def gentle_superop(povm: gentle_povm.GentlePovm, basis: Optional[qmat.HermitianBasis] = None,
                   mode: str = "classes", rng: Optional[np.random.Generator] = None,
                   samples: int = 20000) -> SuperOpMatrix:
    """
    H̄ for the gentle POVM.

    Modes: 'exact' materializes all 2^D elements, 'classes' uses the weight-class
    closed form (any supported d), 'mc' averages d·Tr[V_jE]Tr[V_kE]/Tr[E]² over
    outcomes drawn from the chain at I/d.
    """
    d = povm.dim
    basis = basis or qmat.hermitian_basis(d)
    if mode == "exact":
        return superop_from_povm(povm.materialize(), basis)
    if mode == "classes":
        g_diag, g_off = gentle_class_weights(povm)
        g = g_off * np.ones((povm.count, povm.count)) + (g_diag - g_off) * np.eye(povm.count)
        v = povm.design.vectors
        b = np.einsum("ma,jab,mb->jm", v.conj(), basis.elements, v).real
        return make_superop(b @ g @ b.T, basis)
    if mode == "mc":
        if rng is None:
            raise ValueError("Monte Carlo mode needs an rng.")
        z = gentle_povm.sample_outcomes(povm, qmat.maximally_mixed(d), samples, rng)
        total = np.zeros((d * d, d * d))
        for start in range(0, samples, 4096):
            elements = gentle_povm.element_stack(povm, z[start:start + 4096])
            traces = _basis_traces(elements, basis)
            tr = np.einsum("yaa->y", elements).real
            scaled = traces / tr[:, None]
            total += d * scaled.T @ scaled
        return make_superop(total / samples, basis)
    raise ValueError(f"Unknown mode {mode!r}; use 'exact', 'classes' or 'mc'.")


@dataclass(frozen=True)
class ChannelReport:
    symmetry_residual: float
    min_eigenvalue: float
    trace_residual: float
    unital_residual: float
    identity_eigen_residual: float
    traceless_residual: float
    self_adjoint: bool
    positive: bool
    trace_preserving: bool
    unital: bool
    passed: bool


def _identity_leakage(evals: np.ndarray, evecs: np.ndarray) -> float:
    """
    Weight of I/√d carried by eigenspaces other than the one holding most of it.

    Zero iff I/√d is an eigenvector, i.e. every other eigenvector is traceless.
    Degenerate clusters are handled as whole subspaces.
    """
    weights = []
    start = 0
    while start < len(evals):
        stop = start + 1
        while stop < len(evals) and evals[stop] - evals[start] <= TAU_CLUSTER:
            stop += 1
        weights.append(float(np.sum(evecs[-1, start:stop] ** 2)))
        start = stop
    weights.remove(max(weights))
    return float(np.sqrt(sum(weights)))


def verify_channel_properties(s: SuperOpMatrix, povm: ExplicitPovm, rng: np.random.Generator,
                              trials: int = 5) -> ChannelReport:
    """
    Self-adjointness, positivity, trace preservation and unitality of H̄, plus
    the split of its spectrum into I/√d and a traceless complement.
    """
    d = s.dim
    symmetry = float(np.max(np.abs(s.matrix - s.matrix.T)))
    min_eig = float(s.eigenvalues[0])
    trace_res = 0.0
    for _ in range(trials):
        a = qmat.random_hermitian(d, rng)
        trace_res = max(trace_res, abs(np.trace(apply_superop(povm, a)) - np.trace(a)))
    unital = float(np.max(np.abs(apply_superop(povm, np.eye(d)) - np.eye(d))))
    identity = np.zeros(d * d)
    identity[-1] = 1.0
    identity_res = float(np.max(np.abs(s.matrix @ identity - identity)))
    traceless_res = _identity_leakage(s.eigenvalues, s.eigenvectors)
    checks = dict(self_adjoint=symmetry <= TAU_CHANNEL, positive=min_eig >= -TAU_CHANNEL,
                  trace_preserving=trace_res <= TAU_CHANNEL, unital=unital <= TAU_CHANNEL)
    passed = all(checks.values()) and identity_res <= TAU_CHANNEL and traceless_res <= TAU_CHANNEL
    return ChannelReport(symmetry_residual=symmetry, min_eigenvalue=min_eig, trace_residual=float(trace_res),
                         unital_residual=unital, identity_eigen_residual=identity_res,
                         traceless_residual=traceless_res, passed=passed, **checks)


def eigenvalue_sum_bound(alpha: float) -> float:
    return float(16 * alpha ** 2 / (1 - 4 * alpha ** 2) ** 2)


@dataclass(frozen=True)
class EigenSumReport:
    traceless_sum: float
    bound: float
    qdp_bound: float
    identity_gap: float
    passed: bool


def eigenvalue_sum_check(s: SuperOpMatrix, alpha: float) -> EigenSumReport:
    """
    Compares the sum of the traceless eigenvalues with 16α²/(1−4α²)².

    Also evaluates (e^δ − 1)² at δ = 2 log((1+2α)/(1−2α)) against the bound
    and logs when the two disagree.
    """
    if not 0.0 <= alpha < 0.5:
        raise ValueError(f"alpha must lie in [0, 1/2), got {alpha}.")
    total = float(np.sum(s.traceless_eigenvalues))
    bound = eigenvalue_sum_bound(alpha)
    delta = 2 * np.log((1 + 2 * alpha) / (1 - 2 * alpha))
    qdp_bound = float(np.expm1(delta) ** 2)
    gap = abs(qdp_bound - bound)
    if gap > 1e-12 * max(1.0, bound):
        logger.debug("(e^delta - 1)^2 = %.6g differs from 16a^2/(1-4a^2)^2 = %.6g at alpha=%.4f.",
                     qdp_bound, bound, alpha)
    return EigenSumReport(traceless_sum=total, bound=bound, qdp_bound=qdp_bound, identity_gap=gap,
                          passed=total <= bound + TAU_CHANNEL)


@dataclass(frozen=True)
class AlternativeEnsemble:
    """Perturbations ρ_ν = I/d + (cε/√(dD′)) Σ ν_i V_i around the maximally mixed state."""
    basis: qmat.HermitianBasis
    coefficients: np.ndarray
    epsilon: float
    c: float = AMPLITUDE_CONSTANT

    def __post_init__(self):
        coeffs = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        d = self.basis.dim
        if coeffs.shape[1] != d * d:
            raise ValueError(f"Direction coefficients must have length {d * d}.")
        if np.max(np.abs(coeffs[:, -1])) > qmat.TAU_EIG:
            raise ValueError("Perturbation directions must be traceless.")
        if np.max(np.abs(coeffs @ coeffs.T - np.eye(coeffs.shape[0]))) > 1e-10:
            raise ValueError("Perturbation directions must be orthonormal.")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def count(self) -> int:
        return self.coefficients.shape[0]

    @property
    def amplitude(self) -> float:
        return float(self.c * self.epsilon / np.sqrt(self.dim * self.count))

    @property
    def rho0(self) -> qmat.DensityMatrix:
        return qmat.maximally_mixed(self.dim)

    def directions(self) -> np.ndarray:
        return np.einsum("ij,jab->iab", self.coefficients, self.basis.elements)

    def delta(self, nu: np.ndarray) -> np.ndarray:
        """Δ_ν, or a stack of them when nu has shape (S, D′)."""
        nu = np.asarray(nu, dtype=float)
        return self.amplitude * np.einsum("...i,iab->...ab", nu, self.directions())

    def state(self, nu: np.ndarray) -> np.ndarray:
        return self.rho0.entries + self.delta(nu)

    def sample_signs(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(np.array([-1.0, 1.0]), size=(size, self.count))

    def all_signs(self) -> np.ndarray:
        if self.count > MAX_EXACT_DIRECTIONS:
            raise ValueError(f"Enumerating 2^{self.count} sign vectors exceeds D' <= {MAX_EXACT_DIRECTIONS}.")
        idx = np.arange(1 << self.count)[:, None]
        bits = (idx >> np.arange(self.count - 1, -1, -1)[None, :]) & 1
        return 1.0 - 2.0 * bits


def direction_range(d: int) -> Tuple[int, int]:
    """Admissible D′ range [⌈d²/2⌉, d²−1] for the perturbation ensembles."""
    return int(np.ceil(d * d / 2)), d * d - 1


def build_alternatives(s: SuperOpMatrix, epsilon: float, count: int, mode: str = "fixed",
                       rng: Optional[np.random.Generator] = None, c: float = AMPLITUDE_CONSTANT) -> AlternativeEnsemble:
    """
    Perturbation ensemble along D′ traceless directions.

    Args:
        s: Super-operator of the measurement to fool.
        epsilon: Separation, below 1/c².
        count: D′ in [⌈d²/2⌉, d²−1].
        mode: 'fixed' takes the eigenvectors with the smallest eigenvalues,
            'randomized' a Haar-random orthonormal traceless subset.
        rng: Required for 'randomized'.
        c: Amplitude constant.

    Returns:
        AlternativeEnsemble.
    """
    d = s.dim
    low, high = direction_range(d)
    if not low <= count <= high:
        raise ValueError(f"Direction count must lie in [{low}, {high}] for d={d}, got {count}.")
    if not 0.0 < epsilon < 1.0 / c ** 2:
        raise ValueError(f"epsilon must lie in (0, 1/c^2) = (0, {1.0 / c ** 2:.4g}), got {epsilon}.")
    if mode == "fixed":
        coeffs = s.traceless_eigenvectors[:, :count].T
    elif mode == "randomized":
        if rng is None:
            raise ValueError("Randomized directions need an rng.")
        q = stats.ortho_group.rvs(d * d - 1, random_state=rng)
        coeffs = np.hstack([q[:, :count].T, np.zeros((count, 1))])
    else:
        raise ValueError(f"Unknown mode {mode!r}; use 'fixed' or 'randomized'.")
    return AlternativeEnsemble(basis=s.basis, coefficients=coeffs, epsilon=epsilon, c=c)


@dataclass(frozen=True)
class AdmissibilityReport:
    fraction: float
    admissible: int
    samples: int
    fraction_bound: float
    stderr: float


def admissible_mask(ens: AlternativeEnsemble, signs: np.ndarray) -> np.ndarray:
    deltas = ens.delta(signs)
    evals = np.linalg.eigvalsh(deltas)
    psd = 1.0 / ens.dim + evals[:, 0] >= -qmat.TAU_PSD
    far = 0.5 * np.abs(evals).sum(axis=1) > ens.epsilon
    return psd & far


def admissibility_stats(ens: AlternativeEnsemble, samples: int, rng: np.random.Generator) -> AdmissibilityReport:
    """Fraction of uniformly drawn ν whose ρ_ν is a state at trace distance > ε from I/d."""
    hits = 0
    for start in range(0, samples, 4096):
        size = min(4096, samples - start)
        hits += int(admissible_mask(ens, ens.sample_signs(rng, size)).sum())
    fraction = hits / samples
    return AdmissibilityReport(fraction=fraction, admissible=hits, samples=samples,
                               fraction_bound=float(1 - 2 * np.exp(-ens.dim)),
                               stderr=float(np.sqrt(max(fraction * (1 - fraction), 1e-300) / samples)))


def pairing(s: SuperOpMatrix, a: np.ndarray, b: np.ndarray) -> float:
    """d·⟨A, H̄(B)⟩ through the matrix representation."""
    ca = qmat.expand_in_basis(a, s.basis)
    cb = qmat.expand_in_basis(b, s.basis)
    return float(s.dim * ca @ s.matrix @ cb)


def _per_copy(s_list: Union[SuperOpMatrix, Sequence[SuperOpMatrix]], n: int) -> List[SuperOpMatrix]:
    if isinstance(s_list, SuperOpMatrix):
        return [s_list] * n
    s_list = list(s_list)
    if len(s_list) == 1:
        return s_list * n
    if len(s_list) != n:
        raise ValueError(f"Expected 1 or {n} per-copy super-operators, got {len(s_list)}.")
    return s_list


def _likelihood_products(factors: List[tuple], nu1: np.ndarray, nu2: np.ndarray) -> np.ndarray:
    # factors: (pairing matrix, multiplicity); returns Π_i (1 + ν1ᵀA_iν2) for each (row, column).
    product = np.ones((nu1.shape[0], nu2.shape[0]))
    for mat, power in factors:
        h = nu1 @ mat @ nu2.T
        if np.min(1.0 + h) <= 0.0:
            raise InvalidRegimeError("A factor 1 + H_i(nu1, nu2) is not positive; epsilon is too large.")
        product *= (1.0 + h) ** power
    return product


def chi2_decoupled(s_list: Union[SuperOpMatrix, Sequence[SuperOpMatrix]], ens: AlternativeEnsemble, n: int,
                   mode: str = "exact", rng: Optional[np.random.Generator] = None, samples: int = 100000) -> float:
    """
    E_{ν1,ν2}[Π_i (1 + H_i(ν1, ν2))] − 1 with H_i(ν1, ν2) = d·⟨Δ_{ν1}, H_i(Δ_{ν2})⟩.

    Args:
        s_list: One super-operator per copy (a single one is reused n times).
        ens: Perturbation ensemble around I/d.
        n: Number of copies.
        mode: 'exact' enumerates every sign pair (D′ ≤ 12), 'mc' samples pairs.
        rng: Required for 'mc'.
        samples: Number of sampled pairs in 'mc' mode.

    Returns:
        The χ² distance (without the conditioning factor).
    """
    copies = _per_copy(s_list, n)
    scale = ens.dim * ens.amplitude ** 2
    grouped: Dict[int, List[Any]] = {}
    for s in copies:
        entry = grouped.setdefault(id(s), [s, 0])
        entry[1] += 1
    factors = [(scale * ens.coefficients @ s.matrix @ ens.coefficients.T, power) for s, power in grouped.values()]
    if mode == "exact":
        if ens.count > MAX_EXACT_DIRECTIONS:
            raise ValueError(f"Exact chi-square needs D' <= {MAX_EXACT_DIRECTIONS}, got {ens.count}.")
        signs = ens.all_signs()
        total = 0.0
        for start in range(0, signs.shape[0], 256):
            total += _likelihood_products(factors, signs[start:start + 256], signs).sum()
        return float(total / signs.shape[0] ** 2 - 1.0)
    if mode == "mc":
        if rng is None:
            raise ValueError("Monte Carlo chi-square needs an rng.")
        total = 0.0
        for start in range(0, samples, 8192):
            size = min(8192, samples - start)
            nu1, nu2 = ens.sample_signs(rng, size), ens.sample_signs(rng, size)
            prod = np.ones(size)
            for mat, power in factors:
                h = np.einsum("si,ij,sj->s", nu1, mat, nu2)
                if np.min(1.0 + h) <= 0.0:
                    raise InvalidRegimeError("A factor 1 + H_i(nu1, nu2) is not positive; epsilon is too large.")
                prod *= (1.0 + h) ** power
            total += prod.sum()
        return float(total / samples - 1.0)
    raise ValueError(f"Unknown mode {mode!r}; use 'exact' or 'mc'.")


def chi2_from_distributions(povms: Sequence[ExplicitPovm], ens: AlternativeEnsemble, n: int) -> float:
    """
    χ² between the null product law and the averaged alternative product law,
    computed from the per-copy outcome distributions Tr[ρ_ν E_y].
    """
    copies = list(povms) if len(povms) == n else list(povms) * n
    if len(copies) != n:
        raise ValueError(f"Expected 1 or {n} per-copy POVMs, got {len(povms)}.")
    signs = ens.all_signs()
    states = ens.state(signs)
    product = np.ones((signs.shape[0], signs.shape[0]))
    for povm in copies:
        p0 = povm.probabilities(ens.rho0)
        q = np.einsum("yab,sba->sy", povm.elements, states).real
        product *= (q / p0[None, :]) @ q.T
    return float(product.mean() - 1.0)


def conditioning_factor(d: int) -> float:
    """(e^d/(e^d − 2))², the cost of restricting ν to admissible states."""
    return float((1.0 / (1.0 - 2.0 * np.exp(-d))) ** 2)


def randomized_mu_square_bound(alpha: float) -> float:
    """
    Bound on Σ μ_i² over all traceless directions for randomized measurements.

    The largest of the algebraic forms 256α⁴/(1−4α)⁴ and (16α²/(1−4α²)²)²;
    the first is skipped at α = 1/4 where it is singular.
    """
    squared_sum = eigenvalue_sum_bound(alpha) ** 2
    if np.isclose(alpha, 0.25):
        return squared_sum
    return float(max(squared_sum, 256 * alpha ** 4 / (1 - 4 * alpha) ** 4))


@dataclass(frozen=True)
class LowerBoundReport:
    n_star: float
    exponent_coefficient: float
    directions: float
    conditioning: float
    mode: str


def lower_bound_report(d: int, epsilon: float, alpha: float, mode: str = "fixed",
                       c: float = AMPLITUDE_CONSTANT) -> LowerBoundReport:
    """
    Solves exp(K n²) − 1 = 4/9 for the closed-form χ² bound.

    fixed:      K = 512 c⁴ε⁴α⁴/(2D²d²) with D = d²/2.
    randomized: K = c⁴ε⁴B(α)/(2D²) with D = d²−1 and B = randomized_mu_square_bound.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}.")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}.")
    if d < 2:
        raise ValueError(f"d must be at least 2, got {d}.")
    if mode == "fixed":
        big_d = d * d / 2.0
        k = 512 * c ** 4 * epsilon ** 4 * alpha ** 4 / (2 * big_d ** 2 * d ** 2)
    elif mode == "randomized":
        big_d = d * d - 1.0
        k = c ** 4 * epsilon ** 4 * randomized_mu_square_bound(alpha) / (2 * big_d ** 2)
    else:
        raise ValueError(f"Unknown mode {mode!r}; use 'fixed' or 'randomized'.")
    n_star = float(np.sqrt(np.log1p(CHI2_TARGET) / k))
    return LowerBoundReport(n_star=n_star, exponent_coefficient=float(k), directions=big_d,
                            conditioning=conditioning_factor(d), mode=mode)


def lower_bound_sample_size(d: int, epsilon: float, alpha: float, mode: str = "fixed") -> float:
    """Sample size n* below which every locally-α-gentle test errs with probability ≥ 1/3."""
    return lower_bound_report(d, epsilon, alpha, mode).n_star


def superop_to_json(s: SuperOpMatrix) -> Dict[str, Any]:
    return {"dim": s.dim, "matrix": s.matrix.ravel().tolist(), "eigenvalues": s.eigenvalues.tolist(),
            "traceless_eigenvalues": s.traceless_eigenvalues.tolist()}


def superop_from_json(payload: Union[str, Dict[str, Any]]) -> SuperOpMatrix:
    if isinstance(payload, str):
        payload = json.loads(payload)
    d = int(payload["dim"])
    matrix = np.asarray(payload["matrix"], dtype=float)
    if matrix.size != d ** 4:
        raise ValueError(f"Super-operator payload does not hold a {d * d}x{d * d} matrix.")
    return make_superop(matrix.reshape(d * d, d * d), qmat.hermitian_basis(d))
