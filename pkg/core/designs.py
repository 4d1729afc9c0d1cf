"""
This module constructs proper 2-designs from mutually unbiased bases (MUBs)
and verifies their moment identities. It also exposes the outcome law of the
plain (non-gentle) 2-design measurement, p_ρ(m) = (d/D)⟨v_m|ρ|v_m⟩.

Supported dimensions are the primes and the two-qubit/three-qubit sizes
d = 4 and d = 8. The latter are stabilizer classes X(x)Z(A_a x), with A_a the
trace form of GF(2^q) computed through galois; odd primes use the
quadratic-phase construction; d = 2 uses the textbook computational/Hadamard/circular bases.
"""
import json
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

import galois
import numpy as np

from . import qmat

logger = logging.getLogger(__name__)

TAU_DESIGN = 1e-9

# Extension degrees q with a GF(2^q) construction (d = 4, 8).
GF2_DEGREES: Tuple[int, ...] = (2, 3)


class UnsupportedDimensionError(ValueError):
    """Raised when no MUB construction is available for a dimension."""


@dataclass(frozen=True)
class TwoDesign:
    """D unit vectors (|v_m⟩) in C^d, stored row-wise with shape (D, d)."""
    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.complex128)
        if v.ndim != 2:
            raise ValueError("Design vectors must be a (D, d) array.")
        norms = np.linalg.norm(v, axis=1)
        if np.max(np.abs(norms - 1.0)) > qmat.TAU_NORM:
            raise ValueError("Design vectors must be unit norm.")
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    def projectors(self) -> np.ndarray:
        """Stack of |v_m⟩⟨v_m|, shape (D, d, d)."""
        return np.einsum("ma,mb->mab", self.vectors, self.vectors.conj())


@dataclass(frozen=True)
class TwoDesignReport:
    moment_residual: float
    frame_residual: float
    symmetric_residual: float
    passed: bool


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, int(n ** 0.5) + 1))


def supported_dims(max_dim: int = 16) -> List[int]:
    """Supported dimensions up to max_dim (all primes are supported)."""
    return [d for d in range(2, max_dim + 1) if _is_prime(d) or d in (2 ** q for q in GF2_DEGREES)]


def is_supported_dim(d: int) -> bool:
    return _is_prime(d) or d in [2 ** q for q in GF2_DEGREES]


def _qubit_mubs() -> List[np.ndarray]:
    s = 1 / np.sqrt(2)
    computational = np.eye(2, dtype=np.complex128)
    hadamard = s * np.array([[1, 1], [1, -1]], dtype=np.complex128)
    circular = s * np.array([[1, 1], [1j, -1j]], dtype=np.complex128)
    return [computational, hadamard, circular]


def _odd_prime_mubs(d: int) -> List[np.ndarray]:
    # Basis k, column j holds the vector with components exp(2πi(k t² + j t)/d)/√d.
    t = np.arange(d)
    bases = [np.eye(d, dtype=np.complex128)]
    for k in range(d):
        phases = (k * t[:, None] ** 2 + t[:, None] * t[None, :]) % d
        bases.append(np.exp(2j * np.pi * phases / d) / np.sqrt(d))
    return bases


def trace_form(a: int, q: int) -> np.ndarray:
    """
    Symmetric q×q matrix Tr(a·b_i·b_j) over GF(2) in the polynomial basis
    b_i = x^i of GF(2^q).
    """
    field = galois.GF(2 ** q)
    basis = field([1 << i for i in range(q)])
    products = field(a) * basis[:, None] * basis[None, :]
    return products.field_trace().view(np.ndarray).astype(int)


def _pauli(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    # Hermitian i^{x·z} X(x) Z(z) on len(x) qubits.
    single_x = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    single_z = np.diag([1, -1]).astype(np.complex128)
    op = np.ones((1, 1), dtype=np.complex128)
    for xb, zb in zip(x, z):
        factor = np.linalg.matrix_power(single_x, int(xb)) @ np.linalg.matrix_power(single_z, int(zb))
        if xb and zb:
            factor = 1j * factor
        op = np.kron(op, factor)
    return op


def _gf2_power_mubs(q: int) -> List[np.ndarray]:
    d = 2 ** q
    points = [np.array([(x >> (q - 1 - i)) & 1 for i in range(q)]) for x in range(1, d)]
    # Distinct irrational weights keep the joint eigenvalues non-degenerate.
    primes = [p for p in range(2, 200) if _is_prime(p)][: d - 1]
    weights = np.sqrt(np.array(primes, dtype=float))
    bases = [np.eye(d, dtype=np.complex128)]
    for a in range(d):
        sym = trace_form(a, q)
        generator = np.zeros((d, d), dtype=np.complex128)
        for w, x in zip(weights, points):
            generator += w * _pauli(x, sym.dot(x) % 2)
        _, evecs = np.linalg.eigh(generator)
        bases.append(evecs)
    return bases


def build_mub_design(d: int) -> TwoDesign:
    """
    Builds the d + 1 mutually unbiased bases of C^d as a 2-design.

    Args:
        d: A prime, or 4 or 8.

    Returns:
        TwoDesign with D = d(d+1) vectors, basis by basis, computational first.
    """
    if not isinstance(d, (int, np.integer)) or not is_supported_dim(int(d)):
        raise UnsupportedDimensionError(
            f"No MUB construction for d={d}; supported dims: {supported_dims()} (and any prime).")
    d = int(d)
    if d == 2:
        bases = _qubit_mubs()
    elif _is_prime(d):
        bases = _odd_prime_mubs(d)
    else:
        bases = _gf2_power_mubs(d.bit_length() - 1)
    # Columns of each basis matrix are the basis vectors.
    vectors = np.concatenate([b.T for b in bases], axis=0)
    logger.debug("Built MUB design d=%d with %d vectors.", d, vectors.shape[0])
    return TwoDesign(vectors)


def mub_overlap_residual(design: TwoDesign, basis_size: Optional[int] = None) -> float:
    """Max deviation from orthonormality within bases and from 1/d across bases."""
    d = design.dim
    size = basis_size or d
    overlaps = np.abs(design.vectors.conj() @ design.vectors.T) ** 2
    labels = np.arange(design.count) // size
    same = labels[:, None] == labels[None, :]
    target = np.where(same, np.eye(design.count), 1.0 / d)
    return float(np.max(np.abs(overlaps - target)))


def frame_residual(design: TwoDesign) -> float:
    d, big_d = design.dim, design.count
    frame = design.projectors().sum(axis=0)
    return float(np.max(np.abs(frame - (big_d / d) * np.eye(d))))


def second_moment_residual(design: TwoDesign) -> float:
    """Max entry deviation of (1/D)Σ P_m⊗P_m from 2/(d(d+1))·(I + SWAP)/2."""
    d = design.dim
    proj = design.projectors()
    moment = np.einsum("mab,mce->acbe", proj, proj).reshape(d * d, d * d) / design.count
    swap = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            swap[i * d + j, j * d + i] = 1.0
    sym_projector = 0.5 * (np.eye(d * d) + swap)
    return float(np.max(np.abs(moment - 2.0 / (d * (d + 1)) * sym_projector)))


def moment_residual(design: TwoDesign, m: np.ndarray) -> float:
    """|(1/D)Σ⟨v_m|M|v_m⟩² − (Tr M² + (Tr M)²)/(d(d+1))| for one Hermitian M."""
    d = design.dim
    v = design.vectors
    expectations = np.einsum("ma,ab,mb->m", v.conj(), m, v).real
    lhs = np.mean(expectations ** 2)
    rhs = (np.trace(m @ m).real + np.trace(m).real ** 2) / (d * (d + 1))
    return float(abs(lhs - rhs))


def verify_two_design(design: TwoDesign, trials: int, rng: np.random.Generator) -> TwoDesignReport:
    """
    Checks the squared moment identity on random Hermitian matrices plus the
    frame and symmetric-subspace identities.

    Args:
        design: Candidate design.
        trials: Number of random Hermitian test matrices.
        rng: Generator for the test matrices.

    Returns:
        TwoDesignReport; passed iff every residual is within TAU_DESIGN.
    """
    worst = 0.0
    for _ in range(trials):
        worst = max(worst, moment_residual(design, qmat.random_hermitian(design.dim, rng)))
    frame = frame_residual(design)
    symmetric = second_moment_residual(design)
    passed = worst <= TAU_DESIGN and frame <= TAU_DESIGN and symmetric <= TAU_DESIGN
    return TwoDesignReport(moment_residual=worst, frame_residual=frame,
                           symmetric_residual=symmetric, passed=passed)


def design_probabilities(design: TwoDesign, rho: qmat.MatrixLike) -> np.ndarray:
    """Outcome law p_ρ(m) = (d/D)⟨v_m|ρ|v_m⟩ of the non-gentle design measurement."""
    rho = qmat.as_matrix(rho)
    if rho.shape != (design.dim, design.dim):
        raise ValueError(f"Dimension mismatch: state {rho.shape} vs design dim {design.dim}.")
    v = design.vectors
    p = np.einsum("ma,ab,mb->m", v.conj(), rho, v).real * design.dim / design.count
    return np.clip(p, 0.0, None)


def design_to_json(design: TwoDesign) -> Dict[str, Any]:
    return {
        "dim": design.dim,
        "count": design.count,
        "vectors": [[v.real.tolist(), v.imag.tolist()] for v in design.vectors],
    }


def design_from_json(payload: Union[str, Dict[str, Any]]) -> TwoDesign:
    if isinstance(payload, str):
        payload = json.loads(payload)
    vectors = np.array([np.asarray(re) + 1j * np.asarray(im) for re, im in payload["vectors"]])
    if vectors.shape != (payload["count"], payload["dim"]):
        raise ValueError("Design payload shape does not match its dim/count fields.")
    return TwoDesign(vectors)
