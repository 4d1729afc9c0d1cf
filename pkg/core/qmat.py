"""
This module provides the complex Hermitian matrix foundation used by every
other module: validated state types, trace/Frobenius distances, spectral
tools, the generalized Gell-Mann operator basis and seedable generators.
"""
import hashlib
import json
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

TAU_HERM = 1e-10
TAU_TRACE = 1e-10
TAU_NORM = 1e-10
TAU_PSD = 1e-9
TAU_EIG = 1e-9

MatrixLike = Union["DensityMatrix", np.ndarray]


@dataclass(frozen=True)
class DensityMatrix:
    """A d×d Hermitian, positive semi-definite, unit-trace matrix."""
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"Density matrix must be square, got shape {m.shape}.")
        if np.max(np.abs(m - m.conj().T)) > TAU_HERM:
            raise ValueError("Density matrix is not Hermitian.")
        if abs(np.trace(m).real - 1.0) > TAU_TRACE:
            raise ValueError(f"Density matrix trace is {np.trace(m).real}, expected 1.")
        if np.linalg.eigvalsh(m)[0] < -TAU_PSD:
            raise ValueError("Density matrix is not positive semi-definite.")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class PureState:
    """A unit-norm amplitude vector in C^d."""
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=np.complex128)
        if v.ndim != 1:
            raise ValueError("Pure state amplitudes must be a vector.")
        if abs(np.linalg.norm(v) - 1.0) > TAU_NORM:
            raise ValueError(f"Pure state norm is {np.linalg.norm(v)}, expected 1.")
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density(self) -> DensityMatrix:
        return DensityMatrix(pure_density(self.amplitudes))


@dataclass(frozen=True)
class HermitianBasis:
    """Orthonormal basis (V_j) of the d×d Hermitian matrices, identity/√d last.

    `elements` has shape (d², d, d). All elements except the last are traceless.
    """
    elements: np.ndarray

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return self.elements.shape[0]


def as_matrix(m: MatrixLike) -> np.ndarray:
    """Returns the raw complex array behind a DensityMatrix or array-like."""
    if isinstance(m, DensityMatrix):
        return m.entries
    return np.asarray(m, dtype=np.complex128)


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"Dimension mismatch: {a.shape} vs {b.shape}.")


def trace_norm_dist(a: MatrixLike, b: MatrixLike) -> float:
    """
    Trace distance ½ Tr|a − b| between two states.

    Args:
        a: First density matrix.
        b: Second density matrix, same dimension.

    Returns:
        Half the sum of absolute eigenvalues of a − b.
    """
    a, b = as_matrix(a), as_matrix(b)
    _check_same_dim(a, b)
    diff = a - b
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def frobenius_dist(a: MatrixLike, b: MatrixLike) -> float:
    """Frobenius distance Tr[(a − b)²]^{1/2}."""
    a, b = as_matrix(a), as_matrix(b)
    _check_same_dim(a, b)
    return float(np.linalg.norm(a - b, "fro"))


def is_hermitian(m: np.ndarray, tol: float = TAU_HERM) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T)) <= tol


def spectral_decomp(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Spectral decomposition of a Hermitian matrix.

    Args:
        m: Hermitian matrix (within TAU_HERM).

    Returns:
        (eigenvalues ascending, eigenvectors as columns).
    """
    m = np.asarray(m, dtype=np.complex128)
    if not is_hermitian(m):
        raise ValueError("spectral_decomp requires a Hermitian matrix.")
    evals, evecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    return evals, evecs


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Positive square root of a PSD matrix, eigenvalues clamped at zero."""
    evals, evecs = spectral_decomp(m)
    if evals[0] < -TAU_PSD:
        raise ValueError(f"Matrix is not PSD (min eigenvalue {evals[0]:.3e}).")
    if evals[0] < 0:
        logger.debug("Clamping eigenvalue %.3e to zero before square root.", evals[0])
    root = np.sqrt(np.clip(evals, 0.0, None))
    return (evecs * root) @ evecs.conj().T


def pure_density(amplitudes: np.ndarray) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=np.complex128)
    return np.outer(v, v.conj())


def _gell_mann(j: int, k: int, d: int) -> np.ndarray:
    # Unnormalized generalized Gell-Mann matrix, 0-based indices.
    g = np.zeros((d, d), dtype=np.complex128)
    if j < k:
        g[j, k] = g[k, j] = 1.0
    elif j > k:
        g[k, j] = -1j
        g[j, k] = 1j
    else:
        l = j + 1
        g[np.arange(l), np.arange(l)] = 1.0
        g[l, l] = -l
    return g


def hermitian_basis(d: int) -> HermitianBasis:
    """
    Orthonormal generalized Gell-Mann basis with identity/√d in the last slot.

    Order: for every pair j < k the symmetric then antisymmetric element,
    then the d − 1 diagonal elements, then the identity. For d = 2 this is
    (X, Y, Z, I)/√2.

    Args:
        d: Hilbert space dimension, at least 2.

    Returns:
        The HermitianBasis of d² elements.
    """
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise ValueError(f"hermitian_basis requires d >= 2, got {d}.")
    elements: List[np.ndarray] = []
    for j in range(d):
        for k in range(j + 1, d):
            elements.append(_gell_mann(j, k, d))
            elements.append(_gell_mann(k, j, d))
    for l in range(d - 1):
        elements.append(_gell_mann(l, l, d))
    elements.append(np.eye(d, dtype=np.complex128))
    stacked = np.array(elements)
    norms = np.sqrt(np.einsum("jab,jab->j", stacked.conj(), stacked).real)
    return HermitianBasis(stacked / norms[:, None, None])


def basis_gram(basis: HermitianBasis) -> np.ndarray:
    """Gram matrix Tr[V_j* V_k] of the basis."""
    v = basis.elements
    return np.einsum("jab,kab->jk", v.conj(), v)


def expand_in_basis(a: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    """Real coefficients Tr[V_j A] of a Hermitian A."""
    return np.einsum("jab,ba->j", basis.elements, np.asarray(a)).real


def combine_from_basis(coeffs: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    return np.einsum("j,jab->ab", np.asarray(coeffs, dtype=float), basis.elements)


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for a (seed, stream) pair; identical pairs give identical sequences."""
    seq = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                 spawn_key=(int(stream) & 0xFFFFFFFFFFFFFFFF,))
    return np.random.Generator(np.random.PCG64(seq))


def derive_stream(*keys: Any) -> int:
    """64-bit stream id hashed from arbitrary printable keys."""
    payload = "|".join(str(k) for k in keys).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")


def random_pure_state(d: int, rng: np.random.Generator) -> PureState:
    """Haar-random pure state from a normalized complex Gaussian vector."""
    if d < 1:
        raise ValueError(f"Dimension must be positive, got {d}.")
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(v / np.linalg.norm(v))


def random_density(d: int, rng: np.random.Generator, components: Optional[int] = None) -> DensityMatrix:
    """Mixture of Haar pure states with uniform Dirichlet weights."""
    if d < 1:
        raise ValueError(f"Dimension must be positive, got {d}.")
    k = components or d
    weights = rng.dirichlet(np.ones(k))
    rho = np.zeros((d, d), dtype=np.complex128)
    for w in weights:
        rho += w * pure_density(random_pure_state(d, rng).amplitudes)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


def maximally_mixed(d: int) -> DensityMatrix:
    if d < 1:
        raise ValueError(f"Dimension must be positive, got {d}.")
    return DensityMatrix(np.eye(d, dtype=np.complex128) / d)


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (g + g.conj().T)


def matrix_to_json(m: MatrixLike) -> Dict[str, Any]:
    m = as_matrix(m)
    return {"dim": int(m.shape[0]), "re": m.real.ravel().tolist(), "im": m.imag.ravel().tolist()}


def matrix_from_json(payload: Union[str, Dict[str, Any]]) -> np.ndarray:
    if isinstance(payload, str):
        payload = json.loads(payload)
    d = int(payload["dim"])
    re = np.asarray(payload["re"], dtype=float)
    im = np.asarray(payload["im"], dtype=float)
    if re.size != d * d or im.size != d * d:
        raise ValueError(f"Matrix payload does not hold {d}x{d} entries.")
    return (re + 1j * im).reshape(d, d)
