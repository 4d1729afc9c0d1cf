"""
This module contains the certification test built on gentle outcomes:
bit counts N_m, the collision statistic T_n, the threshold c and the
decision Δ_n = 1{T_n > c}.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

from . import designs
from . import gentle_povm
from . import qmat

logger = logging.getLogger(__name__)

TAU_PROBVEC = 1e-10


@dataclass(frozen=True)
class CountVector:
    """Column sums N_m of n outcome bitstrings."""
    counts: np.ndarray
    n: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1:
            raise ValueError("Counts must be a vector.")
        if self.n < 0 or np.any(counts < 0) or np.any(counts > self.n):
            raise ValueError(f"Counts must lie in [0, n={self.n}].")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "n", int(self.n))

    @property
    def count(self) -> int:
        return self.counts.shape[0]


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    statistic: float
    threshold: float
    reject: bool
    n: int
    alpha: float
    epsilon: float
    d: int
    D: int

    def __post_init__(self):
        if self.reject != (self.statistic > self.threshold):
            raise ValueError("reject must equal statistic > threshold.")

    def to_json_row(self, **extra: Any) -> Dict[str, Any]:
        row = asdict(self)
        row["reject"] = bool(self.reject)
        row.update(extra)
        return row


def counts_from_outcomes(outcomes: Union[np.ndarray, Sequence[gentle_povm.OutcomeLike]],
                         count: Optional[int] = None) -> CountVector:
    """
    Counts how often each bit is set.

    Args:
        outcomes: n outcomes of equal length D.
        count: D; required when outcomes is empty.

    Returns:
        CountVector with N_m and n.
    """
    if len(outcomes) == 0:
        if count is None:
            raise ValueError("Outcome length D is required for an empty outcome list.")
        return CountVector(np.zeros(count, dtype=np.int64), 0)
    if isinstance(outcomes, np.ndarray) and outcomes.ndim == 2:
        if count is not None and outcomes.shape[1] != count:
            raise ValueError(f"Outcomes have length {outcomes.shape[1]}, expected {count}.")
        return CountVector(outcomes.astype(np.int64).sum(axis=0), outcomes.shape[0])
    rows = [o.bits if isinstance(o, gentle_povm.Outcome) else np.asarray(o) for o in outcomes]
    lengths = {r.shape[0] for r in rows}
    if len(lengths) != 1 or (count is not None and lengths != {count}):
        raise ValueError(f"Outcomes have inconsistent lengths {sorted(lengths)}.")
    z = np.asarray(rows, dtype=np.int64)
    return CountVector(z.sum(axis=0), z.shape[0])


def _centering(alpha: float, p0: np.ndarray, beta: Optional[float]) -> np.ndarray:
    p0 = np.asarray(p0, dtype=float)
    if abs(p0.sum() - 1.0) > TAU_PROBVEC or np.any(p0 < -TAU_PROBVEC):
        raise ValueError(f"p0 must be a probability vector (sum {p0.sum()}).")
    beta = (1.0 - alpha) / 2.0 if beta is None else beta
    return alpha * p0 + beta


def statistic_tn(counts: CountVector, alpha: float, p0: np.ndarray, beta: Optional[float] = None) -> float:
    """
    T_n = Σ_m [(N_m − n q_m)² − N_m(1 − 2q_m) − n q_m²] with q_m = α p0(m) + β.

    β defaults to (1 − α)/2, which equals 1/(e^{δ/2}+1) when α = tanh(δ/4).
    """
    n = counts.n
    if n < 2:
        raise ValueError(f"The statistic needs n >= 2 outcomes, got n={n}.")
    q = _centering(alpha, p0, beta)
    if q.shape[0] != counts.count:
        raise ValueError(f"p0 has length {q.shape[0]}, counts have length {counts.count}.")
    big_n = counts.counts.astype(float)
    return float(np.sum((big_n - n * q) ** 2 - big_n * (1 - 2 * q) - n * q ** 2))


def threshold(n: int, alpha: float, epsilon: float, D: int, d: int) -> float:
    """c = n(n−1)α²ε²/(2Dd)."""
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}.")
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}.")
    if not 0.0 < alpha <= 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2], got {alpha}.")
    if D < 1 or d < 1:
        raise ValueError(f"D and d must be positive, got D={D}, d={d}.")
    return n * (n - 1) * alpha ** 2 * epsilon ** 2 / (2.0 * D * d)


def expected_statistic(alpha: float, p: np.ndarray, p0: np.ndarray, n: int) -> float:
    """E[T_n] = n(n−1)α²‖p − p0‖₂²."""
    diff = np.asarray(p, dtype=float) - np.asarray(p0, dtype=float)
    return float(n * (n - 1) * alpha ** 2 * diff @ diff)


def statistic_variance_bound(alpha: float, p: np.ndarray, p0: np.ndarray, n: int, D: int) -> float:
    """2Dn² + 5n³α²‖p − p0‖₂²."""
    diff = np.asarray(p, dtype=float) - np.asarray(p0, dtype=float)
    return float(2 * D * n ** 2 + 5 * n ** 3 * alpha ** 2 * diff @ diff)


def run_certification(povm: gentle_povm.GentlePovm, rho_true: qmat.MatrixLike, rho0: qmat.MatrixLike,
                      n: int, epsilon: float, rng: np.random.Generator, sampler: str = "outcomes") -> TestResult:
    """
    Runs the test on n copies of rho_true against the null rho0.

    Args:
        povm: Gentle measurement applied to every copy.
        rho_true: State the copies are drawn from.
        rho0: Hypothesized state.
        n: Number of copies, at least 2.
        epsilon: Trace-distance separation of the alternative.
        rng: Generator owned by this run.
        sampler: 'outcomes' draws every bitstring, 'counts' draws the column
            sums directly (same distribution, no n×D array).

    Returns:
        TestResult.
    """
    d, big_d = povm.dim, povm.count
    rho_true, rho0 = qmat.as_matrix(rho_true), qmat.as_matrix(rho0)
    if rho_true.shape != (d, d) or rho0.shape != (d, d):
        raise ValueError(f"States must be {d}x{d}, got {rho_true.shape} and {rho0.shape}.")
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}.")
    c = threshold(n, povm.alpha, epsilon, big_d, d)
    if sampler == "outcomes":
        counts = counts_from_outcomes(gentle_povm.sample_outcomes(povm, rho_true, n, rng))
    elif sampler == "counts":
        counts = CountVector(gentle_povm.sample_counts(povm, rho_true, n, rng), n)
    else:
        raise ValueError(f"Unknown sampler {sampler!r}; use 'outcomes' or 'counts'.")
    p0 = designs.design_probabilities(povm.design, rho0)
    t = statistic_tn(counts, povm.alpha, p0 / p0.sum(), beta=povm.beta)
    logger.debug("T_n=%.4f threshold=%.4f n=%d", t, c, n)
    return TestResult(statistic=t, threshold=c, reject=t > c, n=n, alpha=povm.alpha,
                      epsilon=epsilon, d=d, D=big_d)
