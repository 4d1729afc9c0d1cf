"""
This module contains the sweep engine that runs seeded certification trials
over a grid of (d, α, ε, n) cells and persists one record per trial.
"""
import functools
import itertools
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from . import certify
from . import designs
from . import gentle_povm
from . import lowerbound
from . import qmat
from .config_parser import SweepConfig

logger = logging.getLogger(__name__)

LABELS = ("null", "alt")
ALT_OVERSHOOT = 1e-6
MAX_RESAMPLES = 1000


@dataclass(frozen=True)
class Cell:
    d: int
    alpha: float
    epsilon: float
    n: int


@dataclass(frozen=True)
class TrialRecord:
    name: str
    d: int
    D: int
    alpha: float
    epsilon: float
    n: int
    trial: int
    label: str
    seed: int
    stream: int
    truth_distance: float
    statistic: float
    threshold: float
    reject: bool
    wall_time: float

    @property
    def key(self) -> Tuple:
        return record_key(self.name, self.seed, self.d, self.alpha, self.epsilon, self.n, self.trial, self.label)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def record_key(name: str, seed: int, d: int, alpha: float, epsilon: float, n: int, trial: int,
               label: str) -> Tuple:
    return (str(name), int(seed), int(d), round(float(alpha), 12), round(float(epsilon), 12),
            int(n), int(trial), str(label))


@functools.lru_cache(maxsize=None)
def gentle_povm_for(d: int, alpha: float) -> gentle_povm.GentlePovm:
    return gentle_povm.GentlePovm.from_alpha(designs.build_mub_design(d), alpha)


@functools.lru_cache(maxsize=None)
def _worst_direction(d: int, alpha: float) -> np.ndarray:
    s = lowerbound.gentle_superop(gentle_povm_for(d, alpha), mode="classes")
    return s.eigen_matrices()[0]


@functools.lru_cache(maxsize=None)
def _least_sensitive_directions(d: int, alpha: float) -> np.ndarray:
    # The ⌈d²/2⌉ traceless eigen-directions of the gentle POVM with the smallest eigenvalues.
    count, _ = lowerbound.direction_range(d)
    s = lowerbound.gentle_superop(gentle_povm_for(d, alpha), mode="classes")
    return s.eigen_matrices()[:count]


def _scale_to_distance(direction: np.ndarray, epsilon: float) -> np.ndarray:
    evals = np.linalg.eigvalsh(direction)
    return direction * (epsilon * (1 + ALT_OVERSHOOT) / (0.5 * np.abs(evals).sum()))


def _is_state(delta: np.ndarray, d: int) -> bool:
    return np.linalg.eigvalsh(delta)[0] + 1.0 / d >= -qmat.TAU_PSD


def make_alternative(kind: str, d: int, alpha: float, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """
    An alternative state at trace distance at least ε from I/d.

    Args:
        kind: 'pure' (|0⟩⟨0|), 'random_admissible' (uniform ±1 combination of
            the gentle POVM's ⌈d²/2⌉ least sensitive directions, rescaled to
            distance ε and resampled until it is a state) or 'worst_case'
            (the single least sensitive direction).
        d: Dimension.
        alpha: Gentleness of the measurement.
        epsilon: Separation.
        rng: Generator for 'random_admissible'.

    Returns:
        The d×d density matrix.
    """
    rho0 = np.eye(d) / d
    if kind == "pure":
        if (d - 1) / d <= epsilon:
            raise ValueError(f"|0><0| is only {(d - 1) / d:.3f} from I/d; epsilon={epsilon} is too large.")
        state = np.zeros((d, d), dtype=np.complex128)
        state[0, 0] = 1.0
        return state
    if kind == "random_admissible":
        directions = _least_sensitive_directions(d, alpha)
        for _ in range(MAX_RESAMPLES):
            nu = rng.choice(np.array([-1.0, 1.0]), size=len(directions))
            direction = np.einsum("i,iab->ab", nu, directions)
            delta = _scale_to_distance(direction, epsilon)
            if _is_state(delta, d):
                return rho0 + delta
        raise ValueError(f"No admissible random alternative found at d={d}, epsilon={epsilon}.")
    if kind == "worst_case":
        delta = _scale_to_distance(_worst_direction(d, alpha), epsilon)
        if not _is_state(delta, d):
            raise ValueError(f"The worst-case direction at epsilon={epsilon} leaves the state space for d={d}.")
        return rho0 + delta
    raise ValueError(f"Unknown alternative {kind!r}.")


def build_cells(config: SweepConfig) -> List[Cell]:
    cells = []
    for d, alpha, epsilon in itertools.product(config.dims, config.alphas, config.epsilons):
        for n in config.sample_size.sizes(d, alpha, epsilon):
            cells.append(Cell(d=d, alpha=alpha, epsilon=epsilon, n=n))
    return cells


def run_trial(name: str, cell: Cell, trial: int, label: str, seed: int,
              alternative: str, sampler: str) -> TrialRecord:
    """One seeded certification run; the stream is hashed from the cell, trial and label."""
    start = time.perf_counter()
    stream = qmat.derive_stream(cell.d, cell.alpha, cell.epsilon, cell.n, trial, label)
    rng = qmat.make_rng(seed, stream)
    povm = gentle_povm_for(cell.d, cell.alpha)
    rho0 = np.eye(cell.d, dtype=np.complex128) / cell.d
    if label == "null":
        rho_true = rho0
    else:
        rho_true = make_alternative(alternative, cell.d, cell.alpha, cell.epsilon, rng)
    result = certify.run_certification(povm, rho_true, rho0, cell.n, cell.epsilon, rng, sampler=sampler)
    return TrialRecord(name=name, d=cell.d, D=povm.count, alpha=cell.alpha, epsilon=cell.epsilon, n=cell.n,
                       trial=trial, label=label, seed=seed, stream=stream,
                       truth_distance=qmat.trace_norm_dist(rho_true, rho0),
                       statistic=result.statistic, threshold=result.threshold, reject=bool(result.reject),
                       wall_time=time.perf_counter() - start)


def _run_task(task: Tuple) -> TrialRecord:
    return run_trial(*task)


def load_completed_keys(path: str) -> Dict[Tuple, TrialRecord]:
    """Records already present in an NDJSON output file, by key."""
    done: Dict[Tuple, TrialRecord] = {}
    if not os.path.isfile(path):
        return done
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = TrialRecord(**json.loads(line))
            except (json.JSONDecodeError, TypeError) as e:
                logger.warning("Skipping unreadable record on line %d of %s: %s", lineno, path, e)
                continue
            done[record.key] = record
    return done


def iter_tasks(config: SweepConfig) -> Iterable[Tuple]:
    for cell in build_cells(config):
        for trial in range(config.trials):
            for label in LABELS:
                yield (config.name, cell, trial, label, config.seed, config.alternative, config.sampler)


def _task_key(task: Tuple) -> Tuple:
    name, cell, trial, label, seed = task[:5]
    return record_key(name, seed, cell.d, cell.alpha, cell.epsilon, cell.n, trial, label)


def run_sweep(config: SweepConfig, output: Optional[str] = None) -> List[TrialRecord]:
    """
    Runs every (cell, trial, label) of the sweep, appending records as they finish.

    Args:
        config: Validated sweep configuration.
        output: Overrides config.output.

    Returns:
        All records of the sweep in task order, including ones found in the
        output file from an earlier run.
    """
    path = output or config.output
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    done = load_completed_keys(path)
    tasks = list(iter_tasks(config))
    pending = [t for t in tasks if _task_key(t) not in done]
    logger.info("Sweep %s: %d tasks, %d already recorded.", config.name, len(tasks), len(tasks) - len(pending))

    with open(path, "a") as f:
        if config.workers > 1 and len(pending) > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                results = pool.map(_run_task, pending, chunksize=max(1, len(pending) // (8 * config.workers)))
                for record in results:
                    f.write(json.dumps(record.to_dict()) + "\n")
                    f.flush()
                    done[record.key] = record
        else:
            for task in pending:
                record = _run_task(task)
                f.write(json.dumps(record.to_dict()) + "\n")
                f.flush()
                done[record.key] = record

    return [done[_task_key(t)] for t in tasks]
