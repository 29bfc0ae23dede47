"""Grover search over a phase oracle with an explicit marked set.

One Grover iteration negates the marked amplitudes, then reflects every
amplitude about the current mean (a -> 2*mean - a). With M of N items
marked and sin(theta) = sqrt(M/N), the marked mass after k iterations is
sin^2((2k + 1) * theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qlp.errors import DomainError
from qlp.seeding import make_rng
from qlp.statevector import MAX_QUBITS, Gate, StateVector, sample_counts


@dataclass(frozen=True)
class GroverOracle:
    n_qubits: int
    marked: frozenset

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise DomainError("grover.qubit_count", f"qubit count {self.n_qubits} outside [1, {MAX_QUBITS}]")
        marked = frozenset(int(i) for i in self.marked)
        object.__setattr__(self, "marked", marked)
        size = 1 << self.n_qubits
        if not marked:
            raise DomainError("grover.no_marked", "oracle marks no basis state")
        if len(marked) >= size:
            raise DomainError("grover.all_marked", "oracle marks every basis state")
        if min(marked) < 0 or max(marked) >= size:
            raise DomainError("grover.index_range", f"marked index outside [0, {size})")

    @classmethod
    def from_predicate(cls, n_qubits: int, predicate) -> GroverOracle:
        """Materialize ``predicate(index) -> bool`` over all 2**n indices."""
        return cls(n_qubits, frozenset(i for i in range(1 << n_qubits) if predicate(i)))

    @property
    def size(self) -> int:
        return 1 << self.n_qubits

    def marked_array(self) -> np.ndarray:
        return np.fromiter(sorted(self.marked), dtype=np.int64)


def uniform_superposition(n: int) -> StateVector:
    if not 1 <= n <= MAX_QUBITS:
        raise DomainError("grover.qubit_count", f"qubit count {n} outside [1, {MAX_QUBITS}]")
    size = 1 << n
    return StateVector(np.full(size, 1.0 / math.sqrt(size), dtype=np.complex128), check=False)


def uniform_by_hadamards(n: int) -> StateVector:
    state = StateVector.basis(n, 0)
    for q in range(n):
        state.apply(Gate.h(q))
    return state


def _iterate_inplace(amps: np.ndarray, marked: np.ndarray) -> None:
    amps[marked] *= -1.0
    mean = amps.mean()
    np.subtract(2.0 * mean, amps, out=amps)


def apply_grover_iteration(state: StateVector, oracle: GroverOracle) -> StateVector:
    if state.n_qubits != oracle.n_qubits:
        raise DomainError(
            "grover.dimension_mismatch",
            f"{state.n_qubits}-qubit state vs {oracle.n_qubits}-qubit oracle",
        )
    out = state.copy()
    _iterate_inplace(out.amplitudes, oracle.marked_array())
    return out


def _check_counts(N: int, M: int) -> None:
    if not 1 <= M < N:
        raise DomainError("grover.marked_count", f"need 1 <= M < N, got M={M}, N={N}")


def optimal_iterations(N: int, M: int = 1) -> int:
    _check_counts(N, M)
    return math.floor(math.pi / 4 * math.sqrt(N / M))


def closed_form_success(N: int, M: int, k: int) -> float:
    _check_counts(N, M)
    if k < 0:
        raise DomainError("grover.iterations", f"iteration count must be >= 0, got {k}")
    theta = math.asin(math.sqrt(M / N))
    return math.sin((2 * k + 1) * theta) ** 2


@dataclass
class GroverResult:
    measured: int
    success: bool
    iterations: int
    exact_probability: float
    closed_form_probability: float
    counts: dict
    seed: int
    state: StateVector | None = None

    def to_dict(self) -> dict:
        return {
            "measured": self.measured,
            "success": self.success,
            "k": self.iterations,
            "exact_probability": self.exact_probability,
            "closed_form_probability": self.closed_form_probability,
            "counts": {str(i): c for i, c in sorted(self.counts.items())},
            "seed": self.seed,
        }


def marked_mass(state: StateVector, oracle: GroverOracle) -> float:
    amps = state.amplitudes[oracle.marked_array()]
    return float(np.vdot(amps, amps).real)


def grover_search(oracle: GroverOracle, k: int | None = None, shots: int = 1, seed: int = 0,
                  keep_state: bool = False) -> GroverResult:
    """Run k iterations (default: optimal) and sample ``shots`` measurements.

    ``measured`` is the most frequent outcome, lowest index on ties.
    """
    N, M = oracle.size, len(oracle.marked)
    if k is None:
        k = optimal_iterations(N, M)
    if k < 0:
        raise DomainError("grover.iterations", f"iteration count must be >= 0, got {k}")
    state = uniform_superposition(oracle.n_qubits)
    marked = oracle.marked_array()
    for _ in range(k):
        _iterate_inplace(state.amplitudes, marked)
    counts = sample_counts(state, shots, seed)
    measured = counts.most_frequent()
    return GroverResult(
        measured=measured,
        success=measured in oracle.marked,
        iterations=k,
        exact_probability=marked_mass(state, oracle),
        closed_form_probability=closed_form_success(N, M, k),
        counts=counts.histogram,
        seed=int(seed),
        state=state if keep_state else None,
    )


def sample_uniform(n: int, seed: int) -> int:
    """One draw from the uniform superposition on ``n`` qubits."""
    return int(make_rng(seed).integers(1 << n))
