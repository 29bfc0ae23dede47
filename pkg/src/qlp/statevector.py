"""Dense state-vector simulation.

Qubit ordering is little-endian: qubit ``q`` is bit ``q`` of the basis-state
index, so qubit 0 is the least significant bit. Gates are applied through
reshaped numpy views over amplitude pairs; no 2^n x 2^n matrix is ever built
outside the small-n ``gate_matrix`` self-test helper.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from qlp.errors import DomainError
from qlp.seeding import make_rng

MAX_QUBITS = 24
NORM_TOL = 1e-9

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise DomainError(
            "statevector.qubit_count", f"qubit count {n} outside [1, {MAX_QUBITS}]"
        )


class StateVector:
    """A normalized vector of 2**n complex amplitudes."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, amplitudes, check: bool = True):
        amps = np.ascontiguousarray(amplitudes, dtype=np.complex128).reshape(-1)
        size = amps.size
        n = size.bit_length() - 1
        if size < 2 or size != 1 << n:
            raise DomainError(
                "statevector.dimension", f"amplitude count {size} is not 2**n with n >= 1"
            )
        _check_n(n)
        if check:
            norm2 = float(np.vdot(amps, amps).real)
            if abs(norm2 - 1.0) > NORM_TOL:
                raise DomainError(
                    "statevector.not_normalized", f"squared norm {norm2!r} differs from 1"
                )
        self.n_qubits = n
        self.amplitudes = amps

    @classmethod
    def basis(cls, n: int, index: int = 0) -> StateVector:
        _check_n(n)
        if not 0 <= index < (1 << n):
            raise DomainError(
                "statevector.index_range", f"basis index {index} out of range for {n} qubits"
            )
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps, check=False)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def __len__(self) -> int:
        return self.amplitudes.size

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"

    def copy(self) -> StateVector:
        return StateVector(self.amplitudes.copy(), check=False)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def apply(self, gate: Gate) -> StateVector:
        """Apply ``gate`` in place and return ``self``."""
        _apply_inplace(self.amplitudes, self.n_qubits, gate)
        return self

    def to_json(self) -> str:
        """Debug dump: a JSON array of ``[re, im]`` pairs."""
        return json.dumps([[float(a.real), float(a.imag)] for a in self.amplitudes])

    @classmethod
    def from_json(cls, text: str) -> StateVector:
        pairs = np.asarray(json.loads(text), dtype=float)
        return cls(pairs[:, 0] + 1j * pairs[:, 1])


@dataclass(frozen=True)
class Gate:
    """A gate kind plus the qubits it acts on.

    ``qubits`` is ``(target,)`` for single-qubit kinds, ``(a, b)`` for CZ and
    SWAP, and ``(control, a, b)`` for CSWAP. PHASE_FLIP carries no qubits; it
    negates the amplitudes of the basis indices in ``marked``.
    """

    kind: str
    qubits: tuple = ()
    theta: float = 0.0
    marked: frozenset = field(default_factory=frozenset)

    KINDS = ("H", "X", "Z", "RY", "CZ", "SWAP", "CSWAP", "PHASE_FLIP")
    ARITY = {"H": 1, "X": 1, "Z": 1, "RY": 1, "CZ": 2, "SWAP": 2, "CSWAP": 3, "PHASE_FLIP": 0}

    def __post_init__(self):
        if self.kind not in self.ARITY:
            raise DomainError("statevector.gate_kind", f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != self.ARITY[self.kind]:
            raise DomainError(
                "statevector.gate_arity",
                f"{self.kind} takes {self.ARITY[self.kind]} qubit indices, got {len(self.qubits)}",
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise DomainError(
                "statevector.duplicate_qubit", f"{self.kind} qubit indices must be distinct"
            )

    @classmethod
    def h(cls, q: int) -> Gate:
        return cls("H", (q,))

    @classmethod
    def x(cls, q: int) -> Gate:
        return cls("X", (q,))

    @classmethod
    def z(cls, q: int) -> Gate:
        return cls("Z", (q,))

    @classmethod
    def ry(cls, q: int, theta: float) -> Gate:
        return cls("RY", (q,), theta=float(theta))

    @classmethod
    def cz(cls, a: int, b: int) -> Gate:
        return cls("CZ", (a, b))

    @classmethod
    def swap(cls, a: int, b: int) -> Gate:
        return cls("SWAP", (a, b))

    @classmethod
    def cswap(cls, control: int, a: int, b: int) -> Gate:
        return cls("CSWAP", (control, a, b))

    @classmethod
    def phase_flip(cls, marked) -> Gate:
        return cls("PHASE_FLIP", (), marked=frozenset(int(i) for i in marked))

    def inverse(self) -> Gate:
        if self.kind == "RY":
            return Gate("RY", self.qubits, theta=-self.theta)
        # every other kind is self-inverse
        return self


def _single_qubit_view(amps: np.ndarray, q: int) -> np.ndarray:
    return amps.reshape(-1, 2, 1 << q)


def _tensor_view(amps: np.ndarray, n: int) -> np.ndarray:
    return amps.reshape((2,) * n)


def _axis(n: int, q: int) -> int:
    # C-order reshape puts the most significant bit on axis 0
    return n - 1 - q


def _apply_inplace(amps: np.ndarray, n: int, gate: Gate) -> None:
    for q in gate.qubits:
        if not 0 <= q < n:
            raise DomainError(
                "statevector.qubit_range", f"qubit {q} out of range for {n}-qubit state"
            )
    kind = gate.kind
    if kind == "PHASE_FLIP":
        if not gate.marked:
            return
        idx = np.fromiter(gate.marked, dtype=np.int64)
        if idx.min() < 0 or idx.max() >= amps.size:
            raise DomainError("statevector.index_range", "phase-flip index outside the state")
        amps[idx] *= -1.0
        return

    if len(gate.qubits) == 1:
        view = _single_qubit_view(amps, gate.qubits[0])
        lo = view[:, 0, :]
        hi = view[:, 1, :]
        if kind == "X":
            tmp = lo.copy()
            lo[...] = hi
            hi[...] = tmp
        elif kind == "Z":
            hi *= -1.0
        elif kind == "H":
            tmp = lo.copy()
            lo += hi
            lo *= _INV_SQRT2
            tmp -= hi
            tmp *= _INV_SQRT2
            hi[...] = tmp
        else:  # RY
            c = math.cos(gate.theta / 2.0)
            s = math.sin(gate.theta / 2.0)
            tmp = lo.copy()
            lo[...] = c * tmp - s * hi
            hi[...] = s * tmp + c * hi
        return

    t = _tensor_view(amps, n)
    if kind == "CZ":
        sl = [slice(None)] * n
        sl[_axis(n, gate.qubits[0])] = 1
        sl[_axis(n, gate.qubits[1])] = 1
        t[tuple(sl)] *= -1.0
    elif kind == "SWAP":
        a, b = (_axis(n, q) for q in gate.qubits)
        t[...] = np.swapaxes(t, a, b).copy()
    else:  # CSWAP
        c, a, b = (_axis(n, q) for q in gate.qubits)
        sl = [slice(None)] * n
        sl[c] = 1
        sub = t[tuple(sl)]
        # dropping the control axis shifts the axes behind it
        a -= a > c
        b -= b > c
        sub[...] = np.swapaxes(sub, a, b).copy()


def new_basis_state(n: int, index: int) -> StateVector:
    return StateVector.basis(n, index)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Return a new state with ``gate`` applied; ``state`` is left untouched."""
    return state.copy().apply(gate)


def apply_controlled_swap(state: StateVector, control: int, a: int, b: int) -> StateVector:
    return apply_gate(state, Gate.cswap(control, a, b))


def qubit_probability(state: StateVector, qubit: int, outcome: int) -> float:
    """Probability that measuring ``qubit`` yields ``outcome``."""
    if not 0 <= qubit < state.n_qubits:
        raise DomainError(
            "statevector.qubit_range",
            f"qubit {qubit} out of range for {state.n_qubits}-qubit state",
        )
    if outcome not in (0, 1):
        raise DomainError("statevector.outcome", f"outcome must be 0 or 1, got {outcome!r}")
    view = _single_qubit_view(state.amplitudes, qubit)[:, outcome, :]
    p = float(np.vdot(view, view).real)
    return min(max(p, 0.0), 1.0)


@dataclass
class MeasurementCounts:
    shots: int
    histogram: dict
    seed: int

    def frequency(self, index: int) -> float:
        return self.histogram.get(index, 0) / self.shots

    def most_frequent(self) -> int:
        # lowest index wins ties
        return min(self.histogram, key=lambda i: (-self.histogram[i], i))

    def to_dict(self) -> dict:
        return {
            "shots": self.shots,
            "seed": self.seed,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }


def sample_counts(state: StateVector, shots: int, seed: int) -> MeasurementCounts:
    """Draw ``shots`` computational-basis measurements from ``state``.

    The per-shot draws are aggregated with a single multinomial draw, which has
    the same distribution as independent categorical draws.
    """
    if shots < 1:
        raise DomainError("statevector.shots", f"shots must be >= 1, got {shots}")
    probs = state.probabilities()
    probs = probs / probs.sum()
    counts = make_rng(seed).multinomial(shots, probs)
    nz = np.flatnonzero(counts)
    return MeasurementCounts(shots, {int(i): int(counts[i]) for i in nz}, int(seed))


def overlap(a: StateVector, b: StateVector) -> complex:
    """Inner product <a|b>."""
    if a.n_qubits != b.n_qubits:
        raise DomainError(
            "statevector.dimension_mismatch",
            f"cannot overlap {a.n_qubits}- and {b.n_qubits}-qubit states",
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def tensor(*states: StateVector) -> StateVector:
    """Product state with ``states[0]`` on the lowest qubits."""
    amps = np.ones(1, dtype=np.complex128)
    for s in states:
        amps = np.kron(s.amplitudes, amps)
    return StateVector(amps, check=False)


def gate_matrix(gate: Gate, n: int) -> np.ndarray:
    """Dense matrix of ``gate`` on ``n`` qubits, column j = gate applied to |j>.

    For self-tests only; cost is O(4**n).
    """
    dim = 1 << n
    cols = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(dim):
        col = np.zeros(dim, dtype=np.complex128)
        col[j] = 1.0
        _apply_inplace(col, n, gate)
        cols[:, j] = col
    return cols


def is_unitary(matrix: np.ndarray, atol: float = 1e-12) -> bool:
    eye = np.eye(matrix.shape[0])
    return bool(np.allclose(matrix.conj().T @ matrix, eye, atol=atol, rtol=0.0))
