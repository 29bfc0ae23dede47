"""Quantum kernel K(x, y) = |<phi(x)|phi(y)>|^2.

Two routes are provided. ``exact`` takes the squared modulus of the
state-vector overlap. ``sampled`` simulates the SWAP-test circuit

    ancilla |0> --H--*--H-- measure
    |phi(x)> --------x-----
    |phi(y)> --------x-----

and converts the ancilla outcome-0 frequency p into K = clamp(2p - 1, 0, 1),
using the circuit identity P(0) = (1 + |<phi(x)|phi(y)>|^2) / 2.

Layout inside the SWAP-test register: qubit 0 is the ancilla, qubits
1..r hold phi(x) and qubits r+1..2r hold phi(y).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from qlp.encoding import FeatureMap
from qlp.errors import DomainError
from qlp.seeding import derive_seed, make_rng
from qlp.statevector import MAX_QUBITS, Gate, StateVector, overlap, qubit_probability, tensor


# stream tag keeping cross-kernel seeds apart from (seed, i, j) matrix seeds
_CROSS_STREAM = 0x5EED


@dataclass(frozen=True)
class KernelMode:
    """``exact`` or ``sampled`` with a shot count and seed."""

    kind: str = "exact"
    shots: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("exact", "sampled"):
            raise DomainError("kernel.mode", f"unknown kernel mode {self.kind!r}")
        if self.kind == "sampled":
            if self.shots is None or self.shots < 1:
                raise DomainError("kernel.shots", "sampled mode needs shots >= 1")
            if self.seed is None:
                raise DomainError("kernel.seed", "sampled mode needs a seed")

    @classmethod
    def exact(cls) -> KernelMode:
        return cls("exact")

    @classmethod
    def sampled(cls, shots: int, seed: int) -> KernelMode:
        return cls("sampled", int(shots), int(seed))

    @property
    def is_exact(self) -> bool:
        return self.kind == "exact"

    def to_dict(self) -> dict:
        if self.is_exact:
            return {"kind": "exact"}
        return {"kind": "sampled", "shots": self.shots, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> KernelMode:
        return cls(d["kind"], d.get("shots"), d.get("seed"))


def swap_test_state(phi_x: StateVector, phi_y: StateVector) -> StateVector:
    """State of the SWAP-test circuit just before the ancilla is measured."""
    r = phi_x.n_qubits
    if phi_y.n_qubits != r:
        raise DomainError(
            "kernel.dimension_mismatch", f"register sizes differ: {r} vs {phi_y.n_qubits}"
        )
    if 1 + 2 * r > MAX_QUBITS:
        raise DomainError(
            "kernel.too_many_qubits", f"SWAP test on {r}-qubit registers needs {1 + 2 * r} qubits"
        )
    state = tensor(StateVector.basis(1, 0), phi_x, phi_y)
    state.apply(Gate.h(0))
    for i in range(r):
        state.apply(Gate.cswap(0, 1 + i, 1 + r + i))
    state.apply(Gate.h(0))
    return state


def swap_test_p0(phi_x: StateVector, phi_y: StateVector) -> float:
    return qubit_probability(swap_test_state(phi_x, phi_y), 0, 0)


def swap_test_sampled_p0(phi_x: StateVector, phi_y: StateVector, shots: int, seed: int) -> float:
    """Ancilla outcome-0 frequency over ``shots`` full-register measurements."""
    if shots < 1:
        raise DomainError("kernel.shots", f"shots must be >= 1, got {shots}")
    state = swap_test_state(phi_x, phi_y)
    probs = state.probabilities()
    counts = make_rng(seed).multinomial(shots, probs / probs.sum())
    # ancilla is bit 0, so even indices carry outcome 0
    return float(counts[0::2].sum()) / shots


def exact_kernel(phi_x: StateVector, phi_y: StateVector) -> float:
    return abs(overlap(phi_x, phi_y)) ** 2


def estimate_kernel_entry(x, y, fmap: FeatureMap, mode: KernelMode, seed: int | None = None) -> float:
    """One kernel value. ``seed`` overrides ``mode.seed`` for this entry."""
    phi_x, phi_y = fmap.encode(x), fmap.encode(y)
    if mode.is_exact:
        return exact_kernel(phi_x, phi_y)
    p0 = swap_test_sampled_p0(phi_x, phi_y, mode.shots, mode.seed if seed is None else seed)
    return min(max(2.0 * p0 - 1.0, 0.0), 1.0)


@dataclass
class KernelMatrix:
    entries: np.ndarray
    mode: KernelMode

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries).min())

    def to_dict(self) -> dict:
        d = {"size": self.size, "mode": self.mode.kind}
        if not self.mode.is_exact:
            d["shots"] = self.mode.shots
            d["seed"] = self.mode.seed
        d["entries"] = self.entries.reshape(-1).tolist()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> KernelMatrix:
        m = int(d["size"])
        mode = KernelMode(d["mode"], d.get("shots"), d.get("seed"))
        return cls(np.asarray(d["entries"], dtype=float).reshape(m, m), mode)


def entry_seed(seed: int, i: int, j: int) -> int:
    """Sub-seed for kernel entry (i, j); the pair is unordered."""
    return derive_seed(seed, min(i, j), max(i, j))


def build_kernel_matrix(rows, fmap: FeatureMap, mode: KernelMode) -> KernelMatrix:
    """Gram matrix over ``rows``; upper triangle computed, lower mirrored."""
    x = np.atleast_2d(np.asarray(rows, dtype=float))
    m = x.shape[0]
    if m < 1:
        raise DomainError("kernel.empty", "kernel matrix needs at least one row")
    states = [fmap.encode(r) for r in x]
    k = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            if mode.is_exact:
                v = exact_kernel(states[i], states[j])
            else:
                p0 = swap_test_sampled_p0(states[i], states[j], mode.shots, entry_seed(mode.seed, i, j))
                v = min(max(2.0 * p0 - 1.0, 0.0), 1.0)
            k[i, j] = k[j, i] = v
    if mode.is_exact:
        # diagonal of pure-state encodings, computed rather than assumed
        for i in range(m):
            k[i, i] = exact_kernel(states[i], states[i])
    return KernelMatrix(k, mode)


def cross_kernel(train_rows, rows, fmap: FeatureMap, mode: KernelMode, salt: int = 0) -> np.ndarray:
    """Kernel values between each of ``rows`` and each training row.

    In sampled mode the seed for cell (a, i) is derived from
    ``(mode.seed, salt, a, i)`` on a stream disjoint from the training matrix.
    """
    train = [fmap.encode(r) for r in np.atleast_2d(np.asarray(train_rows, dtype=float))]
    x = np.atleast_2d(np.asarray(rows, dtype=float))
    out = np.empty((x.shape[0], len(train)))
    for a, row in enumerate(x):
        phi = fmap.encode(row)
        for i, t in enumerate(train):
            if mode.is_exact:
                out[a, i] = exact_kernel(t, phi)
            else:
                seed = derive_seed(mode.seed, _CROSS_STREAM, salt, a, i)
                p0 = swap_test_sampled_p0(t, phi, mode.shots, seed)
                out[a, i] = min(max(2.0 * p0 - 1.0, 0.0), 1.0)
    return out
