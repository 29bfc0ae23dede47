"""Ising/QUBO encoding and simulated adiabatic annealing.

Spins map to qubits by ``sigma_i = 1 - 2 * bit_i``: basis bit 0 is spin +1,
bit 1 is spin -1. QUBO variables use the same bits, ``z_i = bit_i``, which is
the substitution ``z_i = (1 - sigma_i) / 2``.

The annealer evolves

    H(t) = A(t) * H_initial + B(t) * H_Ising,   H_initial = -sum_i X_i

from the uniform superposition (ground state of H_initial) by first-order
operator splitting: per step a diagonal phase exp(-i B H_Ising dt) followed
by exp(+i A dt X) on every qubit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from qlp.errors import DomainError
from qlp.seeding import make_rng
from qlp.statevector import MAX_QUBITS, StateVector

MAX_EVOLVE_SPINS = 20
MAX_GAP_SPINS = 8


def _basis_index(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


@dataclass
class IsingModel:
    """Energy sum_{i<j} J_ij s_i s_j + sum_i h_i s_i over spins s in {-1, +1}."""

    n_spins: int
    couplings: dict = field(default_factory=dict)
    fields: np.ndarray | None = None

    def __post_init__(self):
        if not 1 <= self.n_spins <= MAX_QUBITS:
            raise DomainError("annealing.size", f"spin count {self.n_spins} outside [1, {MAX_QUBITS}]")
        if self.fields is None:
            self.fields = np.zeros(self.n_spins)
        self.fields = np.asarray(self.fields, dtype=float).reshape(-1)
        if self.fields.size != self.n_spins:
            raise DomainError("annealing.fields", f"expected {self.n_spins} fields, got {self.fields.size}")
        merged = {}
        for (i, j), v in self.couplings.items():
            i, j = int(i), int(j)
            if i == j:
                raise DomainError("annealing.self_coupling", f"self-coupling on spin {i}")
            if not (0 <= i < self.n_spins and 0 <= j < self.n_spins):
                raise DomainError("annealing.index_range", f"coupling ({i}, {j}) out of range")
            key = (min(i, j), max(i, j))
            merged[key] = merged.get(key, 0.0) + float(v)
        self.couplings = merged
        if not np.all(np.isfinite(self.fields)) or not all(map(math.isfinite, merged.values())):
            raise DomainError("annealing.non_finite", "couplings and fields must be finite")

    def energies(self) -> np.ndarray:
        """Energy of every basis configuration, indexed by basis state."""
        idx = _basis_index(self.n_spins)
        e = np.zeros(idx.size)
        for i, h in enumerate(self.fields):
            if h:
                e += h * (1 - 2 * ((idx >> i) & 1))
        for (i, j), v in self.couplings.items():
            if v:
                e += v * (1 - 2 * (((idx >> i) ^ (idx >> j)) & 1))
        return e

    def scale(self) -> float:
        """Largest absolute coefficient (0 for an empty model)."""
        vals = [abs(v) for v in self.couplings.values()] + list(np.abs(self.fields))
        return max(vals, default=0.0)

    def scaled(self, factor: float) -> IsingModel:
        return IsingModel(
            self.n_spins, {k: v * factor for k, v in self.couplings.items()}, self.fields * factor
        )

    def to_dict(self) -> dict:
        return {
            "type": "ising",
            "n": self.n_spins,
            "linear": {str(i): float(h) for i, h in enumerate(self.fields) if h},
            "quadratic": {f"{i},{j}": v for (i, j), v in sorted(self.couplings.items())},
        }


@dataclass
class Qubo:
    """Binary objective sum_{i<=j} Q_ij z_i z_j + offset over z in {0, 1}."""

    n_vars: int
    Q: dict = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        if not 1 <= self.n_vars <= MAX_QUBITS:
            raise DomainError("annealing.size", f"variable count {self.n_vars} outside [1, {MAX_QUBITS}]")
        merged = {}
        for (i, j), v in self.Q.items():
            i, j = int(i), int(j)
            if not (0 <= i < self.n_vars and 0 <= j < self.n_vars):
                raise DomainError("annealing.index_range", f"QUBO term ({i}, {j}) out of range")
            key = (min(i, j), max(i, j))
            merged[key] = merged.get(key, 0.0) + float(v)
        self.Q = merged

    def value(self, z) -> float:
        z = np.asarray(z, dtype=int)
        return float(self.offset + sum(v * z[i] * z[j] for (i, j), v in self.Q.items()))

    def values(self) -> np.ndarray:
        """Objective of every assignment, indexed by basis state (bit i = z_i)."""
        idx = _basis_index(self.n_vars)
        out = np.full(idx.size, float(self.offset))
        for (i, j), v in self.Q.items():
            out += v * (((idx >> i) & (idx >> j)) & 1)
        return out

    def to_dict(self) -> dict:
        linear = {str(i): v for (i, j), v in sorted(self.Q.items()) if i == j}
        quad = {f"{i},{j}": v for (i, j), v in sorted(self.Q.items()) if i != j}
        return {"type": "qubo", "n": self.n_vars, "linear": linear, "quadratic": quad,
                "offset": self.offset}


def problem_from_dict(d: dict) -> IsingModel | Qubo:
    """Parse ``{n, linear: {i: c}, quadratic: {"i,j": c}[, type, offset]}``."""
    try:
        n = int(d["n"])
        linear = {int(k): float(v) for k, v in d.get("linear", {}).items()}
        quad = {}
        for k, v in d.get("quadratic", {}).items():
            i, j = (int(p) for p in str(k).split(","))
            quad[(i, j)] = float(v)
    except (KeyError, ValueError, TypeError) as exc:
        raise DomainError("annealing.problem_format", f"malformed problem: {exc}") from exc
    kind = d.get("type", "ising")
    if kind == "qubo":
        q = dict(quad)
        for i, v in linear.items():
            q[(i, i)] = q.get((i, i), 0.0) + v
        return Qubo(n, q, float(d.get("offset", 0.0)))
    if kind != "ising":
        raise DomainError("annealing.problem_format", f"unknown problem type {kind!r}")
    fields = np.zeros(n)
    for i, v in linear.items():
        if not 0 <= i < n:
            raise DomainError("annealing.index_range", f"field index {i} out of range")
        fields[i] += v
    return IsingModel(n, quad, fields)


def load_problem(path) -> IsingModel | Qubo:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError("annealing.problem_format", f"{path}: {exc}") from exc
    return problem_from_dict(data)


def qubo_to_ising(q: Qubo) -> tuple[IsingModel, float]:
    """Return ``(model, offset)`` with Qubo(z) = Ising(sigma(z)) + offset."""
    h = np.zeros(q.n_vars)
    J = {}
    offset = float(q.offset)
    for (i, j), v in q.Q.items():
        if i == j:
            offset += v / 2
            h[i] -= v / 2
        else:
            offset += v / 4
            h[i] -= v / 4
            h[j] -= v / 4
            J[(i, j)] = J.get((i, j), 0.0) + v / 4
    return IsingModel(q.n_vars, J, h), offset


def index_to_spins(index: int, n: int) -> np.ndarray:
    return np.array([1 - 2 * ((index >> i) & 1) for i in range(n)], dtype=int)


def spins_to_index(config) -> int:
    return sum(1 << i for i, s in enumerate(config) if s == -1)


def ising_energy(model: IsingModel, config) -> float:
    s = np.asarray(config).reshape(-1)
    if s.size != model.n_spins:
        raise DomainError("annealing.config_length", f"config length {s.size} != {model.n_spins}")
    if not np.all((s == 1) | (s == -1)):
        raise DomainError("annealing.config_value", "spins must be -1 or +1")
    s = s.astype(float)
    e = float(model.fields @ s)
    for (i, j), v in model.couplings.items():
        e += v * s[i] * s[j]
    return e


def ground_mask(energies: np.ndarray) -> np.ndarray:
    e0 = energies.min()
    tol = 1e-9 * max(1.0, abs(e0))
    return energies <= e0 + tol


def brute_force_ground(model: IsingModel):
    """Exhaustive minimum: ``(config, energy, degeneracy)``; lowest index wins ties."""
    if model.n_spins > MAX_QUBITS:
        raise DomainError("annealing.size", f"brute force limited to {MAX_QUBITS} spins")
    e = model.energies()
    mask = ground_mask(e)
    index = int(np.argmax(mask))
    return index_to_spins(index, model.n_spins), float(e[index]), int(mask.sum())


@dataclass(frozen=True)
class AnnealSchedule:
    """Linear interpolation A(t) = 1 - t/T, B(t) = t/T over ``steps`` slices."""

    total_time: float
    steps: int

    def __post_init__(self):
        if not self.total_time > 0:
            raise DomainError("annealing.schedule", f"total time must be positive, got {self.total_time}")
        if self.steps < 1:
            raise DomainError("annealing.schedule", f"steps must be >= 1, got {self.steps}")

    @property
    def dt(self) -> float:
        return self.total_time / self.steps

    def A(self, t):
        return 1.0 - np.asarray(t) / self.total_time

    def B(self, t):
        return np.asarray(t) / self.total_time

    def to_dict(self) -> dict:
        return {"kind": "linear", "total_time": self.total_time, "steps": self.steps}


@dataclass
class AnnealResult:
    state: StateVector
    config: np.ndarray
    energy: float
    ground_probability: float
    expected_energy: float
    seed: int
    schedule: AnnealSchedule
    gap_trace: list | None = None

    @property
    def index(self) -> int:
        return spins_to_index(self.config)

    def to_dict(self) -> dict:
        d = {
            "config": [int(s) for s in self.config],
            "energy": self.energy,
            "ground_probability": self.ground_probability,
            "expected_energy": self.expected_energy,
            "seed": self.seed,
            "schedule": self.schedule.to_dict(),
        }
        if self.gap_trace is not None:
            d["gap_trace"] = [[t, g] for t, g in self.gap_trace]
        return d


def _transverse_step(amps: np.ndarray, n: int, angle: float) -> None:
    # exp(+i angle X) on every qubit
    c, s = math.cos(angle), 1j * math.sin(angle)
    for q in range(n):
        view = amps.reshape(-1, 2, 1 << q)
        lo = view[:, 0, :].copy()
        hi = view[:, 1, :]
        view[:, 0, :] = c * lo + s * hi
        view[:, 1, :] = s * lo + c * hi


def anneal_evolve(model: IsingModel, schedule: AnnealSchedule, seed: int = 0,
                  gap_samples: int = 0) -> AnnealResult:
    """Simulate the annealing run and draw one seeded measurement."""
    n = model.n_spins
    if n > MAX_EVOLVE_SPINS:
        raise DomainError("annealing.size", f"evolution limited to {MAX_EVOLVE_SPINS} spins, got {n}")
    energies = model.energies()
    amps = np.full(1 << n, 1.0 / math.sqrt(1 << n), dtype=np.complex128)
    dt = schedule.dt
    for k in range(schedule.steps):
        t = (k + 0.5) * dt
        amps *= np.exp(-1j * float(schedule.B(t)) * dt * energies)
        _transverse_step(amps, n, float(schedule.A(t)) * dt)

    probs = np.abs(amps) ** 2
    probs /= probs.sum()
    index = int(make_rng(seed).choice(probs.size, p=probs))
    config = index_to_spins(index, n)
    trace = None
    if gap_samples:
        trace = spectral_gap_trace(model, schedule, gap_samples)
    return AnnealResult(
        state=StateVector(amps, check=False),
        config=config,
        energy=ising_energy(model, config),
        ground_probability=float(probs[ground_mask(energies)].sum()),
        expected_energy=float(probs @ energies),
        seed=int(seed),
        schedule=schedule,
        gap_trace=trace,
    )


def hamiltonian_matrix(model: IsingModel, schedule: AnnealSchedule, t: float) -> np.ndarray:
    """Dense H(t); only for small spin counts."""
    n = model.n_spins
    idx = _basis_index(n)
    h = np.diag(float(schedule.B(t)) * model.energies()).astype(float)
    a = float(schedule.A(t))
    for q in range(n):
        h[idx, idx ^ (1 << q)] -= a
    return h


def spectral_gap_trace(model: IsingModel, schedule: AnnealSchedule, samples: int) -> list:
    """``[(t, gap)]`` at evenly spaced times, gap to the first distinct level."""
    if model.n_spins > MAX_GAP_SPINS:
        raise DomainError("annealing.size", f"gap trace limited to {MAX_GAP_SPINS} spins")
    if samples < 1:
        raise DomainError("annealing.samples", "need at least one sample")
    times = np.linspace(0.0, schedule.total_time, samples) if samples > 1 else np.zeros(1)
    trace = []
    for t in times:
        w = np.linalg.eigvalsh(hamiltonian_matrix(model, schedule, t))
        tol = 1e-9 * max(1.0, abs(w[0]))
        above = w[w > w[0] + tol]
        trace.append((float(t), float(above[0] - w[0]) if above.size else 0.0))
    return trace
