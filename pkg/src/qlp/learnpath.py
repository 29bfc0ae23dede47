"""Study-planning application layer.

* student records -> preprocessing -> quantum-kernel SVM study classifier
* study scheduling as a one-hot QUBO solved by simulated annealing
* study-sequence search with Grover over Lehmer-coded permutations
"""

from __future__ import annotations

import csv
import graphlib
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from qlp.annealing import AnnealSchedule, Qubo, anneal_evolve, brute_force_ground, qubo_to_ising
from qlp.encoding import Dataset, FeatureMap, preprocess
from qlp.errors import DomainError
from qlp.grover import GroverOracle, GroverResult, grover_search, sample_uniform
from qlp.kernel import KernelMode
from qlp.qsvm import DEFAULT_C, DEFAULT_TOL, SvmModel, decision_values, fit, sign_label

MAX_SCHEDULE_VARS = 16
MAX_SEQUENCE_STEPS = 8

_LABELS = {"-1": -1, "1": 1, "+1": 1}


# -- student records ---------------------------------------------------------

@dataclass
class StudentRecord:
    id: str
    features: dict
    label: int | None = None


def load_students(path):
    """Parse a student CSV: header ``id,<features...>[,label]``.

    Empty feature cells become NaN (imputed later by ``preprocess``).
    Returns ``(dataset, records, schema)``; the dataset has labels only when
    every record carries one.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip().lower() != "id":
        raise DomainError("learnpath.missing_header", f"{path}: first header cell must be 'id'")
    header = [h.strip() for h in rows[0]]
    has_label = header[-1].lower() == "label"
    names = header[1:-1] if has_label else header[1:]
    if not names:
        raise DomainError("learnpath.missing_header", f"{path}: no feature columns")

    records, matrix, labels = [], [], []
    n_missing = 0
    for line, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DomainError(
                "learnpath.row_width", f"{path}:{line}: expected {len(header)} cells, got {len(row)}"
            )
        values = []
        for name, cell in zip(names, row[1:]):
            cell = cell.strip()
            if not cell:
                values.append(math.nan)
                n_missing += 1
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise DomainError(
                    "learnpath.non_numeric", f"{path}:{line}: {name}={cell!r} is not a number"
                ) from None
        label = None
        if has_label:
            cell = row[-1].strip()
            if cell:
                if cell not in _LABELS:
                    raise DomainError(
                        "learnpath.unknown_label", f"{path}:{line}: label {cell!r} is not -1 or 1"
                    )
                label = _LABELS[cell]
        records.append(StudentRecord(row[0].strip(), dict(zip(names, values)), label))
        matrix.append(values)
        labels.append(label)
    if not records:
        raise DomainError("learnpath.empty", f"{path}: no records")

    labelled = [lab is not None for lab in labels]
    if any(labelled) and not all(labelled):
        raise DomainError("learnpath.partial_labels", f"{path}: some records lack a label")
    dataset = Dataset(np.array(matrix, dtype=float), labels if all(labelled) else None, names)
    schema = {
        "feature_names": names,
        "has_label": has_label,
        "n_records": len(records),
        "n_missing": n_missing,
    }
    return dataset, records, schema


def _binarize(rows: np.ndarray) -> np.ndarray:
    return (rows > 0).astype(float)


def feature_rows(model_rows: np.ndarray, scheme: str) -> np.ndarray:
    # basis encoding needs bits: standardized values are thresholded at the mean
    return _binarize(model_rows) if scheme == "basis" else model_rows


def train_study_classifier(data: Dataset, scheme: str = "rotation", C: float = DEFAULT_C,
                           kernel_mode: KernelMode | None = None, tol: float = DEFAULT_TOL,
                           max_passes: int | None = None):
    """preprocess -> kernel matrix -> dual solve. Returns ``(model, report)``."""
    if data.labels is None:
        raise DomainError("learnpath.unlabelled", "training data needs a label column")
    kernel_mode = kernel_mode or KernelMode.exact()
    clean, stats = preprocess(data)
    fmap = FeatureMap(scheme, clean.n_features)
    rows = feature_rows(clean.rows, scheme)
    model, report, _ = fit(rows, clean.labels, fmap, kernel_mode, C, tol, max_passes)
    model.stats = stats
    model.feature_names = list(data.feature_names)
    return model, report


def predict_records(model: SvmModel, rows, salt: int = 1):
    """Decision values and labels for raw (unprocessed) feature rows."""
    if model.stats is None:
        raise DomainError("learnpath.no_preprocessing", "model carries no preprocessing stats")
    x = feature_rows(model.stats.transform(rows), model.feature_map.scheme)
    f = decision_values(model, x, salt=salt)
    return f, sign_label(f)


# -- scheduling --------------------------------------------------------------

@dataclass
class Activity:
    name: str
    duration: float
    engagement: float


@dataclass
class ScheduleProblem:
    """Place each activity in one slot; precedence pairs ``(a, b)`` mean a before b.

    Weights: ``objective`` scales the completion-time term; ``onehot`` and
    ``precedence`` default to a value that provably dominates the objective.
    """

    activities: list
    horizon: int
    precedence: list = field(default_factory=list)
    weights: dict = field(default_factory=dict)

    def __post_init__(self):
        names = [a.name for a in self.activities]
        if not names:
            raise DomainError("learnpath.no_activities", "schedule needs at least one activity")
        if len(set(names)) != len(names):
            raise DomainError("learnpath.duplicate_activity", "activity names must be unique")
        if self.horizon < len(names):
            raise DomainError(
                "learnpath.horizon_too_small",
                f"{len(names)} activities do not fit in {self.horizon} slots",
            )
        for a in self.activities:
            if not a.duration > 0:
                raise DomainError("learnpath.duration", f"activity {a.name!r} needs positive duration")
        pairs = []
        for a, b in self.precedence:
            pairs.append((self._index(a, names), self._index(b, names)))
        self.precedence = pairs
        graph = {i: set() for i in range(len(names))}
        for a, b in pairs:
            graph[b].add(a)
        try:
            tuple(graphlib.TopologicalSorter(graph).static_order())
        except graphlib.CycleError as exc:
            raise DomainError("learnpath.cyclic_precedence", f"precedence cycle: {exc.args[1]}") from None

    @staticmethod
    def _index(ref, names) -> int:
        if isinstance(ref, str):
            if ref not in names:
                raise DomainError("learnpath.unknown_activity", f"unknown activity {ref!r}")
            return names.index(ref)
        if not 0 <= int(ref) < len(names):
            raise DomainError("learnpath.unknown_activity", f"activity index {ref} out of range")
        return int(ref)

    @property
    def n_activities(self) -> int:
        return len(self.activities)

    @property
    def n_vars(self) -> int:
        return self.n_activities * self.horizon

    def var(self, activity: int, slot: int) -> int:
        return activity * self.horizon + slot

    def cost(self, activity: int, slot: int) -> float:
        a = self.activities[activity]
        return self.weights.get("objective", 1.0) * slot * a.duration - a.engagement

    def penalty_weights(self) -> tuple[float, float]:
        c = [self.cost(a, s) for a in range(self.n_activities) for s in range(self.horizon)]
        # highest value a feasible plan can reach, deepest any assignment can reach
        reach_up = sum(
            max(0.0, max(self.cost(a, s) for s in range(self.horizon)))
            for a in range(self.n_activities)
        )
        reach_down = sum(max(0.0, -v) for v in c)
        default = 2.0 * (max(reach_up, reach_down) + 1.0)
        return self.weights.get("onehot", default), self.weights.get("precedence", default)

    def score(self, slots) -> float:
        """Objective of a feasible assignment ``slots[a] = slot``."""
        return float(sum(self.cost(a, s) for a, s in enumerate(slots)))

    def is_feasible(self, slots) -> bool:
        return len(set(slots)) == len(slots) and all(slots[a] < slots[b] for a, b in self.precedence)

    @classmethod
    def from_dict(cls, d: dict) -> ScheduleProblem:
        try:
            acts = [Activity(str(a["name"]), float(a["duration"]), float(a.get("engagement", 0.0)))
                    for a in d["activities"]]
            return cls(acts, int(d["horizon"]), [tuple(p) for p in d.get("precedence", [])],
                       {k: float(v) for k, v in d.get("weights", {}).items()})
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError("learnpath.schedule_format", f"malformed schedule problem: {exc}") from exc

    def to_dict(self) -> dict:
        onehot, prec = self.penalty_weights()
        return {
            "activities": [{"name": a.name, "duration": a.duration, "engagement": a.engagement}
                           for a in self.activities],
            "horizon": self.horizon,
            "precedence": [list(p) for p in self.precedence],
            "weights": {"objective": self.weights.get("objective", 1.0), "onehot": onehot,
                        "precedence": prec},
        }


def build_schedule_qubo(p: ScheduleProblem) -> Qubo:
    """One-hot QUBO; variable ``a * horizon + s`` is activity a in slot s.

    For feasible assignments the QUBO value equals ``p.score``; every
    constraint violation adds at least one penalty weight.
    """
    onehot, prec = p.penalty_weights()
    S, A = p.horizon, p.n_activities
    Q: dict = {}
    offset = 0.0

    def add(i, j, v):
        key = (min(i, j), max(i, j))
        Q[key] = Q.get(key, 0.0) + v

    for a in range(A):
        for s in range(S):
            add(p.var(a, s), p.var(a, s), p.cost(a, s))
    # (sum_s z_as - 1)^2 per activity
    for a in range(A):
        offset += onehot
        for s in range(S):
            add(p.var(a, s), p.var(a, s), -onehot)
        for s, t in itertools.combinations(range(S), 2):
            add(p.var(a, s), p.var(a, t), 2.0 * onehot)
    # at most one activity per slot
    for s in range(S):
        for a, b in itertools.combinations(range(A), 2):
            add(p.var(a, s), p.var(b, s), onehot)
    # b must land strictly after a
    for a, b in p.precedence:
        for s in range(S):
            for t in range(s + 1):
                add(p.var(a, s), p.var(b, t), prec)
    return Qubo(p.n_vars, Q, offset)


def decode_plan(p: ScheduleProblem, bits) -> dict:
    """Interpret a variable assignment; infeasible plans are flagged, not repaired."""
    bits = np.asarray(bits, dtype=int).reshape(p.n_activities, p.horizon)
    violations = []
    slots = []
    for a, act in enumerate(p.activities):
        placed = np.flatnonzero(bits[a]).tolist()
        if len(placed) != 1:
            violations.append(f"{act.name} placed {len(placed)} times")
        slots.append(placed)
    for s in range(p.horizon):
        occupants = [p.activities[a].name for a in range(p.n_activities) if bits[a, s]]
        if len(occupants) > 1:
            violations.append(f"slot {s} holds {', '.join(occupants)}")
    if not violations:
        flat = [s[0] for s in slots]
        for a, b in p.precedence:
            if not flat[a] < flat[b]:
                violations.append(f"{p.activities[a].name} must precede {p.activities[b].name}")
    plan = {
        "feasible": not violations,
        "violations": violations,
        "assignment": {act.name: slots[a] for a, act in enumerate(p.activities)},
    }
    if not violations:
        flat = [s[0] for s in slots]
        plan["order"] = [p.activities[a].name for a in np.argsort(flat, kind="stable")]
        plan["score"] = p.score(flat)
    return plan


def best_plans_by_permutation(p: ScheduleProblem):
    """Direct oracle: score every injective slot assignment; returns ``(best, [slots...])``."""
    best, argbest = math.inf, []
    for slots in itertools.permutations(range(p.horizon), p.n_activities):
        if not p.is_feasible(slots):
            continue
        v = p.score(slots)
        if v < best - 1e-12:
            best, argbest = v, [slots]
        elif abs(v - best) <= 1e-12:
            argbest.append(slots)
    return best, argbest


def optimize_schedule(p: ScheduleProblem, schedule: AnnealSchedule, seed: int = 0,
                      gap_samples: int = 0):
    """Anneal the schedule QUBO; returns ``(report, anneal_result)``."""
    if p.n_vars > MAX_SCHEDULE_VARS:
        raise DomainError(
            "learnpath.schedule_too_large",
            f"{p.n_vars} QUBO variables exceed the limit of {MAX_SCHEDULE_VARS}",
        )
    qubo = build_schedule_qubo(p)
    model, offset = qubo_to_ising(qubo)
    result = anneal_evolve(model, schedule, seed=seed, gap_samples=gap_samples)
    bits = [(result.index >> v) & 1 for v in range(p.n_vars)]
    plan = decode_plan(p, bits)
    ground_cfg, ground_energy, degeneracy = brute_force_ground(model)
    report = {
        "plan": plan,
        "qubo_value": result.energy + offset,
        "optimal_qubo_value": ground_energy + offset,
        "matches_optimum": abs(result.energy - ground_energy) <= 1e-9 * max(1.0, abs(ground_energy)),
        "degeneracy": degeneracy,
        "n_vars": p.n_vars,
    }
    return report, result


# -- sequence search ---------------------------------------------------------

def lehmer_decode(index: int, m: int) -> list:
    """Permutation of ``range(m)`` with Lehmer rank ``index``."""
    if not 0 <= index < math.factorial(m):
        raise DomainError("learnpath.lehmer_range", f"rank {index} outside [0, {m}!)")
    pool = list(range(m))
    perm = []
    for k in range(m - 1, -1, -1):
        digit, index = divmod(index, math.factorial(k))
        perm.append(pool.pop(digit))
    return perm


def lehmer_encode(perm) -> int:
    pool = sorted(perm)
    rank = 0
    m = len(pool)
    for pos, item in enumerate(perm):
        digit = pool.index(item)
        rank += digit * math.factorial(m - 1 - pos)
        pool.pop(digit)
    return rank


@dataclass
class SequenceSpace:
    """Named study steps with affinities scored on adjacent pairs."""

    steps: list
    affinities: dict = field(default_factory=dict)
    threshold: float = 0.0

    def __post_init__(self):
        m = len(self.steps)
        if not 1 <= m <= MAX_SEQUENCE_STEPS:
            raise DomainError(
                "learnpath.sequence_size", f"sequence needs 1..{MAX_SEQUENCE_STEPS} steps, got {m}"
            )
        parsed = {}
        for key, v in self.affinities.items():
            i, j = key if isinstance(key, tuple) else (p.strip() for p in str(key).split(","))
            parsed[(self._index(i), self._index(j))] = float(v)
        self.affinities = parsed

    def _index(self, ref) -> int:
        if isinstance(ref, str) and not ref.lstrip("-").isdigit():
            if ref not in self.steps:
                raise DomainError("learnpath.unknown_step", f"unknown step {ref!r}")
            return self.steps.index(ref)
        i = int(ref)
        if not 0 <= i < len(self.steps):
            raise DomainError("learnpath.unknown_step", f"step index {i} out of range")
        return i

    @property
    def m(self) -> int:
        return len(self.steps)

    @property
    def n_qubits(self) -> int:
        return max(1, math.ceil(math.log2(math.factorial(self.m))))

    def quality(self, perm) -> float:
        return float(sum(self.affinities.get((a, b), 0.0) for a, b in zip(perm, perm[1:])))

    def qualities(self) -> np.ndarray:
        return np.array([self.quality(lehmer_decode(i, self.m)) for i in range(math.factorial(self.m))])

    @classmethod
    def from_dict(cls, d: dict) -> SequenceSpace:
        try:
            return cls(list(d["steps"]), dict(d.get("affinities", {})), float(d.get("threshold", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError("learnpath.sequence_format", f"malformed sequence space: {exc}") from exc


def search_sequence(space: SequenceSpace, threshold: float | None = None, seed: int = 0,
                    shots: int = 1):
    """Grover search for a permutation whose quality reaches ``threshold``.

    Permutation ranks occupy basis states [0, m!); padding states above are
    never marked, and measuring one counts as a failure.
    Returns ``(report, grover_result)``.
    """
    threshold = space.threshold if threshold is None else threshold
    scores = space.qualities()
    marked = set(np.flatnonzero(scores >= threshold).tolist())
    if not marked:
        raise DomainError(
            "learnpath.no_solution", f"no permutation reaches quality threshold {threshold}"
        )
    n = space.n_qubits
    if len(marked) == 1 << n:
        # every basis state qualifies: no amplification needed
        index = sample_uniform(n, seed)
        result = GroverResult(index, True, 0, 1.0, 1.0, {index: 1}, int(seed))
    else:
        result = grover_search(GroverOracle(n, frozenset(marked)), shots=shots, seed=seed)
    padding = result.measured >= scores.size
    report = {
        "success": bool(result.success),
        "padding": padding,
        "threshold": threshold,
        "n_marked": len(marked),
        "n_permutations": int(scores.size),
        "n_qubits": n,
        "classical_best_quality": float(scores.max()),
    }
    if not padding:
        perm = lehmer_decode(result.measured, space.m)
        report["sequence"] = [space.steps[i] for i in perm]
        report["quality"] = float(scores[result.measured])
    return report, result


def load_json(path, code: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DomainError(code, f"{path}: {exc}") from exc


# -- named Grover predicates -------------------------------------------------

def _sequence_quality_marks(n: int, params: dict) -> set:
    space = SequenceSpace.from_dict(params)
    if n < space.n_qubits:
        raise DomainError(
            "learnpath.predicate_params", f"{space.m} steps need at least {space.n_qubits} qubits"
        )
    return set(np.flatnonzero(space.qualities() >= space.threshold).tolist())


def _residue_marks(n: int, params: dict) -> set:
    try:
        divisor = int(params["divisor"])
        remainder = int(params.get("remainder", 0))
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError("learnpath.predicate_params", f"residue predicate: {exc}") from exc
    if divisor < 1:
        raise DomainError("learnpath.predicate_params", "divisor must be >= 1")
    return {i for i in range(1 << n) if i % divisor == remainder}


PREDICATES = {
    "sequence_quality": _sequence_quality_marks,
    "residue": _residue_marks,
}


def oracle_from_dict(d: dict) -> GroverOracle:
    """``{n, marked: [...]}`` or ``{n, predicate: name, params: {...}}``."""
    if "n" not in d:
        raise DomainError("grover.oracle_format", "oracle JSON needs 'n'")
    n = int(d["n"])
    if "marked" in d:
        return GroverOracle(n, frozenset(int(i) for i in d["marked"]))
    name = d.get("predicate")
    if name not in PREDICATES:
        raise DomainError(
            "grover.oracle_format", f"unknown predicate {name!r}; known: {sorted(PREDICATES)}"
        )
    return GroverOracle(n, frozenset(PREDICATES[name](n, d.get("params", {}))))
