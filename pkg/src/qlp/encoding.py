"""Classical-to-quantum feature maps and dataset preprocessing.

Three encodings are provided:

* amplitude: ``|x> = x / ||x||`` padded with zeros to a power of two,
  using ceil(log2(max(n_features, 2))) qubits;
* rotation: qubit ``i`` is ``RY(x_i)|0> = cos(x_i/2)|0> + sin(x_i/2)|1>``,
  one qubit per feature, product state;
* basis ("basic" encoding): a binary vector selects the computational basis
  state whose bit ``i`` equals ``x_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qlp.errors import DomainError
from qlp.statevector import MAX_QUBITS, StateVector

SCHEMES = ("amplitude", "rotation", "basis")


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.size == 0:
        raise DomainError("encoding.empty", "feature vector is empty")
    if not np.all(np.isfinite(v)):
        raise DomainError("encoding.non_finite", "feature vector has non-finite entries")
    return v


def amplitude_encode(x) -> StateVector:
    v = _as_vector(x)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise DomainError("encoding.zero_vector", "cannot amplitude-encode the zero vector")
    n = math.ceil(math.log2(max(v.size, 2)))
    if n > MAX_QUBITS:
        raise DomainError(
            "encoding.too_many_features", f"{v.size} features exceed {MAX_QUBITS} qubits"
        )
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[: v.size] = v / norm
    # fix the global phase: first nonzero amplitude real positive
    first = amps[np.flatnonzero(amps)[0]]
    if first.real < 0:
        amps = -amps
    return StateVector(amps, check=False)


def rotation_encode(x) -> StateVector:
    v = _as_vector(x)
    if v.size > MAX_QUBITS:
        raise DomainError(
            "encoding.too_many_features", f"{v.size} features exceed {MAX_QUBITS} qubits"
        )
    amps = np.ones(1, dtype=np.complex128)
    for angle in v:
        qubit = np.array([math.cos(angle / 2.0), math.sin(angle / 2.0)], dtype=np.complex128)
        amps = np.kron(qubit, amps)
    return StateVector(amps, check=False)


def basis_encode(bits) -> StateVector:
    v = _as_vector(bits)
    if not np.all((v == 0.0) | (v == 1.0)):
        raise DomainError("encoding.non_binary", "basis encoding needs entries in {0, 1}")
    index = sum(1 << i for i, b in enumerate(v) if b == 1.0)
    return StateVector.basis(v.size, index)


_ENCODERS = {"amplitude": amplitude_encode, "rotation": rotation_encode, "basis": basis_encode}


@dataclass(frozen=True)
class FeatureMap:
    scheme: str
    n_features: int

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(
                "encoding.scheme", f"unknown encoding {self.scheme!r}; choose from {SCHEMES}"
            )
        if self.n_features < 1:
            raise DomainError("encoding.n_features", "a feature map needs at least one feature")

    @property
    def n_qubits(self) -> int:
        if self.scheme == "amplitude":
            return math.ceil(math.log2(max(self.n_features, 2)))
        return self.n_features

    def encode(self, x) -> StateVector:
        v = _as_vector(x)
        if v.size != self.n_features:
            raise DomainError(
                "encoding.dimension_mismatch",
                f"feature map expects {self.n_features} features, got {v.size}",
            )
        return _ENCODERS[self.scheme](v)

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "n_features": self.n_features, "n_qubits": self.n_qubits}

    @classmethod
    def from_dict(cls, d: dict) -> FeatureMap:
        return cls(d["scheme"], int(d["n_features"]))


@dataclass
class Dataset:
    """Feature rows (NaN marks a missing entry) with optional +/-1 labels."""

    rows: np.ndarray
    labels: np.ndarray | None = None
    feature_names: list = field(default_factory=list)

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if not self.feature_names:
            self.feature_names = [f"x{i}" for i in range(self.rows.shape[1])]
        if len(self.feature_names) != self.rows.shape[1]:
            raise DomainError("encoding.schema", "feature_names length differs from row width")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int).reshape(-1)
            if self.labels.size != self.rows.shape[0]:
                raise DomainError("encoding.schema", "rows and labels differ in length")
            if not np.all(np.isin(self.labels, (-1, 1))):
                raise DomainError("encoding.label_value", "labels must be -1 or +1")

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]


@dataclass
class PreprocessStats:
    """Per-column statistics needed to transform inference-time records."""

    means: np.ndarray
    stds: np.ndarray

    def transform(self, rows) -> np.ndarray:
        x = np.atleast_2d(np.asarray(rows, dtype=float)).copy()
        if x.shape[1] != self.means.size:
            raise DomainError(
                "encoding.dimension_mismatch",
                f"expected {self.means.size} feature columns, got {x.shape[1]}",
            )
        missing = np.isnan(x)
        x[missing] = np.broadcast_to(self.means, x.shape)[missing]
        out = np.zeros_like(x)
        varying = self.stds > 0
        out[:, varying] = (x[:, varying] - self.means[varying]) / self.stds[varying]
        return out

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> PreprocessStats:
        return cls(np.asarray(d["means"], dtype=float), np.asarray(d["stds"], dtype=float))


def fit_stats(rows) -> PreprocessStats:
    x = np.atleast_2d(np.asarray(rows, dtype=float))
    observed = ~np.isnan(x)
    empty = np.flatnonzero(~observed.any(axis=0))
    if empty.size:
        raise DomainError(
            "encoding.missing_column", f"feature column(s) {empty.tolist()} have no observed values"
        )
    means = np.nanmean(x, axis=0)
    filled = np.where(observed, x, means)
    # population variance (1/N)
    stds = filled.std(axis=0)
    stds[stds < 1e-12 * np.maximum(1.0, np.abs(means))] = 0.0
    return PreprocessStats(means, stds)


def preprocess(raw: Dataset) -> tuple[Dataset, PreprocessStats]:
    """Mean-impute missing entries, then standardize each column.

    Constant columns become all-zero. Returns the cleaned dataset and the
    statistics for transforming later records the same way.
    """
    stats = fit_stats(raw.rows)
    clean = Dataset(stats.transform(raw.rows), raw.labels, list(raw.feature_names))
    return clean, stats
