"""Kernel SVM trained in dual form over a (quantum) kernel matrix.

The dual problem

    maximize   sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
    subject to 0 <= a_i <= C,  sum_i a_i y_i = 0

is solved by sequential minimal optimization: each step moves the pair of
multipliers that most violates the KKT conditions, by an exact line search
clipped to the box. The weight vector is never materialized; predictions go
through the kernel expansion f(x) = sum_i a_i y_i K(x_i, x) + b.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from qlp.encoding import FeatureMap, PreprocessStats
from qlp.errors import DomainError
from qlp.kernel import KernelMatrix, KernelMode, build_kernel_matrix, cross_kernel

SUPPORT_EPSILON = 1e-7
DEFAULT_C = 1.0
DEFAULT_TOL = 1e-6
_TAU = 1e-12


@dataclass
class TrainReport:
    iterations: int
    dual_objective: float
    kkt_violation: float
    duality_gap: float = float("nan")
    converged: bool = True
    jitter: float = 0.0
    objective_trace: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "dual_objective": self.dual_objective,
            "kkt_violation": self.kkt_violation,
            "duality_gap": self.duality_gap,
            "converged": self.converged,
            "jitter": self.jitter,
        }


def _kernel_array(K) -> np.ndarray:
    k = np.asarray(K.entries if isinstance(K, KernelMatrix) else K, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise DomainError("qsvm.kernel_shape", f"kernel matrix must be square, got {k.shape}")
    return k


def _check_labels(labels, m: int) -> np.ndarray:
    y = np.asarray(labels, dtype=float).reshape(-1)
    if y.size != m:
        raise DomainError("qsvm.label_count", f"{y.size} labels for a {m}x{m} kernel")
    if not np.all((y == 1.0) | (y == -1.0)):
        raise DomainError("qsvm.label_value", "labels must be -1 or +1")
    if np.all(y == y[0]):
        raise DomainError(
            "qsvm.degenerate_labels",
            "all labels are equal; the equality constraint forces every multiplier to zero",
        )
    return y


def dual_objective(alphas, K, labels) -> float:
    a = np.asarray(alphas, dtype=float)
    ay = a * np.asarray(labels, dtype=float)
    return float(a.sum() - 0.5 * ay @ _kernel_array(K) @ ay)


def _violating_pair(alpha, y, grad, C):
    # -y_t G_t ranks how much moving a_t in its feasible direction helps
    score = -y * grad
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
    if not up.any() or not low.any():
        return -1, -1, 0.0
    i = int(np.flatnonzero(up)[np.argmax(score[up])])
    j = int(np.flatnonzero(low)[np.argmin(score[low])])
    return i, j, float(score[i] - score[j])


def solve_dual(K, labels, C: float = DEFAULT_C, tol: float = DEFAULT_TOL, max_passes: int | None = None):
    """Maximize the SVM dual; returns ``(alphas, TrainReport)``.

    The iteration budget is ``max_passes * m`` pair updates, with
    ``max_passes`` defaulting to ``10 * m``.
    """
    k = _kernel_array(K)
    m = k.shape[0]
    y = _check_labels(labels, m)
    if not C > 0:
        raise DomainError("qsvm.regularization", f"C must be positive, got {C}")
    if max_passes is None:
        max_passes = 10 * m
    budget = max(1, max_passes * m)

    alpha = np.zeros(m)
    grad = -np.ones(m)  # gradient of 1/2 a'Qa - sum(a) at a = 0
    trace = [0.0]
    iterations = 0
    gap = 0.0
    while True:
        i, j, gap = _violating_pair(alpha, y, grad, C)
        if i < 0 or gap <= tol or iterations >= budget:
            break
        eta = k[i, i] + k[j, j] - 2.0 * k[i, j]
        step = gap / max(eta, _TAU)
        cap_i = C - alpha[i] if y[i] > 0 else alpha[i]
        cap_j = alpha[j] if y[j] > 0 else C - alpha[j]
        step = min(step, cap_i, cap_j)
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        # snap to the box to keep 0 <= a <= C exact
        if step == cap_i:
            alpha[i] = C if y[i] > 0 else 0.0
        if step == cap_j:
            alpha[j] = 0.0 if y[j] > 0 else C
        grad += step * y * (k[:, i] - k[:, j])
        iterations += 1
        trace.append(0.5 * alpha.sum() - 0.5 * alpha @ grad)

    report = TrainReport(
        iterations=iterations,
        dual_objective=dual_objective(alpha, k, y),
        kkt_violation=max(gap, 0.0),
        converged=gap <= tol,
        objective_trace=trace,
    )
    return alpha, report


def compute_bias(alphas, K, labels, C: float) -> float:
    """Bias from free support vectors, or the midpoint of the bounds they imply."""
    k = _kernel_array(K)
    a = np.asarray(alphas, dtype=float)
    y = np.asarray(labels, dtype=float)
    if not np.any(a > SUPPORT_EPSILON):
        raise DomainError("qsvm.no_support_vectors", "all multipliers are zero; bias is undefined")
    # g_i is the bias that would put f(x_i) exactly on y_i
    g = y - k @ (a * y)
    free = (a > SUPPORT_EPSILON) & (a < C - SUPPORT_EPSILON)
    if free.any():
        return float(g[free].mean())
    at_zero = a <= SUPPORT_EPSILON
    at_c = ~at_zero
    lower = g[(at_zero & (y > 0)) | (at_c & (y < 0))]
    upper = g[(at_zero & (y < 0)) | (at_c & (y > 0))]
    if lower.size and upper.size:
        return float(0.5 * (lower.max() + upper.min()))
    return float(lower.max() if lower.size else upper.min())


@dataclass
class SvmModel:
    alphas: np.ndarray
    bias: float
    C: float
    training_rows: np.ndarray
    labels: np.ndarray
    feature_map: FeatureMap
    kernel_mode: KernelMode
    stats: PreprocessStats | None = None
    feature_names: list = field(default_factory=list)

    @property
    def support_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alphas > SUPPORT_EPSILON)

    def to_dict(self) -> dict:
        return {
            "alphas": self.alphas.tolist(),
            "bias": self.bias,
            "C": self.C,
            "support_indices": self.support_indices.tolist(),
            "feature_map": self.feature_map.to_dict(),
            "kernel_mode": self.kernel_mode.to_dict(),
            "training_rows": self.training_rows.tolist(),
            "labels": [int(v) for v in self.labels],
            "feature_names": list(self.feature_names),
            "preprocessing": None if self.stats is None else self.stats.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> SvmModel:
        pre = d.get("preprocessing")
        return cls(
            alphas=np.asarray(d["alphas"], dtype=float),
            bias=float(d["bias"]),
            C=float(d["C"]),
            training_rows=np.asarray(d["training_rows"], dtype=float),
            labels=np.asarray(d["labels"], dtype=int),
            feature_map=FeatureMap.from_dict(d["feature_map"]),
            kernel_mode=KernelMode.from_dict(d["kernel_mode"]),
            stats=None if pre is None else PreprocessStats.from_dict(pre),
            feature_names=list(d.get("feature_names", [])),
        )


def decision_values(model: SvmModel, rows, salt: int = 0) -> np.ndarray:
    """f(x) for each row, with rows already in the model's feature space."""
    x = np.atleast_2d(np.asarray(rows, dtype=float))
    if x.shape[1] != model.feature_map.n_features:
        raise DomainError(
            "qsvm.dimension_mismatch",
            f"model expects {model.feature_map.n_features} features, got {x.shape[1]}",
        )
    kx = cross_kernel(model.training_rows, x, model.feature_map, model.kernel_mode, salt=salt)
    return kx @ (model.alphas * model.labels) + model.bias


def decision_function(model: SvmModel, x, salt: int = 0) -> float:
    return float(decision_values(model, [np.asarray(x, dtype=float).reshape(-1)], salt)[0])


def sign_label(f) -> np.ndarray:
    """+1 where f >= 0 (zero breaks toward +1), else -1."""
    return np.where(np.asarray(f) >= 0.0, 1, -1)


def classify(model: SvmModel, x, salt: int = 0) -> int:
    return int(sign_label(decision_function(model, x, salt)))


def primal_dual_gap(model: SvmModel, K, labels) -> float:
    """Primal objective 1/2||w||^2 + C sum(xi) minus the dual objective."""
    k = _kernel_array(K)
    y = np.asarray(labels, dtype=float)
    ay = model.alphas * y
    w2 = float(ay @ k @ ay)
    f = k @ ay + model.bias
    slack = np.maximum(0.0, 1.0 - y * f)
    primal = 0.5 * w2 + model.C * float(slack.sum())
    dual = float(model.alphas.sum()) - 0.5 * w2
    return primal - dual


def psd_jitter(k: np.ndarray) -> float:
    """Diagonal shift that makes ``k`` positive semidefinite (0 if already PSD)."""
    lam = float(np.linalg.eigvalsh(k).min())
    return 0.0 if lam >= 0.0 else -lam + 1e-8


def fit(rows, labels, feature_map: FeatureMap, kernel_mode: KernelMode, C: float = DEFAULT_C,
        tol: float = DEFAULT_TOL, max_passes: int | None = None):
    """Build the kernel matrix, solve the dual and recover the bias.

    Sampled kernels that come out indefinite get a diagonal jitter before
    solving. Returns ``(model, report, kernel_matrix)``.
    """
    x = np.atleast_2d(np.asarray(rows, dtype=float))
    y = _check_labels(labels, x.shape[0])
    km = build_kernel_matrix(x, feature_map, kernel_mode)
    k = km.entries
    jitter = 0.0
    if not kernel_mode.is_exact:
        jitter = psd_jitter(k)
        if jitter:
            k = k + jitter * np.eye(k.shape[0])
    alphas, report = solve_dual(k, y, C, tol, max_passes)
    bias = compute_bias(alphas, k, y, C)
    model = SvmModel(alphas, bias, float(C), x, y.astype(int), feature_map, kernel_mode)
    report.jitter = jitter
    report.duality_gap = primal_dual_gap(model, k, y)
    return model, report, km
