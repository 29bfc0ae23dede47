import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import active_set_dual, classical_svm_predictions, dual_value, grid_search_dual
from qlp import DomainError
from qlp.encoding import FeatureMap
from qlp.kernel import KernelMode, build_kernel_matrix
from qlp.qsvm import (
    SUPPORT_EPSILON,
    SvmModel,
    classify,
    compute_bias,
    decision_function,
    decision_values,
    fit,
    primal_dual_gap,
    sign_label,
    solve_dual,
)

K_ID = np.eye(2)
Y_ID = np.array([1, -1])


def random_instance(seed, m, n_features=2, scheme="rotation"):
    rng = np.random.default_rng(seed)
    rows = rng.normal(size=(m, n_features))
    y = rng.choice([-1, 1], size=m)
    y[0], y[1] = 1, -1
    k = build_kernel_matrix(rows, FeatureMap(scheme, n_features), KernelMode.exact()).entries
    return rows, y, k


def separable_dataset(seed=0, m=20):
    rng = np.random.default_rng(seed)
    pos = rng.normal([1.2, 1.2], 0.3, size=(m // 2, 2))
    neg = rng.normal([-1.2, -1.2], 0.3, size=(m - m // 2, 2))
    return np.vstack([pos, neg]), np.array([1] * (m // 2) + [-1] * (m - m // 2))


def test_identity_reference_instance():
    alpha, report = solve_dual(K_ID, Y_ID, C=10)
    np.testing.assert_allclose(alpha, [1, 1], atol=1e-6)
    assert report.dual_objective == pytest.approx(1.0, abs=1e-6)
    b = compute_bias(alpha, K_ID, Y_ID, 10)
    assert b == pytest.approx(0.0, abs=1e-12)


def test_identity_reference_by_dense_grid():
    # alpha_1 = alpha_2 = a on the feasible line; objective 2a - a^2
    a = np.arange(0, 10 + 1e-9, 1e-3)
    vals = dual_value(np.stack([a, a], axis=1), K_ID, Y_ID)
    assert a[np.argmax(vals)] == pytest.approx(1.0, abs=1e-3)
    assert vals.max() == pytest.approx(1.0, abs=1e-9)


def test_identity_model_decisions_and_gap():
    alpha, _ = solve_dual(K_ID, Y_ID, C=10)
    model = SvmModel(alpha, 0.0, 10.0, np.eye(2), Y_ID, FeatureMap("basis", 2), KernelMode.exact())
    assert primal_dual_gap(model, K_ID, Y_ID) <= 1e-6
    f = K_ID @ (alpha * Y_ID) + 0.0
    np.testing.assert_allclose(f, [1, -1], atol=1e-6)


def test_tiny_c_collapses_box():
    rows, y, k = random_instance(1, 6)
    alpha, report = solve_dual(k, y, C=1e-9)
    assert np.all(alpha <= 1e-9)
    assert abs(report.dual_objective) < 1e-8


def test_solver_errors():
    with pytest.raises(DomainError) as e:
        solve_dual(np.eye(3), [1, 1, 1])
    assert e.value.code == "qsvm.degenerate_labels"
    with pytest.raises(DomainError, match="square"):
        solve_dual(np.ones((2, 3)), [1, -1])
    with pytest.raises(DomainError):
        solve_dual(np.eye(2), [1, -1], C=0)
    with pytest.raises(DomainError):
        compute_bias(np.zeros(2), K_ID, Y_ID, 1.0)


@pytest.mark.parametrize("seed", range(12))
def test_matches_active_set_oracle(seed):
    m = 3 + seed % 6  # 3..8
    C = [0.5, 1.0, 5.0][seed % 3]
    _, y, k = random_instance(100 + seed, m)
    alpha, report = solve_dual(k, y, C=C)
    best, _ = active_set_dual(k, y, C)
    assert report.dual_objective == pytest.approx(best, abs=1e-3 * C)
    assert report.dual_objective <= best + 1e-9


@pytest.mark.parametrize("seed", range(6))
def test_matches_feasible_grid(seed):
    m = 3 + seed % 2
    C = 1.0
    _, y, k = random_instance(200 + seed, m)
    _, report = solve_dual(k, y, C=C)
    grid = grid_search_dual(k, y, C, steps=100)
    assert report.dual_objective >= grid - 1e-9
    assert report.dual_objective - grid <= 1e-3 * C


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**31), st.floats(0.05, 20))
def test_feasibility_and_monotone_trace(m, seed, C):
    _, y, k = random_instance(seed, m)
    alpha, report = solve_dual(k, y, C=C)
    assert np.all(alpha >= 0) and np.all(alpha <= C)
    assert abs(alpha @ y) <= 1e-8
    assert report.kkt_violation <= 1e-6
    assert np.all(np.diff(report.objective_trace) >= -1e-12)


def test_free_support_vectors_sit_on_margin():
    rows, y = separable_dataset(3)
    fmap = FeatureMap("rotation", 2)
    model, _, km = fit(rows, y, fmap, KernelMode.exact(), C=10.0)
    free = (model.alphas > SUPPORT_EPSILON) & (model.alphas < model.C - SUPPORT_EPSILON)
    assert free.any()
    f = decision_values(model, rows[free])
    np.testing.assert_allclose(f, y[free], atol=1e-6)


def test_constant_kernel_shift_keeps_predictions():
    rows, y, k = random_instance(7, 8)
    alpha, _ = solve_dual(k, y, C=1.0)
    b = compute_bias(alpha, k, y, 1.0)
    k2 = k + 0.5
    alpha2, _ = solve_dual(k2, y, C=1.0)
    b2 = compute_bias(alpha2, k2, y, 1.0)
    np.testing.assert_array_equal(sign_label(k @ (alpha * y) + b), sign_label(k2 @ (alpha2 * y) + b2))


def test_gap_nonnegative_on_random_instances():
    for seed in range(50):
        m = 2 + seed % 9
        rows, y, k = random_instance(300 + seed, m)
        alpha, _ = solve_dual(k, y, C=1.0)
        b = compute_bias(alpha, k, y, 1.0)
        model = SvmModel(alpha, b, 1.0, rows, y, FeatureMap("rotation", 2), KernelMode.exact())
        assert primal_dual_gap(model, k, y) >= -1e-8


def test_gap_shrinks_with_tolerance():
    rows, y, k = random_instance(42, 10)
    gaps = []
    for tol in (1e-2, 1e-4, 1e-6):
        alpha, _ = solve_dual(k, y, C=1.0, tol=tol)
        b = compute_bias(alpha, k, y, 1.0)
        model = SvmModel(alpha, b, 1.0, rows, y, FeatureMap("rotation", 2), KernelMode.exact())
        gaps.append(primal_dual_gap(model, k, y))
    assert gaps[0] >= gaps[1] >= gaps[2] - 1e-12
    assert gaps[2] <= 1e-4


def test_classify_tie_break():
    assert sign_label(2.3) == 1
    assert sign_label(-0.1) == -1
    assert sign_label(0.0) == 1


def test_separable_training_accuracy_and_classical_agreement():
    rows, y = separable_dataset(0)
    fmap = FeatureMap("rotation", 2)
    model, report, km = fit(rows, y, fmap, KernelMode.exact(), C=1.0)
    assert report.converged
    pred = sign_label(decision_values(model, rows))
    assert np.all(pred == y)
    held = np.random.default_rng(9).normal(0, 1.5, size=(15, 2))
    from qlp.kernel import cross_kernel

    k_held = cross_kernel(rows, held, fmap, KernelMode.exact())
    ours = sign_label(decision_values(model, held))
    theirs = classical_svm_predictions(km.entries, y, 1.0, k_held)
    np.testing.assert_array_equal(ours, theirs)
    np.testing.assert_array_equal(pred, classical_svm_predictions(km.entries, y, 1.0, km.entries))


def test_classify_single_point():
    rows, y = separable_dataset(1)
    model, _, _ = fit(rows, y, FeatureMap("rotation", 2), KernelMode.exact(), C=1.0)
    assert classify(model, [1.2, 1.2]) == 1
    assert classify(model, [-1.2, -1.2]) == -1
    with pytest.raises(DomainError):
        decision_function(model, [1.0, 2.0, 3.0])


def test_sampled_kernel_predictions_track_exact():
    rows, y = separable_dataset(2)
    fmap = FeatureMap("rotation", 2)
    exact_model, _, _ = fit(rows, y, fmap, KernelMode.exact())
    exact_pred = sign_label(decision_values(exact_model, rows))
    agree = []
    for seed in range(10):
        model, report, _ = fit(rows, y, fmap, KernelMode.sampled(10**4, seed))
        pred = sign_label(decision_values(model, rows))
        agree.append(np.mean(pred == exact_pred))
    assert np.mean(agree) >= 0.95


def test_model_json_roundtrip():
    rows, y = separable_dataset(4)
    model, _, _ = fit(rows, y, FeatureMap("rotation", 2), KernelMode.exact())
    back = SvmModel.from_dict(model.to_dict())
    np.testing.assert_array_equal(back.alphas, model.alphas)
    np.testing.assert_allclose(decision_values(back, rows), decision_values(model, rows))
    assert set(model.to_dict()) >= {"alphas", "bias", "C", "support_indices", "feature_map",
                                    "kernel_mode", "training_rows", "labels", "preprocessing"}
