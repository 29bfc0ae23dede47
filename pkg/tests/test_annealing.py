import numpy as np
import pytest

from oracles import brute_force_ising
from qlp import DomainError
from qlp.annealing import (
    AnnealSchedule,
    IsingModel,
    Qubo,
    anneal_evolve,
    brute_force_ground,
    index_to_spins,
    ising_energy,
    problem_from_dict,
    qubo_to_ising,
    spectral_gap_trace,
    spins_to_index,
)


def random_ising(seed, n=6):
    rng = np.random.default_rng(seed)
    J = {(i, j): rng.uniform(-1, 1) for i in range(n) for j in range(i + 1, n)}
    return IsingModel(n, J, rng.uniform(-1, 1, n))


def random_qubo(seed, n=8):
    rng = np.random.default_rng(seed)
    Q = {(i, j): rng.normal() for i in range(n) for j in range(i, n) if rng.random() < 0.6}
    return Qubo(n, Q)


def test_qubo_to_ising_single_variable():
    model, offset = qubo_to_ising(Qubo(1, {(0, 0): 1.0}))
    assert model.fields[0] == -0.5
    assert offset == 0.5
    # z=0 <-> spin +1, z=1 <-> spin -1
    assert ising_energy(model, [1]) + offset == 0.0
    assert ising_energy(model, [-1]) + offset == 1.0


def test_qubo_to_ising_zero():
    model, offset = qubo_to_ising(Qubo(3, {}))
    assert offset == 0 and not model.couplings and np.all(model.fields == 0)


@pytest.mark.parametrize("seed", range(5))
def test_qubo_to_ising_exhaustive(seed):
    q = random_qubo(seed)
    model, offset = qubo_to_ising(q)
    for index in range(256):
        z = [(index >> i) & 1 for i in range(8)]
        spins = index_to_spins(index, 8)
        assert q.value(z) == pytest.approx(ising_energy(model, spins) + offset, abs=1e-12)
    np.testing.assert_allclose(q.values(), model.energies() + offset, atol=1e-12)


def test_ising_energy_examples():
    assert ising_energy(IsingModel(1, {}, [1.0]), [-1]) == -1
    assert ising_energy(IsingModel(2, {(0, 1): 1.0}), [1, -1]) == -1
    with pytest.raises(DomainError):
        ising_energy(IsingModel(2, {(0, 1): 1.0}), [1])
    with pytest.raises(DomainError):
        ising_energy(IsingModel(2, {(0, 1): 1.0}), [1, 0])


def test_ising_energy_permutation_invariant():
    rng = np.random.default_rng(8)
    for seed in range(10):
        m = random_ising(seed, 5)
        perm = rng.permutation(5)
        inv = np.argsort(perm)
        # spin i is relabelled inv[i]
        J2 = {(int(inv[i]), int(inv[j])): v for (i, j), v in m.couplings.items()}
        h2 = np.empty(5)
        h2[inv] = m.fields
        m2 = IsingModel(5, J2, h2)
        s = rng.choice([-1, 1], size=5)
        s2 = np.empty(5, dtype=int)
        s2[inv] = s
        assert ising_energy(m, s) == pytest.approx(ising_energy(m2, s2), abs=1e-12)


def test_model_validation():
    with pytest.raises(DomainError, match="self-coupling"):
        IsingModel(2, {(1, 1): 1.0})
    with pytest.raises(DomainError, match="out of range"):
        IsingModel(2, {(0, 2): 1.0})


def test_energies_match_loop_oracle():
    for seed in range(5):
        m = random_ising(seed, 5)
        np.testing.assert_allclose(m.energies(), brute_force_ising(m.fields, m.couplings, 5), atol=1e-12)


def test_brute_force_examples():
    cfg, e, d = brute_force_ground(IsingModel(1, {}, [1.0]))
    assert list(cfg) == [-1] and e == -1 and d == 1
    cfg, e, d = brute_force_ground(IsingModel(2, {(0, 1): 1.0}))
    assert e == -1 and d == 2
    # lowest basis index wins: (+1, -1) is index 2, (-1, +1) is index 1
    assert spins_to_index(cfg) == 1
    _, e, d = brute_force_ground(IsingModel(2, {(0, 1): -1.0}))
    assert e == -1 and d == 2


def test_schedule_endpoints():
    s = AnnealSchedule(10.0, 100)
    assert s.A(0) == 1 and s.A(10) == 0 and s.B(0) == 0 and s.B(10) == 1
    assert np.all(np.diff(s.A(np.linspace(0, 10, 11))) < 0)
    with pytest.raises(DomainError):
        AnnealSchedule(0, 10)
    with pytest.raises(DomainError):
        AnnealSchedule(1, 0)


def test_no_evolution_limit():
    m = IsingModel(2, {(0, 1): 1.0})
    r = anneal_evolve(m, AnnealSchedule(1e-9, 1), seed=3)
    np.testing.assert_allclose(np.abs(r.state.amplitudes), 0.5, atol=1e-8)
    assert r.ground_probability == pytest.approx(2 / 4, abs=1e-8)


def test_single_spin_adiabatic_passage():
    r = anneal_evolve(IsingModel(1, {}, [1.0]), AnnealSchedule(50, 500), seed=0)
    assert r.ground_probability >= 0.99
    assert r.energy == ising_energy(IsingModel(1, {}, [1.0]), r.config)


def test_random_six_spin_instances():
    hits = 0
    for seed in range(10):
        m = random_ising(seed)
        r = anneal_evolve(m, AnnealSchedule(100, 2000), seed=seed)
        _, e0, _ = brute_force_ground(m)
        hits += abs(r.energy - e0) < 1e-9
    assert hits >= 9


def test_norm_and_variational_bound():
    m = random_ising(77, 5)
    r = anneal_evolve(m, AnnealSchedule(20, 10**4), seed=0)
    assert abs(r.state.norm() - 1) < 1e-8
    _, e0, _ = brute_force_ground(m)
    assert r.expected_energy >= e0 - 1e-9


def test_adiabatic_trend():
    m = random_ising(123)
    probs = [anneal_evolve(m, AnnealSchedule(T, 20 * T), seed=0).ground_probability for T in (1, 10, 100)]
    inversions = [a - b for a, b in zip(probs, probs[1:]) if b < a]
    assert len(inversions) <= 1 and all(d <= 0.02 for d in inversions)


def test_gap_trace_single_spin():
    m = IsingModel(1, {}, [1.0])
    trace = spectral_gap_trace(m, AnnealSchedule(10, 10), 11)
    assert trace[0] == (0.0, pytest.approx(2.0))
    assert all(g > 0 for _, g in trace)


def test_gap_trace_endpoint_matches_brute_force():
    m = random_ising(4, 4)
    trace = spectral_gap_trace(m, AnnealSchedule(5, 5), 3)
    levels = np.unique(np.round(m.energies(), 12))
    assert trace[-1][1] == pytest.approx(levels[1] - levels[0], abs=1e-9)
    with pytest.raises(DomainError):
        spectral_gap_trace(random_ising(0, 9), AnnealSchedule(1, 1), 2)


def test_evolve_size_limit():
    with pytest.raises(DomainError):
        anneal_evolve(IsingModel(21), AnnealSchedule(1, 1))


def test_result_dict_and_determinism():
    m = random_ising(5, 4)
    a = anneal_evolve(m, AnnealSchedule(5, 50), seed=11, gap_samples=3).to_dict()
    b = anneal_evolve(m, AnnealSchedule(5, 50), seed=11, gap_samples=3).to_dict()
    assert a == b
    assert {"config", "energy", "ground_probability", "seed", "schedule"} <= set(a)
    assert len(a["gap_trace"]) == 3


def test_problem_from_dict():
    m = problem_from_dict({"n": 2, "linear": {"0": 0.5}, "quadratic": {"0,1": -2}})
    assert isinstance(m, IsingModel) and m.couplings == {(0, 1): -2.0}
    q = problem_from_dict({"type": "qubo", "n": 2, "linear": {"1": 3}, "quadratic": {"0,1": 1}})
    assert isinstance(q, Qubo) and q.value([1, 1]) == 4
    with pytest.raises(DomainError):
        problem_from_dict({"linear": {}})
