import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qubovqa.qubo import QuboModel, add_uniqueness_constraints, make_grid
from qubovqa.sampler import (
    AnnealSchedule, Sample, best_feasible, brute_force, decode, enumerate_energies, inject_noise, make_sample,
    one_hot_violations, simulated_anneal,
)

PI = np.pi
FAST = AnnealSchedule(sweeps=300, reads=16, seed=3)


def random_model(n, rng, density=0.5):
    quad = {
        (i, j): float(rng.normal()) for i, j in itertools.combinations(range(n), 2) if rng.random() < density
    }
    return QuboModel(n, rng.normal(size=n), quad, offset=float(rng.normal()))


def naive_minimum(model):
    """Plain loop over every assignment, lowest energy then lowest integer code."""
    best = None
    for code in range(2**model.n_vars):
        x = [(code >> i) & 1 for i in range(model.n_vars)]
        e = model.offset + sum(model.linear[i] * x[i] for i in range(model.n_vars))
        e += sum(c * x[i] * x[j] for (i, j), c in model.quadratic.items())
        if best is None or e < best[0] - 1e-12:
            best = (e, x)
    return best


def test_single_variable():
    s = brute_force(QuboModel(1, [-1.0], {}))
    assert s.assignment.tolist() == [1] and s.energy == -1.0
    s = brute_force(QuboModel(1, [2.0], {}, offset=0.5))
    assert s.assignment.tolist() == [0] and s.energy == 0.5


def test_tie_break_smallest_code():
    m = add_uniqueness_constraints(QuboModel(2, np.zeros(2), {}), a=1, d=2, lam=1.0)
    assert brute_force(m).assignment.tolist() == [1, 0]


def test_zero_model():
    s = brute_force(QuboModel(4, np.zeros(4), {}))
    assert s.energy == 0.0 and s.assignment.tolist() == [0, 0, 0, 0]


@pytest.mark.parametrize("seed", range(5))
def test_brute_force_matches_loop(seed):
    rng = np.random.default_rng(seed)
    m = random_model(10, rng)
    e, x = naive_minimum(m)
    s = brute_force(m)
    assert abs(s.energy - e) < 1e-9
    assert s.assignment.tolist() == x


def test_enumerate_energies_indexing(rng):
    m = random_model(6, rng)
    table = enumerate_energies(m)
    for code in (0, 1, 5, 37, 63):
        x = [(code >> i) & 1 for i in range(6)]
        assert abs(table[code] - m.energy(x)) < 1e-12


def test_independent_set_path(rng):
    # sparse 30-variable chain: elimination leaves few variables to enumerate
    n = 30
    quad = {(i, i + 1): float(rng.normal()) for i in range(n - 1)}
    m = QuboModel(n, rng.normal(size=n), quad)
    s = brute_force(m)
    # dynamic programming along the chain
    cost = {0: 0.0, 1: m.linear[0]}
    for i in range(1, n):
        c = quad[(i - 1, i)]
        cost = {b: min(cost[p] + b * (m.linear[i] + c * p) for p in (0, 1)) for b in (0, 1)}
    assert abs(s.energy - min(cost.values())) < 1e-9
    with pytest.raises(ValueError):
        brute_force(random_model(30, rng, density=1.0))


def test_anneal_finds_ground_state(rng):
    for _ in range(3):
        m = random_model(12, rng)
        samples = simulated_anneal(m, FAST)
        assert abs(samples[0].energy - brute_force(m).energy) < 1e-9


def test_anneal_deterministic_and_sorted(rng):
    m = random_model(15, rng)
    a, b = simulated_anneal(m, FAST), simulated_anneal(m, FAST)
    assert [s.assignment.tolist() for s in a] == [s.assignment.tolist() for s in b]
    energies = [s.energy for s in a]
    assert energies == sorted(energies) and len(a) == FAST.reads


def test_energy_audit(rng):
    m = random_model(14, rng)
    for s in simulated_anneal(m, FAST):
        assert abs(s.energy - m.energy(s.assignment)) <= 1e-12 * max(1.0, abs(s.energy))


def test_schedule_validation():
    with pytest.raises(ValueError):
        AnnealSchedule(beta_start=1.0, beta_end=0.5)
    with pytest.raises(ValueError):
        AnnealSchedule(reads=0)
    b = AnnealSchedule(sweeps=5).betas()
    assert b[0] == pytest.approx(0.1) and b[-1] == pytest.approx(10.0)


def test_sample_immutable():
    s = Sample([1, 0], 0.0, True)
    with pytest.raises(ValueError):
        s.assignment[0] = 0


def test_noise_level_zero_is_identity(rng):
    m = random_model(6, rng)
    assert inject_noise(m, 0.0, 1) is m


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.99), st.integers(0, 2**32 - 1))
def test_noise_bounds_and_sparsity(level, seed):
    m = random_model(8, np.random.default_rng(7), density=0.4)
    noisy = inject_noise(m, level, seed)
    assert set(noisy.quadratic) == set(m.quadratic)
    assert noisy.offset == m.offset
    for i in range(8):
        assert abs(noisy.linear[i] - m.linear[i]) <= level * abs(m.linear[i]) + 1e-15
    for k, c in m.quadratic.items():
        assert abs(noisy.quadratic[k] - c) <= level * abs(c) + 1e-15
        assert np.sign(noisy.quadratic[k]) == np.sign(c)


def test_noise_seeds(rng):
    m = random_model(8, rng)
    a, b = inject_noise(m, 0.2, 1), inject_noise(m, 0.2, 2)
    assert not np.allclose(a.linear, b.linear)
    assert np.array_equal(a.linear, inject_noise(m, 0.2, 1).linear)
    with pytest.raises(ValueError):
        inject_noise(m, 1.0, 0)


def test_decode_examples():
    g = make_grid([[0, 2 * PI]] * 2, d=2, w=2)
    dec = decode(Sample([1, 0, 0, 1], 0.0, True), g, (0, 0))
    assert dec.feasible and np.allclose(dec.angles, [PI / 4, 5 * PI / 4])
    assert decode(Sample([0, 0, 0, 0], 0.0, False), g, (0, 0)).violations == (0, 1)
    assert decode(Sample([1, 1, 1, 0], 0.0, False), g, (0, 0)).violations == (0,)
    with pytest.raises(ValueError):
        decode(Sample([1, 0], 0.0, True), g, (0, 0))


def test_one_hot_violations_and_best_feasible():
    assert one_hot_violations([1, 0, 0, 1, 0, 0], 2, 3) == ()
    assert one_hot_violations([1, 1, 0, 0, 0, 0], 2, 3) == (0, 1)
    m = QuboModel(4, np.zeros(4), {}, a=2, d=2)
    samples = [make_sample(m, x) for x in ([0, 0, 0, 0], [1, 0, 0, 1])]
    assert best_feasible(samples).assignment.tolist() == [1, 0, 0, 1]
    assert best_feasible(samples[:1]) is None
