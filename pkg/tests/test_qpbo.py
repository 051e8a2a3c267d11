import numpy as np
import pytest
from oracles import binary_energy, brute_binary_min

from patchfuse.core import DimensionError
from patchfuse.qpbo import UNLABELED, BinaryEnergy, NonFiniteCoefficient, energy_of, solve_qpbo


def _random(rng, n, submodular=False):
    unary = rng.normal(0, 2, (n, 2)).round(2)
    pw = []
    for _ in range(int(rng.integers(0, 2 * n + 1)) if n > 1 else 0):
        u, v = rng.choice(n, 2, replace=False)
        t = rng.normal(0, 2, 4).round(2)
        if submodular and t[1] + t[2] < t[0] + t[3]:
            t[1] += (t[0] + t[3]) - (t[1] + t[2]) + rng.uniform(0, 1)
        pw.append((int(u), int(v), *t))
    return unary, pw


def _energy(n, unary, pw):
    return BinaryEnergy.from_terms(n, {i: tuple(unary[i]) for i in range(n)}, pw)


def test_single_variable():
    lab = solve_qpbo(BinaryEnergy.from_terms(1, {0: (0.0, -1.0)}))
    assert lab.values.tolist() == [1]


def test_submodular_pair():
    e = BinaryEnergy.from_terms(2, {0: (1.0, 0.0), 1: (1.0, 0.0)}, [(0, 1, 0.0, 1.0, 1.0, 0.0)])
    lab = solve_qpbo(e)
    assert lab.values.tolist() == [1, 1]
    assert energy_of(e, lab.values) == brute_binary_min(2, e.unary, [(0, 1, 0.0, 1.0, 1.0, 0.0)])


def test_frustrated_pair_persistency_holds():
    pw = [(0, 1, 1.0, 0.0, 0.0, 1.0)]
    e = BinaryEnergy.from_terms(2, {}, pw)
    lab = solve_qpbo(e)
    fixed = {i: int(v) for i, v in enumerate(lab.values) if v != UNLABELED}
    assert brute_binary_min(2, e.unary, pw, fixed) == brute_binary_min(2, e.unary, pw)


def test_energy_of_examples(rng):
    e = BinaryEnergy.from_terms(3, {0: (1.0, 2.0), 2: (-1.0, 0.5)}, [(0, 1, 0.25, 0, 0, 0)])
    assert energy_of(e, [0, 0, 0]) == 1.0 + 0.0 - 1.0 + 0.25
    e2 = BinaryEnergy.from_terms(2, {}, [(0, 1, 0, 0, 0, -2)])
    assert energy_of(e2, [1, 1]) == -2.0
    for _ in range(20):
        unary, pw = _random(rng, 6)
        e = _energy(6, unary, pw)
        x = rng.integers(0, 2, 6)
        assert abs(energy_of(e, x) - binary_energy(unary, pw, x.tolist())) <= 1e-9
    with pytest.raises(DimensionError):
        energy_of(e, [0, 1])


def test_invalid_energies():
    with pytest.raises(NonFiniteCoefficient):
        BinaryEnergy.from_terms(1, {0: (np.inf, 0.0)})
    with pytest.raises(ValueError):
        BinaryEnergy.from_terms(2, {}, [(1, 1, 0, 0, 0, 0)])
    with pytest.raises(IndexError):
        BinaryEnergy.from_terms(2, {}, [(0, 2, 0, 0, 0, 0)])


def test_empty_energy():
    assert len(solve_qpbo(BinaryEnergy.from_terms(0))) == 0


def test_reparameterization_invariance(rng):
    for _ in range(40):
        n = int(rng.integers(2, 8))
        unary, pw = _random(rng, n)
        if not pw:
            continue
        e1 = _energy(n, unary, pw)
        k = int(rng.integers(len(pw)))
        c = float(rng.normal(0, 3))
        pw2 = [t if i != k else (*t[:2], *(np.array(t[2:]) + c)) for i, t in enumerate(pw)]
        e2 = _energy(n, unary, pw2)
        l1, l2 = solve_qpbo(e1), solve_qpbo(e2)
        assert np.array_equal(l1.values, l2.values)
        if l1.n_unlabeled == 0:
            assert abs(energy_of(e2, l2.values) - energy_of(e1, l1.values) - c) <= 1e-9


def test_persistency_on_random_instances(rng):
    for _ in range(100):
        n = int(rng.integers(1, 9))
        unary, pw = _random(rng, n)
        lab = solve_qpbo(_energy(n, unary, pw))
        fixed = {i: int(v) for i, v in enumerate(lab.values) if v != UNLABELED}
        assert abs(brute_binary_min(n, unary, pw, fixed) - brute_binary_min(n, unary, pw)) <= 1e-9
