import itertools

import numpy as np
import pytest

from oracles import random_distances
from qmatch.core import FactoredInstance, IsometricInstance, Permutation
from qmatch.errors import CapabilityError, ValidationError
from qmatch.matching import (
    QMatchConfig,
    build_subproblem,
    influence,
    qmatch_run,
    sample_worst_cycle_sets,
    working_set,
)
from qmatch.qubo import ExhaustiveBackend

DM3 = np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0.0]])
DN3 = np.array([[0, 1, 3], [1, 0, 2], [3, 2, 0.0]])  # DM3 with 0 and 1 swapped


def test_influence_three_points():
    rep = influence(IsometricInstance(DM3, DN3), Permutation.identity(3), k_worst=2)
    np.testing.assert_allclose(rep.scores_src, [1, 1, 2])
    assert rep.worst_src == [2]


def test_influence_sums_to_energy():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 15))
        inst = IsometricInstance(random_distances(n, rng), random_distances(n, rng))
        p = Permutation.random(n, rng)
        rep = influence(inst, p, 4)
        assert rep.scores_src.sum() == pytest.approx(inst.energy(p))
        np.testing.assert_allclose(rep.scores_tgt[p.map], rep.scores_src)


def test_influence_needs_isometric():
    with pytest.raises(CapabilityError):
        influence(FactoredInstance(np.eye(3), np.eye(3)), Permutation.identity(3))


def test_working_set_size_and_content():
    rng = np.random.default_rng(1)
    inst = IsometricInstance(random_distances(12, rng), random_distances(12, rng))
    p = Permutation.random(12, rng)
    rep = influence(inst, p, 6)
    T = working_set(rep, p)
    assert len(T) == len(set(T)) == 6
    assert {p[v] for v in rep.worst_src} <= set(T)
    assert set(rep.worst_tgt) <= set(T)


def test_subproblem_matches_full_energy():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = int(rng.integers(3, 9))
        k = int(rng.integers(1, min(n, 5) + 1))
        inst = IsometricInstance(random_distances(n, rng), random_distances(n, rng))
        p = Permutation.random(n, rng)
        T = rng.choice(n, k, replace=False)
        sub = build_subproblem(inst, p, T)
        for sigma in itertools.permutations(range(k)):
            s = Permutation(sigma)
            assert sub.energy(s) + sub.offset == pytest.approx(inst.energy(sub.global_permutation(s)))
        assert sub.global_permutation(Permutation.identity(k)) == p


def test_subproblem_validation():
    inst = IsometricInstance(DM3, DN3)
    with pytest.raises(ValidationError):
        build_subproblem(inst, Permutation.identity(3), [0, 0])
    with pytest.raises(ValidationError):
        build_subproblem(inst, Permutation.identity(3), [5])


def test_cycle_sets_cover_working_set():
    rng = np.random.default_rng(3)
    inst = IsometricInstance(random_distances(10, rng), random_distances(10, rng))
    p = Permutation.random(10, rng)
    rep = influence(inst, p, 6)
    T = working_set(rep, p)
    seen = set()
    for cs in sample_worst_cycle_sets(rep, p, 0):
        assert cs.support() <= set(T)
        seen.update(tuple(sorted(c)) for c in cs.cycles)
    assert seen == set(itertools.combinations(sorted(T), 2))


def test_identity_fixed_point():
    D = random_distances(8, np.random.default_rng(4))
    tr = qmatch_run(IsometricInstance(D, D), Permutation.identity(8), QMatchConfig(4, ExhaustiveBackend()))
    assert tr.final.is_identity() and tr.final_energy == 0


def test_trace_monotone_and_small_planted():
    rng = np.random.default_rng(5)
    D = random_distances(10, rng)
    pi = rng.permutation(10)
    DN = np.empty_like(D)
    DN[np.ix_(pi, pi)] = D
    inst = IsometricInstance(D, DN)
    tr = qmatch_run(inst, Permutation.random(10, rng), QMatchConfig(10, ExhaustiveBackend(), 30, seed=1))
    e = tr.energies
    assert all(b <= a + 1e-9 for a, b in zip(e, e[1:]))
    assert tr.final_energy == pytest.approx(inst.energy(tr.final))


def test_config_validation():
    with pytest.raises(ValidationError):
        QMatchConfig(k_worst=3)
    with pytest.raises(ValidationError):
        QMatchConfig(k_worst=52, backend=ExhaustiveBackend())
    with pytest.raises(ValidationError):
        QMatchConfig(max_outer_iters=0)
