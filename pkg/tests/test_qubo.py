import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import brute_qubo
from qmatch.errors import CapabilityError, DimensionError, ValidationError
from qmatch.qubo import (
    ExhaustiveBackend,
    Qubo,
    SampleSet,
    SimulatedAnnealingBackend,
    TabuSearchBackend,
    is_submodular,
    make_backend,
    solve,
    to_ising,
)

small = st.integers(1, 8).flatmap(
    lambda m: arrays(float, (m, m), elements=st.floats(-10, 10, allow_nan=False, width=32))
)


def test_single_variable():
    q = Qubo([[-4.0]])
    best = ExhaustiveBackend().sample(q).first
    assert best.x == (1,) and best.energy == -4.0


def test_energy_and_symmetrization():
    q = Qubo([[1.0, 4.0], [0.0, -3.0]])
    np.testing.assert_array_equal(q.coeff, [[1, 2], [2, -3]])
    assert q.energy([1, 1]) == 2.0
    assert q.energy([0, 0]) == 0.0
    with pytest.raises(DimensionError):
        q.energy([1])


def test_rejects_bad_input():
    with pytest.raises(DimensionError):
        Qubo(np.zeros((2, 3)))
    with pytest.raises(ValidationError):
        Qubo([[np.nan]])


@given(small)
@settings(max_examples=60, deadline=None)
def test_ising_matches_qubo(C):
    q = Qubo(C)
    model = to_ising(q)
    rng = np.random.default_rng(0)
    for _ in range(8):
        x = rng.integers(0, 2, q.m)
        assert model.energy(2 * x - 1) == pytest.approx(q.energy(x), abs=1e-6)
    assert np.all(np.diag(model.couplings) == 0)


@given(small)
@settings(max_examples=60, deadline=None)
def test_exhaustive_matches_brute_force(C):
    q = Qubo(C)
    e, _ = brute_qubo(q.coeff)
    assert ExhaustiveBackend().sample(q).first.energy == pytest.approx(e, abs=1e-9)


def test_exhaustive_across_split_boundary():
    rng = np.random.default_rng(3)
    C = rng.normal(size=(15, 15))
    q = Qubo(C)
    e, bits = brute_qubo(q.coeff)
    best = ExhaustiveBackend().sample(q).first
    assert best.energy == pytest.approx(e)
    assert best.x == bits


def test_exhaustive_capability_limit():
    with pytest.raises(CapabilityError):
        ExhaustiveBackend().sample(Qubo(np.zeros((26, 26))))


def test_samples_sorted_with_lexicographic_ties():
    ss = ExhaustiveBackend(keep=4).sample(Qubo(np.zeros((2, 2))))
    assert [s.x for s in ss] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    energies = [s.energy for s in ExhaustiveBackend().sample(Qubo(np.random.default_rng(0).normal(size=(6, 6))))]
    assert energies == sorted(energies)


@pytest.mark.parametrize("backend", [SimulatedAnnealingBackend(reads=100), TabuSearchBackend(reads=5)])
def test_heuristics_reach_optimum_on_small_problems(backend):
    rng = np.random.default_rng(4)
    for _ in range(5):
        q = Qubo(rng.normal(size=(10, 10)))
        e, _ = brute_qubo(q.coeff)
        assert backend.sample(q, seed=1).first.energy == pytest.approx(e)


@pytest.mark.parametrize("backend", [SimulatedAnnealingBackend(reads=20), TabuSearchBackend(reads=3)])
def test_heuristics_deterministic(backend):
    q = Qubo(np.random.default_rng(5).normal(size=(12, 12)))
    assert backend.sample(q, seed=9).to_json() == backend.sample(q, seed=9).to_json()


def test_occurrences_sum_to_reads():
    ss = SimulatedAnnealingBackend(reads=50).sample(Qubo(np.random.default_rng(6).normal(size=(5, 5))), 0)
    assert sum(s.num_occurrences for s in ss) == 50


def test_reads_validated():
    with pytest.raises(ValidationError):
        SimulatedAnnealingBackend(reads=0)
    with pytest.raises(ValidationError):
        make_backend("annealer")


def test_submodularity():
    assert is_submodular(Qubo([[1, -1], [-1, 2]]))
    assert not is_submodular(Qubo([[1, 1], [1, 2]]))


def test_json_roundtrip():
    q = Qubo([[1.0, 0.5], [0.5, -2.0]])
    q2 = Qubo.from_json(json.loads(json.dumps(q.to_json())))
    np.testing.assert_array_equal(q.coeff, q2.coeff)
    with pytest.raises(ValidationError):
        Qubo.from_json({"m": 3, "coeff": [[1.0]]})
    ss = solve(q, ExhaustiveBackend())
    obj = json.loads(json.dumps(ss.to_json()))
    assert obj["best"] == 0 and obj["samples"][0]["energy"] == -2.0


def test_empty_qubo():
    q = Qubo(np.zeros((0, 0)))
    assert solve(q).first.x == ()
    assert SampleSet.from_states(q, np.zeros((3, 0))).first.num_occurrences == 3
