"""Cyclic alpha-expansion: one QUBO decides which of a set of disjoint cycles to apply.

For cycles ``c_1..c_m`` and a current permutation ``P0`` write
``C_i = (c_i - I) P0``. Then for every binary ``alpha``::

    E(prod_i c_i^alpha_i P0) = E(P0) + alpha^T Wt alpha

with ``Wt[i, j] = E(C_i, C_j)`` off the diagonal and
``Wt[i, i] = E(C_i, C_i) + E(C_i, P0) + E(P0, C_i)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .core import (
    CycleSet,
    Permutation,
    QapInstance,
    SparseMatchMatrix,
    _alpha_vector,
    apply_cycles,
    cycle_to_sparse_delta,
)
from .errors import DimensionError, ValidationError
from .qubo import BackendConfig, Qubo, SimulatedAnnealingBackend, solve

# accepted QUBO values must beat zero by this much, relative to max |Wt|
IMPROVE_RTOL = 1e-9


def _as_cycle_set(cycles, n) -> CycleSet:
    if isinstance(cycles, CycleSet):
        if cycles.n != n:
            raise DimensionError(f"cycle set on n={cycles.n} used with size {n}")
        return cycles
    return CycleSet(tuple(cycles), n)


def parametrize_additive(cycles, alpha, p0: Permutation) -> Permutation:
    """Evaluate ``P0 + sum_i alpha_i (c_i - I) P0`` entrywise and read it back as a permutation."""
    cycles = _as_cycle_set(cycles, p0.n)
    a = _alpha_vector(alpha, len(cycles))
    acc = {(int(k), i): 1.0 for i, k in enumerate(p0.map)}
    for bit, cyc in zip(a, cycles.cycles):
        if not bit:
            continue
        for k, i, w in cycle_to_sparse_delta(cyc, p0).entries:
            acc[(k, i)] = acc.get((k, i), 0.0) + w
    image = np.full(p0.n, -1, dtype=np.int64)
    for (k, i), w in acc.items():
        if w == 0:
            continue
        if w != 1 or image[i] != -1:
            raise ValidationError("additive combination is not a permutation matrix")
        image[i] = k
    return Permutation(image)


def build_qubo(inst: QapInstance, p0: Permutation, cycles) -> Qubo:
    """Coupling matrix ``Wt`` of the expansion step around ``p0``."""
    if p0.n != inst.n:
        raise DimensionError(f"permutation of size {p0.n} for instance of size {inst.n}")
    cycles = _as_cycle_set(cycles, inst.n)
    m = len(cycles)
    if m == 0:
        return Qubo(np.zeros((0, 0)))
    deltas = [cycle_to_sparse_delta(c, p0) for c in cycles.cycles]
    rows = np.concatenate([d.rows for d in deltas])
    cols = np.concatenate([d.cols for d in deltas])
    w = np.concatenate([d.weights for d in deltas])
    group = np.repeat(np.arange(m), [d.nnz for d in deltas])
    G = np.zeros((m, rows.size))
    G[group, np.arange(rows.size)] = w

    # E(C_i, C_j) for all pairs
    EC = G @ inst.pair_costs(cols, rows, cols, rows) @ G.T
    # E(C_i, P0) + E(P0, C_i)
    src = np.arange(inst.n)
    lin = G @ inst.pair_costs(cols, rows, src, p0.map).sum(axis=1)
    lin += G @ inst.pair_costs(src, p0.map, cols, rows).sum(axis=0)

    Wt = (EC + EC.T) / 2
    Wt[np.diag_indices(m)] = np.diag(EC) + lin
    return Qubo(Wt)


@dataclass(frozen=True)
class ExpansionStep:
    cycles: CycleSet
    p0: Permutation
    qubo: Qubo
    chosen_alpha: tuple
    energy_before: float
    energy_after: float
    result: Permutation

    @property
    def accepted(self) -> bool:
        return any(self.chosen_alpha)

    @property
    def predicted_change(self) -> float:
        return self.qubo.energy(self.chosen_alpha)


def expand_step(
    inst: QapInstance,
    p0: Permutation,
    cycles,
    backend: BackendConfig = None,
    seed: int = 0,
    energy_before: Optional[float] = None,
) -> ExpansionStep:
    """Solve the expansion QUBO and apply the chosen cycles.

    Falls back to ``alpha = 0`` unless the best sample strictly lowers the energy,
    so the returned energy never exceeds ``energy_before``.
    """
    cycles = _as_cycle_set(cycles, inst.n)
    qubo = build_qubo(inst, p0, cycles)
    if energy_before is None:
        energy_before = inst.energy(p0)
    alpha = (0,) * len(cycles)
    if qubo.m:
        best = solve(qubo, backend, seed).first
        scale = max(1.0, float(np.abs(qubo.coeff).max()))
        if best.energy < -IMPROVE_RTOL * scale:
            alpha = best.x
    if any(alpha):
        result = apply_cycles(cycles, alpha, p0)
        energy_after = inst.energy(result)
    else:
        result, energy_after = p0, energy_before
    return ExpansionStep(cycles, p0, qubo, tuple(alpha), float(energy_before), float(energy_after), result)


@dataclass(frozen=True)
class TraceStep:
    iteration: int
    energy: float
    m: int
    accepted_bits: tuple = ()
    info: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        rec = {"iter": self.iteration, "energy": self.energy, "m": self.m, "accepted_bits": list(self.accepted_bits)}
        rec.update(self.info)
        return rec


@dataclass
class SolveTrace:
    steps: list
    final: Permutation

    @property
    def energies(self) -> list[float]:
        return [s.energy for s in self.steps]

    @property
    def final_energy(self) -> float:
        return self.steps[-1].energy

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_json(), sort_keys=True) + "\n" for s in self.steps)

    @staticmethod
    def parse_jsonl(text: str) -> list[dict]:
        return [json.loads(line) for line in text.splitlines() if line.strip()]


def covering_pair_sets(indices: Iterable[int], rng: np.random.Generator) -> list[list[tuple[int, int]]]:
    """Random maximal sets of disjoint pairs until every pair of ``indices`` has appeared.

    Each round greedily takes still-uncovered pairs in random order, then pairs
    up the leftover indices at random (those pairs are already covered, since
    the greedy pass is maximal over uncovered pairs).
    """
    idx = sorted(int(i) for i in indices)
    if len(set(idx)) != len(idx):
        raise ValidationError("indices must be distinct")
    uncovered = {(a, b) for x, a in enumerate(idx) for b in idx[x + 1:]}
    rounds = []
    while uncovered:
        order = sorted(uncovered)
        used = set()
        chosen = []
        for t in rng.permutation(len(order)):
            a, b = order[t]
            if a not in used and b not in used:
                used.update((a, b))
                chosen.append((a, b))
        free = [i for i in idx if i not in used]
        free = [free[t] for t in rng.permutation(len(free))]
        chosen += [tuple(sorted(free[t:t + 2])) for t in range(0, len(free) - 1, 2)]
        uncovered.difference_update(chosen)
        rounds.append(chosen)
    return rounds


@dataclass(frozen=True)
class ExpansionConfig:
    backend: BackendConfig = field(default_factory=SimulatedAnnealingBackend)
    passes: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.passes < 1:
            raise ValidationError("passes must be at least 1")


def solve_random_cycles(inst: QapInstance, p_init: Permutation, config: ExpansionConfig = None) -> SolveTrace:
    """Iterate expansion steps over random disjoint 2-cycle sets covering all index pairs.

    One pass ends once every 2-cycle has been offered at least once. Stops after
    ``config.passes`` passes, or earlier if a whole pass changes nothing.
    """
    config = config or ExpansionConfig()
    if p_init.n != inst.n:
        raise DimensionError(f"initial permutation of size {p_init.n} for instance of size {inst.n}")
    rng = np.random.default_rng(config.seed)
    p = p_init
    e = inst.energy(p)
    steps = [TraceStep(0, e, 0)]
    it = 0
    for _ in range(config.passes):
        changed = False
        for pairs in covering_pair_sets(range(inst.n), rng):
            it += 1
            st = expand_step(inst, p, CycleSet(tuple(pairs), inst.n), config.backend,
                             int(rng.integers(2**31)), energy_before=e)
            if st.accepted:
                changed = True
                p, e = st.result, st.energy_after
            steps.append(TraceStep(it, e, len(pairs), st.chosen_alpha))
        if not changed:
            break
    return SolveTrace(steps, p)
