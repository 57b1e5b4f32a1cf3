"""Worst-vertex shape matching driver.

Each outer iteration scores every vertex by how badly its match distorts
distances, frees the ``k`` worst target vertices, and solves the restricted
problem with repeated expansion steps over 2-cycles before writing the improved
assignment back into the full permutation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import CycleSet, IsometricInstance, LawlerInstance, Permutation, QapInstance, invert
from .errors import CapabilityError, ValidationError
from .expansion import SolveTrace, TraceStep, covering_pair_sets, expand_step
from .qubo import EXHAUSTIVE_MAX_M, BackendConfig, ExhaustiveBackend, SimulatedAnnealingBackend


@dataclass(frozen=True)
class InfluenceReport:
    scores_src: np.ndarray
    scores_tgt: np.ndarray
    worst_src: list
    worst_tgt: list
    k_worst: int


def _top(scores, count):
    order = np.lexsort((np.arange(scores.size), -scores))
    return [int(i) for i in order[:count]]


def influence(inst: QapInstance, p: Permutation, k_worst: int = 40) -> InfluenceReport:
    """Per-vertex contribution to the energy and the ``k_worst // 2`` worst vertices per shape."""
    if not isinstance(inst, IsometricInstance):
        raise CapabilityError("influence scores need an isometric instance (two distance matrices)")
    inv = invert(p).map
    scores_src = np.abs(inst.d_src - inst.d_tgt[np.ix_(p.map, p.map)]).sum(axis=1)
    scores_tgt = np.abs(inst.d_tgt - inst.d_src[np.ix_(inv, inv)]).sum(axis=1)
    half = min(k_worst // 2, inst.n)
    return InfluenceReport(scores_src, scores_tgt, _top(scores_src, half), _top(scores_tgt, half), int(k_worst))


def working_set(report: InfluenceReport, p: Permutation) -> list[int]:
    """Target-side free set: images of the worst sources plus the worst targets, padded to ``k``.

    Padding follows the target ranking by influence, where a target's score is
    the larger of its own score and its preimage's score.
    """
    k = min(report.k_worst, p.n)
    chosen = []
    for t in [int(p[v]) for v in report.worst_src] + list(report.worst_tgt):
        if t not in chosen:
            chosen.append(t)
    chosen = chosen[:k]
    if len(chosen) < k:
        combined = np.maximum(report.scores_tgt, report.scores_src[invert(p).map])
        taken = set(chosen)
        for t in _top(combined, p.n):
            if len(chosen) == k:
                break
            if t not in taken:
                chosen.append(t)
                taken.add(t)
    return chosen


@dataclass(frozen=True)
class SubproblemMatrix:
    """Restricted ``k^2 x k^2`` cost over the free assignments with the fixed ones absorbed.

    Local match ``(a, b)`` pairs source ``sources[a]`` with target ``subset[b]``
    and sits at flat index ``a * k + b``. ``energy(sigma) + offset`` equals the
    full energy of the corresponding global permutation.
    """

    subset: tuple
    sources: tuple
    table: np.ndarray
    base_perm: Permutation
    offset: float

    @property
    def k(self) -> int:
        return len(self.subset)

    @property
    def instance(self) -> LawlerInstance:
        return LawlerInstance(self.table)

    def energy(self, sigma: Permutation) -> float:
        return self.instance.energy(sigma)

    def global_permutation(self, sigma: Permutation) -> Permutation:
        out = self.base_perm.map.copy()
        out[list(self.sources)] = np.asarray(self.subset)[sigma.map]
        return Permutation(out)


def build_subproblem(inst: QapInstance, p: Permutation, subset) -> SubproblemMatrix:
    """Build the restricted cost table for freeing the targets in ``subset``.

    Cross terms with every fixed match ``(v, p(v))`` are added on the diagonal
    entries ``(a, b) = (c, d)`` only, which keeps energy differences between
    sub-permutations identical to the full problem.
    """
    T = np.asarray([int(t) for t in subset], dtype=np.int64)
    if len(set(T.tolist())) != T.size:
        raise ValidationError("subset indices must be distinct")
    if T.size and (T.min() < 0 or T.max() >= inst.n):
        raise ValidationError(f"subset out of range for n={inst.n}")
    if T.size < 1:
        raise ValidationError("subset must not be empty")
    k = T.size
    S = invert(p).map[T]
    src = np.repeat(S, k)
    tgt = np.tile(T, k)
    table = inst.pair_costs(src, tgt, src, tgt).astype(float)
    free = np.zeros(inst.n, dtype=bool)
    free[S] = True
    F = np.flatnonzero(~free)
    offset = 0.0
    if F.size:
        pF = p.map[F]
        cross = inst.pair_costs(src, tgt, F, pF).sum(axis=1) + inst.pair_costs(F, pF, src, tgt).sum(axis=0)
        table[np.diag_indices(k * k)] += cross
        offset = float(inst.pair_costs(F, pF, F, pF).sum())
    table.setflags(write=False)
    return SubproblemMatrix(tuple(T.tolist()), tuple(S.tolist()), table, p, offset)


def sample_worst_cycle_sets(report: InfluenceReport, p: Permutation, seed=0) -> list[CycleSet]:
    """Disjoint 2-cycle sets on the working set until every pair in it has been offered."""
    T = working_set(report, p)
    if len(T) < 2:
        raise ValidationError(f"working set has {len(T)} vertices; need at least 2")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return [CycleSet(tuple(pairs), p.n) for pairs in covering_pair_sets(T, rng)]


@dataclass(frozen=True)
class QMatchConfig:
    k_worst: int = 40
    backend: BackendConfig = field(default_factory=SimulatedAnnealingBackend)
    max_outer_iters: int = 30
    seed: int = 0
    init: str = "identity"

    def __post_init__(self):
        if self.k_worst < 2 or self.k_worst % 2:
            raise ValidationError(f"k_worst must be even and >= 2, got {self.k_worst}")
        if isinstance(self.backend, ExhaustiveBackend) and self.k_worst > 2 * EXHAUSTIVE_MAX_M:
            raise ValidationError(f"k_worst={self.k_worst} exceeds the exhaustive backend limit of {2 * EXHAUSTIVE_MAX_M}")
        if self.max_outer_iters < 1:
            raise ValidationError("max_outer_iters must be positive")


def qmatch_run(inst: QapInstance, p_init: Permutation, config: QMatchConfig = None) -> SolveTrace:
    """Refine ``p_init`` by repeatedly re-solving the worst-vertex subproblem.

    The trace holds one record per outer iteration with the global energy.
    Stops when an outer iteration leaves the permutation unchanged or after
    ``config.max_outer_iters`` iterations.
    """
    config = config or QMatchConfig()
    if not isinstance(inst, IsometricInstance):
        raise CapabilityError("qmatch_run needs an isometric instance")
    n = inst.n
    k = min(config.k_worst, n - n % 2)
    rng = np.random.default_rng(config.seed)
    p = p_init
    e = inst.energy(p)
    steps = [TraceStep(0, e, 0)]
    if k < 2:
        return SolveTrace(steps, p)
    for it in range(1, config.max_outer_iters + 1):
        report = influence(inst, p, k)
        sets = sample_worst_cycle_sets(report, p, rng)
        sub = build_subproblem(inst, p, working_set(report, p))
        local_of = {t: a for a, t in enumerate(sub.subset)}
        local = sub.instance
        sigma = Permutation.identity(k)
        es = local.energy(sigma)
        swaps = 0
        for cs in sets:
            pairs = tuple((local_of[a], local_of[b]) for a, b in cs.cycles)
            st = expand_step(local, sigma, CycleSet(pairs, k), config.backend,
                             int(rng.integers(2**31)), energy_before=es)
            if st.accepted:
                sigma, es = st.result, st.energy_after
                swaps += sum(st.chosen_alpha)
        info = {"k": k, "qubos": len(sets), "swaps": swaps}
        if sigma.is_identity():
            steps.append(TraceStep(it, e, k, (), {**info, "changed": 0}))
            break
        new_p = sub.global_permutation(sigma)
        changed = int(np.count_nonzero(new_p.map != p.map))
        p, e = new_p, inst.energy(new_p)
        steps.append(TraceStep(it, e, k, (), {**info, "changed": changed}))
    return SolveTrace(steps, p)
