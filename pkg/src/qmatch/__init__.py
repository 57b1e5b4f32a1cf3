"""Cyclic alpha-expansion for quadratic assignment problems with classical QUBO backends."""
from .core import (
    CycleSet,
    FactoredInstance,
    IsometricInstance,
    LawlerInstance,
    Permutation,
    QapInstance,
    SparseMatchMatrix,
    apply_cycles,
    compose,
    cycle_to_sparse_delta,
    decompose_involutions,
    energy,
    invert,
)
from .errors import CapabilityError, DimensionError, ParseError, QMatchError, SolverError, ValidationError
from .expansion import (
    ExpansionConfig,
    ExpansionStep,
    SolveTrace,
    build_qubo,
    expand_step,
    parametrize_additive,
    solve_random_cycles,
)
from .matching import QMatchConfig, build_subproblem, influence, qmatch_run, sample_worst_cycle_sets
from .qubo import (
    ExhaustiveBackend,
    IsingModel,
    Qubo,
    SampleSet,
    SimulatedAnnealingBackend,
    TabuSearchBackend,
    is_submodular,
    make_backend,
    solve,
    to_ising,
)

__version__ = "0.1.0"
