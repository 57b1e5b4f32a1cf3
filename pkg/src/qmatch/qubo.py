"""QUBO / Ising problem types and classical sampling backends.

A :class:`Qubo` minimizes ``x^T C x`` over ``x in {0,1}^m`` with linear terms
on the diagonal of ``C``. The backends here play the role of an annealer: they
return a :class:`SampleSet` of candidate bit vectors sorted by energy.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .errors import CapabilityError, DimensionError, ValidationError

EXHAUSTIVE_MAX_M = 25


class Qubo:
    """Symmetric coefficient matrix of a QUBO. The input is symmetrized."""

    def __init__(self, coeff):
        C = np.asarray(coeff, dtype=float)
        if C.ndim == 0:
            C = C.reshape(1, 1)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise DimensionError(f"QUBO matrix must be square, got shape {C.shape}")
        if not np.all(np.isfinite(C)):
            raise ValidationError("QUBO matrix has non-finite entries")
        C = (C + C.T) / 2
        C.setflags(write=False)
        self.coeff = C

    @property
    def m(self) -> int:
        return self.coeff.shape[0]

    def energy(self, x) -> float:
        """``x^T C x`` for a single binary vector."""
        x = np.asarray(x).ravel()
        if x.size != self.m:
            raise DimensionError(f"assignment has {x.size} bits, QUBO has {self.m}")
        idx = np.flatnonzero(x)
        return float(self.coeff[np.ix_(idx, idx)].sum())

    def to_json(self) -> dict:
        return {"m": self.m, "coeff": self.coeff.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Qubo":
        try:
            m, coeff = int(obj["m"]), obj["coeff"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"QUBO JSON needs 'm' and 'coeff': {exc}") from None
        q = cls(coeff) if m else cls(np.zeros((0, 0)))
        if q.m != m:
            raise ValidationError(f"QUBO JSON declares m={m} but coeff is {q.m}x{q.m}")
        return q


@dataclass(frozen=True)
class IsingModel:
    """``s^T J s + b^T s + offset`` over ``s in {-1, 1}^m``; ``J`` has zero diagonal."""

    couplings: np.ndarray
    biases: np.ndarray
    offset: float

    def energy(self, s) -> float:
        s = np.asarray(s, dtype=float)
        return float(s @ self.couplings @ s + self.biases @ s + self.offset)


def to_ising(q: Qubo) -> IsingModel:
    """Substitute ``x = (s + 1) / 2``."""
    C = q.coeff
    J = C / 4
    J = J - np.diag(np.diag(J))
    b = C.sum(axis=1) / 2
    offset = float(C.sum() / 4 + np.trace(C) / 4)
    return IsingModel(J, b, offset)


def is_submodular(q: Qubo) -> bool:
    """True iff every off-diagonal coefficient is non-positive."""
    off = q.coeff[~np.eye(q.m, dtype=bool)]
    return bool(np.all(off <= 0))


class Sample(NamedTuple):
    x: tuple
    energy: float
    num_occurrences: int


@dataclass(frozen=True)
class SampleSet:
    """Distinct samples sorted by energy, ties by lexicographically smallest bits."""

    samples: tuple

    @property
    def best(self) -> int:
        return 0

    @property
    def first(self) -> Sample:
        return self.samples[0]

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @classmethod
    def from_states(cls, q: Qubo, states) -> "SampleSet":
        states = np.asarray(states, dtype=np.int8)
        if states.ndim != 2 or states.shape[1] != q.m:
            raise DimensionError(f"states must have shape (reads, {q.m}), got {states.shape}")
        if states.shape[0] == 0:
            raise ValidationError("no samples")
        if q.m == 0:
            return cls((Sample((), 0.0, states.shape[0]),))
        uniq, counts = np.unique(states, axis=0, return_counts=True)
        samples = [Sample(tuple(int(v) for v in row), q.energy(row), int(c)) for row, c in zip(uniq, counts)]
        samples.sort(key=lambda s: (s.energy, s.x))
        return cls(tuple(samples))

    def to_json(self) -> dict:
        return {
            "best": self.best,
            "samples": [
                {"x": list(s.x), "energy": s.energy, "num_occurrences": s.num_occurrences}
                for s in self.samples
            ],
        }


def _check_reads(reads):
    if int(reads) < 1:
        raise ValidationError(f"reads must be positive, got {reads}")


def _read_seeds(seed, reads):
    # numba's generator takes 32-bit seeds
    return (np.arange(reads, dtype=np.int64) + int(seed)) % (2**32)


@dataclass(frozen=True)
class ExhaustiveBackend:
    """Enumerate all ``2**m`` assignments; returns the ``keep`` lowest."""

    keep: int = 16
    name = "exhaustive"

    def sample(self, q: Qubo, seed: int = 0) -> SampleSet:
        if q.m > EXHAUSTIVE_MAX_M:
            raise CapabilityError(f"exhaustive backend supports m <= {EXHAUSTIVE_MAX_M}, got m={q.m}")
        if self.keep < 1:
            raise ValidationError("keep must be positive")
        return SampleSet.from_states(q, _enumerate_lowest(q.coeff, self.keep))


@lru_cache(maxsize=32)
def _bit_table(m):
    # row r holds the bits of r, most significant first
    codes = np.arange(2**m, dtype=np.int64)
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    table = ((codes[:, None] >> shifts[None, :]) & 1).astype(float)
    table.setflags(write=False)
    return table


def _enumerate_lowest(C, keep, low_bits=12, block=1 << 20):
    m = C.shape[0]
    if m == 0:
        return np.zeros((1, 0), dtype=np.int8)
    L = min(m, low_bits)
    H = m - L
    Xl = _bit_table(L)
    Xh = _bit_table(H)
    Cll = C[H:, H:]
    Chh = C[:H, :H]
    Chl = C[:H, H:]
    El = ((Xl @ Cll) * Xl).sum(axis=1)
    Eh = ((Xh @ Chh) * Xh).sum(axis=1) if H else np.zeros(1)
    cap = keep + 64
    best_codes = np.empty(0, dtype=np.int64)
    best_e = np.empty(0)
    rows_per_chunk = max(1, block // Xl.shape[0])
    for start in range(0, Xh.shape[0], rows_per_chunk):
        stop = min(Xh.shape[0], start + rows_per_chunk)
        E = Eh[start:stop, None] + El[None, :]
        if H:
            E = E + 2.0 * (Xh[start:stop] @ Chl) @ Xl.T
        codes = (np.arange(start, stop, dtype=np.int64)[:, None] << L) + np.arange(Xl.shape[0])[None, :]
        E = E.ravel()
        codes = codes.ravel()
        if E.size > cap:
            kth = np.partition(E, cap - 1)[cap - 1]
            sel = E <= kth
            E, codes = E[sel], codes[sel]
        best_e = np.concatenate([best_e, E])
        best_codes = np.concatenate([best_codes, codes])
        order = np.lexsort((best_codes, best_e))[:cap]
        best_e, best_codes = best_e[order], best_codes[order]
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    return ((best_codes[:, None] >> shifts[None, :]) & 1).astype(np.int8)


@dataclass(frozen=True)
class SimulatedAnnealingBackend:
    """Metropolis single-flip annealing with a geometric temperature schedule.

    ``sweeps`` defaults to ``10 * m``. Temperatures default to ``max|C|`` and
    ``1e-3 * max|C|``.
    """

    reads: int = 500
    sweeps: Optional[int] = None
    t_initial: Optional[float] = None
    t_final: Optional[float] = None
    name = "sa"

    def __post_init__(self):
        _check_reads(self.reads)

    def schedule(self, q: Qubo) -> np.ndarray:
        sweeps = self.sweeps if self.sweeps is not None else 10 * q.m
        if sweeps < 1:
            raise ValidationError("sweeps must be positive")
        scale = float(np.abs(q.coeff).max(initial=0.0)) or 1.0
        t0 = self.t_initial if self.t_initial is not None else scale
        t1 = self.t_final if self.t_final is not None else 1e-3 * scale
        if t0 <= 0 or t1 <= 0:
            raise ValidationError("temperatures must be positive")
        return 1.0 / np.geomspace(t0, t1, sweeps)

    def sample(self, q: Qubo, seed: int = 0) -> SampleSet:
        _check_reads(self.reads)
        if q.m == 0:
            return SampleSet.from_states(q, np.zeros((1, 0)))
        states = _kernels.anneal(np.ascontiguousarray(q.coeff), _read_seeds(seed, self.reads), self.schedule(q))
        return SampleSet.from_states(q, states)


@dataclass(frozen=True)
class TabuSearchBackend:
    """Single-flip tabu search; ``tenure`` defaults to ``max(1, m // 4)``, ``iterations`` to ``50 * m``."""

    reads: int = 10
    tenure: Optional[int] = None
    iterations: Optional[int] = None
    name = "tabu"

    def __post_init__(self):
        _check_reads(self.reads)

    def sample(self, q: Qubo, seed: int = 0) -> SampleSet:
        _check_reads(self.reads)
        if q.m == 0:
            return SampleSet.from_states(q, np.zeros((1, 0)))
        tenure = self.tenure if self.tenure is not None else max(1, q.m // 4)
        iterations = self.iterations if self.iterations is not None else 50 * q.m
        states = _kernels.tabu(np.ascontiguousarray(q.coeff), _read_seeds(seed, self.reads), int(iterations), int(tenure))
        return SampleSet.from_states(q, states)


BackendConfig = ExhaustiveBackend | SimulatedAnnealingBackend | TabuSearchBackend


def make_backend(name: str, reads: int = 500, **kwargs) -> BackendConfig:
    """Build a backend from its CLI name (``exhaustive``, ``sa`` or ``tabu``)."""
    if name == "exhaustive":
        return ExhaustiveBackend(**kwargs)
    if name == "sa":
        return SimulatedAnnealingBackend(reads=reads, **kwargs)
    if name == "tabu":
        return TabuSearchBackend(reads=reads, **kwargs)
    raise ValidationError(f"unknown backend {name!r}")


def solve(q: Qubo, backend: BackendConfig = None, seed: int = 0) -> SampleSet:
    """Sample ``q`` with ``backend`` (simulated annealing, 500 reads, by default)."""
    if backend is None:
        backend = SimulatedAnnealingBackend()
    return backend.sample(q, seed)
