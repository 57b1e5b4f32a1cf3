"""Permutations, disjoint cycle sets and QAP energy oracles.

Conventions used throughout the package:

* A permutation ``p`` is stored as its map, ``p[i]`` being the image of ``i``.
  The associated 0/1 matrix ``X`` has ``X[p[i], i] = 1``.
* ``compose(q, r)`` applies ``r`` first: ``compose(q, r)[i] == q[r[i]]``, which
  is the matrix product ``Q @ R``.
* A cycle ``(a0 a1 ... a_{k-1})`` maps ``a_t -> a_{t+1}`` and ``a_{k-1} -> a0``.
* The match "source ``i`` -> target ``k``" has flat index ``i * n + k`` in the
  ``n**2 x n**2`` cost matrix ``W``. It corresponds to matrix entry ``(k, i)``.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CapabilityError, DimensionError, ValidationError

LAWLER_MAX_N = 64


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


class Permutation:
    """A bijection on ``{0, ..., n-1}``."""

    __slots__ = ("_map",)

    def __init__(self, mapping: Iterable[int]):
        arr = np.asarray(list(mapping) if not isinstance(mapping, np.ndarray) else mapping)
        if arr.ndim != 1:
            raise ValidationError("permutation map must be one-dimensional")
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.mod(arr, 1) == 0):
                raise ValidationError("permutation map must contain integers")
        arr = arr.astype(np.int64)
        if not np.array_equal(np.sort(arr), np.arange(arr.size)):
            raise ValidationError(f"not a bijection on 0..{arr.size - 1}: {arr.tolist()}")
        self._map = _frozen(arr)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Permutation":
        return cls(rng.permutation(n))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]], n: int) -> "Permutation":
        """Product of disjoint cycles, e.g. ``from_cycles([(0, 1), (2, 3)], 4)``."""
        m = np.arange(n)
        seen = set()
        for cyc in cycles:
            cyc = [int(c) for c in cyc]
            if seen.intersection(cyc) or len(set(cyc)) != len(cyc):
                raise ValidationError(f"cycles are not disjoint: {cyc}")
            seen.update(cyc)
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                m[a] = b
        return cls(m)

    @property
    def map(self) -> np.ndarray:
        return self._map

    @property
    def n(self) -> int:
        return int(self._map.size)

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self._map[i]

    def __iter__(self):
        return iter(self._map.tolist())

    def __eq__(self, other):
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self._map, other._map)

    def __hash__(self):
        return hash(self._map.tobytes())

    def __repr__(self):
        return f"Permutation({self._map.tolist()})"

    def inverse(self) -> "Permutation":
        return invert(self)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self._map, np.arange(self.n)))

    def to_matrix(self) -> np.ndarray:
        X = np.zeros((self.n, self.n), dtype=np.int64)
        X[self._map, np.arange(self.n)] = 1
        return X

    def cycles(self) -> list[tuple[int, ...]]:
        """Non-trivial cycles in canonical form (smallest element first)."""
        out = []
        visited = np.zeros(self.n, dtype=bool)
        for start in range(self.n):
            if visited[start] or self._map[start] == start:
                visited[start] = True
                continue
            cyc = []
            i = start
            while not visited[i]:
                visited[i] = True
                cyc.append(i)
                i = int(self._map[i])
            out.append(tuple(cyc))
        return out

    def to_json(self) -> dict:
        return {"n": self.n, "map": self._map.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Permutation":
        try:
            n, mapping = int(obj["n"]), obj["map"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"permutation JSON needs 'n' and 'map': {exc}") from None
        if len(mapping) != n:
            raise ValidationError(f"permutation JSON: n={n} but map has {len(mapping)} entries")
        return cls(mapping)


def compose(q: Permutation, r: Permutation) -> Permutation:
    """Return ``q o r`` (``r`` applied first)."""
    if q.n != r.n:
        raise DimensionError(f"cannot compose permutations of size {q.n} and {r.n}")
    return Permutation(q.map[r.map])


def invert(p: Permutation) -> Permutation:
    inv = np.empty(p.n, dtype=np.int64)
    inv[p.map] = np.arange(p.n)
    return Permutation(inv)


@dataclass(frozen=True)
class CycleSet:
    """Pairwise disjoint cycles acting on ``{0, ..., n-1}``."""

    cycles: tuple
    n: int

    def __post_init__(self):
        cycles = tuple(tuple(int(i) for i in c) for c in self.cycles)
        object.__setattr__(self, "cycles", cycles)
        seen = set()
        for c in cycles:
            if len(c) < 2:
                raise ValidationError(f"cycle {c} must have at least 2 elements")
            if len(set(c)) != len(c):
                raise ValidationError(f"cycle {c} repeats an index")
            if min(c) < 0 or max(c) >= self.n:
                raise ValidationError(f"cycle {c} out of range for n={self.n}")
            if seen.intersection(c):
                raise ValidationError(f"cycle {c} is not disjoint from the others")
            seen.update(c)

    def __len__(self):
        return len(self.cycles)

    def __iter__(self):
        return iter(self.cycles)

    def support(self) -> set[int]:
        return {i for c in self.cycles for i in c}


def cycle_map(cycle: Sequence[int], n: int) -> np.ndarray:
    m = np.arange(n)
    cyc = list(cycle)
    for a, b in zip(cyc, cyc[1:] + cyc[:1]):
        m[a] = b
    return m


def _alpha_vector(alpha, m):
    a = np.asarray(alpha).astype(np.int64).ravel()
    if a.size != m:
        raise DimensionError(f"alpha has {a.size} entries, expected {m}")
    if np.any((a != 0) & (a != 1)):
        raise ValidationError("alpha must be binary")
    return a


def apply_cycles(cycles: CycleSet, alpha, p0: Permutation) -> Permutation:
    """Left-multiply ``p0`` by every cycle whose ``alpha`` bit is set."""
    if not isinstance(cycles, CycleSet):
        cycles = CycleSet(tuple(cycles), p0.n)
    if cycles.n != p0.n:
        raise DimensionError(f"cycle set on n={cycles.n} applied to permutation of size {p0.n}")
    a = _alpha_vector(alpha, len(cycles))
    out = p0.map.copy()
    for bit, cyc in zip(a, cycles.cycles):
        if bit:
            out = cycle_map(cyc, p0.n)[out]
    return Permutation(out)


def decompose_involutions(p: Permutation) -> tuple[Permutation, Permutation]:
    """Write ``p = compose(q, r)`` with ``q`` and ``r`` products of disjoint 2-cycles.

    Each cycle ``(a_0 ... a_{k-1})`` is split independently: ``r`` pairs the
    positions ``t <-> -t (mod k)`` and ``q`` pairs ``t <-> 1 - t (mod k)``, so
    ``q(r(a_t)) = a_{t+1}``. For ``k = 4`` this yields ``q = (a0 a1)(a2 a3)``
    and ``r = (a1 a3)``.
    """
    n = p.n
    q = np.arange(n)
    r = np.arange(n)
    for cyc in p.cycles():
        k = len(cyc)
        for t in range(k):
            r[cyc[t]] = cyc[(-t) % k]
            q[cyc[t]] = cyc[(1 - t) % k]
    return Permutation(q), Permutation(r)


def is_involution(p: Permutation) -> bool:
    return bool(np.array_equal(p.map[p.map], np.arange(p.n)))


@dataclass(frozen=True)
class SparseMatchMatrix:
    """Sparse ``n x n`` matrix in match form: entry ``(row=target, col=source)``."""

    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    n: int

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if not (rows.size == cols.size == w.size):
            raise DimensionError("rows, cols and weights must have equal length")
        if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= self.n or cols.max() >= self.n):
            raise ValidationError("sparse entry out of range")
        if len(set(zip(rows.tolist(), cols.tolist()))) != rows.size:
            raise ValidationError("duplicate (row, column) entry")
        object.__setattr__(self, "rows", _frozen(rows))
        object.__setattr__(self, "cols", _frozen(cols))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def from_permutation(cls, p: Permutation) -> "SparseMatchMatrix":
        return cls(p.map, np.arange(p.n), np.ones(p.n), p.n)

    @property
    def nnz(self) -> int:
        return int(self.rows.size)

    @property
    def entries(self) -> list[tuple[int, int, float]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist()))

    def to_dense(self) -> np.ndarray:
        X = np.zeros((self.n, self.n))
        X[self.rows, self.cols] = self.weights
        return X

    def vec(self) -> np.ndarray:
        """Column-major vectorization, so that ``vec()[i * n + k] == X[k, i]``."""
        return self.to_dense().T.ravel()


def cycle_to_sparse_delta(cycle: Sequence[int], p0: Permutation) -> SparseMatchMatrix:
    """``(c - I) @ P0`` for one cycle ``c``; a k-cycle gives 2k nonzeros."""
    cyc = [int(i) for i in cycle]
    if len(cyc) < 2 or len(set(cyc)) != len(cyc) or min(cyc) < 0 or max(cyc) >= p0.n:
        raise ValidationError(f"invalid cycle {cycle} for n={p0.n}")
    src_of = np.empty(p0.n, dtype=np.int64)
    src_of[p0.map] = np.arange(p0.n)
    rows, cols, w = [], [], []
    for t, nxt in zip(cyc, cyc[1:] + cyc[:1]):
        i = int(src_of[t])
        rows += [nxt, t]
        cols += [i, i]
        w += [1.0, -1.0]
    return SparseMatchMatrix(rows, cols, w, p0.n)


class QapInstance(abc.ABC):
    """Energy oracle ``E(P) = vec(P)^T W vec(P)`` for a QAP of size ``n``."""

    n: int

    @abc.abstractmethod
    def pair_costs(self, src_a, tgt_a, src_b, tgt_b) -> np.ndarray:
        """Block of ``W`` with rows ``src_a*n+tgt_a`` and columns ``src_b*n+tgt_b``."""

    def dense(self) -> np.ndarray:
        """Materialize the full ``n**2 x n**2`` matrix ``W`` (small ``n`` only)."""
        if self.n > LAWLER_MAX_N:
            raise CapabilityError(f"refusing to materialize W for n={self.n} > {LAWLER_MAX_N}")
        idx = np.arange(self.n * self.n)
        src, tgt = np.divmod(idx, self.n)
        return self.pair_costs(src, tgt, src, tgt)

    def energy(self, p: Permutation) -> float:
        if p.n != self.n:
            raise DimensionError(f"permutation of size {p.n} for instance of size {self.n}")
        src = np.arange(self.n)
        return float(self.pair_costs(src, p.map, src, p.map).sum())


class LawlerInstance(QapInstance):
    """QAP given by a dense ``n**2 x n**2`` cost matrix."""

    def __init__(self, W):
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise DimensionError(f"W must be square, got shape {W.shape}")
        n = int(round(np.sqrt(W.shape[0])))
        if n * n != W.shape[0]:
            raise DimensionError(f"W side {W.shape[0]} is not a perfect square")
        if n > LAWLER_MAX_N:
            raise CapabilityError(f"dense Lawler form limited to n <= {LAWLER_MAX_N}, got {n}")
        self.n = n
        self.W = _frozen(W)

    def pair_costs(self, src_a, tgt_a, src_b, tgt_b):
        ia = np.asarray(src_a) * self.n + np.asarray(tgt_a)
        ib = np.asarray(src_b) * self.n + np.asarray(tgt_b)
        return self.W[ia[:, None], ib[None, :]]

    def dense(self):
        return self.W.copy()


class FactoredInstance(QapInstance):
    """Koopmans-Beckmann QAP: ``W[i*n+k, j*n+l] = A[i, j] * B[k, l]``."""

    def __init__(self, A, B):
        A = np.asarray(A)
        B = np.asarray(B)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
            raise DimensionError(f"A and B must be square and equal in shape, got {A.shape}, {B.shape}")
        if not (np.issubdtype(A.dtype, np.integer) and np.issubdtype(B.dtype, np.integer)):
            A = A.astype(float)
            B = B.astype(float)
        self.n = A.shape[0]
        self.A = _frozen(A)
        self.B = _frozen(B)

    def pair_costs(self, src_a, tgt_a, src_b, tgt_b):
        src_a, tgt_a, src_b, tgt_b = map(np.asarray, (src_a, tgt_a, src_b, tgt_b))
        block = self.A[src_a[:, None], src_b[None, :]] * self.B[tgt_a[:, None], tgt_b[None, :]]
        return block.astype(float)

    def energy(self, p):
        if p.n != self.n:
            raise DimensionError(f"permutation of size {p.n} for instance of size {self.n}")
        # integer arithmetic keeps QAPLIB energies exact
        return float((self.A * self.B[np.ix_(p.map, p.map)]).sum())


class IsometricInstance(QapInstance):
    """Shape-matching QAP: ``W[i*n+k, j*n+l] = |d_src[i, j] - d_tgt[k, l]|``."""

    def __init__(self, d_src, d_tgt, atol=1e-9):
        d_src = np.asarray(d_src, dtype=float)
        d_tgt = np.asarray(d_tgt, dtype=float)
        if d_src.ndim != 2 or d_src.shape[0] != d_src.shape[1] or d_src.shape != d_tgt.shape:
            raise DimensionError(f"distance matrices must be square and equal in shape, got {d_src.shape}, {d_tgt.shape}")
        for name, d in (("d_src", d_src), ("d_tgt", d_tgt)):
            scale = atol * max(1.0, float(np.abs(d).max(initial=0.0)))
            if not np.allclose(d, d.T, rtol=0, atol=scale):
                raise ValidationError(f"{name} is not symmetric")
            if np.any(np.abs(np.diag(d)) > scale):
                raise ValidationError(f"{name} has a nonzero diagonal")
            if np.any(d < -scale):
                raise ValidationError(f"{name} has negative entries")
        self.n = d_src.shape[0]
        self.d_src = _frozen(d_src)
        self.d_tgt = _frozen(d_tgt)

    def pair_costs(self, src_a, tgt_a, src_b, tgt_b):
        src_a, tgt_a, src_b, tgt_b = map(np.asarray, (src_a, tgt_a, src_b, tgt_b))
        return np.abs(self.d_src[src_a[:, None], src_b[None, :]] - self.d_tgt[tgt_a[:, None], tgt_b[None, :]])

    def energy(self, p):
        if p.n != self.n:
            raise DimensionError(f"permutation of size {p.n} for instance of size {self.n}")
        return float(np.abs(self.d_src - self.d_tgt[np.ix_(p.map, p.map)]).sum())


def energy(inst: QapInstance, p: Permutation) -> float:
    """``sum_{i,j} W[i*n+p(i), j*n+p(j)]`` over all ordered pairs."""
    return inst.energy(p)


def bilinear_energy(inst: QapInstance, q: SparseMatchMatrix, r: SparseMatchMatrix) -> float:
    """``vec(q)^T W vec(r)`` using only the nonzeros of ``q`` and ``r``."""
    if q.n != inst.n or r.n != inst.n:
        raise DimensionError(f"sparse operands of size {q.n}, {r.n} for instance of size {inst.n}")
    block = inst.pair_costs(q.cols, q.rows, r.cols, r.rows)
    return float(q.weights @ block @ r.weights)
