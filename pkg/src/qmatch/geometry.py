"""Meshes, geodesic distances, downsampling, initialization and error curves."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .core import Permutation
from .errors import DimensionError, ParseError, ValidationError


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        F = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if F.size and (F.min() < 0 or F.max() >= len(V)):
            raise ValidationError("face index out of range")
        degenerate = (F[:, 0] == F[:, 1]) | (F[:, 1] == F[:, 2]) | (F[:, 0] == F[:, 2])
        if np.any(degenerate):
            raise ValidationError(f"degenerate face {F[np.argmax(degenerate)].tolist()}")
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "faces", F)

    @property
    def n(self) -> int:
        return len(self.vertices)

    def edges(self) -> np.ndarray:
        """Unique undirected edges, each as ``(low, high)``."""
        F = self.faces
        e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def permuted(self, order) -> "TriangleMesh":
        """Copy whose vertex ``j`` is this mesh's vertex ``order[j]``."""
        order = np.asarray(order)
        new_index = np.empty_like(order)
        new_index[order] = np.arange(order.size)
        return TriangleMesh(self.vertices[order], new_index[self.faces])


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_off(text: str, path=None) -> TriangleMesh:
    lines = list(_content_lines(text))
    if not lines:
        raise ParseError("empty file", path)
    lineno, tokens = lines[0]
    if tokens[0].upper() != "OFF":
        raise ParseError(f"expected 'OFF' header, got {tokens[0]!r}", path, lineno)
    tokens = tokens[1:]
    pos = 1
    if not tokens:
        if len(lines) < 2:
            raise ParseError("missing vertex/face counts", path, lineno)
        lineno, tokens = lines[1]
        pos = 2
    try:
        nv, nf = int(tokens[0]), int(tokens[1])
    except (IndexError, ValueError):
        raise ParseError(f"bad count line {' '.join(tokens)!r}", path, lineno) from None
    if nv < 0 or nf < 0:
        raise ParseError("negative counts", path, lineno)
    body = lines[pos:]
    if len(body) != nv + nf:
        last = body[-1][0] if body else lineno
        raise ParseError(f"header declares {nv} vertices and {nf} faces but {len(body)} data lines follow", path, last)
    verts = []
    for lineno, tok in body[:nv]:
        try:
            verts.append([float(t) for t in tok[:3]])
        except ValueError:
            raise ParseError(f"bad vertex {' '.join(tok)!r}", path, lineno) from None
        if len(tok) < 3:
            raise ParseError("vertex needs 3 coordinates", path, lineno)
    faces = []
    for lineno, tok in body[nv:]:
        try:
            k = int(tok[0])
            idx = [int(t) for t in tok[1:1 + k]]
        except (ValueError, IndexError):
            raise ParseError(f"bad face {' '.join(tok)!r}", path, lineno) from None
        if k < 3 or len(idx) != k:
            raise ParseError(f"face declares {k} vertices but lists {len(idx)}", path, lineno)
        if min(idx) < 0 or max(idx) >= nv:
            raise ParseError(f"face index out of range 0..{nv - 1}", path, lineno)
        # polygons are fan-triangulated
        faces += [[idx[0], idx[t], idx[t + 1]] for t in range(1, k - 1)]
    try:
        return TriangleMesh(np.array(verts).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3))
    except ValidationError as exc:
        raise ParseError(str(exc), path) from None


def load_mesh(path) -> TriangleMesh:
    """Read an ASCII OFF file."""
    path = Path(path)
    return parse_off(path.read_text(), path)


def format_off(mesh: TriangleMesh) -> str:
    out = ["OFF", f"{mesh.n} {len(mesh.faces)} 0"]
    out += [" ".join(repr(float(c)) for c in v) for v in mesh.vertices]
    out += ["3 " + " ".join(str(int(i)) for i in f) for f in mesh.faces]
    return "\n".join(out) + "\n"


def save_mesh(mesh: TriangleMesh, path) -> None:
    Path(path).write_text(format_off(mesh))


@dataclass(frozen=True)
class GeodesicMatrix:
    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise DimensionError(f"distance matrix must be square, got {d.shape}")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @property
    def diameter(self) -> float:
        return float(self.d.max(initial=0.0))

    def submatrix(self, idx) -> "GeodesicMatrix":
        idx = np.asarray(idx)
        return GeodesicMatrix(self.d[np.ix_(idx, idx)])


def geodesics(mesh: TriangleMesh) -> GeodesicMatrix:
    """All-pairs shortest paths on the edge graph, edges weighted by Euclidean length."""
    n = mesh.n
    E = mesh.edges()
    w = np.linalg.norm(mesh.vertices[E[:, 0]] - mesh.vertices[E[:, 1]], axis=1)
    graph = coo_matrix((w, (E[:, 0], E[:, 1])), shape=(n, n)).tocsr()
    ncomp, labels = connected_components(graph, directed=False)
    if ncomp > 1:
        parts = []
        for c in range(ncomp):
            members = np.flatnonzero(labels == c)
            parts.append(f"#{c}: {members.size} vertices (first {members[0]})")
        raise ValidationError(f"mesh edge graph has {ncomp} connected components: " + "; ".join(parts))
    d = dijkstra(graph, directed=False)
    return GeodesicMatrix(np.minimum(d, d.T))


def farthest_point_sample(matrix: GeodesicMatrix, count: int, seed: int = 0, start=None) -> list[int]:
    """Greedy farthest-point sampling; the first vertex is ``start`` or drawn from ``seed``."""
    n = matrix.n
    if count > n:
        raise ValidationError(f"cannot sample {count} of {n} vertices")
    if count <= 0:
        return []
    if start is None:
        start = int(np.random.default_rng(seed).integers(n))
    chosen = [int(start)]
    dist = matrix.d[start].copy()
    for _ in range(count - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, matrix.d[nxt])
    return chosen


def lap_init(sim) -> Permutation:
    """Permutation maximizing ``sum_i sim[i, p(i)]``."""
    S = np.asarray(sim, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"similarity matrix must be square, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValidationError("similarity matrix has non-finite entries")
    rows, cols = linear_sum_assignment(S, maximize=True)
    p = np.empty(S.shape[0], dtype=np.int64)
    p[rows] = cols
    return Permutation(p)


def load_similarity(path) -> np.ndarray:
    """Dense similarity matrix from whitespace-separated text or CSV."""
    path = Path(path)
    text = path.read_text()
    try:
        S = np.loadtxt(path, delimiter="," if "," in text else None, ndmin=2)
    except ValueError as exc:
        raise ParseError(str(exc), path) from None
    return S


def distance_histogram_similarity(d_src, d_tgt, bins: int = 32) -> np.ndarray:
    """Fallback descriptor similarity: negative L2 distance between per-vertex
    histograms of geodesic distances, binned on a range shared by both shapes."""
    d_src = np.asarray(d_src, dtype=float)
    d_tgt = np.asarray(d_tgt, dtype=float)
    hi = max(d_src.max(initial=0.0), d_tgt.max(initial=0.0)) or 1.0
    edges = np.linspace(0.0, hi, bins + 1)

    def hist(d):
        idx = np.clip(np.searchsorted(edges, d, side="right") - 1, 0, bins - 1)
        H = np.zeros((d.shape[0], bins))
        np.add.at(H, (np.repeat(np.arange(d.shape[0]), d.shape[1]), idx.ravel()), 1.0)
        return H / max(1, d.shape[1])

    Hs, Ht = hist(d_src), hist(d_tgt)
    sq = (Hs**2).sum(1)[:, None] + (Ht**2).sum(1)[None, :] - 2 * Hs @ Ht.T
    return -np.sqrt(np.maximum(sq, 0.0))


DEFAULT_THRESHOLDS = np.linspace(0.0, 0.25, 26)


def error_curve(pred: Permutation, gt: Permutation, tgt_geo: GeodesicMatrix, thresholds=None):
    """Fraction of vertices whose normalized geodesic error is at most each threshold.

    The error of vertex ``v`` is ``d_N(pred(v), gt(v)) / diameter(N)``.
    Returns ``(thresholds, fractions)``.
    """
    if pred.n != gt.n or pred.n != tgt_geo.n:
        raise DimensionError(f"sizes differ: pred {pred.n}, gt {gt.n}, target {tgt_geo.n}")
    diam = tgt_geo.diameter
    if diam <= 0:
        raise ValidationError("target shape has zero geodesic diameter")
    t = np.asarray(DEFAULT_THRESHOLDS if thresholds is None else thresholds, dtype=float)
    err = tgt_geo.d[pred.map, gt.map] / diam
    frac = (err[None, :] <= t[:, None]).mean(axis=1)
    return t, frac


def format_curve_csv(thresholds, fractions) -> str:
    rows = ["threshold,fraction"] + [f"{t:.6g},{f:.6g}" for t, f in zip(thresholds, fractions)]
    return "\n".join(rows) + "\n"
