"""Compiled inner loops for the stochastic QUBO backends.

Each read reseeds numba's generator with its own seed, so a read's result does
not depend on which other reads ran before it.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _local_fields(C, x):
    m = C.shape[0]
    field = np.zeros(m)
    for i in range(m):
        s = 0.0
        for j in range(m):
            if j != i and x[j]:
                s += C[i, j]
        field[i] = s
    return field


@njit(cache=True)
def _flip(C, x, field, i):
    x[i] = 1 - x[i]
    sgn = 1.0 if x[i] else -1.0
    for j in range(C.shape[0]):
        if j != i:
            field[j] += sgn * C[j, i]


@njit(cache=True)
def anneal(C, seeds, betas):
    """Single-flip Metropolis annealing; returns the final state of each read."""
    reads = seeds.size
    m = C.shape[0]
    out = np.empty((reads, m), np.int8)
    x = np.empty(m, np.int8)
    for r in range(reads):
        np.random.seed(seeds[r])
        for i in range(m):
            x[i] = 1 if np.random.random() < 0.5 else 0
        field = _local_fields(C, x)
        for t in range(betas.size):
            beta = betas[t]
            for i in range(m):
                d = C[i, i] + 2.0 * field[i]
                if x[i]:
                    d = -d
                if d <= 0.0 or np.random.random() < np.exp(-beta * d):
                    _flip(C, x, field, i)
        out[r, :] = x
    return out


@njit(cache=True)
def tabu(C, seeds, iterations, tenure):
    """Best-improvement single-flip tabu search with aspiration; returns the best state per read."""
    reads = seeds.size
    m = C.shape[0]
    out = np.empty((reads, m), np.int8)
    x = np.empty(m, np.int8)
    best = np.empty(m, np.int8)
    until = np.zeros(m, np.int64)
    for r in range(reads):
        np.random.seed(seeds[r])
        for i in range(m):
            x[i] = 1 if np.random.random() < 0.5 else 0
            until[i] = 0
        field = _local_fields(C, x)
        cur = 0.0
        for i in range(m):
            if x[i]:
                cur += C[i, i] + field[i]
        best[:] = x
        best_e = cur
        for it in range(iterations):
            move = -1
            move_d = np.inf
            for i in range(m):
                d = C[i, i] + 2.0 * field[i]
                if x[i]:
                    d = -d
                allowed = until[i] <= it or cur + d < best_e
                if allowed and d < move_d:
                    move = i
                    move_d = d
            if move < 0:
                continue
            _flip(C, x, field, move)
            cur += move_d
            until[move] = it + tenure + 1
            if cur < best_e:
                best_e = cur
                best[:] = x
        out[r, :] = best
    return out
