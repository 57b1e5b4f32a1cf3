"""QAPLIB instances and the benchmark harness."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import FactoredInstance, Permutation
from .errors import DimensionError, ParseError
from .expansion import ExpansionConfig, solve_random_cycles
from .qubo import make_backend

# Published optima of the instances used in the evaluation (QAPLIB).
REFERENCE_OPTIMA = {
    "bur26a": 5426670, "bur26b": 3817852, "bur26c": 5426795, "bur26d": 3821225,
    "bur26e": 5386879, "bur26f": 3782044, "bur26g": 10117172, "bur26h": 7098658,
    "esc16a": 68, "esc16b": 292, "esc16c": 160, "esc16d": 16, "esc16e": 28,
    "esc16f": 0, "esc16g": 26, "esc16h": 996, "esc16i": 14, "esc16j": 8,
    "had12": 1652, "had14": 2724, "had16": 3720, "had18": 5358, "had20": 6922,
    "nug12": 578, "nug14": 1014, "nug16a": 1610, "nug16b": 1240, "nug17": 1732,
    "nug18": 1930, "nug20": 2570, "nug21": 2438, "nug22": 3596, "nug24": 3488,
    "nug25": 3744, "nug27": 5234, "nug28": 5166, "nug30": 6124,
    "scr12": 31410, "scr15": 51140, "scr20": 110030,
    "rou12": 235528, "rou15": 354210, "rou20": 725522,
}

# Best energies reached by the annealer-based reference runs on the same instances.
REPORTED_RESULTS = {
    "bur26a": 5450757, "bur26b": 3828405, "bur26c": 5485230, "bur26d": 3822190,
    "bur26e": 5403238, "bur26f": 3797120, "bur26g": 10158673, "bur26h": 7152966,
    "esc16a": 70, "esc16b": 292, "esc16c": 160, "esc16d": 16, "esc16e": 28,
    "esc16f": 0, "esc16g": 26, "esc16h": 996, "esc16i": 14, "esc16j": 8,
    "had12": 1652, "had14": 2748, "had16": 3750, "had18": 5358, "had20": 6922,
    "nug12": 618, "nug14": 1026, "nug16a": 1650, "nug16b": 1296, "nug17": 1882,
    "nug18": 1936, "nug20": 2606, "nug21": 2574, "nug22": 3712, "nug24": 3632,
    "nug25": 4004, "nug27": 5550, "nug28": 5348, "nug30": 6352,
    "scr12": 35454, "scr15": 58320, "scr20": 114322,
    "rou12": 251872, "rou15": 373218, "rou20": 754506,
}


@dataclass(frozen=True)
class QaplibInstance:
    name: str
    n: int
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.a.shape != (self.n, self.n) or self.b.shape != (self.n, self.n):
            raise DimensionError(f"{self.name}: matrices must be {self.n}x{self.n}")

    def instance(self) -> FactoredInstance:
        return FactoredInstance(self.a, self.b)

    def energy(self, p: Permutation) -> int:
        """``sum_ij a[i, j] * b[p(i), p(j)]``."""
        return int((self.a * self.b[np.ix_(p.map, p.map)]).sum())


def parse_dat(text: str, name: str = "") -> QaplibInstance:
    """Parse the standard layout: ``n``, then ``A`` and ``B`` row by row, any wrapping."""
    tokens = text.split()
    if not tokens:
        raise ParseError("empty QAPLIB file", name or None)
    try:
        values = [int(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"non-integer token: {exc}", name or None) from None
    n = values[0]
    expected = 1 + 2 * n * n
    if n < 1 or len(values) != expected:
        raise ParseError(f"expected {expected} tokens for n={n}, found {len(values)}", name or None)
    a = np.array(values[1:1 + n * n], dtype=np.int64).reshape(n, n)
    b = np.array(values[1 + n * n:], dtype=np.int64).reshape(n, n)
    return QaplibInstance(name, n, a, b)


def load_dat(path) -> QaplibInstance:
    path = Path(path)
    try:
        return parse_dat(path.read_text(), path.stem)
    except ParseError as exc:
        raise ParseError(str(exc).split(": ", 1)[-1], path) from None


def format_dat(inst: QaplibInstance) -> str:
    def block(M):
        return "\n".join(" ".join(str(int(v)) for v in row) for row in M)

    return f"{inst.n}\n\n{block(inst.a)}\n\n{block(inst.b)}\n"


def relative_gap(energy: float, optimum: Optional[float]) -> Optional[float]:
    """``(E - E_opt) / E_opt``; the plain difference when ``E_opt == 0``."""
    if optimum is None:
        return None
    if optimum == 0:
        return float(energy - optimum)
    return float((energy - optimum) / optimum)


@dataclass
class BenchmarkRecord:
    name: str
    n: int
    best_energy: float
    reference_optimum: Optional[float]
    relative_gap: Optional[float]
    repeats: int
    seconds: float
    repeat_energies: list = field(default_factory=list)
    best_permutation: list = field(default_factory=list)


@dataclass
class BenchmarkReport:
    records: list

    def by_name(self) -> dict:
        return {r.name: r for r in self.records}

    def to_json(self) -> dict:
        return {"records": [asdict(r) for r in self.records]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["name", "n", "best_energy", "reference_optimum", "relative_gap", "repeats", "seconds"]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for r in self.records:
            writer.writerow(["" if getattr(r, c) is None else getattr(r, c) for c in cols])
        return buf.getvalue()


@dataclass(frozen=True)
class BenchmarkConfig:
    backend: str = "sa"
    reads: Optional[int] = None  # None: 5000 reads if n > 25, else 500
    passes: int = 3
    repeats: int = 3
    seed: int = 0

    def reads_for(self, n: int) -> int:
        if self.reads is not None:
            return self.reads
        return 5000 if n > 25 else 500


def run_instance(inst: QaplibInstance, config: BenchmarkConfig, optimum=None) -> BenchmarkRecord:
    backend = make_backend(config.backend, reads=config.reads_for(inst.n))
    qap = inst.instance()
    if optimum is None:
        optimum = REFERENCE_OPTIMA.get(inst.name)
    t0 = time.perf_counter()
    energies = []
    best = None
    for r in range(config.repeats):
        rng = np.random.default_rng([config.seed, r])
        p0 = Permutation.random(inst.n, rng)
        trace = solve_random_cycles(qap, p0, ExpansionConfig(backend, config.passes, int(rng.integers(2**31))))
        e = inst.energy(trace.final)
        energies.append(e)
        if best is None or e < best[0]:
            best = (e, trace.final)
    seconds = time.perf_counter() - t0
    return BenchmarkRecord(
        inst.name, inst.n, best[0], optimum, relative_gap(best[0], optimum),
        config.repeats, seconds, energies, best[1].map.tolist(),
    )


def run_benchmark(instances, config: BenchmarkConfig = None, optima: dict = None) -> BenchmarkReport:
    """Best-of-``repeats`` runs of random-cycle expansion from random starts."""
    config = config or BenchmarkConfig()
    optima = optima or {}
    return BenchmarkReport([run_instance(i, config, optima.get(i.name)) for i in instances])
