"""Command-line entry point: ``qmatch {qaplib,shapes,qubo,eval}``.

Exit codes: 0 success, 1 solver failure, 2 bad input (parse, validation,
capability or missing file).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import IsometricInstance, Permutation
from .errors import CapabilityError, DimensionError, ParseError, QMatchError, ValidationError
from .geometry import (
    distance_histogram_similarity,
    error_curve,
    farthest_point_sample,
    format_curve_csv,
    geodesics,
    lap_init,
    load_mesh,
    load_similarity,
)
from .matching import QMatchConfig, qmatch_run
from .qaplib import BenchmarkConfig, load_dat, run_benchmark
from .qubo import Qubo, make_backend, solve

DEFAULT_SEED = 0


def _write(text: str, path):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path, exc.lineno) from None


def _read_permutation(path) -> Permutation:
    try:
        return Permutation.from_json(_read_json(path))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def _check_reads(reads):
    if reads is not None and reads < 1:
        raise ValidationError(f"--reads must be positive, got {reads}")


def _add_backend(p, reads_help="annealing reads per QUBO (default 500)"):
    p.add_argument("--backend", choices=["sa", "tabu", "exhaustive"], default="sa",
                   help="QUBO solver (default sa)")
    p.add_argument("--reads", type=int, default=None, help=reads_help)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"random seed (default {DEFAULT_SEED})")


def cmd_qaplib(args) -> int:
    _check_reads(args.reads)
    instances = [load_dat(path) for path in args.files]
    config = BenchmarkConfig(args.backend, args.reads, args.passes, args.repeats, args.seed)
    report = run_benchmark(instances, config)
    text = report.to_csv() if args.format == "csv" else _dump(report.to_json())
    _write(text, args.output)
    return 0


def _initial(init: str, n: int, d_src, d_tgt, seed: int) -> Permutation:
    if init == "identity":
        return Permutation.identity(n)
    if init == "random":
        return Permutation.random(n, np.random.default_rng(seed))
    if init == "descriptor":
        return lap_init(distance_histogram_similarity(d_src, d_tgt))
    if init.startswith("lap:"):
        path = init[4:]
        S = load_similarity(path)
        if S.shape != (n, n):
            raise DimensionError(f"{path}: similarity matrix is {S.shape[0]}x{S.shape[1]}, expected {n}x{n}")
        return lap_init(S)
    raise ValidationError(f"unknown --init {init!r}; use identity, random, descriptor or lap:<file>")


def cmd_shapes(args) -> int:
    _check_reads(args.reads)
    src_mesh, tgt_mesh = load_mesh(args.source), load_mesh(args.target)
    if src_mesh.n != tgt_mesh.n:
        raise DimensionError(f"meshes have {src_mesh.n} and {tgt_mesh.n} vertices")
    g_src, g_tgt = geodesics(src_mesh), geodesics(tgt_mesh)
    if args.samples is not None:
        # both meshes share the vertex order, so the same sample indices are used on each
        idx = farthest_point_sample(g_src, args.samples, args.seed)
        g_src, g_tgt = g_src.submatrix(idx), g_tgt.submatrix(idx)
    inst = IsometricInstance(g_src.d, g_tgt.d)
    backend = make_backend(args.backend, reads=args.reads or 500)
    config = QMatchConfig(args.k_worst, backend, args.max_outer_iters, args.seed, args.init)
    p0 = _initial(args.init, inst.n, g_src.d, g_tgt.d, args.seed)
    trace = qmatch_run(inst, p0, config)
    for step in trace.steps:
        step.info.setdefault("n", inst.n)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "permutation.json").write_text(_dump(trace.final.to_json()))
    (out / "trace.jsonl").write_text(trace.to_jsonl())
    if args.eval:
        gt = _read_permutation(args.eval)
        t, frac = error_curve(trace.final, gt, g_tgt)
        (out / "curve.csv").write_text(format_curve_csv(t, frac))
    return 0


def cmd_qubo(args) -> int:
    _check_reads(args.reads)
    q = Qubo.from_json(_read_json(args.file))
    samples = solve(q, make_backend(args.backend, reads=args.reads or 500), args.seed)
    _write(_dump(samples.to_json()), args.output)
    return 0


def cmd_eval(args) -> int:
    pred, gt = _read_permutation(args.pred), _read_permutation(args.gt)
    g_tgt = geodesics(load_mesh(args.target))
    thresholds = None
    if args.thresholds:
        thresholds = [float(t) for t in args.thresholds.split(",")]
    t, frac = error_curve(pred, gt, g_tgt, thresholds)
    _write(format_curve_csv(t, frac), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmatch", description="Cyclic alpha-expansion QAP solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qaplib", help="benchmark QAPLIB .dat files")
    p.add_argument("files", nargs="+", help="QAPLIB .dat files")
    _add_backend(p, "reads per QUBO (default 500, or 5000 when n > 25)")
    p.add_argument("--passes", type=int, default=3, help="passes over all 2-cycles per repeat (default 3)")
    p.add_argument("--repeats", type=int, default=3, help="random restarts, best kept (default 3)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("-o", "--output", default=None, help="report file (default stdout)")
    p.set_defaults(func=cmd_qaplib)

    p = sub.add_parser("shapes", help="match two OFF meshes with the same vertex count")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--init", default="identity",
                   help="identity, random, descriptor or lap:<similarity file> (default identity)")
    p.add_argument("--samples", type=int, default=None, help="farthest-point downsample to this many vertices")
    p.add_argument("--k-worst", type=int, default=40, help="vertices freed per outer iteration (default 40)")
    p.add_argument("--max-outer-iters", type=int, default=30, help="outer iteration limit (default 30)")
    _add_backend(p)
    p.add_argument("--eval", default=None, help="ground-truth permutation JSON; writes curve.csv")
    p.add_argument("-o", "--output", default="qmatch-out", help="output directory (default qmatch-out)")
    p.set_defaults(func=cmd_shapes)

    p = sub.add_parser("qubo", help="solve a QUBO JSON file {\"m\": .., \"coeff\": [[..]]}")
    p.add_argument("file")
    _add_backend(p)
    p.add_argument("-o", "--output", default=None, help="sample set JSON (default stdout)")
    p.set_defaults(func=cmd_qubo)

    p = sub.add_parser("eval", help="geodesic error curve of a predicted permutation")
    p.add_argument("pred", help="predicted permutation JSON")
    p.add_argument("gt", help="ground-truth permutation JSON")
    p.add_argument("target", help="target OFF mesh")
    p.add_argument("--thresholds", default=None, help="comma-separated normalized thresholds")
    p.add_argument("-o", "--output", default=None, help="curve CSV (default stdout)")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError, DimensionError, CapabilityError) as exc:
        print(f"qmatch: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"qmatch: error: {exc.strerror or exc}: {exc.filename}", file=sys.stderr)
        return 2
    except QMatchError as exc:
        print(f"qmatch: solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
