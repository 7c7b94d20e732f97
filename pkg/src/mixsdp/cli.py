"""Command-line entry point.

Exit codes: 0 success, 1 input/parse error, 2 option error, 3 max_sweeps
reached without convergence (outputs are still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import maxcut, maxsat
from .certificate import certify
from .core import (
    AUTO,
    FactorMatrix,
    InputError,
    OptionError,
    SolveOptions,
    parse_cost,
)
from .mixing import solve

EXIT_OK, EXIT_INPUT, EXIT_OPTION, EXIT_NOT_CONVERGED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_OPTION, f"{self.prog}: error: {message}\n")


def _step_size(text):
    t = text.strip().lower()
    if t == "auto":
        return AUTO
    if t == "none":
        return None
    try:
        v = float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, 'auto' or 'none', got {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"step size must be > 0, got {text!r}")
    return v


def _rank(text):
    if text.strip().lower() == "auto":
        return AUTO
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {text!r}") from None


def _solver_flags(p):
    p.add_argument("--rank", type=_rank, default=AUTO, help="factor rank k (default: ceil(sqrt(2n))+1)")
    p.add_argument("--tol", type=float, default=1e-4, help="relative stopping tolerance")
    p.add_argument("--max-sweeps", type=int, default=10000)
    p.add_argument("--step-size", type=_step_size, default=None, help="number | auto | none (plain update)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace-every", type=int, default=1)
    p.add_argument("--trace", type=Path, help="write per-sweep CSV trace")
    p.add_argument("--json", type=Path, help="write JSON summary")
    p.add_argument("--certify", action="store_true", help="attach a dual optimality certificate")
    p.add_argument("--quiet", action="store_true", help="do not print the summary to stdout")
    p.add_argument("--deterministic", action="store_true", help="zero all timing fields in outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixsdp", description="Mixing-method SDP solver with MAXCUT/MAXSAT front-ends")
    sub = parser.add_subparsers(
        dest="command", required=True, parser_class=_Parser, metavar="{solve,maxcut,maxsat,cert,bench}"
    )

    p = sub.add_parser("solve", help="solve min <C, V^T V> for a plain-text cost file")
    p.add_argument("input", type=Path)
    _solver_flags(p)
    p.add_argument("--factor-out", type=Path, help="write the final factor (n rows of k values)")

    p = sub.add_parser("maxcut", help="MAXCUT relaxation plus hyperplane rounding")
    p.add_argument("input", type=Path)
    _solver_flags(p)
    p.add_argument("--trials", type=int, default=maxcut.DEFAULT_TRIALS)
    p.add_argument("--assignment", type=Path, help="write 'index sign' lines")

    p = sub.add_parser("maxsat", help="MAXSAT relaxation plus truth-direction rounding")
    p.add_argument("input", type=Path)
    _solver_flags(p)
    p.add_argument("--trials", type=int, default=maxsat.DEFAULT_TRIALS)
    p.add_argument("--assignment", type=Path, help="write a 'v' line of signed literals")

    p = sub.add_parser("cert", help="certify a factor (given via --factor, or solved first)")
    p.add_argument("input", type=Path)
    _solver_flags(p)
    p.add_argument("--factor", type=Path, help="factor file as written by solve --factor-out")
    p.add_argument("--cert-tol", type=float, default=1e-9)

    p = sub.add_parser("bench", help="plain vs step-size traces over instances and seeds")
    p.add_argument("inputs", type=Path, nargs="+")
    _solver_flags(p)
    p.add_argument("--seeds", type=int, default=3, help="number of seeds, starting at --seed")
    p.add_argument("--format", choices=("graph", "cost"), default="graph")
    p.add_argument("--out-dir", type=Path, default=Path("bench_out"))
    p.add_argument("--workers", type=int, default=1)

    # debugging aid, deliberately left out of --help
    p = sub.add_parser("oracle")
    p.add_argument("kind", choices=("maxcut", "maxsat"))
    p.add_argument("input", type=Path)
    return parser


def options_from(args) -> SolveOptions:
    return SolveOptions(
        rank=args.rank,
        tol_rel=args.tol,
        max_sweeps=args.max_sweeps,
        step_size=args.step_size,
        seed=args.seed,
        trace_every=args.trace_every,
    )


def write_atomic(path: Path, text: str):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_csv(trace, deterministic=False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sweep", "f", "decrease", "elapsed_s"])
    for rec in trace:
        w.writerow([rec.sweep, repr(rec.f), repr(rec.decrease), 0.0 if deterministic else repr(rec.elapsed)])
    return buf.getvalue()


def maxsat_trace_csv(trace, offset, deterministic=False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sweep", "objective", "bound", "elapsed"])
    for rec in trace:
        w.writerow([rec.sweep, repr(rec.f), repr(offset - rec.f), 0.0 if deterministic else repr(rec.elapsed)])
    return buf.getvalue()


def format_factor(V: FactorMatrix) -> str:
    return "".join(" ".join(repr(float(x)) for x in col) + "\n" for col in V.cols)


def parse_factor(text: str) -> FactorMatrix:
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    try:
        cols = np.array([[float(x) for x in r] for r in rows])
    except ValueError as e:
        raise InputError(f"bad factor file: {e}") from None
    if cols.ndim != 2 or cols.size == 0:
        raise InputError("factor file must hold n rows of k values")
    norms = np.linalg.norm(cols, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise InputError("factor columns must have unit norm")
    return FactorMatrix(cols / norms[:, None])


def _emit(args, summary: dict):
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if args.json:
        write_atomic(args.json, text)
    if not args.quiet:
        sys.stdout.write(text)


def _solve_fields(res, args) -> dict:
    return {
        "f": res.f,
        "sweeps": res.sweeps_used,
        "converged": res.converged,
        "rank": res.metadata["rank"],
        "mode": res.metadata["mode"],
        "theta": res.metadata["theta"],
        "rng": res.metadata["rng"],
        "stopping_rule": res.metadata["stopping_rule"],
        "degenerate_columns": len(res.degenerate_columns),
        "elapsed_s": 0.0 if args.deterministic or not res.trace else res.trace[-1].elapsed,
    }


def cmd_solve(args, opts) -> int:
    C = parse_cost(args.input.read_text())
    res = solve(C, opts)
    summary = {"n": C.n, "nnz": C.nnz, "dropped_diagonal": C.dropped_diagonal, "seed": opts.seed}
    summary.update(_solve_fields(res, args))
    if args.certify:
        summary["certificate"] = certify(C, res.V).summary()
    if args.trace:
        write_atomic(args.trace, trace_csv(res.trace, args.deterministic))
    if args.factor_out:
        write_atomic(args.factor_out, format_factor(res.V))
    _emit(args, summary)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_maxcut(args, opts) -> int:
    g = maxcut.parse_graph(args.input.read_text())
    C = maxcut.graph_to_cost(g)
    res = solve(C, opts)
    cut = maxcut.best_rounding(g, res.V, args.trials, opts.seed)
    bound = maxcut.sdp_cut_bound(g, res.f)
    summary = {
        "n": g.n,
        "m": g.m,
        "W": g.total_weight,
        "f": res.f,
        "cut_bound": bound,
        "best_cut": cut.value,
        "ratio_vs_bound": cut.value / bound if bound else None,
        "trials": args.trials,
        "seed": opts.seed,
        "self_loops_dropped": g.dropped_self_loops,
        "negative_weights": g.has_negative_weights,
        "abs_weight": g.abs_weight,
    }
    for key, val in _solve_fields(res, args).items():
        summary.setdefault(key, val)
    if args.certify:
        summary["certificate"] = certify(C, res.V).summary()
    if args.trace:
        write_atomic(args.trace, trace_csv(res.trace, args.deterministic))
    if args.assignment:
        write_atomic(args.assignment, "".join(f"{i + 1} {int(s):d}\n" for i, s in enumerate(cut.signs)))
    _emit(args, summary)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_maxsat(args, opts) -> int:
    f = maxsat.parse_dimacs(args.input.read_text())
    cs = maxsat.ClauseSystem(f)
    res = maxsat.solve_maxsat(cs, opts)
    state = maxsat.MaxsatState(cs, res.V)
    best = maxsat.best_rounding(f, state, args.trials, opts.seed)
    bound = maxsat.sat_upper_bound(cs, state)
    summary = {
        "n_vars": f.n_vars,
        "n_clauses": f.n_clauses,
        "total_weight": f.total_weight,
        "sdp_bound": bound,
        "best_satisfied": best.satisfied_weight,
        "ratio_vs_bound": best.satisfied_weight / bound if bound else None,
        "hard_violations": best.hard_violations,
        "trials": args.trials,
        "seed": opts.seed,
        "tautologies_dropped": f.tautologies_dropped,
        "empty_clauses_dropped": f.empty_dropped,
        "top": f.top,
    }
    for key, val in _solve_fields(res, args).items():
        summary.setdefault(key, val)
    if args.certify:
        summary["certificate"] = certify(cs.materialize(), res.V).summary()
    if args.trace:
        write_atomic(args.trace, maxsat_trace_csv(res.trace, cs.offset, args.deterministic))
    if args.assignment:
        lits = " ".join(str(i + 1 if v else -(i + 1)) for i, v in enumerate(best.values))
        write_atomic(args.assignment, f"v {lits} 0\n")
    _emit(args, summary)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_cert(args, opts) -> int:
    if not args.cert_tol > 0:
        raise OptionError("--cert-tol must be > 0")
    C = parse_cost(args.input.read_text())
    code = EXIT_OK
    if args.factor:
        V = parse_factor(args.factor.read_text())
        if V.n != C.n:
            raise InputError(f"factor has {V.n} columns, cost has n={C.n}")
        summary = {"n": C.n, "source": str(args.factor)}
    else:
        res = solve(C, opts)
        V = res.V
        summary = {"n": C.n, "source": "solve", "seed": opts.seed}
        summary.update(_solve_fields(res, args))
        code = EXIT_OK if res.converged else EXIT_NOT_CONVERGED
    summary["certificate"] = certify(C, V, tol=args.cert_tol).summary()
    _emit(args, summary)
    return code


BENCH_COLUMNS = ["instance", "mode", "seed", "sweeps", "time", "f", "certified_gap_bound", "converged", "error"]


def _bench_one(path: Path, fmt: str, opts: SolveOptions, mode: str, seed: int, out_dir: Path, deterministic: bool):
    row = {"instance": path.name, "mode": mode, "seed": seed}
    try:
        text = path.read_text()
        C = maxcut.graph_to_cost(maxcut.parse_graph(text)) if fmt == "graph" else parse_cost(text)
        run_opts = SolveOptions(
            rank=opts.rank, tol_rel=opts.tol_rel, max_sweeps=opts.max_sweeps,
            step_size=None if mode == "plain" else (opts.step_size or AUTO),
            seed=seed, trace_every=opts.trace_every,
        )
        res = solve(C, run_opts)
        cert = certify(C, res.V)
        write_atomic(out_dir / f"{path.stem}__{mode}__seed{seed}.csv", trace_csv(res.trace, deterministic))
        row.update(
            sweeps=res.sweeps_used,
            time=0.0 if deterministic or not res.trace else res.trace[-1].elapsed,
            f=res.f,
            certified_gap_bound=cert.certified_gap_bound,
            converged=res.converged,
            error="",
        )
    except (OSError, ValueError) as e:
        row.update(sweeps="", time="", f="", certified_gap_bound="", converged=False, error=str(e))
    return row


def bench(inputs, fmt, opts: SolveOptions, seeds: int, out_dir: Path, workers=1, deterministic=False) -> list[dict]:
    """Run plain and step modes over every instance and seed; write traces and summary.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [
        (Path(p), mode, opts.seed + s)
        for p in inputs
        for mode in ("plain", "step")
        for s in range(seeds)
    ]
    run = lambda job: _bench_one(job[0], fmt, opts, job[1], job[2], out_dir, deterministic)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(run, jobs))
    else:
        rows = [run(j) for j in jobs]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    write_atomic(out_dir / "summary.csv", buf.getvalue())
    return rows


def cmd_bench(args, opts) -> int:
    if args.seeds < 1 or args.workers < 1:
        raise OptionError("--seeds and --workers must be positive")
    rows = bench(args.inputs, args.format, opts, args.seeds, args.out_dir, args.workers, args.deterministic)
    if not args.quiet:
        for r in rows:
            status = r["error"] or ("ok" if r["converged"] else "not converged")
            print(f"{r['instance']}\t{r['mode']}\tseed={r['seed']}\tsweeps={r['sweeps']}\tf={r['f']}\t{status}")
    if args.json:
        write_atomic(args.json, json.dumps(rows, indent=2, sort_keys=True, default=str) + "\n")
    return EXIT_INPUT if any(r["error"] for r in rows) else EXIT_OK


def cmd_oracle(args) -> int:
    from . import oracle

    text = args.input.read_text()
    try:
        return _oracle(args.kind, text, oracle)
    except oracle.OracleRefusal as e:
        print(f"mixsdp: {e}", file=sys.stderr)
        return EXIT_INPUT


def _oracle(kind, text, oracle) -> int:
    if kind == "maxcut":
        res = oracle.brute_maxcut(maxcut.parse_graph(text))
        witness = [int(s) for s in res.optimum_witness]
    else:
        res = oracle.brute_maxsat(maxsat.parse_dimacs(text))
        witness = [bool(b) for b in res.optimum_witness]
    print(json.dumps({"optimum": res.optimum_value, "enumerated": res.enumerated, "witness": witness}))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "maxcut": cmd_maxcut, "maxsat": cmd_maxsat, "cert": cmd_cert, "bench": cmd_bench}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "oracle":
            return cmd_oracle(args)
        if getattr(args, "trials", 1) < 1:
            raise OptionError("--trials must be >= 1")
        opts = options_from(args)
    except OptionError as e:
        print(f"mixsdp: option error: {e}", file=sys.stderr)
        return EXIT_OPTION
    except (InputError, OSError) as e:
        print(f"mixsdp: input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args, opts)
    except OptionError as e:
        print(f"mixsdp: option error: {e}", file=sys.stderr)
        return EXIT_OPTION
    except (InputError, OSError) as e:
        print(f"mixsdp: input error: {e}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run())
