"""Command-line harness: generate problems, run solvers, print spectra.

Exit codes: 0 converged, 1 usage or I/O error, 2 iteration cap reached,
3 diverged.  The trace CSV has the fixed header
``iter,scaled_residual,rank,inner_steps,elapsed_s,extrapolated``.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from .errors import DivergedError, MatrixMarketError, MtsylvError, OracleTooLargeError
from .mmio import matrix_market_read, matrix_market_write
from .oracles import iteration_spectrum
from .outer import SolverConfig, nonstationary_lowrank_solve, stationary_dense_solve
from .problem import ProblemSpec, as_dense
from .problems import GeneratorParams, gen_advdiff, gen_multiterm_sylvester, gen_random_dense

TRACE_HEADER = "iter,scaled_residual,rank,inner_steps,elapsed_s,extrapolated"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mtsylv", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_problem_flags(sp):
        sp.add_argument("--problem", required=True,
                        choices=["random-dense", "advdiff", "multiterm-sylv", "files"])
        sp.add_argument("--dir", help="directory of .mtx files for --problem files")
        sp.add_argument("--n", type=int, default=30)
        sp.add_argument("--m", type=int, default=20)
        sp.add_argument("--n0", type=int, default=8)
        sp.add_argument("--n0-b", type=int, default=None,
                        help="column-side grid lines for multiterm-sylv (default --n0)")
        sp.add_argument("--ell", type=int, default=2)
        sp.add_argument("--beta", type=float, default=0.01)
        sp.add_argument("--seed", type=int, default=0)

    sol = sub.add_parser("solve", help="run one solver and write trace/summary")
    add_problem_flags(sol)
    sol.add_argument("--config", help="flat key = value file; flags override it")
    sol.add_argument("--window", type=int, default=5,
                     help="RRE window size; 0 disables extrapolation")
    sol.add_argument("--inner", choices=["adi", "eksm"], default="adi")
    sol.add_argument("--tol-outer", type=float, default=1e-10)
    sol.add_argument("--eta", type=float, default=1e-3)
    sol.add_argument("--tol-trunc", type=float, default=1e-8)
    sol.add_argument("--max-col", type=int, default=None)
    sol.add_argument("--max-iter", type=int, default=50)
    sol.add_argument("--part-size", type=int, default=None)
    sol.add_argument("--mode", choices=["dense", "lowrank"], default="lowrank")
    sol.add_argument("--threads", type=int, default=1,
                     help="reserved; the solvers run single-threaded")
    sol.add_argument("--out", required=True, help="prefix for .trace.csv/.summary")

    gen = sub.add_parser("gen", help="write problem matrices and a manifest")
    add_problem_flags(gen)
    gen.add_argument("--out", required=True, help="output directory")

    spec_cmd = sub.add_parser("spectrum", help="print iteration-matrix eigenvalue moduli")
    add_problem_flags(spec_cmd)
    return p


def _load_config_file(path, argv):
    """Re-parse with config entries injected as flags; explicit flags win."""
    extra = []
    try:
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"expected 'key = value', got {line!r}")
                key, value = (s.strip() for s in line.split("=", 1))
                if key in ("config",):
                    continue
                extra.extend([f"--{key.replace('_', '-')}", value])
    except (OSError, ValueError) as exc:
        print(f"mtsylv: cannot read config: {exc}", file=sys.stderr)
        raise SystemExit(1)
    merged = [argv[0]] + extra + argv[1:]
    return build_parser().parse_args(merged)


def _build_problem(args) -> ProblemSpec:
    if args.problem == "random-dense":
        return gen_random_dense(GeneratorParams(
            n=args.n, m=args.m, ell=args.ell, beta=args.beta, seed=args.seed))
    if args.problem == "advdiff":
        return gen_advdiff(args.n0, args.beta)
    if args.problem == "multiterm-sylv":
        return gen_multiterm_sylvester(args.n0, args.n0_b or args.n0, args.beta)
    if not args.dir:
        raise MtsylvError("--problem files needs --dir")
    return _load_problem_dir(args.dir)


def _manifest_path(directory):
    return os.path.join(directory, "manifest.txt")


def _load_problem_dir(directory) -> ProblemSpec:
    manifest = {}
    with open(_manifest_path(directory), encoding="utf-8") as fh:
        for line in fh:
            if "=" in line:
                key, value = (s.strip() for s in line.split("=", 1))
                manifest[key] = value
    ell = int(manifest.get("ell", 0))
    read = lambda name: matrix_market_read(os.path.join(directory, name))
    return ProblemSpec(
        A=read("A.mtx"), B=read("B.mtx"),
        N=[read(f"N{k}.mtx") for k in range(1, ell + 1)],
        H=[read(f"H{k}.mtx") for k in range(1, ell + 1)],
        F=as_dense(read("F.mtx")), T=as_dense(read("T.mtx")),
        G=as_dense(read("G.mtx")),
        kind=manifest.get("kind", "sylvester"),
        pi_weight=float(manifest.get("pi_weight", 1.0)))


def cmd_gen(args) -> int:
    spec = _build_problem(args)
    try:
        os.makedirs(args.out, exist_ok=True)
        matrix_market_write(os.path.join(args.out, "A.mtx"), spec.A)
        matrix_market_write(os.path.join(args.out, "B.mtx"), spec.B)
        for k, (Nk, Hk) in enumerate(zip(spec.N, spec.H), start=1):
            matrix_market_write(os.path.join(args.out, f"N{k}.mtx"), Nk)
            matrix_market_write(os.path.join(args.out, f"H{k}.mtx"), Hk)
        matrix_market_write(os.path.join(args.out, "F.mtx"), spec.F)
        matrix_market_write(os.path.join(args.out, "T.mtx"), spec.T)
        matrix_market_write(os.path.join(args.out, "G.mtx"), spec.G)
        with open(_manifest_path(args.out), "w", encoding="utf-8") as fh:
            fh.write(f"kind = {spec.kind}\n")
            fh.write(f"ell = {spec.ell}\n")
            fh.write(f"beta = {args.beta}\n")
            fh.write(f"seed = {args.seed}\n")
            fh.write(f"n = {spec.n}\n")
            fh.write(f"m = {spec.m}\n")
            fh.write(f"r = {spec.r}\n")
            fh.write(f"pi_weight = {_fmt(spec.pi_weight)}\n")
    except OSError as exc:
        print(f"mtsylv: cannot write problem files: {exc}", file=sys.stderr)
        return 1
    return 0


def _write_artifacts(prefix, trace, final_rank, wall_s):
    with open(prefix + ".trace.csv", "w", encoding="ascii") as fh:
        fh.write(TRACE_HEADER + "\n")
        for rec in trace.records:
            rank = "" if rec.rank is None else str(rec.rank)
            steps = "" if rec.inner_steps is None else str(rec.inner_steps)
            fh.write(f"{rec.k},{_fmt(rec.scaled_residual)},{rank},{steps},"
                     f"{_fmt(rec.elapsed_s)},{int(rec.extrapolated)}\n")
    status = trace.status
    with open(prefix + ".summary", "w", encoding="ascii") as fh:
        fh.write(f"status = {status}\n")
        fh.write(f"iters = {trace.iters}\n")
        fh.write(f"final_residual = {_fmt(trace.final_residual)}\n")
        fh.write(f"final_rank = {'na' if final_rank is None else final_rank}\n")
        fh.write(f"wall_s = {_fmt(wall_s)}\n")


def cmd_solve(args) -> int:
    spec = _build_problem(args)
    config = SolverConfig(
        window=max(1, args.window),
        rre_enabled=args.window > 0,
        tau_outer=args.tol_outer,
        eta=args.eta,
        tau_trunc=args.tol_trunc,
        max_col=args.max_col,
        k_max=args.max_iter,
        inner=args.inner,
        part_size=args.part_size,
        seed=args.seed)
    t0 = time.perf_counter()
    final_rank = None
    try:
        if args.mode == "dense":
            _, trace = stationary_dense_solve(spec, config)
        else:
            x, trace = nonstationary_lowrank_solve(spec, config)
            final_rank = x.rank
    except DivergedError as exc:
        trace = exc.trace
        if trace.records and trace.records[-1].rank is not None:
            final_rank = trace.records[-1].rank
        _write_artifacts(args.out, trace, final_rank, time.perf_counter() - t0)
        return 3
    _write_artifacts(args.out, trace, final_rank, time.perf_counter() - t0)
    return 0 if trace.converged else 2


def cmd_spectrum(args) -> int:
    spec = _build_problem(args)
    try:
        moduli = iteration_spectrum(spec).moduli
    except OracleTooLargeError as exc:
        print(f"mtsylv: {exc}", file=sys.stderr)
        return 1
    for value in moduli[: min(20, moduli.size)]:
        print(f"{value:.6g}")
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        args = _load_config_file(args.config, argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "gen":
            return cmd_gen(args)
        return cmd_spectrum(args)
    except (MatrixMarketError, OSError, MtsylvError) as exc:
        if isinstance(exc, DivergedError):
            raise
        print(f"mtsylv: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
