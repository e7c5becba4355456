"""Command-line entry point.

Exit codes: 0 success, 1 negative verdict, 2 usage or input error,
3 budget exceeded.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io
from .errors import BudgetExceeded, StableClustError
from .exact import format_exact
from .instance import Instance
from .local_search import SearchConfig, rho_swap_search
from .metric import EUCLIDEAN, Point
from .oracle import DEFAULT_BUDGET, solve_exact, verify_cost_drop_theorem
from .reductions import (
    GridReductionSpec,
    GridTilingInstance,
    PvcGraph,
    build_cylinder_instance,
    build_grid_instance,
    build_pvc_instance,
    certify_grid_equivalence,
    certify_pvc_equivalence,
    clearance_grid,
    fit_sphere_3d,
    fit_sphere_4d,
    measure_approx_check,
    quarter_gaps,
    residuals,
    sphere_curve_clearance,
)
from .stability import falsify_stability

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

COMMANDS = ("gen-grid", "gen-cylinder", "gen-pvc4", "gen-pvc6", "solve", "oracle",
            "verify-stability", "certify-reduction", "check-lemmas", "bench")


class UsageError(StableClustError):
    pass


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stableclust", description="Stable clustering toolkit.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--instance", type=Path, help="instance file (grid tiling file for gen-grid/gen-cylinder)")
    p.add_argument("--graph", type=Path, help="graph file with header 'n m k s'")
    p.add_argument("--k", type=int, help="override the number of centres (cover size for graphs)")
    p.add_argument("--rho", type=int, default=2, help="swap size of the local search (default 2)")
    p.add_argument("--eps", type=_rational, help="epsilon (grid spacing, diagnostics, lemma checks)")
    p.add_argument("--alpha", type=_rational, help="perturbation factor")
    p.add_argument("--beta", type=_rational, default=Fraction(0), help="matching-distance tolerance")
    p.add_argument("--budget", type=int,
                   help="evaluation limit; trial count for verify-stability, instance count for bench")
    p.add_argument("--seed", type=int, default=0, help="seed for random perturbations and bench instances")
    p.add_argument("--out", type=Path, help="output file")
    p.add_argument("--force", action="store_true", help="overwrite outputs and lift neighbourhood limits")
    p.add_argument("--jobs", type=int, default=1, help="worker processes; results do not depend on it")
    p.add_argument("--variant", help="pvc4, pvc6 or grid for certify-reduction; measure, spheres or all for check-lemmas")
    return p


def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise UsageError(f"{args.command} needs --{n}")


def _emit(args, text: str) -> None:
    sys.stdout.write(text)
    if args.out is not None:
        io.write_text(args.out, text, args.force)


def _load(args) -> Instance:
    _need(args, "instance")
    inst = io.load_instance(args.instance)
    return replace(inst, k=args.k) if args.k is not None else inst


def _limit(args) -> int:
    return args.budget if args.budget is not None else DEFAULT_BUDGET


def _grid_spec(args) -> GridReductionSpec:
    _need(args, "instance", "eps")
    return GridReductionSpec(io.load_grid_tiling(args.instance), args.eps)


def _cmd_gen_grid(args) -> int:
    spec = _grid_spec(args)
    build = build_cylinder_instance if args.command == "gen-cylinder" else build_grid_instance
    inst = build(spec)
    _need(args, "out")
    io.save_instance(args.out, inst, args.force)
    print(f"points {len(inst.points)}")
    print(f"centres {len(inst.centres)}")
    print(f"k {inst.k}")
    print(f"sigma {spec.sigma_count}")
    print(f"beta_certified {format_exact(spec.beta_certified)}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _graph(args) -> PvcGraph:
    _need(args, "graph")
    g = io.load_graph(args.graph)
    return replace(g, k=args.k) if args.k is not None else g


def _cmd_gen_pvc(args) -> int:
    red = build_pvc_instance(_graph(args), args.command[4:])
    _need(args, "out")
    io.save_instance(args.out, red.instance, args.force)
    print(f"r_q_sq {format_exact(red.r_q_sq)}")
    print(f"eps {format_exact(red.eps)}")
    print(f"eps_prime {format_exact(red.eps_prime)}")
    print(f"k {red.instance.k}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    inst = _load(args)
    cfg = SearchConfig(rho=args.rho, max_iters=args.budget, force=args.force,
                       epsilon=args.eps if args.eps is not None else Fraction(1, 10))
    sol, trace = rho_swap_search(inst, cfg)
    trace_path = args.out if args.out is not None else args.instance.with_name(args.instance.name + ".trace")
    io.write_text(trace_path, trace.to_text(), force=args.force or args.out is None)
    print(f"cost {format_exact(sol.cost)}")
    print(f"cost_float {float(sol.cost):.12g}")
    print("solution " + " ".join(map(str, sorted(sol.centres))))
    print(f"swaps {trace.swaps}")
    print(f"terminated {trace.terminated_reason}")
    print(f"trace {trace_path}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    inst = _load(args)
    text = solve_exact(inst, _limit(args), args.jobs).to_text()
    if args.eps is not None:
        text += verify_cost_drop_theorem(inst, args.eps, None, _limit(args)).to_text()
    _emit(args, text)
    return EXIT_OK


def _cmd_verify(args) -> int:
    inst = _load(args)
    _need(args, "alpha")
    trials = args.budget if args.budget is not None else 1000
    verdict = falsify_stability(inst, args.alpha, args.beta, trials, args.seed, jobs=args.jobs)
    _emit(args, verdict.to_text())
    return EXIT_NEGATIVE if verdict.violated else EXIT_OK


def _graph_from_provenance(prov: dict) -> PvcGraph:
    edges = tuple(tuple(int(x) for x in e.split(",")) for e in prov["edges"].split(";"))
    return PvcGraph(int(prov["n"]), edges, int(prov["k"]), int(prov.get("s", 0)))


def _tiling_from_provenance(prov: dict) -> GridReductionSpec:
    sets = {}
    for cell in prov["sets"].split(";"):
        ij, pairs = cell.split(":")
        i, j = (int(x) for x in ij.split(","))
        sets[i, j] = {tuple(int(x) for x in p.split(".")) for p in pairs.split(",")}
    gt = GridTilingInstance(int(prov["n"]), int(prov["k"]), sets)
    return GridReductionSpec(gt, Fraction(prov["eps"]))


def _cmd_certify(args) -> int:
    variant = args.variant
    if args.graph is not None:
        g = _graph(args)
        variant = variant or "pvc4"
        spec = None
    else:
        _need(args, "instance")
        text = args.instance.read_text()
        if text.lstrip().startswith("grid-tiling"):
            spec = _grid_spec(args)
            variant = variant or "grid"
        else:
            prov = io.parse_instance(text).provenance
            source = prov.get("source", "")
            variant = variant or {"grid-tiling": "grid", "grid-tiling-cylinder": "grid"}.get(source, source)
            if source in ("pvc4", "pvc6"):
                g = _graph_from_provenance(prov)
                if args.k is not None:
                    g = replace(g, k=args.k)
                spec = None
            elif source.startswith("grid-tiling"):
                spec = _tiling_from_provenance(prov)
            else:
                raise UsageError("instance carries no reduction provenance")
    if variant in ("pvc4", "pvc6"):
        if spec is not None:
            raise UsageError(f"variant {variant} needs a graph")
        cert = certify_pvc_equivalence(g, variant, _limit(args))
    elif variant == "grid":
        if spec is None:
            raise UsageError("variant grid needs a grid tiling")
        cert = certify_grid_equivalence(spec, _limit(args))
    else:
        raise UsageError(f"unknown variant {variant!r}")
    _emit(args, cert.to_text())
    return EXIT_OK if cert.holds else EXIT_NEGATIVE


def _cmd_lemmas(args) -> int:
    variant = args.variant or "all"
    if variant not in ("measure", "spheres", "all"):
        raise UsageError(f"unknown lemma group {variant!r}")
    lines, ok = [], True
    if variant in ("spheres", "all"):
        n = args.k if args.k is not None else 8
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                for fit, params in ((fit_sphere_3d(i, j), range(1, n + 1)),
                                    (fit_sphere_4d(1, i + 1, j + 1, (1, 1, 1, 1)), range(2, n + 2))):
                    zero = all(r == 0 for r in residuals(fit))
                    quarter = all(g >= Fraction(1, 4) for g in quarter_gaps(fit, params).values())
                    clear = sphere_curve_clearance(fit, clearance_grid(fit, n)).ok
                    good = zero and quarter and clear
                    ok &= good
                    lines.append(f"sphere{fit.dim}d {i} {j} residuals {'zero' if zero else 'nonzero'} "
                                 f"quarter {'ok' if quarter else 'fail'} clearance {'ok' if clear else 'fail'}")
    if variant in ("measure", "all"):
        epss = [args.eps] if args.eps is not None else [Fraction(1, 20), Fraction(1, 50), Fraction(1, 100)]
        for r in (Fraction(1, 4), Fraction(1, 2), Fraction(1)):
            for e in epss:
                rep = measure_approx_check(Point(0, (Fraction(0), Fraction(0))), r, e)
                ok &= rep.ok
                lines.append(f"measure r {r} eps {e} count {rep.count} "
                             f"[{rep.count_lower:.6f}, {rep.count_upper:.6f}] "
                             f"dist_sum {rep.distance_sum:.6f} <= {rep.distance_upper:.6f} "
                             f"{'ok' if rep.ok else 'fail'}")
    lines.append(f"all_ok {str(ok).lower()}")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_NEGATIVE


def random_instance(rng: np.random.Generator, n_points: int, n_centres: int, k: int,
                    objective: str = "kmedian", penalties: bool = False, side: int = 20) -> Instance:
    """Integer points in a square; centres are a subset of the data points."""
    coords = rng.choice(side * side, size=n_points, replace=False)
    pts = [Point(i, (int(c) // side, int(c) % side)) for i, c in enumerate(coords)]
    cts = [Point(i, pts[i].coords, role="centre") for i in sorted(rng.choice(n_points, n_centres, replace=False))]
    pen = {p.id: Fraction(int(rng.integers(2, side))) for p in pts} if penalties else None
    return Instance(objective, pts, cts, EUCLIDEAN, k, pen)


def _cmd_bench(args) -> int:
    rng = np.random.default_rng(args.seed)
    count = args.budget if args.budget is not None else 20
    k = args.k if args.k is not None else 3
    rows, timing, hits = [], [], 0
    for t in range(count):
        inst = random_instance(rng, 24, 10, k, "kmedian" if t % 2 else "kmeans", penalties=bool(t % 3 == 0))
        t0 = time.perf_counter()
        sol, trace = rho_swap_search(inst, SearchConfig(rho=args.rho, force=args.force))
        t1 = time.perf_counter()
        opt = solve_exact(inst, DEFAULT_BUDGET, args.jobs)
        t2 = time.perf_counter()
        hit = sol.centres in opt
        hits += hit
        rows.append(f"{t} {inst.objective} pen={int(inst.has_penalties)} swaps {trace.swaps} "
                    f"search {format_exact(sol.cost)} optimum {format_exact(opt.optimal_cost)} "
                    f"{'hit' if hit else 'miss'}")
        timing.append(f"{t} search_s {t1 - t0:.4f} oracle_s {t2 - t1:.4f}")
    rows.append(f"optimal {hits}/{count}")
    _emit(args, "\n".join(rows) + "\n")
    sys.stdout.write("\n".join(timing) + "\n")
    return EXIT_OK


HANDLERS = {
    "gen-grid": _cmd_gen_grid,
    "gen-cylinder": _cmd_gen_grid,
    "gen-pvc4": _cmd_gen_pvc,
    "gen-pvc6": _cmd_gen_pvc,
    "solve": _cmd_solve,
    "oracle": _cmd_oracle,
    "verify-stability": _cmd_verify,
    "certify-reduction": _cmd_certify,
    "check-lemmas": _cmd_lemmas,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.rho < 1 or args.jobs < 1:
        print("error: --rho and --jobs must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return HANDLERS[args.command](args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (StableClustError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
