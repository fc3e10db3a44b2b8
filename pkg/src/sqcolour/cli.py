"""Command-line entry point.

Exit codes: 0 success or SAT, 2 a correctly determined UNSAT / violation /
diagnostic outcome, 1 usage or I/O errors.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from . import io as fmt
from .generators import (
    kkk_free_example,
    named_graph,
    random_core_instance,
    random_planar_triangulation,
    wegner_graph,
)
from .graph import MultiGraph, degeneracy_order, square
from .kahn import KahnParams, colour_core_extension, extension_violation, palette_size
from .labelling import (
    LabellingError,
    chromatic_number,
    colouring_violation,
    degeneracy_greedy_square,
    exact_list_colouring,
    greedy_many_passes,
    lift_labelling,
    lpq_constraints,
    lpq_violation,
    min_span_lpq,
    span,
)
from .matching import (
    HardCoreModel,
    NonConvergence,
    activity_bound_report,
    correlation_decay_probe,
    fit_activities,
    in_matching_polytope,
)
from .reduction import ReductionParams, find_reduction, verify_certificate

OK, NEGATIVE, FAILURE = 0, 2, 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(FAILURE)


def _emit(report: fmt.RunReport, path):
    text = report.text()
    if path:
        fmt._write(path, text)
    else:
        sys.stdout.write(text)


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


# subcommands ------------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.family == "wegner":
        G = wegner_graph(args.k)
    elif args.family == "kkk":
        G = kkk_free_example(args.m)
    elif args.family == "named":
        if not args.name:
            raise UsageError("--name is required for the named family")
        G = named_graph(args.name)
    elif args.family == "planar":
        G = random_planar_triangulation(args.n, args.seed)
    else:
        G, cert = random_core_instance(args.seed)
        if args.certificate:
            fmt.write_certificate(cert, args.certificate)
    fmt.write_edgelist(G, args.out) if args.out else sys.stdout.write(fmt.format_edgelist(G))
    if args.out:
        print(f"n={G.n} m={G.m} max_degree={G.max_degree} out={args.out}")
    return OK


def cmd_square(args) -> int:
    G = fmt.read_edgelist(args.input)
    S = square(G)
    if args.out:
        fmt.write_edgelist(S, args.out)
        print(f"n={S.n} m={S.m} max_degree={S.max_degree} out={args.out}")
    else:
        sys.stdout.write(fmt.format_edgelist(S))
    return OK


def _labelling_output(f, valid, args, report):
    text = fmt.format_labelling(f, span=span(f) if f else 0, valid=valid)
    if args.out:
        fmt._write(args.out, text)
        report.add("out", args.out)
    else:
        sys.stdout.write(text)


def cmd_label(args) -> int:
    G = fmt.read_edgelist(args.input)
    p, q = args.p, args.q
    lists = fmt.read_lists(args.lists) if args.lists else None
    report = fmt.RunReport("label").add("input_digest", fmt.digest(args.input))
    report.add("algorithm", args.algorithm).add("p", p).add("q", q)
    start = time.perf_counter()
    sep_extra = [(G, args.separation)] if args.separation else []
    if args.algorithm == "greedy":
        f = greedy_many_passes(G, p, q, lists)
    elif args.algorithm == "degeneracy":
        f = degeneracy_greedy_square(G)
    elif args.algorithm == "lift":
        if lists is None:
            raise UsageError("--lists is required for the lift algorithm")
        f = lift_labelling(G, p, q, lists)
    else:
        if lists is None and not sep_extra:
            _, f = min_span_lpq(G, p, q)
        else:
            target, sep = lpq_constraints(G, p, q)
            domain = lists or {v: range(args.max_span) for v in G.vertices()}
            f = exact_list_colouring(target, domain, sep + sep_extra)
    report.add("elapsed", f"{time.perf_counter() - start:.3f}")
    if f is None:
        report.add("result", "UNSAT")
        _emit(report, args.report)
        return NEGATIVE
    problem = lpq_violation(G, f, p, q)
    if problem is None and sep_extra:
        problem = colouring_violation(MultiGraph(G.n), f, sep_extra)
    if problem is None and lists is not None:
        problem = next(((v, f[v]) for v in G.vertices() if f[v] not in set(lists[v])), None)
    report.add("result", "SAT").add("span", span(f)).add("valid", problem is None)
    _labelling_output(f, problem is None, args, report)
    _emit(report, args.report)
    return OK if problem is None else NEGATIVE


def _finish_colouring(G, f, lists, report, args):
    problem = colouring_violation(square(G), f)
    if problem is None and lists is not None:
        problem = next(((v, f[v]) for v in G.vertices() if f[v] not in set(lists[v])), None)
    report.add("colours", len(set(f.values()))).add("valid", problem is None)
    if problem is not None:
        report.add("violation", " ".join(str(x) for x in problem))
    _labelling_output(f, problem is None, args, report)
    _emit(report, args.report)
    return OK if problem is None else NEGATIVE


def _first_fit(G2: MultiGraph, order, lists, fixed=None):
    f = dict(fixed or {})
    for v in order:
        used = {f[w] for w in G2.adjacency[v] if w in f}
        options = lists[v] if lists is not None else range(G2.n + 1)
        choice = next((c for c in sorted(options) if c not in used), None)
        if choice is None:
            return None
        f[v] = choice
    return f


def cmd_colour_square(args) -> int:
    G = fmt.read_edgelist(args.input)
    lists = fmt.read_lists(args.lists) if args.lists else None
    report = fmt.RunReport("colour-square").add("input_digest", fmt.digest(args.input))
    report.add("algorithm", args.algorithm).add("seed", args.seed)
    start = time.perf_counter()
    G2 = square(G)
    if args.algorithm == "greedy":
        f = greedy_many_passes(G, 1, 1, lists)
    elif args.algorithm == "degeneracy":
        f = degeneracy_greedy_square(G) if lists is None else _first_fit(G2, degeneracy_order(G)[0], lists)
    elif args.algorithm == "exact":
        if lists is None:
            _, f = chromatic_number(G2)
        else:
            f = exact_list_colouring(G2, lists)
    else:
        delta = args.delta_param or G.max_degree
        params = ReductionParams(delta, args.epsilon)
        cert = find_reduction(G, params)
        report.add("delta_param", delta).add("certificate", cert.kind)
        if cert.kind == "diagnostic":
            report.add("reason", cert.reason).add("elapsed", f"{time.perf_counter() - start:.3f}")
            _emit(report, args.report)
            return NEGATIVE
        palette = list(range(palette_size(delta, args.epsilon)))
        vlists = lists or {v: palette for v in G.vertices()}
        R = {cert.vertex} if cert.kind == "A" else set(cert.core)
        order = [v for v in degeneracy_order(G)[0] if v not in R]
        partial = _first_fit(G2, order, vlists)
        if partial is None:
            report.add("result", "UNSAT").add("stage", "outside-core")
            _emit(report, args.report)
            return NEGATIVE
        if cert.kind == "A":
            v = cert.vertex
            blocked = {partial[w] for w in G.bfs_distances(v, cutoff=2) if w != v}
            choice = next((c for c in sorted(vlists[v]) if c not in blocked), None)
            if choice is None:
                report.add("result", "UNSAT").add("stage", "vertex-A")
                _emit(report, args.report)
                return NEGATIVE
            f = dict(partial)
            f[v] = choice
        else:
            kp = KahnParams(epsilon=float(args.epsilon), retry_limit=args.retry_limit)
            res = colour_core_extension(G, cert, partial, vlists, args.epsilon, params=kp, seed=args.seed)
            _kahn_lines(report, res)
            f = res.colouring
            if f is not None:
                report.add("separation_ok", extension_violation(G, f, R, res.conflicts.s) is None)
    report.add("elapsed", f"{time.perf_counter() - start:.3f}")
    if f is None:
        report.add("result", "UNSAT")
        _emit(report, args.report)
        return NEGATIVE
    report.add("result", "SAT")
    return _finish_colouring(G, f, lists, report, args)


def _kahn_lines(report, res):
    report.add("two_copies", res.used_two_copies).add("status", res.status)
    run = res.run
    if run is None:
        return
    report.add("iterations", run.iterations).add("retry_exhausted", run.retry_exhausted)
    report.add("finish", run.finish_path)
    for r in run.reports:
        report.add(
            f"iteration.{r.iteration}",
            f"attempt={r.attempt} coloured={r.coloured} uncoloured={r.uncoloured_after} "
            f"T_v={len(r.T_v)} T_e={len(r.T_e)} S_v={len(r.S_v)} "
            f"max_degree={r.max_degree_after} min_mass={r.min_mass:.6g} max_conflicts={r.max_conflicts}",
        )
    for d in run.diagnostics:
        report.add(f"local_lemma.{d.iteration}", f"attempts={d.attempts} p_hat={d.p_hat:.6g} d={d.d} epd={d.product:.6g}")


def cmd_extend(args) -> int:
    G = fmt.read_edgelist(args.input)
    cert = fmt.read_certificate(args.certificate)
    partial = fmt.read_labelling(args.partial)
    lists = fmt.read_lists(args.lists) if args.lists else None
    report = fmt.RunReport("extend").add("input_digest", fmt.digest(args.input)).add("seed", args.seed)
    problems = verify_certificate(G, cert)
    if problems:
        report.add("certificate_ok", False).add("problem", problems[0])
        _emit(report, args.report)
        return NEGATIVE
    kp = KahnParams(epsilon=float(args.epsilon), retry_limit=args.retry_limit)
    start = time.perf_counter()
    res = colour_core_extension(G, cert, partial, lists, args.epsilon, params=kp, seed=args.seed)
    _kahn_lines(report, res)
    report.add("elapsed", f"{time.perf_counter() - start:.3f}")
    if res.colouring is None:
        report.add("result", "UNSAT")
        _emit(report, args.report)
        return NEGATIVE
    report.add("result", "SAT").add("valid", res.verified)
    if res.problem:
        report.add("violation", " ".join(str(x) for x in res.problem))
    _labelling_output(res.colouring, res.verified, args, report)
    _emit(report, args.report)
    return OK if res.verified else NEGATIVE


def cmd_reduce(args) -> int:
    G = fmt.read_edgelist(args.input)
    params = ReductionParams(args.delta, args.epsilon)
    start = time.perf_counter()
    cert = find_reduction(G, params)
    elapsed = time.perf_counter() - start
    text = fmt.format_certificate(cert)
    if cert.ok:
        problems = verify_certificate(G, cert)
        text += f"verified={str(not problems).lower()}\n"
    text += f"elapsed={elapsed:.3f}\n"
    if args.report:
        fmt._write(args.report, text)
    else:
        sys.stdout.write(text)
    return OK if cert.ok else NEGATIVE


def cmd_polytope_check(args) -> int:
    H = fmt.read_edgelist(args.input)
    x = fmt.read_vector(args.x, H.m)
    verdict = in_matching_polytope(H, x, args.scale, strict=args.strict)
    report = fmt.RunReport("polytope-check").add("input_digest", fmt.digest(args.input))
    report.add("scale", args.scale).add("strict", args.strict).add("inside", verdict.inside)
    if not verdict.inside:
        c = verdict.violated_constraint
        report.add("violated", c[0])
        if c[0] == "odd-set":
            report.add("set", " ".join(str(v) for v in sorted(c[1]))).add("sum", c[2]).add("bound", c[3])
        else:
            report.add("at", c[1]).add("sum", c[2])
    _emit(report, args.report)
    return OK if verdict.inside else NEGATIVE


def cmd_fit_activities(args) -> int:
    H = fmt.read_edgelist(args.input)
    target = [float(v) for v in fmt.read_vector(args.target, H.m)]
    report = fmt.RunReport("fit-activities").add("input_digest", fmt.digest(args.input))
    report.add("tol", args.tol).add("max_iter", args.max_iter)
    start = time.perf_counter()
    try:
        model = fit_activities(H, target, args.tol, args.max_iter, trace_every=args.trace_every)
    except NonConvergence as exc:
        report.add("result", "NON_CONVERGENCE").add("reason", str(exc))
        _emit(report, args.report)
        return NEGATIVE
    report.add("elapsed", f"{time.perf_counter() - start:.3f}")
    error = max((abs(a - b) for a, b in zip(model.marginals, target)), default=0.0)
    bounds = activity_bound_report(model)
    report.add("result", "converged").add("max_error", error).add("beta_hat", bounds.beta_hat)
    for it, err in dict(getattr(model, "fit_trace", ())).items():
        report.add(f"trace.{it}", f"{err:.6g}")
    if args.out:
        fmt.write_vector(list(model.activities), args.out)
        report.add("out", args.out)
    else:
        sys.stdout.write(fmt.format_vector(list(model.activities)))
    _emit(report, args.report)
    return OK


def cmd_probe_decay(args) -> int:
    H = fmt.read_edgelist(args.input)
    acts = fmt.read_vector(args.activities, H.m) if args.activities else [1] * H.m
    if not 0 <= args.edge < H.m:
        raise UsageError("--edge out of range")
    model = HardCoreModel(H, tuple(acts))
    rows = correlation_decay_probe(model, args.edge, args.max_t)
    report = fmt.RunReport("probe-decay").add("input_digest", fmt.digest(args.input)).add("edge", args.edge)
    for r in rows:
        report.add(f"t.{r.t}", f"distant_edges={r.distant_edges} patterns={r.patterns} max_deviation={float(r.max_deviation):.12g}")
    _emit(report, args.report)
    return OK


def cmd_verify(args) -> int:
    G = fmt.read_edgelist(args.input)
    f = fmt.read_labelling(args.labelling)
    missing = [v for v in G.vertices() if v not in f]
    if missing:
        raise fmt.FormatError(f"labelling misses vertices {missing[:5]}")
    report = fmt.RunReport("verify").add("input_digest", fmt.digest(args.input)).add("p", args.p).add("q", args.q)
    problem = lpq_violation(G, f, args.p, args.q)
    if problem is None and args.separation:
        bad = colouring_violation(MultiGraph(G.n), f, (G, args.separation))
        if bad is not None:
            problem = (bad[0], bad[1], 1, bad[3])
    report.add("valid", problem is None).add("span", span(f))
    if problem is not None:
        u, v, dist, gap = problem
        report.add("violation", f"{u} {v} distance={dist} gap={gap}")
    _emit(report, args.report)
    return OK if problem is None else NEGATIVE


def _bench_one(job):
    idx, n, seed = job
    G = random_planar_triangulation(n, seed)
    start = time.perf_counter()
    f = degeneracy_greedy_square(G)
    elapsed = time.perf_counter() - start
    _, q = degeneracy_order(G)
    ok = colouring_violation(square(G), f) is None
    colours = len(set(f.values()))
    bound = (2 * q - 1) * G.max_degree + 1
    return idx, f"n={n} seed={seed} max_degree={G.max_degree} degeneracy={q} colours={colours} bound={bound} valid={str(ok).lower()}", elapsed, ok


def cmd_bench(args) -> int:
    jobs = [(i, args.n, args.seed + i) for i in range(args.count)]
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        results = sorted(pool.map(_bench_one, jobs))
    report = fmt.RunReport("bench").add("count", args.count).add("workers", args.workers)
    for idx, line, _, _ in results:
        report.add(f"instance.{idx}", line)
    report.add("elapsed", f"{sum(r[2] for r in results):.3f}")
    _emit(report, args.report)
    return OK if all(r[3] for r in results) else NEGATIVE


# parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sqcolour", description="Colouring squares of graphs and supporting machinery.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a generated graph as an edge list")
    p.add_argument("--family", choices=["wegner", "kkk", "named", "planar", "core"], required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--name")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--certificate", help="core family: where to write the certificate")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("square", help="write the square of a graph")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_square)

    p = sub.add_parser("label", help="L(p,q)-labelling")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--algorithm", choices=["greedy", "degeneracy", "lift", "exact"], default="greedy")
    p.add_argument("--lists")
    p.add_argument("--separation", type=int, default=0, help="extra gap required across edges of G")
    p.add_argument("--max-span", type=int, default=64, help="label range for exact search with a separation")
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("colour-square", help="proper (list) colouring of the square")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--algorithm", choices=["greedy", "degeneracy", "kahn", "exact"], default="degeneracy")
    p.add_argument("--lists")
    p.add_argument("--epsilon", type=_fraction, default=Fraction(1, 4))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta-param", type=int)
    p.add_argument("--retry-limit", type=int, default=10)
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_colour_square)

    p = sub.add_parser("extend", help="extend a colouring over the core of a certificate")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--certificate", required=True)
    p.add_argument("--partial", required=True)
    p.add_argument("--lists")
    p.add_argument("--epsilon", type=_fraction, default=Fraction(1, 4))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--retry-limit", type=int, default=10)
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("reduce", help="search for a reduction certificate")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--epsilon", type=_fraction, default=Fraction(1, 4))
    p.add_argument("--report")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("polytope-check", help="matching polytope membership")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--scale", type=_fraction, default=Fraction(1))
    p.add_argument("--strict", action="store_true")
    p.add_argument("--report")
    p.set_defaults(func=cmd_polytope_check)

    p = sub.add_parser("fit-activities", help="fit hard-core activities to target marginals")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--trace-every", type=int, default=100)
    p.add_argument("--out")
    p.add_argument("--report")
    p.set_defaults(func=cmd_fit_activities)

    p = sub.add_parser("probe-decay", help="exact correlation decay table")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--edge", type=int, required=True)
    p.add_argument("--max-t", type=int, default=5)
    p.add_argument("--activities")
    p.add_argument("--report")
    p.set_defaults(func=cmd_probe_decay)

    p = sub.add_parser("verify", help="independent L(p,q) / separation check")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--labelling", required=True)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--separation", type=int, default=0)
    p.add_argument("--report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="degeneracy colouring over seeded triangulations")
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--report")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else FAILURE
    try:
        return args.func(args)
    except (OSError, fmt.FormatError, UsageError) as exc:
        print(f"sqcolour {args.command}: {exc}", file=sys.stderr)
        return FAILURE
    except (ValueError, LabellingError) as exc:
        print(f"sqcolour {args.command}: {exc}", file=sys.stderr)
        return FAILURE


if __name__ == "__main__":
    sys.exit(main())
