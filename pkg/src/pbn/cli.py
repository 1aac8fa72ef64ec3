"""Command-line entry point.

Every command writes a JSON report (sorted keys, 17 significant digits) to
stdout or ``--report FILE``.  Exit status is 0 when all checks pass, 1 when
any check fails and 2 for usage or input errors.
"""

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import core, corpus, markov, processes, wick
from .errors import PBNError
from .report import Report

DEFAULT_SEED = 42


# ---------------------------------------------------------------------------
# file helpers
# ---------------------------------------------------------------------------


def _fixture(name):
    return resources.files("pbn").joinpath("fixtures", name)


def _read_text(path):
    return Path(path).read_text(encoding="utf-8")


def load_matrix(path):
    """Square matrix from CSV (one row per line) or JSON (list of rows)."""
    text = _read_text(path)
    if str(path).endswith(".json"):
        data = json.loads(text)
        if isinstance(data, dict):
            data = data.get("matrix", data.get("entries"))
        return np.array(data, dtype=float)
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    try:
        return np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise PBNError(f"{path}: {exc}") from None


def load_vector(path):
    text = _read_text(path)
    if str(path).endswith(".json"):
        data = json.loads(text)
        if isinstance(data, dict):
            data = data.get("masses")
        return np.array(data, dtype=float).reshape(-1)
    return load_matrix(path).reshape(-1)


def load_space(path):
    return core.SampleSpace.from_json(_read_text(path))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _die_report(space, report):
    X = core.Observable.identity(space)
    even = {lab for lab in space.labels if float(lab) % 2 == 0}
    mean = core.expectation(X, space)
    second = core.expectation(X.apply(lambda v: v * v), space)
    var = core.variance(X, space)
    p_even = core.probability(even, space)
    cond = {str(lab): core.p_bracket({lab}, even, space) for lab in space.labels} if p_even > 0 else {}
    report.outputs.update(
        mean=mean,
        second_moment=second,
        variance=var,
        p_even=p_even,
        p_given_even=cond,
    )
    return X, even


def cmd_die(args, report):
    if args.space:
        space = load_space(args.space)
        report.inputs["space"] = args.space
        X, even = _die_report(space, report)
        report.check("normalization", 1.0, float(space.masses.sum()), 1e-12)
        report.check("variance identity", report.outputs["second_moment"] - report.outputs["mean"] ** 2,
                     report.outputs["variance"], 1e-12)
        return
    space = core.fair_die()
    _die_report(space, report)
    out = report.outputs
    report.check("mean", 3.5, out["mean"], 1e-14)
    report.check("second moment", 91 / 6, out["second_moment"], 1e-14)
    report.check("variance", 35 / 12, out["variance"], 1e-14)
    report.check("P(even)", 0.5, out["p_even"], 1e-14)
    for i in (2, 4, 6):
        report.check(f"P({i}|even)", 1 / 3, out["p_given_even"][str(i)], 1e-14)
    for i in (1, 3, 5):
        report.check(f"P({i}|even)", 0.0, out["p_given_even"][str(i)], 0.0)
    out["variance_fraction"] = str(Fraction(out["variance"]).limit_denominator(1000))


def _parse_labels(space, text):
    by_name = {str(lab): lab for lab in space.labels}
    out = set()
    for tok in text.split(","):
        tok = tok.strip()
        if tok not in by_name:
            raise PBNError(f"unknown outcome {tok!r}")
        out.add(by_name[tok])
    return out


def cmd_expect(args, report):
    space = load_space(args.space)
    report.inputs["space"] = args.space
    if args.values:
        values = [float(v) for v in args.values.split(",")]
        report.inputs["values"] = values
        X = core.Observable(space, values)
    else:
        X = core.Observable.identity(space)
    report.outputs["expectation"] = core.expectation(X, space)
    report.outputs["variance"] = core.variance(X, space)
    report.check("normalization", 1.0, float(space.masses.sum()), 1e-12)
    if args.given:
        H = _parse_labels(space, args.given)
        report.inputs["given"] = sorted(str(h) for h in H)
        ce = core.conditional_expectation(X, H, space)
        report.outputs["conditional_expectation"] = ce
        rest = set(space.labels) - H
        total = ce * core.probability(H, space)
        if rest and core.probability(rest, space) > 0:
            total += core.conditional_expectation(X, rest, space) * core.probability(rest, space)
        report.check("total expectation", report.outputs["expectation"], total, 1e-12)


def cmd_evolve(args, report):
    M = load_matrix(args.matrix)
    report.inputs.update(mode=args.mode, matrix=args.matrix)
    if args.init:
        u0 = markov.SystemPKet(load_vector(args.init))
        report.inputs["init"] = args.init
    else:
        u0 = markov.SystemPKet.uniform(M.shape[0])
    if args.mode == "dtmc":
        if args.k is None:
            raise PBNError("--mode dtmc needs --k")
        chain = markov.StochasticMatrix(M)
        report.inputs["k"] = args.k
        out = markov.dtmc_evolve(u0, chain, args.k)
        alt = markov.apd_evolution(u0, chain, args.k)
    else:
        if args.t is None:
            raise PBNError("--mode ctmc needs --t")
        chain = markov.Generator(M)
        report.inputs["t"] = args.t
        out = markov.ctmc_evolve(u0, chain, args.t)
        alt = markov.apd_evolution(u0, chain, args.t)
        report.bound("forward residual", markov.kolmogorov_forward_residual(chain, args.t), 1e-6)
        report.bound("backward residual", markov.kolmogorov_backward_residual(chain, args.t), 1e-6)
    report.outputs["masses"] = out.masses
    report.outputs["t"] = out.t
    report.check("mass conservation", 1.0, float(out.masses.sum()), 1e-10)
    report.bound("apd agreement", float(np.max(np.abs(out.masses - alt.masses))), 1e-12)
    report.check("nonnegativity", 0.0, min(0.0, float(out.masses.min())), 1e-12)


def _make_spec(args):
    if args.process == "poisson":
        return processes.PoissonSpec(args.rate)
    if args.process == "wiener":
        return processes.WienerSpec(args.sigma)
    return processes.BrownianSpec(args.mu, args.sigma)


def cmd_simulate(args, report):
    spec = _make_spec(args)
    T, n = args.T, args.paths
    report.inputs.update(process=args.process, T=T, paths=n, steps=args.steps)
    if args.process == "poisson":
        report.inputs["lambda"] = args.rate
        mean, var = args.rate * T, args.rate * T
        mu4 = mean * (1 + 3 * mean)
    else:
        report.inputs["sigma"] = args.sigma
        if args.process == "brownian":
            report.inputs["mu"] = args.mu
        mean = args.mu * T if args.process == "brownian" else 0.0
        var = args.sigma**2 * T
        mu4 = 3 * var**2
    paths = processes.simulate(spec, T, n, seed=args.seed, n_steps=args.steps)
    finals = np.array([p.values[-1] for p in paths])
    emp_mean = float(finals.mean())
    emp_var = float(finals.var(ddof=1)) if n > 1 else 0.0
    report.outputs.update(
        mean=emp_mean,
        variance=emp_var,
        theory_mean=mean,
        theory_variance=var,
        points=int(sum(p.times.size for p in paths)),
    )
    # 4 standard errors: a statistical check that is fixed once the seed is
    report.check("mean at T", mean, emp_mean, 4 * math.sqrt(var / n))
    if n > 1:
        report.check("variance at T", var, emp_var, 4 * math.sqrt((mu4 - var**2) / n))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            processes.write_paths_csv(paths, fh)
        report.outputs["csv"] = args.out


def cmd_kernel(args, report):
    report.inputs.update(m=args.m, hbar=args.hbar, xa=args.xa, ta=args.ta, xb=args.xb, tb=args.tb,
                         slices=args.slices, grid=args.grid)
    value = wick.compose_kernels(args.m, args.hbar, args.xa, args.ta, args.xb, args.tb,
                                 args.slices, args.grid)
    report.outputs["value"] = value
    if args.compare_closed_form:
        closed = float(wick.free_kernel(args.m, args.hbar, args.xa, args.ta, args.xb, args.tb))
        rel = abs(value - closed) / closed
        report.outputs.update(closed_form=closed, rel_error=rel)
        report.bound("relative error vs closed form", rel, 0.02)


def cmd_cluster(args, report):
    docs = corpus.ingest(args.input)
    report.inputs.update(input=args.input, threshold=args.threshold)
    R = corpus.relevance(docs)
    clusters = corpus.cluster(R, args.threshold, docs.docs)
    report.outputs.update(n_docs=docs.n_docs, nnz=docs.nnz, n_clusters=len(clusters), clusters=clusters)
    asym = abs(R - R.T)
    report.bound("relevance symmetry", float(asym.max()) if asym.nnz else 0.0, 0.0)
    report.bound("relevance diagonal", float(np.max(np.abs(R.diagonal() - 1.0))), 1e-14)
    _, M = corpus.row_stochastic(docs)
    report.bound("row-stochastic sums", float(np.max(np.abs(np.asarray(M.sum(axis=1)).ravel() - 1.0))), 1e-12)
    if args.matrix_out:
        with open(args.matrix_out, "w", encoding="utf-8", newline="") as fh:
            corpus.write_matrix_csv(R, docs.docs, fh)
        report.outputs["matrix_csv"] = args.matrix_out
    if args.clusters_out:
        Path(args.clusters_out).write_text(corpus.clusters_json(clusters, args.threshold) + "\n", encoding="utf-8")
        report.outputs["clusters_json"] = args.clusters_out


def _random_generator(rng, n, scale=1.0):
    Q = rng.uniform(0.0, scale, (n, n))
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return markov.Generator(Q)


def _random_stochastic(rng, n):
    P = rng.uniform(0.0, 1.0, (n, n))
    return markov.StochasticMatrix(P / P.sum(axis=1, keepdims=True))


def run_suites(report, seed):
    """Invariant suites over the shipped fixtures plus seeded random inputs."""
    rng = np.random.default_rng(seed)

    # probability algebra
    sub = Report("die")
    cmd_die(argparse.Namespace(space=str(_fixture("die.json"))), sub)
    die = load_space(_fixture("die.json"))
    report.check("die mean", 3.5, sub.outputs["mean"], 1e-14)
    report.check("die P(even)", 0.5, sub.outputs["p_even"], 1e-14)
    report.check("die P(2|even)", 1 / 3, sub.outputs["p_given_even"]["2"], 1e-14)
    worst = 0.0
    labels = list(die.labels)
    for a in range(1, 1 << len(labels)):
        A = {labels[i] for i in range(len(labels)) if a >> i & 1}
        for b in range(1, 1 << len(labels), 7):
            B = {labels[i] for i in range(len(labels)) if b >> i & 1}
            worst = max(worst, abs(core.bayes(A, B, die) - core.p_bracket(A, B, die)))
    report.bound("bayes equals definition", worst, 1e-14)

    # markov chains
    P = markov.StochasticMatrix(load_matrix(_fixture("chain.csv")))
    Q = markov.Generator(load_matrix(_fixture("generator.csv")))
    u0 = markov.SystemPKet(load_vector(_fixture("init.csv")))
    report.bound("discrete Chapman-Kolmogorov", markov.chapman_kolmogorov_check(P, 3, 4), 1e-12)
    report.bound("continuous Chapman-Kolmogorov", markov.chapman_kolmogorov_check(Q, 0.3, 0.9), 1e-10)
    report.bound("forward residual", markov.kolmogorov_forward_residual(Q, 0.5), 1e-6)
    report.bound("backward residual", markov.kolmogorov_backward_residual(Q, 0.5), 1e-6)
    for t in (0.0, 1.0, 10.0, 100.0):
        report.check(f"mass conservation t={t:g}", 1.0, float(markov.ctmc_evolve(u0, Q, t).masses.sum()), 1e-10)
    worst = 0.0
    for _ in range(10):
        G = _random_generator(rng, 4)
        w = rng.uniform(size=4)
        p0 = markov.SystemPKet(w / w.sum())
        X = rng.normal(size=4)
        t = float(rng.uniform(0, 2))
        worst = max(worst, abs(markov.heisenberg_expectation(X, G, t, p0)
                               - markov.schrodinger_expectation(X, G, t, p0)))
    report.bound("Heisenberg/Schrodinger agreement", worst, 1e-10)

    # processes
    pois = processes.PoissonSpec(2.0)
    total, mean, var = processes.poisson_moments(pois, 1.5)
    report.check("Poisson mean", 3.0, mean, 1e-8)
    report.check("Poisson variance", 3.0, var, 1e-8)
    _, row = processes.poisson_row(pois, 3, 1.5)
    report.check("Poisson row sum", 1.0, math.fsum(row), 1e-10)
    wsp = processes.WienerSpec(1.3)
    z = np.linspace(-12, 12, 4001)
    wz = processes.trapezoid_weights(z.size, z[1] - z[0])
    comp = float(np.sum(wz * processes.wiener_kernel(wsp, 0.2, 0.0, z, 0.5)
                        * processes.wiener_kernel(wsp, z, 0.5, -0.4, 1.3)))
    report.check("Wiener kernel semigroup", float(processes.wiener_kernel(wsp, 0.2, 0.0, -0.4, 1.3)), comp, 1e-6)

    # wick
    closed = float(wick.free_kernel(1, 1, 0, 0, 0.5, 1))
    comp = wick.compose_kernels(1, 1, 0, 0, 0.5, 1, 4, 200)
    report.bound("path-integral relative error", abs(comp - closed) / closed, 0.02)
    H1 = np.diag([1.0, 2.0, 3.0])
    H2 = np.diag([2.0, 0.5, 1.0])
    st = wick.split_evolve(wick.SplitHamiltonian(H1, H2), 1.0, np.array([1, 0, 0], complex), np.array([1.0, 0, 0]), 1.0)
    report.check("eigenmode decay", math.exp(-2.0), float(st.omega[0]), 1e-10)

    # corpus
    docs = corpus.ingest(_fixture("corpus.tsv"))
    report.check("P(Q1|Q2)", 0.25, corpus.doc_given_doc(docs, "q1", "q2"), 1e-15)
    R = corpus.relevance(docs)
    i, j = docs.doc_index("q1"), docs.doc_index("q2")
    report.check("R(Q1,Q2)", 0.375, float(R[i, j]), 1e-15)
    _, M = corpus.row_stochastic(docs)
    report.bound("row-stochastic sums", float(np.max(np.abs(np.asarray(M.sum(axis=1)).ravel() - 1.0))), 1e-12)
    report.bound("row-stochastic spectrum imaginary part", float(np.max(np.abs(np.linalg.eigvals(M.toarray()).imag))), 1e-10)


def cmd_check(args, report):
    run_suites(report, args.seed)
    report.outputs["n_checks"] = len(report.checks)
    report.outputs["n_failed"] = sum(not c.passed for c in report.checks)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", metavar="FILE", help="write the JSON report here instead of stdout")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default: %(default)s)")
    common.add_argument("--quiet", action="store_true", help="suppress the check summary on stderr")

    parser = argparse.ArgumentParser(prog="pbn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("die", parents=[common], help="worked die example")
    p.add_argument("--space", metavar="FILE", help="sample space JSON {labels, masses}")
    p.set_defaults(func=cmd_die)

    p = sub.add_parser("expect", parents=[common], help="expectation on a sample space")
    p.add_argument("--space", metavar="FILE", required=True)
    p.add_argument("--values", help="comma-separated observable values (default: numeric labels)")
    p.add_argument("--given", help="comma-separated labels of a conditioning event")
    p.set_defaults(func=cmd_expect)

    p = sub.add_parser("evolve", parents=[common], help="evolve a Markov chain")
    p.add_argument("--mode", choices=["dtmc", "ctmc"], required=True)
    p.add_argument("--matrix", metavar="FILE", required=True, help="transition or rate matrix (CSV or JSON)")
    p.add_argument("--init", metavar="FILE", help="initial masses (default: uniform)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--t", type=float, help="time (ctmc)")
    g.add_argument("--k", type=int, help="steps (dtmc)")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("simulate", parents=[common], help="sample process paths")
    p.add_argument("--process", choices=["poisson", "wiener", "brownian"], required=True)
    p.add_argument("--lambda", dest="rate", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--steps", type=int, default=100, help="time mesh for Gaussian processes")
    p.add_argument("--out", metavar="FILE.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("kernel", parents=[common], help="path-integral kernel composition")
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--xa", type=float, default=0.0)
    p.add_argument("--ta", type=float, default=0.0)
    p.add_argument("--xb", type=float, required=True)
    p.add_argument("--tb", type=float, required=True)
    p.add_argument("--slices", type=int, default=4)
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--compare-closed-form", action="store_true")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("cluster", parents=[common], help="document relevance clustering")
    p.add_argument("--input", metavar="FILE", required=True, help="TSV doc<TAB>term<TAB>count")
    p.add_argument("--threshold", type=float, default=0.2)
    p.add_argument("--matrix-out", metavar="FILE")
    p.add_argument("--clusters-out", metavar="FILE")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("check", parents=[common], help="run all invariant suites on shipped fixtures")
    p.set_defaults(func=cmd_check)
    return parser


def run(argv=None, stdout=None, stderr=None):
    """Execute one command; returns ``(exit_code, report)``."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), None
    report = Report(args.command)
    report.inputs["seed"] = args.seed
    try:
        args.func(args, report)
    except (PBNError, OSError) as exc:
        print(f"pbn {args.command}: error: {exc}", file=stderr)
        return 2, None
    text = report.to_json()
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    if not args.quiet:
        for c in report.checks:
            print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: got {c.got:.6g}, "
                  f"expected {c.expected:.6g} ± {c.tolerance:.1g}", file=stderr)
    return (0 if report.passed else 1), report


def main(argv=None):
    code, _ = run(argv)
    sys.exit(code)


if __name__ == "__main__":
    main()
