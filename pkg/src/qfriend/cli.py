"""Command-line front end.

Exit status: 0 on success, 2 on unusable input (bad arguments, malformed
documents, invalid scenarios), 3 when ``--expect-consistent`` or
``--expect-inconsistent`` is not met.
"""
import argparse
import sys

import numpy as np

from . import histories as ch
from . import io
from .errors import QFriendError
from .linalg import TOL
from .scenario import BUILTINS, DEFAULT_THRESHOLD, build_report, builtin, sample_runs

EXIT_OK, EXIT_INPUT, EXIT_EXPECTATION = 0, 2, 3


def build_parser():
    parser = argparse.ArgumentParser(prog="qfriend", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, builtins):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--builtin", choices=builtins, metavar="NAME")
        src.add_argument("--file", metavar="PATH")
        p.add_argument("--tolerance", type=float, default=TOL)
        p.add_argument("--format", choices=("human", "machine"), default="human")
        p.add_argument("--output", metavar="PATH", help="write the report here instead of stdout")
        exp = p.add_mutually_exclusive_group()
        exp.add_argument("--expect-inconsistent", action="store_true")
        exp.add_argument("--expect-consistent", action="store_true")

    run = sub.add_parser("run", help="evaluate a Wigner's-friend scenario")
    common(run, list(BUILTINS))
    run.add_argument("--lambda", dest="lam", type=_unit_interval, default=None,
                     help="dephasing strength at the scenario's dephasing site (default 0)")
    run.add_argument("--trials", type=int, default=0, help="sampled runs per agent and flag")
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                     help="TV distance above which two agents disagree")

    chk = sub.add_parser("ch-check", help="consistent-histories check of one or more frameworks")
    common(chk, list(ch.CH_BUILTINS))

    sub.add_parser("list", help="list built-in scenarios and frameworks")

    exp = sub.add_parser("export", help="print a built-in as an editable document")
    exp.add_argument("name", choices=list(BUILTINS) + list(ch.CH_BUILTINS))
    return parser


def _unit_interval(text):
    value = float(text)
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError("lambda must lie in [0, 1]")
    return value


def list_builtins():
    lines = ["scenarios (run --builtin NAME):"]
    lines += [f"  {name:<22}{desc}" for name, (_, desc) in BUILTINS.items()]
    lines.append("frameworks (ch-check --builtin NAME):")
    lines += [f"  {name:<22}{desc}" for name, (_, desc) in ch.CH_BUILTINS.items()]
    return "\n".join(lines) + "\n"


def _scenario(args):
    if args.file:
        return io.load_scenario(args.file, args.tolerance, args.lam)
    s = builtin(args.builtin)
    if args.lam:
        s = s.with_dephasing(args.lam)
    return s


def run(args):
    s = _scenario(args)
    report = build_report(s, args.threshold)
    samples = None
    if args.trials > 0:
        samples = {}
        for k, agent in enumerate(s.agent_names):
            samples[agent] = {}
            for j, flag in enumerate(report.distributions[agent]):
                # one independent, reproducible stream per (agent, flag)
                seed = np.random.SeedSequence([args.seed, k, j])
                samples[agent][flag] = sample_runs(s, agent, flag, args.trials, seed,
                                                   report.distributions[agent][flag])
    metadata = {"seed": args.seed, "trials": args.trials, "tolerance": args.tolerance,
                "threshold": args.threshold, "lambda": args.lam or 0.0}
    if args.format == "machine":
        text = io.dumps(io.report_to_document(report, samples, metadata))
    else:
        text = _human_report(s, report, samples, metadata)
    return text, report.inconsistent


def _human_report(s, report, samples, meta):
    out = [f"scenario: {s.name}"]
    if s.description:
        out.append(f"  {s.description}")
    if meta["lambda"]:
        out.append(f"  dephasing lambda = {meta['lambda']:.6g} before {s.dephasing_site}")
    out.append("predictions")
    for agent, flags in report.distributions.items():
        for flag, dist in flags.items():
            probs = "  ".join(f"P({k})={_h(p)}" for k, p in dist.items())
            out.append(f"  {agent:<4} {flag:<16} {probs}")
    if report.comparisons:
        out.append(f"comparisons (TV threshold {report.threshold:g})")
        for c in report.comparisons:
            verdict = "INCONSISTENT" if c.inconsistent else "consistent"
            out.append(f"  {c.agent_a} vs {c.agent_b}  {c.flag:<16} TV={_h(c.tv)}  {verdict}")
    if samples:
        out.append(f"samples (trials={meta['trials']}, seed={meta['seed']})")
        for agent, flags in samples.items():
            for flag, counts in flags.items():
                shown = "  ".join(f"{k}={v}" for k, v in counts.items())
                out.append(f"  {agent:<4} {flag:<16} {shown}")
    out.append(f"verdict: {'INCONSISTENT' if report.inconsistent else 'CONSISTENT'}")
    return "\n".join(out) + "\n"


def _h(p):
    return f"{io.fmt12(p):.6g}"


def ch_check(args):
    if args.file:
        frameworks = io.load_frameworks(args.file, args.tolerance)
        title = args.file
    else:
        frameworks = ch.CH_BUILTINS[args.builtin][0]()
        title = args.builtin
    tol = args.tolerance
    results = []
    for f in frameworks:
        report = ch.is_consistent(f, tol)
        d = ch.decoherence_matrix(f)
        hs = f.histories()
        entry = {
            "name": f.name,
            "times": list(f.times),
            "histories": [f.label(y) for y in hs],
            "consistent": report.consistent,
            "decoherence": [[_c12(z) for z in row] for row in d],
            "offending": [{"histories": [f.label(a), f.label(b)], "magnitude": io.fmt12(m)}
                          for a, b, m in report.offending],
        }
        if report.consistent:
            entry["probabilities"] = {f.label(y): io.fmt12(p)
                                      for y, p in ch.history_probabilities(f, tol).items()}
        results.append(entry)
    conflicts = []
    for i in range(len(frameworks)):
        for j in range(i + 1, len(frameworks)):
            a, b = frameworks[i], frameworks[j]
            for k, (p, q) in enumerate(zip(a.pdis, b.pdis)):
                c = ch.framework_conflict(p, q, tol)
                conflicts.append({
                    "frameworks": [a.name, b.name],
                    "time": a.times[k],
                    "compatible": c.compatible,
                    "witness": list(c.witness_labels) if c.witness_labels else None,
                    "commutator_norm": io.fmt12(c.commutator_norm),
                })
    inconsistent = (not all(r["consistent"] for r in results)
                    or not all(c["compatible"] for c in conflicts))
    doc = {"schema_version": io.SCHEMA_VERSION, "kind": "ch-report", "source": title,
           "tolerance": tol, "frameworks": results, "conflicts": conflicts,
           "verdict": "INCONSISTENT" if inconsistent else "CONSISTENT"}
    if args.format == "machine":
        return io.dumps(doc), inconsistent
    return _human_ch(doc), inconsistent


def _c12(z):
    return [io.fmt12(z.real), io.fmt12(z.imag)]


def _human_ch(doc):
    out = [f"consistent-histories check: {doc['source']} (tol {doc['tolerance']:g})"]
    for r in doc["frameworks"]:
        out.append(f"framework {r['name']}  times {', '.join(r['times'])}")
        out.append("  decoherence functional |D(y, y')|:")
        width = max(len(h) for h in r["histories"])
        for h, row in zip(r["histories"], r["decoherence"]):
            cells = " ".join(f"{abs(complex(*z)):8.4g}" for z in row)
            out.append(f"    {h:<{width}}  {cells}")
        if r["consistent"]:
            out.append("  consistent")
            for h, p in r["probabilities"].items():
                out.append(f"    Pr({h}) = {p:.6g}")
        else:
            out.append(f"  NOT consistent: {len(r['offending'])} off-diagonal term(s) above tol")
            for o in r["offending"]:
                out.append(f"    |D({o['histories'][0]}, {o['histories'][1]})| = {o['magnitude']:.6g}")
    for c in doc["conflicts"]:
        a, b = c["frameworks"]
        if c["compatible"]:
            out.append(f"PDIs of {a} and {b} at {c['time']}: compatible")
        else:
            w1, w2 = c["witness"]
            out.append(f"PDIs of {a} and {b} at {c['time']}: INCOMPATIBLE, "
                       f"||[{w1}, {w2}]|| = {c['commutator_norm']:.6g}")
    out.append(f"verdict: {doc['verdict']}")
    return "\n".join(out) + "\n"


def export(args):
    if args.name in BUILTINS:
        return io.dumps(io.scenario_to_document(builtin(args.name)))
    return io.dumps(io.frameworks_to_document(ch.CH_BUILTINS[args.name][0](), args.name))


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        sys.stdout.write(list_builtins())
        return EXIT_OK
    if args.command == "export":
        sys.stdout.write(export(args))
        return EXIT_OK
    if getattr(args, "trials", 0) < 0:
        print("qfriend: error: --trials must be >= 0", file=sys.stderr)
        return EXIT_INPUT
    try:
        text, inconsistent = run(args) if args.command == "run" else ch_check(args)
    except (QFriendError, OSError) as exc:
        print(f"qfriend: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.expect_inconsistent and not inconsistent:
        print("qfriend: expected an inconsistency, found none", file=sys.stderr)
        return EXIT_EXPECTATION
    if args.expect_consistent and inconsistent:
        print("qfriend: expected consistency, found an inconsistency", file=sys.stderr)
        return EXIT_EXPECTATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
