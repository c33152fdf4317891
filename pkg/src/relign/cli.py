"""Command-line entry point: ``relign align`` and ``relign rules``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .corerel import show_rel
from .egraph import Limits
from .extract import AnnealConfig
from .harness import (
    AlignmentBug,
    PipelineConfig,
    SamplingError,
    SpecError,
    emit_c,
    emit_dafny,
    parse_spec,
    run_pipeline,
)
from .imp import ImpSyntaxError, parse_imp
from .infer import parse_hints
from .rules import corerel_rules


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="relign", description="Align two Imp programs into a product program.")
    ap.add_argument("--rules", choices=["list"], help="print the realignment rule names and exit")
    sub = ap.add_subparsers(dest="command")

    al = sub.add_parser("align", help="align two programs and emit the product")
    al.add_argument("left", type=Path)
    al.add_argument("right", type=Path)
    al.add_argument("--spec", type=Path, help="file with 'pre:' / 'post:' lines (default: true / true)")
    al.add_argument("--emit", choices=["corerel", "c", "dafny"], default="corerel")
    al.add_argument("--output", "-o", type=Path, help="write the emitted program here instead of stdout")
    al.add_argument("--report", type=Path, help="write the JSON run report here")
    al.add_argument("--no-timings", action="store_true", help="omit wall-clock timings from the report")
    al.add_argument("--log-csv", type=Path, help="per-iteration annealing log (k, tau, eta, accepted)")
    al.add_argument("--hints", type=Path, help="extra invariant candidates, '<site>: <predicate>' per line")

    an = al.add_argument_group("search")
    an.add_argument("--mu", type=int, default=500, help="annealing iterations")
    an.add_argument("--seed", type=int, default=0)
    an.add_argument("--states", type=int, default=16, help="sampled initial state pairs")
    an.add_argument("--fuel", type=int, default=10_000)
    an.add_argument("--t0", type=float, default=0.25, help="initial temperature")
    an.add_argument("--unroll-radius", type=int, default=1)
    an.add_argument("--runoff-denominator", choices=["all", "doubled-relational"], default="all")

    sa = al.add_argument_group("saturation")
    sa.add_argument("--max-iterations", type=int, default=30)
    sa.add_argument("--max-nodes", type=int, default=50_000)
    sa.add_argument("--time-budget", type=float, default=10.0, help="seconds")
    sa.add_argument("--max-stutter", type=int, default=3)
    sa.add_argument("--no-unrolling", action="store_true")
    sa.add_argument("--no-if-align", action="store_true")
    sa.add_argument("--disable-rule", action="append", default=[], metavar="NAME",
                    help="rule name or family; repeatable")
    sa.add_argument("--audit", action="store_true", help="check e-graph invariants after every round")

    ru = sub.add_parser("rules", help="list the realignment rules")
    ru.add_argument("--max-stutter", type=int, default=3)
    return ap


def _config(a: argparse.Namespace, hints) -> PipelineConfig:
    return PipelineConfig(
        anneal=AnnealConfig(mu=a.mu, seed=a.seed, initial_temperature=a.t0, unroll_radius=a.unroll_radius,
                            state_count=a.states, fuel=a.fuel, runoff_denominator=a.runoff_denominator),
        limits=Limits(a.max_iterations, a.max_nodes, a.time_budget),
        max_stutter=a.max_stutter,
        enable_unrolling=not a.no_unrolling,
        enable_if_align=not a.no_if_align,
        disabled_rules=tuple(a.disable_rule),
        hints=tuple(hints),
        audit=a.audit,
    )


def _align(a: argparse.Namespace) -> int:
    try:
        p1 = parse_imp(a.left.read_text())
        p2 = parse_imp(a.right.read_text())
        spec = parse_spec(a.spec.read_text()) if a.spec else parse_spec("")
        hints = parse_hints(a.hints.read_text()) if a.hints else []
    except (OSError, ImpSyntaxError, SpecError, ValueError) as e:
        print(f"relign: {e}", file=sys.stderr)
        return 2
    cfg = _config(a, hints)
    if cfg.anneal.mu < 0 or not cfg.anneal.initial_temperature > 0:
        print("relign: --mu must be >= 0 and --t0 positive", file=sys.stderr)
        return 2
    try:
        res = run_pipeline(p1, p2, spec, cfg)
    except (SamplingError, SpecError) as e:
        print(f"relign: {e}", file=sys.stderr)
        return 2
    except AlignmentBug as e:
        print(f"relign: internal error: {e}", file=sys.stderr)
        return 2
    if a.log_csv:
        if res.anneal_result is not None:
            res.anneal_result.write_csv(a.log_csv)
        else:
            a.log_csv.write_text("k,tau,eta,accepted\n")
    if a.emit == "c":
        text = emit_c(res.annotated)
    elif a.emit == "dafny":
        text = emit_dafny(res.annotated)
    else:
        text = show_rel(res.alignment) + "\n"
    if a.output:
        a.output.write_text(text)
    else:
        sys.stdout.write(text)
    if a.report:
        a.report.write_text(res.report.to_json(timings=not a.no_timings) + "\n")
    rep = res.report
    print(f"cost {rep.cost['total']} (initial {rep.initial_cost['total']}); "
          f"post: {rep.postcondition['pass']} pass / {rep.postcondition['fail']} fail / "
          f"{rep.postcondition['inconclusive']} inconclusive", file=sys.stderr)
    return 0 if rep.safe else 1


def _rules(max_stutter: int = 3) -> int:
    for r in corerel_rules(max_stutter):
        print(r.name)
    return 0


def main(argv=None) -> int:
    ap = _parser()
    a = ap.parse_args(argv)
    if a.rules == "list":
        return _rules()
    if a.command == "align":
        return _align(a)
    if a.command == "rules":
        return _rules(a.max_stutter)
    ap.print_usage(sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
