"""Differential soundness fuzz over the realignment rules and the known-bad mutants."""
import argparse
import sys
import time

from relign.rules import check_rule_soundness, corerel_rules, mutant_rules


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--states", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rule", action="append", default=[], help="only these rules or families")
    a = ap.parse_args()
    rules = list(corerel_rules())
    if a.rule:
        keep = set(a.rule)
        rules = [r for r in rules if r.name in keep or r.name.split("[")[0].removesuffix("-rev") in keep]
    failed = 0
    t0 = time.monotonic()
    for r in rules:
        rep = check_rule_soundness(r, a.trials, a.seed, a.states)
        status = "ok" if rep.sound else "UNSOUND"
        print(f"{r.name:<26} {status:<8} checked {rep.checked_states:>6} inconclusive {rep.inconclusive_states}")
        if not rep.sound:
            failed += 1
            print(f"  witness: {rep.witness}")
    for m in mutant_rules():
        rep = check_rule_soundness(m, a.trials, a.seed, a.states, stop_at_first=True)
        print(f"{m.name:<26} {'caught' if not rep.sound else 'MISSED'}")
        failed += rep.sound
    print(f"{len(rules)} rules in {time.monotonic() - t0:.1f}s, {failed} problems")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
