"""Best-cost-so-far per annealing step for one benchmark pair, as CSV for plotting."""
import argparse
import csv
import sys
from pathlib import Path

from relign.corerel import embed
from relign.egraph import EGraph, Limits, saturate
from relign.extract import AnnealConfig, NeighborContext, anneal, local_selection
from relign.harness import parse_spec, random_states, resolve_spec
from relign.imp import Side, parse_imp, rename, variables
from relign.rules import basic_blockify, corerel_rules
from relign.terms import to_term


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("left", type=Path)
    ap.add_argument("right", type=Path)
    ap.add_argument("--spec", type=Path)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--mu", type=int, default=500)
    ap.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    a = ap.parse_args()
    q1 = rename(parse_imp(a.left.read_text()), Side.LEFT)
    q2 = rename(parse_imp(a.right.read_text()), Side.RIGHT)
    spec = resolve_spec(parse_spec(a.spec.read_text() if a.spec else ""), variables(q1), variables(q2))
    g = EGraph()
    root = g.add(to_term(basic_blockify(embed(q1, q2))))
    saturate(g, list(corerel_rules()), Limits())
    ctx = NeighborContext(g)
    init = local_selection(g, root)
    out = open(a.out, "w", newline="") if a.out else sys.stdout
    w = csv.writer(out)
    w.writerow(["seed", "k", "tau", "eta", "accepted", "best"])
    for seed in range(a.seeds):
        states = random_states(spec, 16, seed, variables(q1), variables(q2))
        res = anneal(g, init, AnnealConfig(mu=a.mu, seed=seed), states, ctx)
        for (k, tau, eta, acc), best in zip(res.log, res.best_costs):
            w.writerow([seed, k, f"{tau:.6f}", float(eta), int(acc), float(best)])
    if a.out:
        out.close()


if __name__ == "__main__":
    main()
