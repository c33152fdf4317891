import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relign.corerel import Pair, StatePair, WhileR, aligned_whiles, embed, relseq
from relign.egraph import EGraph, Limits, saturate
from relign.extract import (
    AnnealConfig,
    NeighborContext,
    Scorer,
    Trace,
    _stutter_sig,
    TraceTag,
    alignment_traces,
    anneal,
    extract_local,
    instrument,
    jump,
    local_selection,
    neighbor,
    run_traced,
    temperature,
    trace_cost,
)
from relign.imp import SKIP, Identifier, OriginTag, Side, While, parse_bool, parse_imp
from relign.rules import corerel_rules
from relign.terms import to_term

T = TraceTag


def sided(text):
    return parse_imp(text, sided=True)


def runoff(text):
    w = sided(text)
    return While(w.cond, w.body, OriginTag.RUNOFF)


def fused_countdown():
    """A lockstep countdown from (3, 2) followed by the two runoff loops."""
    return relseq(
        Pair(sided("i_1 := 3"), sided("i_2 := 2")),
        WhileR(parse_bool("i_1 > 0", True), parse_bool("i_2 > 0", True),
               Pair(sided("i_1 := i_1 - 1"), sided("i_2 := i_2 - 1"))),
        Pair(runoff("while (i_1 > 0) { i_1 := i_1 - 1 }"), SKIP),
        Pair(SKIP, runoff("while (i_2 > 0) { i_2 := i_2 - 1 }")),
    )


def one_sided_countdown():
    return embed(parse_imp("i := 0"), parse_imp("j := 2; while (j > 0) { j := j - 1 }"))


def tags(r):
    (t,) = alignment_traces(r, [StatePair()], 1000)
    return t.tags


# -- traces and cost ---------------------------------------------------------

def test_fused_countdown_trace():
    assert tags(fused_countdown()) == [T.wB_R, T.wH_R, T.wH_R, T.wE_R,
                                       T.wB_O, T.wH_O, T.wE_O, T.wB_O, T.wE_O]


def test_one_sided_countdown_trace():
    assert tags(one_sided_countdown()) == [T.wB, T.wH, T.wH, T.wE]


def test_fused_countdown_cost():
    rep = trace_cost(alignment_traces(fused_countdown(), [StatePair()], 1000))
    assert (rep.r_unmerged, rep.r_runoff, rep.total) == (0, Fraction(1, 3), Fraction(1, 6))


def test_fused_countdown_cost_literal_denominator():
    rep = trace_cost(alignment_traces(fused_countdown(), [StatePair()], 1000), "doubled-relational")
    assert rep.r_runoff == Fraction(1, 4) and rep.total == Fraction(1, 8)


def test_one_sided_countdown_cost():
    rep = trace_cost(alignment_traces(one_sided_countdown(), [StatePair()], 1000))
    assert (rep.r_unmerged, rep.r_runoff, rep.total) == (1, 0, Fraction(1, 2))


def test_unknown_denominator_mode():
    with pytest.raises(ValueError):
        trace_cost([], "other")


def test_empty_traces_cost_nothing():
    assert trace_cost([]).total == 0
    assert trace_cost([Trace([])]).total == 0


def test_loop_free_program_has_empty_trace():
    assert tags(embed(parse_imp("a := 1"), parse_imp("b := 2"))) == []


def test_instrument_numbers_loops_in_preorder():
    c = parse_imp("a := 0; b := 0; c := 0; while (a < 1) { while (b < 1) { b := 1 }; a := 1 }; "
                  "while (c < 1) { c := 1 }")
    tr, out = run_traced(instrument(c), {}, 1000, snapshots=True)
    assert [site for _, site, _ in tr.snapshots] == [0, 0, 1, 1, 1, 0, 2, 2, 2]
    assert tr.tags == [T.wB, T.wH, T.wB, T.wH, T.wE, T.wE, T.wB, T.wH, T.wE]


def test_unbound_read_gives_partial_trace_with_error():
    tr, out = run_traced(instrument(parse_imp("while (a < 1) { a := 1 }")), {}, 1000)
    assert tr.partial and tr.error == "UnboundVariable" and out is None


def test_diverging_run_gives_partial_trace():
    tr, out = run_traced(instrument(parse_imp("while (true) { skip }")), {}, 50)
    assert tr.partial and out is None
    assert tr.tags[0] == T.wB and set(tr.tags[1:]) == {T.wH}


def test_uninstrumentable_loop_rejected():
    with pytest.raises(ValueError):
        instrument(While(parse_bool("true"), SKIP, None))


tag_lists = st.lists(st.lists(st.sampled_from(list(TraceTag)), max_size=12).map(Trace), max_size=6)


@given(tag_lists, st.randoms())
def test_cost_is_permutation_invariant(traces, rnd):
    shuffled = list(traces)
    rnd.shuffle(shuffled)
    assert trace_cost(shuffled) == trace_cost(traces)


@given(tag_lists, st.integers(1, 10))
def test_runoff_iterations_never_lower_cost(traces, k):
    extra = Trace([T.wH_O] * k)
    assert trace_cost(traces + [extra]).total >= trace_cost(traces).total


@given(tag_lists)
def test_cost_bounds(traces):
    rep = trace_cost(traces)
    assert 0 <= rep.r_unmerged <= 1 and 0 <= rep.r_runoff <= 1
    assert rep.total == (rep.r_unmerged + rep.r_runoff) / 2


def test_suboptimal_lockstep_double_has_runoff():
    """Fusing the doubling loops one-to-one leaves the left loop running alone."""
    b1, b2 = parse_bool("z_1 > 0", True), parse_bool("z_2 > 0", True)
    r = relseq(
        Pair(sided("y_1 := 0; z_1 := 2 * x_1"), sided("y_2 := 0; z_2 := x_2")),
        WhileR(b1, b2, Pair(sided("z_1 := z_1 - 1; y_1 := y_1 + x_1"), sided("z_2 := z_2 - 1; y_2 := y_2 + x_2"))),
        Pair(runoff("while (z_1 > 0) { z_1 := z_1 - 1; y_1 := y_1 + x_1 }"),
             runoff("while (z_2 > 0) { z_2 := z_2 - 1; y_2 := y_2 + x_2 }")),
        Pair(SKIP, sided("y_2 := 2 * y_2")),
    )
    sps = [StatePair({Identifier("x", Side.LEFT): v}, {Identifier("x", Side.RIGHT): v}) for v in range(1, 6)]
    rep = trace_cost(alignment_traces(r, sps, 10_000))
    # x runoff iterations against x relational ones on each state
    assert rep.r_unmerged == 0 and rep.r_runoff == Fraction(1, 2)


# -- local extraction --------------------------------------------------------

def test_unsaturated_graph_extracts_the_embedding():
    r = embed(parse_imp("i := 3; while (i > 0) { i := i - 1 }"), parse_imp("j := 1"))
    g = EGraph()
    root = g.add(to_term(r))
    assert extract_local(g, root) == r


def test_saturated_double_extracts_a_fused_loop(double):
    r = extract_local(double.g, double.root)
    assert aligned_whiles(r)


# -- neighbor ----------------------------------------------------------------

def test_singleton_graph_cannot_move():
    g = EGraph()
    root = g.add(to_term(embed(parse_imp("a := 1"), parse_imp("b := 1"))))
    sel = local_selection(g, root)
    out = neighbor(g, sel, random.Random(0))
    assert not out.changed and out.choices == sel.choices


def test_rel_def_graph_neighbor_switches_root():
    g = EGraph()
    r = embed(parse_imp("i := 3"), parse_imp("j := 3"))
    root = g.add(to_term(r))
    saturate(g, [corerel_rules().get("rel-def")], Limits(max_iterations=1))
    sel = local_selection(g, root)
    assert sel.choices[()].op == "pair"
    out = neighbor(g, sel, random.Random(0))
    assert out.changed and out.choices[()].op == "relseq"
    assert g.represents(root, out.term(g))


def changed_path(a, b):
    diff = {p for p in set(a.choices) | set(b.choices) if a.choices.get(p) != b.choices.get(p)}
    at = min(diff, key=len)
    assert all(p[:len(at)] == at for p in diff), "neighbor touched two separate paths"
    return at


def random_walk(fx, steps, seed):
    ctx = NeighborContext(fx.g)
    rng = random.Random(seed)
    sel = local_selection(fx.g, fx.root)
    for _ in range(steps):
        nxt = neighbor(ctx, sel, rng)
        yield sel, nxt
        sel = nxt


def test_neighbor_changes_one_path_and_stays_represented(double):
    g = double.g
    for old, new in random_walk(double, 150, seed=1):
        assert new.changed
        changed_path(old, new)
        new.validate(g)
        assert g.represents(double.root, new.term(g))


def test_neighbor_respects_stutter_radius(double):
    g = double.g
    seen = set()
    for old, new in random_walk(double, 300, seed=2):
        at = changed_path(old, new)
        a, b = _stutter_sig(g, old.choices[at]), _stutter_sig(g, new.choices[at])
        if a and b:
            seen.add((a, b))
            assert abs(a[0] - b[0]) + abs(a[1] - b[1]) <= 1
    assert any(a == (1, 1) for a, _ in seen)
    assert ((1, 1), (3, 1)) not in seen


# -- annealing ---------------------------------------------------------------

def test_temperature_schedule():
    assert temperature(0, 100, 0.25) == 0.25
    assert temperature(50, 100, 0.25) == pytest.approx(0.125)
    assert temperature(0, 0, 0.25) == 0.0


def test_jump_never_at_zero_temperature():
    rng = random.Random(0)
    assert not any(jump(0.0, Fraction(0), Fraction(1, 2), rng) for _ in range(100))


def test_jump_probability_tracks_metropolis():
    rng = random.Random(0)
    rate = sum(jump(0.25, Fraction(0), Fraction(1, 4), rng) for _ in range(20_000)) / 20_000
    assert rate == pytest.approx(0.3679, abs=0.02)


def test_config_rejects_bad_values():
    with pytest.raises(ValueError):
        AnnealConfig(mu=-1)
    with pytest.raises(ValueError):
        AnnealConfig(initial_temperature=0)


def test_zero_iterations_returns_init(double):
    init = local_selection(double.g, double.root)
    res = anneal(double.g, init, AnnealConfig(mu=0), double.states)
    assert res.selection is init and res.best_costs == []


def test_zero_cost_init_exits_early():
    g = EGraph()
    root = g.add(to_term(embed(parse_imp("a := 1"), parse_imp("b := 1"))))
    init = local_selection(g, root)
    res = anneal(g, init, AnnealConfig(mu=100), [StatePair()])
    assert res.cost.total == 0 and res.log == [] and res.selection is init


def test_best_costs_non_increasing_and_seeded(double):
    init = local_selection(double.g, double.root)
    naive = Scorer(double.g, double.states, 10_000)(init).total
    cfg = AnnealConfig(mu=60, seed=4)
    a = anneal(double.g, init, cfg, double.states)
    b = anneal(double.g, init, cfg, double.states)
    assert a.best_costs == sorted(a.best_costs, reverse=True)
    assert all(c <= naive for c in a.best_costs)
    assert a.log == b.log and a.alignment == b.alignment
    assert a.cost == Scorer(double.g, double.states, 10_000)(a.selection)


def test_log_csv(tmp_path, double):
    init = local_selection(double.g, double.root)
    res = anneal(double.g, init, AnnealConfig(mu=5, seed=1), double.states)
    path = tmp_path / "log.csv"
    res.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,tau,eta,accepted" and len(lines) == 1 + len(res.log)
