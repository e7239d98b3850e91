"""Query parsing, reachability checking, heuristics and indicator sweeps."""

from fractions import Fraction

import pytest

from maptmc import layers, mc, semantics as sem
from maptmc.errors import (
    BudgetExceeded,
    MissingComponent,
    ParseError,
    ValidationError,
)
from maptmc.mc import LeadsToQuery, NestedQuery, SimpleQuery


def test_parse_query_forms():
    q = mc.parse_query("EF load > 4")
    assert isinstance(q, SimpleQuery) and q.op == "EF"
    assert isinstance(mc.parse_query("EG count <= 1"), SimpleQuery)
    assert mc.parse_query("AF (count >= 2)").op == "AF"
    assert mc.parse_query("AG load <= 4").op == "AG"
    nested_f = mc.parse_query("EF (count >= 1 && EF load > 7)")
    assert isinstance(nested_f, NestedQuery) and nested_f.inner == "EF"
    nested_g = mc.parse_query("EF (count >= 1 && EG load >= 1/2)")
    assert isinstance(nested_g, NestedQuery) and nested_g.inner == "EG"
    leads = mc.parse_query("count >= 1 --> load < 9")
    assert isinstance(leads, LeadsToQuery)


QUERY_PARSE_ERRORS = [
    "load > 4",                      # a bare predicate is not a query
    "EF EG load >= 3",               # nesting needs the conjunction form
    "EG (count >= 1 && EF load > 7)",  # only EF may carry a nested operator
    "EF (count >= 1 && AG load > 7)",
    "AF load > 4 --> count >= 1",    # leads-to takes plain predicates
    "EF",
    "EF load > 4 extra",
    "EF (load > 4",
]


@pytest.mark.parametrize("text", QUERY_PARSE_ERRORS)
def test_parse_query_errors(text):
    with pytest.raises(ParseError):
        mc.parse_query(text)


# verdicts pinned on the accelerated graph bounded at count 2
VERDICTS = [
    ("EF load > 4", True),
    ("EF load > 8", True),
    ("AG load <= 18/5", False),
    ("EG count <= 1", False),
    ("EG load >= 1/2", True),
    ("AF count >= 2", True),
    ("EF (count >= 1 && EG load >= 1/2)", True),
    ("EF (count >= 1 && EF load > 7)", True),
    ("count >= 1 --> load < 9", True),
    ("EF final", True),
    ("AG final", False),
    ("EF (at(task_a, a_end) && clock(task_a) >= 3)", True),
]


@pytest.mark.parametrize("query,expected", VERDICTS, ids=[q for q, _ in VERDICTS])
def test_frozen_verdicts(two_tasks, query, expected):
    result = mc.check(two_tasks, query, x_bound={"count": 2})
    assert result.verdict is expected


@pytest.mark.parametrize("strategy", ["width", "layered-dfs"])
@pytest.mark.parametrize("semantics", ["original", "accelerated"])
def test_verdicts_strategy_and_semantics_independent(two_tasks, strategy, semantics):
    for query, expected in VERDICTS:
        got = mc.check(
            two_tasks, query, x_bound={"count": 2},
            semantics=semantics, strategy=strategy,
        )
        assert got.verdict is expected, query


def test_check_is_deterministic(two_tasks):
    runs = [
        mc.check(two_tasks, "EF load > 4", x_bound={"count": 2})
        for _ in range(2)
    ]
    assert runs[0] == runs[1]
    stats = runs[0].stats
    assert stats.states_expanded > 0
    assert stats.borders_crossed > 0
    assert stats.clusters_formed > 0
    assert stats.peak_frontier > 0


def test_check_argument_validation(two_tasks):
    with pytest.raises(ValueError):
        mc.check(two_tasks, "EF load > 4", strategy="depth")
    h = mc.distance_heuristic(two_tasks, "load", "count")
    with pytest.raises(ValueError):
        mc.check(two_tasks, "EF load > 4", x_bound=1,
                 strategy="width", heuristic=h)
    with pytest.raises(ValidationError):
        mc.check(two_tasks, "EF load > 4", x_bound=1, cuts=())


def test_check_budget(vehicles):
    with pytest.raises(BudgetExceeded):
        mc.check(vehicles, "EF pos_a >= 100",
                 x_bound={"pos_a": 40, "pos_b": 40}, budget=50)


def test_explicit_cuts_and_strong_set(two_tasks):
    cuts = layers.find_cuts(two_tasks)
    for strong_set in (None, (), ("count",)):
        got = mc.check(
            two_tasks, "AG load <= 18/5", x_bound={"count": 2},
            cuts=cuts, strong_set=strong_set,
        )
        assert got.verdict is False


def test_unreachable_query_reports_false(two_tasks):
    got = mc.check(two_tasks, "EF load < 0", x_bound={"count": 1})
    assert got.verdict is False


def test_builtin_heuristic_registry():
    names = set(mc.builtin_heuristics())
    assert names == {"distance", "estimated_travel_time", "time_to_overtake"}


def test_distance_heuristic(vehicles):
    h = mc.distance_heuristic(vehicles, "pos_a", "pos_b")
    assert h.order == "ascending"
    assert h.name == "distance(pos_a,pos_b)"
    s0 = sem.initial_state(vehicles)
    assert h.weight(s0) == Fraction(-2)


def _restate(m, s, **changes):
    names = m.component_names
    values = dict(zip(names, s.valuation.values))
    values.update({k: Fraction(v) for k, v in changes.items()})
    return sem.State(
        s.localities, s.clocks,
        s.valuation.with_values([values[n] for n in names]),
    )


def test_estimated_travel_time_heuristic(vehicles):
    h = mc.estimated_travel_time_heuristic(
        vehicles, "elapsed", "pos_b", "speed_b", 20)
    assert h.order == "ascending"
    s0 = sem.initial_state(vehicles)
    assert h.weight(s0) == Fraction(9)
    stopped = _restate(vehicles, s0, speed_b=0)
    assert h.weight(stopped) == float("inf")


def test_time_to_overtake_heuristic(vehicles):
    h = mc.time_to_overtake_heuristic(
        vehicles, "pos_b", "speed_b", "pos_a", "speed_a")
    assert h.order == "descending"
    s0 = sem.initial_state(vehicles)
    # equal speeds never close the gap
    assert h.weight(s0) == float("inf")
    assert h.weight(_restate(vehicles, s0, speed_a=3)) == Fraction(2)
    assert h.weight(_restate(vehicles, s0, pos_a=2)) == Fraction(0)
    # already ahead counts as never overtaking
    assert h.weight(_restate(vehicles, s0, pos_a=5, speed_a=3)) == float("inf")


def test_heuristic_binding_checks_components(two_tasks):
    with pytest.raises(MissingComponent):
        mc.distance_heuristic(two_tasks, "pos_a", "pos_b")
    with pytest.raises(MissingComponent):
        mc.estimated_travel_time_heuristic(two_tasks, "elapsed", "load", "count", 5)


def test_heuristics_preserve_verdict(vehicles):
    bound = {"pos_a": 8, "pos_b": 8}
    query = "EF (pos_a - pos_b >= 2)"
    baseline = mc.check(vehicles, query, x_bound=bound, strategy="width")
    assert baseline.verdict is True
    for h in (
        mc.distance_heuristic(vehicles, "pos_a", "pos_b"),
        mc.estimated_travel_time_heuristic(
            vehicles, "elapsed", "pos_b", "speed_b", 20),
        mc.time_to_overtake_heuristic(
            vehicles, "pos_b", "speed_b", "pos_a", "speed_a"),
    ):
        got = mc.check(vehicles, query, x_bound=bound, heuristic=h)
        assert got.verdict is baseline.verdict


def test_matched_heuristic_saves_expansions(vehicles):
    bound = {"pos_a": 8, "pos_b": 8}
    query = "EF (pos_a - pos_b >= 2)"
    width = mc.check(vehicles, query, x_bound=bound, strategy="width")
    guided = mc.check(
        vehicles, query, x_bound=bound,
        heuristic=mc.distance_heuristic(vehicles, "pos_a", "pos_b"),
    )
    assert guided.verdict is width.verdict
    assert guided.stats.states_expanded < width.stats.states_expanded


def test_sweep_indicators(two_tasks):
    sw = mc.sweep_indicators(
        two_tasks,
        [("load", "load"), ("twice", "2 * load"), ("big", "load >= 2")],
        time_bound=5,
    )
    assert sw.names == ("load", "twice", "big")
    assert len(sw.versions) == 6
    assert sw.overall("load") == (Fraction(1, 4), Fraction(18, 5))
    assert sw.overall("twice") == (Fraction(1, 2), Fraction(36, 5))
    # boolean indicators sweep their truth value
    assert sw.overall("big") == (Fraction(0), Fraction(1))
    for version in sw.versions:
        assert len(version.bounds) == 3
        for lo, hi in version.bounds:
            assert lo <= hi


def test_sweep_matches_semantics(two_tasks):
    a = mc.sweep_indicators(two_tasks, [("load", "load")], time_bound=5)
    b = mc.sweep_indicators(two_tasks, [("load", "load")], time_bound=5,
                            semantics="original")
    assert a.overall("load") == b.overall("load")


def test_sweep_boolean_max_agrees_with_reachability(two_tasks):
    sw = mc.sweep_indicators(
        two_tasks,
        [("reach2", "load >= 2"), ("reach4", "load >= 4")],
        x_bound={"count": 1},
    )
    assert sw.overall("reach2")[1] == 1
    assert sw.overall("reach4")[1] == 0
    assert mc.check(two_tasks, "EF load >= 2", x_bound={"count": 1}).verdict
    assert not mc.check(two_tasks, "EF load >= 4", x_bound={"count": 1}).verdict


def test_sweep_hull_matches_oracle(two_tasks, raw_two_tasks):
    import oracle

    sw = mc.sweep_indicators(two_tasks, [("load", "load")], time_bound=5)
    dist, _, _ = oracle.build_graph(raw_two_tasks, "accelerated", time_bound=5)
    idx = raw_two_tasks.comp_names.index("load")
    loads = [s[2][idx] for s in dist]
    assert sw.overall("load") == (min(loads), max(loads))


def test_sweep_clock_indicator(two_tasks):
    sw = mc.sweep_indicators(
        two_tasks, [("ca", "clock(task_a)")], time_bound=5)
    assert sw.overall("ca") == (Fraction(0), Fraction(5))
