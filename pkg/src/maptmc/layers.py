"""Layered exploration support: coherent cuts, borders between cuts and
clusters of border states.

A cut fixes one global time offset t inside the hyperperiod and records,
per agent, which locality and clock value every run shows at that time
distance.  Offsets that fall strictly inside some agent's virtual event
interval are ambiguous and rejected; the rest give configurations that
every run must pass through, which makes borders between consecutive
cuts well defined in both semantics.
"""

from collections import deque
from dataclasses import dataclass
from math import inf

from . import semantics as sem
from .errors import BudgetExceeded, MalformedState, ValidationError
from .model import lcm_periods

PRE = "pre"
POST = "post"


@dataclass(frozen=True)
class MandatoryChain:
    """Localities an agent visits on every cycle, with the virtual window
    [earliest start, latest end] of each hop between consecutive ones."""

    agent: str
    localities: tuple
    intervals: tuple

    def __len__(self):
        return len(self.localities)


@dataclass(frozen=True)
class CutSpec:
    t: int
    localities: tuple
    clocks: tuple

    def config(self):
        return (self.localities, self.clocks)


def _topo_order(agent):
    indeg = {l: len(agent.incoming(l)) for l in agent.localities}
    order = []
    ready = [l for l in agent.localities if indeg[l] == 0]
    while ready:
        loc = ready.pop(0)
        order.append(loc)
        for t in agent.outgoing(loc):
            indeg[t.target] -= 1
            if indeg[t.target] == 0:
                ready.append(t.target)
    return order


def mandatory_chain(agent):
    """Localities lying on every source-to-sink path, in path order."""
    order = _topo_order(agent)
    start = agent.initial_locality
    goal = agent.final_locality
    into = {l: 0 for l in agent.localities}
    into[start] = 1
    for loc in order:
        for t in agent.outgoing(loc):
            into[t.target] += into[loc]
    outof = {l: 0 for l in agent.localities}
    outof[goal] = 1
    for loc in reversed(order):
        for t in agent.outgoing(loc):
            outof[loc] += outof[t.target]
    total = into[goal]
    chain = [loc for loc in order if into[loc] * outof[loc] == total]
    intervals = []
    for here, there in zip(chain, chain[1:]):
        lo = min(t.lower for t in agent.outgoing(here))
        hi = max(t.upper for t in agent.incoming(there))
        intervals.append((lo, hi))
    return MandatoryChain(agent.name, tuple(chain), tuple(intervals))


def _forbidden(t, agent, chain, exclude_endpoints):
    """Does offset t fall inside some shifted virtual event window?

    Only the largest window shift starting at or before t can contain it,
    so a single k needs checking per window (floor for closed windows,
    its strict variant for open ones).
    """
    shift = agent.init_clock
    period = agent.reset_period
    for lo, hi in chain.intervals:
        if exclude_endpoints:
            k = (t + shift - lo) // period
            if k >= 0 and t <= hi + k * period - shift:
                return True
        else:
            k = -((lo - t - shift) // period) - 1
            if k >= 0 and t < hi + k * period - shift:
                return True
    return False


def _locate(t, agent, chain, choice):
    """Locality and clock shown by this agent at time distance t."""
    period = agent.reset_period
    r = (t + agent.init_clock) % period
    if r == 0:
        if choice == PRE:
            return chain.localities[-1], period
        clock = 0
    else:
        clock = r
    pos = 0
    for j, (lo, hi) in enumerate(chain.intervals):
        crossed = clock > hi or (
            clock == hi and not (lo == hi and choice == PRE))
        if crossed:
            pos = j + 1
    return chain.localities[pos], clock


def find_cuts(m, exclude_endpoints=False, endpoint_choice=None):
    """All coherent cut offsets in one hyperperiod, as CutSpec tuples.

    endpoint_choice maps (t, agent name) to 'pre' or 'post' and only
    matters at reset instants and zero-length event windows; the default
    everywhere is 'post' (the state after the event).
    """
    endpoint_choice = endpoint_choice or {}
    chains = {a.name: mandatory_chain(a) for a in m.agents}
    horizon = lcm_periods(m)
    cuts = []
    for t in range(1, horizon + 1):
        if any(_forbidden(t, a, chains[a.name], exclude_endpoints) for a in m.agents):
            continue
        localities = []
        clocks = []
        for a in m.agents:
            choice = endpoint_choice.get((t, a.name), POST)
            loc, clock = _locate(t, a, chains[a.name], choice)
            localities.append(loc)
            clocks.append(clock)
        cuts.append(CutSpec(t, tuple(localities), tuple(clocks)))
    return tuple(cuts)


def best_cut(m, exclude_endpoints=False):
    """The coherent cut farthest from every event window; used when the
    caller supplies no cuts of their own."""
    cuts = find_cuts(m, exclude_endpoints)
    if not cuts:
        raise ValidationError("no coherent cut offset exists for this model")
    chains = {a.name: mandatory_chain(a) for a in m.agents}
    best = None
    best_gap = -1
    for cut in cuts:
        gap = inf
        for a in m.agents:
            shift = a.init_clock
            period = a.reset_period
            for lo, hi in chains[a.name].intervals:
                base = (cut.t + shift - lo) // period
                for k in (base - 1, base, base + 1):
                    if k < 0:
                        continue
                    d = max(0, lo + k * period - shift - cut.t,
                            cut.t - (hi + k * period - shift))
                    gap = min(gap, d)
        if gap > best_gap:
            best = cut
            best_gap = gap
    return best


# cut lists as text: "t; locality,locality; clock,clock" per line


def format_cuts(cuts):
    lines = []
    for cut in cuts:
        lines.append(f"{cut.t}; {','.join(cut.localities)}; "
                     f"{','.join(str(c) for c in cut.clocks)}")
    return "\n".join(lines) + "\n"


def parse_cuts(text):
    from .errors import ParseError
    cuts = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(";")]
        if len(parts) != 3:
            raise ParseError("expected 't; localities; clocks'", lineno)
        try:
            t = int(parts[0])
        except ValueError:
            raise ParseError(f"bad offset {parts[0]!r}", lineno)
        localities = tuple(x.strip() for x in parts[1].split(","))
        try:
            clocks = tuple(int(x) for x in parts[2].split(","))
        except ValueError:
            raise ParseError(f"bad clock vector {parts[2]!r}", lineno)
        if len(localities) != len(clocks):
            raise ParseError("locality and clock vectors differ in length", lineno)
        cuts.append(CutSpec(t, localities, clocks))
    return tuple(cuts)


def load_cuts(path):
    with open(path, "r", encoding="utf-8") as fp:
        return parse_cuts(fp.read())


def validate_cuts(m, cuts):
    for cut in cuts:
        if len(cut.localities) != len(m.agents):
            raise MalformedState(f"cut at {cut.t}: wrong number of agents")
        for a, loc, c in zip(m.agents, cut.localities, cut.clocks):
            if loc not in a.localities:
                raise MalformedState(
                    f"cut at {cut.t}: {loc!r} is not a locality of {a.name!r}")
            if not 0 <= c <= a.reset_period:
                raise MalformedState(
                    f"cut at {cut.t}: clock {c} outside [0, {a.reset_period}]")
            if c == a.reset_period and loc != a.final_locality:
                raise MalformedState(
                    f"cut at {cut.t}: clock at the reset period away from "
                    f"the final locality")


class CutMatcher:
    """Prepared form of a cut list for repeated border tests."""

    def __init__(self, m, cuts, semantics):
        self.m = m
        self.semantics = semantics
        self.configs = {cut.config() for cut in cuts}
        self.by_loc = {}
        for cut in cuts:
            self.by_loc.setdefault(cut.localities, []).append(cut.clocks)

    def on_cut(self, s):
        return s.config() in self.configs

    def crosses(self, pre_s, s, pre_is_seed=False):
        """Is s the first state past (or at) a cut when coming from pre_s?

        Original semantics: s simply shows a cut configuration.
        Accelerated: either s shows one and a fire or reset happens there,
        or the jump from pre_s started on or stepped over the cut clocks.
        Walks set pre_is_seed on edges leaving their seeds: a seed sitting
        on a cut configuration is the border just crossed, not the next
        one, so the jump-from-cut case must not retrigger there.
        """
        if self.semantics == "original":
            return self.on_cut(s)
        if self.on_cut(s):
            if any(not isinstance(e, sem.Delay)
                   for e in sem.enabled_accelerated(self.m, s)):
                return True
        if pre_s is None:
            return False
        grew = pre_s.localities == s.localities and \
            all(p < c for p, c in zip(pre_s.clocks, s.clocks))
        if not grew:
            return False
        if not pre_is_seed and self.on_cut(pre_s) and \
                len(sem.enabled_accelerated(self.m, pre_s)) == 1:
            return True
        for clocks in self.by_loc.get(s.localities, ()):
            if all(p < k <= c for p, k, c in zip(pre_s.clocks, clocks, s.clocks)):
                return True
        return False


def is_cut(m, cuts, pre_s, s, semantics):
    return CutMatcher(m, cuts, semantics).crosses(pre_s, s)


def next_border(m, cuts, s, semantics, visitor=None, *, budget=sem.DEFAULT_BUDGET,
                diagnostics=None):
    """Width-first walk from s up to the next border; returns the border.

    The seed itself is not border-tested, only states discovered from it.
    Every expanded state is passed to visitor.  diagnostics, if given,
    counts discovered states that sit on a cut configuration without
    matching any border case ('unmatched_at_cut').
    """
    return _walk(m, cuts, [s], semantics, visitor, budget, diagnostics)


def _walk(m, cuts, seeds, semantics, visitor, budget, diagnostics):
    matcher = CutMatcher(m, cuts, semantics)
    queue = deque(seeds)
    seed_set = frozenset(seeds)
    seen = set(seeds)
    border = set()
    processed = 0
    while queue:
        u = queue.popleft()
        processed += 1
        if processed > budget:
            raise BudgetExceeded(f"border walk exceeded {budget} states")
        if visitor is not None:
            visitor(u)
        for _, v in sem.successors(m, u, semantics):
            if matcher.crosses(u, v, u in seed_set):
                border.add(v)
                continue
            if diagnostics is not None and matcher.on_cut(v):
                diagnostics["unmatched_at_cut"] = \
                    diagnostics.get("unmatched_at_cut", 0) + 1
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return frozenset(border)


def clustered_next_border(m, cuts, cluster, semantics, visitor=None, *,
                          strong_set=None, budget=sem.DEFAULT_BUDGET,
                          diagnostics=None):
    """Walk from a whole cluster at once and split the border into clusters
    of equal strong-component valuations.

    With an empty strong set everything lands in one cluster, which makes
    the traversal collapse to the plain width-first one.
    """
    strong = frozenset(m.strong_names if strong_set is None else strong_set)
    seeds = sorted(cluster, key=lambda st: st.sort_key())
    border = _walk(m, cuts, seeds, semantics, visitor, budget, diagnostics)
    groups = {}
    for st in border:
        groups.setdefault(st.valuation.strong_part(strong), set()).add(st)
    return tuple(frozenset(groups[key]) for key in sorted(groups))
