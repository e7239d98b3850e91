"""Execution semantics: original one-tick dynamics and the accelerated
variant that jumps to the end of the first maximal action zone.

States are (localities, clocks, valuation).  Three event kinds exist:
Fire (a transition moves one agent and rewrites the shared valuation),
Reset (an agent at its final locality with clock exactly at the reset
period returns to the start), and Delay (all clocks advance together;
by one tick in the original semantics, by the computed zone shift in the
accelerated one).
"""

from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetExceeded, MalformedState, NotEnabled, ValidationError
from .model import eval_transform

DEFAULT_BUDGET = 100_000

SEMANTICS = ("original", "accelerated")


@dataclass(frozen=True)
class State:
    localities: tuple
    clocks: tuple
    valuation: object

    def sort_key(self):
        return (self.localities, self.clocks, self.valuation.values)

    def config(self):
        return (self.localities, self.clocks)


@dataclass(frozen=True)
class Fire:
    transition: str


@dataclass(frozen=True)
class Reset:
    agent: str


@dataclass(frozen=True)
class Delay:
    amount: int


def event_label(e):
    if isinstance(e, Fire):
        return e.transition
    if isinstance(e, Reset):
        return f"reset_{e.agent}"
    return f"+{e.amount}"


def initial_state(m):
    return State(
        tuple(a.init_locality for a in m.agents),
        tuple(a.init_clock for a in m.agents),
        m.initial_valuation(),
    )


def check_state(m, s):
    if len(s.localities) != len(m.agents) or len(s.clocks) != len(m.agents):
        raise MalformedState("state arity does not match the model")
    for a, loc, c in zip(m.agents, s.localities, s.clocks):
        if loc not in a.localities:
            raise MalformedState(f"{loc!r} is not a locality of agent {a.name!r}")
        if c < 0:
            raise MalformedState(f"negative clock for agent {a.name!r}")
    if s.valuation.names != m.component_names:
        raise MalformedState("valuation components do not match the model")


def _delay_allowed(m, s):
    """Original time rule: every agent can still use this tick."""
    for a, loc, c in zip(m.agents, s.localities, s.clocks):
        if loc == a.final_locality:
            if c < a.reset_period:
                continue
            return False
        if any(c < t.upper for t in a.outgoing(loc)):
            continue
        return False
    return True


def _fires(m, s):
    events = []
    for a, loc, c in zip(m.agents, s.localities, s.clocks):
        for t in a.outgoing(loc):
            if t.lower <= c <= t.upper:
                events.append(Fire(t.id))
    return events


def _resets(m, s):
    events = []
    for a, loc, c in zip(m.agents, s.localities, s.clocks):
        if loc == a.final_locality and c == a.reset_period:
            events.append(Reset(a.name))
    return events


def enabled_original(m, s):
    check_state(m, s)
    events = _fires(m, s) + _resets(m, s)
    if _delay_allowed(m, s):
        events.append(Delay(1))
    return tuple(events)


@dataclass(frozen=True)
class ZoneInfo:
    b_per_agent: tuple
    b: int
    a: int
    delta: int


def zone_info(m, s):
    """Horizon b, next-activation distance a and jump width delta.

    b caps the jump so no agent runs past its last exit or its reset; a is
    the distance to the earliest newly-enabled fire or reset within b;
    delta is the earliest closing bound at or after a (the end of the
    first maximal action zone).  a == 0 means nothing new opens within the
    horizon and delta is 0 as well.
    """
    check_state(m, s)
    b_per_agent = []
    for a_, loc, c in zip(m.agents, s.localities, s.clocks):
        if loc == a_.final_locality:
            b_per_agent.append(a_.reset_period - c)
        else:
            b_per_agent.append(max(t.upper - c for t in a_.outgoing(loc)))
    horizon = min(b_per_agent)

    opens = []
    for a_, loc, c in zip(m.agents, s.localities, s.clocks):
        if loc == a_.final_locality:
            d = a_.reset_period - c
            if c < a_.reset_period and d <= horizon:
                opens.append(d)
        else:
            for t in a_.outgoing(loc):
                d = t.lower - c
                if c < t.lower and d <= horizon:
                    opens.append(d)
    start = min(opens) if opens else 0

    delta = 0
    if start > 0:
        closes = []
        for a_, loc, c in zip(m.agents, s.localities, s.clocks):
            if loc == a_.final_locality:
                d = a_.reset_period - c
                if d <= horizon:
                    closes.append(d)
            else:
                for t in a_.outgoing(loc):
                    d = t.upper - c
                    if start <= d <= horizon:
                        closes.append(d)
        delta = min(closes)
    return ZoneInfo(tuple(b_per_agent), horizon, start, delta)


def enabled_accelerated(m, s):
    check_state(m, s)
    events = _fires(m, s) + _resets(m, s)
    delta = zone_info(m, s).delta
    if delta > 0:
        events.append(Delay(delta))
    return tuple(events)


def enabled(m, s, semantics):
    if semantics == "original":
        return enabled_original(m, s)
    if semantics == "accelerated":
        return enabled_accelerated(m, s)
    raise ValueError(f"unknown semantics {semantics!r}")


def step(m, s, e):
    """Execute one event; raises NotEnabled if it cannot happen in s."""
    check_state(m, s)
    if isinstance(e, Fire):
        agent, t = m.transition(e.transition)
        i = m.agent_index(agent.name)
        if s.localities[i] != t.source:
            raise NotEnabled(f"{t.id!r}: agent {agent.name!r} is not at {t.source!r}")
        if not t.lower <= s.clocks[i] <= t.upper:
            raise NotEnabled(f"{t.id!r}: clock {s.clocks[i]} outside [{t.lower}, {t.upper}]")
        localities = list(s.localities)
        localities[i] = t.target
        valuation = eval_transform(m.transform(t.transform), s.valuation)
        return State(tuple(localities), s.clocks, valuation)
    if isinstance(e, Reset):
        a = m.agent(e.agent)
        i = m.agent_index(a.name)
        if s.localities[i] != a.final_locality:
            raise NotEnabled(f"agent {a.name!r} is not at its final locality")
        if s.clocks[i] != a.reset_period:
            raise NotEnabled(f"agent {a.name!r}: clock {s.clocks[i]} != {a.reset_period}")
        localities = list(s.localities)
        clocks = list(s.clocks)
        localities[i] = a.initial_locality
        clocks[i] = 0
        return State(tuple(localities), tuple(clocks), s.valuation)
    if isinstance(e, Delay):
        if e.amount < 1:
            raise NotEnabled("delay must be positive")
        ok = (e.amount == 1 and _delay_allowed(m, s)) or \
            (e.amount == zone_info(m, s).delta)
        if not ok:
            raise NotEnabled(f"delay of {e.amount} is not enabled here")
        clocks = tuple(c + e.amount for c in s.clocks)
        return State(s.localities, clocks, s.valuation)
    raise NotEnabled(f"unknown event {e!r}")


def successors(m, s, semantics):
    return tuple((e, step(m, s, e)) for e in enabled(m, s, semantics))


def project_word(trace):
    """Drop delays; what remains is the abstracted word."""
    return tuple(e for e in trace if not isinstance(e, Delay))


def normalize_x_bound(m, x_bound):
    """None, a single rational for every X component, or a per-name mapping."""
    if x_bound is None:
        return None
    if isinstance(x_bound, (int, Fraction, str)):
        bound = Fraction(x_bound)
        names = sorted(m.x_names)
        if not names:
            raise ValidationError("model has no X components to bound")
        return {n: bound for n in names}
    out = {}
    for name, raw in x_bound.items():
        m.component(name)
        out[name] = Fraction(raw)
    return out


def x_reached(s, x_bound):
    """True when every bounded component has reached its bound."""
    if not x_bound:
        return False
    return all(s.valuation.get(n) >= b for n, b in x_bound.items())


def is_final(m, s, semantics, x_bound):
    return x_reached(s, x_bound) or not enabled(m, s, semantics)


def _bounded_successors(m, s, semantics, x_bound, time_bound, elapsed):
    if x_reached(s, x_bound):
        return ()
    out = successors(m, s, semantics)
    if time_bound is not None:
        out = tuple((e, t) for e, t in out
                    if not isinstance(e, Delay) or elapsed + e.amount <= time_bound)
    return out


@dataclass(frozen=True)
class Exploration:
    states: dict          # state -> time distance from the initial state
    edges: tuple          # (state, event, state)
    finals: frozenset     # states with no successor within the bounds


def explore(m, semantics, x_bound=None, *, time_bound=None, budget=DEFAULT_BUDGET):
    """Width-first reachable graph within the given bounds.

    Every reachable state of a valid model sits at a single time distance
    from the start; a state found at two distances means the model is not
    acyclic and exploration stops with ValidationError.
    """
    x_bound = normalize_x_bound(m, x_bound)
    init = initial_state(m)
    dist = {init: 0}
    edges = []
    finals = set()
    queue = [init]
    head = 0
    while head < len(queue):
        if head >= budget:
            raise BudgetExceeded(f"exploration exceeded {budget} states")
        s = queue[head]
        head += 1
        elapsed = dist[s]
        succ = _bounded_successors(m, s, semantics, x_bound, time_bound, elapsed)
        if not succ:
            finals.add(s)
            continue
        for e, t in succ:
            edges.append((s, e, t))
            t_elapsed = elapsed + (e.amount if isinstance(e, Delay) else 0)
            if t in dist:
                if dist[t] != t_elapsed:
                    raise ValidationError(
                        "a state was reached at two distinct time distances "
                        f"({dist[t]} and {t_elapsed}); the model is not acyclic")
            else:
                dist[t] = t_elapsed
                queue.append(t)
    return Exploration(dist, tuple(edges), frozenset(finals))


def abstract_reachable(m, semantics, x_bound=None, *, time_bound=None,
                       budget=DEFAULT_BUDGET):
    """Words of all maximal runs, with the label each word determines.

    The result maps each projected word (tuple of Fire/Reset events) to
    its (localities, component values) label.  A run is maximal when no
    event remains within the bounds.  Delays never extend the word, so
    the two semantics can be compared through the returned mapping.
    """
    x_bound = normalize_x_bound(m, x_bound)
    init = initial_state(m)
    out = {}
    seen = {(init, ())}
    queue = [(init, (), 0)]
    head = 0
    while head < len(queue):
        if head >= budget:
            raise BudgetExceeded(f"abstract exploration exceeded {budget} entries")
        s, word, elapsed = queue[head]
        head += 1
        succ = _bounded_successors(m, s, semantics, x_bound, time_bound, elapsed)
        if not succ:
            label = (s.localities, s.valuation.values)
            if word in out and out[word] != label:
                raise ValidationError(
                    f"word {[event_label(e) for e in word]} determined two labels")
            out[word] = label
            continue
        for e, t in succ:
            if isinstance(e, Delay):
                entry = (t, word, elapsed + e.amount)
            else:
                entry = (t, word + (e,), elapsed)
            if (entry[0], entry[1]) not in seen:
                seen.add((entry[0], entry[1]))
                queue.append(entry)
    return out
