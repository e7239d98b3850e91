"""High-level net translation of a model.

Three places, each holding exactly one structured token: the locality
vector, the clock vector and the shared valuation.  Every model
transition becomes a net transition guarded on its agent's position and
clock window; every agent contributes one reset transition; one global
time transition advances all clocks together (by one tick, or by the
accelerated jump width when the net is built accelerated).  A marking is
a bijective re-packaging of a state, so the lockstep comparison in
state_space_equiv is a strong bisimulation check.
"""

from dataclasses import dataclass, field

from . import semantics as sem
from .errors import BudgetExceeded, MalformedModel, NotEnabled
from .model import VarValuation, eval_transform

PLACES = ("localities", "clocks", "valuation")


@dataclass(frozen=True)
class Marking:
    localities: tuple
    clocks: tuple
    values: tuple


@dataclass
class NetTransition:
    name: str
    kind: str           # task, reset or time
    guard: object       # Marking -> bool
    effect: object      # Marking -> Marking
    description: str


@dataclass
class HlNet:
    model: object
    accelerated: bool
    transitions: dict = field(default_factory=dict)

    @property
    def places(self):
        return PLACES

    def initial_marking(self):
        return encode(sem.initial_state(self.model))


def encode(s):
    return Marking(s.localities, s.clocks, s.valuation.values)


def decode(net, mk):
    m = net.model
    return sem.State(mk.localities, mk.clocks, VarValuation(
        m.component_names, mk.values, m.x_names, m.strong_names))


def _headroom(agent, loc, clock):
    if loc == agent.final_locality:
        return clock < agent.reset_period
    return any(clock < t.upper for t in agent.outgoing(loc))


def translate(m, accelerated=False):
    net = HlNet(model=m, accelerated=accelerated)
    names = {"time"} | {f"reset_{a.name}" for a in m.agents}
    for i, a in enumerate(m.agents):
        for t in a.transitions:
            if t.id in names or t.id in net.transitions:
                raise MalformedModel(f"transition id {t.id!r} collides with a net name")

            def guard(mk, i=i, t=t):
                return mk.localities[i] == t.source and t.lower <= mk.clocks[i] <= t.upper

            def effect(mk, i=i, t=t):
                localities = list(mk.localities)
                localities[i] = t.target
                v = VarValuation(m.component_names, mk.values, m.x_names, m.strong_names)
                v = eval_transform(m.transform(t.transform), v)
                return Marking(tuple(localities), mk.clocks, v.values)

            net.transitions[t.id] = NetTransition(
                t.id, "task", guard, effect,
                f"task {a.name}: {t.source} -> {t.target} in [{t.lower}, {t.upper}] "
                f"applying {t.transform}")
    for i, a in enumerate(m.agents):
        def guard(mk, i=i, a=a):
            return mk.localities[i] == a.final_locality and mk.clocks[i] == a.reset_period

        def effect(mk, i=i, a=a):
            localities = list(mk.localities)
            clocks = list(mk.clocks)
            localities[i] = a.initial_locality
            clocks[i] = 0
            return Marking(tuple(localities), tuple(clocks), mk.values)

        net.transitions[f"reset_{a.name}"] = NetTransition(
            f"reset_{a.name}", "reset", guard, effect,
            f"reset {a.name}: {a.final_locality} -> {a.initial_locality} at {a.reset_period}")

    if accelerated:
        def time_guard(mk):
            return sem.zone_info(m, decode(net, mk)).delta > 0

        def time_effect(mk):
            delta = sem.zone_info(m, decode(net, mk)).delta
            return Marking(mk.localities, tuple(c + delta for c in mk.clocks), mk.values)

        desc = "time: all clocks advance by the zone jump width"
    else:
        def time_guard(mk):
            return all(_headroom(a, loc, c)
                       for a, loc, c in zip(m.agents, mk.localities, mk.clocks))

        def time_effect(mk):
            return Marking(mk.localities, tuple(c + 1 for c in mk.clocks), mk.values)

        desc = "time: all clocks advance by one"
    net.transitions["time"] = NetTransition("time", "time", time_guard, time_effect, desc)
    return net


def enabled_net(net, mk):
    return tuple(name for name, t in net.transitions.items() if t.guard(mk))


def fire(net, mk, t):
    name = t.name if isinstance(t, NetTransition) else t
    try:
        trans = net.transitions[name]
    except KeyError:
        raise NotEnabled(f"no net transition named {name!r}")
    if not trans.guard(mk):
        raise NotEnabled(f"net transition {name!r} is not enabled")
    return trans.effect(mk)


def structure_text(net):
    lines = [f"net accelerated={str(net.accelerated).lower()}"]
    for p in net.places:
        lines.append(f"place {p}")
    for name, t in net.transitions.items():
        lines.append(f"transition {name} [{t.kind}] {t.description}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EquivResult:
    equal: bool
    detail: str
    states_checked: int


def _sem_moves(m, s, semantics):
    moves = set()
    for e, t in sem.successors(m, s, semantics):
        name = "time" if isinstance(e, sem.Delay) else sem.event_label(e)
        moves.add((name, t))
    return moves


def _net_moves(net, mk):
    moves = set()
    for name in enabled_net(net, mk):
        moves.add((name, decode(net, fire(net, mk, name))))
    return moves


def state_space_equiv(m, x_bound=None, semantics="original", *, net=None,
                      budget=sem.DEFAULT_BUDGET):
    """Walk model and net in lockstep, comparing moves state by state.

    Returns the first divergence found, or equal=True after the whole
    bounded space agrees.  A caller-supplied net lets tests check that a
    corrupted net is detected.
    """
    if net is None:
        net = translate(m, accelerated=(semantics == "accelerated"))
    x_bound = sem.normalize_x_bound(m, x_bound)
    init = sem.initial_state(m)
    seen = {init}
    queue = [init]
    head = 0
    while head < len(queue):
        if head >= budget:
            raise BudgetExceeded(f"equivalence walk exceeded {budget} states")
        s = queue[head]
        head += 1
        if sem.x_reached(s, x_bound):
            continue
        sem_moves = _sem_moves(m, s, semantics)
        net_moves = _net_moves(net, encode(s))
        if sem_moves != net_moves:
            only_sem = sorted(name for name, _ in sem_moves - net_moves)
            only_net = sorted(name for name, _ in net_moves - sem_moves)
            detail = (f"divergence at localities={s.localities} clocks={s.clocks}: "
                      f"model-only moves {only_sem}, net-only moves {only_net}")
            return EquivResult(False, detail, head)
        for _, t in sorted(sem_moves, key=lambda mv: (mv[0], mv[1].sort_key())):
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return EquivResult(True, "", head)
