"""Vector addition systems with balloons: identity-carrying runs, the two
run surgeries, witness checking for progressive runs, and the reductions
between balloon machines, scheduled thread systems, and plain VASS.

A balloon is a token that carries an inner multiset of contents over its
own place set.  Inflating fixes the contents from a semilinear set,
deflating transfers one inner place to an outer place, bursting discards
the remainder.  Infinite progressive behavior is certified by a finite
witness: a pumpable cycle between two configurations that hold only empty
balloons.  The machinery here finds or refutes such cycles through a
chain of structure-preserving transforms (typing, base removal, burst
closure), a five-stage composed machine per candidate obligation pair,
and one plain-VASS reachability query per candidate.
"""

from collections import deque, namedtuple
from itertools import combinations, product

from .foundations import (
    EMPTY,
    BudgetExceeded,
    IntVector,
    LinearSet,
    Multiset,
    SemilinearSet,
    balloon_bound_N,
    lp_feasible,
    sl_member,
    symkey,
)
from .vass import VassConfig, VassModel, _linear_members, expand_extended, reach_oracle
from .vass import decide_nontermination as vass_decide_nontermination
from .automata import downward_closure_nfa, pda_emptiness
from .dcps import (
    ThreadType,
    _sym_from_json,
    _sym_to_json,
    _thread_pda,
    letter_kind,
    type_spawn_pda,
    type_spawn_semilinear,
)


VassbEdge = namedtuple("VassbEdge", ["src", "op", "dst"])
VassbConfig = namedtuple("VassbConfig", ["state", "marking", "balloons"])

ZEROV = IntVector()


class VassbModel:
    """VASS with balloons.

    Edge ops are tagged tuples: ("delta", IntVector over places),
    ("inflate", sigma, SemilinearSet over balloon places),
    ("deflate", sigma, sigma2, balloon_place, place), ("burst", sigma).
    """

    def __init__(self, states, places, balloon_states, balloon_places, edges):
        self.states = list(states)
        self.places = list(places)
        self.balloon_states = list(balloon_states)
        self.balloon_places = list(balloon_places)
        self.edges = [VassbEdge(*e) for e in edges]
        sset, pset = set(self.states), set(self.places)
        bset, fset = set(self.balloon_states), set(self.balloon_places)
        for e in self.edges:
            assert e.src in sset and e.dst in sset, e
            kind = e.op[0]
            if kind == "delta":
                assert set(e.op[1].support) <= pset, e
            elif kind == "inflate":
                assert e.op[1] in bset, e
                assert e.op[2].symbols() <= fset, e
            elif kind == "deflate":
                assert e.op[1] in bset and e.op[2] in bset, e
                assert e.op[3] in fset and e.op[4] in pset, e
            elif kind == "burst":
                assert e.op[1] in bset, e
            else:
                raise ValueError(f"unknown op kind {kind!r}")

    def to_json(self):
        def mjson(m):
            return {symkey(s): c for s, c in m.sorted_items()}

        def op_json(op):
            if op[0] == "delta":
                return {"kind": "delta", "delta": op[1].to_json()}
            if op[0] == "inflate":
                return {
                    "kind": "inflate",
                    "state": _sym_to_json(op[1]),
                    "set": {
                        "components": [
                            {"base": mjson(c.base), "periods": [mjson(p) for p in c.periods]}
                            for c in op[2].components
                        ]
                    },
                }
            if op[0] == "deflate":
                return {
                    "kind": "deflate",
                    "from_state": _sym_to_json(op[1]),
                    "to_state": _sym_to_json(op[2]),
                    "content_place": _sym_to_json(op[3]),
                    "place": _sym_to_json(op[4]),
                }
            return {"kind": "burst", "state": _sym_to_json(op[1])}

        return {
            "states": [_sym_to_json(s) for s in self.states],
            "places": [_sym_to_json(p) for p in self.places],
            "balloon_states": [_sym_to_json(s) for s in self.balloon_states],
            "balloon_places": [_sym_to_json(p) for p in self.balloon_places],
            "edges": [
                {"from": _sym_to_json(e.src), "to": _sym_to_json(e.dst), "op": op_json(e.op)}
                for e in self.edges
            ],
        }

    @classmethod
    def from_json(cls, data):
        states = [_sym_from_json(s) for s in data["states"]]
        places = [_sym_from_json(p) for p in data["places"]]
        bstates = [_sym_from_json(s) for s in data["balloon_states"]]
        bplaces = [_sym_from_json(p) for p in data["balloon_places"]]
        pkey = {symkey(p): p for p in places}
        fkey = {symkey(p): p for p in bplaces}

        def vec(d):
            return IntVector({pkey[k]: c for k, c in d.items()})

        def bmset(d):
            return Multiset({fkey[k]: c for k, c in d.items()})

        def op_of(d):
            if d["kind"] == "delta":
                return ("delta", vec(d["delta"]))
            if d["kind"] == "inflate":
                comps = [
                    LinearSet(bmset(c.get("base", {})), [bmset(p) for p in c.get("periods", [])])
                    for c in d["set"]["components"]
                ]
                return ("inflate", _sym_from_json(d["state"]), SemilinearSet(comps))
            if d["kind"] == "deflate":
                return (
                    "deflate",
                    _sym_from_json(d["from_state"]),
                    _sym_from_json(d["to_state"]),
                    _sym_from_json(d["content_place"]),
                    _sym_from_json(d["place"]),
                )
            return ("burst", _sym_from_json(d["state"]))

        edges = [
            (_sym_from_json(e["from"]), op_of(e["op"]), _sym_from_json(e["to"]))
            for e in data["edges"]
        ]
        return cls(states, places, bstates, bplaces, edges)


def is_semiconfig(c):
    return not c.balloons


def balloon_norm(c):
    """Largest total content size over the balloons of c (0 if none)."""
    return max((k.size for _s, k in c.balloons), default=0)


def pseudoconfig(c):
    """Forget balloon contents: (state, marking, balloon-state counts)."""
    counts = Multiset([(s, n) for (s, _k), n in c.balloons.items()])
    return (c.state, c.marking, counts)


def pseudo_le(a, b):
    """Componentwise order on pseudoconfigurations (equal states)."""
    return a[0] == b[0] and a[1] <= b[1] and a[2] <= b[2]


def vassb_step(model, c, sampling_bound=None):
    """Successors of c as (edge index, choice, successor) triples.

    Inflate successors are only enumerated when a sampling bound is given
    (members with total token count up to the bound); deflate and burst
    pick every balloon that yields a distinct successor.  The choice entry
    records the inflated contents or the (state, contents) acted on.
    """
    out = []
    seen = set()

    def emit(ei, choice, succ):
        key = (ei, succ)
        if key not in seen:
            seen.add(key)
            out.append((ei, choice, succ))

    for ei, e in enumerate(model.edges):
        if e.src != c.state:
            continue
        kind = e.op[0]
        if kind == "delta":
            m = e.op[1].apply(c.marking)
            if m is not None:
                emit(ei, None, VassbConfig(e.dst, m, c.balloons))
        elif kind == "inflate":
            if sampling_bound is None:
                continue
            for comp in e.op[2].components:
                for member in _linear_members(comp, sampling_bound):
                    b = c.balloons + Multiset.of((e.op[1], member))
                    emit(ei, member, VassbConfig(e.dst, c.marking, b))
        elif kind == "deflate":
            _k, s1, s2, bp, p = e.op
            for (sig, kont), _n in c.balloons.items():
                if sig != s1:
                    continue
                moved = kont[bp]
                k2 = kont - Multiset({bp: moved}) if moved else kont
                b = c.balloons - Multiset.of((sig, kont)) + Multiset.of((s2, k2))
                m = c.marking + Multiset({p: moved}) if moved else c.marking
                emit(ei, (sig, kont), VassbConfig(e.dst, m, b))
        else:
            for (sig, kont), _n in c.balloons.items():
                if sig != e.op[1]:
                    continue
                b = c.balloons - Multiset.of((sig, kont))
                emit(ei, (sig, kont), VassbConfig(e.dst, c.marking, b))
    return out


# ---------------------------------------------------------------------------
# Runs with balloon identities
# ---------------------------------------------------------------------------


class RunWithId:
    """Run whose balloons carry explicit integer identities.

    Steps are tagged tuples ("delta", ei), ("inflate", ei, contents),
    ("deflate", ei, id), ("burst", ei, id); the id of an inflated balloon
    is its 1-based step position.  Replaying validates every step.
    """

    def __init__(self, model, c0, steps):
        if c0.balloons:
            raise ValueError("a run with identities starts from a semiconfiguration")
        self.model = model
        self.c0 = c0
        self.steps = list(steps)

    def replay(self):
        """One (state, marking, {id: (balloon state, contents)}) entry per
        position, position 0 being the initial configuration; raises
        ValueError on the first invalid step."""
        st, mk = self.c0.state, self.c0.marking
        bal = {}
        trace = [(st, mk, {})]
        for pos, step in enumerate(self.steps, start=1):
            kind, ei = step[0], step[1]
            e = self.model.edges[ei]
            if e.src != st or e.op[0] != kind:
                raise ValueError(f"step {pos}: edge {ei} does not apply at state {st!r}")
            if kind == "delta":
                m2 = e.op[1].apply(mk)
                if m2 is None:
                    raise ValueError(f"step {pos}: marking would go negative")
                mk = m2
            elif kind == "inflate":
                contents = step[2]
                if not sl_member(e.op[2], contents):
                    raise ValueError(f"step {pos}: contents not in the inflate set")
                bal[pos] = (e.op[1], contents)
            elif kind == "deflate":
                bid = step[2]
                _k, s1, s2, bp, p = e.op
                if bid not in bal or bal[bid][0] != s1:
                    raise ValueError(f"step {pos}: no balloon {bid} in state {s1!r}")
                kont = bal[bid][1]
                moved = kont[bp]
                bal[bid] = (s2, kont - Multiset({bp: moved}) if moved else kont)
                if moved:
                    mk = mk + Multiset({p: moved})
            else:
                bid = step[2]
                if bid not in bal or bal[bid][0] != e.op[1]:
                    raise ValueError(f"step {pos}: no balloon {bid} in state {e.op[1]!r}")
                del bal[bid]
            st = e.dst
            trace.append((st, mk, dict(bal)))
        return trace

    def config_at(self, pos, trace=None):
        st, mk, bal = (trace or self.replay())[pos]
        return VassbConfig(st, mk, Multiset([(sk, 1) for sk in bal.values()]))

    def seq(self, i):
        """Positions of the operations performed on balloon i."""
        out = []
        for pos, s in enumerate(self.steps, start=1):
            if (s[0] == "inflate" and pos == i) or (s[0] in ("deflate", "burst") and s[2] == i):
                out.append(pos)
        return out

    def typeseq(self, i):
        """First-deflate triples (balloon place, place, position) of balloon i,
        in order of occurrence."""
        seen = set()
        out = []
        for pos, s in enumerate(self.steps, start=1):
            if s[0] == "deflate" and s[2] == i:
                op = self.model.edges[s[1]].op
                if op[3] not in seen:
                    seen.add(op[3])
                    out.append((op[3], op[4], pos))
        return out

    def inflate_choice(self, i):
        s = self.steps[i - 1]
        if s[0] != "inflate":
            raise ValueError(f"position {i} is not an inflation")
        e = self.model.edges[s[1]]
        return (e.op[1], e.op[2]), s[2]


def check_progressive_prefix(run, horizon):
    """Check the progress obligations created up to the horizon position.

    Every balloon present at a position <= horizon needs a later deflate or
    burst on its id, and every marked place a later negative delta step.
    Returns ("no_violation_yet",) or ("violated", position, reason).
    """
    trace = run.replay()
    horizon = min(horizon, len(trace) - 1)
    last_op = {}
    last_neg = {}
    for pos, s in enumerate(run.steps, start=1):
        if s[0] in ("deflate", "burst"):
            last_op[s[2]] = pos
        if s[0] == "delta":
            for p in run.model.edges[s[1]].op[1].negatives():
                last_neg[p] = pos
    for pos in range(horizon + 1):
        _st, mk, bal = trace[pos]
        for bid in bal:
            if last_op.get(bid, 0) <= pos:
                return ("violated", pos, ("balloon", bid))
        for p in mk.support:
            if last_neg.get(p, 0) <= pos:
                return ("violated", pos, ("place", p))
    return ("no_violation_yet",)


# ---------------------------------------------------------------------------
# Surgeries
# ---------------------------------------------------------------------------


def _shift_order_violation(run, i, j):
    """None if balloon i precedes balloon j in the shift order, else a
    description of the first violated clause."""
    if not i < j:
        return ("id order", i, j)
    try:
        li = run.inflate_choice(i)[0]
        lj = run.inflate_choice(j)[0]
    except (IndexError, ValueError):
        return ("missing inflation", i, j)
    if li != lj:
        return ("inflate set mismatch", li[0], lj[0])
    ti = {(bp, p): pos for bp, p, pos in run.typeseq(i)}
    tj = {(bp, p): pos for bp, p, pos in run.typeseq(j)}
    for pair, pos in tj.items():
        if pair not in ti:
            return ("first deflate without counterpart", pair)
        if pos <= ti[pair]:
            return ("first deflate too early", pair)
    return None


def token_shift(run, i, ids):
    """Surgery moving the inflated contents of the donor balloons onto
    balloon i: i is inflated with the sum, the donors are inflated empty,
    every other step is kept verbatim.  Valid (the result replays) on
    zero-base models when i precedes every donor in the shift order."""
    ids = sorted(set(ids) - {i})
    for j in ids:
        bad = _shift_order_violation(run, i, j)
        if bad is not None:
            raise ValueError(f"balloon {i} does not precede balloon {j}: {bad}")
    if not ids:
        return RunWithId(run.model, run.c0, run.steps)
    total = run.steps[i - 1][2]
    steps = list(run.steps)
    for j in ids:
        total = total + run.steps[j - 1][2]
        steps[j - 1] = ("inflate", run.steps[j - 1][1], EMPTY)
    steps[i - 1] = ("inflate", run.steps[i - 1][1], total)
    out = RunWithId(run.model, run.c0, steps)
    out.replay()
    return out


def id_switch(run, i, j, segments):
    """Exchange the deflate and burst steps of balloons i and j inside the
    given [lo, hi] position intervals.

    Requires equal balloon states for i and j at every interval boundary
    configuration (positions lo-1 and hi).  The switched run alone need
    not replay; combined with token_shift(i, {j}) it yields a valid run
    with one fewer non-empty balloon of the shared type.
    """
    trace = run.replay()
    n = len(run.steps)
    segs = sorted(tuple(s) for s in segments)
    for lo, hi in segs:
        if not 1 <= lo <= hi <= n:
            raise ValueError(f"segment ({lo}, {hi}) out of range")
    for lo, hi in segs:
        for b in (lo - 1, hi):
            si = trace[b][2].get(i, (None,))[0]
            sj = trace[b][2].get(j, (None,))[0]
            if si != sj:
                raise ValueError(
                    f"balloon states of {i} and {j} differ at boundary configuration {b}"
                )
    steps = list(run.steps)
    for lo, hi in segs:
        for pos in range(lo, hi + 1):
            s = steps[pos - 1]
            if s[0] in ("deflate", "burst") and s[2] in (i, j):
                steps[pos - 1] = (s[0], s[1], j if s[2] == i else i)
    return RunWithId(run.model, run.c0, steps)


# ---------------------------------------------------------------------------
# Typed extension, zero-base normal form, burst closure
# ---------------------------------------------------------------------------


def state_marker(sigma):
    """(deflate plan, marker index) of a typed balloon state, else None."""
    if isinstance(sigma, tuple) and sigma and sigma[0] in ("ty", "zb"):
        return sigma[2], sigma[3]
    return None


def typed_extension(m, cap=20000):
    """Annotate balloon states with a deflate plan.

    A plan is the sequence of first-deflate (balloon place, place) pairs
    the balloon will undergo, with distinct balloon places; the marker
    counts how many have happened.  Inflation guesses the full plan,
    deflates either advance the marker (the next planned pair) or are
    trivial (an already-deflated pair), bursts require a complete plan.
    Reachability and progressive-run existence are preserved.
    """
    deflates = [(ei, e) for ei, e in enumerate(m.edges) if e.op[0] == "deflate"]
    infl_states = sorted({e.op[1] for e in m.edges if e.op[0] == "inflate"}, key=symkey)
    burstable = {e.op[1] for e in m.edges if e.op[0] == "burst"}

    plans_from = {}
    for sigma0 in infl_states:
        seen = set()
        work = deque([(sigma0, ())])
        while work:
            node = work.popleft()
            if node in seen:
                continue
            seen.add(node)
            if len(seen) > cap:
                raise BudgetExceeded("typed extension plan discovery")
            sig, plan = node
            used = {bp for bp, _p in plan}
            for _ei, e in deflates:
                if e.op[1] != sig:
                    continue
                pair = (e.op[3], e.op[4])
                if pair in plan:
                    work.append((e.op[2], plan))
                elif e.op[3] not in used:
                    work.append((e.op[2], plan + (pair,)))
        # only plans that can end in a burst matter: a balloon with any
        # other plan can never be discharged, so no question asked of the
        # output (all of which demand balloon-free end configurations)
        # can use it
        plans_from[sigma0] = sorted(
            {plan for sig, plan in seen if sig in burstable}, key=symkey
        )

    def ty(sig, plan, i):
        return ("ty", sig, plan, i)

    states = set()
    work = deque()
    for sigma0 in infl_states:
        for plan in plans_from[sigma0]:
            s = ty(sigma0, plan, 0)
            if s not in states:
                states.add(s)
                work.append(s)
    succ = {}
    while work:
        ts = work.popleft()
        if len(states) > cap:
            raise BudgetExceeded("typed extension state discovery")
        _t, sig, plan, i = ts
        outs = []
        for ei, e in deflates:
            if e.op[1] != sig:
                continue
            pair = (e.op[3], e.op[4])
            if pair in plan[:i]:
                ns = ty(e.op[2], plan, i)
            elif i < len(plan) and plan[i] == pair:
                ns = ty(e.op[2], plan, i + 1)
            else:
                continue
            outs.append((ei, ns))
            if ns not in states:
                states.add(ns)
                work.append(ns)
        succ[ts] = outs

    ordered = sorted(states, key=symkey)
    edges = []
    for ei, e in enumerate(m.edges):
        kind = e.op[0]
        if kind == "delta":
            edges.append((e.src, e.op, e.dst))
        elif kind == "inflate":
            for plan in plans_from[e.op[1]]:
                edges.append((e.src, ("inflate", ty(e.op[1], plan, 0), e.op[2]), e.dst))
        elif kind == "deflate":
            for ts in ordered:
                for ei2, ns in succ.get(ts, ()):
                    if ei2 == ei:
                        edges.append((e.src, ("deflate", ts, ns, e.op[3], e.op[4]), e.dst))
        else:
            for ts in ordered:
                if ts[1] == e.op[1] and ts[3] == len(ts[2]):
                    edges.append((e.src, ("burst", ts), e.dst))
    return VassbModel(m.states, m.places, ordered, m.balloon_places, edges)


def zero_base_transform(m):
    """Remove the bases of all inflate sets.

    First pass: split each semilinear inflate per linear component and
    annotate balloon states with the component index, so every balloon
    state has one associated linear set.  Second pass: inflates use the
    zero-base version of that set and the marker-advancing deflates route
    through an intermediate state that re-adds the base's contribution to
    the transferred place.  Requires a typed input model (markers decide
    which deflates advance).
    """
    for s in m.balloon_states:
        if state_marker(s) is None:
            raise ValueError("zero-base transform needs a typed model")

    lins = []
    lidx = {}
    for e in m.edges:
        if e.op[0] == "inflate":
            for comp in e.op[2].components:
                if comp not in lidx:
                    lidx[comp] = len(lins)
                    lins.append(comp)

    def zb(ts, li):
        return ("zb", ts[1], ts[2], ts[3], li)

    # pass 1: which (typed state, component) pairs are realizable
    pairs = set()
    work = deque()
    for e in m.edges:
        if e.op[0] == "inflate":
            for comp in e.op[2].components:
                pr = (e.op[1], lidx[comp])
                if pr not in pairs:
                    pairs.add(pr)
                    work.append(pr)
    while work:
        ts, li = work.popleft()
        for e in m.edges:
            if e.op[0] == "deflate" and e.op[1] == ts:
                pr = (e.op[2], li)
                if pr not in pairs:
                    pairs.add(pr)
                    work.append(pr)

    bstates = sorted((zb(ts, li) for ts, li in pairs), key=symkey)
    deflate_idx = [
        (ei, e, li)
        for ei, e in enumerate(m.edges)
        if e.op[0] == "deflate"
        for li in range(len(lins))
        if (e.op[1], li) in pairs
    ]
    # pass 2: eager intermediate states, one per (split deflate edge, place)
    mids = [("zbm", k, p) for k in range(len(deflate_idx)) for p in m.places]
    edges = []
    for e in m.edges:
        if e.op[0] == "delta":
            edges.append((e.src, e.op, e.dst))
        elif e.op[0] == "inflate":
            for comp in e.op[2].components:
                zset = SemilinearSet([LinearSet(EMPTY, comp.periods)])
                edges.append((e.src, ("inflate", zb(e.op[1], lidx[comp]), zset), e.dst))
        elif e.op[0] == "burst":
            for li in range(len(lins)):
                if (e.op[1], li) in pairs:
                    edges.append((e.src, ("burst", zb(e.op[1], li)), e.dst))
    for k, (ei, e, li) in enumerate(deflate_idx):
        _kind, s1, s2, bp, p = e.op
        advance = state_marker(s2)[1] == state_marker(s1)[1] + 1
        op = ("deflate", zb(s1, li), zb(s2, li), bp, p)
        if advance:
            mid = ("zbm", k, p)
            edges.append((e.src, op, mid))
            edges.append((mid, ("delta", IntVector({p: lins[li].base[bp]})), e.dst))
        else:
            edges.append((e.src, op, e.dst))
    return VassbModel(list(m.states) + mids, m.places, bstates, m.balloon_places, edges)


def _bal(sig, k):
    return ("bal", sig, k)


def burst_closure(m):
    """Make every balloon burstable without changing progressive behavior.

    A balloon whose plan is complete may alternatively be deflated one
    last time, burst, and replaced by a token on a pair of fresh places
    that simulates an eternally idle empty balloon; the token can shuttle
    between the pair forever, discharging nothing.  Witnesses are searched
    on the closed model.  Requires a typed input.
    """
    for s in m.balloon_states:
        if state_marker(s) is None:
            raise ValueError("burst closure needs a typed model")
    places = list(m.places) + [_bal(s, k) for s in m.balloon_states for k in (0, 1)]
    states = list(m.states)
    edges = [(e.src, e.op, e.dst) for e in m.edges]
    for ei, e in enumerate(m.edges):
        if e.op[0] != "deflate":
            continue
        _kind, s1, s2, _bp, _p = e.op
        plan, i = state_marker(s1)
        if i < len(plan):
            continue
        states += [("bc", ei, 0), ("bc", ei, 1)]
        edges.append((e.src, e.op, ("bc", ei, 0)))
        edges.append((("bc", ei, 0), ("burst", s2), ("bc", ei, 1)))
        edges.append((("bc", ei, 1), ("delta", IntVector({_bal(s2, 0): 1})), e.dst))
        if s1 == s2:
            for a, b in ((0, 1), (1, 0)):
                vec = IntVector({_bal(s1, a): 1, _bal(s1, b): -1})
                edges.append((e.src, ("delta", vec), e.dst))
        else:
            for a in (0, 1):
                for b in (0, 1):
                    vec = IntVector({_bal(s1, a): -1, _bal(s2, b): 1})
                    edges.append((e.src, ("delta", vec), e.dst))
    return VassbModel(states, places, m.balloon_states, m.balloon_places, edges)


# ---------------------------------------------------------------------------
# Witnesses for progressive runs
# ---------------------------------------------------------------------------


class AbWitness:
    """A pumpable cycle certificate: a replayable run with two marked
    positions c (c_index) and c' (cprime_index) plus the obligation sets
    A (places) and B (balloon states)."""

    def __init__(self, a, b, run, c_index, cprime_index):
        self.a = frozenset(a)
        self.b = frozenset(b)
        self.run = run
        self.c_index = c_index
        self.cprime_index = cprime_index

    def to_json(self):
        def step_json(s):
            if s[0] == "inflate":
                return [s[0], s[1], {symkey(p): c for p, c in s[2].sorted_items()}]
            return list(s)

        return {
            "A": sorted((_sym_to_json(p) for p in self.a), key=str),
            "B": sorted((_sym_to_json(s) for s in self.b), key=str),
            "run": [s[1] for s in self.run.steps],
            "c_index": self.c_index,
            "cprime_index": self.cprime_index,
            "initial": {
                "state": _sym_to_json(self.run.c0.state),
                "marking": self.run.c0.marking.to_json(),
            },
            "steps": [step_json(s) for s in self.run.steps],
        }

    @classmethod
    def from_json(cls, model, data):
        pkey = {symkey(p): p for p in model.places}
        fkey = {symkey(p): p for p in model.balloon_places}

        def step_of(s):
            if s[0] == "inflate":
                return (s[0], s[1], Multiset({fkey[k]: c for k, c in s[2].items()}))
            return tuple(s)

        c0 = VassbConfig(
            _sym_from_json(data["initial"]["state"]),
            Multiset({pkey[k]: c for k, c in data["initial"]["marking"].items()}),
            Multiset(),
        )
        run = RunWithId(model, c0, [step_of(s) for s in data["steps"]])
        return cls(
            [_sym_from_json(p) for p in data["A"]],
            [_sym_from_json(s) for s in data["B"]],
            run,
            data["c_index"],
            data["cprime_index"],
        )


def check_ab_witness(w, m):
    """Check the five witness conditions literally; ("valid",) or
    ("invalid", first failing condition number)."""
    trace = w.run.replay()
    u, v = w.c_index, w.cprime_index
    if not 0 <= u < v < len(trace):
        return ("invalid", 0)
    # 1: markings between c and c' stay inside A
    for k in range(u, v + 1):
        if not trace[k][1].support <= w.a:
            return ("invalid", 1)
    # 2: every place of A sees a negative delta inside the cycle
    negs = set()
    for pos in range(u + 1, v + 1):
        s = w.run.steps[pos - 1]
        if s[0] == "delta":
            negs.update(m.edges[s[1]].op[1].negatives())
    if not w.a <= negs:
        return ("invalid", 2)
    # 3: balloons at c and c' are exactly empty balloons with states B
    for k in (u, v):
        bal = trace[k][2]
        if any(kont for _sig, kont in bal.values()):
            return ("invalid", 3)
        if {sig for sig, _kont in bal.values()} != set(w.b):
            return ("invalid", 3)
    # 4: every state of B sees an op on an empty balloon inside the cycle
    touched = set()
    for pos in range(u + 1, v + 1):
        s = w.run.steps[pos - 1]
        if s[0] in ("deflate", "burst"):
            sig, kont = trace[pos - 1][2][s[2]]
            if not kont:
                touched.add(sig)
    if not w.b <= touched:
        return ("invalid", 4)
    # 5: pseudoconfiguration order with equal marking supports
    pu = pseudoconfig(w.run.config_at(u, trace))
    pv = pseudoconfig(w.run.config_at(v, trace))
    if not pseudo_le(pu, pv) or pu[1].support != pv[1].support:
        return ("invalid", 5)
    return ("valid",)


def unroll_witness(w, k):
    """Prefix plus k repetitions of the witness cycle, as a replayable run.

    Each repetition re-targets the cycle's pre-existing balloon ids to the
    least available empty balloon of the matching state, and re-numbers
    the cycle-internal inflations; validity follows from monotonicity at
    the marked positions, and the balloon norm never exceeds the witness
    run's norm (shallowness).
    """
    if k < 1:
        raise ValueError("need at least one repetition")
    trace = w.run.replay()
    u, v = w.c_index, w.cprime_index
    steps = list(w.run.steps[:v])
    cycle = w.run.steps[u:v]
    old_states = {bid: sig for bid, (sig, _kont) in trace[u][2].items()}
    for _rep in range(1, k):
        cur = RunWithId(w.run.model, w.run.c0, steps).replay()[-1][2]
        remap = {}
        taken = set()
        newsteps = []
        base = len(steps)
        for off, s in enumerate(cycle, start=1):
            if s[0] in ("deflate", "burst"):
                bid = s[2]
                if bid not in remap:
                    if bid in old_states:
                        sig = old_states[bid]
                        avail = sorted(
                            b for b, (s2, kont) in cur.items()
                            if s2 == sig and not kont and b not in taken
                        )
                        if not avail:
                            raise ValueError(f"no empty balloon in state {sig!r} to retarget")
                        remap[bid] = avail[0]
                        taken.add(avail[0])
                    else:
                        raise ValueError(f"balloon {bid} acted on before its inflation")
                newsteps.append((s[0], s[1], remap[bid]))
            elif s[0] == "inflate":
                remap[u + off] = base + off
                newsteps.append(s)
            else:
                newsteps.append(s)
        steps += newsteps
    out = RunWithId(w.run.model, w.run.c0, steps)
    out.replay()
    return out


# ---------------------------------------------------------------------------
# Five-stage composed machine for one obligation pair (A, B)
# ---------------------------------------------------------------------------

PCHECK = ("pcheck",)
PADBP = ("bp", "pad")
VER = ("ver",)
FIN = ("fin",)


def _pc(p, k):
    return ("pc", p, k)


def _bs(sig, k):
    return ("bs", sig, k)


def _bpk(pi, k):
    return ("bp", pi, k)


def _dd(s1, s2):
    return ("d", s1, s2)


def _tdd(s1, s2, k):
    return ("td", s1, s2, k)


def _tp(sig, k):
    return ("ts", sig, k)


def _dbl_vec(vec):
    return IntVector(
        [(_pc(p, 1), c) for p, c in vec.items()] + [(_pc(p, 2), c) for p, c in vec.items()]
    )


def _copy2_vec(vec):
    return IntVector([(_pc(p, 2), c) for p, c in vec.items()])


def _dbl_mark(m):
    return Multiset(
        [(_pc(p, 1), c) for p, c in m.items()] + [(_pc(p, 2), c) for p, c in m.items()]
    )


def _dbl_lin(lin):
    def dbl(ms):
        return Multiset(
            [(_bpk(pi, 1), c) for pi, c in ms.items()] + [(_bpk(pi, 2), c) for pi, c in ms.items()]
        )

    return LinearSet(dbl(lin.base), [dbl(p) for p in lin.periods])


def _copy2_lin(lin):
    def c2(ms):
        return Multiset([(_bpk(pi, 2), c) for pi, c in ms.items()])

    return LinearSet(c2(lin.base), [c2(p) for p in lin.periods])


def build_VT(m, A, B, s0=None, cap=2_000_000):
    """Compose the five verification stages for one obligation pair.

    Stage 1 runs two identical copies of m on doubled places and doubled
    balloons.  The first auxiliary stage certifies every balloon empty at
    the cycle start and banks its count.  Stage 2 continues only the
    second copy, restricted to deltas supported in A, recording which
    obligations of A (a negative delta) and B (a deflate or burst exit)
    fired.  The second auxiliary stage certifies emptiness at the cycle
    end.  Stage 3 drains matched token pairs and bursts the rest; the
    target (fin, empty, no balloons) is reachable iff all checks pass.
    Returns (model, initial semiconfig, target semiconfig); the model
    carries the glue edge indices in its vt_glue attribute.
    """
    A = frozenset(A)
    B = frozenset(B)
    if s0 is None:
        s0 = VassbConfig(m.states[0], Multiset(), Multiset())
    if s0.balloons:
        raise ValueError("the five-stage machine starts from a semiconfiguration")
    ab = sorted(A | B, key=symkey)
    nb = len(m.balloon_states)
    est = len(m.states) * (len(m.states) + len(m.edges)) * (2 ** len(ab)) * max(nb, 1)
    if est > cap:
        raise BudgetExceeded("five-stage machine size")

    places = (
        [_pc(p, k) for p in m.places for k in (1, 2)]
        + [_bs(s, k) for s in m.balloon_states for k in (1, 2, 3, 4)]
        + [PCHECK]
    )
    bplaces = [_bpk(pi, k) for pi in m.balloon_places for k in (1, 2)] + [PADBP]
    chain = sorted([_bpk(pi, k) for pi in m.balloon_places for k in (1, 2)], key=symkey)
    chain.append(PADBP)
    n = len(chain)
    doubles = [_dd(s1, s2) for s1 in m.balloon_states for s2 in m.balloon_states]
    bstates = (
        doubles
        + list(m.balloon_states)
        + [_tdd(s1, s2, k) for s1 in m.balloon_states for s2 in m.balloon_states for k in (1, 2)]
        + [_tp(s, k) for s in m.balloon_states for k in (1, 2)]
    )

    states = set()
    edges = []
    glue = {"v1_to_v12": [], "v12_to_v2": [], "v2_to_v23": [], "v23_to_v3": []}

    def emit(src, op, dst):
        states.add(src)
        states.add(dst)
        edges.append((src, op, dst))
        return len(edges) - 1

    # stage 1: two identical copies
    for ei, e in enumerate(m.edges):
        kind = e.op[0]
        if kind == "delta":
            emit(("v1", e.src), ("delta", _dbl_vec(e.op[1])), ("v1", e.dst))
        elif kind == "inflate":
            sig = e.op[1]
            dset = SemilinearSet([_dbl_lin(c) for c in e.op[2].components])
            emit(("v1", e.src), ("inflate", _dd(sig, sig), dset), ("v1e", ei, 1))
            vec = IntVector({_bs(sig, 1): 1, _bs(sig, 2): 1})
            emit(("v1e", ei, 1), ("delta", vec), ("v1", e.dst))
        elif kind == "deflate":
            _k, s1, s2, bp, p = e.op
            emit(
                ("v1", e.src),
                ("deflate", _dd(s1, s1), _dd(s2, s1), _bpk(bp, 1), _pc(p, 1)),
                ("v1e", ei, 1),
            )
            emit(
                ("v1e", ei, 1),
                ("deflate", _dd(s2, s1), _dd(s2, s2), _bpk(bp, 2), _pc(p, 2)),
                ("v1e", ei, 2),
            )
            vec = IntVector({_bs(s1, 1): -1, _bs(s2, 1): 1, _bs(s1, 2): -1, _bs(s2, 2): 1})
            emit(("v1e", ei, 2), ("delta", vec), ("v1", e.dst))
        else:
            sig = e.op[1]
            emit(("v1", e.src), ("burst", _dd(sig, sig)), ("v1e", ei, 1))
            vec = IntVector({_bs(sig, 1): -1, _bs(sig, 2): -1})
            emit(("v1e", ei, 1), ("delta", vec), ("v1", e.dst))

    # first auxiliary stage: certify balloons at the cycle start empty
    for q in m.states:
        glue["v1_to_v12"].append(emit(("v1", q), ("delta", ZEROV), ("v12", q, 1)))
        for sig in m.balloon_states:
            prev = ("v12", q, 1)
            for t in range(1, n + 1):
                bsrc = _dd(sig, sig) if t == 1 else _tdd(sig, sig, 1)
                bdst = _tdd(sig, sig, 2) if t == n else _tdd(sig, sig, 1)
                cur = ("v12c", q, sig, t)
                emit(prev, ("deflate", bsrc, bdst, chain[t - 1], PCHECK), cur)
                prev = cur
            vec = IntVector({_bs(sig, 1): -1, _bs(sig, 3): 1})
            emit(prev, ("delta", vec), ("v12", q, 1))
        emit(("v12", q, 1), ("delta", ZEROV), ("v12", q, 2))
        for sig in m.balloon_states:
            emit(
                ("v12", q, 2),
                ("deflate", _tdd(sig, sig, 2), _dd(sig, sig), PADBP, PCHECK),
                ("v12", q, 2),
            )
        glue["v12_to_v2"].append(
            emit(("v12", q, 2), ("delta", ZEROV), ("v2", q, q, frozenset()))
        )

    # stage 2: continue the second copy, tracking discharged obligations
    subsets = [frozenset(c) for r in range(len(ab) + 1) for c in combinations(ab, r)]
    for q1 in m.states:
        for M in subsets:
            for ei, e in enumerate(m.edges):
                kind = e.op[0]
                if kind == "delta":
                    if not set(e.op[1].support) <= A:
                        continue
                    M2 = M | frozenset(e.op[1].negatives())
                    emit(("v2", q1, e.src, M), ("delta", _copy2_vec(e.op[1])), ("v2", q1, e.dst, M2))
                elif kind == "inflate":
                    sig = e.op[1]
                    cset = SemilinearSet([_copy2_lin(c) for c in e.op[2].components])
                    emit(("v2", q1, e.src, M), ("inflate", sig, cset), ("v2e", q1, ei, M))
                    vec = IntVector({_bs(sig, 2): 1})
                    emit(("v2e", q1, ei, M), ("delta", vec), ("v2", q1, e.dst, M))
                elif kind == "deflate":
                    _k, s1, s2, bp, p = e.op
                    M2 = M | (frozenset([s1]) & B)
                    for sx in m.balloon_states:
                        emit(
                            ("v2", q1, e.src, M),
                            ("deflate", _dd(sx, s1), _dd(sx, s2), _bpk(bp, 2), _pc(p, 2)),
                            ("v2e", q1, ei, M),
                        )
                    emit(
                        ("v2", q1, e.src, M),
                        ("deflate", s1, s2, _bpk(bp, 2), _pc(p, 2)),
                        ("v2e", q1, ei, M),
                    )
                    vec = IntVector({_bs(s1, 2): -1, _bs(s2, 2): 1})
                    emit(("v2e", q1, ei, M), ("delta", vec), ("v2", q1, e.dst, M2))
                else:
                    sig = e.op[1]
                    M2 = M | (frozenset([sig]) & B)
                    for sx in m.balloon_states:
                        emit(("v2", q1, e.src, M), ("burst", _dd(sx, sig)), ("v2e", q1, ei, M))
                    emit(("v2", q1, e.src, M), ("burst", sig), ("v2e", q1, ei, M))
                    vec = IntVector({_bs(sig, 2): -1})
                    emit(("v2e", q1, ei, M), ("delta", vec), ("v2", q1, e.dst, M2))

    # second auxiliary stage: certify balloons at the cycle end empty
    full = frozenset(ab)
    for q in m.states:
        glue["v2_to_v23"].append(
            emit(("v2", q, q, full), ("delta", ZEROV), ("v23", q, 1))
        )
        checks = [(_dd(s1, s2), s2, lambda k, a=s1, b=s2: _tdd(a, b, k))
                  for s1 in m.balloon_states for s2 in m.balloon_states]
        checks += [(sig, sig, lambda k, a=sig: _tp(a, k)) for sig in m.balloon_states]
        for beta, sig2, tilde in checks:
            prev = ("v23", q, 1)
            for t in range(1, n + 1):
                bsrc = beta if t == 1 else tilde(1)
                bdst = tilde(2) if t == n else tilde(1)
                cur = ("v23c", q, beta, t)
                emit(prev, ("deflate", bsrc, bdst, chain[t - 1], PCHECK), cur)
                prev = cur
            vec = IntVector({_bs(sig2, 2): -1, _bs(sig2, 4): 1})
            emit(prev, ("delta", vec), ("v23", q, 1))
        emit(("v23", q, 1), ("delta", ZEROV), ("v23", q, 2))
        for beta, _sig2, tilde in checks:
            emit(("v23", q, 2), ("deflate", tilde(2), beta, PADBP, PCHECK), ("v23", q, 2))
        glue["v23_to_v3"].append(emit(("v23", q, 2), ("delta", ZEROV), VER))

    # stage 3: verification
    for p in sorted(A, key=symkey):
        emit(VER, ("delta", IntVector({_pc(p, 1): -1, _pc(p, 2): -1})), VER)
    for sig in sorted(B, key=symkey):
        emit(VER, ("delta", IntVector({_bs(sig, 3): -1, _bs(sig, 4): -1})), VER)
    for sig in m.balloon_states:
        emit(VER, ("burst", sig), VER)
    for d in doubles:
        emit(VER, ("burst", d), VER)
    emit(VER, ("delta", ZEROV), FIN)
    for p in sorted(A, key=symkey):
        emit(FIN, ("delta", IntVector({_pc(p, 2): -1})), FIN)
    for sig in sorted(B, key=symkey):
        emit(FIN, ("delta", IntVector({_bs(sig, 4): -1})), FIN)

    states.add(("v1", s0.state))
    model = VassbModel(sorted(states, key=symkey), places, bstates, bplaces, edges)
    model.vt_glue = glue
    init = VassbConfig(("v1", s0.state), _dbl_mark(s0.marking), Multiset())
    target = VassbConfig(FIN, Multiset(), Multiset())
    return model, init, target


# ---------------------------------------------------------------------------
# Balloon-count abstraction (a plain VASS image of every run)
# ---------------------------------------------------------------------------


def balloon_count_abstraction(m):
    """Plain VASS over the places plus one counter per balloon state.

    Every run of the balloon machine projects onto a run of this VASS,
    so a complete termination verdict on the abstraction is a complete
    "no infinite run" verdict for the machine.  Each deflate transfer is
    over-approximated by the projections of the inflate sets its balloon
    could have been filled from; the part of the projection common to
    every component is carried on the transfer edge itself (a deflate
    moves the whole content place), the remainder is optional.
    """
    places = list(m.places) + [("bst", s) for s in m.balloon_states]
    states = list(m.states)
    edges = []
    extended = []
    # a balloon observed in state s was inflated at some state from which
    # s is reachable through deflate steps, so only those inflate sets can
    # bound its contents
    succ = {}
    for e in m.edges:
        if e.op[0] == "deflate":
            succ.setdefault(e.op[1], set()).add(e.op[2])
    comps_at = {}
    for e in m.edges:
        if e.op[0] == "inflate":
            frontier = [e.op[1]]
            hit = {e.op[1]}
            while frontier:
                s = frontier.pop()
                lst = comps_at.setdefault(s, [])
                for c in e.op[2].components:
                    if c not in lst:
                        lst.append(c)
                for s2 in succ.get(s, ()):
                    if s2 not in hit:
                        hit.add(s2)
                        frontier.append(s2)
    # a deflate moves the whole content place, so unless an earlier deflate
    # of the same content place can precede it, the component bases give a
    # mandatory minimum release
    reach_memo = {}

    def _reaches(a, b):
        if a not in reach_memo:
            hit = {a}
            frontier = [a]
            while frontier:
                x = frontier.pop()
                for y in succ.get(x, ()):
                    if y not in hit:
                        hit.add(y)
                        frontier.append(y)
            reach_memo[a] = hit
        return b in reach_memo[a]

    drains = {}
    for e in m.edges:
        if e.op[0] == "deflate":
            drains.setdefault(e.op[3], []).append(e.op[2])

    def _maybe_drained(bp, s1):
        return any(_reaches(d, s1) for d in drains.get(bp, ()))
    for ei, e in enumerate(m.edges):
        kind = e.op[0]
        if kind == "delta":
            edges.append((e.src, e.op[1], e.dst))
        elif kind == "inflate":
            edges.append((e.src, IntVector({("bst", e.op[1]): 1}), e.dst))
        elif kind == "deflate":
            _k, s1, s2, bp, p = e.op
            mid = ("bca", ei)
            states.append(mid)
            cs = comps_at.get(s1, ())
            low = 0
            if cs and not _maybe_drained(bp, s1):
                low = min(c.base[bp] for c in cs)
            entry = {}
            entry[("bst", s1)] = entry.get(("bst", s1), 0) - 1
            entry[("bst", s2)] = entry.get(("bst", s2), 0) + 1
            if low:
                entry[p] = entry.get(p, 0) + low
            edges.append((e.src, IntVector(entry), mid))
            edges.append((mid, ZEROV, e.dst))
            seen = set()
            for c in cs:
                base = c.base[bp] - low
                pers = sorted({per[bp] for per in c.periods if per[bp]})
                key = (base, tuple(pers))
                if key in seen or (base == 0 and not pers):
                    continue
                seen.add(key)
                lin = LinearSet(
                    Multiset({p: base}) if base else EMPTY,
                    [Multiset({p: k}) for k in pers],
                )
                extended.append((mid, "+", lin, e.dst))
        else:
            edges.append((e.src, IntVector({("bst", e.op[1]): -1}), e.dst))
    return VassModel(states, places, edges, extended)


# ---------------------------------------------------------------------------
# Reachability reduction to plain VASS under a balloon budget
# ---------------------------------------------------------------------------

ReachVass = namedtuple("ReachVass", ["vass", "init", "target", "info", "complete", "source"])


def _slot_place(sig, i, pi):
    return ("ct", sig, i, pi)


def vassb_reach_to_vass(m, n_budget, source, target, state_budget=100_000):
    """Plain VASS whose reachability matches the balloon machine's between
    two semiconfigurations, for runs inflating at most n_budget non-empty
    balloons per balloon state.

    The global state tracks, per occupied slot, the current state of one
    non-empty balloon; slot places hold its contents.  Empty balloons are
    counted on one place per balloon state.  Chosen-amount operations
    (inflation contents, first-deflate transfers, burst leftovers) are
    expanded into one-token loop gadgets: a partial transfer strands
    tokens on a slot place that the target (which requires every non-input
    place empty) forbids, so reachability is exact.  Requires zero-base
    inflate sets (an empty inflation must be a legal member).  The state
    space is materialized lazily from the source; exceeding the budget
    returns a partial model flagged incomplete.
    """
    if source.balloons or target.balloons:
        raise ValueError("endpoints must be semiconfigurations")
    for e in m.edges:
        if e.op[0] == "inflate" and not e.op[2].is_zero_base():
            raise ValueError("zero-base inflate sets required")

    places = (
        list(m.places)
        + [
            _slot_place(sig, i, pi)
            for sig in m.balloon_states
            for i in range(1, n_budget + 1)
            for pi in m.balloon_places
        ]
        + [("bst", sig) for sig in m.balloon_states]
    )
    out_edges = {}
    for e in m.edges:
        out_edges.setdefault(e.src, []).append(e)
    eidx = {id(e): i for i, e in enumerate(m.edges)}

    states = []
    state_set = set()
    edges = []
    info = []
    QF = ("qf",)

    def add_state(s):
        if s not in state_set:
            state_set.add(s)
            states.append(s)

    def emit(src, vec, dst, tag):
        add_state(src)
        add_state(dst)
        edges.append((src, vec, dst))
        info.append(tag)

    def canon(d):
        return tuple(sorted(d.items(), key=lambda kv: symkey(kv)))

    start = (source.state, ())
    add_state(start)
    add_state(QF)
    queue = deque([start])
    expanded = {start}
    complete = True
    while queue:
        if len(state_set) > state_budget:
            complete = False
            break
        s = queue.popleft()
        q, eta = s
        etad = dict(eta)

        def push(ns):
            if ns not in expanded:
                expanded.add(ns)
                queue.append(ns)

        for e in out_edges.get(q, ()):
            ei = eidx[id(e)]
            kind = e.op[0]
            if kind == "delta":
                dst = (e.dst, eta)
                emit(s, e.op[1], dst, ("delta", ei))
                push(dst)
            elif kind == "inflate":
                sig = e.op[1]
                dst = (e.dst, eta)
                emit(s, IntVector({("bst", sig): 1}), dst, ("inflate_empty", ei))
                push(dst)
                used = sum(1 for (sg, _i) in etad if sg == sig)
                if used < n_budget:
                    slot = (sig, used + 1)
                    dst2 = (e.dst, canon({**etad, slot: sig}))
                    for ci, comp in enumerate(e.op[2].components):
                        mid = ("g", s, ei, ci)
                        emit(s, ZEROV, mid, ("inflate_entry", ei, slot, ci))
                        for pj, per in enumerate(comp.periods):
                            vec = IntVector(
                                {_slot_place(sig, slot[1], pi): c for pi, c in per.items()}
                            )
                            emit(mid, vec, mid, ("inflate_loop", ei, slot, ci, pj))
                        emit(mid, ZEROV, dst2, ("inflate_exit", ei, slot, ci))
                    push(dst2)
            elif kind == "deflate":
                _k, s1, s2, bp, p = e.op
                dst = (e.dst, eta)
                emit(s, IntVector({("bst", s1): -1, ("bst", s2): 1}), dst, ("deflate_empty", ei))
                push(dst)
                for slot, val in etad.items():
                    if val != s1:
                        continue
                    sig0 = slot[0]
                    dst2 = (e.dst, canon({**etad, slot: s2}))
                    mid = ("h", s, ei, slot)
                    emit(s, ZEROV, mid, ("xfer_entry", ei, slot))
                    vec = IntVector({_slot_place(sig0, slot[1], bp): -1, p: 1})
                    emit(mid, vec, mid, ("xfer_loop", ei, slot))
                    emit(mid, ZEROV, dst2, ("xfer_exit", ei, slot))
                    push(dst2)
            else:
                sig = e.op[1]
                dst = (e.dst, eta)
                emit(s, IntVector({("bst", sig): -1}), dst, ("burst_empty", ei))
                push(dst)
                for slot, val in etad.items():
                    if val != sig:
                        continue
                    sig0 = slot[0]
                    dst2 = (e.dst, canon({**etad, slot: "+"}))
                    mid = ("k", s, ei, slot)
                    emit(s, ZEROV, mid, ("burst_entry", ei, slot))
                    for pi in m.balloon_places:
                        vec = IntVector({_slot_place(sig0, slot[1], pi): -1})
                        emit(mid, vec, mid, ("burst_loop", ei, slot, pi))
                    emit(mid, ZEROV, dst2, ("burst_exit", ei, slot))
                    push(dst2)
        if q == target.state and all(v == "+" for v in etad.values()):
            emit(s, ZEROV, QF, ("final",))
    vass = VassModel(states, places, edges)
    init = VassConfig(start, source.marking)
    tgt = VassConfig(QF, target.marking)
    return ReachVass(vass, init, tgt, info, complete, source)


def reconstruct_vassb_run(m, rv, path):
    """Translate a path of the reduced VASS (edge indices) back into a run
    with identities of the balloon machine.  Empty-balloon operations pick
    the least matching id; gadget loops are folded into the inflation
    contents they generate."""
    steps = []
    pool = {}
    slot_id = {}
    pending = None
    for idx in path:
        tag = rv.info[idx]
        k = tag[0]
        if k == "delta":
            steps.append(("delta", tag[1]))
        elif k == "inflate_empty":
            ei = tag[1]
            steps.append(("inflate", ei, EMPTY))
            pool.setdefault(m.edges[ei].op[1], []).append(len(steps))
        elif k == "inflate_entry":
            pending = EMPTY
        elif k == "inflate_loop":
            ei, _slot, ci, pj = tag[1:]
            pending = pending + m.edges[ei].op[2].components[ci].periods[pj]
        elif k == "inflate_exit":
            ei, slot, _ci = tag[1:]
            steps.append(("inflate", ei, pending))
            slot_id[slot] = len(steps)
            pending = None
        elif k == "deflate_empty":
            ei = tag[1]
            op = m.edges[ei].op
            ids = pool[op[1]]
            bid = min(ids)
            ids.remove(bid)
            steps.append(("deflate", ei, bid))
            pool.setdefault(op[2], []).append(bid)
        elif k == "xfer_exit":
            ei, slot = tag[1:]
            steps.append(("deflate", ei, slot_id[slot]))
        elif k == "burst_empty":
            ei = tag[1]
            ids = pool[m.edges[ei].op[1]]
            bid = min(ids)
            ids.remove(bid)
            steps.append(("burst", ei, bid))
        elif k == "burst_exit":
            ei, slot = tag[1:]
            steps.append(("burst", ei, slot_id[slot]))
        elif k == "final":
            break
    return RunWithId(m, rv.source, steps)


# ---------------------------------------------------------------------------
# Scheduled thread systems -> balloon machines
# ---------------------------------------------------------------------------

Q0 = ("q0",)
BOTB = ("bot-balloon",)
WEPS = ("weps",)


def thread_types(model, K):
    """Enumerate the realizable thread types at switch bound K with their
    spawn semilinear sets, as parallel lists (types, sets).

    A type fixes the creation point (resume global, top symbol), the K
    switch triples, and the final handed-back global; types whose spawn
    language is empty are dropped.
    """
    pairs = sorted({(r.g2, r.top) for r in model.resume}, key=symkey)
    types = []
    sls = []
    for g2, top in pairs:
        p = _thread_pda(model, g2, top, empty_stack_only=True, segments=K)
        jmps = sorted(
            {a[1:] for a in p.input_alphabet if letter_kind(a) == "jump"}, key=symkey
        )
        fins = sorted({a[1] for a in p.input_alphabet if letter_kind(a) == "final"}, key=symkey)
        # prune the switch-sequence product before any Parikh computation:
        # walk the downward-closure automaton with spawn letters made free,
        # so only jump/fin projections of actual executions survive
        dc = downward_closure_nfa(p)
        succ = {}
        out_jmps = {}
        for s, a, d in dc.edges:
            key = (s, None) if a is not None and letter_kind(a) == "spawn" else (s, a)
            succ.setdefault(key, set()).add(d)
            if a is not None and letter_kind(a) == "jump":
                out_jmps.setdefault(s, set()).add(a[1:])

        def closure(qs):
            seen = set(qs)
            stack = list(qs)
            while stack:
                q = stack.pop()
                for q2 in succ.get((q, None), ()):
                    if q2 not in seen:
                        seen.add(q2)
                        stack.append(q2)
            return frozenset(seen)

        def step(qs, a):
            out = set()
            for q in qs:
                out |= succ.get((q, a), set())
            return closure(out)

        level = {(): closure({dc.initial})}
        for _ in range(K):
            nxt = {}
            for sw, qs in level.items():
                # only jump letters leaving the current state set can fire
                avail = set()
                for q in qs:
                    avail |= out_jmps.get(q, set())
                for jm in sorted(avail, key=symkey):
                    qs2 = step(qs, ("jmp",) + jm)
                    if qs2:
                        nxt[sw + (jm,)] = qs2
            level = nxt
        for sw in sorted(level, key=symkey):
            qs = level[sw]
            for f in fins:
                if not (step(qs, ("fin", f)) & dc.finals):
                    continue
                t = ThreadType(g2, top, sw, f)
                if pda_emptiness(type_spawn_pda(model, K, t)):
                    continue
                sl = type_spawn_semilinear(model, K, t)
                if sl is not None:
                    types.append(t)
                    sls.append(sl)
    return types, sls


def dcps_to_vassb(model, K):
    """Balloon machine equivalent to the scheduled thread system at switch
    bound K; returns (VassbModel, initial state).

    Threads become balloons: a resume consumes the thread's bag token and
    guesses the thread's type; the inflation fixes the spawn multiset over
    (symbol, segment); each scheduler segment releases its spawns by a
    deflate walk over the stack alphabet; parking between segments and the
    final termination hand the global back.  Balloon states carry the
    spawn set by table index (model.sl_table).
    """
    w = list(model.stack)
    last = len(w) - 1
    types, sls = thread_types(model, K)

    def bst(ti, j, sym):
        return (tuple(types[ti]), j, ti, sym)

    def seg_end(t, j):
        # a switch triple is (handed-back global, wait symbol, resume global)
        return t.switches[j][0] if j < K else t.final

    bstates = [BOTB]
    for ti in range(len(types)):
        for j in range(K + 1):
            for sym in [WEPS] + w:
                bstates.append(bst(ti, j, sym))
    bplaces = [(gam, j) for gam in w for j in range(K + 1)]

    states = [Q0] + list(model.globals)
    seen_states = set(states)
    edges = [(Q0, ("delta", IntVector({model.gamma0: 1})), model.g0)]
    triples = set()

    def tri(gA, b, gB):
        s = ("tri", gA, b, gB)
        if s not in seen_states:
            seen_states.add(s)
            states.append(s)
        return s

    # creation: a resume consumes the bag token and guesses a type
    for r in sorted(set(model.resume), key=lambda r: symkey(tuple(r))):
        for ti, t in enumerate(types):
            if t.g != r.g2 or t.gamma != r.top:
                continue
            gB = seg_end(t, 0)
            dst = tri(r.g2, bst(ti, 0, WEPS), gB)
            edges.append((r.g, ("delta", IntVector({r.top: -1})), dst))
            triples.add((r.g2, ti, 0, gB))
    # resumption after a park: segment j starts where switch j-1 waited
    for r in sorted(set(model.resume), key=lambda r: symkey(tuple(r))):
        for ti, t in enumerate(types):
            for j in range(1, K + 1):
                if t.switches[j - 1][1] != r.top or t.switches[j - 1][2] != r.g2:
                    continue
                gB = seg_end(t, j)
                dst = tri(r.g2, bst(ti, j, w[0]), gB)
                edges.append((r.g, ("delta", ZEROV), dst))
                triples.add((r.g2, ti, j, gB))
    # walk episodes per materialized (entry global, type, segment)
    for gA, ti, j, gB in sorted(triples, key=lambda x: symkey((x[0], x[2], x[3], x[1]))):
        t = types[ti]
        if j == 0:
            src = tri(gA, bst(ti, 0, WEPS), gB)
            dst = tri(gA, bst(ti, 0, w[0]), gB)
            edges.append((src, ("inflate", bst(ti, 0, w[0]), sls[ti]), dst))
        for i in range(last):
            src = tri(gA, bst(ti, j, w[i]), gB)
            dst = tri(gA, bst(ti, j, w[i + 1]), gB)
            op = ("deflate", bst(ti, j, w[i]), bst(ti, j, w[i + 1]), (w[i], j), w[i])
            edges.append((src, op, dst))
        src = tri(gA, bst(ti, j, w[last]), gB)
        if j < K:
            op = ("deflate", bst(ti, j, w[last]), bst(ti, j + 1, w[0]), (w[last], j), w[last])
            edges.append((src, op, gB))
        else:
            bot = tri(gA, BOTB, gB)
            op = ("deflate", bst(ti, K, w[last]), BOTB, (w[last], K), w[last])
            edges.append((src, op, bot))
            edges.append((bot, ("burst", BOTB), gB))

    out = VassbModel(states, list(model.stack), bstates, bplaces, edges)
    out.thread_types = types
    out.sl_table = sls
    return out, Q0


# ---------------------------------------------------------------------------
# Deciding progressive-run existence
# ---------------------------------------------------------------------------


def find_witness(m, s0, sampling_bound=2, search_nodes=20000):
    """Bounded breadth-first search for a validated witness from s0.

    Candidate pairs are ancestor/descendant configurations on the search
    tree that hold only empty balloons and compare under the
    pseudoconfiguration order; every candidate is re-validated against
    the literal witness conditions before being returned.
    """
    c0 = VassbConfig(s0.state, s0.marking, Multiset())
    parent = {c0: None}
    queue = deque([c0])
    expanded = 0

    def path_pairs(node):
        pairs = []
        while parent[node] is not None:
            prev, pei, pch = parent[node]
            pairs.append((pei, pch))
            node = prev
        pairs.reverse()
        return pairs

    while queue:
        c = queue.popleft()
        base = None
        for ei, choice, succ in vassb_step(m, c, sampling_bound):
            expanded += 1
            if expanded > search_nodes:
                return None
            if all(not kont for _sig, kont in succ.balloons):
                # candidate cycle end: look for a dominated checkpoint on
                # the path, before the visited-set pruning discards loops
                if base is None:
                    base = path_pairs(c)
                pairs = base + [(ei, choice)]
                run = _chain_to_run(m, c0, pairs)
                trace = run.replay()
                v = len(pairs)
                pv = pseudoconfig(run.config_at(v, trace))
                for u in range(v):
                    if any(kont for _sig, kont in trace[u][2].values()):
                        continue
                    if not pseudo_le(pseudoconfig(run.config_at(u, trace)), pv):
                        continue
                    a = frozenset().union(*(trace[k][1].support for k in range(u, v + 1)))
                    b = frozenset(sig for sig, _kont in trace[u][2].values())
                    wit = AbWitness(a, b, run, u, v)
                    if check_ab_witness(wit, m) == ("valid",):
                        return wit
            if succ not in parent:
                parent[succ] = (c, ei, choice)
                queue.append(succ)
    return None


def _chain_to_run(m, c0, pairs):
    """Turn a plain-configuration step chain into a run with identities by
    always acting on the least id that matches the chosen balloon."""
    steps = []
    bal = {}
    for pos, (ei, choice) in enumerate(pairs, start=1):
        e = m.edges[ei]
        kind = e.op[0]
        if kind == "delta":
            steps.append(("delta", ei))
        elif kind == "inflate":
            steps.append(("inflate", ei, choice))
            bal[pos] = (e.op[1], choice)
        elif kind == "deflate":
            bid = min(i for i, sk in bal.items() if sk == choice)
            _k, _s1, s2, bp, _p = e.op
            kont = bal[bid][1]
            moved = kont[bp]
            bal[bid] = (s2, kont - Multiset({bp: moved}) if moved else kont)
            steps.append(("deflate", ei, bid))
        else:
            bid = min(i for i, sk in bal.items() if sk == choice)
            del bal[bid]
            steps.append(("burst", ei, bid))
    return RunWithId(m, c0, steps)


def _strong_components(arcs):
    """state -> component id for the digraph of (src, dst, ...) arcs."""
    adj = {}
    nodes = set()
    for a in arcs:
        adj.setdefault(a[0], []).append(a[1])
        nodes.add(a[0])
        nodes.add(a[1])
    index, low, comp = {}, {}, {}
    counter = 0
    ncomp = 0
    stack, on_stack = [], set()
    for root in nodes:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(adj.get(root, ())))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
    return comp


def circulation_refutes_progressive(vm, init_state, lp_limit=240):
    """True when the VASS provably has no infinite run in which every
    produced token is eventually consumed; extended edges are exact.

    The edges used infinitely often in such a run form a strongly
    connected set carrying a rational circulation with nonnegative net
    effect that consumes every place it produces, and the finite walk
    leading to it from the initial state discharges its own production.
    Syntactic pruning (cycle membership, producer and consumer closure,
    all per component), a prefix co-reachability check, and an
    exact-rational feasibility check refute the existence of any such
    set.  False means only that nothing was refuted.
    """
    arcs = []  # (src, dst, delta, signed period vectors)
    for e in vm.edges:
        arcs.append((e.src, e.dst, e.delta, ()))
    for e in vm.extended:
        sign = 1 if e.op == "+" else -1
        base = IntVector.from_multiset(e.lin.base, sign)
        pers = tuple(IntVector.from_multiset(p, sign) for p in e.lin.periods)
        arcs.append((e.src, e.dst, base, pers))
    adj = {}
    for a in arcs:
        adj.setdefault(a[0], []).append(a[1])
    seen = {init_state}
    st = [init_state]
    while st:
        for w in adj.get(st.pop(), ()):
            if w not in seen:
                seen.add(w)
                st.append(w)
    E = [(a, set(range(len(a[3])))) for a in arcs if a[0] in seen]
    # the infinitely-recurring edge set lives inside one strongly connected
    # component and must both produce and consume there, so every pruning
    # pass is per component, recursing when a component splits
    work = [E]
    stable = []
    while work:
        cur = work.pop()
        if not cur:
            continue
        comp = _strong_components([a for a, _pj in cur])
        groups = {}
        for a, pj in cur:
            if comp[a[0]] == comp[a[1]]:
                groups.setdefault(comp[a[0]], []).append((a, pj))
        split = len(groups) > 1 or sum(len(g) for g in groups.values()) < len(cur)
        if split:
            work.extend(groups.values())
            continue
        consumed = set()
        for a, pj in cur:
            for p, c in a[2].items():
                if c < 0:
                    consumed.add(p)
            for j in pj:
                for p, c in a[3][j].items():
                    if c < 0:
                        consumed.add(p)

        def produces_undischargeable(vec):
            return any(c > 0 and p not in consumed for p, c in vec.items())

        changed = False
        kept = []
        for a, pj in cur:
            if produces_undischargeable(a[2]):
                changed = True
                continue
            pj2 = {j for j in pj if not produces_undischargeable(a[3][j])}
            if pj2 != pj:
                changed = True
            kept.append((a, pj2))
        cur = kept
        if not changed:
            produced = set()
            for a, pj in cur:
                for p, c in a[2].items():
                    if c > 0:
                        produced.add(p)
                for j in pj:
                    for p, c in a[3][j].items():
                        if c > 0:
                            produced.add(p)
            kept = [(a, pj) for a, pj in cur
                    if not any(c < 0 and p not in produced for p, c in a[2].items())]
            if len(kept) != len(cur):
                changed = True
            cur = kept
        if changed:
            work.append(cur)
        else:
            stable.append(cur)
    def prefix_refutes(group):
        # a run recurring only in this component starts with a finite walk
        # from the initial state; every arc of the walk leads on to the
        # component and has its produced tokens consumed by later arcs.
        # Iterate co-reachability with discharge pruning over all reachable
        # arcs; if the component becomes unreachable no such run exists.
        gids = {id(a) for a, _pj in group}
        R = [(a, set(pj)) for a, pj in E]
        while True:
            targets = {a[0] for a, pj in R if id(a) in gids}
            if not targets:
                return True
            coreach = set(targets)
            radj = {}
            for a, _pj in R:
                radj.setdefault(a[1], []).append(a[0])
            frontier = list(targets)
            while frontier:
                q = frontier.pop()
                for p in radj.get(q, ()):
                    if p not in coreach:
                        coreach.add(p)
                        frontier.append(p)
            kept = [(a, pj) for a, pj in R if a[1] in coreach]
            changed = len(kept) != len(R)
            R = kept
            consumed = set()
            for a, pj in R:
                for p, c in a[2].items():
                    if c < 0:
                        consumed.add(p)
                for j in pj:
                    for p, c in a[3][j].items():
                        if c < 0:
                            consumed.add(p)

            def undischarged(vec):
                return any(c > 0 and p not in consumed for p, c in vec.items())

            kept = []
            for a, pj in R:
                if undischarged(a[2]):
                    changed = True
                    continue
                pj2 = {j for j in pj if not undischarged(a[3][j])}
                if pj2 != pj:
                    changed = True
                kept.append((a, pj2))
            R = kept
            if not changed:
                break
        targets = {a[0] for a, pj in R if id(a) in gids}
        if not targets:
            return True
        fwd = {}
        for a, _pj in R:
            fwd.setdefault(a[0], []).append(a[1])
        hit = {init_state}
        frontier = [init_state]
        while frontier:
            q = frontier.pop()
            if q in targets:
                return False
            for w in fwd.get(q, ()):
                if w not in hit:
                    hit.add(w)
                    frontier.append(w)
        return True

    for group in stable:
        if prefix_refutes(group):
            continue
        nvar = len(group) + sum(len(pj) for _a, pj in group)
        if nvar > lp_limit:
            return False
        cols = [("f", gi) for gi in range(len(group))]
        for gi, (_a, pj) in enumerate(group):
            cols += [("g", gi, j) for j in sorted(pj)]
        col_ix = {c: i for i, c in enumerate(cols)}
        states = sorted({a[0] for a, _pj in group} | {a[1] for a, _pj in group}, key=symkey)
        places = sorted(
            {p for a, _pj in group for p in a[2].support}
            | {p for a, pj in group for j in pj for p in a[3][j].support},
            key=symkey,
        )
        A, b = [], []

        def add_eq(row, rhs):
            A.append(row)
            b.append(rhs)
            A.append([-v for v in row])
            b.append(-rhs)

        for q in states:
            row = [0] * len(cols)
            for gi, (a, _pj) in enumerate(group):
                if a[0] == q:
                    row[col_ix[("f", gi)]] += 1
                if a[1] == q:
                    row[col_ix[("f", gi)]] -= 1
            add_eq(row, 0)
        for p in places:
            row = [0] * len(cols)  # -net <= 0, i.e. net >= 0
            for gi, (a, pj) in enumerate(group):
                row[col_ix[("f", gi)]] -= a[2][p]
                for j in pj:
                    row[col_ix[("g", gi, j)]] -= a[3][j][p]
            A.append(row)
            b.append(0)
        row = [0] * len(cols)
        for gi in range(len(group)):
            row[col_ix[("f", gi)]] = 1
        add_eq(row, 1)
        if lp_feasible(A, b):
            return False
    return True


def vassb_trim(m, init_state):
    """Drop control states, balloon states, and edges unusable from the
    given initial control state.

    Graph-level fixpoint: deltas and inflates are treated as always
    enabled, deflates and bursts additionally need a producible balloon
    state.  Every run from the initial state uses only what is kept, so
    all questions asked from it are preserved.
    """
    by_src = {}
    for e in m.edges:
        by_src.setdefault(e.src, []).append(e)
    live = set()
    reach = {init_state}
    live_edges = []
    changed = True
    while changed:
        changed = False
        seen = {init_state}
        stack = [init_state]
        enabled = []
        while stack:
            q = stack.pop()
            for e in by_src.get(q, ()):
                k = e.op[0]
                if k in ("deflate", "burst") and e.op[1] not in live:
                    continue
                enabled.append(e)
                if k == "inflate" and e.op[1] not in live:
                    live.add(e.op[1])
                    changed = True
                if k == "deflate" and e.op[2] not in live:
                    live.add(e.op[2])
                    changed = True
                if e.dst not in seen:
                    seen.add(e.dst)
                    stack.append(e.dst)
        reach = seen
        live_edges = enabled
    states = [s for s in m.states if s in reach]
    bsts = [s for s in m.balloon_states if s in live]
    if not bsts and m.balloon_states:
        bsts = [m.balloon_states[0]]  # model invariants want one around
    out = VassbModel(states, m.places, bsts, m.balloon_places,
                     [(e.src, e.op, e.dst) for e in live_edges])
    for attr in ("thread_types", "sl_table"):
        if hasattr(m, attr):
            setattr(out, attr, getattr(m, attr))
    return out


def drop_unusable_components(m, init_state):
    """Remove inflate-set components no progressive run can use.

    A progressive run bursts every balloon it inflates and consumes every
    token it produces.  A component is unusable when its base fills a
    content place the balloon cannot avoid releasing before any burst,
    with every possible release landing on a marking place nothing in the
    model ever consumes.  Dropping such components (and inflates left
    empty) preserves exactly the progressive runs; the model is
    re-trimmed until stable.
    """
    while True:
        m = vassb_trim(m, init_state)
        consumed = set()
        succ = {}
        burstable = set()
        for e in m.edges:
            if e.op[0] == "delta":
                for p, c in e.op[1].items():
                    if c < 0:
                        consumed.add(p)
            elif e.op[0] == "deflate":
                succ.setdefault(e.op[1], []).append((e.op[3], e.op[4], e.op[2]))
            elif e.op[0] == "burst":
                burstable.add(e.op[1])

        def unusable(s, base):
            for bp, cnt in base.items():
                if cnt <= 0:
                    continue
                # states reachable from s without releasing bp, and the
                # marking places a first release of bp could land on
                hit = {s}
                frontier = [s]
                first = []
                saw_burst = False
                while frontier and not saw_burst:
                    x = frontier.pop()
                    if x in burstable:
                        saw_burst = True
                        break
                    for bp2, p2, y in succ.get(x, ()):
                        if bp2 == bp:
                            first.append(p2)
                        elif y not in hit:
                            hit.add(y)
                            frontier.append(y)
                if saw_burst:
                    continue
                if all(p2 not in consumed for p2 in first):
                    return True
            return False

        edges = []
        changed = False
        for e in m.edges:
            if e.op[0] != "inflate":
                edges.append((e.src, e.op, e.dst))
                continue
            kept = [c for c in e.op[2].components if not unusable(e.op[1], c.base)]
            if len(kept) == len(e.op[2].components):
                edges.append((e.src, e.op, e.dst))
                continue
            changed = True
            if kept:
                edges.append((e.src, ("inflate", e.op[1], SemilinearSet(kept)), e.dst))
        if not changed:
            return m
        out = VassbModel(m.states, m.places, m.balloon_states, m.balloon_places, edges)
        for attr in ("thread_types", "sl_table"):
            if hasattr(m, attr):
                setattr(out, attr, getattr(m, attr))
        m = out


def decide_progressive(
    m,
    s0,
    sampling_bound=2,
    search_nodes=20000,
    km_nodes=200_000,
    bfs_nodes=200_000,
    n_budget=2,
    ab_limit=6,
    state_budget=100_000,
    transform_cap=20000,
):
    """Three-valued progressive-run decision for a balloon machine.

    Positive answers are validated witnesses found on the burst-closed
    zero-base typed model.  Complete negatives come either from a
    terminating balloon-count abstraction or from exhausting every
    candidate obligation pair (A, B) with a complete unreachable on the
    reduced plain-VASS query.  Budget exhaustion anywhere degrades only
    to unknown.  The report carries the sound per-state balloon bound and
    flags when the configured budget n_budget falls short of it.
    """
    if s0.balloons:
        raise ValueError("decide_progressive starts from a semiconfiguration")
    m = drop_unusable_components(m, s0.state)
    bound = balloon_bound_N(len(m.balloon_places), max(len(m.balloon_states), 1))
    notes = {
        "balloon_bound_N": bound.to_json(),
        "n_budget": n_budget,
        "n_budget_sound": n_budget >= bound.value,
    }

    # complete-negative shortcuts on the balloon-count abstraction: either
    # it terminates outright, or no circulation discharging every produced
    # token exists (no progressive run can project to it)
    absraw = balloon_count_abstraction(m)
    absm = expand_extended(absraw)
    try:
        r = vass_decide_nontermination(absm, VassConfig(s0.state, s0.marking), budget=km_nodes)
        if r["status"] == "terminates":
            return {
                "status": "none",
                "method": "balloon-count abstraction terminates",
                "notes": notes,
            }
    except BudgetExceeded:
        pass
    if circulation_refutes_progressive(absraw, s0.state):
        return {
            "status": "none",
            "method": "no dischargeable circulation in the balloon-count abstraction",
            "notes": notes,
        }

    try:
        mb = burst_closure(zero_base_transform(typed_extension(m, cap=transform_cap)))
    except BudgetExceeded:
        return {"status": "unknown", "reason": "preprocessing budget exceeded", "notes": notes}

    wit = find_witness(mb, s0, sampling_bound=sampling_bound, search_nodes=search_nodes)
    if wit is not None:
        return {"status": "progressive_run", "witness": wit, "model": mb, "notes": notes}

    # candidate obligation pairs, pruned by coverability of the abstraction
    absb = expand_extended(balloon_count_abstraction(mb))
    from .vass import km_tree

    try:
        nodes = km_tree(absb, VassConfig(s0.state, s0.marking), budget=km_nodes)
    except BudgetExceeded:
        return {"status": "unknown", "reason": "coverability budget exceeded", "notes": notes}
    coverable = set()
    for nd in nodes:
        coverable |= set(nd.marking)
    neg_places = {p for e in mb.edges if e.op[0] == "delta" for p in e.op[1].negatives()}
    op_states = {e.op[1] for e in mb.edges if e.op[0] in ("deflate", "burst")}
    a_cand = sorted((p for p in mb.places if p in coverable and p in neg_places), key=symkey)
    b_cand = sorted(
        (s for s in mb.balloon_states if ("bst", s) in coverable and s in op_states), key=symkey
    )
    if len(a_cand) + len(b_cand) > ab_limit:
        return {
            "status": "unknown",
            "reason": f"candidate pair space too large ({len(a_cand)}+{len(b_cand)} symbols)",
            "notes": notes,
        }
    pairs = [
        (frozenset(ac), frozenset(bc))
        for na in range(len(a_cand) + 1)
        for nb in range(len(b_cand) + 1)
        for ac in combinations(a_cand, na)
        for bc in combinations(b_cand, nb)
    ]
    pairs.sort(key=lambda ab: (len(ab[0]) + len(ab[1]), sorted(map(symkey, ab[0])), sorted(map(symkey, ab[1]))))
    for a, b in pairs:
        try:
            vt, init, target = build_VT(mb, a, b, s0, cap=transform_cap * 100)
            vt2 = zero_base_transform(typed_extension(vt, cap=transform_cap))
            rv = vassb_reach_to_vass(vt2, n_budget, init, target, state_budget=state_budget)
        except BudgetExceeded:
            return {"status": "unknown", "reason": "per-pair construction budget", "notes": notes}
        if not rv.complete:
            return {"status": "unknown", "reason": "reduction state budget", "notes": notes}
        res = reach_oracle(rv.vass, rv.init, rv.target, bfs_nodes=bfs_nodes, km_nodes=km_nodes)
        if res["status"] != "unreachable":
            return {
                "status": "unknown",
                "reason": f"pair (|A|={len(a)}, |B|={len(b)}) not refuted ({res['status']})",
                "notes": notes,
            }
    return {"status": "none", "method": "all candidate pairs refuted", "notes": notes}
