"""Vector addition systems with states: semantics, a non-termination
decision, a three-valued reachability oracle, and the reductions from
dynamic pushdown networks through finite-state networks to VASS.

The non-termination decision rests on two classical facts.  Any infinite
run contains, by Dickson's lemma, two configurations with equal state and
componentwise-ordered markings, so a depth-first search that stops each
branch at such a pair is complete; and the same monotonicity makes the
found pair a pumpable certificate.  The reachability oracle never guesses:
it answers reachable only with a replayable path and unreachable only with
a complete pruning argument, and says unknown otherwise.
"""

from collections import deque, namedtuple

from .foundations import (
    BudgetExceeded,
    IntVector,
    LinearSet,
    Multiset,
    symkey,
)
from .automata import Nfa, downward_closure_nfa
from .dcps import Dcps, SCHED, letter_kind, segment_language

EPS = ("eps",)


VassEdge = namedtuple("VassEdge", ["src", "delta", "dst"])
ExtendedEdge = namedtuple("ExtendedEdge", ["src", "op", "lin", "dst"])
VassConfig = namedtuple("VassConfig", ["state", "marking"])


class VassModel:
    """VASS with optional extended edges that add or subtract a
    nondeterministically chosen member of a linear set."""

    def __init__(self, states, places, edges, extended=()):
        self.states = list(states)
        self.places = list(places)
        self.edges = [VassEdge(*e) for e in edges]
        self.extended = [ExtendedEdge(*e) for e in extended]
        sset, pset = set(self.states), set(self.places)
        for e in self.edges:
            assert e.src in sset and e.dst in sset, e
            assert set(e.delta.support) <= pset, e
        for e in self.extended:
            assert e.src in sset and e.dst in sset, e
            assert e.op in ("+", "-"), e

    def to_json(self):
        from .dcps import _sym_to_json

        def places_json(m):
            return {symkey(p): c for p, c in sorted(m.items(), key=lambda kv: symkey(kv[0]))}

        return {
            "states": [_sym_to_json(s) for s in self.states],
            "places": [_sym_to_json(p) for p in self.places],
            "edges": [
                {"from": _sym_to_json(e.src), "to": _sym_to_json(e.dst),
                 "delta": e.delta.to_json()}
                for e in self.edges
            ],
            "extended": [
                {"from": _sym_to_json(e.src), "to": _sym_to_json(e.dst),
                 "op": e.op,
                 "set": {"base": places_json(e.lin.base),
                         "periods": [places_json(p) for p in e.lin.periods]}}
                for e in self.extended
            ],
        }

    @classmethod
    def from_json(cls, data):
        from .dcps import _sym_from_json

        states = [_sym_from_json(s) for s in data["states"]]
        places = [_sym_from_json(p) for p in data["places"]]
        by_key = {symkey(p): p for p in places}

        def vec(d):
            return IntVector({by_key[k]: c for k, c in d.items()})

        def mset(d):
            return Multiset({by_key[k]: c for k, c in d.items()})

        edges = [
            (_sym_from_json(e["from"]), vec(e["delta"]), _sym_from_json(e["to"]))
            for e in data["edges"]
        ]
        extended = [
            (_sym_from_json(e["from"]), e["op"],
             LinearSet(mset(e["set"]["base"]),
                       [mset(p) for p in e["set"]["periods"]]),
             _sym_from_json(e["to"]))
            for e in data.get("extended", ())
        ]
        return cls(states, places, edges, extended)


def vass_step(model, c, sampling_bound=None):
    """Successors of a configuration as (edge, successor) pairs.

    Extended edges are only enumerated when a sampling bound is given
    (replay mode, member total token count up to the bound); decision
    procedures must expand them to gadget states first."""
    out = []
    for e in model.edges:
        if e.src != c.state:
            continue
        m = e.delta.apply(c.marking)
        if m is not None:
            out.append((e, VassConfig(e.dst, m)))
    if model.extended and sampling_bound is not None:
        for e in model.extended:
            if e.src != c.state:
                continue
            for member in _linear_members(e.lin, sampling_bound):
                delta = IntVector.from_multiset(member, 1 if e.op == "+" else -1)
                m = delta.apply(c.marking)
                if m is not None:
                    out.append((e, VassConfig(e.dst, m)))
    return out


def _linear_members(lin, bound):
    """Members of the linear set with total token count <= bound."""
    def total(m):
        return sum(c for _s, c in m.items())

    seen = {lin.base}
    frontier = [lin.base]
    while frontier:
        nxt = []
        for m in frontier:
            for p in lin.periods:
                m2 = m + p
                if total(m2) <= bound and total(m2) > total(m) and m2 not in seen:
                    seen.add(m2)
                    nxt.append(m2)
        frontier = nxt
    out = [m for m in seen if total(m) <= bound]
    return sorted(out, key=lambda m: sorted((symkey(s), c) for s, c in m.items()))


def expand_extended(model):
    """Replace extended edges by plain gadgets: apply the base on entry,
    loop once per period, then exit."""
    states = list(model.states)
    edges = list(model.edges)
    for idx, e in enumerate(model.extended):
        sign = 1 if e.op == "+" else -1
        mid = ("xgadget", idx)
        states.append(mid)
        edges.append(VassEdge(e.src, IntVector.from_multiset(e.lin.base, sign), mid))
        for p in e.lin.periods:
            edges.append(VassEdge(mid, IntVector.from_multiset(p, sign), mid))
        edges.append(VassEdge(mid, IntVector(), e.dst))
    return VassModel(states, model.places, edges)


def replay_path(model, c0, path):
    """Apply a sequence of edge indices; returns the configuration sequence
    or None when a step is disabled."""
    configs = [c0]
    for i in path:
        e = model.edges[i]
        if e.src != configs[-1].state:
            return None
        m = e.delta.apply(configs[-1].marking)
        if m is None:
            return None
        configs.append(VassConfig(e.dst, m))
    return configs


def decide_nontermination(model, c0, budget=1_000_000):
    """Whether an infinite run exists from c0.

    Depth-first search over exact configurations; a branch that reaches a
    configuration dominating an earlier one on the same branch (equal
    state) is a pumpable lasso, and every branch provably reaches such a
    pair or dies, so the search is a decision procedure.  Returns a dict
    with status and, for infinite runs, a replayable (prefix, cycle)
    certificate of edge indices."""
    if model.extended:
        raise ValueError("expand extended edges before deciding")
    edge_index = {id(e): i for i, e in enumerate(model.edges)}
    done = set()
    expanded = 0
    # on_path indexes the current branch by state for the domination test
    on_path = {c0.state: [(0, c0.marking)]}
    stack = [(c0, iter(vass_step(model, c0)))]
    steps = [None]
    while stack:
        c, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            steps.pop()
            on_path[c.state].pop()
            done.add(c)
            continue
        e, succ = nxt
        expanded += 1
        if expanded > budget:
            raise BudgetExceeded("nontermination search")
        for depth, marking in on_path.get(succ.state, ()):
            if marking <= succ.marking:
                prefix = [edge_index[id(s)] for s in steps[1:depth + 1]]
                cycle = [edge_index[id(s)] for s in steps[depth + 1:]]
                cycle.append(edge_index[id(e)])
                return {"status": "infinite_run",
                        "certificate": {"prefix": prefix, "cycle": cycle}}
        if succ in done or any(c2 == succ for c2, _ in stack):
            continue
        on_path.setdefault(succ.state, []).append((len(stack), succ.marking))
        stack.append((succ, iter(vass_step(model, succ))))
        steps.append(e)
    return {"status": "terminates", "certificate": None}


OMEGA = float("inf")


class KmNode:
    """Coverability tree node; marking entries may be the omega symbol,
    introduced only by strict ancestor domination."""

    __slots__ = ("state", "marking", "parent", "edge")

    def __init__(self, state, marking, parent, edge):
        self.state = state
        self.marking = marking  # dict place -> int or OMEGA
        self.parent = parent
        self.edge = edge

    def ancestors(self):
        n = self.parent
        while n is not None:
            yield n
            n = n.parent

    def covers(self, marking):
        return all(self.marking.get(p, 0) >= c for p, c in marking.items())


def km_tree(model, c0, budget=1_000_000):
    """Karp-Miller coverability tree with classical strict-ancestor
    acceleration.  Branches stop when covered by an ancestor or exactly
    repeating a previously expanded node."""
    if model.extended:
        raise ValueError("expand extended edges before building the tree")
    root = KmNode(c0.state, dict(c0.marking.items()), None, None)
    nodes = [root]
    queue = deque([root])
    expanded_keys = set()
    count = 0
    while queue:
        n = queue.popleft()
        key = (n.state, tuple(sorted(n.marking.items(), key=lambda kv: symkey(kv[0]))))
        if key in expanded_keys:
            continue
        if any(a.state == n.state and a.covers(n.marking) for a in n.ancestors()):
            continue
        expanded_keys.add(key)
        for e in model.edges:
            if e.src != n.state:
                continue
            m = dict(n.marking)
            ok = True
            for p, d in e.delta.items():
                v = m.get(p, 0) + d
                if v < 0:
                    ok = False
                    break
                m[p] = v
            if not ok:
                continue
            m = {p: v for p, v in m.items() if v}
            child = KmNode(e.dst, m, n, e)
            for a in child.ancestors():
                if a.state == child.state and _km_le(a.marking, m) and a.marking != m:
                    for p in set(m) | set(a.marking):
                        if m.get(p, 0) > a.marking.get(p, 0):
                            m[p] = OMEGA
            count += 1
            if count > budget:
                raise BudgetExceeded("coverability tree")
            nodes.append(child)
            queue.append(child)
    return nodes


def _km_le(a, b):
    return all(b.get(p, 0) >= c for p, c in a.items())


def reach_oracle(model, c0, target, bfs_nodes=1_000_000, km_nodes=1_000_000,
                 place_cutoff=64):
    """Three-valued reachability: {"status": "reachable", "path": edge
    indices} | {"status": "unreachable"} | {"status": "unknown"}."""
    work = expand_extended(model) if model.extended else model
    edge_index = {id(e): i for i, e in enumerate(work.edges)}
    seen = {c0: []}
    queue = deque([c0])
    truncated = False
    while queue:
        c = queue.popleft()
        if c == target:
            path = seen[c]
            if model.extended:
                return {"status": "reachable", "path": None}
            return {"status": "reachable", "path": path}
        for e, succ in vass_step(work, c):
            if succ in seen:
                continue
            if any(v > place_cutoff for _p, v in succ.marking.items()):
                truncated = True
                continue
            if len(seen) >= bfs_nodes:
                truncated = True
                continue
            seen[succ] = seen[c] + [edge_index[id(e)]]
            queue.append(succ)
    if not truncated:
        return {"status": "unreachable"}
    try:
        nodes = km_tree(work, c0, budget=km_nodes)
    except BudgetExceeded:
        return {"status": "unknown"}
    tmark = dict(target.marking.items())
    covered = any(n.state == target.state and n.covers(tmark) for n in nodes)
    if not covered:
        return {"status": "unreachable"}
    return {"status": "unknown"}


# ---------------------------------------------------------------------------
# DCPS -> DCFS: per-thread behavior closures composed into a stack-free model
# ---------------------------------------------------------------------------


def _thread_alphabet(model):
    letters = set(model.stack)
    for g2 in model.globals:
        letters.add(("fin", g2))
        for g3 in model.globals:
            for gam in model.stack:
                letters.add(("jmp", g2, gam, g3))
    return letters


def _segment_shape_nfa(alphabet, i):
    """Words with exactly i-1 interrupt letters, spawns in between, and a
    single trailing completion letter."""
    states = list(range(i + 1))
    edges = []
    for j in range(i):
        for a in alphabet:
            kind = letter_kind(a)
            if kind == "spawn":
                edges.append((j, a, j))
            elif kind == "jump" and j < i - 1:
                edges.append((j, a, j + 1))
            elif kind == "final" and j == i - 1:
                edges.append((j, a, i))
    return Nfa(states, alphabet, edges, 0, {i})


def behavior_nfa(model, g, gamma, K):
    """Downward closure of the thread's completed behaviors, one shape per
    segment count so interrupt and completion letters are never dropped."""
    alphabet = _thread_alphabet(model)
    parts = []
    for i in range(1, K + 2):
        seg = segment_language(model, g, gamma, i)
        closure = downward_closure_nfa(seg)
        widened = Nfa(closure.states, alphabet, closure.edges,
                      closure.initial, closure.finals)
        part = nfa_product_wide(widened, _segment_shape_nfa(alphabet, i))
        empty, _w = part.is_empty()
        if not empty:
            parts.append(part)
    if not parts:
        return Nfa.empty_language(alphabet)
    states = [("u",)]
    edges = []
    finals = set()
    for i, part in enumerate(parts):
        states.extend((i, q) for q in part.states)
        edges.append((("u",), None, (i, part.initial)))
        edges.extend(((i, p), a, (i, q)) for p, a, q in part.edges)
        finals.update((i, q) for q in part.finals)
    return Nfa(states, alphabet, edges, ("u",), finals).trim().canonical()


def nfa_product_wide(a, b):
    from .automata import nfa_product

    if a.alphabet != b.alphabet:
        union = a.alphabet | b.alphabet
        a = Nfa(a.states, union, a.edges, a.initial, a.finals)
        b = Nfa(b.states, union, b.edges, b.initial, b.finals)
    return nfa_product(a, b)


def dcps_to_dcfs(model, K):
    """Stack-free model (every stack word has height at most one) whose
    K-bounded non-termination agrees with the input's.

    Each dispatched thread walks a finite automaton for the downward
    closure of its completed behaviors; spawned threads may be dropped,
    which is what makes the closure sound.  Interrupt letters carry the
    handed-back global, the recorded top symbol, and the guessed
    resumption global, so the scheduler gluing is exact."""
    G = list(model.globals)
    nfas = {}
    for g in G:
        for gamma in model.stack:
            a = behavior_nfa(model, g, gamma, K)
            empty, _w = a.is_empty()
            if not empty:
                nfas[(g, gamma)] = a

    def nsym(g, gamma, q):
        return ("n", g, gamma, q)

    def wsym(top, g3, g, gamma, q):
        return ("w", top, g3, g, gamma, q)

    create, interrupt, resume, terminate = [], [], [], []
    stack = list(model.stack)
    accepting = {}
    for (g, gamma), a in nfas.items():
        acc = {q for q in a.states if a.eps_closure({q}) & a.finals}
        accepting[(g, gamma)] = acc
        stack.extend(nsym(g, gamma, q) for q in a.states)
        create.append((g, gamma, g, (nsym(g, gamma, a.initial),), None))
        for p, letter, q in a.edges:
            kind = None if letter is None else letter_kind(letter)
            if kind == "spawn":
                for gg in G:
                    create.append((gg, nsym(g, gamma, p), gg,
                                   (nsym(g, gamma, q),), letter))
            elif kind is None:
                for gg in G:
                    create.append((gg, nsym(g, gamma, p), gg,
                                   (nsym(g, gamma, q),), None))
            elif kind == "final":
                _fin, g2 = letter
                if q in acc:
                    for gg in G:
                        create.append((gg, nsym(g, gamma, p), g2, (), None))
            elif kind == "jump":
                _jmp, g2, top, g3 = letter
                w = wsym(top, g3, g, gamma, q)
                if w not in stack:
                    stack.append(w)
                for gg in G:
                    interrupt.append((gg, nsym(g, gamma, p), g2, (w,)))
                for gg in G:
                    create.append((gg, w, gg, (nsym(g, gamma, q),), None))
    wsyms = [s for s in stack if isinstance(s, tuple) and s[0] == "w"]
    for r in model.resume:
        resume.append((r.g, r.g2, r.top))
        for w in wsyms:
            if w[1] == r.top and w[2] == r.g2:
                resume.append((r.g, r.g2, w))
    for g in G:
        terminate.append((g, g))
    def dedup(rules):
        seen = set()
        return [r for r in rules if not (r in seen or seen.add(r))]

    return Dcps(G, stack, dedup(create), dedup(interrupt), dedup(resume),
                dedup(terminate), model.g0, model.gamma0)


def is_dcfs(model):
    """Stack height never exceeds one: creation pushes at most one symbol
    and interrupts push exactly one."""
    return (
        all(len(r.push) <= 1 for r in model.create)
        and all(len(r.push) == 1 for r in model.interrupt)
    )


def dcfs_to_vass(model, K):
    """VASS whose runs are in bijection with the K-bounded runs of a
    stack-free model.

    States track the global plus the active thread's symbol and switch
    count, or a scheduler marker; places count pending threads per symbol
    and switch count."""
    if not is_dcfs(model):
        raise ValueError("model is not stack-free")
    G, Gam = list(model.globals), list(model.stack)
    states = [(g, SCHED) for g in G]
    for g in G:
        for gamma in Gam + [EPS]:
            for i in range(K + 1):
                states.append((g, gamma, i))
    places = [(gamma, i) for gamma in Gam + [EPS] for i in range(K + 2)]
    edges = []
    for r in model.create:
        tgt = r.push[0] if r.push else EPS
        for i in range(K + 1):
            delta = IntVector({(r.spawn, 0): 1}) if r.spawn else IntVector()
            edges.append(VassEdge((r.g, r.top, i), delta, (r.g2, tgt, i)))
    for r in model.interrupt:
        for i in range(K + 1):
            edges.append(VassEdge(
                (r.g, r.top, i),
                IntVector({(r.push[0], i + 1): 1}),
                (r.g2, SCHED),
            ))
    for r in model.resume:
        for i in range(K + 1):
            edges.append(VassEdge(
                (r.g, SCHED),
                IntVector({(r.top, i): -1}),
                (r.g2, r.top, i),
            ))
    for r in model.terminate:
        for i in range(K + 1):
            edges.append(VassEdge((r.g, EPS, i), IntVector(), (r.g2, SCHED)))
    vass = VassModel(states, places, edges)
    init = VassConfig((model.g0, SCHED), Multiset.of((model.gamma0, 0)))
    return vass, init
