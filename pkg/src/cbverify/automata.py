"""Finite automata, pushdown automata, and automata with multiset output.

Provides the constructions the reductions need: products, emptiness,
Parikh images, downward-closure NFAs, and the rational machinery for
pushdown automata with output (stack/production pairs).

Words are tuples of letters; letters are arbitrary hashable symbols.
"""

from __future__ import annotations

from collections import deque
from typing import Any, Iterable

from .foundations import (
    EMPTY,
    BudgetExceeded,
    LinearSet,
    Multiset,
    SemilinearSet,
    symkey,
)


def _sorted_syms(syms):
    return sorted(syms, key=symkey)


class Nfa:
    """Nondeterministic finite automaton with epsilon edges (letter None)."""

    def __init__(self, states, alphabet, edges, initial, finals):
        self.states = list(states)
        self.alphabet = frozenset(alphabet)
        self.edges = list(edges)
        self.initial = initial
        self.finals = frozenset(finals)
        sset = set(self.states)
        assert initial in sset
        for p, a, q in self.edges:
            assert p in sset and q in sset, (p, a, q)
            assert a is None or a in self.alphabet, a
        self._succ = None
        self._eps = None

    def _successors(self):
        if self._succ is None:
            succ = {}
            for p, a, q in self.edges:
                succ.setdefault((p, a), set()).add(q)
            self._succ = succ
        return self._succ

    def eps_closure(self, qs) -> frozenset:
        succ = self._successors()
        seen = set(qs)
        stack = list(qs)
        while stack:
            q = stack.pop()
            for q2 in succ.get((q, None), ()):
                if q2 not in seen:
                    seen.add(q2)
                    stack.append(q2)
        return frozenset(seen)

    def accepts(self, word) -> bool:
        cur = self.eps_closure({self.initial})
        succ = self._successors()
        for a in word:
            nxt = set()
            for q in cur:
                nxt |= succ.get((q, a), set())
            cur = self.eps_closure(nxt)
            if not cur:
                return False
        return bool(cur & self.finals)

    def is_empty(self):
        """(empty?, shortest accepted word or None)."""
        succ = self._successors()
        start = self.initial
        seen = {start}
        queue = deque([(start, ())])
        letters = [None] + _sorted_syms(self.alphabet)
        while queue:
            q, w = queue.popleft()
            if q in self.finals:
                return False, w
            for a in letters:
                for q2 in succ.get((q, a), ()):
                    if q2 not in seen:
                        seen.add(q2)
                        queue.append((q2, w if a is None else w + (a,)))
        return True, None

    def enumerate_words(self, maxlen, budget=200000):
        """All accepted words of length <= maxlen (as a set of tuples)."""
        out = set()
        start = self.eps_closure({self.initial})
        seen = {(start, ())}
        queue = deque([(start, ())])
        succ = self._successors()
        steps = 0
        while queue:
            cur, w = queue.popleft()
            if cur & self.finals:
                out.add(w)
            if len(w) == maxlen:
                continue
            for a in _sorted_syms(self.alphabet):
                steps += 1
                if steps > budget:
                    raise BudgetExceeded("nfa word enumeration")
                nxt = set()
                for q in cur:
                    nxt |= succ.get((q, a), set())
                nxt = self.eps_closure(nxt)
                if nxt:
                    key = (nxt, w + (a,))
                    if key not in seen:
                        seen.add(key)
                        queue.append(key)
        return out

    def trim(self) -> "Nfa":
        succ = self._successors()
        fwd = {self.initial}
        queue = deque(fwd)
        adj = {}
        radj = {}
        for p, a, q in self.edges:
            adj.setdefault(p, set()).add(q)
            radj.setdefault(q, set()).add(p)
        while queue:
            q = queue.popleft()
            for q2 in adj.get(q, ()):
                if q2 not in fwd:
                    fwd.add(q2)
                    queue.append(q2)
        bwd = set(self.finals)
        queue = deque(bwd)
        while queue:
            q = queue.popleft()
            for q2 in radj.get(q, ()):
                if q2 not in bwd:
                    bwd.add(q2)
                    queue.append(q2)
        keep = (fwd & bwd) | {self.initial}
        return Nfa(
            [s for s in self.states if s in keep],
            self.alphabet,
            [(p, a, q) for p, a, q in self.edges if p in keep and q in keep],
            self.initial,
            self.finals & keep,
        )

    def canonical(self) -> "Nfa":
        """Renumber states in BFS order from the initial state."""
        order = {self.initial: 0}
        queue = deque([self.initial])
        adj = {}
        for p, a, q in self.edges:
            adj.setdefault(p, []).append((symkey(a) if a is not None else "", q))
        while queue:
            q = queue.popleft()
            for _, q2 in sorted(adj.get(q, []), key=lambda x: x[0]):
                if q2 not in order:
                    order[q2] = len(order)
                    queue.append(q2)
        for s in self.states:
            if s not in order:
                order[s] = len(order)
        return Nfa(
            sorted(order.values()),
            self.alphabet,
            sorted(
                ((order[p], a, order[q]) for p, a, q in self.edges),
                key=lambda e: (e[0], symkey(e[1]) if e[1] is not None else "", e[2]),
            ),
            0,
            {order[f] for f in self.finals},
        )

    def to_json(self):
        idx = {s: i for i, s in enumerate(self.states)}
        return {
            "states": len(self.states),
            "alphabet": [symkey(a) for a in _sorted_syms(self.alphabet)],
            "edges": [
                {"from": idx[p], "letter": None if a is None else symkey(a), "to": idx[q]}
                for p, a, q in self.edges
            ],
            "initial": idx[self.initial],
            "finals": sorted(idx[f] for f in self.finals),
        }

    @classmethod
    def for_word(cls, word, alphabet):
        states = list(range(len(word) + 1))
        edges = [(i, a, i + 1) for i, a in enumerate(word)]
        return cls(states, alphabet, edges, 0, {len(word)})

    @classmethod
    def universal(cls, alphabet):
        return cls([0], alphabet, [(0, a, 0) for a in _sorted_syms(alphabet)], 0, {0})

    @classmethod
    def empty_language(cls, alphabet):
        return cls([0], alphabet, [], 0, set())


def nfa_product(a: Nfa, b: Nfa, mode: str = "intersect") -> Nfa:
    """Synchronized product; L(result) = L(a) ∩ L(b)."""
    if mode != "intersect":
        raise ValueError(f"unsupported mode {mode!r}")
    if a.alphabet != b.alphabet:
        raise ValueError("alphabet mismatch")
    start = (a.eps_closure({a.initial}), b.eps_closure({b.initial}))
    asucc, bsucc = a._successors(), b._successors()
    states = {start}
    edges = []
    queue = deque([start])
    while queue:
        pa, pb = queue.popleft()
        for letter in _sorted_syms(a.alphabet):
            na = set()
            for q in pa:
                na |= asucc.get((q, letter), set())
            nb = set()
            for q in pb:
                nb |= bsucc.get((q, letter), set())
            na, nb = a.eps_closure(na), b.eps_closure(nb)
            if na and nb:
                tgt = (na, nb)
                if tgt not in states:
                    states.add(tgt)
                    queue.append(tgt)
                edges.append(((pa, pb), letter, tgt))
    finals = {(pa, pb) for pa, pb in states if (pa & a.finals) and (pb & b.finals)}
    return Nfa(states, a.alphabet, edges, start, finals).trim()


def nfa_emptiness(a: Nfa):
    """(is_empty, witness): witness is a shortest accepted word when non-empty."""
    return a.is_empty()


# ---------------------------------------------------------------------------
# Context-free grammars (internal representation backing the PDA constructions)
# ---------------------------------------------------------------------------

class Cfg:
    """Context-free grammar; nonterminals are exactly the production keys."""

    def __init__(self, productions: dict, start, budget=2_000_000):
        self.productions = {nt: [tuple(r) for r in rhss] for nt, rhss in productions.items()}
        self.start = start
        self.budget = budget
        self._ops = 0

    def _tick(self, n=1):
        self._ops += n
        if self._ops > self.budget:
            raise BudgetExceeded("grammar construction budget")

    def is_nonterminal(self, sym):
        return sym in self.productions

    def generating(self) -> set:
        # worklist over rule bodies: a body is satisfied once all its
        # distinct nonterminals are known generating
        gen = set()
        remaining = {}
        occurs = {}
        stack = []
        for nt, rhss in self.productions.items():
            for ri, rhs in enumerate(rhss):
                needed = {s for s in rhs if s in self.productions}
                if not needed:
                    if nt not in gen:
                        gen.add(nt)
                        stack.append(nt)
                else:
                    remaining[(nt, ri)] = len(needed)
                    for s in needed:
                        occurs.setdefault(s, []).append((nt, ri))
        while stack:
            s = stack.pop()
            for key in occurs.get(s, ()):
                remaining[key] -= 1
                if remaining[key] == 0 and key[0] not in gen:
                    gen.add(key[0])
                    stack.append(key[0])
        return gen

    def trim(self) -> "Cfg":
        gen = self.generating()
        if self.start not in gen:
            return Cfg({self.start: []}, self.start, self.budget)
        reach = {self.start}
        queue = deque([self.start])
        while queue:
            nt = queue.popleft()
            for rhs in self.productions.get(nt, []):
                if all((s not in self.productions) or (s in gen) for s in rhs):
                    for s in rhs:
                        if s in self.productions and s not in reach:
                            reach.add(s)
                            queue.append(s)
        prods = {}
        for nt in self.productions:
            if nt in reach and nt in gen:
                prods[nt] = [
                    rhs
                    for rhs in self.productions[nt]
                    if all((s not in self.productions) or (s in gen and s in reach) for s in rhs)
                ]
        return Cfg(prods, self.start, self.budget)

    def is_empty(self) -> bool:
        return self.start not in self.generating()

    def enumerate_words(self, maxlen, budget=500_000):
        """All derivable terminal words of length <= maxlen."""
        # BFS over sentential forms, pruning by terminal-prefix length
        out = set()
        seen = {(self.start,)}
        queue = deque([(self.start,)])
        steps = 0
        while queue:
            form = queue.popleft()
            i = next((j for j, s in enumerate(form) if s in self.productions), None)
            if i is None:
                if len(form) <= maxlen:
                    out.add(form)
                continue
            for rhs in self.productions[form[i]]:
                steps += 1
                if steps > budget:
                    raise BudgetExceeded("cfg word enumeration")
                nxt = form[:i] + rhs + form[i + 1 :]
                if sum(1 for s in nxt if s not in self.productions) > maxlen:
                    continue
                # crude length guard against unbounded nonterminal growth
                if len(nxt) > maxlen + 2 * max(1, len(self.productions)):
                    continue
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return out

    # -- Parikh image ------------------------------------------------------

    def parikh(self) -> SemilinearSet:
        """Semilinear Parikh image via bounded derivation/pump tree enumeration.

        Completeness rests on the excision argument: any derivation tree
        reduces to a tree in which every root-leaf path repeats each
        nonterminal at most |V|+1 times, plus pump trees whose main path
        has pairwise-distinct inner nonterminals and whose side trees
        repeat nothing along a path.
        """
        g = self.trim()
        if g.is_empty():
            return SemilinearSet.empty()
        nts = list(g.productions)
        cap = len(nts) + 1

        # bases: (parikh, used-nonterminal-set) pairs per nonterminal
        base_memo = {}

        def derive(sym, path_counts, limit):
            if sym not in g.productions:
                return {(Multiset.of(sym), frozenset())}
            key = (sym, tuple(sorted(path_counts.items(), key=lambda kv: symkey(kv[0]))), limit)
            if key in base_memo:
                return base_memo[key]
            if path_counts.get(sym, 0) >= limit:
                return set()
            g._tick()
            sub_counts = dict(path_counts)
            sub_counts[sym] = sub_counts.get(sym, 0) + 1
            out = set()
            for rhs in g.productions[sym]:
                combos = {(EMPTY, frozenset())}
                for s in rhs:
                    child = derive(s, sub_counts, limit)
                    if not child:
                        combos = set()
                        break
                    combos = {
                        (m1 + m2, u1 | u2) for m1, u1 in combos for m2, u2 in child
                    }
                    g._tick(len(combos))
                out |= combos
            out = {(m, u | {sym}) for m, u in out}
            base_memo[key] = out
            return out

        bases = derive(g.start, {}, cap)

        # pumps: main path root..root with distinct inner nodes; side trees
        # use the depth-1-per-path enumeration
        side_memo = {}

        def side(sym):
            if sym not in g.productions:
                return {(Multiset.of(sym), frozenset())}
            if sym in side_memo:
                return side_memo[sym]
            return derive(sym, {}, 1)

        pumps = set()

        def walk(root, current, seen_inner, acc_parikh, acc_used):
            g._tick()
            for rhs in g.productions.get(current, []):
                for pos, nxt in enumerate(rhs):
                    if nxt not in g.productions:
                        continue
                    rest = rhs[:pos] + rhs[pos + 1 :]
                    combos = {(acc_parikh, acc_used)}
                    ok = True
                    for s in rest:
                        child = side(s)
                        if not child:
                            ok = False
                            break
                        combos = {
                            (m1 + m2, u1 | u2) for m1, u1 in combos for m2, u2 in child
                        }
                        g._tick(len(combos))
                    if not ok:
                        continue
                    if nxt == root:
                        for m, u in combos:
                            pumps.add((root, m, u | {root}))
                    if nxt != root and nxt not in seen_inner:
                        for m, u in combos:
                            walk(root, nxt, seen_inner | {nxt}, m, u | {nxt})

        for root in nts:
            walk(root, root, frozenset(), EMPTY, frozenset())

        components = []
        seen_lin = set()
        for base_m, used in sorted(bases, key=lambda x: (sorted(map(symkey, x[1])), repr(x[0]))):
            periods = [
                m for root, m, pused in pumps if root in used and pused <= used and m
            ]
            lin = LinearSet(base_m, periods)
            if lin not in seen_lin:
                seen_lin.add(lin)
                components.append(lin)
        return SemilinearSet(components)

    # -- Downward closure --------------------------------------------------

    def downward_closure(self, state_budget=200_000) -> Nfa:
        """NFA for the subword closure of the generated language.

        SCC-by-SCC grammar annotation: non-recursive components concatenate,
        one-sided/linear recursion uses a two-phase walk, and components with
        a branching production collapse to the iteration of their symbols.
        """
        g = self.trim()
        alphabet = set()
        for rhss in g.productions.values():
            for rhs in rhss:
                for s in rhs:
                    if s not in g.productions:
                        alphabet.add(s)
        if g.is_empty():
            return Nfa.empty_language(alphabet)

        # SCCs of the nonterminal dependency graph (iterative Tarjan)
        adj = {
            nt: sorted(
                {s for rhs in rhss for s in rhs if s in g.productions}, key=symkey
            )
            for nt, rhss in g.productions.items()
        }
        index = {}
        low = {}
        on_stack = set()
        stack = []
        sccs = []
        counter = [0]

        def strongconnect(v0):
            work = [(v0, 0)]
            while work:
                v, pi = work[-1]
                if pi == 0:
                    index[v] = low[v] = counter[0]
                    counter[0] += 1
                    stack.append(v)
                    on_stack.add(v)
                recurse = False
                for i in range(pi, len(adj[v])):
                    w = adj[v][i]
                    if w not in index:
                        work[-1] = (v, i + 1)
                        work.append((w, 0))
                        recurse = True
                        break
                    elif w in on_stack:
                        low[v] = min(low[v], index[w])
                if recurse:
                    continue
                if low[v] == index[v]:
                    comp = set()
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.add(w)
                        if w == v:
                            break
                    sccs.append(comp)
                work.pop()
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])

        for nt in g.productions:
            if nt not in index:
                strongconnect(nt)
        scc_of = {}
        for comp in sccs:
            for nt in comp:
                scc_of[nt] = frozenset(comp)

        # assemble the NFA with fresh integer states
        states = []
        edges = []

        def new_state():
            if len(states) > state_budget:
                raise BudgetExceeded("downward closure state budget")
            s = len(states)
            states.append(s)
            return s

        # templates[nt] = callable instantiating a fresh copy, returns (entry, exit)
        templates = {}

        def instantiate(sym):
            if sym in templates:
                return templates[sym]()
            # terminal
            e, x = new_state(), new_state()
            edges.append((e, sym, x))
            edges.append((e, None, x))
            return e, x

        def instantiate_seq(rhs):
            e = new_state()
            cur = e
            for s in rhs:
                se, sx = instantiate(sym=s)
                edges.append((cur, None, se))
                cur = sx
            x = new_state()
            edges.append((cur, None, x))
            return e, x

        # process SCCs bottom-up (Tarjan emits them in reverse topological
        # order of the condensation, i.e. callees before callers)
        for comp in sccs:
            recursive = any(
                any(s in comp for s in rhs)
                for nt in comp
                for rhs in g.productions[nt]
            )
            if not recursive:
                (nt,) = comp

                def make_trivial(nt=nt):
                    e, x = new_state(), new_state()
                    for rhs in g.productions[nt]:
                        se, sx = instantiate_seq(rhs)
                        edges.append((e, None, se))
                        edges.append((sx, None, x))
                    return e, x

                templates[nt] = make_trivial
                continue
            branching = any(
                sum(1 for s in rhs if s in comp) >= 2
                for nt in comp
                for rhs in g.productions[nt]
            )
            if branching:
                comp_syms = sorted(
                    {
                        s
                        for nt in comp
                        for rhs in g.productions[nt]
                        for s in rhs
                        if s not in comp
                    },
                    key=symkey,
                )

                def make_branching(comp_syms=tuple(comp_syms)):
                    hub = new_state()
                    for s in comp_syms:
                        se, sx = instantiate(s)
                        edges.append((hub, None, se))
                        edges.append((sx, None, hub))
                    return hub, hub

                for nt in comp:
                    templates[nt] = make_branching
                continue

            # linear recursive component: two-phase walk, one fresh copy
            # per instantiation (sharing would merge unrelated contexts)
            comp_list = sorted(comp, key=symkey)

            def factory_for(nt, comp_list=tuple(comp_list), comp=frozenset(comp)):
                def make():
                    p1 = {m: new_state() for m in comp_list}
                    p2 = {m: new_state() for m in comp_list}
                    exit_state = new_state()
                    for m in comp_list:
                        for rhs in g.productions[m]:
                            inner = [s for s in rhs if s in comp]
                            if inner:
                                (z,) = inner
                                pos = rhs.index(z)
                                ue, ux = instantiate_seq(rhs[:pos])
                                edges.append((p1[m], None, ue))
                                edges.append((ux, None, p1[z]))
                                ve, vx = instantiate_seq(rhs[pos + 1 :])
                                edges.append((p2[z], None, ve))
                                edges.append((vx, None, p2[m]))
                            else:
                                we, wx = instantiate_seq(rhs)
                                edges.append((p1[m], None, we))
                                edges.append((wx, None, p2[m]))
                        edges.append((p2[m], None, exit_state))
                    for a in comp_list:
                        for b in comp_list:
                            edges.append((p1[a], None, p2[b]))
                    return p1[nt], exit_state
                return make

            for nt in comp_list:
                templates[nt] = factory_for(nt)

        entry, exit_ = instantiate(g.start)
        return Nfa(states, alphabet, edges, entry, {exit_}).trim()


# ---------------------------------------------------------------------------
# Pushdown automata
# ---------------------------------------------------------------------------

BOTTOM = ("$bottom",)


class Pda:
    """Pushdown automaton accepting by final state.

    Edges are tuples (state, top, input, state2, push):
      top: stack symbol to pop, or None to leave the stack untouched
      input: letter read, or None for an epsilon move
      push: tuple of stack symbols pushed (leftmost becomes the new top)
    """

    def __init__(self, states, input_alphabet, stack_alphabet, edges,
                 initial, initial_stack, finals):
        self.states = list(states)
        self.input_alphabet = frozenset(input_alphabet)
        self.stack_alphabet = frozenset(stack_alphabet)
        self.edges = [(p, t, a, q, tuple(w)) for p, t, a, q, w in edges]
        self.initial = initial
        self.initial_stack = initial_stack  # single symbol or None
        self.finals = frozenset(finals)
        sset = set(self.states)
        assert initial in sset
        for p, t, a, q, w in self.edges:
            assert p in sset and q in sset
            assert t is None or t in self.stack_alphabet
            assert a is None or a in self.input_alphabet
            for s in w:
                assert s in self.stack_alphabet
            assert len(w) <= 2

    def _init_stack_tuple(self):
        return (self.initial_stack,) if self.initial_stack is not None else ()

    def enumerate_words(self, maxlen, max_stack=None, budget=400_000):
        """Accepted words up to the given length (bounded configuration BFS)."""
        if max_stack is None:
            max_stack = maxlen + 4
        out = set()
        start = (self.initial, self._init_stack_tuple(), ())
        seen = {start}
        queue = deque([start])
        steps = 0
        while queue:
            q, stack, w = queue.popleft()
            if q in self.finals:
                out.add(w)
            for p, t, a, q2, push in self.edges:
                if p != q:
                    continue
                steps += 1
                if steps > budget:
                    raise BudgetExceeded("pda word enumeration")
                if t is not None:
                    if not stack or stack[0] != t:
                        continue
                    ns = push + stack[1:]
                else:
                    ns = push + stack
                if len(ns) > max_stack:
                    continue
                nw = w if a is None else w + (a,)
                if len(nw) > maxlen:
                    continue
                cfg = (q2, ns, nw)
                if cfg not in seen:
                    seen.add(cfg)
                    queue.append(cfg)
        return out

    def trim(self) -> "Pda":
        """Drop control states that lie on no initial-to-final path even
        when every pop is treated as enabled; language preserving."""
        out, rev = {}, {}
        for p, _t, _a, q, _w in self.edges:
            out.setdefault(p, set()).add(q)
            rev.setdefault(q, set()).add(p)
        fwd = {self.initial}
        stack = [self.initial]
        while stack:
            for q in out.get(stack.pop(), ()):
                if q not in fwd:
                    fwd.add(q)
                    stack.append(q)
        back = set(self.finals)
        stack = list(back)
        while stack:
            for p in rev.get(stack.pop(), ()):
                if p not in back:
                    back.add(p)
                    stack.append(p)
        keep = fwd & back
        keep.add(self.initial)
        edges = [e for e in self.edges if e[0] in keep and e[3] in keep]
        states = {self.initial} | {s for e in edges for s in (e[0], e[3])}
        finals = self.finals & states
        if not finals and self.finals:
            f = min(self.finals, key=symkey)
            states.add(f)
            finals = {f}
        return Pda(sorted(states, key=symkey), self.input_alphabet,
                   self.stack_alphabet, edges, self.initial,
                   self.initial_stack, finals)

    def to_cfg(self, budget=2_000_000) -> Cfg:
        """Triple construction restricted to realizable pop summaries.
        Acceptance by final state is reduced to empty-stack acceptance with
        a fresh bottom marker and a drain state.

        A saturation pass first computes rel[(p, g)] = the states reachable
        from p by a run whose net effect is popping g; productions are then
        emitted only along realizable chains, so the grammar never mentions
        a non-generating nonterminal and stays small on machines whose
        naive triple grammar would be quadratic in control states per edge.
        """
        slim = self.trim()
        if len(slim.states) < len(self.states) or len(slim.edges) < len(self.edges):
            return slim.to_cfg(budget)
        gamma = _sorted_syms(self.stack_alphabet)
        gamma_b = gamma + [BOTTOM]
        drain, done = ("$drain",), ("$done",)
        wipe_edges = []
        for f in _sorted_syms(self.finals) if all(
            isinstance(s, (str, tuple, int)) for s in self.finals) else list(self.finals):
            for g in gamma:
                wipe_edges.append((f, g, None, drain, ()))
            wipe_edges.append((f, BOTTOM, None, done, ()))
        for g in gamma:
            wipe_edges.append((drain, g, None, drain, ()))
        wipe_edges.append((drain, BOTTOM, None, done, ()))

        # instantiate top-free edges per possible top
        insts = []
        for p, t, a, q, push in list(self.edges) + wipe_edges:
            tops = [t] if t is not None else gamma_b
            for top in tops:
                eff = push if t is not None else push + (top,)
                insts.append((p, top, a, q, eff))

        # rel[(p, g)]: targets of runs from p that pop exactly g; saturated
        # through per-edge partial chains reach[i][k] = states reachable
        # after discharging the first k pushed symbols of edge i
        rel = {}
        waiters = {}
        reach = [[set() for _ in range(len(inst[4]) + 1)] for inst in insts]
        relq = deque()
        reachq = deque((ii, 0, inst[3]) for ii, inst in enumerate(insts))
        while relq or reachq:
            while reachq:
                ii, k, s = reachq.popleft()
                if s in reach[ii][k]:
                    continue
                reach[ii][k].add(s)
                p, top, _a, _q, eff = insts[ii]
                if k == len(eff):
                    got = rel.setdefault((p, top), set())
                    if s not in got:
                        got.add(s)
                        relq.append((p, top, s))
                    continue
                g = eff[k]
                waiters.setdefault((s, g), []).append((ii, k))
                for t2 in rel.get((s, g), ()):
                    reachq.append((ii, k + 1, t2))
            if relq:
                p, g, q = relq.popleft()
                for ii, k in waiters.get((p, g), ()):
                    reachq.append((ii, k + 1, q))

        def nt(p, a, q):
            return ("$T", p, a, q)

        def rel_sorted(p, g):
            return sorted(rel.get((p, g), ()), key=symkey)

        prods = {}
        count = 0
        for p, top, a, q, eff in insts:
            term = (a,) if a is not None else ()
            # extend the body one realizable pop at a time
            partial = [((), q)]
            for g in eff:
                partial = [(body + (nt(frm, g, to),), to)
                           for body, frm in partial for to in rel_sorted(frm, g)]
            count += len(partial)
            if count > budget:
                raise BudgetExceeded("pda to grammar")
            for body, last in partial:
                prods.setdefault(nt(p, top, last), []).append(term + body)

        start = ("$S",)
        prods[start] = []
        partial = [((), self.initial)]
        for g in list(self._init_stack_tuple()) + [BOTTOM]:
            partial = [(body + (nt(frm, g, to),), to)
                       for body, frm in partial for to in rel_sorted(frm, g)]
        for body, last in partial:
            if last == done:
                prods[start].append(body)
        # every referenced triple must exist as a nonterminal, even when it
        # has no productions, lest it be mistaken for a terminal
        referenced = set()
        for rhss in list(prods.values()):
            for rhs in rhss:
                for s in rhs:
                    if isinstance(s, tuple) and s and s[0] == "$T":
                        referenced.add(s)
        for s in referenced:
            prods.setdefault(s, [])
        return Cfg(prods, start, budget).trim()


def pda_emptiness(p: Pda) -> bool:
    """True iff L(p) is empty; decided via the pop-summary saturation
    implicit in trimming the triple-construction grammar."""
    return p.to_cfg().is_empty()


def pda_intersect_regular(p: Pda, r: Nfa) -> Pda:
    """Product PDA with L(result) = L(p) ∩ L(r).

    Built over control-state-reachable product pairs only (ignoring stack
    constraints, so never dropping a reachable pair)."""
    if p.input_alphabet != r.alphabet:
        raise ValueError("alphabet mismatch")
    rsucc = r._successors()
    by_src = {}
    for e in p.edges:
        by_src.setdefault(e[0], []).append(e)
    start = (p.initial, r.initial)
    states = {start}
    edges = []
    queue = deque([start])
    while queue:
        s, n = queue.popleft()
        hops = []
        for _ps, t, a, qs, push in by_src.get(s, ()):
            if a is None:
                hops.append(((qs, n), t, None, push))
            else:
                for n2 in rsucc.get((n, a), ()):
                    hops.append(((qs, n2), t, a, push))
        # NFA epsilon edges advance independently of the PDA
        for n2 in rsucc.get((n, None), ()):
            hops.append(((s, n2), None, None, ()))
        for tgt, t, a, push in hops:
            edges.append(((s, n), t, a, tgt, push))
            if tgt not in states:
                states.add(tgt)
                queue.append(tgt)
    finals = {f for f in states if f[0] in p.finals and f[1] in r.finals}
    return Pda(sorted(states, key=symkey), p.input_alphabet, p.stack_alphabet,
               edges, start, p.initial_stack, finals)


def parikh_image(p: Pda) -> SemilinearSet:
    return p.to_cfg().parikh()


def downward_closure_nfa(p: Pda) -> Nfa:
    nfa = p.to_cfg().downward_closure()
    # present the full input alphabet even for letters that cannot occur
    if nfa.alphabet != p.input_alphabet:
        nfa = Nfa(nfa.states, p.input_alphabet, nfa.edges, nfa.initial, nfa.finals)
    return nfa.canonical()


# ---------------------------------------------------------------------------
# Automata with multiset output
# ---------------------------------------------------------------------------

class OutputAutomaton:
    """Finite automaton over pairs (word over Gamma, output multiset over Lambda).

    Edges are (state, word tuple, output Multiset, state). The normalized
    form has every edge either reading exactly one letter with no output,
    or reading nothing and outputting at most one unit.
    """

    def __init__(self, states, word_alphabet, output_alphabet, edges, initial, finals):
        self.states = list(states)
        self.word_alphabet = frozenset(word_alphabet)
        self.output_alphabet = frozenset(output_alphabet)
        self.edges = [(p, tuple(w), m, q) for p, w, m, q in edges]
        self.initial = initial
        self.finals = frozenset(finals)
        sset = set(self.states)
        assert initial in sset
        for p, w, m, q in self.edges:
            assert p in sset and q in sset
            for a in w:
                assert a in self.word_alphabet, a
            assert m.support <= self.output_alphabet

    def is_normalized(self):
        for _, w, m, _ in self.edges:
            if len(w) > 1 or m.size > 1 or (len(w) == 1 and m.size > 0):
                return False
        return True

    def normalize(self) -> "OutputAutomaton":
        if self.is_normalized():
            return self
        states = list(self.states)
        edges = []
        fresh = [0]

        def new_state():
            fresh[0] += 1
            s = ("$n", fresh[0])
            states.append(s)
            return s

        for p, w, m, q in self.edges:
            units = []
            for sym, c in m.sorted_items():
                units.extend([sym] * c)
            hops = [(a, None) for a in w] + [(None, u) for u in units]
            if not hops:
                edges.append((p, (), EMPTY, q))
                continue
            cur = p
            for i, (a, u) in enumerate(hops):
                tgt = q if i == len(hops) - 1 else new_state()
                if a is not None:
                    edges.append((cur, (a,), EMPTY, tgt))
                else:
                    edges.append((cur, (), Multiset.of(u), tgt))
                cur = tgt
        return OutputAutomaton(states, self.word_alphabet, self.output_alphabet,
                               edges, self.initial, self.finals)

    def trim(self) -> "OutputAutomaton":
        adj, radj = {}, {}
        for p, w, m, q in self.edges:
            adj.setdefault(p, set()).add(q)
            radj.setdefault(q, set()).add(p)
        fwd = {self.initial}
        queue = deque(fwd)
        while queue:
            s = queue.popleft()
            for t in adj.get(s, ()):
                if t not in fwd:
                    fwd.add(t)
                    queue.append(t)
        bwd = set(self.finals)
        queue = deque(bwd)
        while queue:
            s = queue.popleft()
            for t in radj.get(s, ()):
                if t not in bwd:
                    bwd.add(t)
                    queue.append(t)
        keep = (fwd & bwd) | {self.initial}
        return OutputAutomaton(
            [s for s in self.states if s in keep],
            self.word_alphabet,
            self.output_alphabet,
            [e for e in self.edges if e[0] in keep and e[3] in keep],
            self.initial,
            self.finals & keep,
        )

    def pairs(self, max_word, max_output, budget=400_000):
        """All accepted (word, output) pairs within the bounds."""
        out = set()
        start = (self.initial, (), EMPTY)
        seen = {start}
        queue = deque([start])
        steps = 0
        while queue:
            q, w, m = queue.popleft()
            if q in self.finals:
                out.add((w, m))
            for p, ew, em, q2 in self.edges:
                if p != q:
                    continue
                steps += 1
                if steps > budget:
                    raise BudgetExceeded("output automaton pair enumeration")
                nw = w + ew
                nm = m + em
                if len(nw) > max_word or nm.size > max_output:
                    continue
                cfg = (q2, nw, nm)
                if cfg not in seen:
                    seen.add(cfg)
                    queue.append(cfg)
        return out

    def canonical_renumber(self) -> "OutputAutomaton":
        order = {self.initial: 0}
        queue = deque([self.initial])
        adj = {}
        for p, w, m, q in self.edges:
            adj.setdefault(p, []).append((tuple(map(symkey, w)), repr(m), q))
        while queue:
            s = queue.popleft()
            for _, _, t in sorted(adj.get(s, []), key=lambda x: (x[0], x[1])):
                if t not in order:
                    order[t] = len(order)
                    queue.append(t)
        for s in self.states:
            if s not in order:
                order[s] = len(order)
        return OutputAutomaton(
            sorted(order.values()),
            self.word_alphabet,
            self.output_alphabet,
            [(order[p], w, m, order[q]) for p, w, m, q in self.edges],
            0,
            {order[f] for f in self.finals},
        )


def output_run_search(a: OutputAutomaton, w, target: Multiset, mode: str = "exact") -> bool:
    """Does some accepting run read w and output target (exact), or output
    some m' with target <=_1 m' (geq1: pointwise >= with equal support)?
    """
    if mode not in ("exact", "geq1"):
        raise ValueError(mode)
    a = a.normalize()
    w = tuple(w)
    supp = target.support

    def cap(m):
        if mode == "exact":
            return m
        return Multiset({s: min(c, target[s]) for s, c in m.items()})

    start = (a.initial, 0, EMPTY)
    seen = {start}
    queue = deque([start])
    while queue:
        q, i, m = queue.popleft()
        if q in a.finals and i == len(w) and m == cap(target):
            return True
        for p, ew, em, q2 in a.edges:
            if p != q:
                continue
            if ew:
                if i >= len(w) or w[i] != ew[0]:
                    continue
                ni, nm = i + 1, m
            else:
                ni = i
                nm = m + em
                if mode == "geq1":
                    if not em.support <= supp:
                        continue
                    nm = cap(nm)
                elif not nm <= target:
                    continue
            cfg = (q2, ni, nm)
            if cfg not in seen:
                seen.add(cfg)
                queue.append(cfg)
    return False


def output_product(a: OutputAutomaton, b: OutputAutomaton) -> OutputAutomaton:
    """Convolution product: accepts (w, m1+m2) for (w,m1) in a, (w,m2) in b."""
    a, b = a.normalize(), b.normalize()
    start = (a.initial, b.initial)
    states = {start}
    edges = []
    queue = deque([start])
    a_by_state, b_by_state = {}, {}
    for e in a.edges:
        a_by_state.setdefault(e[0], []).append(e)
    for e in b.edges:
        b_by_state.setdefault(e[0], []).append(e)
    while queue:
        pa, pb = queue.popleft()
        moves = []
        for _, w, m, qa in a_by_state.get(pa, []):
            if w:
                for _, w2, m2, qb in b_by_state.get(pb, []):
                    if w2 == w:
                        moves.append((w, m + m2, (qa, qb)))
            else:
                moves.append(((), m, (qa, pb)))
        for _, w2, m2, qb in b_by_state.get(pb, []):
            if not w2:
                moves.append(((), m2, (pa, qb)))
        for w, m, tgt in moves:
            if tgt not in states:
                states.add(tgt)
                queue.append(tgt)
            edges.append(((pa, pb), w, m, tgt))
    finals = {(x, y) for x, y in states if x in a.finals and y in b.finals}
    return OutputAutomaton(
        states, a.word_alphabet, a.output_alphabet | b.output_alphabet,
        edges, start, finals
    ).trim()


class PdaWithOutput:
    """Pushdown automaton whose edges carry output multisets.

    Edges are (state, action, output Multiset, state) with action one of
    None (no stack change), ("push", g), ("pop", g).
    """

    def __init__(self, states, stack_alphabet, output_alphabet, edges, initial, final):
        self.states = list(states)
        self.stack_alphabet = frozenset(stack_alphabet)
        self.output_alphabet = frozenset(output_alphabet)
        self.edges = list(edges)
        self.initial = initial
        self.final = final
        sset = set(self.states)
        assert initial in sset and final in sset
        for p, act, m, q in self.edges:
            assert p in sset and q in sset
            if act is not None:
                kind, g = act
                assert kind in ("push", "pop") and g in self.stack_alphabet
            assert m.support <= self.output_alphabet

    def dual(self) -> "PdaWithOutput":
        flip = {"push": "pop", "pop": "push"}
        edges = [
            (q, None if act is None else (flip[act[0]], act[1]), m, p)
            for p, act, m, q in self.edges
        ]
        return PdaWithOutput(self.states, self.stack_alphabet, self.output_alphabet,
                             edges, self.final, self.initial)

    def replay_pairs(self, pivot, max_steps, max_stack=6, budget=600_000):
        """Exhaustive semantics: pairs (w, m) such that a run of at most
        max_steps edges visits pivot with stack w and ends at the final
        state with empty stack having output m in total."""
        out = set()
        start = (self.initial, (), EMPTY, frozenset())
        # carry the set of pivot stacks seen along the run
        seen = {(self.initial, (), EMPTY, frozenset({()})) if self.initial == pivot
                else start}
        init = next(iter(seen))
        queue = deque([(init, 0)])
        steps = 0
        while queue:
            (q, stack, m, pivots), n = queue.popleft()
            if q == self.final and not stack:
                for w in pivots:
                    out.add((w, m))
            if n >= max_steps:
                continue
            for p, act, em, q2 in self.edges:
                if p != q:
                    continue
                steps += 1
                if steps > budget:
                    raise BudgetExceeded("pda-with-output replay")
                if act is None:
                    ns = stack
                elif act[0] == "push":
                    ns = stack + (act[1],)
                    if len(ns) > max_stack:
                        continue
                else:
                    if not stack or stack[-1] != act[1]:
                        continue
                    ns = stack[:-1]
                np_ = pivots | {ns} if q2 == pivot else pivots
                cfg = (q2, ns, m + em, np_)
                if (cfg, n + 1) not in seen:
                    seen.add((cfg, n + 1))
                    queue.append((cfg, n + 1))
        return out


def _zero_run_pairs(p: PdaWithOutput):
    """Pairs (a, b) admitting a run a -> b with no net stack change that
    never dips below the starting stack; second component of the value
    records whether a nonzero output is producible on such a run."""
    zero = {(q, q): False for q in p.states}
    # direct non-stack edges
    changed = True
    push_edges = [(a, g, m, b) for a, act, m, b in p.edges
                  if act is not None and act[0] == "push" for g in [act[1]]]
    pop_edges = [(a, g, m, b) for a, act, m, b in p.edges
                 if act is not None and act[0] == "pop" for g in [act[1]]]
    flat_edges = [(a, m, b) for a, act, m, b in p.edges if act is None]
    while changed:
        changed = False
        updates = []
        for (a, b), plus in list(zero.items()):
            # extend with a flat edge
            for b0, m, c in flat_edges:
                if b0 == b:
                    updates.append(((a, c), plus or bool(m)))
            # extend with a balanced push ... pop block
            for b0, g, m1, c in push_edges:
                if b0 != b:
                    continue
                for (c0, d), plus2 in list(zero.items()):
                    if c0 != c:
                        continue
                    for d0, g2, m2, e in pop_edges:
                        if d0 == d and g2 == g:
                            updates.append(
                                ((a, e), plus or plus2 or bool(m1) or bool(m2))
                            )
        for key, val in updates:
            if key not in zero or (val and not zero[key]):
                zero[key] = zero.get(key, False) or val
                changed = True
    return zero


def _zero_run_parikh(p: PdaWithOutput, a, b) -> SemilinearSet:
    """Semilinear set of outputs of zero-net-stack runs from a to b."""
    # encode as a PDA over the output alphabet with a bottom marker; the
    # marker guards against dipping below the starting stack
    letters = _sorted_syms(p.output_alphabet)
    states = list(p.states) + [("$acc",)]
    edges = []
    fresh = [0]

    def expand(p0, m, q0, stack_op):
        """edge with multiset output -> chain reading one letter at a time"""
        units = []
        for sym, c in m.sorted_items():
            units.extend([sym] * c)
        cur = p0
        chain_states = []
        for i, u in enumerate(units):
            if i == len(units) - 1 and stack_op is None:
                tgt = q0
            else:
                fresh[0] += 1
                tgt = ("$mid", fresh[0])
                chain_states.append(tgt)
            edges.append((cur, None, u, tgt, ()))
            cur = tgt
        return cur, chain_states

    extra_states = []
    for p0, act, m, q0 in p.edges:
        if act is None:
            if not m:
                edges.append((p0, None, None, q0, ()))
            else:
                cur, mids = expand(p0, m, q0, None)
                extra_states.extend(mids)
        else:
            cur = p0
            if m:
                cur, mids = expand(p0, m, None, "pending")
                extra_states.extend(mids)
            if act[0] == "push":
                edges.append((cur, None, None, q0, (act[1],)))
            else:
                edges.append((cur, act[1], None, q0, ()))
    states = list(p.states) + extra_states + [("$acc",)]
    edges.append((b, BOTTOM, None, ("$acc",), ()))
    stack_alpha = set(p.stack_alphabet) | {BOTTOM}
    pda = Pda(states, letters, stack_alpha, edges, a, BOTTOM, {("$acc",)})
    return parikh_image(pda)


def _zero_run_parikh_queries(p: PdaWithOutput):
    """Query function (a, b) -> SemilinearSet of outputs of zero-net-stack
    runs from a to b, sharing one pop-summary grammar across all pairs
    (the queries differ only in the grammar's start symbol).

    Nonterminal Z(a, b) derives the outputs of runs from a to b with zero
    net stack change that never dip below the starting stack; output
    multisets appear inlined as terminal sequences."""
    flat = [(a, m, b) for a, act, m, b in p.edges if act is None]
    push = {}
    pop = {}
    for a, act, m, b in p.edges:
        if act is None:
            continue
        d = push if act[0] == "push" else pop
        d.setdefault(act[1], []).append((a, m, b))

    def units(m):
        out = []
        for sym, c in m.sorted_items():
            out.extend([sym] * c)
        return tuple(out)

    def Z(a, b):
        return ("$Z", a, b)

    prods = {}
    for a in p.states:
        prods.setdefault(Z(a, a), []).append(())
        for b0, m, c in flat:
            prods.setdefault(Z(a, c), []).append((Z(a, b0),) + units(m))
        for g, pushes in push.items():
            for b0, m1, c in pushes:
                for d, m2, e in pop.get(g, ()):
                    prods.setdefault(Z(a, e), []).append(
                        (Z(a, b0),) + units(m1) + (Z(c, d),) + units(m2))
    referenced = set()
    for rhss in prods.values():
        for rhs in rhss:
            for s in rhs:
                if isinstance(s, tuple) and s and s[0] == "$Z":
                    referenced.add(s)
    for s in referenced:
        prods.setdefault(s, [])
    gen = Cfg(prods, ("$Z",)).generating()

    def query(a, b):
        start = Z(a, b)
        if start not in gen:
            return SemilinearSet.empty()
        reach = {start}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for rhs in prods.get(cur, []):
                if all((s not in prods) or (s in gen) for s in rhs):
                    for s in rhs:
                        if s in prods and s not in reach:
                            reach.add(s)
                            queue.append(s)
        sub = {}
        for cur in reach:
            if cur in gen:
                sub[cur] = [rhs for rhs in prods[cur]
                            if all((s not in prods) or (s in gen and s in reach)
                                   for s in rhs)]
        return Cfg(sub, start).parikh()

    return query


def one_sided_reach_automaton(p: PdaWithOutput, pivot) -> OutputAutomaton:
    """Automaton for the pairs (w, m): p reaches (pivot, w) with output m.

    Built by glueing, between every pair of states with a zero-net-stack
    run, a producer of the semilinear output set of such runs, then
    deleting all pop transitions.
    """
    zero = _zero_run_pairs(p)
    states = list(p.states)
    edges = []
    # push edges read their letter; flat edges keep their outputs
    for p0, act, m, q0 in p.edges:
        if act is None:
            edges.append((p0, (), m, q0))
        elif act[0] == "push":
            edges.append((p0, (act[1],), m, q0))
        # pops dropped
    fresh = [0]
    zr_query = None
    for (a, b), has_output in sorted(zero.items(), key=lambda kv: (symkey(kv[0][0]), symkey(kv[0][1]))):
        if a == b and not has_output:
            continue
        if not has_output:
            edges.append((a, (), EMPTY, b))
            continue
        if zr_query is None:
            zr_query = _zero_run_parikh_queries(p)
        sl = zr_query(a, b)
        for ci, comp in enumerate(sl.components):
            fresh[0] += 1
            hub = ("$loop", fresh[0])
            states.append(hub)
            edges.append((a, (), comp.base, hub))
            for period in comp.periods:
                edges.append((hub, (), period, hub))
            edges.append((hub, (), EMPTY, b))
    return OutputAutomaton(states, p.stack_alphabet, p.output_alphabet,
                           edges, p.initial, {pivot}).trim()


def pda_output_rational(p: PdaWithOutput, pivot) -> OutputAutomaton:
    """Automaton for the pairs (w, m): some run of p visits pivot with
    stack w while the complete run (initial to final, empty stacks at both
    ends) outputs m. Product of the one-sided automaton with the one-sided
    automaton of the dual."""
    if pivot not in set(p.states):
        raise ValueError(f"{pivot!r} is not a state")
    fwd = one_sided_reach_automaton(p, pivot)
    bwd = one_sided_reach_automaton(p.dual(), pivot)
    return output_product(fwd, bwd).normalize().trim()
