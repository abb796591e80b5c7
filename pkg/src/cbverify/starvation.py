"""Starvation analysis for scheduled thread systems.

A starving run keeps one suspended thread waiting forever while the rest
of the system makes progress.  The decision pipeline characterizes each
thread type by the rational set of (stack, spawn multiset) pairs it can
exhibit at a given switch count, reduces the existence of a common stack
to a regular intersection (consistency), and reduces starvation itself
to progressive runs of a freezing variant of the model in which exactly
one thread is locked at any time.
"""

from collections import deque

from .automata import Nfa, OutputAutomaton, PdaWithOutput, pda_output_rational
from .dcps import Dcps, FreezingDcps, freeze_reduce, progressivize
from .foundations import (
    EMPTY,
    BoundReport,
    BudgetExceeded,
    Multiset,
    abstraction_bound_B,
    pump_bound_M,
    symkey,
)
from .vassb import VassbConfig, dcps_to_vassb, decide_progressive, thread_types

DAGGER = ("dagger",)
FRZTOP = ("locked",)
STUCK = ("stuck",)


def production_alphabet(model, K):
    """Spawn symbols paired with the segment in which they are produced."""
    return [(s, j) for s in model.stack for j in range(K + 1)]


def _entering(t, j):
    return t.g if j == 0 else t.switches[j - 1][2]


def _wait_symbol(t, j):
    return t.gamma if j == 0 else t.switches[j - 1][1]


# ---------------------------------------------------------------------------
# Per-type production sets
# ---------------------------------------------------------------------------

def _type_output_pda(model, K, t):
    """Stack machine of one thread of type t with spawns as outputs.

    States track the segment number; switch j is forced to match the
    type's j-th switch triple, parking the machine in a wait state whose
    stack is the thread's suspended stack.  Acceptance requires the full
    switch sequence, the type's final handoff, and an empty stack.
    """
    states = {("start",), ("done",)}
    edges = []
    fresh = [0]

    def mid():
        fresh[0] += 1
        s = ("mid", fresh[0])
        states.add(s)
        return s

    def emit(src, pop, pushes, dst, out):
        seq = []
        if pop is not None:
            seq.append(("pop", pop))
        for sym in reversed(tuple(pushes)):
            seq.append(("push", sym))
        states.add(src)
        states.add(dst)
        if not seq:
            edges.append((src, None, out, dst))
            return
        cur = src
        for n, act in enumerate(seq):
            nxt = dst if n == len(seq) - 1 else mid()
            edges.append((cur, act, out if n == 0 else EMPTY, nxt))
            cur = nxt

    def gs(g, j):
        return (("g", g), j)

    emit(("start",), None, (t.gamma,), gs(t.g, 0), EMPTY)
    for j in range(K + 1):
        for r in model.create:
            out = Multiset.of((r.spawn, j)) if r.spawn is not None else EMPTY
            emit(gs(r.g, j), r.top, r.push, gs(r.g2, j), out)
        if j < K:
            g2, s, g3 = t.switches[j]
            for r in model.interrupt:
                if r.g2 != g2:
                    continue
                emit(gs(r.g, j), r.top, r.push, ("wait", j + 1), EMPTY)
            emit(("wait", j + 1), s, (s,), gs(g3, j + 1), EMPTY)
        else:
            for r in model.terminate:
                if r.g2 == t.final:
                    emit(gs(r.g, j), None, (), ("done",), EMPTY)
            for r in model.interrupt:
                if r.g2 == t.final:
                    emit(gs(r.g, j), r.top, r.push, ("done",), EMPTY)
    for j in range(1, K + 1):
        states.add(("wait", j))
    return PdaWithOutput(
        sorted(states, key=symkey), model.stack,
        production_alphabet(model, K), edges, ("start",), ("done",))


def thread_production_set(model, K, t, i):
    """Automaton for the pairs (stack after segment i, total production)
    over complete executions of type t."""
    if not 1 <= i <= K:
        raise ValueError("segment index out of range")
    return pda_output_rational(_type_output_pda(model, K, t), ("wait", i))


# ---------------------------------------------------------------------------
# Bounded abstraction and consistency
# ---------------------------------------------------------------------------

def alpha_B(m, B):
    """Entrywise cap of a production multiset."""
    if B < 0:
        raise ValueError("cap must be nonnegative")
    return Multiset({x: min(c, B) for x, c in m.items() if min(c, B) > 0})


def capped_productions(sl, B, budget=100_000):
    """The image of a semilinear spawn set under the entrywise cap.

    Capping commutes with adding nonnegative periods, so a walk over
    capped vectors is exhaustive.
    """
    out = set()
    for comp in sl.components:
        start = alpha_B(comp.base, B)
        seen = {start}
        stack = [start]
        while stack:
            m = stack.pop()
            for per in comp.periods:
                m2 = alpha_B(m + per, B)
                if m2 not in seen:
                    if len(seen) > budget:
                        raise BudgetExceeded("capped production enumeration")
                    seen.add(m2)
                    stack.append(m2)
        out |= seen
    return out


def tjm_nfa(s, m):
    """Words w such that some accepted pair (w, m') has m' >= m entrywise
    with equal support.

    Tracks capped per-symbol counts through a normalized production
    automaton; outputs outside the support of m are forbidden so the
    support condition holds, and acceptance requires the caps to be met.
    """
    s = s.normalize()
    target = dict(m.items())
    supp = frozenset(target)
    order = sorted(target, key=symkey)
    zero = tuple(0 for _x in order)
    start = (s.initial, zero)
    goal = tuple(target[x] for x in order)
    pos = {x: k for k, x in enumerate(order)}

    states = {start}
    edges = []
    queue = deque([start])
    while queue:
        q, counts = queue.popleft()
        for p, w, out, q2 in s.edges:
            if p != q:
                continue
            if len(w) == 1:
                letter = w[0]
                nxt = (q2, counts)
            elif out.size == 1:
                (x, _c), = out.items()
                if x not in supp:
                    continue
                k = pos[x]
                bumped = list(counts)
                bumped[k] = min(bumped[k] + 1, goal[k])
                letter = None
                nxt = (q2, tuple(bumped))
            else:
                letter = None
                nxt = (q2, counts)
            if nxt not in states:
                states.add(nxt)
                queue.append(nxt)
            edges.append(((q, counts), letter, nxt))
    finals = {(q, c) for q, c in states if q in s.finals and c == goal}
    alphabet = s.word_alphabet or {("$none",)}
    return Nfa(sorted(states, key=symkey), alphabet, edges, start, finals)


def decide_consistency(sets, tuple_v):
    """Is there one stack word discharging every requested production?

    sets and tuple_v are parallel: for each production automaton, a
    finite collection of multisets that the common word must cover.
    Returns ("consistent", witness word) or ("inconsistent",).
    """
    nfas = []
    for s, V in zip(sets, tuple_v):
        for m in sorted(V, key=lambda x: (x.size, repr(x))):
            nfas.append(tjm_nfa(s, m))
    if not nfas:
        return ("consistent", ())
    alphabet = sorted(set().union(*[n.alphabet for n in nfas]), key=symkey)
    succs = [n._successors() for n in nfas]
    start = tuple(n.eps_closure({n.initial}) for n in nfas)
    seen = {start}
    queue = deque([(start, ())])
    while queue:
        cur, word = queue.popleft()
        if all(c & n.finals for c, n in zip(cur, nfas)):
            return ("consistent", word)
        for a in alphabet:
            nxt = []
            for c, n, succ in zip(cur, nfas, succs):
                step = set()
                for q in c:
                    step |= succ.get((q, a), set())
                step = n.eps_closure(step)
                if not step:
                    break
                nxt.append(step)
            else:
                tgt = tuple(nxt)
                if tgt not in seen:
                    seen.add(tgt)
                    queue.append((tgt, word + (a,)))
    return ("inconsistent",)


def consistency_bound_B(sets):
    """Cap above which production abstraction preserves consistency.

    Derived from the pumping argument on the tuple of normalized
    production automata; astronomically large instances report infinity,
    which every downstream use treats as "cap not certified".
    """
    norm = [s.normalize() for s in sets]
    n = max((len(s.states) for s in norm), default=1) or 1
    total = sum(len(s.states) for s in norm) or 1
    lam = len(set().union(*[s.output_alphabet for s in norm])) if norm else 0
    inputs = {"n": n, "total_states": total, "alphabet_size": lam}
    if lam > 40 or total * (2 ** min(lam, 40)) > 1_000_000:
        return BoundReport(float("inf"), "M*(n+1)", {"M": float("inf"), **inputs})
    r = 2 ** (total * 2 ** lam)
    if (r * (n - 1) + 1) * max(r.bit_length(), 1) > 4_000_000:
        return BoundReport(float("inf"), "M*(n+1)", {"M": float("inf"), **inputs})
    M = pump_bound_M(n, lam, total)
    rep = abstraction_bound_B(M.value, n)
    rep.inputs.update(inputs)
    return rep


def consistency_query(data):
    """Standalone consistency check on a JSON bundle
    {"automata": [...], "tuple": [[multiset, ...], ...]}."""
    sets = [output_automaton_from_json(a) for a in data["automata"]]
    tuple_v = [[Multiset.from_json(m) for m in V] for V in data["tuple"]]
    verdict = decide_consistency(sets, tuple_v)
    out = {"status": verdict[0]}
    if verdict[0] == "consistent":
        out["witness"] = list(verdict[1])
    return out


def output_automaton_from_json(data):
    def sym(s):
        return tuple(sym(x) for x in s) if isinstance(s, list) else s

    return OutputAutomaton(
        [sym(s) for s in data["states"]],
        [sym(s) for s in data["word_alphabet"]],
        [sym(s) for s in data["output_alphabet"]],
        [(sym(p), [sym(a) for a in w], Multiset.from_json(m), sym(q))
         for p, w, m, q in data["edges"]],
        sym(data["initial"]),
        [sym(s) for s in data["finals"]],
    )


def output_automaton_to_json(a):
    from .dcps import _sym_to_json as sym

    return {
        "states": [sym(s) for s in a.states],
        "word_alphabet": [sym(s) for s in sorted(a.word_alphabet, key=symkey)],
        "output_alphabet": [sym(s) for s in sorted(a.output_alphabet, key=symkey)],
        "edges": [[sym(p), [sym(x) for x in w], m.to_json(), sym(q)]
                  for p, w, m, q in a.edges],
        "initial": sym(a.initial),
        "finals": [sym(s) for s in sorted(a.finals, key=symkey)],
    }


# ---------------------------------------------------------------------------
# Freezing reduction
# ---------------------------------------------------------------------------

def _mkey(m):
    return tuple(m.sorted_items())


def build_A_iu(model, K, i, u, B, context_cap=50_000):
    """Freezing model whose progressive runs are the starving runs that
    park the waiting thread after segment i with productions in u.

    Every spawned thread is labeled with a guessed type; dispatch and
    resumption are restricted to the type's switch schedule, carried on
    a header symbol that replaces the parked thread's exposed top (the
    header remembers the swallowed symbols and the strip rule restores
    them).  A thread may additionally be spawned as tracked: it commits
    at birth to one capped production from u and carries the saturating
    deficit still owed; a tracked thread may only spawn within its
    budget and may only terminate once the deficit is exhausted, at the
    type's final handoff.  Tracked threads parked right after segment i
    sit under a shared lock symbol and are the freeze targets.  The
    initially frozen marker thread forces an infinite chain of
    unfreezes, each of which locks the next waiting witness, so a
    progressive run must starve one of them.
    """
    if not 1 <= i <= K:
        raise ValueError("segment index out of range")
    types, _sls = thread_types(model, K)
    index = {t: k for k, t in enumerate(types)}
    guesses = {}
    for t, ms in u.items():
        if t not in index:
            raise ValueError("unknown thread type in the guess tuple")
        for m in ms:
            if any(c > B for _x, c in m.items()):
                raise ValueError("production guess exceeds the cap")
        guesses[index[t]] = sorted(ms, key=lambda m: (m.size, repr(m)))
    spawn_types = {}
    for k, t in enumerate(types):
        spawn_types.setdefault(t.gamma, []).append(k)

    # globals an active thread can visit between two scheduler points,
    # starting from a segment's entering global
    adj = {}
    for r in model.create:
        adj.setdefault(r.g, set()).add(r.g2)
    closure_cache = {}

    def reach(g):
        if g not in closure_cache:
            seen = {g}
            work = [g]
            while work:
                for g2 in adj.get(work.pop(), ()):
                    if g2 not in seen:
                        seen.add(g2)
                        work.append(g2)
            closure_cache[g] = seen
        return closure_cache[g]

    def deficit_spend(mkey, dkey, sym):
        """Remaining deficit after one spawn; None when the spawn would
        make the capped production exceed the guess."""
        d = dict(dkey)
        if d.get(sym, 0) > 0:
            d[sym] -= 1
            return tuple((x, c) for x, c in sorted(d.items(), key=lambda kv:
                         symkey(kv[0])) if c)
        # a coordinate at the cap absorbs further spawns
        if dict(mkey).get(sym, 0) == B and B > 0:
            return dkey
        return None

    # contexts: (ti, j) for untracked threads, (ti, j, mkey, dkey) for
    # tracked ones; closed under spawning and interruption
    ctxs = {(ti, 0) for ti in range(len(types))}
    ctxs |= {(ti, 0, _mkey(m), _mkey(m)) for ti in guesses
             for m in guesses[ti]}
    spawnable = sorted({r.spawn for r in model.create if r.spawn is not None},
                       key=symkey)
    work = list(ctxs)
    while work:
        ctx = work.pop()
        if len(ctxs) > context_cap:
            raise BudgetExceeded("freezing construction context closure")
        ti, j = ctx[0], ctx[1]
        nxt = []
        if len(ctx) == 4:
            _ti, _j, mk, dk = ctx
            for g2 in spawnable:
                dk2 = deficit_spend(mk, dk, (g2, j))
                if dk2 is not None:
                    nxt.append((ti, j, mk, dk2))
        if j < K:
            nxt.append((ti, j + 1) + ctx[2:])
        for c in nxt:
            if c not in ctxs:
                ctxs.add(c)
                work.append(c)

    def tracked(ctx):
        return len(ctx) == 4

    def locked(ctx):
        # parked freeze candidates: tracked, exactly i segments done
        return tracked(ctx) and ctx[1] == i

    def hdr0(ctx):
        return ("hdr",) + ctx

    def comb(ctx, push):
        return ("hdr",) + ctx + (tuple(push),)

    def act(g, ctx):
        return ("act", g) + ctx

    def spawn_choices(gamma):
        """Header symbols a spawn of gamma may be tagged with."""
        out = []
        for ti2 in spawn_types.get(gamma, ()):
            out.append(hdr0((ti2, 0)))
            for m in guesses.get(ti2, ()):
                out.append(hdr0((ti2, 0, _mkey(m), _mkey(m))))
        return out

    create, interrupt, resume, terminate, unfreeze = [], [], [], [], []
    hats, uhs = set(), set()
    parked = set()
    for ctx in sorted(ctxs, key=symkey):
        ti, j = ctx[0], ctx[1]
        t = types[ti]
        # activity within the current segment
        for g in reach(_entering(t, j)):
            for r in model.create:
                if r.g != g:
                    continue
                if r.spawn is None:
                    create.append((act(g, ctx), r.top, act(r.g2, ctx),
                                   r.push, None))
                    continue
                if tracked(ctx):
                    dk2 = deficit_spend(ctx[2], ctx[3], (r.spawn, j))
                    if dk2 is None:
                        continue
                    ctx2 = (ti, j, ctx[2], dk2)
                else:
                    ctx2 = ctx
                kids = spawn_choices(r.spawn)
                if not kids:
                    kids = [r.spawn]
                for child in kids:
                    create.append((act(g, ctx), r.top, act(r.g2, ctx2),
                                   r.push, child))
            if j < K:
                land = (ti, j + 1) + ctx[2:]
                wait = _wait_symbol(t, j + 1)
                for r in model.interrupt:
                    if r.g != g:
                        continue
                    if r.push and r.push[0] == wait:
                        h = comb(land, r.push)
                        parked.add((land, tuple(r.push)))
                        tops = ((FRZTOP, h) if locked(land) else (h,))
                    else:
                        # the type cannot resume this parking: the
                        # thread is permanently dead from here on
                        tops = (STUCK,)
                    interrupt.append((act(g, ctx), r.top, r.g2, tops))
            for r in model.terminate:
                if r.g != g:
                    continue
                if not tracked(ctx):
                    terminate.append((act(g, ctx), r.g2))
                elif j == K and ctx[3] == () and r.g2 == t.final:
                    terminate.append((act(g, ctx), r.g2))
    # dispatch of freshly spawned decorated threads
    for ctx in sorted(ctxs, key=symkey):
        if ctx[1] != 0:
            continue
        t = types[ctx[0]]
        for r in model.resume:
            if r.top == t.gamma and r.g2 == t.g:
                hats.add(("hat", t.g))
                resume.append((r.g, ("hat", t.g), hdr0(ctx)))
        create.append((("hat", t.g), hdr0(ctx), act(t.g, ctx),
                       (t.gamma,), None))
    # resumption of parked decorated threads; the strip rule restores
    # the swallowed symbols
    for ctx, push in sorted(parked, key=symkey):
        t = types[ctx[0]]
        ent = _entering(t, ctx[1])
        h = comb(ctx, push)
        for r in model.resume:
            if r.top != push[0] or r.g2 != ent:
                continue
            if locked(ctx):
                uhs.add(r.g)
                create.append((("uh2", r.g), h, act(ent, ctx), push, None))
            else:
                hats.add(("hat", ent))
                resume.append((r.g, ("hat", ent), h))
                create.append((("hat", ent), h, act(ent, ctx), push, None))
    # locked threads resume through the shared lock symbol
    for g in sorted(uhs, key=symkey):
        resume.append((g, ("uh", g), FRZTOP))
        create.append((("uh", g), FRZTOP, ("uh2", g), (), None))
    # plain rules keep the undecorated initial thread running; its
    # spawns get tagged like everyone else's
    for r in model.create:
        if r.spawn is None:
            create.append(tuple(r))
        else:
            kids = spawn_choices(r.spawn) or [r.spawn]
            for child in kids:
                create.append((r.g, r.top, r.g2, r.push, child))
    interrupt.extend(tuple(r) for r in model.interrupt)
    resume.extend(tuple(r) for r in model.resume)
    terminate.extend(tuple(r) for r in model.terminate)
    # the freeze chain: unfreezing the marker or a locked thread
    # requires locking another
    for g in model.globals:
        for g2 in model.globals:
            unfreeze.append((g, ("dag", g2), DAGGER, FRZTOP))
        create.append((("dag", g), DAGGER, ("dagpop", g), (), None))
        terminate.append((("dagpop", g), g))
    for g in sorted(uhs, key=symkey):
        unfreeze.append((g, ("uh", g), FRZTOP, FRZTOP))

    globals_ = set(model.globals)
    globals_ |= hats
    globals_ |= {("uh", g) for g in uhs} | {("uh2", g) for g in uhs}
    globals_ |= {r[0] for fam in (create, interrupt, terminate) for r in fam}
    globals_ |= {r[2] for r in create} | {r[2] for r in interrupt}
    globals_ |= {r[1] for r in terminate}
    stack = list(model.stack)
    stack += sorted({hdr0(c) for c in ctxs if c[1] == 0}
                    | {comb(c, p) for c, p in parked}, key=symkey)
    stack += [FRZTOP, DAGGER, STUCK]
    out = FreezingDcps(
        sorted(globals_, key=symkey), stack, create, interrupt, resume,
        terminate, model.g0, model.gamma0, unfreeze, DAGGER)
    out.thread_type_list = types
    return out


# ---------------------------------------------------------------------------
# Top-level decision procedure
# ---------------------------------------------------------------------------

def _maximal_candidates(sets, pools, product_cap=50_000, limit=8):
    """Distinct maximal guess tuples realizable by a single stack word.

    For every candidate production m of every type, membership of a word
    in the corresponding discharge language is tracked jointly; each
    reachable acceptance pattern is a consistent tuple, maximal for the
    words realizing it, with the BFS word as its witness.
    """
    pairs = [(k, m) for k, pool in enumerate(pools)
             for m in sorted(pool, key=lambda x: (x.size, repr(x)))]
    if not pairs:
        return [], False
    nfas = [tjm_nfa(sets[k], m) for k, m in pairs]
    alphabet = sorted(set().union(*[n.alphabet for n in nfas]), key=symkey)
    succs = [n._successors() for n in nfas]
    start = tuple(n.eps_closure({n.initial}) for n in nfas)
    seen = {start}
    found = {}
    queue = deque([(start, ())])
    while queue:
        cur, word = queue.popleft()
        vec = tuple(bool(c & n.finals) for c, n in zip(cur, nfas))
        if any(vec) and vec not in found:
            found[vec] = word
        for a in alphabet:
            nxt = []
            for c, n, succ in zip(cur, nfas, succs):
                step = set()
                for q in c:
                    step |= succ.get((q, a), set())
                nxt.append(n.eps_closure(step))
            tgt = tuple(nxt)
            if tgt not in seen:
                if len(seen) > product_cap:
                    raise BudgetExceeded("consistency candidate enumeration")
                seen.add(tgt)
                queue.append((tgt, word + (a,)))
    # drop candidates dominated by a strictly larger acceptance pattern
    vecs = sorted(found, key=lambda v: (-sum(v), found[v]))
    kept = []
    for v in vecs:
        if any(all(b >= a for a, b in zip(v, w)) and w != v for w in kept):
            continue
        kept.append(v)
    truncated = len(kept) > limit
    kept = kept[:limit]
    out = []
    for v in kept:
        cand = {}
        for flag, (k, m) in zip(v, pairs):
            if flag:
                cand.setdefault(k, set()).add(m)
        out.append((cand, found[v]))
    return out, truncated


def _trim(model):
    """Drop rules, globals and stack symbols that no reachable
    configuration can use.

    Overapproximate flow analysis: a global is live once some usable
    rule can hand over to it, a symbol may appear in a stack once some
    usable rule pushes or spawns it.
    """
    live_g = {model.g0}
    live_s = {model.gamma0}
    unfreeze = getattr(model, "unfreeze", [])
    if getattr(model, "frozen_init", None) is not None:
        live_s.add(model.frozen_init)
    changed = True
    while changed:
        changed = False
        before = (len(live_g), len(live_s))
        for r in model.create:
            if r.g in live_g and r.top in live_s:
                live_g.add(r.g2)
                live_s.update(r.push)
                if r.spawn is not None:
                    live_s.add(r.spawn)
        for r in model.interrupt:
            if r.g in live_g and r.top in live_s:
                live_g.add(r.g2)
                live_s.update(r.push)
        for r in model.resume:
            if r.g in live_g and r.top in live_s:
                live_g.add(r.g2)
        for r in model.terminate:
            if r.g in live_g:
                live_g.add(r.g2)
        for r in unfreeze:
            if r.g in live_g and r.resume_top in live_s and \
                    r.freeze_top in live_s:
                live_g.add(r.g2)
        changed = (len(live_g), len(live_s)) != before

    def dedup(rules):
        seen = set()
        out = []
        for r in rules:
            t = tuple(r)
            if t not in seen:
                seen.add(t)
                out.append(t)
        return out

    create = dedup(r for r in model.create
                   if r.g in live_g and r.top in live_s)
    interrupt = dedup(r for r in model.interrupt
                      if r.g in live_g and r.top in live_s)
    resume = dedup(r for r in model.resume
                   if r.g in live_g and r.top in live_s)
    terminate = dedup(r for r in model.terminate if r.g in live_g)
    globals_ = [g for g in model.globals if g in live_g]
    stack = [s for s in model.stack if s in live_s]
    if unfreeze or getattr(model, "frozen_init", None) is not None:
        return FreezingDcps(
            globals_, stack, create, interrupt, resume, terminate,
            model.g0, model.gamma0,
            dedup(r for r in unfreeze if r.g in live_g and
                  r.resume_top in live_s and r.freeze_top in live_s),
            model.frozen_init)
    return Dcps(globals_, stack, create, interrupt, resume, terminate,
                model.g0, model.gamma0)


def _progressive_pipeline(fm, K, **budgets):
    reduced, K2 = freeze_reduce(_trim(fm), K)
    reduced = _trim(reduced)
    mb, q0 = dcps_to_vassb(reduced, K2)
    s0 = VassbConfig(q0, Multiset(), Multiset())
    return decide_progressive(mb, s0, **budgets)


def decide_starvation(model, K, cap=1, candidate_limit=6, product_cap=50_000,
                      context_cap=50_000, **budgets):
    """Three-valued starvation check at switch bound K.

    The input model is first transformed so that fair starving runs
    correspond to progressive starving runs; all further analysis works
    on the transformed model.  For each segment index, the guess tuples
    are pruned to the capped productions that complete executions can
    actually exhibit, and only the maximal consistent tuples are ever
    built: every consistent tuple is dominated by a maximal one and the
    freezing model grows monotonically with the tuple, so refuting the
    maximal candidates refutes them all.  The working cap is honest:
    the sound cap is reported, and verdicts reached below it are
    flagged.
    """
    model = progressivize(model, K)
    types, sls = thread_types(model, K)
    notes = {"cap": cap, "pruned_support": True}
    if K < 1 or not types:
        notes["reason"] = "no suspended thread can exist"
        return {"status": "none", "notes": notes}
    unknown = False
    for i in range(1, K + 1):
        sets = [thread_production_set(model, K, t, i) for t in types]
        rep = consistency_bound_B(sets)
        notes["bound_B_i%d" % i] = rep.to_json()
        notes["cap_sound"] = rep.value != float("inf") and cap >= rep.value
        try:
            pools = [capped_productions(sl, cap) for sl in sls]
            cands, truncated = _maximal_candidates(
                sets, pools, product_cap=product_cap, limit=candidate_limit)
            if truncated:
                unknown = True
                notes["candidates_truncated_i%d" % i] = True
            for cand, word in cands:
                cu = {types[k]: sorted(ms, key=repr)
                      for k, ms in cand.items()}
                fm = build_A_iu(model, K, i, cu, cap,
                                context_cap=context_cap)
                res = _progressive_pipeline(fm, K, **budgets)
                if res["status"] == "progressive_run":
                    return {
                        "status": "starving_run", "i": i, "u": cu,
                        "consistency_witness": word,
                        "progressive": res, "notes": notes,
                    }
                if res["status"] == "unknown":
                    unknown = True
        except BudgetExceeded as e:
            unknown = True
            notes["budget_i%d" % i] = str(e)
    if unknown:
        return {"status": "unknown", "notes": notes}
    return {"status": "none", "notes": notes}
