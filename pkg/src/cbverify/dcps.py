"""Dynamic networks of concurrent pushdown systems.

The model: finitely many global states shared by an unbounded bag of
threads, each thread a pushdown stack.  A scheduler runs one thread at a
time; interruption rules swap the active thread back into the bag with
an incremented context-switch count, resumption rules pull a thread out
of the bag by its top-of-stack symbol, and termination rules retire a
thread whose stack has emptied.  A K-bounded run never resumes a thread
that has already been switched more than K times.

This module provides the model itself, its small-step semantics, bounded
exploration (a testing oracle for the reductions downstream), extraction
of the per-thread pushdown automaton whose words describe spawns and
scheduling decisions, the spawn-multiset semilinear sets per thread
type, the progressiveness-enforcing transformation, and the reduction of
freezing models (one distinguished frozen thread plus unfreeze rules) to
plain models at switch bound 2K+1.
"""

import json
from collections import namedtuple

from .automata import Nfa, Pda, parikh_image, pda_intersect_regular
from .foundations import BudgetExceeded, Multiset, sl_transform, symkey

SCHED = "#"
PBOT = ("stack_bot",)

CreateRule = namedtuple("CreateRule", "g top g2 push spawn")
InterruptRule = namedtuple("InterruptRule", "g top g2 push")
ResumeRule = namedtuple("ResumeRule", "g g2 top")
TermRule = namedtuple("TermRule", "g g2")
UnfreezeRule = namedtuple("UnfreezeRule", "g g2 resume_top freeze_top")

DcpsConfig = namedtuple("DcpsConfig", "g active bag")

# tags reserved for letters of the per-thread automaton
RESERVED_TAGS = {"jmp", "fin", "seg"}


def frozen(sym):
    return ("frz", sym)


def _is_frozen(sym):
    return isinstance(sym, tuple) and len(sym) == 2 and sym[0] in ("frz", "barfrz")


def _sym_to_json(s):
    if isinstance(s, tuple):
        return [_sym_to_json(x) for x in s]
    return s


def _sym_from_json(s):
    if isinstance(s, list):
        return tuple(_sym_from_json(x) for x in s)
    return s


class Dcps:
    """Model: globals, stack alphabet, the four rule families, initial
    global state and initial thread symbol."""

    def __init__(self, globals_, stack, create, interrupt, resume, terminate,
                 g0, gamma0):
        self.globals = list(globals_)
        self.stack = list(stack)
        self.create = [CreateRule(*r) for r in create]
        self.interrupt = [InterruptRule(*r) for r in interrupt]
        self.resume = [ResumeRule(*r) for r in resume]
        self.terminate = [TermRule(*r) for r in terminate]
        self.g0 = g0
        self.gamma0 = gamma0

    def initial_config(self):
        return DcpsConfig(self.g0, SCHED, Multiset.of(((self.gamma0,), 0)))

    def to_json(self):
        return {
            "globals": [_sym_to_json(g) for g in self.globals],
            "stack": [_sym_to_json(s) for s in self.stack],
            "init": {"g": _sym_to_json(self.g0), "gamma": _sym_to_json(self.gamma0)},
            "rules": {
                "create": [
                    {
                        "g": _sym_to_json(r.g),
                        "top": _sym_to_json(r.top),
                        "g2": _sym_to_json(r.g2),
                        "push": [_sym_to_json(s) for s in r.push],
                        **({"spawn": _sym_to_json(r.spawn)} if r.spawn is not None else {}),
                    }
                    for r in self.create
                ],
                "interrupt": [
                    {
                        "g": _sym_to_json(r.g),
                        "top": _sym_to_json(r.top),
                        "g2": _sym_to_json(r.g2),
                        "push": [_sym_to_json(s) for s in r.push],
                    }
                    for r in self.interrupt
                ],
                "resume": [
                    {"g": _sym_to_json(r.g), "g2": _sym_to_json(r.g2),
                     "top": _sym_to_json(r.top)}
                    for r in self.resume
                ],
                "terminate": [
                    {"g": _sym_to_json(r.g), "g2": _sym_to_json(r.g2)}
                    for r in self.terminate
                ],
            },
        }

    @classmethod
    def from_json(cls, data):
        rules = data.get("rules", {})
        f = _sym_from_json
        return cls(
            [f(g) for g in data["globals"]],
            [f(s) for s in data["stack"]],
            [
                (f(r["g"]), f(r["top"]), f(r["g2"]),
                 tuple(f(s) for s in r.get("push", [])),
                 f(r["spawn"]) if "spawn" in r else None)
                for r in rules.get("create", [])
            ],
            [
                (f(r["g"]), f(r["top"]), f(r["g2"]),
                 tuple(f(s) for s in r.get("push", [])))
                for r in rules.get("interrupt", [])
            ],
            [(f(r["g"]), f(r["g2"]), f(r["top"])) for r in rules.get("resume", [])],
            [(f(r["g"]), f(r["g2"])) for r in rules.get("terminate", [])],
            f(data["init"]["g"]),
            f(data["init"]["gamma"]),
        )

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        if "frozen_init" in data or data.get("rules", {}).get("unfreeze"):
            return FreezingDcps.from_json(data)
        return cls.from_json(data)


class FreezingDcps(Dcps):
    """Dcps plus unfreeze rules and an initial frozen thread symbol.
    Every reachable configuration carries exactly one frozen thread."""

    def __init__(self, globals_, stack, create, interrupt, resume, terminate,
                 g0, gamma0, unfreeze, frozen_init):
        super().__init__(globals_, stack, create, interrupt, resume, terminate,
                         g0, gamma0)
        self.unfreeze = [UnfreezeRule(*r) for r in unfreeze]
        self.frozen_init = frozen_init

    def initial_config(self):
        bag = Multiset.of(((self.gamma0,), 0)) + Multiset.of(((frozen(self.frozen_init),), 0))
        return DcpsConfig(self.g0, SCHED, bag)

    def to_json(self):
        data = super().to_json()
        data["rules"]["unfreeze"] = [
            {
                "g": _sym_to_json(r.g),
                "g2": _sym_to_json(r.g2),
                "resume_top": _sym_to_json(r.resume_top),
                "freeze_top": _sym_to_json(r.freeze_top),
            }
            for r in self.unfreeze
        ]
        data["frozen_init"] = _sym_to_json(self.frozen_init)
        return data

    @classmethod
    def from_json(cls, data):
        base = Dcps.from_json(data)
        f = _sym_from_json
        return cls(
            base.globals, base.stack, base.create, base.interrupt,
            base.resume, base.terminate, base.g0, base.gamma0,
            [
                (f(r["g"]), f(r["g2"]), f(r["resume_top"]), f(r["freeze_top"]))
                for r in data.get("rules", {}).get("unfreeze", [])
            ],
            f(data["frozen_init"]),
        )


def dcps_validate(model, K):
    """Structural checks; returns the full list of violations (empty = ok)."""
    errors = []
    gset, sset = set(model.globals), set(model.stack)
    if K < 0:
        errors.append("switch bound must be nonnegative")
    if model.g0 not in gset:
        errors.append("initial global state undeclared")
    if model.gamma0 not in sset:
        errors.append("initial stack symbol undeclared")
    for s in sset:
        if isinstance(s, tuple) and s and s[0] in RESERVED_TAGS:
            errors.append("stack symbol uses reserved tag: %r" % (s,))
    for i, r in enumerate(model.create):
        if r.g not in gset or r.g2 not in gset:
            errors.append("create rule %d: undeclared global" % i)
        if r.top not in sset:
            errors.append("create rule %d: undeclared top symbol" % i)
        if any(s not in sset for s in r.push):
            errors.append("create rule %d: undeclared push symbol" % i)
        if len(r.push) > 2:
            errors.append("create rule %d: push too long" % i)
        if r.spawn is not None and r.spawn not in sset:
            errors.append("create rule %d: undeclared spawn symbol" % i)
    for i, r in enumerate(model.interrupt):
        if r.g not in gset or r.g2 not in gset:
            errors.append("interrupt rule %d: undeclared global" % i)
        if r.top not in sset:
            errors.append("interrupt rule %d: undeclared top symbol" % i)
        if any(s not in sset for s in r.push):
            errors.append("interrupt rule %d: undeclared push symbol" % i)
        if not 1 <= len(r.push) <= 2:
            errors.append("interrupt rule %d: push length must be 1 or 2" % i)
    for i, r in enumerate(model.resume):
        if r.g not in gset or r.g2 not in gset:
            errors.append("resume rule %d: undeclared global" % i)
        if r.top not in sset:
            errors.append("resume rule %d: undeclared stack symbol" % i)
    for i, r in enumerate(model.terminate):
        if r.g not in gset or r.g2 not in gset:
            errors.append("terminate rule %d: undeclared global" % i)
    if isinstance(model, FreezingDcps):
        if model.frozen_init not in sset:
            errors.append("frozen initial symbol undeclared")
        for i, r in enumerate(model.unfreeze):
            if r.g not in gset or r.g2 not in gset:
                errors.append("unfreeze rule %d: undeclared global" % i)
            if r.resume_top not in sset or r.freeze_top not in sset:
                errors.append("unfreeze rule %d: undeclared stack symbol" % i)
    return errors


def _bag_items(bag):
    return bag.sorted_items()


def dcps_step(model, c, K):
    """All (rule, successor) pairs from configuration c, deterministically
    ordered by (rule kind, declaration index, bag item)."""
    out = []
    if c.active == SCHED:
        for r in model.resume:
            if r.g != c.g:
                continue
            for (item, _count) in _bag_items(c.bag):
                word, i = item
                if i > K or not word or word[0] != r.top:
                    continue
                out.append((r, DcpsConfig(r.g2, (word, i), c.bag - Multiset.of(item))))
        if isinstance(model, FreezingDcps):
            for r in model.unfreeze:
                if r.g != c.g:
                    continue
                for (fitem, _fc) in _bag_items(c.bag):
                    fword, i = fitem
                    if i > K or not fword or fword[0] != frozen(r.resume_top):
                        continue
                    for (titem, _tc) in _bag_items(c.bag):
                        tword, j = titem
                        if not tword or tword[0] != r.freeze_top or _is_frozen(tword[0]):
                            continue
                        if fitem == titem:
                            continue  # cannot be its own freeze target
                        bag = c.bag - Multiset.of(fitem) - Multiset.of(titem)
                        bag = bag + Multiset.of(((frozen(tword[0]),) + tword[1:], j))
                        active = ((r.resume_top,) + fword[1:], i)
                        out.append((r, DcpsConfig(r.g2, active, bag)))
        return out
    word, i = c.active
    if word:
        top = word[0]
        for r in model.create:
            if r.g == c.g and r.top == top:
                bag = c.bag
                if r.spawn is not None:
                    bag = bag + Multiset.of(((r.spawn,), 0))
                out.append((r, DcpsConfig(r.g2, (r.push + word[1:], i), bag)))
        for r in model.interrupt:
            if r.g == c.g and r.top == top:
                bag = c.bag + Multiset.of((r.push + word[1:], i + 1))
                out.append((r, DcpsConfig(r.g2, SCHED, bag)))
    else:
        for r in model.terminate:
            if r.g == c.g:
                out.append((r, DcpsConfig(r.g2, SCHED, c.bag)))
    return out


class DcpsRun:
    """A replayable run: the initial configuration plus (rule, successor)
    steps.  Runs double as certificates; replay re-derives every step."""

    def __init__(self, model, K, steps):
        self.model = model
        self.K = K
        self.steps = list(steps)

    def configs(self):
        cs = [self.model.initial_config()]
        cs.extend(c for _r, c in self.steps)
        return cs

    def replay(self):
        c = self.model.initial_config()
        for rule, succ in self.steps:
            successors = dcps_step(self.model, c, self.K)
            if (rule, succ) not in successors:
                return False
            if isinstance(self.model, FreezingDcps):
                nfrozen = sum(
                    n for (w, _i), n in succ.bag.sorted_items()
                    if w and _is_frozen(w[0])
                )
                if succ.active != SCHED and succ.active[0] and \
                        _is_frozen(succ.active[0][0]):
                    nfrozen += 1
                if nfrozen != 1:
                    return False
            c = succ
        return True

    def to_json(self):
        def cfg(c):
            return {
                "g": _sym_to_json(c.g),
                "active": "#" if c.active == SCHED else
                          [[_sym_to_json(s) for s in c.active[0]], c.active[1]],
                "bag": [
                    [[_sym_to_json(s) for s in w], i, n]
                    for (w, i), n in c.bag.sorted_items()
                ],
            }
        return {"steps": [[list(map(_sym_to_json, r)), cfg(c)] for r, c in self.steps]}


def dcps_explore(model, K, depth, mode, budget=100_000, max_samples=5):
    """Deterministic bounded DFS.

    nontermination_sample: runs that reach the depth bound (candidates for
    infinite behavior).  lasso_search: (prefix, cycle) with a repeated
    configuration, a sound but incomplete non-termination witness.
    Returns {"status": ...} with status "lasso" / "none" / "ok" /
    "unknown"; "none" only when the whole bounded tree was explored
    without truncation.
    """
    if mode not in ("nontermination_sample", "lasso_search"):
        raise ValueError("unknown mode %r" % mode)
    init = model.initial_config()
    samples = []
    truncated = False
    spent = 0

    path_cfgs = [init]
    path_steps = []

    def dfs(c):
        nonlocal truncated, spent
        if mode == "lasso_search" and len(samples) >= 1:
            return
        spent += 1
        if spent > budget:
            raise BudgetExceeded("dcps exploration")
        succs = dcps_step(model, c, K)
        if len(path_steps) >= depth:
            if succs:
                truncated = True
                if mode == "nontermination_sample" and len(samples) < max_samples:
                    samples.append(DcpsRun(model, K, path_steps))
            return
        for rule, succ in succs:
            if mode == "lasso_search" and succ in path_cfgs:
                j = path_cfgs.index(succ)
                samples.append(
                    {
                        "prefix": DcpsRun(model, K, path_steps[:j]),
                        "cycle": path_steps[j:] + [(rule, succ)],
                        "run": DcpsRun(model, K, path_steps + [(rule, succ)]),
                    }
                )
                return
            path_cfgs.append(succ)
            path_steps.append((rule, succ))
            dfs(succ)
            path_cfgs.pop()
            path_steps.pop()

    try:
        dfs(init)
    except BudgetExceeded:
        return {"status": "unknown", "reason": "budget exceeded"}
    if mode == "lasso_search":
        if samples:
            return {"status": "lasso", **samples[0]}
        return {"status": "unknown" if truncated else "none"}
    return {
        "status": "ok",
        "runs": samples,
        "complete": not truncated,
    }


# ---------------------------------------------------------------------------
# Per-thread pushdown automata and spawn languages
# ---------------------------------------------------------------------------

def _thread_pda(model, g, gamma, empty_stack_only=False, segments=None):
    """The automaton of one thread started as (g, gamma).

    Letters: a stack symbol = that symbol spawned; ("jmp", g2, g2top, g3) =
    interrupted into global g2 and later resumed with top g2top at global
    g3; ("fin", g2) = final interruption or termination at global g2.
    With segments=K, spawn letters carry the segment index instead:
    ("seg", symbol, j) for j in 0..K.

    Memoized per model instance; the model is treated as immutable.
    """
    cache = model.__dict__.setdefault("_thread_pda_cache", {})
    key = (g, gamma, empty_stack_only, segments)
    hit = cache.get(key)
    if hit is not None:
        return hit
    out = _thread_pda_build(model, g, gamma, empty_stack_only, segments)
    cache[key] = out
    return out


def _thread_pda_build(model, g, gamma, empty_stack_only, segments):
    G, Gam = model.globals, model.stack
    init, end = ("init",), ("end",)
    stack = list(Gam) + [PBOT]
    edges = [(init, PBOT, None, ("g", g), (gamma, PBOT))]
    spawn_letters = set()

    def spawn_edge(p, top, sym, q, push):
        if segments is None:
            spawn_letters.add(sym)
            edges.append((p, top, sym, q, push))
        else:
            for j in range(segments + 1):
                spawn_letters.add(("seg", sym, j))
                edges.append((p, top, ("seg", sym, j), q, push))

    for r in model.create:
        if r.spawn is None:
            edges.append((("g", r.g), r.top, None, ("g", r.g2), r.push))
        else:
            spawn_edge(("g", r.g), r.top, r.spawn, ("g", r.g2), r.push)
    jump_letters, fin_letters = set(), set()
    gq_pairs = set()
    for r in model.interrupt:
        # the wait state's only exit pops the wait symbol, so with a
        # nonempty push only the pushed top can ever be waited on
        waits = [r.push[0]] if r.push else list(Gam)
        for g3 in G:
            for s2 in waits:
                letter = ("jmp", r.g2, s2, g3)
                jump_letters.add(letter)
                gq_pairs.add((g3, s2))
                edges.append((("g", r.g), r.top, letter, ("gq", g3, s2), r.push))
        edges.append((("g", r.g), r.top, None, ("gq", r.g2, PBOT), r.push))
        fin_letters.add(("fin", r.g2))
    for h, s2 in gq_pairs:
        edges.append((("gq", h, s2), s2, None, ("g", h), (s2,)))
    for h in {r.g2 for r in model.interrupt}:
        tops = [PBOT] if empty_stack_only else list(Gam) + [PBOT]
        for s2 in tops:
            edges.append((("gq", h, PBOT), s2, ("fin", h), end, (s2,)))
    for r in model.terminate:
        fin_letters.add(("fin", r.g2))
        edges.append((("g", r.g), PBOT, ("fin", r.g2), end, (PBOT,)))
    alphabet = spawn_letters | jump_letters | fin_letters
    if not alphabet:
        alphabet = {("fin", g)}  # Pda requires a nonempty letter universe
    states = {init, end}
    for p, _t, _a, q, _w in edges:
        states.add(p)
        states.add(q)
    return Pda(sorted(states, key=symkey), alphabet, stack, edges, init, PBOT,
               {init, end})


def extract_thread_pda(model, g, gamma):
    return _thread_pda(model, g, gamma)


def letter_kind(letter):
    if isinstance(letter, tuple) and letter:
        if letter[0] == "jmp":
            return "jump"
        if letter[0] == "fin":
            return "final"
        if letter[0] == "seg":
            return "spawn"
    return "spawn"


def segment_language(model, g, gamma, i):
    """Thread automaton restricted to executions with exactly i segments:
    i-1 interruption letters, then a final letter."""
    if i < 1:
        raise ValueError("segment count must be at least 1")
    p = _thread_pda(model, g, gamma)
    states = list(range(i)) + ["acc"]
    edges = []
    for j in range(i):
        for a in p.input_alphabet:
            kind = letter_kind(a)
            if kind == "spawn":
                edges.append((j, a, j))
            elif kind == "jump" and j < i - 1:
                edges.append((j, a, j + 1))
            elif kind == "final" and j == i - 1:
                edges.append((j, a, "acc"))
    nfa = Nfa(states, p.input_alphabet, edges, 0, {"acc"})
    return pda_intersect_regular(p, nfa)


ThreadType = namedtuple("ThreadType", "g gamma switches final")


def thread_type_ok(model, K, t):
    if len(t.switches) != K:
        return False
    gset, sset = set(model.globals), set(model.stack)
    if t.g not in gset or t.gamma not in sset or t.final not in gset:
        return False
    return all(
        g2 in gset and s in sset and g3 in gset for g2, s, g3 in t.switches
    )


def type_spawn_pda(model, K, t):
    """PDA for the spawn words of a thread of type t: segment-indexed spawn
    letters, the type's switch triples in order, then termination with an
    empty stack."""
    p = _thread_pda(model, t.g, t.gamma, empty_stack_only=True, segments=K)
    states = list(range(K + 1)) + ["acc"]
    edges = []
    for j in range(K + 1):
        for a in p.input_alphabet:
            kind = letter_kind(a)
            if kind == "spawn" and a[2] == j:
                edges.append((j, a, j))
            elif kind == "jump" and j < K and a[1:] == tuple(t.switches[j]):
                edges.append((j, a, j + 1))
            elif kind == "final" and j == K and a == ("fin", t.final):
                edges.append((j, a, "acc"))
    nfa = Nfa(states, p.input_alphabet, edges, 0, {"acc"})
    return pda_intersect_regular(p, nfa)


def type_spawn_semilinear(model, K, t):
    """sl(t): the semilinear spawn image of thread type t over the symbols
    (stack symbol, segment index), or None when no execution has type t."""
    sl = parikh_image(type_spawn_pda(model, K, t))
    if sl.is_empty():
        return None
    keep = {
        s
        for comp in sl.components
        for m in (comp.base,) + comp.periods
        for s in m.support
        if letter_kind(s) == "spawn"
    }
    sl = sl_transform(sl, "project", keep=keep)
    rename = {s: (s[1], s[2]) for s in keep}
    return sl_transform(sl, "rename", rename=rename) if rename else sl


# ---------------------------------------------------------------------------
# Progressiveness-enforcing transformation
# ---------------------------------------------------------------------------

BOT = ("bot",)


def _restrict_subset(model, subset, gamma):
    blocked = {r.g for r in model.resume if r.top == gamma}
    return frozenset(g for g in subset if g not in blocked)


def _reachable_subsets(model):
    full = frozenset(model.globals)
    subsets = {full}
    queue = [full]
    while queue:
        cur = queue.pop()
        for gamma in model.stack:
            nxt = _restrict_subset(model, cur, gamma)
            if nxt not in subsets:
                subsets.add(nxt)
                queue.append(nxt)
    return sorted(subsets, key=lambda s: (len(s), sorted(map(symkey, s))))


def progressivize(model, K):
    """Transformed model whose progressive K-bounded infinite runs exist
    iff the original has a fair K-bounded infinite run.

    Every thread gets an explicit bottom-of-stack marker and carries its
    switch count on the top symbol; the global state tracks the active
    thread's count and a subset of globals used to validate guesses that
    a bag thread is permanently stuck.  Terminating threads are forced
    through the remaining switches up to K first, so progressiveness
    (every bag thread eventually resumed, every terminating thread
    switched exactly K times) matches fairness of the original.
    """
    subsets = _reachable_subsets(model)
    G, Gam = model.globals, model.stack
    gam_bot = list(Gam) + [BOT]

    def S(g, sub):  # schedule-point states
        return ("s", g, sub)

    def A(g, k, sub):  # active-thread states
        return ("a", g, k, sub)

    def AB(g, k, sub):  # extended-termination states
        return ("ab", g, k, sub)

    def idx(s, k):
        return ("k", s, k)

    def bar(s):
        return ("bar", s)

    create, interrupt, resume, terminate = [], [], [], []
    for sub in subsets:
        for r in model.resume:  # (1), (2)
            if r.g not in sub:
                continue
            resume.append((S(r.g, sub), S(r.g2, sub), r.top))
            for k in range(1, K + 1):
                resume.append((S(r.g, sub), A(r.g2, k, sub), idx(r.top, k)))
        for g in G:
            for s in Gam:  # (3)
                create.append((S(g, sub), s, A(g, 0, sub), (idx(s, 0), BOT), None))
            for k in range(K + 1):
                for s in gam_bot:  # (4)
                    create.append((A(g, k, sub), s, A(g, k, sub), (idx(s, k),), None))
        for k in range(K + 1):
            for r in model.create:  # (5), (6)
                create.append(
                    (A(r.g, k, sub), idx(r.top, k), A(r.g2, k, sub), r.push, r.spawn)
                )
            for r in model.interrupt:  # (7), (14), (15)
                if k < K and r.g2 in sub:
                    push = (idx(r.push[0], k + 1),) + r.push[1:]
                    interrupt.append((A(r.g, k, sub), idx(r.top, k), S(r.g2, sub), push))
                if r.g2 in sub:
                    new_top = r.push[0]
                    resumable = any(
                        rr.top == new_top and rr.g in sub for rr in model.resume
                    )
                    create.append(
                        (A(r.g, k, sub), idx(r.top, k), AB(r.g2, k, sub), (),
                         bar(new_top) if resumable else None)
                    )
            for r in model.terminate:  # (8)
                create.append(
                    (A(r.g, k, sub), idx(BOT, k), AB(r.g2, k, sub), (idx(BOT, k),), None)
                )
        for g in sub:
            for k in range(K + 1):
                if k < K:  # (9), (10)
                    interrupt.append(
                        (AB(g, k, sub), idx(BOT, k), AB(g, k + 1, sub), (idx(BOT, k + 1),))
                    )
                    create.append(
                        (AB(g, k, sub), idx(BOT, k), AB(g, k, sub), (idx(BOT, k),), None)
                    )
                resume.append((AB(g, k, sub), AB(g, k, sub), idx(BOT, k)))  # (11)
                for s in Gam:  # (16)
                    create.append((AB(g, k, sub), s, AB(g, k, sub), (), None))
                create.append((AB(g, k, sub), BOT, AB(g, k, sub), (idx(BOT, k),), None))  # (17)
            create.append((AB(g, K, sub), idx(BOT, K), AB(g, K, sub), (), None))  # (12)
            terminate.append((AB(g, K, sub), S(g, sub)))  # (13)
            for s in Gam:  # (18), (19)
                resume.append((S(g, sub), A(g, 0, sub), bar(s)))
                sub2 = _restrict_subset(model, sub, s)
                if g in sub2:
                    create.append((A(g, 0, sub), bar(s), AB(g, 0, sub2), (idx(BOT, 0),), None))

    stack = gam_bot + [idx(s, k) for s in gam_bot for k in range(K + 1)]
    stack += [bar(s) for s in Gam]
    globals_ = sorted(
        {r[0] for r in create} | {r[2] for r in create}
        | {r[0] for r in interrupt} | {r[2] for r in interrupt}
        | {r[0] for r in resume} | {r[1] for r in resume}
        | {r[0] for r in terminate} | {r[1] for r in terminate}
        | {S(model.g0, frozenset(model.globals))},
        key=symkey,
    )
    return Dcps(globals_, stack, create, interrupt, resume, terminate,
                S(model.g0, frozenset(model.globals)), model.gamma0)


# ---------------------------------------------------------------------------
# Freezing models reduced to plain models
# ---------------------------------------------------------------------------

def freeze_reduce(model, K):
    """Plain model simulating the freezing model at switch bound 2K+1.

    An unfreeze is simulated by resuming the freeze target, marking it
    frozen, swapping it out, then resuming the frozen thread and
    unmarking it.  Two alternating frozen markers prevent the freshly
    frozen thread from being the one resumed next.  Non-frozen resumes
    burn one extra switch so that all switch counts double uniformly.
    """
    G, Gam = model.globals, model.stack
    g0p, gam0p = ("boot",), ("boot_sym",)

    def gbar(g):
        return ("gbar", g)

    def uf(g, marker):
        return ("uf", g, marker)

    def bar(s):
        return ("bar", s)

    def barfrz(s):
        return ("barfrz", s)

    create, interrupt, resume, terminate = [], [], [], []
    # initial frozen thread bookkeeping (1a-1c)
    resume.append((g0p, g0p, gam0p))
    create.append((g0p, gam0p, g0p, (frozen(model.frozen_init),), model.gamma0))
    interrupt.append((g0p, frozen(model.frozen_init), model.g0,
                      (frozen(model.frozen_init),)))
    # doubled resumes (2a-2e)
    for r in model.resume:
        resume.append((r.g, gbar(r.g2), r.top))
        create.append((gbar(r.g2), r.top, gbar(r.g2), (bar(r.top),), None))
        interrupt.append((gbar(r.g2), bar(r.top), gbar(r.g2), (bar(r.top),)))
        resume.append((gbar(r.g2), r.g2, bar(r.top)))
        create.append((r.g2, bar(r.top), r.g2, (r.top,), None))
    # unfreeze simulation, both marker polarities (3a-3e, 4a-4e)
    for r in model.unfreeze:
        for res_marker, frz_marker in (
            (frozen(r.resume_top), barfrz(r.freeze_top)),
            (barfrz(r.resume_top), frozen(r.freeze_top)),
        ):
            st = uf(r.g2, res_marker)
            resume.append((r.g, st, r.freeze_top))
            create.append((st, r.freeze_top, st, (r.freeze_top,), None))
            interrupt.append((st, r.freeze_top, st, (frz_marker,)))
            resume.append((st, st, res_marker))
            create.append((st, res_marker, r.g2, (r.resume_top,), None))
    # unchanged rules (5a-5c)
    create.extend(model.create)
    interrupt.extend(model.interrupt)
    terminate.extend(model.terminate)

    stack = [gam0p] + list(Gam) + [bar(s) for s in Gam]
    stack += [frozen(s) for s in Gam] + [barfrz(s) for s in Gam]
    globals_ = [g0p] + list(G) + [gbar(g) for g in G]
    globals_ += sorted(
        {r[0] for r in resume if isinstance(r[0], tuple) and r[0][0] == "uf"}
        | {r[1] for r in resume if isinstance(r[1], tuple) and r[1][0] == "uf"},
        key=symkey,
    )
    reduced = Dcps(
        sorted(set(globals_), key=symkey), stack, create, interrupt,
        resume, terminate, g0p, gam0p,
    )
    return reduced, 2 * K + 1
