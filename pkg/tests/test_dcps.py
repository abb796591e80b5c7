import itertools
import os

import networkx as nx
import pytest

from exactlp import lp_feasible

from cbverify.foundations import Multiset, sl_member, symkey
from cbverify.dcps import (
    PBOT,
    SCHED,
    Dcps,
    DcpsConfig,
    DcpsRun,
    FreezingDcps,
    ThreadType,
    dcps_explore,
    dcps_step,
    dcps_validate,
    extract_thread_pda,
    freeze_reduce,
    frozen,
    letter_kind,
    progressivize,
    segment_language,
    type_spawn_semilinear,
)

MODELS = os.path.join(os.path.dirname(__file__), "..", "models")


def load(name):
    return Dcps.load(os.path.join(MODELS, name + ".json"))


# ---------------------------------------------------------------------------
# reachability graph helpers (independent oracles for run-level properties)
# ---------------------------------------------------------------------------

def _cap_bag(bag, count_cap):
    return Multiset({x: min(n, count_cap) for x, n in bag.items()})


def _rule_kind(rule, model):
    if rule in getattr(model, "resume", ()) or \
            rule in getattr(model, "unfreeze", ()):
        return "resume"
    if rule in model.interrupt:
        return "swap"
    if rule in model.terminate:
        return "term"
    return "thread"


def reach_graph(model, K, node_cap=300_000, bag_cap=None, count_cap=None,
                progressive_terms=False):
    """Bounded reachability graph over configurations, edges labelled with
    the kinds of rules realizing them and the classes resumed along them.

    Two modes: bag_cap keeps the exact semantics on configurations with a
    small bag (positive verdicts on the result are real runs); count_cap
    saturates per-class counts at the cap, an over-approximation whose
    negative verdicts are sound for the full system.  Returns (graph,
    truncated); a truncated graph supports no negative verdict."""
    assert (bag_cap is None) != (count_cap is None)
    init = model.initial_config()
    g = nx.DiGraph()
    g.add_node(init)
    queue = [init]
    truncated = False
    seen = {init}

    def succs_of(c):
        out = []
        for rule, succ in dcps_step(model, c, K):
            kind = _rule_kind(rule, model)
            if progressive_terms and kind == "term" and c.active[1] != K:
                continue  # termination below the switch bound: never progressive
            eff = _bag_effect(c.bag, succ.bag)
            if count_cap is None:
                out.append((kind, eff, succ))
                continue
            capped = succ._replace(bag=_cap_bag(succ.bag, count_cap))
            out.append((kind, eff, capped))
            # classes consumed out of a saturated count may still hold more
            dropped = [
                x for x in c.bag.support
                if c.bag[x] == count_cap and succ.bag[x] == count_cap - 1
            ]
            for r in range(1, len(dropped) + 1):
                for keep in itertools.combinations(dropped, r):
                    bag = capped.bag
                    for x in keep:
                        bag = bag + Multiset.of(x)
                    out.append((kind, eff, capped._replace(bag=bag)))
        return out

    while queue:
        c = queue.pop()
        for kind, eff, succ in succs_of(c):
            if bag_cap is not None and succ.bag.size > bag_cap:
                truncated = True
                continue
            if succ not in seen:
                if len(seen) >= node_cap:
                    truncated = True
                    continue
                seen.add(succ)
                queue.append(succ)
            if g.has_edge(c, succ):
                g[c][succ]["vars"].add((kind, eff))
            else:
                g.add_edge(c, succ, vars={(kind, eff)})
    return g, truncated


def _bag_effect(before, after):
    """Concrete bag delta of a step, keyed by thread class.  Stored with the
    edge because the saturated graph hides it: a step out of a saturated
    class still concretely consumes one item."""
    diff = {}
    for x in set(before.support) | set(after.support):
        d = after[x] - before[x]
        if d:
            diff[x] = d
    return tuple(sorted(diff.items(), key=lambda kv: symkey(kv[0])))


def _zero_effect_cycle_feasible(g, comp):
    """Exact rational LP: is there a nonempty circulation over the
    component's edges with zero net bag effect per class and at least one
    scheduler edge?  Any concrete infinite run's recurring cycle returns to
    an identical configuration, hence induces such a circulation, so
    infeasibility soundly rules the component out even on the saturated
    over-approximation."""
    edge_vars = []
    for u in comp:
        for v in g.successors(u):
            if v in comp:
                for kind, eff in g[u][v]["vars"]:
                    edge_vars.append((u, v, kind, dict(eff)))
    assert len(edge_vars) <= 2000, "component too large for the cycle LP"
    n = len(edge_vars)
    A, b = [], []

    def equality(coeffs):
        if any(coeffs):
            A.append(coeffs)
            b.append(0)
            A.append([-v for v in coeffs])
            b.append(0)

    nodes = sorted(comp, key=str)
    for node in nodes:
        equality([
            (1 if u == node else 0) - (1 if v == node else 0)
            for u, v, _k, _e in edge_vars
        ])
    classes = sorted({x for _u, _v, _k, e in edge_vars for x in e}, key=symkey)
    for x in classes:
        equality([e.get(x, 0) for _u, _v, _k, e in edge_vars])
    A.append([-1 if k != "thread" else 0 for _u, _v, k, _e in edge_vars])
    b.append(-1)
    return lp_feasible(A, b)


def _has_good_scc(graph, model, K, kind):
    """Fixpoint pruning: delete nodes whose obligations (bag classes for
    progressiveness, ready classes for fairness) cannot all be met by
    resume edges within the node's strongly connected component.  A good
    lasso's cycle survives pruning; a surviving component yields one."""
    g = graph.copy()
    while True:
        bad = set()
        for comp in nx.strongly_connected_components(g):
            edges = [
                (u, v) for u in comp for v in g.successors(u) if v in comp
            ]
            resumed = {
                v.active for u, v in edges
                if any(k == "resume" for k, _e in g[u][v]["vars"])
            }
            for c in comp:
                if kind == "progressive":
                    obligations = set(c.bag.support)
                else:
                    # readiness is by rule existence alone; a thread parked
                    # past the switch bound with a matching resume rule is
                    # forever ready yet unschedulable, so it poisons fairness
                    obligations = {
                        (w, i)
                        for (w, i) in c.bag.support
                        if c.active == SCHED and w
                        and any(r.g == c.g and r.top == w[0] for r in model.resume)
                    }
                if not obligations <= resumed:
                    bad.add(c)
        if not bad:
            break
        g.remove_nodes_from(bad)
    # the lasso prefix may pass through pruned nodes, so reachability is
    # taken in the original graph; only the cycle lives in the pruned one
    init = model.initial_config()
    reachable = nx.descendants(graph, init) | {init}
    for comp in nx.strongly_connected_components(g):
        if not comp & reachable:
            continue
        edges = [(u, v) for u in comp for v in g.successors(u) if v in comp]
        if not any(k != "thread" for u, v in edges for k, _e in g[u][v]["vars"]):
            continue
        if _zero_effect_cycle_feasible(g, comp):
            return True
    return False


def check_lasso_verdict(model, K, kind, expected, **kw):
    """One-sided-sound check of a fair/progressive infinite-run verdict:
    positives are confirmed on the exact bounded graph, negatives on the
    count-saturating over-approximation."""
    progressive_terms = kind == "progressive"
    if expected:
        g, truncated = reach_graph(model, K, bag_cap=kw.pop("bag_cap", 4),
                                   progressive_terms=progressive_terms, **kw)
    else:
        g, truncated = reach_graph(model, K, count_cap=2,
                                   progressive_terms=progressive_terms, **kw)
    assert not truncated, "graph caps too small for a reliable verdict"
    assert _has_good_scc(g, model, K, kind) == expected


# ---------------------------------------------------------------------------


class TestValidate:
    def test_intro_ok(self):
        assert dcps_validate(load("intro"), 1) == []

    def test_push_too_long(self):
        m = Dcps(["g"], ["a"], [("g", "a", "g", ("a", "a", "a"), None)],
                 [], [], [], "g", "a")
        errs = dcps_validate(m, 1)
        assert any("push too long" in e for e in errs)

    def test_undeclared_resume_symbol(self):
        m = Dcps(["g"], ["a"], [], [], [("g", "g", "zz")], [], "g", "a")
        errs = dcps_validate(m, 1)
        assert any("resume" in e and "undeclared" in e for e in errs)

    def test_interrupt_push_bounds(self):
        m = Dcps(["g"], ["a"], [], [("g", "a", "g", ())], [], [], "g", "a")
        assert any("push length" in e for e in dcps_validate(m, 1))


class TestStep:
    def test_resume_only(self):
        m = Dcps(["g", "g2"], ["a"], [], [], [("g", "g2", "a")], [], "g", "a")
        c = m.initial_config()
        succs = dcps_step(m, c, 1)
        assert len(succs) == 1
        rule, nxt = succs[0]
        assert nxt == DcpsConfig("g2", (("a",), 0), Multiset())

    def test_term_keeps_bag(self):
        m = Dcps(["g", "g2"], ["a"], [], [], [], [("g", "g2")], "g", "a")
        bag = Multiset.of((("a",), 0))
        c = DcpsConfig("g", ((), 0), bag)
        succs = dcps_step(m, c, 1)
        assert succs == [(m.terminate[0], DcpsConfig("g2", SCHED, bag))]

    def test_switch_bound_blocks_resume(self):
        m = Dcps(["g"], ["a"], [], [], [("g", "g", "a")], [], "g", "a")
        c = DcpsConfig("g", SCHED, Multiset.of((("a",), 3)))
        assert dcps_step(m, c, 2) == []
        assert len(dcps_step(m, c, 3)) == 1

    def test_intro_hand_enumeration(self):
        m = load("intro")
        c0 = m.initial_config()
        level1 = {c for _r, c in dcps_step(m, c0, 1)}
        assert level1 == {DcpsConfig("g1", (("m",), 0), Multiset())}
        level2 = {c for c1 in level1 for _r, c in dcps_step(m, c1, 1)}
        assert level2 == {
            DcpsConfig("g1", (("m2",), 0), Multiset.of((("f",), 0))),
            DcpsConfig("g1", SCHED, Multiset.of((("m",), 1))),
        }

    def test_runs_replay(self):
        m = load("intro")
        res = dcps_explore(m, 1, depth=8, mode="nontermination_sample")
        assert res["runs"]
        for run in res["runs"]:
            assert run.replay()


class TestExplore:
    def test_intro_unfair_lasso(self):
        res = dcps_explore(load("intro"), 1, depth=20, mode="lasso_search")
        assert res["status"] == "lasso"
        assert res["run"].replay()
        assert res["cycle"]

    def test_no_rules_terminates(self):
        res = dcps_explore(load("norules"), 1, depth=20, mode="lasso_search")
        assert res["status"] == "none"

    def test_self_spawn_k0(self):
        res = dcps_explore(load("self_spawn"), 0, depth=6, mode="lasso_search")
        assert res["status"] == "lasso"
        assert len(res["cycle"]) <= 6

    def test_budget_unknown(self):
        res = dcps_explore(load("intro"), 1, depth=20, mode="lasso_search",
                           budget=3)
        assert res["status"] == "unknown"


class TestThreadPda:
    def test_intro_foo_word(self):
        p = extract_thread_pda(load("intro"), "g1", "f")
        words = p.enumerate_words(2)
        assert ("f", ("fin", "g1")) in words

    def test_empty_rules_nothing_past_init(self):
        m = load("norules")
        p = extract_thread_pda(m, "g", "a")
        assert p.enumerate_words(3) == {()}

    def test_one_swap_words_shape(self):
        m = load("self_spawn")
        seg2 = segment_language(m, "g", "a", 2)
        for w in seg2.enumerate_words(5):
            kinds = [letter_kind(a) for a in w]
            assert kinds.count("jump") == 1 and kinds[-1] == "final"
            assert kinds.index("jump") < len(kinds) - 1 or len(kinds) == 2

    def test_matches_single_thread_semantics(self):
        m = load("intro")
        for g, gamma in [("g1", "f"), ("g1", "m"), ("g0", "f")]:
            p = extract_thread_pda(m, g, gamma)
            oracle = thread_words(m, g, gamma, max_steps=10, max_len=5)
            accepted = p.enumerate_words(5)
            for w in oracle:
                assert w in accepted, (g, gamma, w)
            for w in accepted:
                if w:
                    assert w in oracle, (g, gamma, w)


def thread_words(model, g, gamma, max_steps, max_len):
    """Independent oracle: words induced by single-thread executions under
    the interleaved semantics, spawns and guessed scheduling recorded as
    letters.  Derived directly from the rule lists, not from any PDA."""
    out = set()
    stack0 = (gamma,)

    def go(cur_g, stack, word, steps):
        if steps > max_steps or len(word) > max_len:
            return
        if stack:
            top = stack[0]
            for r in model.create:
                if r.g == cur_g and r.top == top:
                    w2 = word if r.spawn is None else word + (r.spawn,)
                    if len(w2) <= max_len:
                        go(r.g2, r.push + stack[1:], w2, steps + 1)
            for r in model.interrupt:
                if r.g == cur_g and r.top == top:
                    newstack = r.push + stack[1:]
                    # abandoned after the swap: final letter, word ends
                    if len(word) < max_len:
                        out.add(word + (("fin", r.g2),))
                    for g3 in model.globals:
                        w2 = word + (("jmp", r.g2, newstack[0], g3),)
                        if len(w2) <= max_len:
                            go(g3, newstack, w2, steps + 1)
        else:
            for r in model.terminate:
                if r.g == cur_g and len(word) < max_len:
                    out.add(word + (("fin", r.g2),))

    go(g, stack0, (), 0)
    return out


class TestSegmentLanguage:
    def test_i1_matches_swap_free(self):
        m = load("intro")
        p = extract_thread_pda(m, "g1", "f")
        seg1 = segment_language(m, "g1", "f", 1)
        all_swap_free = {
            w for w in p.enumerate_words(4)
            if w and all(letter_kind(a) != "jump" for a in w)
        }
        assert seg1.enumerate_words(4) == all_swap_free

    def test_i2_swap_free_model_empty(self):
        m = Dcps(["g"], ["a"], [("g", "a", "g", (), None)], [],
                 [("g", "g", "a")], [("g", "g")], "g", "a")
        from cbverify.automata import pda_emptiness

        assert pda_emptiness(segment_language(m, "g", "a", 2))

    def test_hand_built_one_switch_word(self):
        m = load("self_spawn")
        seg2 = segment_language(m, "g", "a", 2)
        # swap on a, resume at g with top a, then spawn and terminate
        w = (("jmp", "g", "a", "g"), "a", ("fin", "g"))
        assert w in seg2.enumerate_words(3)


class TestTypeSpawn:
    def test_terminating_no_spawn(self):
        m = Dcps(["g"], ["a"], [("g", "a", "g", (), None)], [],
                 [("g", "g", "a")], [("g", "g")], "g", "a")
        t = ThreadType("g", "a", (), "g")
        sl = type_spawn_semilinear(m, 0, t)
        assert sl is not None
        assert sl_member(sl, Multiset())
        assert not sl_member(sl, Multiset.of(("a", 0)))

    def test_intro_foo_type(self):
        m = load("intro")
        t = ThreadType("g1", "f", ((("g1", "f2", "g1"),)), "g1")
        t = ThreadType("g1", "f", (("g1", "f2", "g1"),), "g1")
        sl = type_spawn_semilinear(m, 1, t)
        assert sl is not None
        assert sl_member(sl, Multiset.of(("f", 0)))

    def test_mismatched_type_empty(self):
        m = load("intro")
        t = ThreadType("g1", "f", (("g0", "b", "g1"),), "g1")
        assert type_spawn_semilinear(m, 1, t) is None


class TestProgressivize:
    def test_alphabet_size_structural(self):
        m = load("intro")
        for K in (0, 1):
            out = progressivize(m, K)
            n = len(m.stack)
            assert len(out.stack) == (n + 1) * (K + 2) + n
            assert dcps_validate(out, K) == []

    CORPUS = [
        ("self_spawn", 0, True),
        ("freeloop", 0, True),
        ("parked", 1, True),
        ("intro", 1, False),
        ("norules", 1, False),
    ]

    @pytest.mark.parametrize("name,K,expected", CORPUS)
    def test_fair_ground_truth(self, name, K, expected):
        check_lasso_verdict(load(name), K, "fair", expected)

    @pytest.mark.parametrize("name,K,expected", CORPUS)
    def test_preserves_fair_run_existence(self, name, K, expected):
        out = progressivize(load(name), K)
        check_lasso_verdict(out, K, "progressive", expected)


def tiny_freezing():
    return FreezingDcps(
        ["g1", "g2"], ["a", "p", "q"],
        [("g1", "a", "g1", (), "p"), ("g1", "p", "g1", (), None)],
        [("g1", "p", "g1", ("p",))],
        [("g1", "g1", "a"), ("g1", "g1", "p")],
        [("g1", "g1"), ("g2", "g2")],
        "g1", "a",
        [("g1", "g2", "q", "p")],
        "q",
    )


class TestFreezing:
    def test_unfreeze_step(self):
        m = tiny_freezing()
        bag = Multiset.of((("p",), 0)) + Multiset.of(((frozen("q"),), 0))
        c = DcpsConfig("g1", SCHED, bag)
        succs = dcps_step(m, c, 1)
        unf = [(r, s) for r, s in succs if r in m.unfreeze]
        assert len(unf) == 1
        _r, s = unf[0]
        assert s.g == "g2" and s.active == (("q",), 0)
        assert s.bag == Multiset.of(((frozen("p"),), 0))

    def test_replay_checks_single_frozen(self):
        m = tiny_freezing()
        c = m.initial_config()
        rule, succ = dcps_step(m, c, 1)[0]
        run = DcpsRun(m, 1, [(rule, succ)])
        assert run.replay()
        # forging a second frozen thread must fail replay
        bad = DcpsConfig(succ.g, succ.active,
                         succ.bag + Multiset.of(((frozen("q"),), 0)))
        assert not DcpsRun(m, 1, [(rule, bad)]).replay()


def _drive(model, K, c, picks):
    """Apply a sequence of (kind, predicate) picks; each selects the unique
    matching successor."""
    for pred in picks:
        succs = [s for r, s in dcps_step(model, c, K) if pred(r, s)]
        assert len(succs) >= 1
        c = succs[0]
    return c


class TestFreezeReduce:
    def test_bound_and_validity(self):
        m = tiny_freezing()
        reduced, bound = freeze_reduce(m, 1)
        assert bound == 3
        assert dcps_validate(reduced, bound) == []

    def test_unfreeze_five_step_simulation(self):
        m = tiny_freezing()
        reduced, bound = freeze_reduce(m, 1)
        # boot: resume the boot thread, spawn the initial threads
        c = _drive(reduced, bound, reduced.initial_config(), [
            lambda r, s: s.active != SCHED,            # 1a
            lambda r, s: s.active != SCHED,            # 1b creates
            lambda r, s: s.active == SCHED,            # 1c swap
        ])
        assert c.g == "g1"
        assert c.bag.support == {((frozen("q"),), 1), (("a",), 0)}
        # run the a-thread to spawn p and terminate
        c = _drive(reduced, bound, c, [
            lambda r, s: s.active == (("a",), 0),      # 2a
            lambda r, s: s.active[0][0] == ("bar", "a"),  # 2b
            lambda r, s: s.active == SCHED,            # 2c
            lambda r, s: s.active != SCHED,            # 2d
            lambda r, s: s.active == (("a",), 1),      # 2e
            lambda r, s: (("p",), 0) in s.bag.support, # spawn p
            lambda r, s: s.active == SCHED and s.bag == c.bag
                         and False or s.active == SCHED,  # term
        ])
        # now the five-step unfreeze simulation (3a-3e)
        mid = _drive(reduced, bound, c, [
            lambda r, s: s.active == (("p",), 0)
            and s.g[0] == "uf" and s.g[2] == frozen("q"),  # 3a resume target
            lambda r, s: s.active == (("p",), 0) and r.push == ("p",),  # 3b
            lambda r, s: s.active == SCHED
                         and ((("barfrz", "p"),), 1) in s.bag.support,  # 3c
            lambda r, s: s.active == ((frozen("q"),), 1),  # 3d
            lambda r, s: s.active == (("q",), 1),      # 3e
        ])
        assert mid.g == "g2"
        assert ((("barfrz", "p"),), 1) in mid.bag.support

    def test_switch_count_doubles(self):
        m = FreezingDcps(
            ["g"], ["a", "q"],
            [], [("g", "a", "g", ("a",))], [("g", "g", "a")], [],
            "g", "a", [], "q",
        )
        reduced, bound = freeze_reduce(m, 1)
        c = _drive(reduced, bound, reduced.initial_config(), [
            lambda r, s: s.active != SCHED,  # 1a
            lambda r, s: True,               # 1b
            lambda r, s: True,               # 1c
            lambda r, s: s.active == (("a",), 0),  # 2a
            lambda r, s: True,               # 2b
            lambda r, s: s.active == SCHED,  # 2c
            lambda r, s: s.active != SCHED,  # 2d
            lambda r, s: s.active == (("a",), 1),  # 2e
            lambda r, s: s.active == SCHED,  # original swap
        ])
        assert (("a",), 2) in c.bag.support

    def test_no_unfreeze_behavior_correspondence(self):
        m = FreezingDcps(
            tiny_freezing().globals, tiny_freezing().stack,
            tiny_freezing().create, tiny_freezing().interrupt,
            tiny_freezing().resume, tiny_freezing().terminate,
            "g1", "a", [], "q",
        )
        reduced, bound = freeze_reduce(m, 1)

        def abstract_original(depth):
            out = set()
            for c in _reach(m, 1, depth):
                if c.active == SCHED and c.g in m.globals:
                    items = tuple(sorted(
                        ((w, i), n) for (w, i), n in c.bag.sorted_items()
                        if not (w and w[0] == frozen(m.frozen_init))
                    ))
                    out.add((c.g, items))
            return out

        def abstract_reduced(depth):
            out = set()
            for c in _reach(reduced, bound, depth):
                if c.active != SCHED or c.g not in m.globals:
                    continue
                items = []
                skip = False
                for (w, i), n in c.bag.sorted_items():
                    if w and w[0] == frozen(m.frozen_init):
                        continue
                    if w and isinstance(w[0], tuple):
                        skip = True  # mid-simulation marker in the bag
                        break
                    if i % 2 == 1:
                        skip = True
                        break
                    items.append(((w, i // 2), n))
                if not skip:
                    out.add((c.g, tuple(sorted(items))))
            return out

        orig = abstract_original(5)
        red = abstract_reduced(22)
        assert orig <= red
        assert red <= abstract_original(12)


def _reach(model, K, depth):
    seen = {model.initial_config()}
    frontier = list(seen)
    for _ in range(depth):
        nxt = []
        for c in frontier:
            for _r, s in dcps_step(model, c, K):
                if s not in seen and s.bag.size <= 5:
                    seen.add(s)
                    nxt.append(s)
        frontier = nxt
    return seen


class TestJsonRoundTrip:
    def test_plain(self):
        m = load("intro")
        again = Dcps.from_json(m.to_json())
        assert again.to_json() == m.to_json()

    def test_freezing(self):
        m = tiny_freezing()
        again = FreezingDcps.from_json(m.to_json())
        assert again.to_json() == m.to_json()
