import os
import random
from collections import Counter, deque

import pytest

from cbverify.foundations import BudgetExceeded, IntVector, LinearSet, Multiset
from cbverify.dcps import SCHED, Dcps, dcps_explore, dcps_step, dcps_validate
from cbverify.vass import (
    EPS,
    OMEGA,
    VassConfig,
    VassModel,
    dcfs_to_vass,
    dcps_to_dcfs,
    decide_nontermination,
    expand_extended,
    is_dcfs,
    km_tree,
    reach_oracle,
    replay_path,
    vass_step,
)

MODELS = os.path.join(os.path.dirname(__file__), "..", "models")


def load(name):
    return Dcps.load(os.path.join(MODELS, name + ".json"))


def mk(states, places, edges, extended=()):
    return VassModel(
        states, places,
        [(src, IntVector(d), dst) for src, d, dst in edges],
        extended,
    )


def conf(state, counts):
    return VassConfig(state, Multiset(counts))


# ---------------------------------------------------------------------------
# independent oracles (reimplemented stepping, path search)
# ---------------------------------------------------------------------------

def raw_successors(model, c):
    """Step semantics rebuilt from the definition, bypassing vass_step."""
    out = []
    for e in model.edges:
        if e.src != c.state:
            continue
        m = dict(c.marking.items())
        for p, d in e.delta.items():
            m[p] = m.get(p, 0) + d
        if all(v >= 0 for v in m.values()):
            out.append(VassConfig(e.dst, Multiset(m)))
    return out


def dominated_pair_search(model, c0, depth):
    """Whether some run of <= depth steps visits c1 then c2 >= c1 with the
    same state.  Brute force over paths; the frozen oracle for the
    non-termination verdicts on small models."""
    def rec(c, path):
        for a in path:
            if a.state == c.state and a.marking <= c.marking:
                return True
        if len(path) >= depth:
            return False
        return any(rec(s, path + [c]) for s in raw_successors(model, c))

    return rec(c0, [])


def check_cert(model, c0, res):
    assert res["status"] == "infinite_run"
    cert = res["certificate"]
    assert cert["cycle"], "pump cycle must be nonempty"
    pre = replay_path(model, c0, cert["prefix"])
    assert pre is not None
    c1 = pre[-1]
    cyc = replay_path(model, c1, cert["cycle"])
    assert cyc is not None
    c2 = cyc[-1]
    assert c2.state == c1.state
    assert c1.marking <= c2.marking


def random_model(rng, n_states=2, n_places=2, n_edges=4):
    states = ["s%d" % i for i in range(n_states)]
    places = ["p%d" % i for i in range(n_places)]
    edges = []
    for _ in range(n_edges):
        delta = {p: rng.randint(-2, 2) for p in places}
        edges.append((rng.choice(states), delta, rng.choice(states)))
    return mk(states, places, edges)


# ---------------------------------------------------------------------------
# step semantics
# ---------------------------------------------------------------------------

class TestVassStep:
    def test_disabled_edge(self):
        m = mk(["q"], ["p"], [("q", {"p": -1}, "q")])
        assert vass_step(m, conf("q", {})) == []

    def test_plus_two(self):
        m = mk(["q"], ["p"], [("q", {"p": 2}, "q")])
        [(e, succ)] = vass_step(m, conf("q", {"p": 1}))
        assert succ == conf("q", {"p": 3})

    def test_wrong_state_edge_ignored(self):
        m = mk(["q", "r"], ["p"], [("r", {"p": 1}, "r")])
        assert vass_step(m, conf("q", {})) == []

    def test_extended_sampling(self):
        lin = LinearSet(Multiset({"p": 1}), [Multiset({"p": 1})])
        m = mk(["q", "r"], ["p"], [], [("q", "+", lin, "r")])
        succs = vass_step(m, conf("q", {}), sampling_bound=2)
        assert {s.marking for _e, s in succs} \
            == {Multiset({"p": 1}), Multiset({"p": 2})}
        # extended edges are silent without an explicit bound
        assert vass_step(m, conf("q", {})) == []

    def test_extended_subtract(self):
        lin = LinearSet(Multiset({"p": 1}), [Multiset({"p": 1})])
        m = mk(["q", "r"], ["p"], [], [("q", "-", lin, "r")])
        succs = vass_step(m, conf("q", {"p": 2}), sampling_bound=3)
        # members p:1, p:2, p:3; the last is disabled
        assert {s.marking for _e, s in succs} \
            == {Multiset(), Multiset({"p": 1})}


class TestExpandExtended:
    def test_gadget_reaches_same_markings(self):
        lin = LinearSet(Multiset({"p": 1}), [Multiset({"p": 1})])
        m = mk(["q", "r"], ["p"], [], [("q", "+", lin, "r")])
        flat = expand_extended(m)
        assert not flat.extended
        # markings at state r with at most 4 tokens, both semantics
        sampled = {s.marking for _e, s in vass_step(m, conf("q", {}), 4)}
        seen, queue = {conf("q", {})}, deque([conf("q", {})])
        while queue:
            c = queue.popleft()
            for _e, s in vass_step(flat, c):
                if sum(v for _p, v in s.marking.items()) <= 4 and s not in seen:
                    seen.add(s)
                    queue.append(s)
        assert {c.marking for c in seen if c.state == "r"} == sampled


# ---------------------------------------------------------------------------
# non-termination decision
# ---------------------------------------------------------------------------

class TestDecideNontermination:
    def test_self_loop_pump(self):
        m = mk(["q"], ["p"], [("q", {"p": 1}, "q")])
        res = decide_nontermination(m, conf("q", {}))
        check_cert(m, conf("q", {}), res)

    def test_single_drain_terminates(self):
        m = mk(["q"], ["p"], [("q", {"p": -1}, "q")])
        res = decide_nontermination(m, conf("q", {"p": 1}))
        assert res == {"status": "terminates", "certificate": None}

    def two_place_pump(self):
        # pumping p1 at q funds the q -> r -> q round trips forever
        return mk(["q", "r"], ["p1", "p2"], [
            ("q", {"p1": 1}, "q"),
            ("q", {"p1": -1, "p2": 1}, "r"),
            ("r", {"p2": -1}, "q"),
        ])

    def test_two_place_pump(self):
        m = self.two_place_pump()
        c0 = conf("q", {})
        assert dominated_pair_search(m, c0, 12)
        res = decide_nontermination(m, c0)
        check_cert(m, c0, res)

    def test_two_place_pump_without_refill(self):
        m = mk(["q", "r"], ["p1", "p2"], [
            ("q", {"p1": -1, "p2": 1}, "r"),
            ("r", {"p2": -1}, "q"),
        ])
        c0 = conf("q", {"p1": 3})
        assert not dominated_pair_search(m, c0, 12)
        res = decide_nontermination(m, c0)
        assert res["status"] == "terminates"

    def test_budget(self):
        m = mk(["q"], ["p"], [("q", {"p": -1}, "q")])
        with pytest.raises(BudgetExceeded):
            decide_nontermination(m, conf("q", {"p": 10}), budget=3)

    def test_rejects_unexpanded_extended(self):
        lin = LinearSet(Multiset({"p": 1}), [])
        m = mk(["q"], ["p"], [], [("q", "+", lin, "q")])
        with pytest.raises(ValueError):
            decide_nontermination(m, conf("q", {}))

    def test_random_models_agree_with_path_oracle(self):
        rng = random.Random(7)
        for _ in range(60):
            m = random_model(rng)
            c0 = conf(m.states[0], {p: rng.randint(0, 1) for p in m.places})
            try:
                res = decide_nontermination(m, c0, budget=200_000)
            except BudgetExceeded:
                continue
            if res["status"] == "infinite_run":
                check_cert(m, c0, res)
            else:
                # terminating models must show no pumpable pair at any depth
                assert not dominated_pair_search(m, c0, 9)

    def test_monotonicity(self):
        rng = random.Random(11)
        for _ in range(60):
            m = random_model(rng)
            base = {p: rng.randint(0, 2) for p in m.places}
            bigger = {p: base[p] + rng.randint(0, 2) for p in m.places}
            c, cb = conf(m.states[0], base), conf(m.states[0], bigger)
            small = {e: s for e, s in vass_step(m, c)}
            big = {e: s for e, s in vass_step(m, cb)}
            for e, s in small.items():
                assert e in big
                assert s.marking <= big[e].marking


# ---------------------------------------------------------------------------
# coverability tree and the reachability oracle
# ---------------------------------------------------------------------------

class TestKmTree:
    def test_acceleration_introduces_omega(self):
        m = mk(["q"], ["p"], [("q", {"p": 1}, "q")])
        nodes = km_tree(m, conf("q", {}))
        assert nodes[0].marking == {}
        accel = [n for n in nodes if n.marking.get("p") == OMEGA]
        assert accel
        # omega only after a strictly dominated same-state ancestor
        for n in accel:
            assert any(a.state == n.state for a in n.ancestors())

    def test_finite_system_no_omega(self):
        m = mk(["q"], ["p"], [("q", {"p": -1}, "q")])
        nodes = km_tree(m, conf("q", {"p": 3}))
        assert all(OMEGA not in n.marking.values() for n in nodes)
        # branches stop once covered by an ancestor, but every reachable
        # marking must still be covered by some node
        for k in range(4):
            assert any(n.covers({"p": k}) for n in nodes)


class TestReachOracle:
    def test_target_is_start(self):
        m = mk(["q"], ["p"], [])
        c0 = conf("q", {"p": 1})
        assert reach_oracle(m, c0, c0) == {"status": "reachable", "path": []}

    def test_reachable_path_replays(self):
        m = self_ = mk(["q", "r"], ["p"], [
            ("q", {"p": 2}, "q"),
            ("q", {"p": -1}, "r"),
        ])
        target = conf("r", {"p": 3})
        res = reach_oracle(m, conf("q", {}), target)
        assert res["status"] == "reachable"
        assert replay_path(m, conf("q", {}), res["path"])[-1] == target

    def test_exhausted_unreachable(self):
        m = mk(["q"], ["p"], [("q", {"p": -1}, "q")])
        res = reach_oracle(m, conf("q", {"p": 1}), conf("q", {"p": 5}))
        assert res == {"status": "unreachable"}

    def test_coverability_pruned_unreachable(self):
        # p grows without bound, but p2 is never produced
        m = mk(["q"], ["p", "p2"], [("q", {"p": 1}, "q")])
        res = reach_oracle(m, conf("q", {}), conf("q", {"p2": 1}),
                           place_cutoff=3)
        assert res == {"status": "unreachable"}

    def test_coverable_but_unreached_is_unknown(self):
        # parity keeps p:3 unreachable; the omega cover cannot tell
        m = mk(["q"], ["p"], [("q", {"p": 2}, "q")])
        res = reach_oracle(m, conf("q", {}), conf("q", {"p": 3}),
                           place_cutoff=4)
        assert res == {"status": "unknown"}

    def test_unreachable_survives_random_search(self):
        m = mk(["q"], ["p", "p2"], [("q", {"p": 1}, "q")])
        target = conf("q", {"p2": 1})
        assert reach_oracle(m, conf("q", {}), target,
                            place_cutoff=3)["status"] == "unreachable"
        rng = random.Random(3)
        c = conf("q", {})
        for _ in range(10_000):
            succs = raw_successors(m, c)
            if not succs:
                break
            c = rng.choice(succs)
            assert c != target


# ---------------------------------------------------------------------------
# DCPS -> DCFS
# ---------------------------------------------------------------------------

def spawn_chain():
    """Each thread pushes two symbols, pops both, and spawns its successor;
    the only infinite runs are unbroken spawn chains."""
    return Dcps(
        ["g"], ["m", "a", "b"],
        [("g", "m", "g", ("a", "b"), "m"),
         ("g", "a", "g", (), None),
         ("g", "b", "g", (), None)],
        [],
        [("g", "g", "m")],
        [("g", "g")],
        "g", "m",
    )


class TestDcpsToDcfs:
    def test_intro_output_is_dcfs(self):
        dcfs = dcps_to_dcfs(load("intro"), 1)
        assert is_dcfs(dcfs)
        assert dcps_validate(dcfs, 1) == []

    def test_intro_dcfs_keeps_infinite_run(self):
        dcfs = dcps_to_dcfs(load("intro"), 1)
        vass, init = dcfs_to_vass(dcfs, 1)
        assert decide_nontermination(vass, init)["status"] == "infinite_run"

    def test_spawn_chain_answers_match(self):
        # dropping the spawn would kill the only infinite run, so the
        # closure must keep it; cross-check bounded exploration verdicts
        orig = spawn_chain()
        dcfs = dcps_to_dcfs(orig, 1)
        assert is_dcfs(dcfs)
        a = dcps_explore(orig, 1, 30, "nontermination_sample")
        b = dcps_explore(dcfs, 1, 30, "nontermination_sample")
        assert a["status"] == b["status"] == "ok"
        assert a["runs"] and b["runs"]
        assert not a["complete"] and not b["complete"]

    def test_terminating_model_stays_terminating(self):
        orig = load("norules")
        dcfs = dcps_to_dcfs(orig, 1)
        a = dcps_explore(orig, 1, 30, "nontermination_sample")
        b = dcps_explore(dcfs, 1, 30, "nontermination_sample")
        assert not a["runs"] and not b["runs"]
        assert a["complete"] and b["complete"]


# ---------------------------------------------------------------------------
# DCFS -> VASS
# ---------------------------------------------------------------------------

def vass_image(c):
    """The VASS configuration a stack-free configuration corresponds to."""
    if c.active == SCHED:
        state = (c.g, SCHED)
    else:
        word, i = c.active
        state = (c.g, word[0] if word else EPS, i)
    marking = Multiset([((word[0], i), n) for (word, i), n in c.bag.items()])
    return VassConfig(state, marking)


def empty_push_model():
    return Dcps(
        ["g", "h"], ["a", "c"],
        [("g", "a", "h", (), "c"), ("h", "c", "h", (), None)],
        [],
        [("g", "g", "a"), ("h", "h", "c")],
        [("h", "h")],
        "g", "a",
    )


BIJECTION_CORPUS = ["intro", "self_spawn", "freeloop", "parked", "norules",
                    "respawn_two"]


class TestDcfsToVass:
    def test_rejects_non_dcfs(self):
        with pytest.raises(ValueError):
            dcfs_to_vass(spawn_chain(), 1)

    def test_literal_state_count(self):
        for name in BIJECTION_CORPUS:
            model = load(name)
            K = 1
            vass, _init = dcfs_to_vass(model, K)
            literal = [s for s in vass.states
                       if s[1] == SCHED or s[1] != EPS]
            G, Gam = len(model.globals), len(model.stack)
            assert len(literal) == G * (Gam * (K + 1) + 1)

    def test_initial_configuration(self):
        model = load("intro")
        _vass, init = dcfs_to_vass(model, 1)
        assert init == vass_image(model.initial_config())

    def step_bijection(self, model, K, depth=15):
        vass, init = dcfs_to_vass(model, K)
        c0 = model.initial_config()
        assert vass_image(c0) == init
        seen = {c0: 0}
        queue = deque([c0])
        while queue:
            c = queue.popleft()
            succs = [s for _r, s in dcps_step(model, c, K)]
            image_succs = [s for _e, s in vass_step(vass, vass_image(c))]
            assert Counter(map(vass_image, succs)) == Counter(image_succs)
            if seen[c] >= depth:
                continue
            for s in succs:
                if s not in seen:
                    seen[s] = seen[c] + 1
                    queue.append(s)
        return len(seen)

    @pytest.mark.parametrize("name", BIJECTION_CORPUS)
    def test_run_bijection_corpus(self, name):
        assert self.step_bijection(load(name), 1) >= 1

    def test_run_bijection_empty_push(self):
        # exercises the empty-stack states and the termination edges
        assert self.step_bijection(empty_push_model(), 1) > 4

    def test_run_bijection_k0(self):
        for name in ["intro", "self_spawn"]:
            self.step_bijection(load(name), 0)

    def test_intro_end_to_end(self):
        vass, init = dcfs_to_vass(load("intro"), 1)
        res = decide_nontermination(vass, init)
        check_cert(vass, init, res)


class TestJsonRoundTrip:
    def test_round_trip_with_extended(self):
        lin = LinearSet(Multiset({"p": 1}), [Multiset({"p": 2})])
        m = mk(["q", "r"], ["p", "p2"],
               [("q", {"p": 1, "p2": -1}, "r")],
               [("r", "-", lin, "q")])
        again = VassModel.from_json(m.to_json())
        assert again.to_json() == m.to_json()
        assert again.edges == m.edges
        assert again.extended == m.extended

    def test_round_trip_tuple_symbols(self):
        vass, init = dcfs_to_vass(load("self_spawn"), 1)
        again = VassModel.from_json(vass.to_json())
        assert again.to_json() == vass.to_json()
        assert vass_step(again, init) == vass_step(vass, init)
