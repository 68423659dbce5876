import math
import random

import pytest

from servicebond.bond_fabric import Bond, BondSchedule, ReviewPolicy
from servicebond.distances import DistanceTuple, RBd
from servicebond.ecosystem_sim import (
    AvalancheParams,
    Binding,
    BrokerState,
    Entity,
    Failure,
    InteractionForm,
    Registry,
    Request,
    Scenario,
    SeedRequest,
    Streams,
    abandoned_by_level,
    horizontal_round,
    no_profit_ticks,
    northwise_notify,
    resolve_interaction,
    run,
    saturate,
    scenario_from_dict,
    self_driven,
    step_inertia,
    stream_seed,
    trigger_avalanche,
    vertical_chain,
)
from servicebond.errors import AmbiguousNaive, InvalidInput
from servicebond.io import load_config
from servicebond.service_cycle import Agreement
from servicebond.trace_model import SloTuple


def complete(nodes):
    return {u: {v for v in nodes if v != u} for u in nodes}


def basic_scenario(**kw):
    ents = [Entity("p0", 0), Entity("r0", 1, roles={"requester"}), Entity("r1", 1, roles={"requester"})]
    base = dict(entities=ents, same_level_edges=[("r0", "r1")], interaction_form="directory",
                avalanche=AvalancheParams(), horizon_ticks=20, seed=1, request_cap=100,
                seed_requests=[SeedRequest(0, "r0")])
    base.update(kw)
    return Scenario(**base)


class TestAvalancheLaws:
    def test_vertical_chain(self):
        chain = vertical_chain(8, 2, 1.5)
        assert chain == [(2, 8), (1, 12.0), (0, 18.0)]
        assert math.fsum(abandoned_by_level(chain).values()) == 18 - 8

    def test_vertical_base_case(self):
        assert vertical_chain(5, 0, 2.0) == [(0, 5)]

    def test_self_driven(self):
        assert self_driven(10, 0.2) == pytest.approx(12)

    def test_path_of_four(self):
        adj = {"a": {"b"}, "b": {"a", "c"}, "c": {"b", "d"}, "d": {"c"}}
        assert saturate(adj, {"a"}, 1.0, Streams(0), 3) == {"a", "b", "c", "d"}
        assert saturate(adj, {"a"}, 1.0, Streams(0), 2) == {"a", "b", "c"}

    def test_zero_probability(self):
        adj = complete([f"n{i}" for i in range(6)])
        assert saturate(adj, {"n0"}, 0.0, Streams(0), 10) == {"n0"}

    @pytest.mark.parametrize("n", [2, 5, 17, 64])
    def test_complete_graph_saturates(self, n):
        nodes = [f"n{i}" for i in range(n)]
        rounds = math.ceil(math.log2(n))
        assert saturate(complete(nodes), {"n0"}, 1.0, Streams(0), rounds) == set(nodes)

    def test_dispatch(self):
        params = AvalancheParams(1.0, 2.0, 0.5)
        assert trigger_avalanche("vertical", (3, 1), params) == [(1, 3), (0, 6.0)]
        assert trigger_avalanche("self_driven", 4, params) == 6.0
        adj = {"a": {"b"}, "b": {"a"}}
        assert trigger_avalanche("horizontal", (adj, {"a"}, {"a"}), params, Streams(1)) == {"b"}
        with pytest.raises(InvalidInput):
            trigger_avalanche("sideways", None, params)

    def test_params_validated(self):
        with pytest.raises(InvalidInput):
            AvalancheParams(vertical_amplification=0.5)
        with pytest.raises(InvalidInput):
            AvalancheParams(horizontal_adopt_prob=1.5)

    def test_streams_independent_and_stable(self):
        assert stream_seed(42, "a", "x") == stream_seed(42, "a", "x")
        assert stream_seed(42, "a", "x") != stream_seed(43, "a", "x")
        s = Streams(5)
        first = [s("a", "x").random() for _ in range(3)]
        t = Streams(5)
        t("b", "y").random()
        assert [t("a", "x").random() for _ in range(3)] == first


class TestInertia:
    def test_horizon_five(self):
        e = Entity("p", inertia_horizon=5)
        profit = [1.0] * 10 + [-1.0] * 20
        assert step_inertia(e, profit, 12) == "serving"
        assert step_inertia(e, profit, 14) == "serving"
        assert step_inertia(e, profit, 15) == "stopped"
        assert no_profit_ticks(e, profit, 20) == 5

    def test_horizon_zero(self):
        e = Entity("p", inertia_horizon=0)
        assert step_inertia(e, [1.0, -1.0], 1) == "stopped"

    def test_never_negative(self):
        e = Entity("p", inertia_horizon=0)
        assert step_inertia(e, [0.0] * 50, 49) == "serving"

    def test_stop_is_permanent(self):
        e = Entity("p", inertia_horizon=1)
        assert step_inertia(e, [-1, -1, 5, 5], 3) == "stopped"


class TestNotify:
    def test_examples(self):
        assert northwise_notify("p", 0.1, 0.3, bonded_requesters=["b", "a"]).recipients == ("a", "b")
        assert northwise_notify("p", 0.5, 0.3) is None
        assert northwise_notify("p", 0.1, 0.3, form=InteractionForm.BROKER) is None


def registry(*ents, **kw):
    return Registry.from_entities(ents, **kw)


REQ = Request("r", 1, 1.0)


class TestResolve:
    def test_naive(self):
        assert resolve_interaction("naive", REQ, registry(Entity("p", 0)), random.Random(0)) == Binding("p")
        with pytest.raises(AmbiguousNaive):
            resolve_interaction("naive", REQ, registry(Entity("p", 0), Entity("q", 0)), random.Random(0))

    def test_no_provider(self):
        got = resolve_interaction("directory", REQ, registry(Entity("p", 3)), random.Random(0))
        assert got == Failure("no-provider")

    def test_directory_ranking_and_staleness(self):
        reg = registry(Entity("p", 0, quality=0.5), Entity("q", 0, quality=0.9))
        assert resolve_interaction("directory", REQ, reg, random.Random(0)) == Binding("q")
        reg.serving.discard("q")
        assert resolve_interaction("directory", REQ, reg, random.Random(0)) == Failure("stale-directory")
        reg.refresh_directory()
        assert resolve_interaction("directory", REQ, reg, random.Random(0)) == Binding("p")

    def test_broker_modes(self):
        ents = [Entity("a", 0, true_quality=0.9), Entity("b", 0, true_quality=0.5), Entity("c", 0, true_quality=0.1)]
        good = registry(*ents)
        assert resolve_interaction("broker", REQ, good, None) == Binding("a")
        bad = registry(*ents, broker=BrokerState("continuous_degradation"))
        assert resolve_interaction("broker", REQ, bad, None) == Binding("b", harmful=True)
        tricky = registry(*ents, broker=BrokerState("discrete_failure", trust_threshold=3))
        picks = [resolve_interaction("broker", REQ, tricky, None) for _ in range(6)]
        assert [p.provider for p in picks] == ["a", "a", "a", "c", "a", "a"]
        assert [p.harmful for p in picks].count(True) == 1

    def test_brand_reproducible(self):
        reg = registry(*[Entity(f"b{i}", 0, brand="acme") for i in range(3)], Entity("plain", 0))
        picks = [resolve_interaction("brand", REQ, reg, Streams(9)("r", "interaction")).provider for _ in range(1)]
        again = [resolve_interaction("brand", REQ, reg, Streams(9)("r", "interaction")).provider for _ in range(1)]
        assert picks == again and picks[0].startswith("b")
        rng = random.Random(1)
        seen = {resolve_interaction("brand", REQ, reg, rng).provider for _ in range(60)}
        assert seen == {"b0", "b1", "b2"}

    def test_bond_counterpart_and_fallback(self):
        reg = registry(Entity("p", 0, quality=0.1), Entity("q", 0, quality=0.9))
        assert resolve_interaction("bond", REQ, reg, None) == Binding("q", proposed_bond=True)
        slo = SloTuple.of(service=1.0)
        ag = Agreement(slo, RBd(1.0), DistanceTuple(("service",), (0.2,)), 10.0)
        reg.bonds["r"] = Bond("r", "p", ag, BondSchedule(10, ((0, 5),)))
        assert resolve_interaction("bond", REQ, reg, None) == Binding("p")


class TestRun:
    def test_determinism(self):
        sc = scenario_from_dict(load_config("avalanche_stochastic"))
        assert run(sc).summary == run(sc).summary

    def test_no_propagation_single_request(self):
        rep = run(basic_scenario())
        assert rep.summary["total_requests"] == 1
        assert all(r["total_requests"] == 1 for r in rep.rows)

    def test_complete_five(self):
        rep = run(scenario_from_dict(load_config("avalanche_complete5")))
        assert rep.summary["triggered"] == 5
        assert rep.rows[1]["triggered"] == 5

    def test_saturation_halts(self):
        sc = scenario_from_dict(load_config("avalanche_complete5"))
        sc = Scenario(**{**sc.__dict__, "request_cap": 3})
        rep = run(sc)
        assert rep.summary["saturated"] is True
        assert rep.summary["total_requests"] == 3
        assert rep.summary["ticks_run"] < sc.horizon_ticks

    def test_vertical_abandonment_recorded(self):
        # the request of 8 reaches level 2 and travels down to level 0
        ents = [Entity("base", 0), Entity("low", 1, supplier="base"), Entity("mid", 2, supplier="low"),
                Entity("r", 3, roles={"requester"})]
        sc = basic_scenario(entities=ents, same_level_edges=[], seed_requests=[SeedRequest(0, "r", 8.0)],
                            avalanche=AvalancheParams(vertical_amplification=1.5), horizon_ticks=1)
        rep = run(sc)
        assert rep.rows[0]["abandoned"] == pytest.approx(10.0)

    def test_metrics_non_negative(self):
        for name in ("avalanche_stochastic", "avalanche_bond_damped"):
            rep = run(scenario_from_dict(load_config(name)))
            for row in rep.rows:
                for k, v in row.items():
                    assert v >= 0, (name, k)

    def test_bond_form_reviews_and_upkeep(self):
        rep = run(scenario_from_dict(load_config("avalanche_bond_damped")))
        assert any("|review|" in e for e in rep.events)
        assert any(r["bond_upkeep"] > 0 for r in rep.rows)

    def test_damping_limits_spread(self):
        cfg = load_config("avalanche_bond_damped")
        damped = run(scenario_from_dict(cfg)).summary
        cfg["avalanche"]["damping_via_review"] = False
        loose = run(scenario_from_dict(cfg)).summary
        assert damped["triggered"] < loose["triggered"]

    def test_inertia_counts_no_profit(self):
        ents = [Entity("p", 0, inertia_horizon=3, fixed_cost=5.0), Entity("r", 1, roles={"requester"})]
        rep = run(basic_scenario(entities=ents, same_level_edges=[], seed_requests=[SeedRequest(0, "r")]))
        assert rep.summary["no_profit_serving_ticks"] == 3
        assert any(e.endswith("|stop|p") for e in rep.events)

    def test_validation(self):
        with pytest.raises(InvalidInput):
            basic_scenario(horizon_ticks=0)
        with pytest.raises(InvalidInput):
            basic_scenario(same_level_edges=[("p0", "r0")])
        with pytest.raises(InvalidInput):
            basic_scenario(seed=-1)

    def test_naive_ambiguity_at_start(self):
        ents = [Entity("p", 0), Entity("q", 0), Entity("r", 1, roles={"requester"})]
        with pytest.raises(AmbiguousNaive):
            run(basic_scenario(entities=ents, same_level_edges=[], interaction_form="naive",
                               seed_requests=[SeedRequest(0, "r")]))

    def test_report_files(self, tmp_path):
        rep = run(basic_scenario())
        rep.write(tmp_path)
        lines = (tmp_path / "metrics.csv").read_text().splitlines()
        assert lines[0].startswith("tick,new_requests")
        assert len(lines) == 21
        assert rep.digest in (tmp_path / "summary.json").read_text()
