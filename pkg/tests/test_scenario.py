import io
import json

import pytest

from maas_market import Link, Scenario, apply_scenario, fig5, load_scenario
from maas_market.errors import ScenarioError
from maas_market.scenario import (AddLinks, MergeOperators, RemoveLinks,
                                  ScaleCosts, ScaleTravel, SetCapacity,
                                  SetFixedFare, SetObjectivePolicy, Subsidy,
                                  Surcharge)


@pytest.fixture()
def instance():
    return fig5()


def test_set_capacity_only_touches_target(instance):
    network, demand = instance
    net2, dem2, _ = apply_scenario(
        network, demand, Scenario(edits=(SetCapacity((1, 21), 5000),)))
    assert net2.by_arc[(1, 21)].capacity == 5000
    for arc, link in net2.by_arc.items():
        if arc != (1, 21):
            assert link == network.by_arc[arc]
    assert dem2 == demand


def test_scale_costs_and_travel(instance):
    network, demand = instance
    scenario = Scenario(edits=(ScaleCosts(1, 0.5), ScaleTravel(1, 0.8)))
    net2, _, _ = apply_scenario(network, demand, scenario)
    assert net2.by_arc[(1, 3)].operating_cost == pytest.approx(100)
    assert net2.by_arc[(1, 3)].travel_cost == pytest.approx(5.6)
    assert net2.by_arc[(1, 4)].operating_cost == 200  # other operator untouched


def test_scale_travel_all(instance):
    network, demand = instance
    net2, _, _ = apply_scenario(network, demand,
                                Scenario(edits=(ScaleTravel(None, 2.0),)))
    assert all(net2.by_arc[a].travel_cost ==
               pytest.approx(2 * network.by_arc[a].travel_cost)
               for a in network.by_arc)


def test_surcharge(instance):
    network, demand = instance
    net2, _, _ = apply_scenario(network, demand,
                                Scenario(edits=(Surcharge(3, 25.0),)))
    assert net2.by_arc[(23, 4)].operating_cost == 225


def test_subsidy_recorded_and_bounded(instance):
    network, demand = instance
    _, _, ann = apply_scenario(network, demand,
                               Scenario(edits=(Subsidy((1, 21), 150.0),)))
    assert ann.subsidies == {(1, 21): 150.0}
    with pytest.raises(ScenarioError):
        apply_scenario(network, demand,
                       Scenario(edits=(Subsidy((1, 21), 1000.0),)))


def test_add_remove_links(instance):
    network, demand = instance
    new = Link(3, 4, travel_cost=1, operating_cost=1, capacity=10, owner=7)
    net2, _, _ = apply_scenario(
        network, demand,
        Scenario(edits=(AddLinks((new,)), RemoveLinks(((22, 3),)))))
    assert (3, 4) in net2.by_arc and (22, 3) not in net2.by_arc
    with pytest.raises(ScenarioError):
        apply_scenario(network, demand,
                       Scenario(edits=(RemoveLinks(((9, 9),)),)))


def test_remove_demand_node_rejected(instance):
    network, demand = instance
    arcs = tuple(a for a in network.by_arc if 4 in a)
    with pytest.raises(ScenarioError):
        apply_scenario(network, demand, Scenario(edits=(RemoveLinks(arcs),)))


def test_merge_operators(instance):
    network, demand = instance
    scenario = Scenario(edits=(SetFixedFare(3, True),
                               MergeOperators((1, 3), 1)))
    net2, _, ann = apply_scenario(network, demand, scenario)
    assert 3 not in net2.operators
    assert net2.by_arc[(23, 4)].owner == 1
    assert ann.fixed_fare_operators == {1}
    with pytest.raises(ScenarioError):
        apply_scenario(network, demand,
                       Scenario(edits=(MergeOperators((0, 1), 1),)))


def test_policy_edits(instance):
    network, demand = instance
    scenario = Scenario(edits=(SetObjectivePolicy(1, "revenue_max"),
                               SetObjectivePolicy(3, "welfare_max"),
                               SetFixedFare(4, True), SetFixedFare(4, False)))
    _, _, ann = apply_scenario(network, demand, scenario)
    assert ann.objective_modes == {1: "revenue_max", 3: "welfare_max"}
    assert ann.fixed_fare_operators == set()


def test_missing_entity_errors(instance):
    network, demand = instance
    with pytest.raises(ScenarioError):
        apply_scenario(network, demand,
                       Scenario(edits=(SetCapacity((9, 9), 10),)))
    with pytest.raises(ScenarioError):
        apply_scenario(network, demand, Scenario(edits=(ScaleCosts(99, 2.0),)))


def test_apply_is_pure_and_deterministic(instance):
    network, demand = instance
    scenario = Scenario(edits=(ScaleCosts(1, 0.5), Subsidy((23, 4), 10.0)))
    out1 = apply_scenario(network, demand, scenario)
    out2 = apply_scenario(network, demand, scenario)
    assert out1[0] == out2[0] and out1[1] == out2[1]
    assert out1[2].subsidies == out2[2].subsidies
    assert network.by_arc[(1, 3)].operating_cost == 200  # input untouched


def test_load_scenario_json():
    doc = json.dumps([
        {"edit": "set_capacity", "tail": 1, "head": 21, "capacity": 500},
        {"edit": "subsidy", "tail": 23, "head": 4, "gamma": 5},
        {"edit": "merge_operators", "sources": [1, 3], "target": 1},
        {"edit": "set_fixed_fare", "operator": 1},
        {"edit": "set_objective_policy", "operator": 1, "mode": "welfare_max"},
        {"edit": "scale_travel", "factor": 1.5},
    ])
    scenario = load_scenario(io.StringIO(doc))
    assert len(scenario.edits) == 6
    assert isinstance(scenario.edits[0], SetCapacity)
    assert scenario.edits[5].operator is None


def test_load_scenario_rejects_unknown():
    with pytest.raises(ScenarioError):
        load_scenario(io.StringIO(json.dumps([{"edit": "nuke"}])))
    with pytest.raises(ScenarioError):
        load_scenario(io.StringIO(json.dumps({"edit": "set_capacity"})))
