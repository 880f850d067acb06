"""Capacitated matching between traveler groups and operator links.

The matching problem is a multicommodity capacitated fixed-charge network
design model: one commodity per OD user group, a binary activation per link,
flow conservation per (node, commodity), and a joint capacity row per link.
The objective charges travel disutility on flows and operating cost on
activated links.

Solving goes through an origin-aggregated reformulation (commodities that
share an origin are merged, which is exact because link costs do not depend
on the commodity) and recovers per-OD flows afterwards with the activations
fixed.  Capacity duals come from the same fixed-activation LP.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import networkx as nx

from .errors import InfeasibleMatchingError, SolveNumericalError
from .network import DUMMY_OPERATOR, DemandTable, Network
from .solve import (EQ, LE, LinearProgram, MixedIntegerProgram, Tolerances,
                    solve_lp, solve_milp)

FLOW_EPS = 1e-6


@dataclass(frozen=True)
class Path:
    """A simple path serving one user group."""

    group: tuple[int, int]
    nodes: tuple[int, ...]

    @property
    def arcs(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self.nodes[:-1], self.nodes[1:]))

    def operators(self, network: Network, include_dummy: bool = False) -> frozenset[int]:
        owners = {network.by_arc[a].owner for a in self.arcs}
        if not include_dummy:
            owners.discard(DUMMY_OPERATOR)
        return frozenset(owners)

    def travel_cost(self, network: Network) -> float:
        return sum(network.by_arc[a].travel_cost for a in self.arcs)


@dataclass
class MatchingSolution:
    flows: dict  # od -> {arc: passengers}
    activations: dict  # arc -> 0/1
    objective: float

    def total_flow(self, arc) -> float:
        return sum(per_od.get(arc, 0.0) for per_od in self.flows.values())


@dataclass
class PathFlowSolution:
    path_flows: list  # [(Path, z_r)]
    duals: dict  # arc -> mu >= 0

    def flows_for(self, od) -> list:
        return [(p, z) for p, z in self.path_flows if p.group == od]


def build_mcnd(network: Network, demand: DemandTable) -> MixedIntegerProgram:
    """Literal per-commodity model: |A|*|S| flow variables plus |A| binaries."""
    links = network.links
    ods = demand.ods
    num_links, num_ods = len(links), len(ods)
    arc_index = {link.arc: k for k, link in enumerate(links)}

    def xvar(s_idx, a_idx):
        return s_idx * num_links + a_idx

    y_offset = num_ods * num_links
    lp = LinearProgram(num_vars=y_offset + num_links,
                       objective=[0.0] * (y_offset + num_links))
    for s_idx, entry in enumerate(demand.entries):
        for a_idx, link in enumerate(links):
            lp.objective[xvar(s_idx, a_idx)] = link.travel_cost
    for a_idx, link in enumerate(links):
        lp.objective[y_offset + a_idx] = link.operating_cost

    for s_idx, entry in enumerate(demand.entries):
        for node in sorted(network.nodes):
            coeffs = []
            for a_idx, link in enumerate(links):
                if link.tail == node:
                    coeffs.append((xvar(s_idx, a_idx), 1.0))
                elif link.head == node:
                    coeffs.append((xvar(s_idx, a_idx), -1.0))
            rhs = entry.demand if node == entry.origin else (
                -entry.demand if node == entry.destination else 0.0)
            lp.add_row(coeffs, EQ, rhs)
    for a_idx, link in enumerate(links):
        coeffs = [(xvar(s_idx, a_idx), 1.0) for s_idx in range(num_ods)]
        coeffs.append((y_offset + a_idx, -link.capacity))
        lp.add_row(coeffs, LE, 0.0)
    binaries = frozenset(range(y_offset, y_offset + num_links))
    return MixedIntegerProgram(lp=lp, binary_vars=binaries)


def _build_origin_aggregated(network: Network, demand: DemandTable):
    """Commodities merged by origin; exact because costs are commodity-free."""
    links = network.links
    num_links = len(links)
    origins = sorted({entry.origin for entry in demand.entries})
    balance = {o: {} for o in origins}
    for entry in demand.entries:
        balance[entry.origin][entry.origin] = \
            balance[entry.origin].get(entry.origin, 0.0) + entry.demand
        balance[entry.origin][entry.destination] = \
            balance[entry.origin].get(entry.destination, 0.0) - entry.demand

    def xvar(o_idx, a_idx):
        return o_idx * num_links + a_idx

    y_offset = len(origins) * num_links
    lp = LinearProgram(num_vars=y_offset + num_links,
                       objective=[0.0] * (y_offset + num_links))
    for o_idx in range(len(origins)):
        for a_idx, link in enumerate(links):
            lp.objective[xvar(o_idx, a_idx)] = link.travel_cost
    for a_idx, link in enumerate(links):
        lp.objective[y_offset + a_idx] = link.operating_cost
    for o_idx, origin in enumerate(origins):
        for node in sorted(network.nodes):
            coeffs = []
            for a_idx, link in enumerate(links):
                if link.tail == node:
                    coeffs.append((xvar(o_idx, a_idx), 1.0))
                elif link.head == node:
                    coeffs.append((xvar(o_idx, a_idx), -1.0))
            lp.add_row(coeffs, EQ, balance[origin].get(node, 0.0))
    for a_idx, link in enumerate(links):
        coeffs = [(xvar(o_idx, a_idx), 1.0) for o_idx in range(len(origins))]
        coeffs.append((y_offset + a_idx, -link.capacity))
        lp.add_row(coeffs, LE, 0.0)
    binaries = frozenset(range(y_offset, y_offset + num_links))
    return MixedIntegerProgram(lp=lp, binary_vars=binaries), y_offset


def _fixed_activation_lp(network: Network, demand: DemandTable, activations):
    """Per-OD flow LP over the operated subnetwork; capacity rows keep w."""
    links = [l for l in network.links if activations.get(l.arc, 0) >= 0.5]
    ods = demand.ods
    num_links = len(links)

    def xvar(s_idx, a_idx):
        return s_idx * num_links + a_idx

    lp = LinearProgram(num_vars=num_links * len(ods),
                       objective=[0.0] * (num_links * len(ods)))
    for s_idx in range(len(ods)):
        for a_idx, link in enumerate(links):
            lp.objective[xvar(s_idx, a_idx)] = link.travel_cost
    for s_idx, entry in enumerate(demand.entries):
        for node in sorted(network.nodes):
            coeffs = []
            for a_idx, link in enumerate(links):
                if link.tail == node:
                    coeffs.append((xvar(s_idx, a_idx), 1.0))
                elif link.head == node:
                    coeffs.append((xvar(s_idx, a_idx), -1.0))
            rhs = entry.demand if node == entry.origin else (
                -entry.demand if node == entry.destination else 0.0)
            lp.add_row(coeffs, EQ, rhs)
    capacity_rows = []
    for a_idx, link in enumerate(links):
        coeffs = [(xvar(s_idx, a_idx), 1.0) for s_idx in range(len(ods))]
        capacity_rows.append(lp.add_row(coeffs, LE, link.capacity))
    return lp, links, capacity_rows


def _diagnose_infeasible(network: Network, demand: DemandTable):
    graph = nx.DiGraph()
    graph.add_nodes_from(network.nodes)
    for link in network.links:
        graph.add_edge(link.tail, link.head, capacity=link.capacity)
    no_path = [e.od for e in demand.entries
               if not nx.has_path(graph, e.origin, e.destination)]
    if no_path:
        raise InfeasibleMatchingError(
            f"no path exists for OD pairs {no_path}", offending_ods=no_path)
    starved = []
    for entry in demand.entries:
        value, _ = nx.maximum_flow(graph, entry.origin, entry.destination)
        if value < entry.demand - FLOW_EPS:
            starved.append(entry.od)
    offending = starved or demand.ods
    detail = ("capacity cannot carry demand for" if starved
              else "demand is jointly unroutable across")
    raise InfeasibleMatchingError(
        f"{detail} OD pairs {offending}", offending_ods=offending)


def solve_matching(
    network: Network,
    demand: DemandTable,
    engine: str | None = None,
    tolerances: Tolerances = Tolerances(),
    node_limit: int = 200_000,
    time_limit: float | None = None,
) -> MatchingSolution:
    """Solve the matching to proven optimality; per-OD flows and activations."""
    demand.validate_against(network)
    if not demand.entries:
        return MatchingSolution(flows={}, activations={l.arc: 0 for l in network.links},
                                objective=0.0)
    graph = nx.DiGraph()
    graph.add_nodes_from(network.nodes)
    graph.add_edges_from(l.arc for l in network.links)
    no_path = [e.od for e in demand.entries
               if not nx.has_path(graph, e.origin, e.destination)]
    if no_path:
        raise InfeasibleMatchingError(
            f"no path exists for OD pairs {no_path}", offending_ods=no_path)

    mip, y_offset = _build_origin_aggregated(network, demand)
    result = solve_milp(mip, engine=engine, tolerances=tolerances,
                        node_limit=node_limit, time_limit=time_limit)
    if result.status == "infeasible":
        _diagnose_infeasible(network, demand)
    if result.status != "optimal":
        raise SolveNumericalError(f"matching solve ended with {result.status}")
    activations = {link.arc: int(round(result.x[y_offset + a_idx]))
                   for a_idx, link in enumerate(network.links)}
    objective = result.objective

    lp, links, _ = _fixed_activation_lp(network, demand, activations)
    sub = solve_lp(lp, tolerances)
    if sub.status != "optimal":
        raise SolveNumericalError(
            f"flow recovery LP ended with {sub.status} for fixed activations")
    fixed_cost = sum(l.operating_cost for l in network.links
                     if activations[l.arc])
    recomputed = sub.objective + fixed_cost
    if abs(recomputed - objective) > tolerances.optimality * max(1.0, abs(objective)):
        raise SolveNumericalError(
            f"aggregated optimum {objective} and recovered flows {recomputed} disagree")
    flows = {}
    num_links = len(links)
    for s_idx, entry in enumerate(demand.entries):
        per_od = {}
        for a_idx, link in enumerate(links):
            value = float(sub.x[s_idx * num_links + a_idx])
            if value > FLOW_EPS:
                per_od[link.arc] = value
        flows[entry.od] = per_od
    return MatchingSolution(flows=flows, activations=activations,
                            objective=float(recomputed))


def extract_duals(
    network: Network,
    demand: DemandTable,
    activations: dict,
    tolerances: Tolerances = Tolerances(),
) -> dict:
    """Capacity duals of the flow LP with activations held fixed.

    mu_ij >= 0 in $ per passenger; zero on links that are not operated.
    """
    mu = {link.arc: 0.0 for link in network.links}
    if not demand.entries:
        return mu
    lp, links, capacity_rows = _fixed_activation_lp(network, demand, activations)
    result = solve_lp(lp, tolerances)
    if result.status != "optimal":
        raise SolveNumericalError(
            f"dual-extraction LP ended with {result.status}: activations inconsistent")
    for link, row in zip(links, capacity_rows):
        # min problem, <= row: d(obj)/d(rhs) <= 0, so mu = -dual
        mu[link.arc] = max(0.0, -float(result.duals[row]))
    return mu


def decompose_flows(
    network: Network,
    demand: DemandTable,
    solution: MatchingSolution,
    duals: dict | None = None,
) -> PathFlowSolution:
    """Canonical path decomposition of the per-OD link flows.

    Per commodity: cancel residual cycles as they are met, then repeatedly
    walk from the origin taking the lexicographically smallest next node with
    positive residual and extract the bottleneck amount.  Deterministic, so
    reported path flows are reproducible despite their non-uniqueness.
    """
    path_flows = []
    for entry in demand.entries:
        residual = {arc: v for arc, v in solution.flows.get(entry.od, {}).items()
                    if v > FLOW_EPS}
        path_flows.extend(
            (Path(group=entry.od, nodes=nodes), amount)
            for nodes, amount in _decompose_commodity(entry, residual))
    return PathFlowSolution(path_flows=path_flows, duals=dict(duals or {}))


def _decompose_commodity(entry, residual):
    origin, destination = entry.od
    extracted = []
    remaining = entry.demand
    while remaining > FLOW_EPS:
        walk = [origin]
        position = {origin: 0}
        node = origin
        cycle = None
        while node != destination:
            nexts = sorted(h for (t, h) in residual if t == node)
            if not nexts:
                raise SolveNumericalError(
                    f"flow for OD {entry.od} dead-ends at node {node}")
            nxt = nexts[0]
            if nxt in position:
                cycle = walk[position[nxt]:] + [nxt]
                break
            walk.append(nxt)
            position[nxt] = len(walk) - 1
            node = nxt
        if cycle is not None:
            _subtract(residual, cycle, min(residual[a] for a in _arcs(cycle)))
            continue
        amount = min(remaining, min(residual[a] for a in _arcs(walk)))
        _subtract(residual, walk, amount)
        extracted.append((tuple(walk), amount))
        remaining -= amount
    # anything left is a set of zero-net cycles; cancel them deterministically
    while residual:
        start = min(residual)[0]
        walk = [start]
        position = {start: 0}
        node = start
        while True:
            nexts = sorted(h for (t, h) in residual if t == node)
            if not nexts:
                raise SolveNumericalError(
                    f"residual flow for OD {entry.od} is not a union of cycles")
            nxt = nexts[0]
            if nxt in position:
                cycle = walk[position[nxt]:] + [nxt]
                break
            walk.append(nxt)
            position[nxt] = len(walk) - 1
            node = nxt
        _subtract(residual, cycle, min(residual[a] for a in _arcs(cycle)))
    merged = {}
    for nodes, amount in extracted:
        merged[nodes] = merged.get(nodes, 0.0) + amount
    return [(nodes, amt) for nodes, amt in merged.items() if amt > FLOW_EPS]


def _arcs(nodes):
    return list(zip(nodes[:-1], nodes[1:]))


def _subtract(residual, nodes, amount):
    for arc in _arcs(nodes):
        residual[arc] -= amount
        if residual[arc] <= FLOW_EPS:
            del residual[arc]


def dump_link_flows(network: Network, solution: MatchingSolution, target) -> None:
    """Aggregate flow per link, one row per link in arc order."""
    _write_table(target, ["tail", "head", "flow"],
                 [[a[0], a[1], f"{solution.total_flow(a):.6f}"]
                  for a in sorted(l.arc for l in network.links)])


def dump_commodity_flows(solution: MatchingSolution, target) -> None:
    rows = []
    for od in sorted(solution.flows):
        for arc in sorted(solution.flows[od]):
            rows.append([od[0], od[1], arc[0], arc[1],
                         f"{solution.flows[od][arc]:.6f}"])
    _write_table(target, ["origin", "destination", "tail", "head", "flow"], rows)


def dump_link_status(network: Network, solution: MatchingSolution,
                     duals: dict, target) -> None:
    rows = [[a[0], a[1], solution.activations.get(a, 0),
             f"{duals.get(a, 0.0):.6f}"]
            for a in sorted(l.arc for l in network.links)]
    _write_table(target, ["tail", "head", "operated", "capacity_dual"], rows)


def _write_table(target, header, rows):
    close = False
    if not hasattr(target, "write"):
        target = open(target, "w", newline="")
        close = True
    try:
        writer = csv.writer(target)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if close:
            target.close()
