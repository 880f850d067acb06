"""Feasibility and stability constraint generation for stable outcomes.

The outcome variables are a per-group surplus u_s and a per-(path, operator)
price p_rf over the optimal paths of each group.  Feasibility ties them to the
matched surplus (one equality per optimal path) and to operator cost recovery
(one cover per operator).  Stability forbids any traveler group and operator
coalition from profitably deviating to an alternative path.

Two generators are provided.  The lexicographic generator searches, per group
and per nonempty subcoalition of the operators serving it, for the cheapest
alternative path avoiding that subcoalition, so it never enumerates the path
space.  The enumeration generator writes one row per (alternative path,
anchor path) pair over all simple paths and serves as the correctness oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import networkx as nx

from .errors import (PathCapExceeded, StabilityToleranceError,
                     SubcoalitionCapExceeded)
from .matching import MatchingSolution, Path, PathFlowSolution
from .network import DUMMY_OPERATOR, DemandTable, Network

TIE_TOL = 1e-6
SUBCOALITION_CAP = 2 ** 12


def omega(nodes, network: Network, duals: dict, activations: dict) -> float:
    """Deviation cost of a path: travel cost, plus the capacity dual on
    saturated links, plus the full operating cost of links not operated."""
    total = 0.0
    for arc in zip(nodes[:-1], nodes[1:]):
        link = network.by_arc[arc]
        operated = activations.get(arc, 0) >= 0.5
        total += link.travel_cost + duals.get(arc, 0.0)
        if not operated:
            total += link.operating_cost
    return total


@dataclass(frozen=True)
class PathInfo:
    nodes: tuple[int, ...]
    travel_cost: float
    omega_cost: float
    flow: float            # z_r from the decomposition, 0 for unused optima
    operators: frozenset[int]  # non-dummy owners on the path


@dataclass(frozen=True)
class OptimalPathSet:
    group: tuple[int, int]
    utility: float
    demand: float
    paths: tuple[PathInfo, ...]   # all omega-minimal paths, sorted by nodes
    operators: frozenset[int]     # union of non-dummy owners

    @property
    def omega_value(self) -> float:
        return self.paths[0].omega_cost


@dataclass(frozen=True)
class StabilityRow:
    """u_s + sum of the listed price variables >= bound."""

    group: tuple[int, int]
    terms: tuple[tuple[tuple[int, ...], int], ...]  # ((path nodes), operator)
    bound: float

    def variables(self):
        return (self.group, frozenset(self.terms))


@dataclass
class ConstraintSystem:
    groups: dict                      # od -> OptimalPathSet
    covers: dict                      # operator -> (terms, rhs); terms: [(od, nodes, z_r)]
    stability_rows: list = field(default_factory=list)

    def price_variables(self):
        """All (od, path nodes, operator) triples carrying a price variable."""
        out = []
        for od in sorted(self.groups):
            for info in self.groups[od].paths:
                for f in sorted(info.operators):
                    out.append((od, info.nodes, f))
        return out

    def render_text(self) -> str:
        lines = []
        for od in sorted(self.groups):
            pset = self.groups[od]
            for info in pset.paths:
                terms = " + ".join(f"p[{list(info.nodes)}][{f}]"
                                   for f in sorted(info.operators))
                rhs = pset.utility - info.travel_cost
                lhs = f"u[{od}]" + (f" + {terms}" if terms else "")
                lines.append(f"{lhs} = {rhs:.6f}")
        for f in sorted(self.covers):
            terms, rhs = self.covers[f]
            body = " + ".join(f"{z:.6f} p[{list(nodes)}][{f}]"
                              for _, nodes, z in terms) or "0"
            lines.append(f"{body} >= {rhs:.6f}")
        for row in self.stability_rows:
            body = " + ".join(f"p[{list(nodes)}][{f}]" for nodes, f in row.terms)
            lhs = f"u[{row.group}]" + (f" + {body}" if body else "")
            lines.append(f"{lhs} >= {row.bound:.6f}")
        return "\n".join(lines) + "\n"


def _omega_graph(network: Network, duals, activations) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(network.nodes)
    for link in network.links:
        operated = activations.get(link.arc, 0) >= 0.5
        weight = link.travel_cost + duals.get(link.arc, 0.0) \
            + (0.0 if operated else link.operating_cost)
        graph.add_edge(link.tail, link.head, weight=weight, owner=link.owner)
    return graph


def optimal_path_sets(
    network: Network,
    demand: DemandTable,
    duals: dict,
    activations: dict,
    decomposition: PathFlowSolution,
    tie_tol: float = TIE_TOL,
    tie_cap: int = 1000,
) -> dict:
    """Omega-minimal path set per group, enumerating ties up to ``tie_cap``."""
    graph = _omega_graph(network, duals, activations)
    support = {}
    for path, z in decomposition.path_flows:
        support.setdefault(path.group, {})[path.nodes] = z
    sets = {}
    for entry in demand.entries:
        best = None
        members = []
        for count, nodes in enumerate(
                nx.shortest_simple_paths(graph, entry.origin, entry.destination,
                                         weight="weight")):
            if count >= tie_cap:
                raise PathCapExceeded(
                    f"more than {tie_cap} tied optimal paths for OD {entry.od}")
            value = omega(nodes, network, duals, activations)
            if best is None:
                best = value
            if value > best + tie_tol:
                break
            members.append(tuple(nodes))
        flows = support.get(entry.od, {})
        for nodes, z in flows.items():
            value = omega(nodes, network, duals, activations)
            if value > best + tie_tol:
                raise StabilityToleranceError(
                    f"flow-carrying path {nodes} for OD {entry.od} has deviation "
                    f"cost {value}, above the minimum {best}")
        infos = tuple(sorted(
            (PathInfo(nodes=nodes,
                      travel_cost=Path(entry.od, nodes).travel_cost(network),
                      omega_cost=omega(nodes, network, duals, activations),
                      flow=flows.get(nodes, 0.0),
                      operators=Path(entry.od, nodes).operators(network))
             for nodes in members),
            key=lambda info: info.nodes))
        sets[entry.od] = OptimalPathSet(
            group=entry.od, utility=entry.utility, demand=entry.demand,
            paths=infos,
            operators=frozenset().union(*(i.operators for i in infos)) if infos
            else frozenset())
    return sets


def subcoalitions(operators, cap: int = SUBCOALITION_CAP):
    """All nonempty operator subsets, smaller sets first, then lexicographic."""
    members = sorted(operators)
    if DUMMY_OPERATOR in members:
        raise ValueError("subcoalitions exclude the platform operator")
    if 2 ** len(members) > cap:
        raise SubcoalitionCapExceeded(
            f"{len(members)} operators exceed the {cap}-subset cap")
    out = []
    for size in range(1, len(members) + 1):
        out.extend(itertools.combinations(members, size))
    return out


def excluded_shortest_path(graph: nx.DiGraph, od, pi) -> tuple | None:
    """Cheapest deviation path using no link owned by the given operators."""
    banned = set(pi)

    def keep(u, v):
        return graph[u][v]["owner"] not in banned

    view = nx.subgraph_view(graph, filter_edge=keep)
    try:
        nodes = nx.dijkstra_path(view, od[0], od[1], weight="weight")
    except (nx.NetworkXNoPath, nx.NodeNotFound):
        return None
    return tuple(nodes)


def _build_covers(network: Network, activations, decomposition, path_sets,
                  subsidies=None):
    subsidies = subsidies or {}
    covers = {}
    flows = {(p.group, p.nodes): z for p, z in decomposition.path_flows}
    for f in sorted(network.operators):
        if f == DUMMY_OPERATOR:
            continue
        rhs = sum((link.operating_cost - subsidies.get(link.arc, 0.0))
                  for link in network.operator_links(f)
                  if activations.get(link.arc, 0) >= 0.5)
        terms = []
        for od in sorted(path_sets):
            for info in path_sets[od].paths:
                if f in info.operators:
                    z = flows.get((od, info.nodes), 0.0)
                    terms.append((od, info.nodes, z))
        if terms or rhs > 0:
            covers[f] = (terms, rhs)
    return covers


def _dedup_rows(rows):
    # keep the strongest bound per distinct variable set
    best = {}
    for row in rows:
        key = row.variables()
        if key not in best or row.bound > best[key].bound:
            best[key] = row
    return sorted(best.values(), key=lambda r: (r.group, r.terms, -r.bound))


def generate_constraints_algorithm1(
    network: Network,
    demand: DemandTable,
    matching: MatchingSolution,
    decomposition: PathFlowSolution,
    subsidies: dict | None = None,
    tie_tol: float = TIE_TOL,
    subcoalition_cap: int = SUBCOALITION_CAP,
) -> ConstraintSystem:
    """Stability rows via subcoalition exclusion, no path enumeration.

    For each group, each anchor optimal path, and each nonempty subcoalition
    of the serving operators: find the cheapest path avoiding the coalition;
    skip when none exists or when it is itself optimal (already bound by the
    surplus equalities); otherwise emit a row over the shared operators.
    """
    path_sets = optimal_path_sets(network, demand, decomposition.duals,
                                  matching.activations, decomposition,
                                  tie_tol=tie_tol)
    graph = _omega_graph(network, decomposition.duals, matching.activations)
    rows = []
    for od in sorted(path_sets):
        pset = path_sets[od]
        if not pset.paths:
            continue
        best = pset.omega_value
        for pi in subcoalitions(pset.operators, cap=subcoalition_cap):
            alt = excluded_shortest_path(graph, od, pi)
            if alt is None:
                continue
            alt_omega = omega(alt, network, decomposition.duals,
                              matching.activations)
            if alt_omega <= best + tie_tol:
                continue
            alt_ops = Path(od, alt).operators(network)
            bound = pset.utility - alt_omega
            for info in pset.paths:
                shared = info.operators & alt_ops
                terms = tuple(sorted((info.nodes, f) for f in shared))
                rows.append(StabilityRow(group=od, terms=terms, bound=bound))
    return ConstraintSystem(
        groups=path_sets,
        covers=_build_covers(network, matching.activations, decomposition,
                             path_sets, subsidies),
        stability_rows=_dedup_rows(rows))


def generate_constraints_enumeration(
    network: Network,
    demand: DemandTable,
    matching: MatchingSolution,
    decomposition: PathFlowSolution,
    subsidies: dict | None = None,
    tie_tol: float = TIE_TOL,
    path_cap: int = 20_000,
) -> ConstraintSystem:
    """Oracle generator: one stability row per (alternative, anchor) pair
    over every simple path of every group."""
    path_sets = optimal_path_sets(network, demand, decomposition.duals,
                                  matching.activations, decomposition,
                                  tie_tol=tie_tol)
    graph = _omega_graph(network, decomposition.duals, matching.activations)
    rows = []
    for od in sorted(path_sets):
        pset = path_sets[od]
        if not pset.paths:
            continue
        best = pset.omega_value
        optimal_nodes = {info.nodes for info in pset.paths}
        count = 0
        for nodes in nx.all_simple_paths(graph, od[0], od[1]):
            count += 1
            if count > path_cap:
                raise PathCapExceeded(
                    f"OD {od} exceeds the {path_cap} simple-path cap")
            nodes = tuple(nodes)
            if nodes in optimal_nodes:
                continue
            alt_omega = omega(nodes, network, decomposition.duals,
                              matching.activations)
            if alt_omega <= best + tie_tol:
                continue  # an omega-tied path belongs to the optimal set
            alt_ops = Path(od, nodes).operators(network)
            bound = pset.utility - alt_omega
            for info in pset.paths:
                shared = info.operators & alt_ops
                terms = tuple(sorted((info.nodes, f) for f in shared))
                rows.append(StabilityRow(group=od, terms=terms, bound=bound))
    return ConstraintSystem(
        groups=path_sets,
        covers=_build_covers(network, matching.activations, decomposition,
                             path_sets, subsidies),
        stability_rows=sorted(rows, key=lambda r: (r.group, r.terms, -r.bound)))
