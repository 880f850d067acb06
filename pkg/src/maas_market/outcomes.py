"""Stable-outcome LP assembly, vertex solves, and market metrics.

Variables are the per-group surplus u_s and the per-(path, operator) price
p_rf, both non-negative.  The platform operator never carries a price
variable.  Solving a vertex happens in two stages: the requested objective
first, then a lexicographic re-optimization of operator revenues (ascending
operator id, previous optima pinned) so the reported split is canonical even
when the vertex is degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SolveNumericalError
from .matching import MatchingSolution
from .solve import EQ, GE, LinearProgram, Tolerances, solve_lp
from .stability import ConstraintSystem

REVENUE_MAX = "revenue_max"
WELFARE_MAX = "welfare_max"
BUYER_OPTIMAL = "buyer_optimal"
SELLER_OPTIMAL = "seller_optimal"


@dataclass(frozen=True)
class ObjectivePolicy:
    """Either one global mode or a complete per-operator mode assignment."""

    global_mode: str | None = None
    per_operator: dict = field(default_factory=dict)
    demand_weighted: bool = False

    def __post_init__(self):
        if (self.global_mode is None) == (not self.per_operator):
            raise ValueError("set exactly one of global_mode / per_operator")
        if self.global_mode not in (None, BUYER_OPTIMAL, SELLER_OPTIMAL):
            raise ValueError(f"unknown global mode {self.global_mode!r}")
        for f, mode in self.per_operator.items():
            if mode not in (REVENUE_MAX, WELFARE_MAX):
                raise ValueError(f"unknown operator mode {mode!r} for {f}")


@dataclass(frozen=True)
class OutcomeOptions:
    fixed_fare_operators: frozenset[int] = frozenset()
    subsidies: dict = field(default_factory=dict)  # arc -> gamma (informational)


@dataclass
class OutcomeModel:
    lp: LinearProgram
    system: ConstraintSystem
    u_index: dict          # od -> column
    p_index: dict          # (od, nodes, f) -> column
    objective_label: str


@dataclass
class OperatorMetrics:
    operator: int
    revenue: float
    operating_cost: float
    subsidy: float
    profit: float
    ridership: float
    avg_fare: float
    min_fare: float
    max_fare: float


@dataclass
class StableOutcome:
    status: str                       # optimal | empty_core
    objective: float | None = None
    objective_label: str = ""
    surplus: dict = field(default_factory=dict)       # od -> u_s
    prices: dict = field(default_factory=dict)        # (od, nodes, f) -> p_rf
    operators: dict = field(default_factory=dict)     # f -> OperatorMetrics
    consumer_surplus: float = 0.0                     # sum d_s u_s
    avg_services_per_traveler: float = 0.0


def build_outcome_lp(
    system: ConstraintSystem,
    policy: ObjectivePolicy,
    options: OutcomeOptions = OutcomeOptions(),
) -> OutcomeModel:
    """Assemble the stable-outcome LP for one objective policy."""
    u_index = {od: i for i, od in enumerate(sorted(system.groups))}
    p_vars = system.price_variables()
    p_index = {key: len(u_index) + i for i, key in enumerate(p_vars)}
    n = len(u_index) + len(p_index)
    lp = LinearProgram(num_vars=n, objective=[0.0] * n, maximize=True)

    flows = {}
    for f, (terms, _) in system.covers.items():
        for od, nodes, z in terms:
            flows[(od, nodes)] = z

    # surplus equalities: u_s + sum_f p_rf = U_s - travel cost, per optimal path
    for od in sorted(system.groups):
        pset = system.groups[od]
        for info in pset.paths:
            coeffs = [(u_index[od], 1.0)]
            coeffs += [(p_index[(od, info.nodes, f)], 1.0)
                       for f in sorted(info.operators)]
            lp.add_row(coeffs, EQ, pset.utility - info.travel_cost)

    # operator cost covers: sum z_r p_rf >= operated cost net of subsidies
    for f in sorted(system.covers):
        terms, rhs = system.covers[f]
        coeffs = [(p_index[(od, nodes, f)], z) for od, nodes, z in terms if z > 0]
        lp.add_row(coeffs, GE, rhs)

    for row in system.stability_rows:
        coeffs = [(u_index[row.group], 1.0)]
        coeffs += [(p_index[(row.group, nodes, f)], 1.0) for nodes, f in row.terms]
        lp.add_row(coeffs, GE, row.bound)

    # fixed-fare tying: one common price across all paths of a flagged operator
    for f in sorted(options.fixed_fare_operators):
        cols = [p_index[key] for key in p_vars if key[2] == f]
        for a, b in zip(cols[:-1], cols[1:]):
            lp.add_row([(a, 1.0), (b, -1.0)], EQ, 0.0)

    objective, label = _objective_vector(system, policy, u_index, p_index, flows)
    lp.objective = objective
    return OutcomeModel(lp=lp, system=system, u_index=u_index,
                        p_index=p_index, objective_label=label)


def _objective_vector(system, policy, u_index, p_index, flows):
    n = len(u_index) + len(p_index)
    obj = [0.0] * n

    def add_surplus(weight=1.0):
        for od, col in u_index.items():
            scale = system.groups[od].demand if policy.demand_weighted else 1.0
            obj[col] += weight * scale

    def add_revenue(operator):
        for (od, nodes, f), col in p_index.items():
            if f == operator:
                obj[col] += flows.get((od, nodes), 0.0)

    if policy.global_mode == BUYER_OPTIMAL:
        add_surplus()
        return obj, BUYER_OPTIMAL
    if policy.global_mode == SELLER_OPTIMAL:
        for f in system.covers:
            add_revenue(f)
        return obj, SELLER_OPTIMAL
    for f, mode in sorted(policy.per_operator.items()):
        if mode == REVENUE_MAX:
            add_revenue(f)
        else:
            add_surplus()
    label = ",".join(f"{f}:{m}" for f, m in sorted(policy.per_operator.items()))
    return obj, label


def check_core_nonempty(system: ConstraintSystem,
                        options: OutcomeOptions = OutcomeOptions(),
                        tolerances: Tolerances = Tolerances()) -> bool:
    """Phase-1 feasibility of the full feasibility+stability system."""
    policy = ObjectivePolicy(global_mode=BUYER_OPTIMAL)
    model = build_outcome_lp(system, policy, options)
    model.lp.objective = [0.0] * model.lp.num_vars
    return solve_lp(model.lp, tolerances).status == "optimal"


def solve_outcome(
    model: OutcomeModel,
    matching: MatchingSolution | None = None,
    network=None,
    tolerances: Tolerances = Tolerances(),
    tie_break: bool = True,
) -> StableOutcome:
    """Solve one vertex of the stable-outcome polytope with derived metrics."""
    result = solve_lp(model.lp, tolerances)
    if result.status == "infeasible":
        return StableOutcome(status="empty_core",
                             objective_label=model.objective_label)
    if result.status == "unbounded":
        raise SolveNumericalError(
            "stable-outcome LP unbounded: surplus equalities missing a variable")
    objective = result.objective
    x = result.x
    if tie_break:
        x = _lexicographic_revenue_tiebreak(model, objective, tolerances)
    return _assemble_outcome(model, objective, x, matching, network)


def _lexicographic_revenue_tiebreak(model, primary_value, tolerances):
    """Pin the primary objective, then maximize each operator's revenue in
    ascending id order, pinning each optimum before moving on."""
    lp = model.lp
    flows = {}
    for f, (terms, _) in model.system.covers.items():
        for od, nodes, z in terms:
            flows[(od, nodes)] = z
    pinned_rows = []
    primary = [(i, v) for i, v in enumerate(lp.objective) if v != 0]
    pinned_rows.append(lp.add_row(primary, EQ, primary_value))
    x = None
    try:
        for f in sorted(model.system.covers):
            coeffs = [(col, flows.get((od, nodes), 0.0))
                      for (od, nodes, g), col in model.p_index.items() if g == f]
            coeffs = [(c, v) for c, v in coeffs if v != 0]
            if not coeffs:
                continue
            stage = LinearProgram(num_vars=lp.num_vars,
                                  objective=[0.0] * lp.num_vars,
                                  maximize=True, rows=lp.rows,
                                  bounds=lp.bounds)
            for c, v in coeffs:
                stage.objective[c] = v
            result = solve_lp(stage, tolerances)
            if result.status != "optimal":
                raise SolveNumericalError(
                    f"revenue tie-break stage for operator {f}: {result.status}")
            x = result.x
            pinned_rows.append(lp.add_row(coeffs, EQ, result.objective))
    finally:
        for _ in pinned_rows:
            lp.rows.pop()
    if x is None:
        x = solve_lp(lp, tolerances).x
    return x


def _assemble_outcome(model, objective, x, matching, network):
    system = model.system
    surplus = {od: max(0.0, float(x[col])) for od, col in model.u_index.items()}
    prices = {key: max(0.0, float(x[col])) for key, col in model.p_index.items()}
    flows = {}
    for f, (terms, _) in system.covers.items():
        for od, nodes, z in terms:
            flows[(od, nodes)] = z

    operators = {}
    all_ops = sorted({f for (_, _, f) in prices} | set(system.covers))
    for f in all_ops:
        revenue = ridership = 0.0
        fares = []
        for (od, nodes, g), p in prices.items():
            if g != f:
                continue
            z = flows.get((od, nodes), 0.0)
            revenue += p * z
            ridership += z
            if z > 0:
                fares.append(p)
        cost = subsidy = 0.0
        if matching is not None and network is not None:
            for link in network.operator_links(f):
                if matching.activations.get(link.arc, 0) >= 0.5:
                    cost += link.operating_cost
        operators[f] = OperatorMetrics(
            operator=f, revenue=revenue, operating_cost=cost, subsidy=subsidy,
            profit=revenue - cost + subsidy, ridership=ridership,
            avg_fare=revenue / ridership if ridership > 0 else 0.0,
            min_fare=min(fares) if fares else 0.0,
            max_fare=max(fares) if fares else 0.0)

    consumer_surplus = sum(system.groups[od].demand * u
                           for od, u in surplus.items())
    total_demand = sum(p.demand for p in system.groups.values())
    weighted_services = sum(
        info.flow * len(info.operators)
        for pset in system.groups.values() for info in pset.paths)
    return StableOutcome(
        status="optimal", objective=float(objective),
        objective_label=model.objective_label,
        surplus=surplus, prices=prices, operators=operators,
        consumer_surplus=consumer_surplus,
        avg_services_per_traveler=(weighted_services / total_demand
                                   if total_demand > 0 else 0.0))


def apply_subsidy_metrics(outcome: StableOutcome, network, matching,
                          subsidies: dict) -> None:
    """Fill per-operator subsidy income and refresh profit figures."""
    for f, metrics in outcome.operators.items():
        subsidy = sum(subsidies.get(link.arc, 0.0)
                      for link in network.operator_links(f)
                      if matching.activations.get(link.arc, 0) >= 0.5)
        metrics.subsidy = subsidy
        metrics.profit = metrics.revenue - metrics.operating_cost + subsidy


def report(outcome: StableOutcome, matching: MatchingSolution | None = None,
           timings: dict | None = None) -> dict:
    """JSON-ready metrics document mirroring the per-operator table layout."""
    doc = {
        "status": outcome.status,
        "objective": outcome.objective,
        "objective_label": outcome.objective_label,
        "consumer_surplus": outcome.consumer_surplus,
        "avg_services_per_traveler": outcome.avg_services_per_traveler,
        "operators": [
            {
                "operator": m.operator,
                "revenue": m.revenue,
                "operating_cost": m.operating_cost,
                "subsidy": m.subsidy,
                "profit": m.profit,
                "ridership": m.ridership,
                "avg_fare": m.avg_fare,
                "min_fare": m.min_fare,
                "max_fare": m.max_fare,
            }
            for _, m in sorted(outcome.operators.items())
        ],
        "surplus": [
            {"origin": od[0], "destination": od[1], "u": u}
            for od, u in sorted(outcome.surplus.items())
        ],
        "prices": [
            {"origin": od[0], "destination": od[1],
             "path": list(nodes), "operator": f, "price": p}
            for (od, nodes, f), p in sorted(outcome.prices.items())
        ],
    }
    if matching is not None:
        doc["matching_objective"] = matching.objective
    if timings:
        doc["timings_msec"] = dict(timings)
    return doc
