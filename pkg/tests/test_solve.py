import itertools
import math
import random

import pytest

from maas_market import (LinearProgram, MixedIntegerProgram, solve_lp,
                         solve_milp)
from maas_market.errors import ResourceLimitExceeded
from maas_market.solve import (EQ, GE, LE, Tolerances, resolve_engine,
                               write_lp_file)


def test_trivial_lp_with_dual():
    lp = LinearProgram(num_vars=1, objective=[1.0], maximize=True)
    row = lp.add_row([(0, 1.0)], LE, 5.0)
    result = solve_lp(lp)
    assert result.status == "optimal"
    assert result.x[0] == pytest.approx(5.0)
    assert result.duals[row] == pytest.approx(1.0)


def test_ge_row_dual_sign():
    # min x s.t. x >= 3: pushing the rhs up raises the optimum
    lp = LinearProgram(num_vars=1, objective=[1.0])
    row = lp.add_row([(0, 1.0)], GE, 3.0)
    result = solve_lp(lp)
    assert result.objective == pytest.approx(3.0)
    assert result.duals[row] == pytest.approx(1.0)


def test_degenerate_lp_valid_dual():
    # two identical binding rows: duals non-unique but must price the rhs
    lp = LinearProgram(num_vars=1, objective=[1.0], maximize=True)
    r1 = lp.add_row([(0, 1.0)], LE, 5.0)
    r2 = lp.add_row([(0, 1.0)], LE, 5.0)
    result = solve_lp(lp)
    assert result.status == "optimal"
    assert result.duals[r1] + result.duals[r2] == pytest.approx(1.0)
    assert result.duals[r1] >= -1e-9 and result.duals[r2] >= -1e-9


def test_infeasible_and_unbounded_status():
    lp = LinearProgram(num_vars=1, objective=[1.0])
    lp.add_row([(0, 1.0)], LE, -1.0)
    assert solve_lp(lp).status == "infeasible"
    lp2 = LinearProgram(num_vars=1, objective=[1.0], maximize=True)
    assert solve_lp(lp2).status == "unbounded"


def test_strong_duality_and_slackness():
    rng = random.Random(7)
    for _ in range(20):
        n = rng.randint(2, 5)
        lp = LinearProgram(num_vars=n,
                           objective=[rng.uniform(0.5, 3) for _ in range(n)],
                           maximize=True)
        rows = []
        for _ in range(rng.randint(2, 5)):
            coeffs = [(j, rng.uniform(0.1, 2)) for j in range(n)]
            rows.append((lp.add_row(coeffs, LE, rng.uniform(1, 10)), coeffs))
        result = solve_lp(lp)
        assert result.status == "optimal"
        dual_obj = sum(result.duals[r] * lp.rows[r].rhs for r, _ in rows)
        assert dual_obj == pytest.approx(result.objective,
                                         rel=1e-6, abs=1e-6)
        for r, coeffs in rows:
            if result.duals[r] > 1e-6:
                lhs = sum(v * result.x[j] for j, v in coeffs)
                assert abs(lhs - lp.rows[r].rhs) <= 1e-6


@pytest.mark.parametrize("engine", ["bundled", "external"])
def test_knapsack(engine):
    lp = LinearProgram(num_vars=2, objective=[3.0, 2.0], maximize=True)
    lp.add_row([(0, 1.0), (1, 1.0)], LE, 1.0)
    mip = MixedIntegerProgram(lp=lp, binary_vars=frozenset({0, 1}))
    result = solve_milp(mip, engine=engine)
    assert result.objective == pytest.approx(3.0)
    assert result.x[0] == pytest.approx(1.0)


def _random_fixed_charge(seed):
    """Tiny fixed-charge model: route demand on arcs with activation costs."""
    rng = random.Random(seed)
    n_bin = rng.randint(2, 6)
    lp = LinearProgram(num_vars=2 * n_bin, objective=[0.0] * (2 * n_bin))
    caps = []
    for k in range(n_bin):
        lp.objective[k] = rng.uniform(0.5, 4)            # flow cost
        lp.objective[n_bin + k] = rng.uniform(1, 20)     # activation cost
        cap = rng.uniform(2, 8)
        caps.append(cap)
        lp.add_row([(k, 1.0), (n_bin + k, -cap)], LE, 0.0)
    demand = rng.uniform(1, sum(caps) * 0.8)
    lp.add_row([(k, 1.0) for k in range(n_bin)], EQ, demand)
    return MixedIntegerProgram(
        lp=lp, binary_vars=frozenset(range(n_bin, 2 * n_bin))), n_bin, caps, demand


def _brute_force(mip, n_bin, caps, demand):
    best = math.inf
    lp = mip.lp
    for pattern in itertools.product((0, 1), repeat=n_bin):
        cap = sum(c for c, y in zip(caps, pattern) if y)
        if cap < demand - 1e-9:
            continue
        # greedy fill cheapest active arcs
        order = sorted((lp.objective[k], k) for k in range(n_bin) if pattern[k])
        left, cost = demand, 0.0
        for c, k in order:
            take = min(left, caps[k])
            cost += c * take
            left -= take
        cost += sum(lp.objective[n_bin + k] * pattern[k] for k in range(n_bin))
        best = min(best, cost)
    return best


@pytest.mark.parametrize("engine", ["bundled", "external"])
def test_fixed_charge_matches_enumeration(engine):
    for seed in range(15):
        mip, n_bin, caps, demand = _random_fixed_charge(seed)
        result = solve_milp(mip, engine=engine)
        assert result.status == "optimal"
        expected = _brute_force(mip, n_bin, caps, demand)
        assert result.objective == pytest.approx(expected, abs=1e-6)


def test_bundled_node_cap():
    mip, *_ = _random_fixed_charge(3)
    with pytest.raises(ResourceLimitExceeded):
        solve_milp(mip, engine="bundled", node_limit=1)


def test_engine_resolution(monkeypatch):
    assert resolve_engine(None) == "bundled"
    assert resolve_engine("external") == "external"
    monkeypatch.setenv("MAAS_MARKET_ENGINE", "external")
    assert resolve_engine(None) == "external"
    assert resolve_engine("bundled") == "bundled"
    with pytest.raises(ValueError):
        resolve_engine("simplex")


def test_milp_infeasible_status():
    lp = LinearProgram(num_vars=1, objective=[1.0])
    lp.add_row([(0, 1.0)], GE, 0.5)
    lp.add_row([(0, 1.0)], LE, 0.4)
    mip = MixedIntegerProgram(lp=lp, binary_vars=frozenset({0}))
    assert solve_milp(mip, engine="bundled").status == "infeasible"
    assert solve_milp(mip, engine="external").status == "infeasible"


def test_lp_file_emission(tmp_path):
    lp = LinearProgram(num_vars=2, objective=[1.0, -2.0], maximize=True)
    lp.add_row([(0, 1.0), (1, 1.0)], LE, 4.0)
    mip = MixedIntegerProgram(lp=lp, binary_vars=frozenset({1}))
    path = tmp_path / "model.lp"
    write_lp_file(mip, path)
    text = path.read_text()
    assert text.startswith("Maximize")
    assert "Binary" in text and "x1" in text
    assert "e" not in text.split("\n")[1]  # fixed-point decimals only


def test_tolerances_configurable():
    tol = Tolerances(feasibility=1e-8, optimality=1e-7, mip_gap=1e-5)
    assert tol.as_dict() == {"feasibility": 1e-8, "optimality": 1e-7,
                             "mip_gap": 1e-5}
