"""
Tests du solveur de potentiel et des sources de densité
"""

import numpy as np
import pytest

from src.bridge.density import DensitySource, SourceKind
from src.bridge.potential import (
    evaluate_density,
    gamma0,
    marginal_residual,
    potential_riemann_gap,
    solve_potential,
)
from src.cost.functions import quadratic
from src.utils.errors import BridgeError, DomainError, KernelError, PotentialOverflowError


@pytest.fixture(scope="module")
def quadratic_solution():
    cost = quadratic(1.0)
    return cost, solve_potential(cost, 400, 1e-10, 5000)


def test_zero_cost_gives_zero_potential():
    cost = quadratic(0.0)
    sol = solve_potential(cost, 64, 1e-12, 100)
    assert np.all(sol.a_values == 0.0)
    assert sol.gamma0 == 0.0
    assert gamma0(sol) == 0.0
    assert sol.iterations <= 2
    assert marginal_residual(sol, cost) <= 1e-14
    assert evaluate_density(sol, cost, 0.2, 0.7) == 1.0


def test_quadratic_converges(quadratic_solution):
    cost, sol = quadratic_solution
    assert sol.final_residual <= 1e-10
    assert marginal_residual(sol, cost) <= 1e-10
    assert sol.gamma0 > 0
    assert sol.gamma0 == pytest.approx(gamma0(sol), rel=1e-14)


def test_gamma0_self_convergence(quadratic_solution):
    cost, coarse = quadratic_solution
    fine = solve_potential(cost, 800, 1e-10, 5000)
    assert fine.gamma0 == pytest.approx(coarse.gamma0, rel=1e-4)


def test_symmetric_cost_gives_symmetric_potential(quadratic_solution):
    _, sol = quadratic_solution
    assert np.max(np.abs(sol.a_values - sol.a_values[::-1])) <= 1e-9


def test_residual_trace_non_increasing(quadratic_solution):
    _, sol = quadratic_solution
    trace = np.array(sol.residual_trace)
    below = trace[np.argmax(trace < 1.0):]
    assert np.all(np.diff(below) <= 0.0)


def test_gauge_rigidity(quadratic_solution):
    cost, sol = quadratic_solution
    assert marginal_residual(sol.shifted(0.1), cost) > marginal_residual(sol, cost)


def test_constant_shift_residual_closed_form():
    cost = quadratic(0.0)
    sol = solve_potential(cost, 32, 1e-12, 10).shifted(0.01)
    assert marginal_residual(sol, cost) == pytest.approx(1.0 - np.exp(-0.02), rel=1e-12)


def test_gamma0_of_constant_potential():
    sol = solve_potential(quadratic(0.0), 16, 1e-12, 10).shifted(0.3)
    assert gamma0(sol) == pytest.approx(-0.6, rel=1e-14)


def test_density_symmetry_and_diagonal(quadratic_solution):
    cost, sol = quadratic_solution
    assert evaluate_density(sol, cost, 0.2, 0.9) == evaluate_density(sol, cost, 0.9, 0.2)
    x = 0.37
    on_diag = evaluate_density(sol, cost, x, x)
    assert on_diag == pytest.approx(np.exp(-2.0 * sol.potential_at(x)), rel=1e-15)
    assert on_diag >= np.exp(-cost(x, x) - 2.0 * sol.a_values.max())


def test_density_domain_error(quadratic_solution):
    cost, sol = quadratic_solution
    with pytest.raises(DomainError):
        evaluate_density(sol, cost, 1.5, 0.2)


def test_potential_riemann_gap_shrinks(quadratic_solution):
    _, sol = quadratic_solution
    gaps = [abs(potential_riemann_gap(sol, n)) for n in (8, 16, 32)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_non_convergence_reports_residual():
    with pytest.raises(BridgeError) as excinfo:
        solve_potential(quadratic(1.0), 64, 1e-14, 1)
    assert excinfo.value.last_residual > 1e-14
    assert excinfo.value.exit_code == 3


def test_overflow_guard():
    with pytest.raises(PotentialOverflowError):
        solve_potential(quadratic(1000.0), 16, 1e-10, 100, exponent_bound=700.0)


def test_invalid_arguments():
    with pytest.raises(BridgeError):
        solve_potential(quadratic(1.0), 4, 1e-10, 100)
    with pytest.raises(BridgeError):
        solve_potential(quadratic(1.0), 16, 1e-10, 100, damping=0.0)


def test_cosine_source_marginals_and_range(warnings_sink):
    source = DensitySource.cosine(0.5)
    nodes = (np.arange(256) + 0.5) / 256
    row_means = source.grid(nodes, nodes).mean(axis=1)
    np.testing.assert_allclose(row_means, 1.0, atol=1e-13)
    DensitySource.cosine(0.999)
    assert any("négatives" in m for m in warnings_sink)
    with pytest.raises(KernelError):
        DensitySource.cosine(1.0)


def test_bridge_source_kind(quadratic_solution):
    cost, sol = quadratic_solution
    source = DensitySource.bridge(sol, cost)
    assert source.kind is SourceKind.BRIDGE
    assert source(0.3, 0.6) == pytest.approx(evaluate_density(sol, cost, 0.3, 0.6), rel=1e-15)
