"""
Tests de l'échantillonnage du noyau, du défaut q_n et des sommes de Riemann
"""

from fractions import Fraction

import numpy as np
import pytest

from src.bridge.density import DensitySource
from src.bridge.potential import solve_potential
from src.cost.functions import absolute, quadratic
from src.grid.kernel import load_kernel_file, row_defect, sample_kernel
from src.grid.riemann import riemann_correction_check, riemann_sum
from src.utils.errors import KernelError


@pytest.fixture(scope="module")
def quadratic_source():
    cost = quadratic(1.0)
    sol = solve_potential(cost, 1600, 1e-12, 5000)
    return DensitySource.bridge(sol, cost)


def test_constant_kernel():
    K = sample_kernel(DensitySource.constant(), 3)
    assert np.all(K.entries == 1.0)
    defect = row_defect(K)
    assert np.all(defect.q == 0.0)
    assert defect.q_bar == defect.norm_inf == defect.norm_2n == 0.0


def test_cosine_n2_matrix_and_defect():
    K = sample_kernel(DensitySource.cosine(0.5), 2)
    np.testing.assert_allclose(K.entries, [[1.0, 1.0], [1.0, 2.0]], atol=1e-15)
    defect = row_defect(K)
    np.testing.assert_allclose(defect.q, [0.0, 0.5], atol=1e-15)
    assert defect.q_bar == pytest.approx(0.25)
    assert defect.norm_2n <= defect.norm_inf


def test_zero_cost_bridge_kernel():
    cost = quadratic(0.0)
    sol = solve_potential(cost, 16, 1e-12, 10)
    K = sample_kernel(DensitySource.bridge(sol, cost), 5)
    assert np.all(K.entries == 1.0)


def test_sampled_kernel_exactly_symmetric(quadratic_source):
    K = sample_kernel(quadratic_source, 37)
    assert np.array_equal(K.entries, K.entries.T)
    assert K.entries.min() > 0


def test_asymmetric_source_rejected():
    table = np.ones((5, 5))
    table[1, 3] = 1.5
    with pytest.raises(KernelError):
        sample_kernel(DensitySource.tabulated(table), 4)


def test_negative_source_rejected():
    with pytest.raises(KernelError):
        sample_kernel(DensitySource.cosine(0.9), 4)


def test_kernel_file_roundtrip(tmp_path):
    K = sample_kernel(DensitySource.cosine(0.3), 6)
    reloaded = load_kernel_file(K.to_file(tmp_path / "k.txt"))
    np.testing.assert_array_equal(reloaded.entries, K.entries)


@pytest.mark.slow
def test_defect_scaling(quadratic_source):
    ns = np.array([100, 200, 400, 800])
    defects = [row_defect(sample_kernel(quadratic_source, int(n))) for n in ns]
    scaled_inf = ns * np.array([d.norm_inf for d in defects])
    scaled_bar = ns ** 2 * np.abs([d.q_bar for d in defects])
    assert scaled_inf.max() / scaled_inf.min() <= 4.0
    assert scaled_bar.max() / scaled_bar.min() <= 8.0


def test_cosine_defect_scaling():
    source = DensitySource.cosine(0.5)
    ns = np.array([100, 200, 400, 800])
    scaled = ns * np.array([row_defect(sample_kernel(source, int(n))).norm_inf for n in ns])
    assert scaled.max() / scaled.min() <= 4.0


def test_riemann_sum_examples():
    assert riemann_sum([1.0] * 10) == 1.0
    assert riemann_sum([0.25, 0.5, 0.75, 1.0]) == pytest.approx(0.625, abs=1e-16)
    values = [(i / 10) ** 2 for i in range(1, 11)]
    assert riemann_sum(values) == pytest.approx(0.385, abs=1e-15)
    assert riemann_sum([Fraction(3, 7)] * 9) == Fraction(3, 7)


def test_riemann_constant_is_exact():
    assert riemann_sum([2.5] * 13) == 2.5


def test_riemann_square_correction_exact():
    report = riemann_correction_check(lambda t: t * t, Fraction(1, 3), [10, 100, 1000], exact=True)
    for row in report.rows:
        assert row.scaled_residual == pytest.approx(1.0 / 6.0, abs=1e-12)


def test_riemann_linear_correction_vanishes():
    report = riemann_correction_check(lambda t: t, Fraction(1, 2), [3, 10, 50], exact=True)
    assert all(row.residual == 0.0 for row in report.rows)


def test_riemann_cosine_bounded():
    report = riemann_correction_check(lambda t: np.cos(np.pi * t), 0.0, [10, 20, 40, 80])
    assert max(row.scaled_residual for row in report.rows) <= 1e-9


def test_rough_cost_warns_along_the_pipeline(warnings_sink):
    cost = absolute(1.0)
    sol = solve_potential(cost, 200, 1e-10, 5000)
    assert any("C0" in m and "solve_potential" in m for m in warnings_sink)
    sample_kernel(DensitySource.bridge(sol, cost), 6)
    assert any("C0" in m and "sample_kernel" in m for m in warnings_sink)
