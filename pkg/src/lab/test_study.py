"""
Tests de bout en bout des sous-commandes de permlim
"""

import math

import numpy as np
import pandas as pd
import pytest

from src.lab.config import load_run_config
from src.lab.study import CSV_COLUMNS, StudyRunner, fit_rate
from src.permlim import main
from src.utils.matrix_io import write_matrix_file

COSINE_LIMIT = 2.0 / math.sqrt(3.0)


@pytest.fixture
def write_config(tmp_path):
    def write(body: str, name: str = "run.ini"):
        path = tmp_path / name
        path.write_text(body.format(tmp=tmp_path.as_posix()), encoding="utf-8")
        return path

    return write


def _cli(tmp_path, command, config_path):
    return main([command, "--config", str(config_path), "--log-dir", str(tmp_path / "logs")])


def _runner(config_path) -> StudyRunner:
    return StudyRunner(load_run_config(config_path))


def test_validate_cost_exit_codes(tmp_path, write_config):
    ok = write_config("[cost]\nfamily = quadratic\nparams = 1.0\n", "ok.ini")
    assert _cli(tmp_path, "validate-cost", ok) == 0

    nodes = np.linspace(0.0, 1.0, 11)
    table = (nodes[:, None] - nodes[None, :]) ** 2
    table[2, 7] += 1e-3
    write_matrix_file(tmp_path / "asym.txt", table)
    bad = write_config("[cost]\nfamily = tabulated\ntable_path = {tmp}/asym.txt\ngrid_size = 10\n", "bad.ini")
    assert _cli(tmp_path, "validate-cost", bad) == 2

    missing = write_config("[kernel]\nkind = constant\n", "missing.ini")
    assert _cli(tmp_path, "validate-cost", missing) == 1
    log = (tmp_path / "logs" / "permlim.log").read_text(encoding="utf-8")
    assert "[cost]" in log


def test_missing_config_file(tmp_path):
    assert _cli(tmp_path, "converge", tmp_path / "absent.ini") == 1


def test_usage_errors_exit_as_configuration():
    assert main(["converge"]) == 1
    assert main([]) == 1
    assert main(["plot", "--config", "run.ini"]) == 1


def test_solve_bridge_zero_cost(tmp_path, write_config):
    path = write_config(
        "[cost]\nfamily = quadratic\nparams = 0\n"
        "[output]\npotential_csv = {tmp}/potential.csv\n"
    )
    sol = _runner(path).run_solve_bridge()
    assert abs(sol.gamma0) <= 1e-12
    frame = pd.read_csv(tmp_path / "potential.csv")
    assert list(frame.columns) == ["node", "a_value"]
    assert len(frame) == 400


def test_solve_bridge_quadratic(tmp_path, write_config):
    path = write_config(
        "[cost]\nfamily = quadratic\nparams = 1\n"
        "[bridge]\nm = 400\ntol = 1e-10\n"
        "[output]\npotential_csv = {tmp}/potential.csv\n"
    )
    assert _cli(tmp_path, "solve-bridge", path) == 0
    assert _runner(path).run_solve_bridge().final_residual <= 1e-10


def test_solve_bridge_failure_exit_code(tmp_path, write_config):
    path = write_config(
        "[cost]\nfamily = quadratic\nparams = 1\n"
        "[bridge]\nmax_iter = 1\ntol = 1e-14\n"
        "[output]\npotential_csv = {tmp}/potential.csv\n"
    )
    assert _cli(tmp_path, "solve-bridge", path) == 3


def test_converge_constant_kernel(tmp_path, write_config):
    path = write_config(
        "[kernel]\nkind = constant\n"
        "[study]\nn_list = 2, 4, 8\nnystrom_m = 64\n"
        "[output]\ncsv_path = {tmp}/converge.csv\n"
    )
    result = _runner(path).run_converge()
    assert result.rate is None
    assert result.rate_label == "exact"
    assert result.fredholm.value == pytest.approx(1.0, abs=1e-10)
    for record in result.records:
        assert record.D_n == pytest.approx(1.0, abs=1e-11)
        assert record.err_Dn <= 1e-11
        assert record.h_norm_inf == 0.0

    header = (tmp_path / "converge.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    frame = pd.read_csv(tmp_path / "converge.csv")
    assert frame["L_n_scaled"].isna().all()
    assert list(frame["n"]) == [2, 4, 8]


def test_converge_records_are_recomputable(tmp_path, write_config):
    path = write_config(
        "[kernel]\nkind = cosine\nepsilon = 0.3\n"
        "[study]\nn_list = 4, 6\nnystrom_m = 64\n"
        "[output]\ncsv_path = {tmp}/converge.csv\n"
    )
    for r in _runner(path).run_converge().records:
        assert r.err_Dn == abs(r.D_n - r.fredholm_limit)
        assert r.err_ratio_mcc == abs(r.mccullagh / r.D_n_hat - 1.0)


@pytest.mark.slow
def test_converge_cosine_rate(tmp_path, write_config):
    path = write_config(
        "[kernel]\nkind = cosine\nepsilon = 0.5\n"
        "[study]\nn_list = 8, 16, 24\nnystrom_m = 256\n"
        "[output]\ncsv_path = {tmp}/converge.csv\n"
    )
    result = _runner(path).run_converge()
    assert result.fredholm.value == pytest.approx(COSINE_LIMIT, abs=1e-4)
    errors = [r.err_Dn for r in result.records]
    assert errors[0] > errors[1] > errors[2]
    assert 0.7 <= result.rate <= 1.6


def test_converge_quadratic_chain(tmp_path, write_config):
    path = write_config(
        "[cost]\nfamily = quadratic\nparams = 1\n"
        "[bridge]\nm = 400\ntol = 1e-12\n"
        "[study]\nn_list = 8, 12, 16\nnystrom_m = 128\n"
        "[output]\ncsv_path = {tmp}/converge.csv\n"
    )
    records = _runner(path).run_converge().records
    gaps = [abs(r.L_n_scaled / r.D_n - 1.0) for r in records]
    assert gaps[0] > gaps[1] > gaps[2]


def test_converge_deterministic_across_workers(tmp_path, write_config):
    frames = []
    for workers in (1, 3):
        path = write_config(
            "[kernel]\nkind = cosine\nepsilon = 0.5\n"
            f"[study]\nn_list = 4, 8, 14\nnystrom_m = 64\nworkers = {workers}\n"
            f"permanent_workers = {workers}\n"
            f"[output]\ncsv_path = {{tmp}}/converge_{workers}.csv\n",
            f"run_{workers}.ini",
        )
        _runner(path).run_converge()
        frames.append(pd.read_csv(tmp_path / f"converge_{workers}.csv"))

    informational = ["wall_ms_permanent", "wall_ms_balance"]
    pd.testing.assert_frame_equal(
        frames[0].drop(columns=informational),
        frames[1].drop(columns=informational),
        check_exact=False,
        rtol=1e-12,
    )


def test_converge_rejects_n_above_cap(tmp_path, write_config):
    path = write_config(
        "[kernel]\nkind = constant\n"
        "[study]\nn_list = 4, 30\npermanent_cap = 26\n"
        "[output]\ncsv_path = {tmp}/converge.csv\n"
    )
    assert _cli(tmp_path, "converge", path) == 1


def test_converge_abort_writes_partial_csv(tmp_path, write_config):
    path = write_config(
        "[kernel]\nkind = cosine\nepsilon = 0.5\n"
        "[study]\nn_list = 4, 8\nnystrom_m = 64\nbalance_max_iter = 1\n"
        "[output]\ncsv_path = {tmp}/converge.csv\n"
    )
    assert _cli(tmp_path, "converge", path) == 4
    lines = (tmp_path / "converge.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[-1] == "# aborted at n=4"


def test_converge_spectral_failure(tmp_path, write_config):
    write_matrix_file(tmp_path / "kernel.txt", np.full((3, 3), 5.0))
    path = write_config(
        "[kernel]\nkind = tabulated\ntable_path = {tmp}/kernel.txt\n"
        "[study]\nn_list = 4\nnystrom_m = 32\n"
        "[output]\ncsv_path = {tmp}/converge.csv\n"
    )
    assert _cli(tmp_path, "converge", path) == 5
    assert "# aborted at n=4" in (tmp_path / "converge.csv").read_text(encoding="utf-8")


def test_fit_rate():
    ns = [8, 16, 32, 64]
    errors = [3.0 / n for n in ns]
    assert fit_rate(ns, errors) == pytest.approx(1.0, rel=1e-12)
    assert fit_rate(ns, [0.0] * 4) is None
    assert fit_rate([8], [0.1]) is None


def test_balance_study_constant(tmp_path, write_config):
    path = write_config(
        "[kernel]\nkind = constant\n"
        "[study]\nn_list = 10, 20\n"
        "[output]\nbalance_csv = {tmp}/balance.csv\n"
    )
    study = _runner(path).run_balance_study()
    values = study.frame[["h_norm_2n", "h_norm_inf", "sum_log", "m_n", "max_dev_balanced"]].to_numpy()
    assert np.all(values == 0.0)
    assert (tmp_path / "balance.csv").exists()


def test_balance_study_cosine_mean_rate(tmp_path, write_config):
    path = write_config(
        "[kernel]\nkind = cosine\nepsilon = 0.5\n"
        "[study]\nn_list = 100, 400\nworkers = 2\n"
        "[output]\nbalance_csv = {tmp}/balance.csv\n"
    )
    study = _runner(path).run_balance_study()
    assert study.ratios["n2_abs_m_n"] <= 8.0
    assert list(study.frame["n"]) == [100, 400]


@pytest.mark.slow
def test_balance_study_quadratic_rates(tmp_path, write_config):
    path = write_config(
        "[cost]\nfamily = quadratic\nparams = 1\n"
        "[bridge]\nm = 1600\ntol = 1e-12\n"
        "[study]\nn_list = 100, 200, 400, 800\n"
        "[output]\nbalance_csv = {tmp}/balance.csv\n"
    )
    assert _cli(tmp_path, "balance-study", path) == 0
    study = _runner(path).run_balance_study()
    ratios = study.ratios
    assert ratios["n_h_norm_2n"] <= 4.0
    assert ratios["sqrt_n_h_norm_inf"] <= 4.0
    assert ratios["n_abs_sum_log"] <= 4.0
    assert ratios["n2_abs_m_n"] <= 8.0
    deviations = study.frame["max_dev_balanced"]
    assert deviations.max() <= 1.0
    assert deviations.max() / deviations.min() <= 1.25
