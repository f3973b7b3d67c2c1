"""
Orchestration des études : validation du coût, potentiel, convergence de D_n
et étude de l'équilibrage
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from src.balance.perturbation import balance_diagnostics, balance_fixed_point
from src.bridge.density import DensitySource, SourceKind
from src.bridge.potential import PotentialSolution, potential_riemann_gap, solve_potential
from src.cost.functions import CostFunction, ValidationReport, make_cost, validate_cost
from src.grid.kernel import sample_kernel
from src.lab.config import RunConfig
from src.permanent.quantities import (
    compute_Dn,
    compute_Dn_hat,
    compute_Ln,
    log_partition_gap,
    partition_identity_residual,
)
from src.spectral.eigen import dump_eigenvalues, spectrum_report
from src.spectral.fredholm import FredholmEstimate, fredholm_limit, spectral_gap_check
from src.utils.errors import ConfigError, PermlimError

CSV_COLUMNS = [
    "n", "D_n", "D_n_hat", "L_n_scaled", "mccullagh", "fredholm_limit", "err_Dn",
    "err_ratio_mcc", "h_norm_2n", "h_norm_inf", "sum_log", "m_n",
    "wall_ms_permanent", "wall_ms_balance",
]
BALANCE_COLUMNS = [
    "n", "h_norm_2n", "h_norm_inf", "sum_log", "m_n", "max_dev_balanced",
    "n_h_norm_2n", "sqrt_n_h_norm_inf", "n_abs_sum_log", "n2_abs_m_n", "wall_ms_balance",
]
SCALED_COLUMNS = ["n_h_norm_2n", "sqrt_n_h_norm_inf", "n_abs_sum_log", "n2_abs_m_n"]
# En dessous, |D_n - D_∞| est du bruit d'arrondi : pas d'ajustement de taux
EXACT_ERROR = 1e-11
FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class ConvergenceRecord:
    n: int
    D_n: float
    D_n_hat: float
    L_n_scaled: Optional[float]
    mccullagh: float
    fredholm_limit: float
    err_Dn: float
    err_ratio_mcc: float
    h_norm_2n: float
    h_norm_inf: float
    sum_log: float
    m_n: float
    wall_ms_permanent: float
    wall_ms_balance: float
    det_I_minus_B2: float = 0.0
    lambda_star: float = 0.0


@dataclass
class ConvergenceStudy:
    records: List[ConvergenceRecord]
    fredholm: FredholmEstimate
    rate: Optional[float]
    csv_path: Path

    @property
    def rate_label(self) -> str:
        return "exact" if self.rate is None else f"{self.rate:.4f}"

    def to_frame(self) -> pd.DataFrame:
        return _records_frame(self.records)


@dataclass
class BalanceStudy:
    frame: pd.DataFrame = field(repr=False)
    ratios: Dict[str, float]
    csv_path: Path


def _records_frame(records: List[ConvergenceRecord]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in records], columns=CSV_COLUMNS)


def _write_csv(frame: pd.DataFrame, path: Path, aborted_at: Optional[int] = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    if aborted_at is not None:
        with path.open("a", encoding="utf-8") as f:
            f.write(f"# aborted at n={aborted_at}\n")
    return path


def _elapsed_ms(start: float) -> float:
    return (time.perf_counter() - start) * 1000.0


def fit_rate(ns, errors) -> Optional[float]:
    """
    Pente α de log|D_n - D_∞| ≈ log C - α log n sur les n ≥ médiane.
    None si l'ajustement est dégénéré (erreurs nulles ou moins de deux points).
    """
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = (ns >= np.median(ns)) & (errors > EXACT_ERROR)
    if np.count_nonzero(keep) < 2:
        return None
    slope, _ = np.polyfit(np.log(ns[keep]), np.log(errors[keep]), 1)
    return float(-slope)


class StudyRunner:
    def __init__(self, config: RunConfig):
        """Prépare une étude à partir d'une configuration validée"""
        self.config = config
        self._cost: Optional[CostFunction] = None
        self._solution: Optional[PotentialSolution] = None

    def cost(self) -> CostFunction:
        if self._cost is None:
            block = self.config.require_cost()
            self._cost = make_cost(block.family.value, block.params, block.table_path, block.expression)
        return self._cost

    def solution(self) -> PotentialSolution:
        """Potentiel du coût configuré, résolu une seule fois"""
        if self._solution is None:
            b = self.config.bridge
            self._solution = solve_potential(self.cost(), b.m, b.tol, b.max_iter,
                                             damping=b.damping, exponent_bound=b.exponent_bound)
        return self._solution

    def build_source(self) -> DensitySource:
        kernel = self.config.kernel
        if kernel is not None:
            if kernel.kind == "constant":
                return DensitySource.constant()
            if kernel.kind == "cosine":
                return DensitySource.cosine(kernel.epsilon)
            return DensitySource.tabulated(kernel.table_path)
        if self.config.cost is None:
            raise ConfigError("bloc [cost] ou [kernel] requis pour une étude")
        return DensitySource.bridge(self.solution(), self.cost())

    # ------------------------------------------------------------------
    # Sous-commandes
    # ------------------------------------------------------------------

    def run_validate_cost(self) -> Tuple[ValidationReport, int]:
        block = self.config.require_cost()
        cost = self.cost()
        logger.info(f"Validation du coût {cost.label} sur la grille 1/{block.grid_size}...")
        report = validate_cost(cost, block.grid_size, block.check_tol)
        logger.info("\n" + report.to_frame().to_string(index=False))
        if report.failed:
            logger.error(f"❌ Coût {cost.label} rejeté")
            return report, 2
        logger.info(f"✅ Coût {cost.label} valide")
        return report, 0

    def run_solve_bridge(self) -> PotentialSolution:
        self.config.require_cost()
        sol = self.solution()
        path = sol.to_csv(self.config.output.potential_csv)
        logger.info(f"✅ Potentiel écrit dans {path}")
        logger.info(f"Γ₀ = {sol.gamma0:.15g}, résidu = {sol.final_residual:.3e} "
                    f"({sol.iterations} itérations, θ = {sol.damping_used:g})")
        return sol

    def _converge_row(self, source: DensitySource, n: int, limit: float) -> ConvergenceRecord:
        study = self.config.study
        start = time.perf_counter()
        K = sample_kernel(source, n)
        res = balance_fixed_point(K, study.balance_tol, study.balance_max_iter)
        wall_balance = _elapsed_ms(start)

        start = time.perf_counter()
        options = dict(method=study.permanent_method, cap=study.permanent_cap,
                       workers=study.permanent_workers)
        Dn = compute_Dn(K, **options)
        Dn_hat = compute_Dn_hat(res, **options)
        Ln_scaled = None
        if source.kind is SourceKind.BRIDGE:
            sol = source.solution
            Ln = compute_Ln(source.cost, n, **options)
            Ln_scaled = math.exp(Ln.log_value + n * sol.gamma0)
            logger.debug(
                f"n={n}: identité D_n/L_n {partition_identity_residual(Dn, Ln, sol):.2e}, "
                f"(1/n) log L_n + Γ₀ = {log_partition_gap(Ln, sol.gamma0):.3e}, "
                f"écart de Riemann {potential_riemann_gap(sol, n):.3e}"
            )
        wall_permanent = _elapsed_ms(start)

        spectrum = spectrum_report(res, fredholm_limit=limit)
        if self.config.output.eigen_dump:
            dump_eigenvalues(self._eigen_path(f"n{n}"), spectrum.eigenvalues)
        diag = balance_diagnostics(res)
        record = ConvergenceRecord(
            n=n,
            D_n=Dn.value,
            D_n_hat=Dn_hat.value,
            L_n_scaled=Ln_scaled,
            mccullagh=spectrum.mccullagh_value,
            fredholm_limit=limit,
            err_Dn=abs(Dn.value - limit),
            err_ratio_mcc=abs(spectrum.mccullagh_value / Dn_hat.value - 1.0),
            h_norm_2n=diag.norm_2n_h,
            h_norm_inf=diag.norm_inf_h,
            sum_log=diag.sum_log,
            m_n=diag.m_n,
            wall_ms_permanent=wall_permanent,
            wall_ms_balance=wall_balance,
            det_I_minus_B2=spectrum.det_I_minus_B2,
            lambda_star=spectrum.lambda_star,
        )
        logger.info(
            f"n={n}: D_n={record.D_n:.12g}, D̂_n={record.D_n_hat:.12g}, "
            f"McCullagh={record.mccullagh:.12g}, det(I-B²)={record.det_I_minus_B2:.12g}, "
            f"|D_n - D_∞|={record.err_Dn:.3e}, max|ρ̂ - 1|={diag.max_dev_balanced:.4g}"
        )
        return record

    def _eigen_path(self, tag: str) -> Path:
        csv_path = Path(self.config.output.csv_path)
        return csv_path.with_name(f"{csv_path.stem}_eigen_{tag}.txt")

    def run_converge(self) -> ConvergenceStudy:
        study = self.config.study
        n_list = study.n_list
        if n_list[-1] > study.permanent_cap:
            raise ConfigError(
                f"bloc [study] n_list: n={n_list[-1]} dépasse permanent_cap={study.permanent_cap}"
            )
        csv_path = Path(self.config.output.csv_path)
        records: List[ConvergenceRecord] = []

        try:
            source = self.build_source()
            logger.info(f"Étude de convergence {source.label}, n ∈ {n_list}")
            spectral_gap_check(source, study.nystrom_m)
            estimate = fredholm_limit(source, study.nystrom_m, study.eig_cutoff, study.refinement_tol)
            if self.config.output.eigen_dump:
                dump_eigenvalues(self._eigen_path(f"m{study.nystrom_m}"), estimate.eigenvalues)
        except PermlimError:
            _write_csv(_records_frame(records), csv_path, aborted_at=n_list[0])
            raise

        # Les lignes sont récupérées dans l'ordre croissant de n
        with ThreadPoolExecutor(max_workers=study.workers) as pool:
            futures = [pool.submit(self._converge_row, source, n, estimate.value) for n in n_list]
            for n, future in zip(n_list, futures):
                try:
                    records.append(future.result())
                except PermlimError:
                    for pending in futures:
                        pending.cancel()
                    _write_csv(_records_frame(records), csv_path, aborted_at=n)
                    logger.error(f"❌ Étude interrompue à n={n}, {len(records)} ligne(s) écrite(s)")
                    raise

        frame = _records_frame(records)
        _write_csv(frame, csv_path)
        rate = fit_rate(frame["n"], frame["err_Dn"])
        result = ConvergenceStudy(records=records, fredholm=estimate, rate=rate, csv_path=csv_path)

        logger.info("\n" + frame.to_string(index=False))
        logger.info(f"✅ Taux ajusté α = {result.rate_label} (limite {estimate.value:.12g}, CSV {csv_path})")
        return result

    def run_balance_study(self) -> BalanceStudy:
        study = self.config.study
        source = self.build_source()
        logger.info(f"Étude d'équilibrage {source.label}, n ∈ {study.n_list}")

        def row(n: int) -> dict:
            start = time.perf_counter()
            res = balance_fixed_point(sample_kernel(source, n), study.balance_tol, study.balance_max_iter)
            wall = _elapsed_ms(start)
            diag = balance_diagnostics(res)
            logger.info(f"n={n}: max|ρ̂ - 1| = {diag.max_dev_balanced:.6g}")
            return {
                "n": n,
                "h_norm_2n": diag.norm_2n_h,
                "h_norm_inf": diag.norm_inf_h,
                "sum_log": diag.sum_log,
                "m_n": diag.m_n,
                "max_dev_balanced": diag.max_dev_balanced,
                "n_h_norm_2n": n * diag.norm_2n_h,
                "sqrt_n_h_norm_inf": math.sqrt(n) * diag.norm_inf_h,
                "n_abs_sum_log": n * abs(diag.sum_log),
                "n2_abs_m_n": n * n * abs(diag.m_n),
                "wall_ms_balance": wall,
            }

        with ThreadPoolExecutor(max_workers=study.workers) as pool:
            rows = list(pool.map(row, study.n_list))

        frame = pd.DataFrame(rows, columns=BALANCE_COLUMNS)
        ratios = {}
        for column in SCALED_COLUMNS:
            low, high = frame[column].min(), frame[column].max()
            ratios[column] = float(high / low) if low > 0 else math.nan

        csv_path = _write_csv(frame, Path(self.config.output.balance_csv))
        logger.info("\n" + frame.to_string(index=False))
        for column, ratio in ratios.items():
            logger.info(f"max/min {column}: {ratio:.4f}")
        return BalanceStudy(frame=frame, ratios=ratios, csv_path=csv_path)
