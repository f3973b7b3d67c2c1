"""
Perturbation doublement stochastique : trouver u = 1 + h > 0 tel que
diag(u) R_n diag(u) soit doublement stochastique.

Deux méthodes indépendantes : le point fixe h <- Ψ_n(h) avec une seule
factorisation de (I + R_n), et la mise à l'échelle symétrique par moyenne
géométrique qui sert d'oracle.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Union

import numpy as np
import scipy.linalg
from loguru import logger

from src.grid.kernel import KernelMatrix, row_defect
from src.utils.errors import BalanceError
from src.utils.matrix_io import write_matrix_file

# ‖h‖_{2,n} au-delà de cette borne : log(1 + h_i) n'est plus sûr
BALL_RADIUS = 0.5
PIVOT_TOL = 1e-13


class BalanceMethod(str, Enum):
    FIXED_POINT = "fixed-point"
    SYMMETRIC_SCALING = "symmetric-scaling"


@dataclass(frozen=True)
class BalanceResult:
    n: int
    h: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    balanced: np.ndarray = field(repr=False)
    method: BalanceMethod
    iterations: int
    residual: float
    kernel: KernelMatrix = field(repr=False)

    @property
    def a_matrix(self) -> np.ndarray:
        """A_n = balanced / n"""
        return self.balanced / self.n

    def to_file(self, path: Union[str, Path]) -> Path:
        return write_matrix_file(path, self.balanced)


@dataclass(frozen=True)
class BalanceDiagnostics:
    norm_2n_h: float
    norm_inf_h: float
    sum_log: float
    m_n: float
    prod_u_sq: float
    # max_ij |ρ̂_ij - 1| : les entrées de n(A_n - J_n) restent bornées en n
    max_dev_balanced: float


def norm_2n(v: np.ndarray) -> float:
    """‖v‖_{2,n} = sqrt((1/n) Σ v_i²)"""
    return float(np.sqrt(np.mean(v ** 2)))


def _check_kernel(K: KernelMatrix) -> np.ndarray:
    R = K.r_matrix
    row_sums = R.sum(axis=1)
    zero_rows = np.flatnonzero(row_sums <= 0.0)
    if zero_rows.size:
        raise BalanceError(f"lignes nulles dans le noyau: {zero_rows[:5].tolist()}")
    return R


def _finish(K: KernelMatrix, u: np.ndarray, method: BalanceMethod, iterations: int,
            residual: float, tol: float) -> BalanceResult:
    if np.any(u <= 0):
        raise BalanceError(f"{method.value}: facteur d'échelle non positif")
    balanced = u[:, None] * K.entries * u[None, :]
    deviation = float(np.max(np.abs(balanced.sum(axis=1) / K.n - 1.0)))
    if deviation > 10.0 * tol:
        raise BalanceError(
            f"{method.value}: sommes de lignes à {deviation:.3e} de 1 (> 10·tol)"
        )
    logger.info(f"✅ Équilibrage {method.value} n={K.n}: {iterations} itérations, résidu {residual:.3e}")
    return BalanceResult(
        n=K.n,
        h=u - 1.0,
        u=u,
        balanced=(balanced + balanced.T) / 2.0,
        method=method,
        iterations=iterations,
        residual=residual,
        kernel=K,
    )


def fixed_point_residual(K: KernelMatrix, h: np.ndarray) -> np.ndarray:
    """(I + R_n) h + q_n + h∘q_n + h∘(R_n h), nul au point fixe"""
    R = K.r_matrix
    q = row_defect(K).q
    Rh = R @ h
    return h + Rh + q + h * q + h * Rh


def balance_fixed_point(K: KernelMatrix, tol: float, max_iter: int) -> BalanceResult:
    """
    Itère Ψ_n(h) = (I + R_n)^{-1} (-q_n - h∘q_n - h∘(R_n h)) depuis h = 0.

    (I + R_n) est factorisée une fois (LU) ; l'arrêt porte sur le résidu de
    l'équation, en normes ‖·‖_{2,n} et sup.
    """
    R = _check_kernel(K)
    n = K.n
    q = row_defect(K).q

    lu, piv = scipy.linalg.lu_factor(np.eye(n) + R)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= PIVOT_TOL * max(pivots.max(), 1.0):
        raise BalanceError(
            f"(I + R_n) singulière à n={n}: l'hypothèse de trou spectral est violée"
        )

    h = np.zeros(n)
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        Rh = R @ h
        h = scipy.linalg.lu_solve((lu, piv), -q - h * q - h * Rh)

        radius = norm_2n(h)
        if radius > BALL_RADIUS:
            raise BalanceError(
                f"point fixe sorti de la boule ‖h‖_2,n ≤ {BALL_RADIUS} (‖h‖ = {radius:.3f}) à n={n}"
            )

        Rh = R @ h
        equation = h + Rh + q + h * q + h * Rh
        residual = max(norm_2n(equation), float(np.max(np.abs(equation))))
        logger.debug(f"point fixe n={n} it={iterations} résidu={residual:.3e}")
        if residual <= tol:
            break
    else:
        raise BalanceError(
            f"point fixe non convergé en {max_iter} itérations à n={n} (résidu {residual:.3e})"
        )

    return _finish(K, 1.0 + h, BalanceMethod.FIXED_POINT, iterations, residual, tol)


def balance_symmetric_scaling(K: KernelMatrix, tol: float, max_iter: int) -> BalanceResult:
    """u <- sqrt(u / (R_n u)) depuis u = 1, jusqu'à max_i |u_i (R_n u)_i - 1| ≤ tol"""
    R = _check_kernel(K)
    u = np.ones(K.n)
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        Ru = R @ u
        residual = float(np.max(np.abs(u * Ru - 1.0)))
        if residual <= tol:
            break
        if np.any(Ru <= 0) or np.any(u <= 0):
            raise BalanceError(f"mise à l'échelle: itéré non positif à n={K.n}")
        u = np.sqrt(u / Ru)
    else:
        raise BalanceError(
            f"mise à l'échelle symétrique non convergée en {max_iter} itérations "
            f"à n={K.n} (résidu {residual:.3e})"
        )

    return _finish(K, u, BalanceMethod.SYMMETRIC_SCALING, iterations, residual, tol)


def balance_diagnostics(res: BalanceResult) -> BalanceDiagnostics:
    h = res.h
    return BalanceDiagnostics(
        norm_2n_h=norm_2n(h),
        norm_inf_h=float(np.max(np.abs(h))),
        sum_log=float(np.sum(np.log1p(h))),
        m_n=float(np.mean(h)),
        prod_u_sq=float(np.prod(res.u ** 2)),
        max_dev_balanced=float(np.max(np.abs(res.balanced - 1.0))),
    )
