"""
Quantités dérivées du permanent : D_n, D̂_n, L_n
"""

import math
from typing import Optional

import numpy as np

from src.balance.perturbation import BalanceResult
from src.bridge.potential import PotentialSolution
from src.cost.functions import CostFunction
from src.grid.kernel import KernelMatrix
from src.permanent.exact import PermanentMethod, PermanentValue, permanent_normalized


def compute_Dn(K: KernelMatrix, method: PermanentMethod = PermanentMethod.GLYNN,
               cap: Optional[int] = None, workers: int = 1) -> PermanentValue:
    """D_n = per(ρ(i/n, j/n)) / n!"""
    return permanent_normalized(K.entries, method, cap=cap, workers=workers)


def compute_Dn_hat(res: BalanceResult, method: PermanentMethod = PermanentMethod.GLYNN,
                   cap: Optional[int] = None, workers: int = 1) -> PermanentValue:
    """D̂_n = per(n A_n) / n! ; vaut D_n Π u_i² exactement"""
    return permanent_normalized(res.balanced, method, cap=cap, workers=workers)


def compute_Ln(cost: CostFunction, n: int, method: PermanentMethod = PermanentMethod.GLYNN,
               cap: Optional[int] = None, workers: int = 1) -> PermanentValue:
    """Fonction de partition L_n = per(exp(-c(i/n, j/n))) / n!"""
    cost.warn_if_rough("compute_Ln")
    grid = np.arange(1, n + 1) / n
    return permanent_normalized(np.exp(-cost.grid(grid, grid)), method, cap=cap, workers=workers)


def partition_identity_residual(Dn: PermanentValue, Ln: PermanentValue,
                                sol: PotentialSolution) -> float:
    """|D_n / (L_n exp(-2 Σ ã(i/n))) - 1| pour une source de type pont"""
    n = Dn.n
    grid = np.arange(1, n + 1) / n
    exponent = -2.0 * math.fsum(sol.potential_at(grid))
    return abs(math.exp(Dn.log_value - Ln.log_value - exponent) - 1.0)


def log_partition_gap(Ln: PermanentValue, gamma0: float) -> float:
    """(1/n) log L_n + Γ₀, qui tend vers 0"""
    return Ln.log_value / Ln.n + gamma0
