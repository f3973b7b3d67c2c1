"""
Potentiel de Schrödinger a(x) pour des marges uniformes sur [0, 1]

Convention de signe : exp(+a(x)) = ∫ exp(-c(x, y) - a(y)) dy, seule
convention pour laquelle ρ = exp(-c - a(x) - a(y)) est doublement stochastique.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from scipy.special import logsumexp

from src.cost.functions import CostFunction
from src.utils.errors import BridgeError, PotentialOverflowError, check_unit_interval

MIN_DAMPING = 1.0 / 16.0
# Un pas qui ne réduit pas le résidu d'au moins 1 % compte comme une hausse
STALL_RATIO = 0.99


def midpoint_nodes(m: int) -> np.ndarray:
    return (np.arange(m) + 0.5) / m


@dataclass(frozen=True)
class PotentialSolution:
    m: int
    nodes: np.ndarray = field(repr=False)
    a_values: np.ndarray = field(repr=False)
    gamma0: float
    iterations: int
    final_residual: float
    damping_used: float
    tol: float = 0.0
    residual_trace: Tuple[float, ...] = field(default=(), repr=False)

    def potential_at(self, x) -> np.ndarray:
        """
        Interpolant ã : linéaire entre les nœuds milieux, constant sur les
        deux demi-cellules du bord.
        """
        return np.interp(np.asarray(x, dtype=float), self.nodes, self.a_values)

    def shifted(self, alpha: float) -> "PotentialSolution":
        """Copie avec a + α (sans re-résolution)"""
        a_values = self.a_values + alpha
        return replace(self, a_values=a_values, gamma0=-2.0 * float(np.mean(a_values)))

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame({"node": self.nodes, "a_value": self.a_values}).to_csv(
            path, index=False, float_format="%.17g"
        )
        return path


def _row_marginals(cost_matrix: np.ndarray, a_values: np.ndarray) -> np.ndarray:
    m = a_values.size
    rho = np.exp(-cost_matrix - a_values[:, None] - a_values[None, :])
    return rho.sum(axis=1) / m


def _exponent_bound_check(cost_matrix: np.ndarray, a_values: np.ndarray, bound: float) -> None:
    exponent = -cost_matrix - a_values[:, None] - a_values[None, :]
    worst = float(np.max(np.abs(exponent)))
    if worst > bound:
        raise PotentialOverflowError(
            f"exposant |-c-a-a| = {worst:.1f} au-delà de la borne {bound:g}"
        )


def solve_potential(cost: CostFunction, m: int, tol: float, max_iter: int,
                    damping: float = 1.0, exponent_bound: float = 700.0) -> PotentialSolution:
    """
    Point fixe amorti a <- (1-θ) a + θ log Σ_j w_j exp(-c(·, y_j) - a(y_j))
    sur les m nœuds milieux, à partir de a ≡ 0.

    La convergence porte sur le résidu sup des marges de ρ. Un pas qui
    n'améliore pas ce résidu est rejeté et θ est divisé par deux (plancher 1/16).
    """
    if m < 8:
        raise BridgeError(f"m doit être ≥ 8 (reçu {m})")
    if tol <= 0:
        raise BridgeError(f"tol doit être > 0 (reçu {tol})")
    if not 0.0 < damping <= 1.0:
        raise BridgeError(f"damping doit être dans (0, 1] (reçu {damping})")

    cost.warn_if_rough("solve_potential")
    nodes = midpoint_nodes(m)
    cost_matrix = cost.grid(nodes, nodes)
    log_m = np.log(m)

    a_values = np.zeros(m)
    _exponent_bound_check(cost_matrix, a_values, exponent_bound)
    residual = float(np.max(np.abs(_row_marginals(cost_matrix, a_values) - 1.0)))
    trace = [residual]
    theta = damping
    iterations = 0

    while residual > tol:
        if iterations >= max_iter:
            logger.error(f"❌ Potentiel non convergé après {iterations} itérations (résidu {residual:.3e})")
            raise BridgeError(
                f"solve_potential: pas de convergence en {max_iter} itérations "
                f"(dernier résidu {residual:.3e})",
                last_residual=residual,
                iterations=iterations,
            )
        iterations += 1

        update = logsumexp(-cost_matrix - a_values[None, :], axis=1) - log_m
        candidate = (1.0 - theta) * a_values + theta * update
        _exponent_bound_check(cost_matrix, candidate, exponent_bound)
        new_residual = float(np.max(np.abs(_row_marginals(cost_matrix, candidate) - 1.0)))

        if new_residual > STALL_RATIO * residual and theta > MIN_DAMPING:
            theta = max(theta / 2.0, MIN_DAMPING)
            logger.warning(f"⚠️ Résidu {residual:.3e} -> {new_residual:.3e}, amortissement réduit à θ={theta:g}")
            continue

        a_values, residual = candidate, new_residual
        trace.append(residual)
        logger.debug(f"potentiel it={iterations} θ={theta:g} résidu={residual:.3e}")

    gamma = -2.0 * float(np.mean(a_values))
    logger.info(f"✅ Potentiel convergé: m={m}, {iterations} itérations, résidu {residual:.3e}, Γ₀={gamma:.12g}")
    return PotentialSolution(
        m=m,
        nodes=nodes,
        a_values=a_values,
        gamma0=gamma,
        iterations=iterations,
        final_residual=residual,
        damping_used=theta,
        tol=tol,
        residual_trace=tuple(trace),
    )


def gamma0(sol: PotentialSolution) -> float:
    """Γ₀ = -2 ∫ a, par la règle du point milieu"""
    return -2.0 * float(np.sum(sol.a_values) / sol.m)


def marginal_residual(sol: PotentialSolution, cost: CostFunction) -> float:
    """max_i |Σ_j w_j ρ(x_i, y_j) - 1| aux nœuds de quadrature"""
    cost_matrix = cost.grid(sol.nodes, sol.nodes)
    return float(np.max(np.abs(_row_marginals(cost_matrix, sol.a_values) - 1.0)))


def evaluate_density(sol: PotentialSolution, cost: CostFunction, x, y):
    """ρ(x, y) = exp(-c(x, y) - ã(x) - ã(y))"""
    check_unit_interval("x", x)
    check_unit_interval("y", y)
    value = np.exp(-cost(x, y) - sol.potential_at(x) - sol.potential_at(y))
    return float(value) if np.ndim(value) == 0 else value


def potential_riemann_gap(sol: PotentialSolution, n: int) -> float:
    """2 Σ_i ã(i/n) + n Γ₀, exposant qui relie L_n e^{nΓ₀} à D_n"""
    grid = np.arange(1, n + 1) / n
    return 2.0 * float(np.sum(sol.potential_at(grid))) + n * sol.gamma0
