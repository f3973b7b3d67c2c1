"""
Somme de Riemann à droite et sa correction de bord (f(1) - f(0)) / 2n
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Sequence, Tuple

import numpy as np


def riemann_sum(f_values: Sequence) -> float:
    """(1/n) Σ f(i/n) ; exact si les valeurs sont des Fraction"""
    values = list(f_values)
    n = len(values)
    if n == 0:
        raise ValueError("riemann_sum: aucune valeur")
    if all(isinstance(v, Fraction) for v in values):
        return sum(values, Fraction(0)) / n
    return math.fsum(float(v) for v in values) / n


@dataclass(frozen=True)
class RiemannRow:
    n: int
    riemann: float
    residual: float
    scaled_residual: float


@dataclass(frozen=True)
class RiemannReport:
    rows: Tuple[RiemannRow, ...]

    def scaled_ratio(self) -> float:
        """max/min de n² r_n ; inf si un résidu est nul"""
        scaled = [abs(r.scaled_residual) for r in self.rows]
        return max(scaled) / min(scaled) if min(scaled) > 0 else math.inf


def riemann_correction_check(f: Callable, integral, n_list: Sequence[int],
                             exact: bool = False) -> RiemannReport:
    """
    r_n = |R_n(f) - ∫f - (f(1) - f(0)) / 2n| pour chaque n, et n² r_n.

    En mode exact, f est évaluée sur des nœuds Fraction(i, n) et tout le
    calcul reste rationnel ; sinon f reçoit le tableau numpy des nœuds.
    """
    rows: List[RiemannRow] = []
    for n in n_list:
        if exact:
            values = [f(Fraction(i, n)) for i in range(1, n + 1)]
            boundary = (f(Fraction(1)) - f(Fraction(0))) / (2 * n)
            riemann = riemann_sum(values)
            residual = abs(riemann - Fraction(integral) - boundary)
        else:
            values = np.asarray(f(np.arange(1, n + 1) / n), dtype=float)
            boundary = (float(f(1.0)) - float(f(0.0))) / (2 * n)
            riemann = riemann_sum(values)
            residual = abs(riemann - float(integral) - boundary)
        rows.append(RiemannRow(
            n=n,
            riemann=float(riemann),
            residual=float(residual),
            scaled_residual=float(residual * n * n),
        ))
    return RiemannReport(rows=tuple(rows))
