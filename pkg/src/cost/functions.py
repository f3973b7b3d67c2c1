"""
Fonctions de coût c:[0,1]² -> [0,∞) et leur validation sur grille
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from scipy.interpolate import RegularGridInterpolator

from src.utils.errors import CostError, check_unit_interval
from src.utils.matrix_io import read_matrix_file

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


class CostFamily(str, Enum):
    QUADRATIC = "quadratic"
    ABSOLUTE = "absolute"
    TABULATED = "tabulated"
    EXPRESSION = "custom-expression"


class Smoothness(str, Enum):
    C2 = "C2"
    C0 = "C0"


class CheckStatus(str, Enum):
    PASS = "pass"
    WARN = "warn"
    FAIL = "fail"


@dataclass(frozen=True)
class CostFunction:
    """Coût évaluable, vectorisé par broadcasting numpy"""
    family: CostFamily
    params: Tuple[float, ...]
    evaluator: Evaluator = field(repr=False, compare=False)
    smoothness_claim: Smoothness = Smoothness.C2
    label: str = ""

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        values = np.asarray(self.evaluator(x, y), dtype=float)
        # Les expressions constantes renvoient un scalaire
        return np.broadcast_to(values, np.broadcast(x, y).shape)

    def grid(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Matrice c(xs[i], ys[j])"""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        return np.array(self(xs[:, None], ys[None, :]), dtype=float)

    def warn_if_rough(self, context: str) -> None:
        if self.smoothness_claim is Smoothness.C0:
            logger.warning(
                f"⚠️ Coût {self.label or self.family.value} seulement C0 utilisé dans {context}: "
                "le théorème suppose un coût C2"
            )


def quadratic(beta: float = 1.0) -> CostFunction:
    """c(x, y) = β (x - y)²"""
    if beta < 0:
        raise CostError(f"β doit être ≥ 0 (reçu {beta})")
    return CostFunction(
        family=CostFamily.QUADRATIC,
        params=(float(beta),),
        evaluator=lambda x, y: beta * (x - y) ** 2,
        smoothness_claim=Smoothness.C2,
        label=f"quadratic(β={beta:g})",
    )


def absolute(beta: float = 1.0) -> CostFunction:
    """c(x, y) = β |x - y|"""
    if beta < 0:
        raise CostError(f"β doit être ≥ 0 (reçu {beta})")
    return CostFunction(
        family=CostFamily.ABSOLUTE,
        params=(float(beta),),
        evaluator=lambda x, y: beta * np.abs(x - y),
        smoothness_claim=Smoothness.C0,
        label=f"absolute(β={beta:g})",
    )


def grid_interpolator(values: np.ndarray) -> Evaluator:
    """Interpolation bilinéaire d'une grille m×m posée sur les nœuds k/(m-1)"""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1] or values.shape[0] < 2:
        raise CostError(f"grille carrée m×m avec m ≥ 2 attendue, forme {values.shape}")

    axis = np.linspace(0.0, 1.0, values.shape[0])
    interp = RegularGridInterpolator((axis, axis), values, method="linear")

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        xb, yb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        points = np.stack([xb.ravel(), yb.ravel()], axis=-1)
        return interp(points).reshape(xb.shape)

    return evaluate


def tabulated(values: Union[np.ndarray, str, Path]) -> CostFunction:
    """Coût tabulé, depuis un tableau ou un fichier matrice"""
    if isinstance(values, (str, Path)):
        source = str(values)
        values = read_matrix_file(values)
    else:
        source = "tableau"
    values = np.asarray(values, dtype=float)
    return CostFunction(
        family=CostFamily.TABULATED,
        params=(float(values.shape[0]),),
        evaluator=grid_interpolator(values),
        # L'interpolation bilinéaire n'est que C0 entre les nœuds
        smoothness_claim=Smoothness.C0,
        label=f"tabulated({source}, m={values.shape[0]})",
    )


def expression(text: str, smoothness: Smoothness = Smoothness.C2) -> CostFunction:
    """Coût défini par une expression arithmétique en x et y, évaluée par pandas.eval"""
    text = text.strip()
    if not text:
        raise CostError("expression de coût vide")

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        try:
            return pd.eval(text, engine="python", parser="pandas",
                           local_dict={"x": x, "y": y, "pi": np.pi})
        except Exception as e:
            raise CostError(f"expression de coût invalide '{text}': {e}") from e

    # Échec immédiat sur une expression mal formée
    evaluate(np.array([0.5]), np.array([0.5]))

    return CostFunction(
        family=CostFamily.EXPRESSION,
        params=(),
        evaluator=evaluate,
        smoothness_claim=smoothness,
        label=f"expr({text})",
    )


def make_cost(family: str, params: Sequence[float] = (), table_path: str = None,
              expr: str = None) -> CostFunction:
    """Construit un coût à partir du bloc [cost] de la configuration"""
    try:
        kind = CostFamily(family)
    except ValueError:
        raise CostError(f"famille de coût inconnue: {family}")

    if kind is CostFamily.QUADRATIC:
        return quadratic(*params[:1])
    if kind is CostFamily.ABSOLUTE:
        return absolute(*params[:1])
    if kind is CostFamily.TABULATED:
        if not table_path:
            raise CostError("la famille tabulated demande table_path")
        return tabulated(table_path)
    if not expr:
        raise CostError("la famille custom-expression demande expression")
    return expression(expr)


def evaluate_cost(cost: CostFunction, x: float, y: float) -> float:
    """c(x, y) pour x, y dans [0, 1]"""
    check_unit_interval("x", x)
    check_unit_interval("y", y)
    return float(cost(x, y))


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: CheckStatus
    max_violation: float


@dataclass(frozen=True)
class ValidationReport:
    checks: Tuple[CheckResult, ...]
    grid_size: int

    @property
    def failed(self) -> bool:
        return any(c.status is CheckStatus.FAIL for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(c.name, c.status.value, c.max_violation) for c in self.checks],
            columns=["check", "status", "max_violation"],
        )


def validate_cost(cost: CostFunction, grid_size: int, tol: float) -> ValidationReport:
    """
    Vérifie l'hypothèse sur le coût aux nœuds i/grid_size.

    Positivité, symétrie et finitude sont bloquantes ; diagonale nulle et
    réflexion c(1-x, 1-y) = c(x, y) ne donnent que des avertissements.
    """
    if grid_size < 2:
        raise CostError(f"grid_size doit être ≥ 2 (reçu {grid_size})")

    nodes = np.arange(grid_size + 1) / grid_size
    values = cost.grid(nodes, nodes)
    finite = np.isfinite(values)
    safe = np.where(finite, values, 0.0)
    all_finite = bool(finite.all())
    diagonal_finite = bool(np.diag(finite).all())

    def status(violation: float, blocking: bool) -> CheckStatus:
        if violation <= tol:
            return CheckStatus.PASS
        return CheckStatus.FAIL if blocking else CheckStatus.WARN

    def touched(violation: float, entries_finite: bool) -> float:
        # Une entrée non finie dans le périmètre d'une vérification : violation infinie
        return float(violation) if entries_finite else math.inf

    measured: List[Tuple[str, float, bool]] = [
        ("nonnegativity", touched(max(0.0, -safe.min()), all_finite), True),
        ("symmetry", touched(np.max(np.abs(safe - safe.T)), all_finite), True),
        ("diagonal", touched(np.max(np.abs(np.diag(safe))), diagonal_finite), False),
        ("reflection", touched(np.max(np.abs(safe[::-1, ::-1] - safe)), all_finite), False),
        ("finiteness", float(np.count_nonzero(~finite)), True),
    ]
    checks = tuple(CheckResult(name, status(v, blocking), v) for name, v, blocking in measured)

    for c in checks:
        if c.status is CheckStatus.WARN:
            logger.warning(f"⚠️ {cost.label}: vérification '{c.name}' en avertissement ({c.max_violation:.3g})")
        elif c.status is CheckStatus.FAIL:
            logger.error(f"❌ {cost.label}: vérification '{c.name}' échouée ({c.max_violation:.3g})")

    return ValidationReport(checks=checks, grid_size=grid_size)
