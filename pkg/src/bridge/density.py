"""
Sources de densité ρ(x, y) : pont de Schrödinger ou noyaux synthétiques de test
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
from loguru import logger

from src.bridge.potential import PotentialSolution
from src.cost.functions import CostFunction, grid_interpolator
from src.utils.errors import KernelError
from src.utils.matrix_io import read_matrix_file


class SourceKind(str, Enum):
    BRIDGE = "bridge"
    CONSTANT = "synthetic-constant"
    COSINE = "synthetic-cosine"
    TABULATED = "tabulated-kernel"


@dataclass(frozen=True)
class DensitySource:
    kind: SourceKind
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False, compare=False)
    label: str = ""
    epsilon: Optional[float] = None
    solution: Optional[PotentialSolution] = field(default=None, repr=False, compare=False)
    cost: Optional[CostFunction] = field(default=None, repr=False, compare=False)

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        values = np.asarray(self.evaluator(x, y), dtype=float)
        return np.broadcast_to(values, np.broadcast(x, y).shape)

    def grid(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        return np.array(self(xs[:, None], ys[None, :]), dtype=float)

    @classmethod
    def bridge(cls, sol: PotentialSolution, cost: CostFunction) -> "DensitySource":
        def evaluate(x, y):
            return np.exp(-cost(x, y) - sol.potential_at(x) - sol.potential_at(y))

        return cls(SourceKind.BRIDGE, evaluate, label=f"bridge[{cost.label}, m={sol.m}]",
                   solution=sol, cost=cost)

    @classmethod
    def constant(cls) -> "DensitySource":
        return cls(SourceKind.CONSTANT, lambda x, y: np.ones(np.broadcast(x, y).shape),
                   label="constant")

    @classmethod
    def cosine(cls, epsilon: float) -> "DensitySource":
        """ρ = 1 + 2ε cos(πx) cos(πy) ; T|_H a la seule valeur propre ε"""
        if not 0.0 <= epsilon < 1.0:
            raise KernelError(f"ε doit être dans [0, 1) (reçu {epsilon})")
        if epsilon > 0.5:
            logger.warning(f"⚠️ cosine(ε={epsilon:g}): ε > 0.5, le noyau prend des valeurs négatives")

        def evaluate(x, y):
            return 1.0 + 2.0 * epsilon * np.cos(np.pi * x) * np.cos(np.pi * y)

        return cls(SourceKind.COSINE, evaluate, label=f"cosine(ε={epsilon:g})", epsilon=epsilon)

    @classmethod
    def tabulated(cls, values: Union[np.ndarray, str, Path]) -> "DensitySource":
        label = f"tabulated({values})" if isinstance(values, (str, Path)) else "tabulated"
        if isinstance(values, (str, Path)):
            values = read_matrix_file(values)
        values = np.asarray(values, dtype=float)
        if np.any(values < 0):
            raise KernelError("noyau tabulé avec des valeurs négatives")
        return cls(SourceKind.TABULATED, grid_interpolator(values), label=label)
