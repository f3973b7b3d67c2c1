"""
Discrétisation d'une densité sur la grille i/n et vecteur de défaut q_n
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from loguru import logger

from src.bridge.density import DensitySource
from src.utils.errors import KernelError
from src.utils.matrix_io import read_matrix_file, write_matrix_file

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class KernelMatrix:
    """entries[i][j] = ρ(i/n, j/n), c'est-à-dire n R_n"""
    n: int
    entries: np.ndarray = field(repr=False)
    source: str = ""

    @property
    def r_matrix(self) -> np.ndarray:
        return self.entries / self.n

    def to_file(self, path: Union[str, Path]) -> Path:
        return write_matrix_file(path, self.entries)


@dataclass(frozen=True)
class DefectVector:
    n: int
    q: np.ndarray = field(repr=False)
    q_bar: float
    norm_inf: float
    norm_2n: float


def _checked_kernel(values: np.ndarray, label: str) -> KernelMatrix:
    if not np.all(np.isfinite(values)):
        raise KernelError(f"{label}: entrées non finies")
    asymmetry = float(np.max(np.abs(values - values.T))) if values.size else 0.0
    if asymmetry > SYMMETRY_TOL:
        raise KernelError(f"{label}: noyau asymétrique (écart {asymmetry:.3e})")
    if values.size and values.min() < 0:
        raise KernelError(f"{label}: entrée négative {values.min():.3e}")
    return KernelMatrix(n=values.shape[0], entries=(values + values.T) / 2.0, source=label)


def sample_kernel(source: DensitySource, n: int) -> KernelMatrix:
    """Échantillonne ρ aux points i/n, 1 ≤ i ≤ n, puis symétrise"""
    if n < 1:
        raise KernelError(f"n doit être ≥ 1 (reçu {n})")
    if source.cost is not None:
        source.cost.warn_if_rough("sample_kernel")

    grid = np.arange(1, n + 1) / n
    kernel = _checked_kernel(source.grid(grid, grid), source.label)
    logger.debug(f"noyau {source.label} échantillonné, n={n}")
    return kernel


def load_kernel_file(path: Union[str, Path]) -> KernelMatrix:
    """Relit une matrice noyau exportée par KernelMatrix.to_file"""
    return _checked_kernel(read_matrix_file(path), str(path))


def row_defect(K: KernelMatrix) -> DefectVector:
    """q_n = R_n 1 - 1 et ses normes"""
    q = K.entries.mean(axis=1) - 1.0
    return DefectVector(
        n=K.n,
        q=q,
        q_bar=float(np.mean(q)),
        norm_inf=float(np.max(np.abs(q))),
        norm_2n=float(np.sqrt(np.mean(q ** 2))),
    )
