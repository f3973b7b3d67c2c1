"""
Limite de Fredholm det_F(I - (T|_H)²)^{-1/2} par la méthode de Nyström
"""

from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from src.bridge.density import DensitySource
from src.bridge.potential import midpoint_nodes
from src.spectral.eigen import eigen_symmetric
from src.utils.errors import SpectralError

MIN_RESOLUTION = 32
GAP_WARNING = 0.99


@dataclass(frozen=True)
class FredholmEstimate:
    value: float
    value_refined: float
    eigenvalues: np.ndarray = field(repr=False)
    m: int
    converged: bool

    @property
    def lambda_star(self) -> float:
        return float(np.max(np.abs(self.eigenvalues))) if self.eigenvalues.size else 0.0


def nystrom_matrix(source: DensitySource, m: int) -> np.ndarray:
    """C_ij = (ρ(z_i, z_j) - 1) / m aux nœuds milieux z_i = (i - 1/2) / m"""
    if m < MIN_RESOLUTION:
        raise SpectralError(f"résolution de Nyström m={m} < {MIN_RESOLUTION}")
    z = midpoint_nodes(m)
    C = (source.grid(z, z) - 1.0) / m
    return (C + C.T) / 2.0


def _fredholm_value(eigenvalues: np.ndarray, eig_cutoff: float, m: int):
    kept = eigenvalues[np.abs(eigenvalues) > eig_cutoff]
    if kept.size and np.max(np.abs(kept)) >= 1.0:
        raise SpectralError(
            f"valeur propre de module {np.max(np.abs(kept)):.6f} ≥ 1 à m={m} : trou spectral absent"
        )
    return float(np.prod(1.0 - kept ** 2) ** -0.5), kept


def fredholm_limit(source: DensitySource, m: int, eig_cutoff: float = 1e-12,
                   refinement_tol: float = 1e-5) -> FredholmEstimate:
    """
    Estime la limite à m puis à 2m ; la valeur rapportée est celle à m,
    marquée convergée si |v_m / v_2m - 1| ≤ refinement_tol.
    """
    value, kept = _fredholm_value(eigen_symmetric(nystrom_matrix(source, m)), eig_cutoff, m)
    refined, _ = _fredholm_value(eigen_symmetric(nystrom_matrix(source, 2 * m)), eig_cutoff, 2 * m)

    gap = abs(value / refined - 1.0)
    converged = gap <= refinement_tol
    if converged:
        logger.info(f"✅ Limite de Fredholm {source.label}: {value:.12g} (m={m}, écart m/2m {gap:.2e})")
    else:
        logger.warning(
            f"⚠️ Limite de Fredholm {source.label} non convergée: {value:.12g} à m={m}, "
            f"{refined:.12g} à m={2 * m} (écart {gap:.2e} > {refinement_tol:g})"
        )
    return FredholmEstimate(value=value, value_refined=refined, eigenvalues=kept, m=m,
                            converged=converged)


def spectral_gap_check(source: DensitySource, m: int) -> float:
    """λ* = max |valeur propre| de la matrice de Nyström centrée"""
    eigenvalues = eigen_symmetric(nystrom_matrix(source, m))
    lambda_star = float(np.max(np.abs(eigenvalues)))
    if lambda_star >= GAP_WARNING:
        logger.warning(f"⚠️ Trou spectral faible pour {source.label}: λ* = {lambda_star:.6f} ≥ {GAP_WARNING}")
    else:
        logger.debug(f"λ* = {lambda_star:.6f} pour {source.label} (m={m})")
    return lambda_star
