"""
Spectre de B_n = A_n - J_n, déterminant det(I - B_n²) et estimation de McCullagh
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.linalg
from loguru import logger

from src.balance.perturbation import BalanceResult
from src.utils.errors import SpectralError

SYMMETRY_TOL = 1e-10
ANNIHILATION_TOL = 1e-10
STOCHASTIC_TOL = 1e-10
GAP_MARGIN = 1e-8
IDENTITY_RTOL = 1e-9


@dataclass(frozen=True)
class SpectrumReport:
    n_or_m: int
    eigenvalues: np.ndarray = field(repr=False)
    lambda_star: float
    det_I_minus_B2: float
    mccullagh_value: Optional[float] = None
    fredholm_limit: Optional[float] = None


def eigen_symmetric(M) -> np.ndarray:
    """Valeurs propres croissantes d'une matrice symétrique (LAPACK syevd)"""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SpectralError(f"matrice carrée attendue, forme {M.shape}")
    asymmetry = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asymmetry > SYMMETRY_TOL:
        raise SpectralError(f"matrice non symétrique (écart {asymmetry:.3e})")
    return scipy.linalg.eigh((M + M.T) / 2.0, eigvals_only=True)


def det_from_eigenvalues(eigenvalues: np.ndarray) -> float:
    """Π (1 - λ_k²)"""
    return float(np.prod(1.0 - np.asarray(eigenvalues) ** 2))


def bn_matrix(res: BalanceResult) -> np.ndarray:
    """B_n = A_n - J_n, après vérification de B_n J_n = J_n B_n = 0"""
    n = res.n
    B = res.a_matrix - 1.0 / n
    # (B J)_ij = (Σ_k B_ik) / n et (J B)_ij = (Σ_k B_kj) / n
    right = float(np.max(np.abs(B.sum(axis=1)))) / n
    left = float(np.max(np.abs(B.sum(axis=0)))) / n
    if max(right, left) > ANNIHILATION_TOL:
        raise SpectralError(
            f"B_n J_n ≠ 0 à n={n} (écarts {right:.3e}, {left:.3e}) : matrice non équilibrée"
        )
    return B


def _nontrivial_eigenvalues(A: np.ndarray, symmetric: bool) -> np.ndarray:
    B = A - 1.0 / A.shape[0]
    if symmetric:
        return eigen_symmetric(B)
    return scipy.linalg.eigvals(B)


def mccullagh_estimate(A) -> float:
    """
    det(I + J_n - A^T A)^{-1/2} pour A doublement stochastique.

    Les valeurs propres non triviales de A sont celles de A - J_n ; une valeur
    de module ≥ 1 - 1e-8 rend le déterminant quasi singulier.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    rows = float(np.max(np.abs(A.sum(axis=1) - 1.0)))
    cols = float(np.max(np.abs(A.sum(axis=0) - 1.0)))
    if max(rows, cols) > STOCHASTIC_TOL:
        raise SpectralError(f"A non doublement stochastique (écarts {rows:.3e}, {cols:.3e})")

    symmetric = bool(np.max(np.abs(A - A.T)) <= SYMMETRY_TOL)
    nontrivial = _nontrivial_eigenvalues(A, symmetric)
    worst = float(np.max(np.abs(nontrivial))) if n else 0.0
    if worst >= 1.0 - GAP_MARGIN:
        raise SpectralError(f"valeur propre non triviale de module {worst:.12f} ≥ 1 - {GAP_MARGIN:g}")

    J = np.full((n, n), 1.0 / n)
    M = np.eye(n) + J - A.T @ A
    spectrum = eigen_symmetric((M + M.T) / 2.0)
    if np.any(spectrum <= 0):
        raise SpectralError("det(I + J - AᵀA) non positif")
    value = float(np.exp(-0.5 * np.sum(np.log(spectrum))))

    if symmetric:
        reference = det_from_eigenvalues(nontrivial) ** -0.5
        if abs(value / reference - 1.0) > IDENTITY_RTOL:
            raise SpectralError(
                f"det(I + J - A²) ≠ det(I - B²) : {value:.15g} contre {reference:.15g}"
            )
    return value


def spectrum_report(res: BalanceResult, fredholm_limit: Optional[float] = None) -> SpectrumReport:
    eigenvalues = eigen_symmetric(bn_matrix(res))
    report = SpectrumReport(
        n_or_m=res.n,
        eigenvalues=eigenvalues,
        lambda_star=float(np.max(np.abs(eigenvalues))),
        det_I_minus_B2=det_from_eigenvalues(eigenvalues),
        mccullagh_value=mccullagh_estimate(res.a_matrix),
        fredholm_limit=fredholm_limit,
    )
    logger.debug(
        f"spectre n={res.n}: λ*={report.lambda_star:.6f}, det(I-B²)={report.det_I_minus_B2:.12g}"
    )
    return report


def dump_eigenvalues(path: Union[str, Path], eigenvalues: np.ndarray) -> Path:
    """Une valeur par ligne, ordre croissant"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.sort(np.real(eigenvalues)), fmt="%.17g")
    return path
