"""
Hiérarchie d'exceptions de permlim et codes de sortie associés
"""

from typing import Optional

import numpy as np


class PermlimError(Exception):
    """Erreur de base ; exit_code est le code de sortie de la CLI"""
    exit_code = 1


class ConfigError(PermlimError):
    """Fichier de configuration absent, mal formé ou incomplet"""


class DomainError(PermlimError, ValueError):
    """Point d'évaluation hors de [0, 1]"""


class CostError(PermlimError):
    """Fonction de coût mal définie (famille, paramètres, grille, expression)"""


class KernelError(PermlimError):
    """Noyau échantillonné asymétrique, négatif ou non fini"""


class PermanentError(PermlimError):
    """Permanent hors plafond ou matrice invalide"""


class BridgeError(PermlimError):
    """Échec du solveur de potentiel"""
    exit_code = 3

    def __init__(self, message: str, last_residual: Optional[float] = None,
                 iterations: Optional[int] = None):
        super().__init__(message)
        self.last_residual = last_residual
        self.iterations = iterations


class PotentialOverflowError(BridgeError):
    """Un exposant -c-a-a dépasse la borne configurée"""


class BalanceError(PermlimError):
    """Échec de l'équilibrage doublement stochastique"""
    exit_code = 4


class SpectralError(PermlimError):
    """Hypothèse spectrale violée ou vérification d'identité échouée"""
    exit_code = 5


def check_unit_interval(name: str, value) -> None:
    """Lève DomainError si une valeur sort de [0, 1]"""
    arr = np.asarray(value, dtype=float)
    if arr.size and (np.any(~np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0):
        raise DomainError(f"{name} doit être dans [0, 1] (reçu {value!r})")
