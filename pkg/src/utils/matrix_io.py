"""
Lecture/écriture du format matrice texte : première ligne n, puis n lignes de n valeurs
"""

from pathlib import Path
from typing import Union

import numpy as np

from src.utils.errors import CostError

PathLike = Union[str, Path]


def read_matrix_file(path: PathLike) -> np.ndarray:
    """Lit une matrice carrée au format 'n puis n×n valeurs'"""
    path = Path(path)
    if not path.exists():
        raise CostError(f"Fichier matrice introuvable: {path}")

    tokens = path.read_text(encoding="utf-8").split()
    if not tokens:
        raise CostError(f"Fichier matrice vide: {path}")
    try:
        size = int(tokens[0])
        values = np.array([float(t) for t in tokens[1:]], dtype=float)
    except ValueError as e:
        raise CostError(f"Fichier matrice illisible {path}: {e}") from e

    if size < 1 or values.size != size * size:
        raise CostError(
            f"{path}: {values.size} valeurs pour une matrice annoncée {size}×{size}"
        )
    return values.reshape(size, size)


def write_matrix_file(path: PathLike, matrix: np.ndarray) -> Path:
    """Écrit une matrice carrée dans le même format"""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"matrice carrée attendue, forme {matrix.shape}")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        f.write(f"{matrix.shape[0]}\n")
        np.savetxt(f, matrix, fmt="%.17g")
    return path
