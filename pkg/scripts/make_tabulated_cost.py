"""
Écrit deux grilles de coût tabulées pour la démonstration de validate-cost :
une grille quadratique et la même grille avec une entrée asymétrique.
"""

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from src.utils.matrix_io import write_matrix_file  # noqa: E402

DATA_DIR = ROOT / "data" / "costs"
GRID_POINTS = 11
PERTURBED_ENTRY = (2, 7)
PERTURBATION = 1e-3


def quadratic_table(m=GRID_POINTS, beta=1.0):
    nodes = np.linspace(0.0, 1.0, m)
    return beta * (nodes[:, None] - nodes[None, :]) ** 2


def create_cost_tables(data_dir=DATA_DIR):
    data_dir.mkdir(parents=True, exist_ok=True)
    table = quadratic_table()
    symmetric = write_matrix_file(data_dir / "quadratic_grid.txt", table)

    table[PERTURBED_ENTRY] += PERTURBATION
    asymmetric = write_matrix_file(data_dir / "asymmetric_grid.txt", table)

    print(f"Grille {GRID_POINTS}×{GRID_POINTS} écrite dans {symmetric}")
    print(f"Grille asymétrique (entrée {PERTURBED_ENTRY} + {PERTURBATION:g}) écrite dans {asymmetric}")
    return symmetric, asymmetric


if __name__ == "__main__":
    create_cost_tables()
