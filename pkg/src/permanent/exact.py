"""
Permanents exacts : formules de Ryser et de Glynn en code de Gray, force brute

Les deux formules s'écrivent Σ_bits (-1)^{|bits|} Π_i (base + steps @ bits)_i :
  - Ryser : base = 0, steps = A, puis per = (-1)^n Σ
  - Glynn : base = somme des colonnes, steps = -2 A[:, 1:], puis per = Σ / 2^{n-1}
Les bits bas sont tabulés une fois (2^k sommes de lignes), les bits hauts
parcourus en code de Gray par blocs de CHUNK pas dont les sommes de départ
sont recalculées : le résultat ne dépend pas du nombre de workers.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from itertools import permutations
from typing import List, Optional

import numpy as np
from loguru import logger

from src.utils.errors import PermanentError

DEFAULT_CAP = 26
SLOW_WARNING_N = 22
# au-delà, Ryser perd des chiffres par annulation face à Glynn
RYSER_WARNING_N = 16
BRUTE_MAX_N = 9
LOW_BITS = 10
CHUNK = 64


class PermanentMethod(str, Enum):
    RYSER = "ryser"
    GLYNN = "glynn"
    BRUTE = "brute"


@dataclass(frozen=True)
class PermanentValue:
    n: int
    value: float
    log_value: float
    method: PermanentMethod
    normalized: bool = False


def default_cap() -> int:
    return int(os.getenv("PERMLIM_PERMANENT_CAP", DEFAULT_CAP))


def _log(value: float) -> float:
    if value > 0:
        return math.log(value)
    return -math.inf if value == 0 else math.nan


def _checked_matrix(M, cap: int) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise PermanentError(f"matrice carrée attendue, forme {M.shape}")
    if not np.all(np.isfinite(M)):
        raise PermanentError("entrées non finies")
    n = M.shape[0]
    if n > cap:
        raise PermanentError(f"n={n} dépasse le plafond du permanent exact ({cap})")
    if n > SLOW_WARNING_N:
        logger.warning(f"⚠️ Permanent exact n={n}: 2^{n} termes, calcul long")
    return M


def _bit_matrix(k: int) -> np.ndarray:
    """Les 2^k vecteurs de bits, ligne r = écriture binaire de r"""
    r = np.arange(1 << k)[:, None]
    return ((r >> np.arange(k)[None, :]) & 1).astype(float)


def _chunk_total(base: np.ndarray, high_steps: np.ndarray, low_table: np.ndarray,
                 low_sign: np.ndarray, start: int, stop: int) -> float:
    gray = start ^ (start >> 1)
    bits = (gray >> np.arange(high_steps.shape[1])) & 1
    rows = base + high_steps @ bits
    terms: List[float] = []
    for t in range(start, stop):
        if t != start:
            bit = (t & -t).bit_length() - 1
            gray ^= 1 << bit
            if gray >> bit & 1:
                rows = rows + high_steps[:, bit]
            else:
                rows = rows - high_steps[:, bit]
        sign = -1.0 if bin(gray).count("1") % 2 else 1.0
        products = np.prod(rows[None, :] + low_table, axis=1)
        terms.append(sign * math.fsum(low_sign * products))
    return math.fsum(terms)


def _signed_subset_sum(base: np.ndarray, steps: np.ndarray, workers: int = 1) -> float:
    free = steps.shape[1]
    k = min(free, LOW_BITS)
    low_bits = _bit_matrix(k)
    low_table = low_bits @ steps[:, :k].T
    low_sign = np.where(low_bits.sum(axis=1) % 2, -1.0, 1.0)
    high_steps = steps[:, k:]

    outer = 1 << (free - k)
    bounds = [(s, min(s + CHUNK, outer)) for s in range(0, outer, CHUNK)]
    logger.debug(f"permanent: {outer} pas de Gray en {len(bounds)} blocs, {workers} worker(s)")

    def run(bound):
        return _chunk_total(base, high_steps, low_table, low_sign, *bound)

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            totals = list(pool.map(run, bounds))
    else:
        totals = [run(b) for b in bounds]
    # Réduction dans l'ordre croissant des blocs
    return math.fsum(totals)


def _ryser(M: np.ndarray, workers: int) -> float:
    n = M.shape[0]
    total = _signed_subset_sum(np.zeros(n), M, workers)
    return -total if n % 2 else total


def _glynn(M: np.ndarray, workers: int) -> float:
    n = M.shape[0]
    total = _signed_subset_sum(M.sum(axis=1), -2.0 * M[:, 1:], workers)
    return total / 2.0 ** (n - 1)


def permanent_exact(M, method: PermanentMethod = PermanentMethod.GLYNN,
                    cap: Optional[int] = None, workers: int = 1) -> PermanentValue:
    """Permanent par Ryser ou Glynn, O(2^n n)"""
    method = PermanentMethod(method)
    if method is PermanentMethod.BRUTE:
        return permanent_brute(M)
    M = _checked_matrix(M, cap if cap is not None else default_cap())
    n = M.shape[0]
    if n == 0:
        value = 1.0
    elif method is PermanentMethod.RYSER:
        if n > RYSER_WARNING_N:
            logger.warning(f"⚠️ Ryser à n={n}: précision relative dégradée, préférer glynn")
        value = _ryser(M, workers)
    else:
        value = _glynn(M, workers)
    return PermanentValue(n=n, value=value, log_value=_log(value), method=method)


def permanent_brute(M) -> PermanentValue:
    """Somme directe sur les n! permutations (oracle, n ≤ 9)"""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise PermanentError(f"matrice carrée attendue, forme {M.shape}")
    n = M.shape[0]
    if n > BRUTE_MAX_N:
        raise PermanentError(f"force brute limitée à n ≤ {BRUTE_MAX_N} (reçu {n})")
    if n == 0:
        value = 1.0
    else:
        perms = np.array(list(permutations(range(n))))
        value = math.fsum(np.prod(M[np.arange(n), perms], axis=1))
    return PermanentValue(n=n, value=value, log_value=_log(value), method=PermanentMethod.BRUTE)


def permanent_normalized(M, method: PermanentMethod = PermanentMethod.GLYNN,
                         cap: Optional[int] = None, workers: int = 1) -> PermanentValue:
    """per(M) / n!, en divisant la ligne k par k avant le calcul"""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    scaled = M / np.arange(1, n + 1)[:, None]
    raw = permanent_exact(scaled, method, cap=cap, workers=workers)
    return PermanentValue(n=n, value=raw.value, log_value=raw.log_value,
                          method=raw.method, normalized=True)
