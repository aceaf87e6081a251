"""Síntesis por etapas de una matriz de Butler.

Una matriz de Butler N×N implementa la DFT de N puntos en el dominio RF
encadenando log₂N etapas de acopladores híbridos (mariposas de 2 puntos) y
log₂N − 1 etapas de desfasadores fijos (factores de giro).  Aquí se obtiene
esa factorización siguiendo la FFT radix‑2 de diezmado en el tiempo:

    DFT_N = (H_L · T_L · ... · H_2 · T_2 · H_1)[:, perm]

donde ``perm`` es la permutación por inversión de bits de las entradas.

Convención del acoplador: mariposa real tipo Hadamard (1/√2)·[[1, 1], [1, −1]].
Un híbrido físico de 90° difiere en una fase fija por puerto que no altera
ninguna propiedad de potencia ni de ortogonalidad.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import linalg


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def dft_matrix(n: int) -> np.ndarray:
    """DFT unitaria: entrada (m, k) = exp(−j2πmk/N)/√N."""
    return linalg.dft(n, scale="sqrtn")


def bit_reversal_permutation(n: int) -> np.ndarray:
    """Permutación por inversión de bits de 0..n−1 (n potencia de dos)."""
    if not is_power_of_two(n):
        raise ValueError("N debe ser potencia de dos")
    bits = n.bit_length() - 1
    perm = np.zeros(n, dtype=int)
    for i in range(n):
        rev = 0
        x = i
        for _ in range(bits):
            rev = (rev << 1) | (x & 1)
            x >>= 1
        perm[i] = rev
    return perm


@dataclass(frozen=True)
class StageFactorization:
    """Etapas de la Butler en orden de aplicación y permutación de entrada.

    ``kinds`` etiqueta cada etapa como ``"hybrid"`` o ``"phase"``.
    """

    stages: Tuple[np.ndarray, ...]
    kinds: Tuple[str, ...]
    permutation: np.ndarray

    @property
    def n_hybrid_stages(self) -> int:
        return sum(1 for k in self.kinds if k == "hybrid")

    @property
    def n_phase_stages(self) -> int:
        return sum(1 for k in self.kinds if k == "phase")

    def product(self) -> np.ndarray:
        """Producto de las etapas con las columnas permutadas."""
        n = self.permutation.size
        total = np.eye(n, dtype=complex)
        for stage in self.stages:
            total = stage @ total
        return total[:, self.permutation]


def _hybrid_stage(n: int, span: int) -> np.ndarray:
    stage = np.zeros((n, n), dtype=complex)
    half = span // 2
    s = 1.0 / np.sqrt(2.0)
    for block in range(0, n, span):
        for k in range(half):
            top, bottom = block + k, block + k + half
            stage[top, top] = s
            stage[top, bottom] = s
            stage[bottom, top] = s
            stage[bottom, bottom] = -s
    return stage


def _phase_stage(n: int, span: int) -> np.ndarray:
    half = span // 2
    diag = np.ones(n, dtype=complex)
    for block in range(0, n, span):
        for k in range(half):
            diag[block + k + half] = np.exp(-2j * np.pi * k / span)
    return np.diag(diag)


def synthesize_butler_stages(n: int) -> StageFactorization:
    """Factoriza la DFT unitaria de N puntos en etapas de Butler.

    Parámetros
    ----------
    n : int
        Tamaño de la matriz (potencia de dos, N ≥ 2).

    Retorna
    -------
    StageFactorization
        log₂N etapas híbridas intercaladas con log₂N − 1 etapas de fase y la
        permutación por inversión de bits.
    """
    if n < 2 or not is_power_of_two(n):
        raise ValueError("N debe ser potencia de dos y al menos 2")
    stages: List[np.ndarray] = []
    kinds: List[str] = []
    span = 2
    while span <= n:
        # la primera etapa sólo tiene giros triviales (k = 0)
        if span > 2:
            stages.append(_phase_stage(n, span))
            kinds.append("phase")
        stages.append(_hybrid_stage(n, span))
        kinds.append("hybrid")
        span *= 2
    return StageFactorization(tuple(stages), tuple(kinds), bit_reversal_permutation(n))


def factorization_error(n: int) -> float:
    """Error máximo por entrada entre el producto de etapas y la DFT unitaria."""
    fact = synthesize_butler_stages(n)
    return float(np.max(np.abs(fact.product() - dft_matrix(n))))
