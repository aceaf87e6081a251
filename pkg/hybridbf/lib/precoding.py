"""Precodificación JSDM: selección de haces, ZF por grupos y métricas de SINR.

El esquema de dos etapas agrupa a los usuarios por covarianza.  La etapa
analógica asigna a cada grupo b_g columnas de la DFT (los autovectores de la
aproximación circulante de su covarianza con mayor autovalor) y la etapa
digital aplica forzado a cero (ZF) dentro de cada grupo sobre el canal
efectivo F_RF,g^H·H_g.  La interferencia entre grupos se deja a la
separación en el espacio de haces y aparece en el SINR.

La única restricción de banda base es ‖F_BB‖_F² = K, aplicada globalmente.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy import linalg

from .channel_model import ChannelMatrix, CovarianceMatrix, UserGroup
from .exceptions import AllocationError, SingularConfigurationError
from .rf_network import RfNetwork

# Número de condición máximo admitido para el canal efectivo
MAX_CONDITION_NUMBER = 1e12


@dataclass(frozen=True)
class GroupBeamAllocation:
    """Haces (columnas de la DFT) asignados a cada grupo, disjuntos entre grupos."""

    beams: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        beams = tuple(tuple(int(b) for b in group) for group in self.beams)
        flat = [b for group in beams for b in group]
        if len(flat) != len(set(flat)):
            raise AllocationError("Los haces asignados a los grupos deben ser disjuntos")
        object.__setattr__(self, "beams", beams)

    @property
    def n_groups(self) -> int:
        return len(self.beams)

    @property
    def total_beams(self) -> int:
        return sum(len(group) for group in self.beams)

    def flat(self) -> Tuple[int, ...]:
        """Haces en el orden de grupos (orden de columnas de F_RF)."""
        return tuple(b for group in self.beams for b in group)


@dataclass(frozen=True, eq=False)
class PrecoderSet:
    """F_BB (N_RF×K), composite F = F_RF·F_BB (N×K) y la asignación usada."""

    f_bb: np.ndarray
    composite: np.ndarray
    allocation: GroupBeamAllocation


@dataclass(frozen=True, eq=False)
class SinrReport:
    """SINR lineal de cada usuario y varianza de ruido σ²."""

    sinr: np.ndarray
    noise_variance: float


def circulant_eigenvalues(R: CovarianceMatrix) -> np.ndarray:
    """Autovalores de la aproximación circulante de R.

    Con los retardos r(m) = R[0, m] (primera fila) y r(m−N) = R[N−m, 0], el
    aproximante es c(m) = ((N−m)·r(m) + m·r(m−N))/N y su autovalor n es
    λ_n = Σ_m c(m)·exp(−j2πnm/N), asociado a la columna n de la DFT
    unitaria exp(−j2πmn/N)/√N.
    """
    entries = R.entries
    n = entries.shape[0]
    m = np.arange(n)
    r_pos = entries[0, :]
    r_neg = np.zeros(n, dtype=complex)
    r_neg[1:] = entries[n - m[1:], 0]
    c = ((n - m) * r_pos + m * r_neg) / n
    return np.fft.fft(c)


def _ranking(eigvals: np.ndarray) -> List[int]:
    """Índices por |Re λ| descendente; a igualdad, el índice menor."""
    key = np.abs(eigvals.real)
    return sorted(range(key.size), key=lambda n: (-key[n], n))


def circulant_beam_select(R: CovarianceMatrix, b_g: int) -> List[int]:
    """Selecciona los b_g haces de la DFT con mayor autovalor circulante.

    Parámetros
    ----------
    R : CovarianceMatrix
        Covarianza del grupo.
    b_g : int
        Número de haces a seleccionar (b_g ≤ N).

    Retorna
    -------
    List[int]
        Índices de columna de la DFT ordenados por autovalor descendente.
    """
    n = R.n_antennas
    if b_g > n:
        raise AllocationError(f"No se pueden seleccionar {b_g} haces de una DFT de {n} puntos")
    if b_g < 0:
        raise ValueError("El número de haces no puede ser negativo")
    return _ranking(circulant_eigenvalues(R))[:b_g]


def effective_rank(R: CovarianceMatrix, energy: float = 0.99) -> int:
    """Número de autovalores circulantes necesarios para capturar ``energy`` de su suma."""
    values = np.sort(np.abs(circulant_eigenvalues(R).real))[::-1]
    cumulative = np.cumsum(values)
    return int(np.searchsorted(cumulative, energy * cumulative[-1]) + 1)


def allocate_beams(
    groups: Sequence[Tuple[UserGroup, CovarianceMatrix]],
    n_rf: int,
) -> GroupBeamAllocation:
    """Asigna haces disjuntos a los grupos.

    Se recorren todas las parejas (grupo, haz) por autovalor circulante
    descendente; cada grupo toma su mejor haz libre hasta completar b_g.  Si
    dos grupos quieren el mismo haz, se lo queda el de mayor autovalor y el
    otro pasa a su siguiente haz libre.  Los desempates favorecen el haz y
    el grupo de menor índice.
    """
    requested = [group.n_beams for group, _ in groups]
    if sum(requested) > n_rf:
        raise AllocationError(f"Σ b_g = {sum(requested)} supera N_RF = {n_rf}")
    candidates = []
    for g, (group, cov) in enumerate(groups):
        if group.n_beams > cov.n_antennas:
            raise AllocationError(f"El grupo {g} pide más haces que antenas")
        key = np.abs(circulant_eigenvalues(cov).real)
        candidates.extend((-key[n], n, g) for n in range(key.size))
    candidates.sort()
    taken = set()
    assigned: List[List[int]] = [[] for _ in groups]
    for _, n, g in candidates:
        if n in taken or len(assigned[g]) >= requested[g]:
            continue
        assigned[g].append(n)
        taken.add(n)
    for g, beams in enumerate(assigned):
        if len(beams) < requested[g]:
            raise AllocationError(f"El grupo {g} sólo obtiene {len(beams)} de {requested[g]} haces")
    return GroupBeamAllocation(tuple(tuple(b) for b in assigned))


def _zero_forcing(h_eff: np.ndarray) -> np.ndarray:
    """W = H̄·(H̄^H·H̄)⁻¹ mediante QR (H̄ = Q·R ⇒ W = Q·R^{−H})."""
    rows, cols = h_eff.shape
    if rows < cols:
        raise SingularConfigurationError(f"Canal efectivo {rows}×{cols} sin rango completo por columnas")
    q, r = linalg.qr(h_eff, mode="economic")
    diag = np.abs(np.diag(r))
    if diag.min() == 0.0:
        raise SingularConfigurationError("Canal efectivo deficiente en rango")
    cond = np.linalg.cond(r)
    if not np.isfinite(cond) or cond > MAX_CONDITION_NUMBER:
        raise SingularConfigurationError(f"Número de condición del canal efectivo {cond:.3e} > {MAX_CONDITION_NUMBER:.0e}")
    # W^H = R^{-1}·Q^H
    return linalg.solve_triangular(r, q.conj().T).conj().T


def _normalize(f_bb: np.ndarray, n_users: int) -> np.ndarray:
    power = np.vdot(f_bb, f_bb).real
    return f_bb * np.sqrt(n_users / power)


def per_group_zf(
    H: ChannelMatrix,
    net: RfNetwork,
    alloc: GroupBeamAllocation,
    joint: bool = False,
) -> PrecoderSet:
    """ZF por grupos sobre el canal efectivo de cada grupo.

    Para el grupo g con columnas F_RF,g, H̄_g = F_RF,g^H·H_g (b_g×K_g) y
    W_g = H̄_g·(H̄_g^H·H̄_g)⁻¹.  F_BB se monta diagonal por bloques y se
    reescala globalmente para que ‖F_BB‖_F² = K.  Con ``joint`` se aplica ZF
    sobre todo el canal efectivo F_RF^H·H sin estructura de bloques.

    Lanza
    -----
    SingularConfigurationError
        Si algún canal efectivo no tiene rango completo por columnas.
    """
    k = H.n_users
    f_bb = np.zeros((net.n_rf_chains, k), dtype=complex)
    if joint:
        columns = net.columns_for(alloc.flat())
        f_rf = net.matrix[:, columns]
        f_bb[np.ix_(columns, np.arange(k))] = _zero_forcing(f_rf.conj().T @ H.entries)
    else:
        for g, beams in enumerate(alloc.beams):
            users = H.users_of_group(g)
            if users.size == 0:
                continue
            if len(beams) < users.size:
                raise SingularConfigurationError(f"El grupo {g} tiene {len(beams)} haces para {users.size} usuarios")
            columns = net.columns_for(beams)
            h_eff = net.matrix[:, columns].conj().T @ H.entries[:, users]
            f_bb[np.ix_(columns, users)] = _zero_forcing(h_eff)
    f_bb = _normalize(f_bb, k)
    return PrecoderSet(f_bb=f_bb, composite=net.matrix @ f_bb, allocation=alloc)


def fully_digital_zf(H: ChannelMatrix) -> PrecoderSet:
    """ZF totalmente digital (F_RF = I_N): F_BB = H·(H^H·H)⁻¹ con ‖F_BB‖_F² = K."""
    n = H.entries.shape[0]
    f_bb = _normalize(_zero_forcing(H.entries), H.n_users)
    alloc = GroupBeamAllocation((tuple(range(n)),))
    return PrecoderSet(f_bb=f_bb, composite=f_bb, allocation=alloc)


def received_gains(H: ChannelMatrix, precoders: PrecoderSet) -> np.ndarray:
    """Matriz G con G[k, i] = |h_k^H·f_i|²."""
    return np.abs(H.entries.conj().T @ precoders.composite) ** 2


def sinr_from_gains(gains: np.ndarray, sigma2) -> np.ndarray:
    """SINR de cada usuario para una o varias varianzas de ruido.

    Con ``sigma2`` escalar devuelve un vector de K valores; con un vector de
    P varianzas devuelve una matriz P×K.
    """
    signal = np.diag(gains)
    interference = gains.sum(axis=1) - signal
    sigma2 = np.asarray(sigma2, dtype=float)
    return signal / (interference + sigma2[..., None])


def sinr_per_user(H: ChannelMatrix, precoders: PrecoderSet, sigma2: float) -> SinrReport:
    """γ_k = |h_k^H f_k|² / (Σ_{i≠k} |h_k^H f_i|² + σ²)."""
    if not sigma2 > 0:
        raise ValueError("La varianza de ruido debe ser positiva")
    gains = received_gains(H, precoders)
    return SinrReport(sinr=sinr_from_gains(gains, float(sigma2)), noise_variance=float(sigma2))


def sum_spectral_efficiency(report: SinrReport) -> float:
    """Σ_k log₂(1 + γ_k) en bits/s/Hz para una realización."""
    return float(np.sum(np.log2(1.0 + report.sinr)))
