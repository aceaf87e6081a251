"""Redes analógicas de conformación de haz (ABFN) a partir de modelos de componentes.

Se modelan dos arquitecturas:

* **Totalmente conectada (FC)**: F_RF = F_C·F_PS·F_D, con divisores de
  Wilkinson (F_D), desfasadores variables (F_PS) y combinadores (F_C).  El
  factor 1/√N_RF de los combinadores es la pérdida *dinámica*: aparece
  incluso con componentes ideales.
* **Butler / DFT**: F_RF = κ·E, con E un subconjunto de columnas de la DFT
  unitaria y κ el producto de las pérdidas de los log₂N acopladores híbridos
  y los log₂N − 1 desfasadores fijos que atraviesa cada señal.

Todas las matrices llevan escalados de amplitud.  Una pérdida de L dB se
traduce en el factor de potencia lineal 10^(L/10) y en el escalado de
amplitud 1/√L.  Los divisores y combinadores de T salidas se construyen
como árboles binarios de ⌈log₂T⌉ etapas de tres puertos.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .butler import dft_matrix, is_power_of_two
from .channel_model import ArrayGeometry, steering_vector


class BandTag(str, enum.Enum):
    SUB5GHZ = "sub5ghz"
    MMWAVE = "mmwave"
    IDEAL = "ideal"
    CUSTOM = "custom"


class RfArchitecture(str, enum.Enum):
    FULLY_CONNECTED = "fully_connected"
    BUTLER = "butler"
    IDENTITY = "identity"


@dataclass(frozen=True)
class LossProfile:
    """Pérdidas de inserción por componente, en dB.

    Args:
        divider_combiner_db: pérdida por etapa de tres puertos (divisor o
            combinador), L̄_S = L̄_C.
        hybrid_coupler_db: pérdida de cada acoplador híbrido L_HYB.
        variable_phase_shifter_db: desfasador variable de la red FC, L_PS.
        fixed_phase_shifter_db: línea de retardo fija entre etapas de la
            Butler, L_PS,fix.
        band_tag: banda de la que proceden los valores.
    """

    divider_combiner_db: float
    hybrid_coupler_db: float
    variable_phase_shifter_db: float
    fixed_phase_shifter_db: float
    band_tag: BandTag = BandTag.CUSTOM

    def __post_init__(self) -> None:
        object.__setattr__(self, "band_tag", BandTag(self.band_tag))
        for name in ("divider_combiner_db", "hybrid_coupler_db",
                     "variable_phase_shifter_db", "fixed_phase_shifter_db"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"La pérdida {name} debe ser ≥ 0 dB")
        if self.band_tag is BandTag.IDEAL and any(
            getattr(self, n) != 0.0 for n in ("divider_combiner_db", "hybrid_coupler_db",
                                              "variable_phase_shifter_db", "fixed_phase_shifter_db")
        ):
            raise ValueError("El perfil ideal no puede tener pérdidas")


# Perfiles incorporados.  El desfasador fijo de la Butler (0.5 dB) no está
# en la tabla de componentes: 5·0.15 + 4·0.5 = 2.75 dB reproduce la pérdida
# estática de ≈2.8 dB medida para la Butler 32×32 a 2.6 GHz.
BUILTIN_PROFILES: Dict[str, LossProfile] = {
    "ideal": LossProfile(0.0, 0.0, 0.0, 0.0, BandTag.IDEAL),
    "sub5ghz": LossProfile(0.5, 0.15, 3.5, 0.5, BandTag.SUB5GHZ),
    "mmwave": LossProfile(0.6, 0.5, 0.5, 0.5, BandTag.MMWAVE),
}


def get_profile(name: str) -> LossProfile:
    """Devuelve un perfil incorporado por nombre (ideal, sub5ghz, mmwave)."""
    try:
        return BUILTIN_PROFILES[name.lower()]
    except KeyError:
        raise ValueError(f"Perfil de pérdidas desconocido: {name}") from None


def db_to_linear(loss_db: float) -> float:
    return 10.0 ** (loss_db / 10.0)


def linear_to_db(loss_linear: float) -> float:
    return 10.0 * math.log10(loss_linear)


def tree_stages(ports: int) -> int:
    """Etapas de tres puertos de un divisor/combinador de ``ports`` salidas."""
    if ports < 1:
        raise ValueError("El número de puertos debe ser positivo")
    return math.ceil(math.log2(ports)) if ports > 1 else 0


def butler_stage_counts(n_antennas: int) -> Tuple[int, int]:
    """(N_HYB, N_PS) de una Butler N×N."""
    if not is_power_of_two(n_antennas):
        raise ValueError("La Butler requiere N potencia de dos")
    n_hyb = int(math.log2(n_antennas))
    return n_hyb, max(n_hyb - 1, 0)


@dataclass(frozen=True, eq=False)
class RfNetwork:
    """Matriz F_RF (N×N_RF) con su procedencia.

    ``beam_indices[c]`` es la etiqueta de haz (columna de la DFT en FC y
    Butler, índice de antena en la identidad) de la columna c de F_RF.
    ``loss_breakdown`` desglosa la pérdida estática en dB por etapa.
    """

    matrix: np.ndarray
    architecture: RfArchitecture
    static_loss_db: float
    beam_indices: Tuple[int, ...]
    loss_breakdown: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "architecture", RfArchitecture(self.architecture))
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.ndim != 2:
            raise ValueError("F_RF debe ser una matriz")
        if self.static_loss_db < 0:
            raise ValueError("La pérdida estática no puede ser negativa")
        if len(self.beam_indices) != matrix.shape[1]:
            raise ValueError("Cada columna de F_RF necesita su índice de haz")
        if self.architecture is RfArchitecture.IDENTITY:
            if matrix.shape[0] != matrix.shape[1] or not np.array_equal(matrix, np.eye(matrix.shape[0])):
                raise ValueError("La red identidad requiere N_RF = N y F_RF = I_N")
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "beam_indices", tuple(int(b) for b in self.beam_indices))

    @property
    def n_antennas(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_rf_chains(self) -> int:
        return self.matrix.shape[1]

    def columns_for(self, beams: Sequence[int]) -> np.ndarray:
        """Posiciones de columna de F_RF para una lista de haces."""
        position = {b: c for c, b in enumerate(self.beam_indices)}
        try:
            return np.array([position[b] for b in beams], dtype=int)
        except KeyError as exc:
            raise ValueError(f"El haz {exc.args[0]} no está cableado en la red") from None


def _equal_split(n_antennas: int) -> np.ndarray:
    return np.full(n_antennas, 1.0 / n_antennas)


def _normalize_ratios(branch_ratios: Optional[Sequence[float]], n_antennas: int) -> np.ndarray:
    if branch_ratios is None:
        return _equal_split(n_antennas)
    ratios = np.asarray(branch_ratios, dtype=float)
    if ratios.shape != (n_antennas,) or np.any(ratios <= 0) or not np.all(np.isfinite(ratios)):
        raise ValueError("Las relaciones de reparto deben ser N valores positivos")
    return ratios / ratios.sum()


def _check_loss(loss_linear: float, what: str) -> None:
    if not loss_linear >= 1.0:
        raise ValueError(f"La pérdida lineal del {what} debe ser ≥ 1 (un componente pasivo no amplifica)")


def divider_matrix(
    n_antennas: int,
    n_rf: int,
    loss_linear: float,
    branch_ratios: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """Matriz de divisores F_D ((N·N_RF)×N_RF), diagonal por bloques.

    Cada bloque es el vector de unos 1_N escalado por √(1/(L_S·N)).  Con
    ``branch_ratios`` = (p_1..p_N) la salida i lleva √(p_i/L_S) en lugar del
    reparto igual.

    Parámetros
    ----------
    n_antennas : int
        Número de antenas N.
    n_rf : int
        Número de cadenas RF N_RF.
    loss_linear : float
        Pérdida estática lineal L_S ≥ 1.
    branch_ratios : secuencia de float, opcional
        Reparto de potencia entre las N salidas (se normaliza a suma 1).

    Retorna
    -------
    np.ndarray
        Matriz compleja de tamaño (N·N_RF)×N_RF con N no nulos por columna.
    """
    if n_antennas < 1 or n_rf < 1:
        raise ValueError("N y N_RF deben ser positivos")
    _check_loss(loss_linear, "divisor")
    ratios = _normalize_ratios(branch_ratios, n_antennas)
    block = np.sqrt(ratios / loss_linear).astype(complex).reshape(-1, 1)
    return linalg.block_diag(*([block] * n_rf))


def phase_shift_matrix(phases: Sequence[float], loss_linear: float) -> np.ndarray:
    """Matriz diagonal de desfasadores F_PS = diag(exp(j·φ_m))/√L_PS."""
    phases = np.asarray(phases, dtype=float).ravel()
    if not np.all(np.isfinite(phases)):
        raise ValueError("Las fases deben ser finitas")
    _check_loss(loss_linear, "desfasador")
    return np.diag(np.exp(1j * phases) / np.sqrt(loss_linear))


def combiner_matrix(n_antennas: int, n_rf: int, loss_linear: float) -> np.ndarray:
    """Matriz de combinadores F_C (N×(N·N_RF)).

    Es la concatenación horizontal de N_RF copias de I_N escalada por
    √(1/(L_C·N_RF)); la fila i tiene no nulos en i, i+N, …, i+(N_RF−1)N.
    """
    if n_antennas < 1 or n_rf < 1:
        raise ValueError("N y N_RF deben ser positivos")
    _check_loss(loss_linear, "combinador")
    return np.tile(np.eye(n_antennas, dtype=complex), (1, n_rf)) / np.sqrt(loss_linear * n_rf)


def static_loss_db(profile: LossProfile, architecture: RfArchitecture, n_antennas: int, n_rf: int) -> float:
    """Pérdida estática total de la red, en dB.

    FC: L̄_S·log₂N + L_PS + L̄_C·log₂N_RF.  Butler: N_PS·L_PS,fix + N_HYB·L_HYB.
    Identidad: 0.
    """
    return sum(_loss_breakdown(profile, RfArchitecture(architecture), n_antennas, n_rf).values())


def _loss_breakdown(profile: LossProfile, architecture: RfArchitecture, n_antennas: int, n_rf: int) -> Dict[str, float]:
    if architecture is RfArchitecture.FULLY_CONNECTED:
        return {
            "divider": profile.divider_combiner_db * tree_stages(n_antennas),
            "phase_shifter": profile.variable_phase_shifter_db,
            "combiner": profile.divider_combiner_db * tree_stages(n_rf),
        }
    if architecture is RfArchitecture.BUTLER:
        n_hyb, n_ps = butler_stage_counts(n_antennas)
        return {
            "hybrid_couplers": n_hyb * profile.hybrid_coupler_db,
            "fixed_phase_shifters": n_ps * profile.fixed_phase_shifter_db,
        }
    return {}


def dynamic_loss_db(architecture: RfArchitecture, n_rf: int) -> float:
    """Pérdida dinámica de combinación: 10·log₁₀N_RF en FC, 0 en el resto."""
    if RfArchitecture(architecture) is RfArchitecture.FULLY_CONNECTED:
        return linear_to_db(n_rf)
    return 0.0


@dataclass(frozen=True)
class LossBudget:
    architecture: RfArchitecture
    n_antennas: int
    n_rf: int
    static_db: float
    dynamic_db: float

    @property
    def compensation_db(self) -> float:
        """Ganancia que tendría que aportar la etapa RF para igualar al digital."""
        return self.static_db + self.dynamic_db


def loss_budget(profile: LossProfile, architecture: RfArchitecture, n_antennas: int, n_rf: int) -> LossBudget:
    architecture = RfArchitecture(architecture)
    return LossBudget(
        architecture=architecture,
        n_antennas=n_antennas,
        n_rf=n_rf,
        static_db=static_loss_db(profile, architecture, n_antennas, n_rf),
        dynamic_db=dynamic_loss_db(architecture, n_rf),
    )


def dft_matched_phases(n_antennas: int, beam_indices: Sequence[int]) -> np.ndarray:
    """Fases φ_{i,j} = arg(E[i, b_j]) para que la FC apunte los haces de la DFT."""
    return np.angle(dft_matrix(n_antennas)[:, list(beam_indices)])


def array_response_phases(geom: ArrayGeometry, steering_angles_deg: Sequence[float]) -> np.ndarray:
    """Fases N×len(ángulos) tomadas de la respuesta del array en cada ángulo de salida."""
    return np.column_stack([np.angle(steering_vector(geom, a)) for a in steering_angles_deg])


def compose_fc_abfn(
    geom: ArrayGeometry,
    n_rf: int,
    phases: np.ndarray,
    profile: LossProfile,
    beam_indices: Optional[Sequence[int]] = None,
    branch_ratios: Optional[Sequence[float]] = None,
) -> RfNetwork:
    """Construye la red FC como F_C·F_PS·F_D.

    Parámetros
    ----------
    geom : ArrayGeometry
        Geometría del array (aporta N).
    n_rf : int
        Número de cadenas RF N_RF.
    phases : array
        Fases en radianes: matriz N×N_RF o vector de longitud N·N_RF en el
        orden de F_PS (índice m = j·N + i).
    profile : LossProfile
        Perfil de pérdidas; L_S,dB = L̄_S·log₂N y L_C,dB = L̄_C·log₂N_RF.
    beam_indices : secuencia de int, opcional
        Etiquetas de haz de cada columna (por defecto 0..N_RF−1).
    branch_ratios : secuencia de float, opcional
        Reparto asimétrico de los divisores.

    Retorna
    -------
    RfNetwork
        Red FC cuya entrada (i, j) vale exp(jφ_{i,j})·√p_i/√(L_S·L_PS·L_C·N_RF).
    """
    n_antennas = geom.n_antennas
    phases = np.asarray(phases, dtype=float)
    if phases.ndim == 2:
        if phases.shape != (n_antennas, n_rf):
            raise ValueError("La matriz de fases debe ser N×N_RF")
        flat = phases.ravel(order="F")
    else:
        flat = phases.ravel()
    if flat.size != n_antennas * n_rf:
        raise ValueError("Se necesitan N·N_RF fases")
    breakdown = _loss_breakdown(profile, RfArchitecture.FULLY_CONNECTED, n_antennas, n_rf)
    f_d = divider_matrix(n_antennas, n_rf, db_to_linear(breakdown["divider"]), branch_ratios)
    f_ps = phase_shift_matrix(flat, db_to_linear(breakdown["phase_shifter"]))
    f_c = combiner_matrix(n_antennas, n_rf, db_to_linear(breakdown["combiner"]))
    if beam_indices is None:
        beam_indices = range(n_rf)
    return RfNetwork(
        matrix=f_c @ f_ps @ f_d,
        architecture=RfArchitecture.FULLY_CONNECTED,
        static_loss_db=sum(breakdown.values()),
        beam_indices=tuple(beam_indices),
        loss_breakdown=breakdown,
    )


def butler_rf_matrix(geom: ArrayGeometry, beam_indices: Sequence[int], profile: LossProfile) -> RfNetwork:
    """Red Butler F_RF = κ·E con las columnas de la DFT seleccionadas.

    κ = 1/√(L_PS,fix^N_PS · L_HYB^N_HYB), N_HYB = log₂N y N_PS = log₂N − 1.
    """
    n_antennas = geom.n_antennas
    beams = [int(b) for b in beam_indices]
    if len(set(beams)) != len(beams):
        raise ValueError("Los índices de haz no pueden repetirse")
    if any(b < 0 or b >= n_antennas for b in beams):
        raise ValueError("Los índices de haz deben estar en [0, N−1]")
    breakdown = _loss_breakdown(profile, RfArchitecture.BUTLER, n_antennas, len(beams))
    total_db = sum(breakdown.values())
    kappa = 1.0 / math.sqrt(db_to_linear(total_db))
    return RfNetwork(
        matrix=kappa * dft_matrix(n_antennas)[:, beams],
        architecture=RfArchitecture.BUTLER,
        static_loss_db=total_db,
        beam_indices=tuple(beams),
        loss_breakdown=breakdown,
    )


def identity_network(n_antennas: int) -> RfNetwork:
    """Red identidad (sistema totalmente digital)."""
    return RfNetwork(
        matrix=np.eye(n_antennas, dtype=complex),
        architecture=RfArchitecture.IDENTITY,
        static_loss_db=0.0,
        beam_indices=tuple(range(n_antennas)),
    )


def power_transfer_ratio(net: RfNetwork, u: Sequence[complex]) -> float:
    """Cociente ‖F_RF·u‖²/‖u‖² para una entrada de las cadenas RF."""
    u = np.asarray(u, dtype=complex).ravel()
    if u.size != net.n_rf_chains:
        raise ValueError("La entrada debe tener N_RF componentes")
    norm_u = np.vdot(u, u).real
    if norm_u == 0:
        raise ValueError("El vector de entrada no puede ser nulo")
    out = net.matrix @ u
    return float(np.vdot(out, out).real / norm_u)
