"""Modelo de canal one-ring para grupos de usuarios servidos por un ULA.

Este módulo construye la matriz de correlación espacial de cada grupo de
usuarios según el modelo de un anillo de dispersores (one-ring), calcula su
raíz cuadrada hermítica y genera realizaciones de canal con desvanecimiento
plano correlado h_k = S_g·z_k, con z_k gaussiano complejo circular de
varianza unidad.

La entrada (i, j) de la covarianza es

    R[i, j] = (1/2Δ) ∫_{−Δ}^{Δ} exp(j·2π·(d/λ)·(i−j)·cos(ϑ+θ)) dϑ

y sólo depende de i−j, de modo que basta con calcular una fila de retardos
y rellenar una matriz de Toeplitz hermítica.  La integral se evalúa con una
cuadratura de Gauss–Legendre compuesta de nodos fijos.

Los ángulos se aceptan en grados y se convierten a radianes internamente.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import linalg

from .exceptions import CovarianceError


# Número de nodos por panel de la cuadratura compuesta
GL_PANEL_NODES = 32
# Nodos totales por defecto
DEFAULT_QUAD_POINTS = 512
MIN_QUAD_POINTS = 64
# Umbral relativo para recortar autovalores negativos: ε_psd = PSD_EPS_PER_ANTENNA·N
PSD_EPS_PER_ANTENNA = 1e-8
# Asimetría máxima admitida |R − R^H|, relativa al mayor módulo de R
HERMITIAN_TOL = 1e-10

ANGLE_REFERENCES = ("endfire", "broadside")


@dataclass(frozen=True)
class ArrayGeometry:
    """Geometría de un array lineal uniforme.

    Args:
        n_antennas: número de antenas N.
        spacing_wavelengths: separación entre antenas normalizada d/λ.
        angle_reference: ``endfire`` usa cos(θ) en la fase (θ medido desde el
            eje del array); ``broadside`` usa sin(θ) (θ medido desde la normal).
    """

    n_antennas: int
    spacing_wavelengths: float = 0.5
    angle_reference: str = "endfire"

    def __post_init__(self) -> None:
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 1:
            raise ValueError("El número de antenas debe ser un entero positivo")
        if not math.isfinite(self.spacing_wavelengths) or self.spacing_wavelengths <= 0:
            raise ValueError("La separación d/λ debe ser positiva")
        if self.angle_reference not in ANGLE_REFERENCES:
            raise ValueError(f"Referencia angular desconocida: {self.angle_reference}")

    def spatial_phase(self, angle_rad: np.ndarray) -> np.ndarray:
        """Devuelve cos(ángulo) o sin(ángulo) según la referencia angular."""
        if self.angle_reference == "broadside":
            return np.sin(angle_rad)
        return np.cos(angle_rad)


@dataclass(frozen=True)
class UserGroup:
    """Grupo de usuarios con la misma covarianza espacial."""

    center_angle_deg: float
    angular_spread_deg: float
    n_users: int
    n_beams: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.center_angle_deg):
            raise ValueError("El ángulo central debe ser finito")
        if not (0.0 < self.angular_spread_deg < 90.0):
            raise ValueError("La dispersión angular debe cumplir 0 < Δ < 90 grados")
        if self.n_users < 1:
            raise ValueError("Cada grupo necesita al menos un usuario")
        if self.n_beams < self.n_users:
            raise ValueError("ZF requiere al menos tantos haces como usuarios (b_g ≥ K_g)")


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Covarianza espacial hermítica de Toeplitz con diagonal unidad.

    La raíz cuadrada se calcula de forma perezosa la primera vez que se pide
    y se guarda junto a la matriz.  Ambas matrices son de solo lectura.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("La covarianza debe ser una matriz cuadrada")
        if entries.size:
            scale = max(1.0, float(np.max(np.abs(entries))))
            if np.max(np.abs(entries - entries.conj().T)) > HERMITIAN_TOL * scale:
                raise CovarianceError("La covarianza debe ser hermítica")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def n_antennas(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def sqrt_factor(self) -> np.ndarray:
        factor = covariance_sqrt(self)
        factor.flags.writeable = False
        return factor

    def lags(self) -> np.ndarray:
        """Retardos r(m) = R[0, m] para m = 0..N−1 (primera fila)."""
        return np.array(self.entries[0, :])


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Matriz de canal H (N×K); la columna k es h_k.

    ``group_index_of_user[k]`` indica el grupo al que pertenece el usuario k.
    Los usuarios aparecen agrupados en el orden de los grupos.
    """

    entries: np.ndarray
    group_index_of_user: Tuple[int, ...]

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[1] != len(self.group_index_of_user):
            raise ValueError("Cada columna de H necesita su índice de grupo")
        if not np.all(np.isfinite(entries)):
            raise ValueError("La matriz de canal contiene valores no finitos")
        object.__setattr__(self, "group_index_of_user", tuple(int(g) for g in self.group_index_of_user))

    @property
    def n_users(self) -> int:
        return self.entries.shape[1]

    def users_of_group(self, group: int) -> np.ndarray:
        """Índices de columna de los usuarios del grupo ``group``."""
        return np.flatnonzero(np.asarray(self.group_index_of_user) == group)


def _panel_nodes(quad_points: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodos y pesos de Gauss–Legendre compuesto sobre [−1, 1]."""
    n_panels = max(1, math.ceil(quad_points / GL_PANEL_NODES))
    x, w = leggauss(GL_PANEL_NODES)
    edges = np.linspace(-1.0, 1.0, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def one_ring_covariance(
    geom: ArrayGeometry,
    theta_deg: float,
    delta_deg: float,
    quad_points: int = DEFAULT_QUAD_POINTS,
) -> CovarianceMatrix:
    """Calcula la covarianza one-ring de un grupo de usuarios.

    Parámetros
    ----------
    geom : ArrayGeometry
        Geometría del array (N y d/λ).
    theta_deg : float
        Ángulo central θ del grupo en grados.
    delta_deg : float
        Dispersión angular Δ en grados (Δ > 0).
    quad_points : int, opcional
        Número total de nodos de la cuadratura (≥ 64).

    Retorna
    -------
    CovarianceMatrix
        Matriz N×N hermítica de Toeplitz con diagonal exactamente 1.
    """
    if not (math.isfinite(theta_deg) and math.isfinite(delta_deg)):
        raise CovarianceError("Los ángulos deben ser finitos")
    if delta_deg <= 0:
        raise CovarianceError("La dispersión angular Δ debe ser positiva")
    if quad_points < MIN_QUAD_POINTS:
        raise ValueError(f"Se necesitan al menos {MIN_QUAD_POINTS} nodos de cuadratura")
    theta = math.radians(theta_deg)
    delta = math.radians(delta_deg)
    nodes, weights = _panel_nodes(quad_points)
    # ϑ = Δ·x; (1/2Δ)·∫ f dϑ = (1/2)·Σ w·f(Δ·x)
    phase = geom.spatial_phase(delta * nodes + theta)
    lags = np.arange(geom.n_antennas)
    kernel = np.exp(1j * 2.0 * np.pi * geom.spacing_wavelengths * np.outer(lags, phase))
    column = 0.5 * (kernel @ weights)
    column[0] = 1.0
    # R[i, j] = r(i−j): la primera columna lleva los retardos positivos
    entries = linalg.toeplitz(column, np.conj(column))
    return CovarianceMatrix(entries)


def covariance_sqrt(R: CovarianceMatrix) -> np.ndarray:
    """Raíz cuadrada hermítica S de la covarianza, con S·S^H = R.

    Se usa la descomposición espectral hermítica.  Los autovalores en
    [−ε_psd, 0] se recortan a cero; uno menor que −ε_psd indica que la
    covarianza está rota (normalmente, cuadratura demasiado gruesa).
    """
    n = R.n_antennas
    eps_psd = PSD_EPS_PER_ANTENNA * n
    eigvals, eigvecs = linalg.eigh(R.entries)
    if eigvals.min() < -eps_psd:
        raise CovarianceError(
            f"Autovalor {eigvals.min():.3e} por debajo de −ε_psd = {-eps_psd:.1e}"
        )
    eigvals = np.clip(eigvals, 0.0, None)
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.conj().T


def steering_vector(geom: ArrayGeometry, angle_deg: float) -> np.ndarray:
    """Vector de respuesta del array a_i = exp(j·2π·(d/λ)·i·cos θ)."""
    phase = geom.spatial_phase(np.radians(angle_deg))
    i = np.arange(geom.n_antennas)
    return np.exp(1j * 2.0 * np.pi * geom.spacing_wavelengths * i * phase)


def channel_generator(seed: int) -> np.random.Generator:
    """Generador PCG64 asociado a una semilla entera de 64 bits."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def sample_group_channels(
    groups: Sequence[Tuple[UserGroup, CovarianceMatrix]],
    seed: int,
) -> ChannelMatrix:
    """Genera una realización de canal para todos los grupos.

    Para cada usuario k del grupo g se obtiene h_k = S_g·z_k, con z_k de
    entradas gaussianas complejas circulares de varianza 1 (parte real e
    imaginaria de varianza 1/2).  La misma semilla reproduce la misma matriz
    bit a bit.

    Parámetros
    ----------
    groups : secuencia de (UserGroup, CovarianceMatrix)
        Grupos en orden; todas las covarianzas deben compartir N.
    seed : int
        Semilla de 64 bits del generador PCG64.

    Retorna
    -------
    ChannelMatrix
        H de tamaño N×K con K = Σ K_g.
    """
    if not groups:
        raise ValueError("Se necesita al menos un grupo")
    sizes = {cov.n_antennas for _, cov in groups}
    if len(sizes) != 1:
        raise ValueError("Todas las covarianzas deben tener el mismo número de antenas")
    n = sizes.pop()
    k_total = sum(group.n_users for group, _ in groups)
    rng = channel_generator(seed)
    z = (rng.standard_normal((n, k_total)) + 1j * rng.standard_normal((n, k_total))) / np.sqrt(2.0)
    columns = []
    group_index = []
    start = 0
    for g, (group, cov) in enumerate(groups):
        stop = start + group.n_users
        columns.append(cov.sqrt_factor @ z[:, start:stop])
        group_index.extend([g] * group.n_users)
        start = stop
    return ChannelMatrix(np.hstack(columns), tuple(group_index))
