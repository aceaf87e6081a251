"""Motor Monte Carlo de barridos de eficiencia espectral y energética.

Cada escenario se prepara una sola vez (covarianzas, reparto de haces,
asignación y redes RF, que no dependen del canal) y después se recorren las
realizaciones.  La realización r usa siempre la misma semilla, derivada sólo
de (master_seed, r): todas las arquitecturas y todos los valores de ρ ven
los mismos canales.  Para cada realización y serie el precodificador se
calcula una vez y el SINR se evalúa sobre toda la rejilla σ² = K/ρ.

Las realizaciones pueden repartirse entre procesos en bloques contiguos; los
resultados se concatenan en el orden de los índices antes de promediar, de
modo que la tabla no depende del número de procesos.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .channel_model import CovarianceMatrix, UserGroup, one_ring_covariance, sample_group_channels
from .exceptions import SingularConfigurationError
from .power_metrics import energy_efficiency
from .precoding import (
    GroupBeamAllocation,
    allocate_beams,
    effective_rank,
    fully_digital_zf,
    per_group_zf,
    received_gains,
    sinr_from_gains,
)
from .rf_network import (
    BUILTIN_PROFILES,
    RfArchitecture,
    RfNetwork,
    array_response_phases,
    butler_rf_matrix,
    compose_fc_abfn,
    dft_matched_phases,
)
from .scenario import Architecture, ScenarioConfig

logger = logging.getLogger(__name__)


def realization_seed(master_seed: int, index: int) -> int:
    """Semilla de 64 bits de la realización ``index``."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def rho_to_noise_variance(rho_db: Sequence[float], n_users: int) -> np.ndarray:
    """σ² = K/ρ con ρ en dB."""
    rho = 10.0 ** (np.asarray(rho_db, dtype=float) / 10.0)
    return n_users / rho


@dataclass(frozen=True)
class Series:
    """Curva del barrido: arquitectura y número de cadenas RF."""

    architecture: Architecture
    n_rf: int
    label: str


@dataclass(frozen=True)
class PointResult:
    """Resultado de un punto (serie, ρ) del barrido."""

    architecture: str
    n_rf: int
    rho_db: float
    sum_se: float
    se_stderr: float
    ee_bits_per_joule: float
    mean_sinr_db: Tuple[float, ...]
    realizations: int
    seed: int


@dataclass
class SweepTable:
    """Tabla de resultados en orden determinista (serie, ρ).

    ``failures`` recoge las series descartadas por una realización singular.
    """

    points: List[PointResult] = field(default_factory=list)
    failures: List[Tuple[str, SingularConfigurationError]] = field(default_factory=list)
    user_groups: Tuple[int, ...] = ()

    def series_labels(self) -> List[str]:
        labels: List[str] = []
        for p in self.points:
            if p.architecture not in labels:
                labels.append(p.architecture)
        return labels


@dataclass(frozen=True, eq=False)
class SimulationContext:
    """Todo lo que no depende de la realización de canal."""

    cfg: ScenarioConfig
    covariances: Tuple[CovarianceMatrix, ...]
    series: Tuple[Series, ...]
    allocations: Dict[int, GroupBeamAllocation]
    networks: Dict[str, RfNetwork]

    @property
    def channel_groups(self) -> Tuple[Tuple[UserGroup, CovarianceMatrix], ...]:
        # b_g no interviene en el muestreo; sólo K_g y la covarianza
        return tuple(
            (UserGroup(g.center_angle_deg, g.angular_spread_deg, g.n_users, g.n_users), cov)
            for g, cov in zip(self.cfg.groups, self.covariances)
        )


def series_for(cfg: ScenarioConfig) -> Tuple[Series, ...]:
    """Series del barrido en orden: arquitecturas y, dentro de cada una, N_RF."""
    out: List[Series] = []
    multi = len(cfg.n_rf_values) > 1
    for arch in cfg.architectures:
        if arch is Architecture.FULLY_DIGITAL:
            out.append(Series(arch, cfg.geometry.n_antennas, arch.value))
            continue
        for n_rf in cfg.n_rf_values:
            label = f"{arch.value}_nrf{n_rf}" if multi else arch.value
            out.append(Series(arch, n_rf, label))
    return tuple(out)


def split_beams(cfg: ScenarioConfig, covariances: Sequence[CovarianceMatrix], n_rf: int) -> Tuple[int, ...]:
    """Número de haces b_g de cada grupo.

    Si el escenario los fija, se usan tal cual.  Si no, cada grupo recibe K_g
    haces y los N_RF − K restantes se reparten por restos mayores en
    proporción al rango efectivo (99 % de la energía) de su covarianza.
    """
    if cfg.explicit_beams:
        return tuple(g.n_beams for g in cfg.groups)
    base = [g.n_users for g in cfg.groups]
    spare = n_rf - sum(base)
    ranks = np.array([effective_rank(cov) for cov in covariances], dtype=float)
    quotas = spare * ranks / ranks.sum()
    extra = np.floor(quotas).astype(int)
    leftover = spare - int(extra.sum())
    order = sorted(range(len(base)), key=lambda g: (-(quotas[g] - extra[g]), g))
    for g in order[:leftover]:
        extra[g] += 1
    return tuple(int(b + e) for b, e in zip(base, extra))


def _fc_phases(cfg: ScenarioConfig, alloc: GroupBeamAllocation, n_rf: int) -> np.ndarray:
    n = cfg.geometry.n_antennas
    if cfg.fc_phase_design == "array_response":
        angles: List[float] = []
        for g, beams in zip(cfg.groups, alloc.beams):
            b = len(beams)
            angles.extend(g.center_angle_deg + g.angular_spread_deg * (2 * t + 1 - b) / b for t in range(b))
        used = array_response_phases(cfg.geometry, angles)
    else:
        used = dft_matched_phases(n, alloc.flat())
    phases = np.zeros((n, n_rf))
    phases[:, : used.shape[1]] = used
    return phases


def _padding_beams(alloc: GroupBeamAllocation, n_antennas: int, count: int) -> List[int]:
    taken = set(alloc.flat())
    return [b for b in range(n_antennas) if b not in taken][:count]


def _build_network(cfg: ScenarioConfig, series: Series, alloc: GroupBeamAllocation) -> RfNetwork:
    profile = cfg.loss_profile if series.architecture.realistic else BUILTIN_PROFILES["ideal"]
    if series.architecture.rf_architecture is RfArchitecture.BUTLER:
        return butler_rf_matrix(cfg.geometry, alloc.flat(), profile)
    # las cadenas sin haz asignado quedan con F_BB nulo pero cuentan en el combinador
    labels = list(alloc.flat()) + _padding_beams(alloc, cfg.geometry.n_antennas, series.n_rf - alloc.total_beams)
    return compose_fc_abfn(
        cfg.geometry,
        series.n_rf,
        _fc_phases(cfg, alloc, series.n_rf),
        profile,
        beam_indices=labels,
        branch_ratios=cfg.divider_ratios,
    )


def build_context(cfg: ScenarioConfig) -> SimulationContext:
    """Prepara covarianzas, asignaciones y redes de todas las series."""
    covariances = tuple(
        one_ring_covariance(cfg.geometry, g.center_angle_deg, g.angular_spread_deg, cfg.quad_points)
        for g in cfg.groups
    )
    for cov in covariances:
        # fuerza la raíz antes de repartir trabajo: los errores salen aquí
        cov.sqrt_factor
    series = series_for(cfg)
    allocations: Dict[int, GroupBeamAllocation] = {}
    for n_rf in sorted({s.n_rf for s in series if s.architecture is not Architecture.FULLY_DIGITAL}):
        beams = split_beams(cfg, covariances, n_rf)
        groups = [
            (UserGroup(g.center_angle_deg, g.angular_spread_deg, g.n_users, b), cov)
            for g, b, cov in zip(cfg.groups, beams, covariances)
        ]
        allocations[n_rf] = allocate_beams(groups, n_rf)
        logger.debug("N_RF=%d: haces por grupo %s", n_rf, beams)
    networks = {
        s.label: _build_network(cfg, s, allocations[s.n_rf])
        for s in series
        if s.architecture is not Architecture.FULLY_DIGITAL
    }
    return SimulationContext(cfg, covariances, series, allocations, networks)


def _evaluate(context: SimulationContext, index: int, noise: np.ndarray):
    """SE (S×P) y SINR (S×P×K) de una realización; NaN en las series singulares."""
    cfg = context.cfg
    H = sample_group_channels(context.channel_groups, realization_seed(cfg.master_seed, index))
    n_series = len(context.series)
    se = np.full((n_series, noise.size), np.nan)
    sinr = np.full((n_series, noise.size, H.n_users), np.nan)
    errors: List[Optional[SingularConfigurationError]] = [None] * n_series
    for i, s in enumerate(context.series):
        try:
            if s.architecture is Architecture.FULLY_DIGITAL:
                precoders = fully_digital_zf(H)
            else:
                precoders = per_group_zf(H, context.networks[s.label], context.allocations[s.n_rf], joint=cfg.joint_zf)
        except SingularConfigurationError as exc:
            errors[i] = exc.at_realization(index)
            continue
        values = sinr_from_gains(received_gains(H, precoders), noise)
        sinr[i] = values
        se[i] = np.log2(1.0 + values).sum(axis=1)
    return se, sinr, errors


def _run_chunk(args):
    context, start, stop, noise = args
    se_rows, sinr_rows, failures = [], [], {}
    for index in range(start, stop):
        se, sinr, errors = _evaluate(context, index, noise)
        se_rows.append(se)
        sinr_rows.append(sinr)
        for i, err in enumerate(errors):
            if err is not None and i not in failures:
                failures[i] = err
    logger.debug("Bloque [%d, %d) terminado", start, stop)
    return np.stack(se_rows), np.stack(sinr_rows), failures


def _chunks(total: int, workers: int) -> List[Tuple[int, int]]:
    edges = np.linspace(0, total, min(workers, total) + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _simulate(context: SimulationContext, rho_db: Sequence[float], workers: int):
    cfg = context.cfg
    noise = rho_to_noise_variance(rho_db, cfg.n_users)
    tasks = [(context, a, b, noise) for a, b in _chunks(cfg.realizations, max(1, workers))]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    else:
        parts = [_run_chunk(t) for t in tasks]
    se = np.concatenate([p[0] for p in parts])
    sinr = np.concatenate([p[1] for p in parts])
    failures: Dict[int, SingularConfigurationError] = {}
    for _, _, part_failures in parts:
        for i, err in part_failures.items():
            failures.setdefault(i, err)
    return se, sinr, failures


def _point(cfg: ScenarioConfig, s: Series, rho: float, se: np.ndarray, sinr: np.ndarray) -> PointResult:
    realizations = se.size
    mean = float(np.mean(se))
    stderr = float(np.std(se, ddof=1) / math.sqrt(realizations)) if realizations > 1 else 0.0
    mean_sinr = np.mean(sinr, axis=0)
    return PointResult(
        architecture=s.label,
        n_rf=s.n_rf,
        rho_db=float(rho),
        sum_se=mean,
        se_stderr=stderr,
        ee_bits_per_joule=energy_efficiency(mean, cfg.power, s.n_rf),
        mean_sinr_db=tuple(float(v) for v in 10.0 * np.log10(mean_sinr)),
        realizations=realizations,
        seed=cfg.master_seed,
    )


def sweep(cfg: ScenarioConfig, workers: int = 1) -> SweepTable:
    """Recorre arquitecturas × rejilla de ρ.

    Parámetros
    ----------
    cfg : ScenarioConfig
        Escenario validado.
    workers : int, opcional
        Procesos para repartir las realizaciones; no altera los resultados.

    Retorna
    -------
    SweepTable
        Puntos en orden (serie, ρ).  Una serie con alguna realización singular
        se descarta entera y queda en ``failures``.
    """
    table = SweepTable(user_groups=tuple(g for g, group in enumerate(cfg.groups) for _ in range(group.n_users)))
    if not cfg.architectures:
        logger.info("Sin arquitecturas que simular")
        return table
    context = build_context(cfg)
    logger.info(
        "Barrido: %d series × %d valores de ρ × %d realizaciones (%d procesos)",
        len(context.series), len(cfg.rho_grid_db), cfg.realizations, workers,
    )
    se, sinr, failures = _simulate(context, cfg.rho_grid_db, workers)
    for i, s in enumerate(context.series):
        if i in failures:
            table.failures.append((s.label, failures[i]))
            logger.warning("Serie %s descartada: %s", s.label, failures[i])
            continue
        for p, rho in enumerate(cfg.rho_grid_db):
            table.points.append(_point(cfg, s, rho, se[:, i, p], sinr[:, i, p, :]))
    logger.info("Barrido terminado: %d puntos, %d series descartadas", len(table.points), len(table.failures))
    return table


def run_point(
    cfg: ScenarioConfig,
    architecture: Architecture,
    rho_db: float,
    n_rf: Optional[int] = None,
) -> PointResult:
    """Estimación ergódica de un único punto (arquitectura, ρ).

    Lanza
    -----
    SingularConfigurationError
        Con el índice de la primera realización singular.
    """
    architecture = Architecture(architecture)
    n_rf_values = cfg.n_rf_values if n_rf is None else (n_rf,)
    point_cfg = replace(cfg, architectures=(architecture,), n_rf_values=n_rf_values[:1], rho_grid_db=(rho_db,))
    context = build_context(point_cfg)
    se, sinr, failures = _simulate(context, point_cfg.rho_grid_db, 1)
    if failures:
        raise failures[0]
    return _point(point_cfg, context.series[0], rho_db, se[:, 0, 0], sinr[:, 0, 0, :])
