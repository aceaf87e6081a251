"""Consumo de potencia y eficiencia energética de la transmisión.

P_tot = P_out/η + N_RF·P_RF + P_syn y ε = B·S_e/P_tot en bits/Joule.

El consumo del amplificador se mantiene en P_out/η aunque la red analógica
tenga pérdidas: las pérdidas reducen la potencia radiada efectiva (y por
tanto el SINR), no la potencia consumida.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def dbm_to_watts(power_dbm: float) -> float:
    """Convierte dBm a vatios (46 dBm ≈ 39.81 W)."""
    return 10.0 ** ((power_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class PowerModel:
    """Parámetros del modelo de consumo.

    Args:
        pa_output_w: potencia de salida del amplificador P_out (W).
        pa_efficiency: eficiencia η del amplificador, 0 < η ≤ 1.
        per_chain_w: consumo de cada cadena RF P_RF (W).
        synthesizer_w: consumo del sintetizador de frecuencia P_syn (W).
        bandwidth_hz: ancho de banda B (Hz).
    """

    pa_output_w: float = 40.0
    pa_efficiency: float = 0.39
    per_chain_w: float = 1.0
    synthesizer_w: float = 2.0
    bandwidth_hz: float = 2e7

    def __post_init__(self) -> None:
        if not (0.0 < self.pa_efficiency <= 1.0):
            raise ValueError("La eficiencia del amplificador debe estar en (0, 1]")
        for name in ("pa_output_w", "per_chain_w", "synthesizer_w"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"La potencia {name} no puede ser negativa")
        if not self.bandwidth_hz > 0:
            raise ValueError("El ancho de banda debe ser positivo")

    @property
    def pa_consumption_w(self) -> float:
        return self.pa_output_w / self.pa_efficiency


def total_power(n_rf: int, model: PowerModel) -> float:
    """Potencia total consumida P_tot en vatios."""
    if n_rf < 1:
        raise ValueError("Se necesita al menos una cadena RF")
    return model.pa_consumption_w + n_rf * model.per_chain_w + model.synthesizer_w


def energy_efficiency(sum_se_bits_s_hz: float, model: PowerModel, n_rf: int) -> float:
    """Eficiencia energética ε = B·S_e/P_tot en bits/Joule."""
    if sum_se_bits_s_hz < 0:
        raise ValueError("La eficiencia espectral no puede ser negativa")
    return model.bandwidth_hz * sum_se_bits_s_hz / total_power(n_rf, model)
