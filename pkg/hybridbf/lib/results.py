"""Escritura de resultados y manifiesto de ejecución.

Una ejecución deja en su directorio de salida:

* ``manifest.yml``: ruta del escenario, directorio, versión, fecha y el
  escenario resuelto (se escribe antes que los resultados y basta para
  repetir la ejecución).
* ``results.csv``: una fila por punto (serie, ρ).
* ``se_vs_rho.csv`` y ``ee_vs_rho.csv``: una columna por serie, listas para
  dibujar.
* ``sinr_per_user.csv``: SINR medio por usuario en dB.

Todos los números se imprimen con 9 cifras significativas.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import yaml

from .. import __version__
from .exceptions import ConfigError
from .scenario import ScenarioConfig, FieldReader, build_config, config_to_dict, load_document
from .simulation import SweepTable

logger = logging.getLogger(__name__)

RESULTS_HEADER = ["architecture", "rho_db", "sum_se_bits_s_hz", "se_stderr", "ee_bits_per_joule", "realizations", "seed"]
SINR_HEADER = ["architecture", "rho_db", "user", "group", "mean_sinr_db"]
MANIFEST_NAME = "manifest.yml"


def fmt(value: float) -> str:
    return f"{value:.9g}"


@dataclass(frozen=True)
class RunManifest:
    """Metadatos de una ejecución junto con el escenario resuelto."""

    config_path: str
    out_dir: str
    version: str
    timestamp: str
    scenario: ScenarioConfig

    @classmethod
    def create(cls, config_path, out_dir, scenario: ScenarioConfig) -> "RunManifest":
        return cls(
            config_path=str(config_path),
            out_dir=str(out_dir),
            version=__version__,
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            scenario=scenario,
        )

    def to_yaml(self) -> str:
        data = {
            "config_path": self.config_path,
            "out_dir": self.out_dir,
            "version": self.version,
            "timestamp": self.timestamp,
            "scenario": config_to_dict(self.scenario),
        }
        return yaml.safe_dump(data, sort_keys=False, allow_unicode=True)


def is_manifest(data) -> bool:
    return isinstance(data, dict) and "scenario" in data


def parse_manifest(text: str) -> RunManifest:
    """Lee un manifiesto previo; el escenario se valida como cualquier otro."""
    data, lines = load_document(text)
    if not is_manifest(data):
        raise ConfigError("El documento no es un manifiesto (falta la clave 'scenario')", line=1)
    scenario = build_config(data["scenario"], FieldReader(lines, prefix="scenario"))
    return RunManifest(
        config_path=str(data.get("config_path", "")),
        out_dir=str(data.get("out_dir", "")),
        version=str(data.get("version", "")),
        timestamp=str(data.get("timestamp", "")),
        scenario=scenario,
    )


def write_manifest(manifest: RunManifest, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / MANIFEST_NAME
    path.write_text(manifest.to_yaml(), encoding="utf-8")
    logger.info("Manifiesto escrito en %s", path)
    return path


def _wide(table: SweepTable, attr: str) -> Tuple[List[str], List[List[str]]]:
    labels = table.series_labels()
    rhos: List[float] = []
    values: Dict[Tuple[str, float], float] = {}
    for p in table.points:
        if p.rho_db not in rhos:
            rhos.append(p.rho_db)
        values[(p.architecture, p.rho_db)] = getattr(p, attr)
    rows = [[fmt(rho)] + [fmt(values[(label, rho)]) if (label, rho) in values else "" for label in labels]
            for rho in rhos]
    return ["rho_db"] + labels, rows


def _write_csv(path: Path, header: List[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def emit_results(table: SweepTable, out_dir) -> List[Path]:
    """Escribe los CSV de resultados en ``out_dir``.

    Parámetros
    ----------
    table : SweepTable
        Tabla del barrido (puede estar vacía: sólo cabeceras).
    out_dir : str o Path
        Directorio de salida; se crea si no existe.

    Retorna
    -------
    List[Path]
        Ficheros escritos.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    path = out / "results.csv"
    _write_csv(path, RESULTS_HEADER, (
        [p.architecture, fmt(p.rho_db), fmt(p.sum_se), fmt(p.se_stderr), fmt(p.ee_bits_per_joule),
         str(p.realizations), str(p.seed)]
        for p in table.points
    ))
    written.append(path)

    for name, attr in (("se_vs_rho.csv", "sum_se"), ("ee_vs_rho.csv", "ee_bits_per_joule")):
        header, rows = _wide(table, attr)
        path = out / name
        _write_csv(path, header, rows)
        written.append(path)

    path = out / "sinr_per_user.csv"
    _write_csv(path, SINR_HEADER, (
        [p.architecture, fmt(p.rho_db), str(k), str(table.user_groups[k]) if k < len(table.user_groups) else "",
         fmt(v)]
        for p in table.points
        for k, v in enumerate(p.mean_sinr_db)
    ))
    written.append(path)

    for path in written:
        logger.info("Escrito %s", path)
    return written


def read_results(path) -> List[Dict[str, str]]:
    """Lee un ``results.csv`` como lista de filas (diccionarios de texto)."""
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def default_out_dir(config_path, base: Optional[Path] = None) -> Path:
    """``data/traces/<nombre del escenario>``."""
    base = Path("data/traces") if base is None else Path(base)
    return base / Path(config_path).stem
