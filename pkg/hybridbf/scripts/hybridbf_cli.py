#!/usr/bin/env python3
"""
CLI del simulador de precodificación híbrida.

Subcomandos:

* ``run <escenario>``: ejecuta el barrido Monte Carlo descrito en un
  escenario YAML (o en un ``manifest.yml`` de una ejecución anterior) y
  escribe los CSV en ``data/traces/<escenario>/`` o en ``--out``.  Con
  ``--dry-run`` sólo valida el escenario y muestra el plan.
* ``lossbudget <escenario>``: tabla de pérdidas estática y dinámica de cada
  arquitectura.
* ``butler-check <N>``: comprueba que la factorización por etapas de la
  Butler reproduce la DFT unitaria.

Opciones globales:
  --log-level Nivel de log (INFO, DEBUG, ...).

Ejemplos::

    python3 -m hybridbf.scripts.hybridbf_cli run hybridbf/etc/n64_three_groups.yml --workers 4
    python3 -m hybridbf.scripts.hybridbf_cli lossbudget hybridbf/etc/n64_three_groups.yml
    python3 -m hybridbf.scripts.hybridbf_cli butler-check 32
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from ..lib import results as rs
from ..lib import scenario as sc
from ..lib import simulation as sim
from ..lib.butler import factorization_error
from ..lib.exceptions import ConfigError, HybridSimError
from ..lib.rf_network import BUILTIN_PROFILES, loss_budget

# Error máximo admitido entre el producto de etapas y la DFT
BUTLER_TOLERANCE = 1e-10


def configure_logging(level: str) -> None:
    numeric = getattr(logging, level.upper(), logging.INFO)
    logging.basicConfig(level=numeric, format="%(levelname)s: %(message)s")


def load_scenario(path: str) -> sc.ScenarioConfig:
    """Lee un escenario o un manifiesto de ejecución."""
    text = Path(path).read_text(encoding="utf-8")
    data, _ = sc.load_document(text)
    if rs.is_manifest(data):
        logging.info("%s es un manifiesto; se reutiliza su escenario resuelto", path)
        return rs.parse_manifest(text).scenario
    return sc.parse_config(text)


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_scenario(args.config).with_overrides(master_seed=args.seed, realizations=args.realizations)
    out_dir = Path(args.out) if args.out else rs.default_out_dir(args.config)
    if args.dry_run:
        context = sim.build_context(cfg) if cfg.architectures else None
        print(f"Escenario: N={cfg.geometry.n_antennas}, K={cfg.n_users}, N_RF={list(cfg.n_rf_values)}")
        print(f"ρ (dB): {list(cfg.rho_grid_db)}; realizaciones: {cfg.realizations}; semilla: {cfg.master_seed}")
        if context is not None:
            for n_rf, alloc in context.allocations.items():
                print(f"N_RF={n_rf}: haces por grupo {[len(b) for b in alloc.beams]}")
            print("Series: " + ", ".join(s.label for s in context.series))
        print(f"[dry-run] No se escribe nada; la salida iría a {out_dir}")
        return 0
    rs.write_manifest(rs.RunManifest.create(args.config, out_dir, cfg), out_dir)
    table = sim.sweep(cfg, workers=args.workers)
    rs.emit_results(table, out_dir)
    print(f"{len(table.points)} puntos escritos en {out_dir}")
    if table.failures:
        for label, err in table.failures:
            logging.error("Serie %s descartada: %s", label, err)
        return 3
    return 0


def cmd_lossbudget(args: argparse.Namespace) -> int:
    cfg = load_scenario(args.config)
    n = cfg.geometry.n_antennas
    print(f"Presupuesto de pérdidas (N={n}, perfil {cfg.loss_profile.band_tag.value})")
    print(f"{'arquitectura':<24}{'N_RF':>6}{'estática dB':>14}{'dinámica dB':>14}{'compensación dB':>18}")
    for arch in cfg.architectures:
        n_rf_values = (n,) if arch is sc.Architecture.FULLY_DIGITAL else cfg.n_rf_values
        profile = cfg.loss_profile if arch.realistic else BUILTIN_PROFILES["ideal"]
        for n_rf in n_rf_values:
            budget = loss_budget(profile, arch.rf_architecture, n, n_rf)
            print(f"{arch.value:<24}{n_rf:>6}{budget.static_db:>14.2f}{budget.dynamic_db:>14.2f}"
                  f"{budget.compensation_db:>18.2f}")
    return 0


def cmd_butler_check(args: argparse.Namespace) -> int:
    error = factorization_error(args.n)
    ok = error < BUTLER_TOLERANCE
    print(f"Butler {args.n}×{args.n}: error máximo {error:.3e} ({'OK' if ok else 'FALLO'})")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Simulador de precodificación híbrida con redes RF realistas",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Nivel de detalle del registro",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    p_run = subparsers.add_parser("run", help="Ejecuta el barrido de un escenario")
    p_run.add_argument("config", help="Escenario YAML o manifest.yml")
    p_run.add_argument("--out", help="Directorio de salida (por defecto data/traces/<escenario>)")
    p_run.add_argument("--seed", type=int, help="Sustituye la semilla maestra")
    p_run.add_argument("--realizations", type=int, help="Sustituye el número de realizaciones")
    p_run.add_argument("--workers", type=int, default=1, help="Procesos en paralelo (no cambia los resultados)")
    p_run.add_argument("--dry-run", action="store_true", help="Valida y muestra el plan sin escribir ficheros")
    p_run.set_defaults(func=cmd_run)

    p_loss = subparsers.add_parser("lossbudget", help="Tabla de pérdidas por arquitectura")
    p_loss.add_argument("config", help="Escenario YAML")
    p_loss.set_defaults(func=cmd_lossbudget)

    p_butler = subparsers.add_parser("butler-check", help="Verifica la factorización de la Butler")
    p_butler.add_argument("n", type=int, help="Tamaño N (potencia de dos)")
    p_butler.set_defaults(func=cmd_butler_check)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    if getattr(args, "workers", 1) < 1:
        logging.error("--workers debe ser al menos 1")
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        logging.error("%s", exc)
        return 2
    except HybridSimError as exc:
        logging.error("%s", exc)
        return 1
    except (OSError, ValueError) as exc:
        logging.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
