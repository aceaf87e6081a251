"""Escenarios de simulación: definición, lectura YAML y serialización.

Un escenario reúne la geometría del array, los grupos de usuarios, las
arquitecturas a comparar, el perfil de pérdidas, el modelo de potencia y la
rejilla del barrido.  Se describe en un documento YAML con secciones planas::

    geometry:
      n_antennas: 64            # obligatorio
      spacing_wavelengths: 0.5
      angle_reference: endfire  # endfire (cos θ) | broadside (sin θ)
    rf:
      n_rf: 32                  # obligatorio; entero o lista (barrido en N_RF)
      loss_profile: sub5ghz     # ideal | sub5ghz | mmwave | mapa de pérdidas en dB
      fc_phase_design: dft      # dft | array_response
      divider_ratios: null      # N pesos positivos (reparto asimétrico)
    groups:                     # obligatorio, al menos un grupo
      - center_angle_deg: -45   # obligatorio
        angular_spread_deg: 15
        n_users: 4              # obligatorio
        n_beams: 10             # opcional; sin él se reparte N_RF automáticamente
    precoding:
      joint_zf: false
    power:
      pa_output_w: 40           # o pa_output_dbm (excluyentes)
      pa_efficiency: 0.39
      per_chain_w: 1.0
      synthesizer_w: 2.0
      bandwidth_hz: 2.0e+7
    sweep:
      architectures: [fully_digital, fc_ideal, fc_realistic, butler_ideal, butler_realistic]
      rho_db: [0, 5, 10, 15, 20, 25, 30]   # lista o {start, stop, step}
      realizations: 1000
      master_seed: 1
      quad_points: 512

Las claves desconocidas son errores.  Todos los errores de validación se
lanzan como ``ConfigError`` con el campo (``groups[1].n_beams``) y la línea
del documento cuando se conoce.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .butler import is_power_of_two
from .channel_model import ANGLE_REFERENCES, DEFAULT_QUAD_POINTS, MIN_QUAD_POINTS, ArrayGeometry
from .exceptions import ConfigError
from .power_metrics import PowerModel, dbm_to_watts
from .rf_network import BUILTIN_PROFILES, BandTag, LossProfile, RfArchitecture, get_profile


class Architecture(str, enum.Enum):
    """Sistemas comparados en un barrido."""

    FULLY_DIGITAL = "fully_digital"
    FC_IDEAL = "fc_ideal"
    FC_REALISTIC = "fc_realistic"
    BUTLER_IDEAL = "butler_ideal"
    BUTLER_REALISTIC = "butler_realistic"

    @property
    def rf_architecture(self) -> RfArchitecture:
        if self in (Architecture.FC_IDEAL, Architecture.FC_REALISTIC):
            return RfArchitecture.FULLY_CONNECTED
        if self in (Architecture.BUTLER_IDEAL, Architecture.BUTLER_REALISTIC):
            return RfArchitecture.BUTLER
        return RfArchitecture.IDENTITY

    @property
    def realistic(self) -> bool:
        return self in (Architecture.FC_REALISTIC, Architecture.BUTLER_REALISTIC)


ALL_ARCHITECTURES: Tuple[Architecture, ...] = tuple(Architecture)
DEFAULT_RHO_GRID_DB: Tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
DEFAULT_SPREAD_DEG = 15.0
DEFAULT_REALIZATIONS = 1000
DEFAULT_MASTER_SEED = 1
PHASE_DESIGNS = ("dft", "array_response")

_SECTIONS = {
    "geometry": ("n_antennas", "spacing_wavelengths", "angle_reference"),
    "rf": ("n_rf", "loss_profile", "fc_phase_design", "divider_ratios"),
    "groups": None,
    "precoding": ("joint_zf",),
    "power": ("pa_output_w", "pa_output_dbm", "pa_efficiency", "per_chain_w", "synthesizer_w", "bandwidth_hz"),
    "sweep": ("architectures", "rho_db", "realizations", "master_seed", "quad_points"),
}
_GROUP_KEYS = ("center_angle_deg", "angular_spread_deg", "n_users", "n_beams")
_LOSS_KEYS = ("divider_combiner_db", "hybrid_coupler_db", "variable_phase_shifter_db", "fixed_phase_shifter_db")
_RANGE_KEYS = ("start", "stop", "step")


@dataclass(frozen=True)
class GroupSpec:
    """Grupo tal como aparece en el escenario (b_g opcional)."""

    center_angle_deg: float
    n_users: int
    angular_spread_deg: float = DEFAULT_SPREAD_DEG
    n_beams: Optional[int] = None


@dataclass(frozen=True)
class ScenarioConfig:
    """Escenario completo y validado."""

    geometry: ArrayGeometry
    n_rf_values: Tuple[int, ...]
    groups: Tuple[GroupSpec, ...]
    architectures: Tuple[Architecture, ...] = ALL_ARCHITECTURES
    loss_profile: LossProfile = field(default_factory=lambda: BUILTIN_PROFILES["sub5ghz"])
    fc_phase_design: str = "dft"
    divider_ratios: Optional[Tuple[float, ...]] = None
    joint_zf: bool = False
    rho_grid_db: Tuple[float, ...] = DEFAULT_RHO_GRID_DB
    realizations: int = DEFAULT_REALIZATIONS
    master_seed: int = DEFAULT_MASTER_SEED
    quad_points: int = DEFAULT_QUAD_POINTS
    power: PowerModel = field(default_factory=PowerModel)

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_rf_values", tuple(self.n_rf_values))
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "architectures", tuple(Architecture(a) for a in self.architectures))
        object.__setattr__(self, "rho_grid_db", tuple(float(r) for r in self.rho_grid_db))
        if self.divider_ratios is not None:
            object.__setattr__(self, "divider_ratios", tuple(float(p) for p in self.divider_ratios))
        _validate(self)

    @property
    def n_users(self) -> int:
        return sum(g.n_users for g in self.groups)

    @property
    def explicit_beams(self) -> bool:
        return all(g.n_beams is not None for g in self.groups)

    def with_overrides(self, master_seed: Optional[int] = None, realizations: Optional[int] = None) -> "ScenarioConfig":
        """Copia del escenario con semilla o número de realizaciones sustituidos."""
        changes: Dict[str, Any] = {}
        if master_seed is not None:
            changes["master_seed"] = master_seed
        if realizations is not None:
            changes["realizations"] = realizations
        return replace(self, **changes) if changes else self


def _validate(cfg: ScenarioConfig) -> None:
    n = cfg.geometry.n_antennas
    if not cfg.groups:
        raise ConfigError("Se necesita al menos un grupo de usuarios", field="groups")
    for i, g in enumerate(cfg.groups):
        if not math.isfinite(g.center_angle_deg):
            raise ConfigError("El ángulo central debe ser finito", field=f"groups[{i}].center_angle_deg")
        if not (0.0 < g.angular_spread_deg < 90.0):
            raise ConfigError("La dispersión angular debe cumplir 0 < Δ < 90", field=f"groups[{i}].angular_spread_deg")
        if g.n_users < 1:
            raise ConfigError("El grupo necesita al menos un usuario", field=f"groups[{i}].n_users")
        if g.n_beams is not None and g.n_beams < g.n_users:
            raise ConfigError("b_g debe ser al menos K_g para que ZF sea factible", field=f"groups[{i}].n_beams")
    given = [g.n_beams is not None for g in cfg.groups]
    if any(given) and not all(given):
        raise ConfigError("n_beams debe fijarse en todos los grupos o en ninguno", field="groups")
    if not cfg.n_rf_values:
        raise ConfigError("Se necesita al menos un valor de N_RF", field="rf.n_rf")
    if len(set(cfg.n_rf_values)) != len(cfg.n_rf_values):
        raise ConfigError("Los valores de N_RF no pueden repetirse", field="rf.n_rf")
    if all(given) and len(cfg.n_rf_values) > 1:
        raise ConfigError("Con varios N_RF los haces se reparten automáticamente: quite n_beams", field="groups")
    k = cfg.n_users
    for n_rf in cfg.n_rf_values:
        if not (k <= n_rf <= n):
            raise ConfigError(f"Se requiere K = {k} ≤ N_RF = {n_rf} ≤ N = {n}", field="rf.n_rf")
        if all(given):
            total = sum(g.n_beams for g in cfg.groups)
            if total > n_rf:
                raise ConfigError(f"Σ b_g = {total} supera N_RF = {n_rf}", field="groups")
    if cfg.fc_phase_design not in PHASE_DESIGNS:
        raise ConfigError(f"Diseño de fases desconocido: {cfg.fc_phase_design}", field="rf.fc_phase_design")
    if cfg.divider_ratios is not None:
        if len(cfg.divider_ratios) != n or any(not (p > 0 and math.isfinite(p)) for p in cfg.divider_ratios):
            raise ConfigError("divider_ratios necesita N valores positivos", field="rf.divider_ratios")
    if any(a.rf_architecture is RfArchitecture.BUTLER for a in cfg.architectures) and not is_power_of_two(n):
        raise ConfigError("La Butler requiere N potencia de dos", field="geometry.n_antennas")
    if len(set(cfg.architectures)) != len(cfg.architectures):
        raise ConfigError("Las arquitecturas no pueden repetirse", field="sweep.architectures")
    if not cfg.rho_grid_db or any(not math.isfinite(r) for r in cfg.rho_grid_db):
        raise ConfigError("La rejilla de ρ debe ser no vacía y finita", field="sweep.rho_db")
    if cfg.realizations < 1:
        raise ConfigError("Se necesita al menos una realización", field="sweep.realizations")
    if not (0 <= cfg.master_seed < 2 ** 64):
        raise ConfigError("La semilla maestra debe ser un entero de 64 bits sin signo", field="sweep.master_seed")
    if cfg.quad_points < MIN_QUAD_POINTS:
        raise ConfigError(f"quad_points debe ser ≥ {MIN_QUAD_POINTS}", field="sweep.quad_points")


# ---------------------------------------------------------------------------
# Lectura del documento
# ---------------------------------------------------------------------------

class ScenarioLoader(yaml.SafeLoader):
    """SafeLoader que además lee como float los exponentes sin signo (``2e7``).

    El resolvedor YAML 1.1 de PyYAML exige ``2.0e+7``; sin esta regla ``2e7``
    llegaría como texto.
    """


ScenarioLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*(?:\.[0-9_]*)?|\.[0-9_]+)[eE][-+]?[0-9]+$"),
    list("-+0123456789."),
)


def _line_index(node: yaml.Node, path: str, out: Dict[str, int]) -> None:
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            child = f"{path}.{key_node.value}" if path else str(key_node.value)
            out.setdefault(child, key_node.start_mark.line + 1)
            _line_index(value_node, child, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _line_index(item, f"{path}[{i}]", out)


class FieldReader:
    """Convierte valores YAML en tipos del escenario con errores atribuidos."""

    def __init__(self, lines: Dict[str, int], prefix: str = ""):
        self.lines = lines
        self.prefix = prefix

    def path(self, field_name: str) -> str:
        if not self.prefix:
            return field_name
        return f"{self.prefix}.{field_name}" if field_name else self.prefix

    def line_of(self, path: str) -> Optional[int]:
        while path:
            if path in self.lines:
                return self.lines[path]
            cut = max(path.rfind("."), path.rfind("["))
            path = path[:cut] if cut > 0 else ""
        return self.lines.get("")

    def error(self, field_name: str, message: str) -> ConfigError:
        full = self.path(field_name)
        return ConfigError(message, field=full, line=self.line_of(full))

    def mapping(self, value: Any, field_name: str, allowed) -> Dict[str, Any]:
        if value is None:
            return {}
        if not isinstance(value, dict):
            raise self.error(field_name, "se esperaba una sección clave: valor")
        for key in value:
            if key not in allowed:
                child = f"{field_name}.{key}" if field_name else str(key)
                raise self.error(child, f"clave desconocida '{key}'")
        return value

    def integer(self, value: Any, field_name: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.error(field_name, f"se esperaba un entero, se obtuvo {value!r}")
        return int(value)

    def number(self, value: Any, field_name: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(field_name, f"se esperaba un número, se obtuvo {value!r}")
        return float(value)

    def boolean(self, value: Any, field_name: str) -> bool:
        if not isinstance(value, bool):
            raise self.error(field_name, f"se esperaba true/false, se obtuvo {value!r}")
        return value

    def text(self, value: Any, field_name: str, choices) -> str:
        if not isinstance(value, str) or value not in choices:
            raise self.error(field_name, f"valor {value!r} no válido; opciones: {', '.join(choices)}")
        return value

    def required(self, section: Dict[str, Any], key: str, field_name: str) -> Any:
        if key not in section or section[key] is None:
            raise self.error(field_name, "campo obligatorio ausente")
        return section[key]


def _read_loss_profile(reader: FieldReader, value: Any) -> LossProfile:
    if value is None:
        return BUILTIN_PROFILES["sub5ghz"]
    if isinstance(value, str):
        try:
            return get_profile(value)
        except ValueError:
            raise reader.error("rf.loss_profile", f"perfil desconocido '{value}'; opciones: {', '.join(BUILTIN_PROFILES)}") from None
    section = reader.mapping(value, "rf.loss_profile", _LOSS_KEYS)
    values = {key: reader.number(reader.required(section, key, f"rf.loss_profile.{key}"), f"rf.loss_profile.{key}")
              for key in _LOSS_KEYS}
    try:
        return LossProfile(band_tag=BandTag.CUSTOM, **values)
    except ValueError as exc:
        raise reader.error("rf.loss_profile", str(exc)) from None


def _read_rho_grid(reader: FieldReader, value: Any) -> Tuple[float, ...]:
    if value is None:
        return DEFAULT_RHO_GRID_DB
    if isinstance(value, dict):
        section = reader.mapping(value, "sweep.rho_db", _RANGE_KEYS)
        start, stop, step = (reader.number(reader.required(section, k, f"sweep.rho_db.{k}"), f"sweep.rho_db.{k}")
                             for k in _RANGE_KEYS)
        if step <= 0 or stop < start:
            raise reader.error("sweep.rho_db", "se requiere step > 0 y stop ≥ start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(count))
    if not isinstance(value, list):
        raise reader.error("sweep.rho_db", "se esperaba una lista de valores en dB")
    return tuple(reader.number(v, f"sweep.rho_db[{i}]") for i, v in enumerate(value))


def _read_groups(reader: FieldReader, value: Any) -> Tuple[GroupSpec, ...]:
    if not isinstance(value, list) or not value:
        raise reader.error("groups", "se esperaba una lista no vacía de grupos")
    groups: List[GroupSpec] = []
    for i, item in enumerate(value):
        base = f"groups[{i}]"
        section = reader.mapping(item, base, _GROUP_KEYS)
        n_beams = section.get("n_beams")
        groups.append(GroupSpec(
            center_angle_deg=reader.number(reader.required(section, "center_angle_deg", f"{base}.center_angle_deg"),
                                           f"{base}.center_angle_deg"),
            n_users=reader.integer(reader.required(section, "n_users", f"{base}.n_users"), f"{base}.n_users"),
            angular_spread_deg=reader.number(section.get("angular_spread_deg", DEFAULT_SPREAD_DEG),
                                             f"{base}.angular_spread_deg"),
            n_beams=None if n_beams is None else reader.integer(n_beams, f"{base}.n_beams"),
        ))
    return tuple(groups)


def _read_power(reader: FieldReader, section: Dict[str, Any]) -> PowerModel:
    if "pa_output_w" in section and "pa_output_dbm" in section:
        raise reader.error("power.pa_output_dbm", "pa_output_w y pa_output_dbm son excluyentes")
    defaults = PowerModel()
    kwargs = {}
    for key in ("pa_output_w", "pa_efficiency", "per_chain_w", "synthesizer_w", "bandwidth_hz"):
        kwargs[key] = reader.number(section.get(key, getattr(defaults, key)), f"power.{key}")
    if "pa_output_dbm" in section:
        kwargs["pa_output_w"] = dbm_to_watts(reader.number(section["pa_output_dbm"], "power.pa_output_dbm"))
    try:
        return PowerModel(**kwargs)
    except ValueError as exc:
        raise reader.error("power", str(exc)) from None


def build_config(data: Any, reader: FieldReader) -> ScenarioConfig:
    """Construye un ScenarioConfig a partir del documento ya cargado."""
    root = reader.mapping(data, "", tuple(_SECTIONS))
    geo = reader.mapping(root.get("geometry"), "geometry", _SECTIONS["geometry"])
    rf = reader.mapping(root.get("rf"), "rf", _SECTIONS["rf"])
    pre = reader.mapping(root.get("precoding"), "precoding", _SECTIONS["precoding"])
    power = reader.mapping(root.get("power"), "power", _SECTIONS["power"])
    sweep = reader.mapping(root.get("sweep"), "sweep", _SECTIONS["sweep"])

    try:
        geometry = ArrayGeometry(
            n_antennas=reader.integer(reader.required(geo, "n_antennas", "geometry.n_antennas"), "geometry.n_antennas"),
            spacing_wavelengths=reader.number(geo.get("spacing_wavelengths", 0.5), "geometry.spacing_wavelengths"),
            angle_reference=reader.text(geo.get("angle_reference", "endfire"), "geometry.angle_reference",
                                        ANGLE_REFERENCES),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise reader.error("geometry", str(exc)) from None

    n_rf_raw = reader.required(rf, "n_rf", "rf.n_rf")
    if isinstance(n_rf_raw, list):
        n_rf_values = tuple(reader.integer(v, f"rf.n_rf[{i}]") for i, v in enumerate(n_rf_raw))
    else:
        n_rf_values = (reader.integer(n_rf_raw, "rf.n_rf"),)

    ratios = rf.get("divider_ratios")
    if ratios is not None:
        if not isinstance(ratios, list):
            raise reader.error("rf.divider_ratios", "se esperaba una lista de N pesos")
        ratios = tuple(reader.number(v, f"rf.divider_ratios[{i}]") for i, v in enumerate(ratios))

    architectures = sweep.get("architectures")
    if architectures is None:
        architectures = [a.value for a in ALL_ARCHITECTURES]
    if not isinstance(architectures, list):
        raise reader.error("sweep.architectures", "se esperaba una lista de arquitecturas")
    choices = [a.value for a in Architecture]
    archs = tuple(Architecture(reader.text(a, f"sweep.architectures[{i}]", choices)) for i, a in enumerate(architectures))

    kwargs = dict(
        geometry=geometry,
        n_rf_values=n_rf_values,
        groups=_read_groups(reader, root.get("groups")),
        architectures=archs,
        loss_profile=_read_loss_profile(reader, rf.get("loss_profile")),
        fc_phase_design=reader.text(rf.get("fc_phase_design", "dft"), "rf.fc_phase_design", PHASE_DESIGNS),
        divider_ratios=ratios,
        joint_zf=reader.boolean(pre.get("joint_zf", False), "precoding.joint_zf"),
        rho_grid_db=_read_rho_grid(reader, sweep.get("rho_db")),
        realizations=reader.integer(sweep.get("realizations", DEFAULT_REALIZATIONS), "sweep.realizations"),
        master_seed=reader.integer(sweep.get("master_seed", DEFAULT_MASTER_SEED), "sweep.master_seed"),
        quad_points=reader.integer(sweep.get("quad_points", DEFAULT_QUAD_POINTS), "sweep.quad_points"),
        power=_read_power(reader, power),
    )
    try:
        return ScenarioConfig(**kwargs)
    except ConfigError as exc:
        raise reader.error(exc.field or "", exc.message) from None


def load_document(text: str) -> Tuple[Any, Dict[str, int]]:
    """Carga un documento YAML y el índice campo → línea."""
    try:
        loader = ScenarioLoader(text)
        try:
            node = loader.get_single_node()
        finally:
            loader.dispose()
        data = yaml.load(text, Loader=ScenarioLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML inválido: {getattr(exc, 'problem', exc)}",
                          line=None if mark is None else mark.line + 1) from None
    lines: Dict[str, int] = {}
    if node is not None:
        _line_index(node, "", lines)
    return data, lines


def parse_config(text: str) -> ScenarioConfig:
    """Lee y valida un escenario YAML aplicando los valores por defecto.

    Parámetros
    ----------
    text : str
        Documento YAML en UTF‑8.

    Retorna
    -------
    ScenarioConfig
        Escenario validado.

    Lanza
    -----
    ConfigError
        Con campo y línea si el documento no es válido o es infactible.
    """
    data, lines = load_document(text)
    if data is None:
        raise ConfigError("El escenario está vacío", line=1)
    return build_config(data, FieldReader(lines))


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as f:
        return parse_config(f.read())


def config_to_dict(cfg: ScenarioConfig) -> Dict[str, Any]:
    """Escenario resuelto como diccionario serializable (todas las claves explícitas)."""
    profile: Any
    if cfg.loss_profile.band_tag is BandTag.CUSTOM:
        profile = {key: getattr(cfg.loss_profile, key) for key in _LOSS_KEYS}
    else:
        profile = cfg.loss_profile.band_tag.value
    n_rf: Any = cfg.n_rf_values[0] if len(cfg.n_rf_values) == 1 else list(cfg.n_rf_values)
    return {
        "geometry": {
            "n_antennas": cfg.geometry.n_antennas,
            "spacing_wavelengths": cfg.geometry.spacing_wavelengths,
            "angle_reference": cfg.geometry.angle_reference,
        },
        "rf": {
            "n_rf": n_rf,
            "loss_profile": profile,
            "fc_phase_design": cfg.fc_phase_design,
            "divider_ratios": None if cfg.divider_ratios is None else list(cfg.divider_ratios),
        },
        "groups": [
            {
                "center_angle_deg": g.center_angle_deg,
                "angular_spread_deg": g.angular_spread_deg,
                "n_users": g.n_users,
                "n_beams": g.n_beams,
            }
            for g in cfg.groups
        ],
        "precoding": {"joint_zf": cfg.joint_zf},
        "power": {
            "pa_output_w": cfg.power.pa_output_w,
            "pa_efficiency": cfg.power.pa_efficiency,
            "per_chain_w": cfg.power.per_chain_w,
            "synthesizer_w": cfg.power.synthesizer_w,
            "bandwidth_hz": cfg.power.bandwidth_hz,
        },
        "sweep": {
            "architectures": [a.value for a in cfg.architectures],
            "rho_db": list(cfg.rho_grid_db),
            "realizations": cfg.realizations,
            "master_seed": cfg.master_seed,
            "quad_points": cfg.quad_points,
        },
    }


def serialize_config(cfg: ScenarioConfig) -> str:
    """Documento YAML equivalente al escenario (parse ∘ serialize = identidad)."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, allow_unicode=True)
