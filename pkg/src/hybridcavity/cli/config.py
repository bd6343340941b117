"""Run configuration: a flat ``block.key = <JSON value>`` text format.

Each key carries its unit in its name (``_um``, ``_nm``, ``_ppm``, ``_deg``,
``_ghz``). Lines starting with ``#`` and blank lines are ignored::

    cavity.t_d_um = 4.0
    cavity.t_a_um = "resonant"
    cavity.min_air_gap_um = 2.0
    mirrors.air_dbr_pairs = 11
    mirrors.diamond_transmission_ppm = 630
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

from ..fom import MAX_QUADRATURE

DIAMOND_LIKE = "diamond-like"
AIR_LIKE = "air-like"


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(key)
        prefix = f"{': '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class CavityConfig:
    t_d_um: float | None = None
    t_a_um: float | str = "resonant"
    m: int | None = None
    min_air_gap_um: float | None = None
    lambda0_nm: float = 637.0
    n_d: float = 2.41
    ar_coated: bool = False
    ar_index: float | None = None
    mode: str | None = None
    sigma_da_nm: tuple[float, ...] = (0.0,)


@dataclass(frozen=True)
class MirrorsConfig:
    n_high: float = 2.14
    n_low: float = 1.48
    termination: str = "high"
    exterior_index: float = 1.0
    air_dbr_pairs: int | None = None
    air_transmission_ppm: float | None = None
    air_parasitic_ppm: float = 0.0
    diamond_dbr_pairs: int | None = None
    diamond_transmission_ppm: float | None = None
    diamond_parasitic_ppm: float = 0.0


@dataclass(frozen=True)
class DimpleConfig:
    roc_um: float = 25.0
    depth_um: float | None = None
    diameter_um: float | None = None
    fiber_diameter_um: float = 125.0
    tilt_deg: float = 0.0
    fiber_mfr_um: float = 2.5
    n_fiber: float = 1.45


@dataclass(frozen=True)
class EmitterConfig:
    beta0: float = 0.03
    xi: float = 1.0


@dataclass(frozen=True)
class VibrationConfig:
    sigma_vib_nm: float = 0.1
    quadrature_points: int = 41


@dataclass(frozen=True)
class SweepConfig:
    variable: str | None = None
    start: float | None = None
    stop: float | None = None
    steps: int = 1

    def values(self) -> list[float]:
        if self.variable is None:
            return []
        if self.steps == 1 or self.start == self.stop:
            return [self.start]
        h = (self.stop - self.start) / (self.steps - 1)
        return [self.start + i * h for i in range(self.steps)]


@dataclass(frozen=True)
class OptimizeConfig:
    T_min_ppm: float = 10.0
    T_max_ppm: float = 20000.0
    grid_points: int = 61
    modes: tuple[str, ...] = (DIAMOND_LIKE, AIR_LIKE)
    extra_unwanted_ppm: float = 0.0
    mode_matching: float = 1.0
    t_o_ppm: float | None = None


@dataclass(frozen=True)
class ProfileConfig:
    grid_step_nm: float | None = None
    scan_halfwidth_ghz: float | None = None


BLOCKS = {
    "cavity": CavityConfig,
    "mirrors": MirrorsConfig,
    "dimple": DimpleConfig,
    "emitter": EmitterConfig,
    "vibration": VibrationConfig,
    "sweep": SweepConfig,
    "optimize": OptimizeConfig,
    "profile": ProfileConfig,
}


@dataclass(frozen=True)
class RunConfig:
    cavity: CavityConfig = field(default_factory=CavityConfig)
    mirrors: MirrorsConfig = field(default_factory=MirrorsConfig)
    dimple: DimpleConfig = field(default_factory=DimpleConfig)
    emitter: EmitterConfig = field(default_factory=EmitterConfig)
    vibration: VibrationConfig = field(default_factory=VibrationConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    optimize: OptimizeConfig = field(default_factory=OptimizeConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    def to_flat(self) -> dict:
        """Every non-null setting as ``{"block.key": value}``, sorted."""
        flat = {}
        for block in BLOCKS:
            for key, value in asdict(getattr(self, block)).items():
                if value is None:
                    continue
                flat[f"{block}.{key}"] = list(value) if isinstance(value, tuple) else value
        return dict(sorted(flat.items()))

    def to_text(self) -> str:
        return "".join(f"{k} = {json.dumps(v)}\n" for k, v in self.to_flat().items())

    def line_of(self, key: str) -> int | None:
        return self.lines.get(key)

    def error(self, key: str, message: str) -> ConfigError:
        return ConfigError(message, self.line_of(key), key)


# --------------------------------------------------------------------------
# parsing


def _annotation(block_cls, name):
    for f in fields(block_cls):
        if f.name == name:
            return f.type
    return None


def _coerce(value, annotation: str, key: str, line: int):
    def bad(expected):
        return ConfigError(f"expected {expected}, got {json.dumps(value)}", line, key)

    def number(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise bad("a finite number")
        return float(v)

    optional = annotation.endswith("| None")
    if value is None:
        if optional:
            return None
        raise bad("a value")
    base = annotation.replace(" | None", "")
    if base == "float":
        return number(value)
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise bad("an integer")
        return value
    if base == "bool":
        if not isinstance(value, bool):
            raise bad("true or false")
        return value
    if base == "str":
        if not isinstance(value, str):
            raise bad("a string")
        return value
    if base == "float | str":
        return value if isinstance(value, str) else number(value)
    if base == "tuple[float, ...]":
        items = value if isinstance(value, list) else [value]
        return tuple(number(v) for v in items)
    if base == "tuple[str, ...]":
        items = value if isinstance(value, list) else [value]
        if not all(isinstance(v, str) for v in items):
            raise bad("a list of strings")
        return tuple(items)
    raise AssertionError(annotation)


def parse_flat(text: str) -> tuple[dict, dict]:
    """Split config text into ``({key: raw_value}, {key: line})``."""
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, rhs = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError("expected 'block.key = value'", lineno)
        if key in values:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", lineno, key)
        try:
            values[key] = json.loads(rhs)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"value is not valid JSON ({exc.msg})", lineno, key) from None
        lines[key] = lineno
    return values, lines


def build_config(values: dict, lines: dict | None = None) -> RunConfig:
    lines = lines or {}
    grouped = {block: {} for block in BLOCKS}
    for key, value in values.items():
        line = lines.get(key)
        block, _, name = key.partition(".")
        if block not in BLOCKS:
            raise ConfigError(f"unknown block {block!r}", line, key)
        annotation = _annotation(BLOCKS[block], name)
        if annotation is None:
            raise ConfigError("unknown key", line, key)
        grouped[block][name] = _coerce(value, annotation, key, line)
    cfg = RunConfig(**{b: BLOCKS[b](**kw) for b, kw in grouped.items()}, lines=dict(lines))
    validate(cfg)
    return cfg


def loads(text: str) -> RunConfig:
    return build_config(*parse_flat(text))


def load(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return loads(text)


# --------------------------------------------------------------------------
# validation


def _positive(cfg, key, value, allow_zero=False):
    if value is not None and (value < 0 or (value == 0 and not allow_zero)):
        raise cfg.error(key, "must be " + ("non-negative" if allow_zero else "positive"))


def validate(cfg: RunConfig) -> None:
    c = cfg.cavity
    if isinstance(c.t_a_um, str):
        if c.t_a_um != "resonant":
            raise cfg.error("cavity.t_a_um", 'must be a number or "resonant"')
        if c.m is not None and c.min_air_gap_um is not None:
            raise cfg.error("cavity.m", "give either cavity.m or cavity.min_air_gap_um, not both")
    else:
        _positive(cfg, "cavity.t_a_um", c.t_a_um)
        for key in ("m", "min_air_gap_um", "mode"):
            if getattr(c, key) is not None:
                raise cfg.error(f"cavity.{key}", "only valid with cavity.t_a_um = \"resonant\"")
    _positive(cfg, "cavity.t_d_um", c.t_d_um, allow_zero=True)
    _positive(cfg, "cavity.min_air_gap_um", c.min_air_gap_um, allow_zero=True)
    _positive(cfg, "cavity.lambda0_nm", c.lambda0_nm)
    if c.m is not None and c.m < 0:
        raise cfg.error("cavity.m", "must be >= 0")
    if c.n_d < 1:
        raise cfg.error("cavity.n_d", "must be >= 1")
    if c.ar_index is not None and c.ar_index < 1:
        raise cfg.error("cavity.ar_index", "must be >= 1")
    if c.mode not in (None, DIAMOND_LIKE, AIR_LIKE):
        raise cfg.error("cavity.mode", f'must be "{DIAMOND_LIKE}" or "{AIR_LIKE}"')
    if not c.sigma_da_nm or any(s < 0 for s in c.sigma_da_nm):
        raise cfg.error("cavity.sigma_da_nm", "needs one or more non-negative values")

    mi = cfg.mirrors
    if mi.termination not in ("high", "low"):
        raise cfg.error("mirrors.termination", 'must be "high" or "low"')
    for key in ("n_high", "n_low", "exterior_index"):
        if getattr(mi, key) < 1:
            raise cfg.error(f"mirrors.{key}", "must be >= 1")
    for side in ("air", "diamond"):
        pairs = getattr(mi, f"{side}_dbr_pairs")
        trans = getattr(mi, f"{side}_transmission_ppm")
        if pairs is not None and trans is not None:
            raise cfg.error(f"mirrors.{side}_transmission_ppm", f"{side} mirror given both as DBR and as transmission")
        if pairs is not None and pairs < 1:
            raise cfg.error(f"mirrors.{side}_dbr_pairs", "must be >= 1")
        if trans is not None and not 0 < trans < 1e6:
            raise cfg.error(f"mirrors.{side}_transmission_ppm", "must lie in (0, 1e6)")
        _positive(cfg, f"mirrors.{side}_parasitic_ppm", getattr(mi, f"{side}_parasitic_ppm"), allow_zero=True)

    d = cfg.dimple
    _positive(cfg, "dimple.roc_um", d.roc_um)
    if d.depth_um is not None and d.diameter_um is not None:
        raise cfg.error("dimple.diameter_um", "give either dimple.depth_um or dimple.diameter_um, not both")
    for key in ("depth_um", "diameter_um", "fiber_mfr_um", "n_fiber"):
        _positive(cfg, f"dimple.{key}", getattr(d, key))
    _positive(cfg, "dimple.fiber_diameter_um", d.fiber_diameter_um, allow_zero=True)

    e = cfg.emitter
    if not 0 < e.beta0 < 1:
        raise cfg.error("emitter.beta0", "must lie in (0, 1)")
    if not 0 <= e.xi <= 1:
        raise cfg.error("emitter.xi", "must lie in [0, 1]")

    v = cfg.vibration
    _positive(cfg, "vibration.sigma_vib_nm", v.sigma_vib_nm, allow_zero=True)
    if not 21 <= v.quadrature_points <= MAX_QUADRATURE or v.quadrature_points % 2 == 0:
        raise cfg.error("vibration.quadrature_points", f"must be odd and in [21, {MAX_QUADRATURE}]")

    s = cfg.sweep
    if s.variable is not None:
        if s.start is None or s.stop is None:
            raise cfg.error("sweep.variable", "sweep needs sweep.start and sweep.stop")
        if s.steps < 1:
            raise cfg.error("sweep.steps", "must be >= 1")
    elif s.start is not None or s.stop is not None:
        raise cfg.error("sweep.start", "sweep.variable is missing")

    o = cfg.optimize
    if not 0 < o.T_min_ppm < o.T_max_ppm <= 1e5:
        raise cfg.error("optimize.T_max_ppm", "need 0 < T_min_ppm < T_max_ppm <= 1e5")
    if o.grid_points < 5:
        raise cfg.error("optimize.grid_points", "must be >= 5")
    for mode in o.modes:
        if mode not in (DIAMOND_LIKE, AIR_LIKE):
            raise cfg.error("optimize.modes", f"unknown mode {mode!r}")
    _positive(cfg, "optimize.extra_unwanted_ppm", o.extra_unwanted_ppm, allow_zero=True)
    if not 0 < o.mode_matching <= 1:
        raise cfg.error("optimize.mode_matching", "must lie in (0, 1]")
    _positive(cfg, "optimize.t_o_ppm", o.t_o_ppm)

    _positive(cfg, "profile.grid_step_nm", cfg.profile.grid_step_nm)
    _positive(cfg, "profile.scan_halfwidth_ghz", cfg.profile.scan_halfwidth_ghz)
