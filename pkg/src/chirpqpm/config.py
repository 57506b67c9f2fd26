"""Scenario configuration files.

INI-style key/value files with sections ``[scenario]``, ``[crystal]``,
``[grating]``, ``[pump]``, ``[grid]``, ``[cwf]`` and ``[sweep]``.  Lengths
and wavelengths carry a unit suffix (``nm``, ``um``, ``mm``, ``m``);
positions along the crystal may also be given as fractions of its length
(``0.5 L``).  Chirps are in 1/um^2.  See ``presets/fig1.cfg`` for a
complete example.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .biphoton import DEFAULT_POINTS, DEFAULT_WINDOW, FrequencyGrid, PumpEnvelope
from .dispersion import BUILTIN_MODELS, SellmeierModel, model_from_mapping
from .errors import ChirpQPMError, ConfigParseError, ConfigValidationError
from .grating import ChirpedGrating

PRODUCTS = ("jsi", "sps", "cwf", "schmidt", "sweep")

_LENGTH_UNITS = {"nm": 1e-3, "um": 1.0, "µm": 1.0, "mm": 1e3, "m": 1e6}
_TIME_UNITS = {"fs": 1e-15, "ps": 1e-12, "ns": 1e-9, "s": 1.0}
_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _split_list(text):
    return [item.strip() for item in re.split(r"[,;]", text) if item.strip()]


def _number(text, where):
    try:
        return float(text)
    except ValueError:
        raise ConfigParseError(f"{where}: cannot parse number {text!r}") from None


def parse_length(text, where, length=None):
    """'800 nm' -> 0.8 (um); '0.5 L' -> 0.5 * length."""
    m = re.fullmatch(rf"\s*({_NUMBER})\s*([A-Za-zµ]+)\s*", text)
    if not m:
        raise ConfigParseError(f"{where}: expected '<number> <unit>' with a unit suffix, got {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    if unit == "L":
        if length is None:
            raise ConfigParseError(f"{where}: 'L' fractions need the crystal length")
        return value * length
    if unit not in _LENGTH_UNITS:
        raise ConfigParseError(f"{where}: unknown length unit {unit!r}; use one of {sorted(_LENGTH_UNITS)}")
    return value * _LENGTH_UNITS[unit]


def parse_time(text, where):
    m = re.fullmatch(rf"\s*({_NUMBER})\s*([a-z]+)\s*", text)
    if not m or m.group(2) not in _TIME_UNITS:
        raise ConfigParseError(f"{where}: expected a time like '3 ps', got {text!r}")
    return float(m.group(1)) * _TIME_UNITS[m.group(2)]


def parse_chirp(text, where):
    m = re.fullmatch(rf"\s*({_NUMBER})\s*(?:(?:1/um\^?2|um\^?-2|/um\^?2))?\s*", text)
    if not m:
        raise ConfigParseError(f"{where}: cannot parse chirp {text!r} (1/um^2)")
    return float(m.group(1))


def parse_temperature(text, where):
    m = re.fullmatch(rf"\s*({_NUMBER})\s*(?:C|degC|°C)?\s*", text)
    if not m:
        raise ConfigParseError(f"{where}: cannot parse temperature {text!r} (Celsius)")
    return float(m.group(1))


@dataclass
class ScenarioConfig:
    """Fully resolved scenario; all lengths in um, chirps in 1/um^2."""

    name: str
    crystal: SellmeierModel
    lambda_c: float
    length: float
    chirps: tuple = (0.0,)
    rs: tuple = (0.5,)
    order: int = 1
    boundaries: tuple | None = None     # (A, B) override, um
    pump_center: float = 0.8
    pump_fwhm: float = 0.01
    window: tuple = DEFAULT_WINDOW
    n_points: int = DEFAULT_POINTS
    outputs: tuple = ("jsi", "sps")
    output_dir: str | None = None
    jsi_text: bool = False
    cwf_window: float | None = None     # s
    sweep_chirps: tuple | None = None
    sweep_z0: tuple | None = None       # um

    def __post_init__(self):
        self.chirps = tuple(float(d) for d in self.chirps)
        self.rs = tuple(float(r) for r in self.rs)
        self.window = tuple(float(w) for w in self.window)
        self.outputs = tuple(self.outputs)
        if self.boundaries is not None:
            self.boundaries = tuple(float(b) for b in self.boundaries)
        if self.sweep_chirps is not None:
            self.sweep_chirps = tuple(float(d) for d in self.sweep_chirps)
        if self.sweep_z0 is not None:
            self.sweep_z0 = tuple(float(z) for z in self.sweep_z0)

    @property
    def z0_values(self):
        return tuple(r * self.length for r in self.rs)

    def pump(self) -> PumpEnvelope:
        return PumpEnvelope.from_wavelength(self.pump_center, self.pump_fwhm)

    def grid(self) -> FrequencyGrid:
        return FrequencyGrid.from_wavelengths(self.window[0], self.window[1], self.n_points)

    def grating(self, chirp, r) -> ChirpedGrating:
        if self.boundaries is None:
            return ChirpedGrating.centered(self.lambda_c, chirp, self.length, r, self.order)
        a, b = self.boundaries
        return ChirpedGrating(self.lambda_c, chirp, r * self.length, a, b, self.order)

    def points(self):
        return [(d, r) for d in self.chirps for r in self.rs]

    def to_mapping(self) -> dict:
        out = asdict(self)
        out["crystal"] = {
            "model": self.crystal.name,
            "coefficients": list(self.crystal.coefficients),
            "temperature": self.crystal.temperature,
            "valid_range": list(self.crystal.valid_range),
            "form": self.crystal.form,
        }
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out

    @classmethod
    def from_mapping(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        data["crystal"] = model_from_mapping(data["crystal"])
        for key in ("chirps", "rs", "window", "outputs", "boundaries", "sweep_chirps", "sweep_z0"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        cfg = cls(**data)
        validate(cfg)
        return cfg


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    """Check the scenario invariants; raises ConfigValidationError."""

    def need(cond, message):
        if not cond:
            raise ConfigValidationError(message)

    need(cfg.length > 0, f"grating.length must be positive (L > 0), got {cfg.length}")
    need(cfg.lambda_c > 0, f"grating.period must be positive, got {cfg.lambda_c}")
    need(int(cfg.order) == cfg.order and cfg.order >= 1, "grating.order must be a positive integer")
    need(cfg.pump_center > 0, "pump.center must be positive")
    need(cfg.pump_fwhm > 0, "pump.fwhm must be positive")
    need(0 < cfg.window[0] < cfg.window[1], f"grid.window must satisfy 0 < min < max, got {cfg.window}")
    need(cfg.n_points >= 2, "grid.points must be at least 2")
    need(len(cfg.chirps) > 0, "grating.chirp list must be non-empty")
    need(len(cfg.rs) > 0, "grating.r / grating.z0 list must be non-empty")
    need(len(cfg.outputs) > 0, "scenario.outputs must name at least one product")
    for product in cfg.outputs:
        need(product in PRODUCTS, f"unknown output {product!r}; expected one of {PRODUCTS}")
    if "sweep" in cfg.outputs:
        need(bool(cfg.sweep_chirps) or bool(cfg.chirps), "sweep requested but the chirp list is empty")
        need(bool(cfg.sweep_z0) or bool(cfg.rs), "sweep requested but the z0 list is empty")
    if cfg.boundaries is not None:
        need(cfg.boundaries[1] > cfg.boundaries[0], "grating boundaries need B > A")
    need(cfg.cwf_window is None or cfg.cwf_window > 0, "cwf.t_window must be positive")
    lo, hi = cfg.crystal.valid_range
    need(lo <= cfg.pump_center <= hi, f"pump.center {cfg.pump_center} um outside the Sellmeier range {cfg.crystal.valid_range}")
    # every grating in the scenario must be constructible
    for d in set(cfg.chirps) | set(cfg.sweep_chirps or ()):
        for r in set(cfg.rs) | {z / cfg.length for z in (cfg.sweep_z0 or ())}:
            try:
                cfg.grating(d, r)
            except ChirpQPMError as exc:
                raise ConfigValidationError(f"grating D={d}, r={r}: {exc}") from None
    return cfg


def _get(parser, section, key, default=None):
    if parser.has_option(section, key):
        return parser.get(section, key)
    return default


def parse_config(text: str, source="<string>") -> ScenarioConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigParseError(f"{source}: {exc}") from None

    for section in parser.sections():
        if section not in ("scenario", "crystal", "grating", "pump", "grid", "cwf", "sweep"):
            raise ConfigParseError(f"{source}: unknown section [{section}]")
    for section in ("crystal", "grating", "pump"):
        if not parser.has_section(section):
            raise ConfigParseError(f"{source}: missing section [{section}]")

    name = _get(parser, "scenario", "name", Path(source).stem)
    outputs = _split_list(_get(parser, "scenario", "outputs", "jsi, sps"))
    output_dir = _get(parser, "scenario", "output_dir")

    crystal_values = dict(parser.items("crystal"))
    if "temperature" in crystal_values:
        crystal_values["temperature"] = parse_temperature(crystal_values["temperature"], "crystal.temperature")
    if "valid_range" in crystal_values:
        crystal_values["valid_range"] = [
            parse_length(v, "crystal.valid_range") for v in _split_list(crystal_values["valid_range"])
        ]
    try:
        crystal = model_from_mapping(crystal_values)
    except ChirpQPMError as exc:
        raise ConfigValidationError(f"crystal: {exc}") from None

    g = "grating"
    length = parse_length(_get(parser, g, "length", ""), "grating.length")
    lambda_c = parse_length(_get(parser, g, "period", ""), "grating.period")
    chirps = [parse_chirp(v, "grating.chirp") for v in _split_list(_get(parser, g, "chirp", "0"))]
    if parser.has_option(g, "z0") and parser.has_option(g, "r"):
        raise ConfigParseError(f"{source}: give either grating.z0 or grating.r, not both")
    if parser.has_option(g, "z0"):
        rs = [parse_length(v, "grating.z0", length) / length if length else 0.0
              for v in _split_list(parser.get(g, "z0"))]
    else:
        rs = [_number(v, "grating.r") for v in _split_list(_get(parser, g, "r", "0.5"))]
    order = int(_number(_get(parser, g, "order", "1"), "grating.order"))
    boundaries = None
    if parser.has_option(g, "A") or parser.has_option(g, "B"):
        boundaries = (
            parse_length(_get(parser, g, "A", ""), "grating.A", length),
            parse_length(_get(parser, g, "B", ""), "grating.B", length),
        )

    pump_center = parse_length(_get(parser, "pump", "center", ""), "pump.center")
    pump_fwhm = parse_length(_get(parser, "pump", "fwhm", ""), "pump.fwhm")

    window = DEFAULT_WINDOW
    n_points = DEFAULT_POINTS
    if parser.has_section("grid"):
        if parser.has_option("grid", "window"):
            window = tuple(parse_length(v, "grid.window") for v in _split_list(parser.get("grid", "window")))
            if len(window) != 2:
                raise ConfigParseError(f"{source}: grid.window needs exactly two wavelengths")
        n_points = int(_number(_get(parser, "grid", "points", str(DEFAULT_POINTS)), "grid.points"))

    cwf_window = None
    if parser.has_option("cwf", "t_window"):
        cwf_window = parse_time(parser.get("cwf", "t_window"), "cwf.t_window")

    jsi_text = False
    if parser.has_option("scenario", "jsi_text"):
        try:
            jsi_text = parser.getboolean("scenario", "jsi_text")
        except ValueError:
            raise ConfigParseError(f"{source}: scenario.jsi_text must be a boolean") from None

    sweep_chirps = sweep_z0 = None
    if parser.has_section("sweep"):
        if parser.has_option("sweep", "chirps"):
            sweep_chirps = [parse_chirp(v, "sweep.chirps") for v in _split_list(parser.get("sweep", "chirps"))]
        if parser.has_option("sweep", "z0"):
            sweep_z0 = [parse_length(v, "sweep.z0", length) for v in _split_list(parser.get("sweep", "z0"))]

    cfg = ScenarioConfig(
        name=name, crystal=crystal, lambda_c=lambda_c, length=length,
        chirps=tuple(chirps), rs=tuple(rs), order=order, boundaries=boundaries,
        pump_center=pump_center, pump_fwhm=pump_fwhm, window=window, n_points=n_points,
        outputs=tuple(outputs), output_dir=output_dir, jsi_text=jsi_text,
        cwf_window=cwf_window,
        sweep_chirps=None if sweep_chirps is None else tuple(sweep_chirps),
        sweep_z0=None if sweep_z0 is None else tuple(sweep_z0),
    )
    return validate(cfg)


def load_config(path) -> ScenarioConfig:
    """Load and validate a config file, or a bundled preset by name."""
    path = Path(path)
    if not path.exists() and str(path) in list_presets():
        return load_preset(str(path))
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, source=str(path))


def list_presets():
    files = resources.files("chirpqpm").joinpath("presets").iterdir()
    return sorted(p.name[:-4] for p in files if p.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    if name not in list_presets():
        raise ConfigParseError(f"unknown preset {name!r}; available: {list_presets()}")
    return resources.files("chirpqpm").joinpath("presets", f"{name}.cfg").read_text(encoding="utf-8")


def load_preset(name: str) -> ScenarioConfig:
    return parse_config(preset_text(name), source=f"{name}.cfg")


def _fmt(values):
    return ", ".join(repr(float(v)) for v in values)


def to_cfg_text(cfg: ScenarioConfig) -> str:
    """Serialise a resolved scenario back to config syntax (um, 1/um^2)."""
    c = cfg.crystal
    lines = [
        "[scenario]",
        f"name = {cfg.name}",
        f"outputs = {', '.join(cfg.outputs)}",
        f"jsi_text = {'yes' if cfg.jsi_text else 'no'}",
    ]
    if cfg.output_dir is not None:
        lines.append(f"output_dir = {cfg.output_dir}")
    lines += [
        "",
        "[crystal]",
        f"model = {c.name}",
        f"temperature = {c.temperature!r}",
    ]
    if BUILTIN_MODELS.get(c.name) is None or BUILTIN_MODELS[c.name].coefficients != c.coefficients:
        lines += [
            f"form = {c.form}",
            f"coefficients = {_fmt(c.coefficients)}",
            f"valid_range = {c.valid_range[0]!r} um, {c.valid_range[1]!r} um",
        ]
    lines += [
        "",
        "[grating]",
        f"period = {cfg.lambda_c!r} um",
        f"length = {cfg.length!r} um",
        f"chirp = {_fmt(cfg.chirps)}",
        f"r = {_fmt(cfg.rs)}",
        f"order = {cfg.order}",
    ]
    if cfg.boundaries is not None:
        lines += [f"A = {cfg.boundaries[0]!r} um", f"B = {cfg.boundaries[1]!r} um"]
    lines += [
        "",
        "[pump]",
        f"center = {cfg.pump_center!r} um",
        f"fwhm = {cfg.pump_fwhm!r} um",
        "",
        "[grid]",
        f"window = {cfg.window[0]!r} um, {cfg.window[1]!r} um",
        f"points = {cfg.n_points}",
    ]
    if cfg.cwf_window is not None:
        lines += ["", "[cwf]", f"t_window = {cfg.cwf_window!r} s"]
    if cfg.sweep_chirps is not None or cfg.sweep_z0 is not None:
        lines += ["", "[sweep]"]
        if cfg.sweep_chirps is not None:
            lines.append(f"chirps = {_fmt(cfg.sweep_chirps)}")
        if cfg.sweep_z0 is not None:
            lines.append("z0 = " + ", ".join(f"{z!r} um" for z in cfg.sweep_z0))
    return "\n".join(lines) + "\n"
