"""Run-configuration files.

Configs are INI-style files with ``[suite]``, ``[noise]`` and optional
``[sweep]``, ``[metrics]`` and ``[output]`` sections. Every dimensional
value carries a unit suffix::

    [suite]
    lengths = 1, 2, 4, 8, 16
    t_m = 0.71us
    t_g = 35.5ns

    [noise]
    scenario = zz_relaxation
    nu = 50kHz
    ancilla_T1 = 10us

Frequencies are converted to angular frequencies in rad/us
(``50kHz -> 2*pi*0.05``), times to us, and angles to radians.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .noise import SCENARIOS, NoiseModel, NoiseParameterError, build_noise_model
from .protocols import DEFAULT_SEED, SuiteConfig

TIME_UNITS = {"s": 1e6, "ms": 1e3, "us": 1.0, "µs": 1.0, "ns": 1e-3}
FREQ_UNITS = {"hz": 2 * math.pi * 1e-6, "khz": 2 * math.pi * 1e-3, "mhz": 2 * math.pi, "ghz": 2 * math.pi * 1e3,
              "rad/us": 1.0}
ANGLE_UNITS = {"rad": 1.0, "pi": math.pi, "deg": math.pi / 180}

TIME_KEYS = {"t_g", "t_m", "control_T1", "control_T2", "ancilla_T1", "ancilla_T2"}
FREQ_KEYS = {"nu", "J", "delta"}
ANGLE_KEYS = {"phi", "theta"}
PLAIN_KEYS = {"gate_eta", "eta", "p_m", "prep_flip", "delta_over_J", "eps_irb"}

SUITE_KEYS = {"lengths", "num_sequences", "shots", "t_g", "t_m", "control_init", "ancilla_init", "seed",
              "twirl_exact", "max_length"}
NOISE_KEYS = {"scenario"} | (TIME_KEYS - {"t_g", "t_m"}) | FREQ_KEYS | ANGLE_KEYS | PLAIN_KEYS - {"eps_irb"}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s\d].*)?$")


class ConfigError(Exception):
    """Invalid configuration, with the file location when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = f"{path}:{line}: " if path and line else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.path = path
        self.line = line


def parse_quantity(key: str, text: str) -> float:
    """Parse ``text`` as the value of ``key``, converting units.

    Raises:
        ValueError: on a malformed number, a missing or wrong unit, or a unit
            given for a dimensionless key.
    """
    m = _NUMBER.match(text)
    if not m:
        raise ValueError(f"{key}: cannot parse {text.strip()!r} as a number")
    value, unit = float(m.group(1)), (m.group(2) or "").strip()
    if key in TIME_KEYS:
        table, kind = TIME_UNITS, "time"
    elif key in FREQ_KEYS:
        table, kind = FREQ_UNITS, "frequency"
    elif key in ANGLE_KEYS:
        table, kind = ANGLE_UNITS, "angle"
    else:
        if unit:
            raise ValueError(f"{key} is dimensionless, got unit {unit!r}")
        return value
    if not unit:
        raise ValueError(f"{key} needs a {kind} unit ({', '.join(table)}); bare numbers are ambiguous")
    factor = table.get(unit) if kind == "time" else table.get(unit.lower())
    if factor is None:
        raise ValueError(f"{key}: unknown {kind} unit {unit!r}; expected one of {', '.join(table)}")
    return value * factor


def parse_list(key: str, text: str) -> list[float]:
    items = [t for t in re.split(r"[,\s]+", text.strip()) if t]
    if not items:
        raise ValueError(f"{key}: empty list")
    return [parse_quantity(key, t) for t in items]


@dataclass
class RunConfig:
    suite: SuiteConfig
    scenario: str
    noise_params: dict
    sweep_parameter: str | None = None
    sweep_values: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    output_format: str = "csv"
    path: Path | None = None

    def noise_model(self, **overrides) -> NoiseModel:
        params = dict(self.noise_params, t_m=self.suite.t_m, **overrides)
        return build_noise_model(self.scenario, params)


def _line_index(text: str) -> dict:
    """Map (section, key) to its 1-based line number."""
    where, section = {}, None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
        elif "=" in line and not line.startswith(("#", ";")):
            where[(section, line.split("=", 1)[0].strip())] = i
    return where


BUNDLED_DIR = Path(__file__).parent / "configs"


def bundled_configs() -> list[str]:
    return sorted(p.stem for p in BUNDLED_DIR.glob("*.ini"))


def resolve_config_path(path) -> Path:
    """Return ``path`` if it exists, else the bundled config of that name."""
    path = Path(path)
    if path.exists():
        return path
    bundled = BUNDLED_DIR / (path.name if path.suffix == ".ini" else path.name + ".ini")
    return bundled if bundled.exists() else path


def load_config(path, seed: int | None = None, shots: int | None = None) -> RunConfig:
    """Read and validate a run configuration.

    ``path`` may also name a bundled config (see :func:`bundled_configs`).
    ``seed`` and ``shots`` override the file values when given.

    Raises:
        ConfigError: with file and line of the offending entry.
    """
    path = resolve_config_path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from exc
    return parse_config(text, path, seed=seed, shots=shots)


def parse_config(text: str, path=None, seed: int | None = None, shots: int | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc.message.splitlines()[0]}", path,
                          getattr(exc, "lineno", None)) from exc
    lines = _line_index(text)

    def fail(section, key, msg):
        raise ConfigError(msg, path, lines.get((section, key)))

    for section in cp.sections():
        if section not in ("suite", "noise", "sweep", "metrics", "output"):
            raise ConfigError(f"unknown section [{section}]", path)
    if not cp.has_section("noise"):
        raise ConfigError("missing [noise] section", path)

    suite_kw = {}
    if cp.has_section("suite"):
        for key, raw in cp.items("suite"):
            if key not in SUITE_KEYS:
                fail("suite", key, f"unknown key {key!r} in [suite]")
            try:
                if key == "lengths":
                    suite_kw[key] = [_as_int(key, v) for v in parse_list(key, raw)]
                elif key in ("num_sequences", "shots", "seed", "max_length"):
                    suite_kw[key] = _as_int(key, parse_quantity(key, raw))
                elif key in ("control_init", "ancilla_init"):
                    suite_kw[key] = raw.strip()
                elif key == "twirl_exact":
                    suite_kw[key] = cp.getboolean("suite", key)
                else:
                    suite_kw[key] = parse_quantity(key, raw)
            except ValueError as exc:
                fail("suite", key, str(exc))
    if seed is not None:
        suite_kw["seed"] = seed
    suite_kw.setdefault("seed", DEFAULT_SEED)
    if shots is not None:
        suite_kw["shots"] = shots
    try:
        suite = SuiteConfig(**suite_kw)
    except ValueError as exc:
        raise ConfigError(f"[suite]: {exc}", path) from exc

    params = {}
    scenario = cp.get("noise", "scenario", fallback=None)
    if scenario is None:
        raise ConfigError("[noise] needs a 'scenario' key", path)
    if scenario not in SCENARIOS:
        fail("noise", "scenario", f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIOS)}")
    for key, raw in cp.items("noise"):
        if key == "scenario":
            continue
        if key not in NOISE_KEYS:
            fail("noise", key, f"unknown key {key!r} in [noise]")
        try:
            params[key] = parse_quantity(key, raw)
        except ValueError as exc:
            fail("noise", key, str(exc))

    sweep_parameter, sweep_values = None, []
    if cp.has_section("sweep"):
        sweep_parameter = cp.get("sweep", "parameter", fallback=None)
        if sweep_parameter is None or sweep_parameter not in NOISE_KEYS - {"scenario"}:
            fail("sweep", "parameter", f"[sweep] parameter must be a noise key, got {sweep_parameter!r}")
        if not cp.has_option("sweep", "values"):
            raise ConfigError("[sweep] needs a 'values' list", path)
        try:
            sweep_values = parse_list(sweep_parameter, cp.get("sweep", "values"))
        except ValueError as exc:
            fail("sweep", "values", str(exc))

    metrics = {}
    if cp.has_section("metrics"):
        for key, raw in cp.items("metrics"):
            try:
                if key == "delta_over_J":
                    metrics[key] = parse_list(key, raw)
                elif key == "eps_irb":
                    metrics[key] = parse_quantity(key, raw)
                else:
                    fail("metrics", key, f"unknown key {key!r} in [metrics]")
            except ValueError as exc:
                fail("metrics", key, str(exc))

    fmt = cp.get("output", "format", fallback="csv") if cp.has_section("output") else "csv"
    if fmt not in ("csv", "json"):
        fail("output", "format", f"format must be csv or json, got {fmt!r}")

    cfg = RunConfig(suite, scenario, params, sweep_parameter, sweep_values, metrics, fmt,
                    Path(path) if path else None)
    try:
        cfg.noise_model(**({sweep_parameter: sweep_values[0]} if sweep_parameter else {}))
    except NoiseParameterError as exc:
        raise ConfigError(f"[noise]: {exc}", path) from exc
    return cfg


def _as_int(key: str, value: float) -> int:
    if value != int(value):
        raise ValueError(f"{key} must be an integer, got {value}")
    return int(value)
