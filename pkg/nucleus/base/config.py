import argparse
import math
import os
from typing import Any, Dict, Literal, Optional, Tuple

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from nucleus.experiments.runner import RunSettings
from nucleus.pulses.engine import SpinSystem
from nucleus.sequence.compiler import ShapedDefaults

# Two protons with a 7.2 Hz coupling and 763 Hz between their lines, the transmitter
# placed midway.
PRESETS: Dict[str, Dict[str, Any]] = {
    "paper": {
        "spin.nu_I": 381.5,
        "spin.nu_S": -381.5,
        "spin.J": 7.2,
        "spin.T2star": 0.3,
    }
}


class ConfigError(ValueError):
    """A rejected configuration, pinned to a line of the config file when it came from one."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.message = message
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class SpinConfig(_Section):
    nu_I: float = 381.5
    nu_S: float = -381.5
    J: float = 7.2
    T2star: float = Field(default=0.3, gt=0)


class AcquisitionConfig(_Section):
    points: int = Field(default=4096, ge=2)
    # None means auto: a spectral width of 4 x max(|nu_I|, |nu_S|, J).
    dwell: Optional[float] = Field(default=None, gt=0)

    @field_validator("points")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError(f"points must be a power of two, got {value}")
        return value

    @field_validator("dwell", mode="before")
    @classmethod
    def _auto(cls, value):
        return None if isinstance(value, str) and value.strip().lower() == "auto" else value


class ShapedConfig(_Section):
    shape: Literal["gaussian", "rectangular"] = "gaussian"
    duration: float = Field(default=6e-3, gt=0)
    truncation: float = Field(default=0.01, gt=0, lt=1)
    slices: int = Field(default=512, ge=32)


class ExperimentConfig(_Section):
    mode: Literal["ideal", "shaped"] = "ideal"
    relaxation: bool = False
    explicit_readout: bool = False
    oracle: Literal["merged", "abstract"] = "merged"
    workers: int = Field(default=4, ge=1)


class Config(_Section):
    """Everything a run needs; every field has a default."""

    spin: SpinConfig = SpinConfig()
    acquisition: AcquisitionConfig = AcquisitionConfig()
    shaped: ShapedConfig = ShapedConfig()
    experiment: ExperimentConfig = ExperimentConfig()
    # Recorded only; the rotating-frame simulation never uses the carrier.
    spectrometer_mhz: float = 500.0

    def spin_system(self) -> SpinSystem:
        return SpinSystem(**self.spin.model_dump())

    def shaped_defaults(self) -> ShapedDefaults:
        return ShapedDefaults(**self.shaped.model_dump())

    def run_settings(self) -> RunSettings:
        return RunSettings(
            shaped=self.shaped_defaults(),
            relaxation=self.experiment.relaxation,
            explicit_readout=self.experiment.explicit_readout,
            oracle=self.experiment.oracle,
            points=self.acquisition.points,
            dwell=self.acquisition.dwell,
            workers=self.experiment.workers,
        )

    @classmethod
    def from_flat(cls, values: Dict[str, Any], lines: Optional[Dict[str, int]] = None) -> "Config":
        """Build from dotted keys ("spin.J": 7.2).

        Raises:
            ConfigError: Carrying the line of the offending key when `lines` has it.
        """
        lines = lines or {}
        nested: Dict[str, Any] = {}
        for key, value in values.items():
            if key not in CONFIG_KEYS:
                raise ConfigError(f"unknown key {key!r}", lines.get(key))
            section, _, name = key.rpartition(".")
            (nested.setdefault(section, {}) if section else nested)[name] = value
        try:
            return cls(**nested)
        except ValidationError as e:
            error = e.errors()[0]
            key = ".".join(str(part) for part in error["loc"])
            raise ConfigError(f"{key}: {error['msg']}", lines.get(key)) from None


def _keys(model, prefix: str = "") -> Tuple[str, ...]:
    keys = []
    for name, field in model.model_fields.items():
        if isinstance(field.default, BaseModel):
            keys.extend(_keys(type(field.default), f"{prefix}{name}."))
        else:
            keys.append(f"{prefix}{name}")
    return tuple(keys)


CONFIG_KEYS = _keys(Config)


def read_config_file(filepath: str) -> Tuple[Dict[str, str], Dict[str, int]]:
    """Parse a flat `key = value` file with '#' comments.

    Returns:
        Tuple[Dict[str, str], Dict[str, int]]: The raw values and the 1-based line of each key.

    Raises:
        ConfigError: On a line that is not UTF-8, a malformed line, an unknown key or a key
            given twice.
    """
    values: Dict[str, str] = {}
    lines: Dict[str, int] = {}
    with open(filepath, "rb") as file:
        for number, encoded in enumerate(file, start=1):
            try:
                raw = encoded.decode("utf-8-sig" if number == 1 else "utf-8")
            except UnicodeDecodeError as e:
                raise ConfigError(f"not UTF-8 text at byte {e.start}", number) from e
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            key, sep, value = (part.strip() for part in text.partition("="))
            if not sep or not key or not value:
                raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", number)
            if key not in CONFIG_KEYS:
                raise ConfigError(f"unknown key {key!r}", number)
            if key in values:
                raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", number)
            values[key], lines[key] = value, number
    return values, lines


def load_config(
    config_path: Optional[str] = None,
    preset: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> Config:
    """Defaults < preset < config file < explicit overrides."""
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}, expected one of {sorted(PRESETS)}")
        values.update(PRESETS[preset])
    if config_path is not None:
        if not os.path.exists(config_path):
            raise ConfigError(f"config file {config_path!r} not found")
        file_values, lines = read_config_file(config_path)
        values.update(file_values)
    for key, value in (overrides or {}).items():
        values[key] = value
        lines.pop(key, None)
    return Config.from_flat(values, lines)


def config_from_args(args: argparse.Namespace) -> Config:
    overrides = {
        key: getattr(args, key) for key in CONFIG_KEYS if getattr(args, key, None) is not None
    }
    if getattr(args, "mode", None) is not None:
        overrides["experiment.mode"] = args.mode
    return load_config(args.config, args.preset, overrides)


def check_config(cls, config: Config, out_dir: str, save_events: bool = False) -> Optional[int]:
    r"""Validates the run environment and sets up the events log; returns its sink id."""
    if math.isinf(config.spin.T2star):
        logger.info("T2star is infinite: lines will not decay")

    full_path = os.path.expanduser(out_dir)
    if not os.path.exists(full_path):
        os.makedirs(full_path, exist_ok=True)

    if not save_events:
        return None

    # Add custom event logger for the events.
    if "EVENTS" not in logger._core.levels:
        logger.level("EVENTS", no=38, icon="📝")
    return logger.add(
        os.path.join(full_path, "events.log"),
        serialize=False,
        enqueue=True,
        backtrace=True,
        diagnose=False,
        level="TRACE",
        format="{time:YYYY-MM-DD at HH:mm:ss} | {level} | {message}",
    )


_FLAG_TYPES = {bool: "flag", int: int, float: float}


def add_args(cls, parser: argparse.ArgumentParser):
    """
    Adds the dotted configuration flags shared by every subcommand.
    """

    parser.add_argument("--config", type=str, help="Flat key = value config file.", default=None)
    parser.add_argument(
        "--preset", type=str, choices=sorted(PRESETS), help="Named parameter set.", default=None
    )
    parser.add_argument("--out", type=str, help="Output directory.", default="out")

    for key in CONFIG_KEYS:
        section, _, name = key.rpartition(".")
        model = Config.model_fields[section].default if section else Config()
        annotation = type(model).model_fields[name].annotation
        kind = _FLAG_TYPES.get(annotation, str)
        if kind == "flag":
            parser.add_argument(
                f"--{key}",
                action=argparse.BooleanOptionalAction,
                help=f"Override {key}.",
                default=None,
            )
        else:
            parser.add_argument(f"--{key}", type=kind, help=f"Override {key}.", default=None)

    parser.add_argument(
        "--logging.debug",
        action="store_true",
        help="Log numerical detail (calibration iterations, slice counts).",
        default=False,
    )

    parser.add_argument(
        "--logging.save_events",
        action="store_true",
        help="If set, events are also written to events.log in the output directory.",
        default=False,
    )


def add_run_args(cls, parser: argparse.ArgumentParser):
    """Add experiment specific arguments to the parser."""

    parser.add_argument(
        "--kind",
        type=str,
        choices=["classical0", "classical1", "deutsch", "all"],
        help="Experiment family.",
        default="all",
    )
    parser.add_argument(
        "--function",
        type=str,
        choices=["f00", "f01", "f10", "f11", "all"],
        help="Oracle function.",
        default="all",
    )
    parser.add_argument("--mode", type=str, choices=["ideal", "shaped"], default=None)
    parser.add_argument(
        "--fid",
        action="store_true",
        help="Also write the time-domain signal of every cell.",
        default=False,
    )


def add_compile_args(cls, parser: argparse.ArgumentParser):
    """Add sequence compilation specific arguments to the parser."""

    parser.add_argument("seq_file", type=str, help="A .pseq sequence file.")
    parser.add_argument(
        "--check",
        type=str,
        help="Builtin name, identity, or a JSON matrix file with real and imag parts.",
        default=None,
    )
    parser.add_argument("--mode", type=str, choices=["ideal", "shaped"], default=None)
    parser.add_argument(
        "--composite_z",
        action="store_true",
        help="Realise z-rotations as 90_y, theta_x, 90_-y pulse triples.",
        default=False,
    )


def add_pulse_report_args(cls, parser: argparse.ArgumentParser):
    """Add pulse report specific arguments to the parser."""

    parser.add_argument("--spin", type=str, choices=["I", "S"], default="I")
    parser.add_argument("--flip", type=float, help="Flip angle in degrees.", default=90.0)
    parser.add_argument("--phase", type=float, help="RF phase in degrees.", default=90.0)
