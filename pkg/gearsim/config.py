# gearsim/config.py
import json
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from gearsim.errors import ConfigError, StorageError
from gearsim.schemas.fault import FaultSpec, Healthy, InvoluteDestruction, Pitting, ToothBreakage
from gearsim.schemas.run_config import Preset, RunConfig
from gearsim.services.logger import AppLogger

logger = AppLogger.get_logger(__name__)

PRESET_DIR = Path(__file__).parent / "presets"
DEFAULT_OUTPUT_DIR = "gearsim_output"


def _preset_key(name: str) -> str:
    return name.strip().lower().replace("-", "_")


def available_presets() -> List[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.json"))


@lru_cache(maxsize=None)
def load_preset(name: str) -> Preset:
    """Shipped experimental setup by name; hyphens and underscores are interchangeable."""
    key = _preset_key(name)
    path = PRESET_DIR / f"{key}.json"
    if not path.exists():
        raise ConfigError(f"unknown preset '{name}'; available: {', '.join(available_presets())}")
    try:
        with open(path, encoding="utf-8") as handle:
            return Preset.model_validate(json.load(handle))
    except ValidationError as e:
        logger.error(f"Shipped preset {path.name} is invalid", exc_info=True)
        raise ConfigError(f"preset '{name}' is invalid: {e}") from e


def read_config_file(path: Path) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
    except OSError as e:
        raise StorageError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(payload, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    # a simulation manifest carries its full config echo
    if "config" in payload and "profile_error_hash" in payload:
        return payload["config"]
    return payload


def _value(text: str, what: str, cast=float):
    try:
        return cast(text)
    except ValueError as e:
        raise ConfigError(f"bad {what} '{text}' in fault description") from e


def _indices(text: str) -> List[int]:
    return [_value(t, "tooth index", int) for t in text.split(",") if t]


def parse_fault(text: str) -> FaultSpec:
    """healthy | breakage:F[:tooth=I][:wheel=W] | pitting:DEPTH_MM[:pos=P][:axial=A][:radial=R][:teeth=I,J][:wheel=W]
    | involute:AMP_UM[:teeth=I,J][:wheel=W]"""
    parts = [p.strip() for p in text.strip().split(":")]
    kind, args = parts[0].lower(), parts[1:]
    if kind == "healthy":
        if args:
            raise ConfigError("'healthy' takes no arguments")
        return Healthy()
    if not args:
        raise ConfigError(f"fault '{kind}' needs a severity value")
    severity, options = args[0], {}
    for item in args[1:]:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"fault option '{item}' must look like key=value")
        options[key.strip().lower()] = val.strip()

    def take(allowed) -> Dict[str, str]:
        unknown = sorted(set(options) - set(allowed))
        if unknown:
            raise ConfigError(f"unknown options {unknown} for fault '{kind}'")
        return options

    try:
        if kind == "breakage":
            opts = take(("tooth", "wheel"))
            fields: Dict[str, Any] = {"tip_loss_fraction": _value(severity, "tip loss fraction")}
            if "tooth" in opts:
                fields["tooth_index"] = _value(opts["tooth"], "tooth index", int)
            if "wheel" in opts:
                fields["wheel"] = opts["wheel"]
            return ToothBreakage(**fields)
        if kind == "pitting":
            opts = take(("pos", "axial", "radial", "teeth", "wheel"))
            fields = {
                "pit_depth_mm": _value(severity, "pit depth"),
                "axial_extent_fraction": _value(opts.get("axial", "0.5"), "axial extent"),
                "tooth_indices": _indices(opts.get("teeth", "0")),
            }
            if "pos" in opts:
                fields["flank_position"] = _value(opts["pos"], "flank position")
            if "radial" in opts:
                fields["radial_extent_fraction"] = _value(opts["radial"], "radial extent")
            if "wheel" in opts:
                fields["wheel"] = opts["wheel"]
            return Pitting(**fields)
        if kind == "involute":
            opts = take(("teeth", "wheel"))
            fields = {
                "deviation_amplitude_um": _value(severity, "deviation amplitude"),
                "tooth_indices": _indices(opts.get("teeth", "0")),
            }
            if "wheel" in opts:
                fields["wheel"] = opts["wheel"]
            return InvoluteDestruction(**fields)
    except ValidationError as e:
        raise ConfigError(f"invalid fault '{text}': {e.errors()[0]['msg']}") from e
    raise ConfigError(f"unknown fault kind '{kind}'; use healthy, breakage, pitting or involute")


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_run_config(config_path: Optional[Path] = None, preset: Optional[str] = None,
                    overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Config file (or manifest) or preset, with command-line overrides applied on top.

    Raises pydantic's ValidationError for schema violations.
    """
    if config_path is not None and preset is not None:
        raise ConfigError("give either a config file or a preset, not both")
    if config_path is not None:
        payload = read_config_file(Path(config_path))
    elif preset is not None:
        payload = load_preset(preset).config.model_dump(mode="json")
    else:
        raise ConfigError("a config file or a preset is required")
    if overrides:
        overrides = dict(overrides)
        fault = overrides.pop("fault", None)
        payload = _merge(payload, overrides)
        if fault is not None:
            payload["fault"] = fault
    return RunConfig.model_validate(payload)


def cli_overrides(fault: Optional[str] = None, seed: Optional[int] = None,
                  profile_error_seed: Optional[int] = None, duration: Optional[float] = None,
                  din_grade: Optional[int] = None, noise_std: Optional[float] = None) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    if fault is not None:
        out["fault"] = parse_fault(fault).model_dump(mode="json")
    if seed is not None:
        out["seed"] = seed
    if profile_error_seed is not None:
        out["profile_error_seed"] = profile_error_seed
    if duration is not None:
        out["conditions"] = {"duration_s": duration}
    if din_grade is not None:
        out["din_grade"] = din_grade
    if noise_std is not None:
        out["measurement_noise_std"] = noise_std
    return out


def get_output_dir(cli_value: Optional[Path] = None, config: Optional[RunConfig] = None) -> Path:
    """Command line, then GEARSIM_OUTPUT_DIR, then the config's output_dir."""
    if cli_value is not None:
        return Path(cli_value)
    env = os.getenv("GEARSIM_OUTPUT_DIR")
    if env:
        return Path(env)
    if config is not None and config.output_dir:
        return Path(config.output_dir)
    return Path(DEFAULT_OUTPUT_DIR)


def get_default_workers() -> int:
    env = os.getenv("GEARSIM_WORKERS")
    if env:
        try:
            workers = int(env)
        except ValueError as e:
            raise ConfigError(f"GEARSIM_WORKERS must be an integer, got '{env}'") from e
        if workers < 1:
            raise ConfigError("GEARSIM_WORKERS must be at least 1")
        return workers
    return os.cpu_count() or 1


CI_TABLE_DIR = PRESET_DIR / "ci_tables"


def available_ci_tables() -> List[str]:
    return sorted(p.stem for p in CI_TABLE_DIR.glob("*.json"))


def load_ci_tables(name_or_path: str) -> Dict[str, Any]:
    """Stored CI tables by shipped name (same names as the presets) or by file path."""
    path = Path(name_or_path)
    if not path.is_file():
        path = CI_TABLE_DIR / f"{_preset_key(name_or_path)}.json"
    if not path.is_file():
        raise ConfigError(f"no CI tables '{name_or_path}'; shipped: {', '.join(available_ci_tables())}")
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as e:
        raise StorageError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
