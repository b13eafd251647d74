"""
Run configuration: YAML ingestion, dotted-path overrides and validation.

A config file has optional sections ``material``, ``geometry``,
``transistor``, ``drive``, ``ferroelectric``, ``llg``, ``dw``, ``perf`` and
``sweep``, plus top-level ``node`` and ``precision``. Anything omitted takes
the technology preset for ``node``. Values may carry unit suffixes.
"""

from __future__ import annotations

import copy
import difflib
import logging
from collections.abc import Sequence
from importlib import resources
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, ValidationError

from comet_dse.constants import PhysicalConstants, Precision, get_constants
from comet_dse.domain_wall import DwSettings
from comet_dse.errors import ConfigError, ConfigParseError, UnknownKeyError
from comet_dse.exploration import SweepSettings
from comet_dse.ferroelectric import FerroelectricSettings
from comet_dse.micromagnetics import LlgSettings
from comet_dse.params import (
    DeviceGeometry,
    DriveSettings,
    MaterialParams,
    TechnologyNode,
    TransistorParams,
    preset_technology,
    resolve_node,
)
from comet_dse.performance import PerfSettings
from comet_dse.settings import get_settings
from comet_dse.units import parse_quantity, unit_dimension

logger = logging.getLogger(__name__)


class CometConfig(BaseModel):
    """Validated run configuration."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    node: TechnologyNode = TechnologyNode.N15
    precision: Precision = Precision.CODATA
    material: MaterialParams = MaterialParams()
    geometry: DeviceGeometry = DeviceGeometry()
    transistor: TransistorParams = TransistorParams()
    drive: DriveSettings = DriveSettings()
    ferroelectric: FerroelectricSettings = FerroelectricSettings()
    llg: LlgSettings = LlgSettings()
    dw: DwSettings = DwSettings()
    perf: PerfSettings = PerfSettings()
    sweep: SweepSettings = SweepSettings()

    @property
    def constants(self) -> PhysicalConstants:
        return get_constants(self.precision)


SECTIONS: dict[str, type[BaseModel]] = {
    name: info.annotation
    for name, info in CometConfig.model_fields.items()
    if isinstance(info.annotation, type) and issubclass(info.annotation, BaseModel)
}
SCALARS = ("node", "precision")


def known_paths() -> list[str]:
    paths = list(SCALARS)
    for section, model in SECTIONS.items():
        paths.extend(f"{section}.{name}" for name in model.model_fields)
    return paths


def _suggest(path: str) -> str | None:
    matches = difflib.get_close_matches(path, known_paths(), n=1, cutoff=0.6)
    if matches:
        return matches[0]
    # fall back to matching the leaf name alone
    leaf = path.rsplit(".", 1)[-1]
    leaves = {p.rsplit(".", 1)[-1]: p for p in known_paths()}
    matches = difflib.get_close_matches(leaf, list(leaves), n=1, cutoff=0.6)
    return leaves[matches[0]] if matches else None


def _parse_override_value(raw: str) -> Any:
    """Return a Python value parsed from a CLI override string."""
    text = raw.strip()
    lower = text.lower()
    if lower in {"true", "false"}:
        return lower == "true"
    if lower in {"none", "null"}:
        return None
    if text.startswith("[") and text.endswith("]"):
        # lists use YAML flow syntax: sweep.ms_values=[0.3e6, 0.4e6]
        return yaml.safe_load(text)
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            pass
    if (text.startswith('"') and text.endswith('"')) or (text.startswith("'") and text.endswith("'")):
        return text[1:-1]
    return text


def _apply_overrides_dict(payload: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Apply ``section.key=value`` overrides to a raw configuration mapping."""
    for item in overrides:
        key, sep, value_str = item.partition("=")
        path = key.strip()
        if not sep or not path:
            raise ConfigError(f"Invalid override '{item}'; expected section.key=value")
        parts = [segment for segment in path.split(".") if segment]
        if len(parts) == 1 and parts[0] in SCALARS:
            payload[parts[0]] = _parse_override_value(value_str)
            continue
        if len(parts) != 2 or parts[0] not in SECTIONS or parts[1] not in SECTIONS[parts[0]].model_fields:
            raise UnknownKeyError(path, _suggest(path))
        section = payload.setdefault(parts[0], {})
        if not isinstance(section, dict):
            raise ConfigError(f"Section '{parts[0]}' is not a mapping")
        section[parts[1]] = _parse_override_value(value_str)
    return payload


def _check_keys(payload: dict[str, Any]) -> None:
    for key, value in payload.items():
        if key in SCALARS:
            continue
        if key not in SECTIONS:
            raise UnknownKeyError(key, _suggest(key))
        if value is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"Section '{key}' must be a mapping, got {type(value).__name__}")
        fields = SECTIONS[key].model_fields
        for name in value:
            if name not in fields:
                path = f"{key}.{name}"
                raise UnknownKeyError(path, _suggest(path))


def _convert_units(payload: dict[str, Any]) -> dict[str, Any]:
    converted: dict[str, Any] = {}
    for key, value in payload.items():
        if key in SCALARS or not value:
            converted[key] = value
            continue
        fields = SECTIONS[key].model_fields
        converted[key] = {
            name: parse_quantity(raw, unit_dimension(fields[name]), f"{key}.{name}")
            for name, raw in value.items()
        }
    return converted


def _preset_sections(node: TechnologyNode) -> dict[str, dict[str, Any]]:
    """Node-specific fields only, so derived geometry follows the user's F."""
    _, transistor, geometry = preset_technology(node)
    return {
        "geometry": {"f_feat": geometry.f_feat},
        "transistor": {"node": node, "r_on": transistor.r_on, "v_dd": transistor.v_dd},
    }


def build_config(payload: dict[str, Any] | None, overrides: Sequence[str] = ()) -> CometConfig:
    """Validate a raw mapping (already parsed from YAML) plus overrides."""
    payload = copy.deepcopy(payload) if payload else {}
    if not isinstance(payload, dict):
        raise ConfigError("Top level of the configuration must be a mapping")
    payload = _apply_overrides_dict(payload, overrides)
    _check_keys(payload)
    payload = _convert_units({k: v for k, v in payload.items() if v is not None})

    node = resolve_node(payload.get("node", TechnologyNode.N15))
    merged: dict[str, Any] = {"node": node}
    if "precision" in payload:
        merged["precision"] = payload["precision"]
    presets = _preset_sections(node)
    for section in SECTIONS:
        values = {**presets.get(section, {}), **payload.get(section, {})}
        if values:
            merged[section] = values
    try:
        config = CometConfig.model_validate(merged)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"Invalid value for '{location}': {first['msg']}") from exc
    logger.debug(f"Configuration resolved for node {config.node.value}")
    return config


def parse_config(text: str, overrides: Sequence[str] = ()) -> CometConfig:
    """Parse YAML text into a validated configuration.

    :raises ConfigParseError: malformed YAML (with line and column)
    :raises UnknownKeyError: a key that is not part of the schema
    :raises UnitMismatchError: a unit suffix of the wrong dimension
    """
    try:
        payload = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            raise ConfigParseError(
                f"Malformed configuration: {getattr(exc, 'problem', exc)}",
                line=mark.line + 1,
                column=mark.column + 1,
            ) from exc
        raise ConfigParseError(f"Malformed configuration: {exc}") from exc
    return build_config(payload, overrides)


def load_config(path: str | Path | None = None, overrides: Sequence[str] = ()) -> CometConfig:
    """Load ``path``, or ``$COMET_CONFIG_DIR/comet.yaml``, or the packaged defaults."""
    if path is None:
        path = get_settings().default_config_path()
    if path is None:
        logger.info("No configuration file given; using packaged defaults")
        text = resources.files("comet_dse").joinpath("data/default.yaml").read_text()
        return parse_config(text, overrides)
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Configuration file not found: {path}")
    logger.info(f"Loading configuration from {path}")
    return parse_config(path.read_text(), overrides)


def dump_config(config: CometConfig) -> dict[str, Any]:
    """JSON-ready mapping of the resolved configuration."""
    return config.model_dump(mode="json")
