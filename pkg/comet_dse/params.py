"""
Material, transistor, geometry and drive records plus technology presets.

All records are frozen pydantic models holding SI values. Unit-suffixed
strings (``"15 nm"``) are accepted on construction and converted through
:mod:`comet_dse.units`.
"""

from __future__ import annotations

from collections.abc import Mapping
from enum import Enum
from typing import Any

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    model_validator,
)

from comet_dse.constants import GAMMA_V, KAPPA_IME_NUMERATOR, KAPPA_ME_NUMERATOR
from comet_dse.errors import InvalidArgumentError, UnsupportedPresetError
from comet_dse.units import parse_quantity, unit_dimension

C_PRINTED = 3e8


def quantity(default: Any, dimension: str | None = None, **kwargs: Any) -> Any:
    """Field with a declared unit dimension."""
    return Field(default, json_schema_extra={"dimension": dimension}, **kwargs)


class QuantityModel(BaseModel):
    """Frozen record whose fields accept unit-suffixed strings."""

    model_config = ConfigDict(frozen=True, extra="forbid", use_enum_values=False)

    @model_validator(mode="before")
    @classmethod
    def convert_units(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        converted = dict(data)
        for name, value in data.items():
            field_info = cls.model_fields.get(name)
            if field_info is None:
                continue
            converted[name] = parse_quantity(
                value, unit_dimension(field_info), f"{cls.__name__}.{name}"
            )
        return converted


class GateKind(str, Enum):
    INV = "INV"
    MAJ3 = "MAJ3"
    MAJK = "MAJ-K"


class TechnologyNode(str, Enum):
    N15 = "15nm"
    N7 = "7nm"


class MaterialParams(QuantityModel):
    """PMA-FM, IMA-FM, FE and SHM material constants (design-point defaults)."""

    ms_pma: float = quantity(0.3e6, "field", gt=0)
    ku_pma: float = quantity(0.5e6, "energy_density", gt=0)
    a_ex: float = quantity(10e-12, "exchange", gt=0)
    alpha: float = Field(0.01, gt=0, lt=1)
    ms_ima: float = quantity(1e6, "field", ge=0)
    d_dmi: float = quantity(0.8e-3, "surface_energy", ge=0)
    theta_she: float = Field(0.5, ge=0, le=1)
    beta_stt: float = Field(0.4, ge=0)
    p_pma: float = Field(0.5, ge=0, le=1)
    rho_shm: float = quantity(1.06e-7, "resistivity", gt=0)
    # CoFeB-like film in parallel with the SHM; carries rho_shm/rho_pma of J_c
    rho_pma: float = quantity(1.6e-6, "resistivity", gt=0)
    eps_fe: float = Field(164.0, gt=0)
    kappa_me: float = quantity(KAPPA_ME_NUMERATOR / C_PRINTED, "me_coefficient", ge=0)
    kappa_ime: float = quantity(KAPPA_IME_NUMERATOR / C_PRINTED, "me_coefficient", ge=0)
    gamma_v: float = Field(GAMMA_V, gt=0)
    h_int: float = quantity(1.5e-9, "length", gt=0)


class TransistorParams(QuantityModel):
    """Transistor and interconnect surrogate values for one technology node."""

    node: TechnologyNode = TechnologyNode.N15
    r_on: float = quantity(3480.0, "resistance", gt=0)
    c_g: float = quantity(0.1e-15, "capacitance", gt=0)
    v_th: float = quantity(0.2, "voltage", gt=0)
    v_dd: float = quantity(0.85, "voltage", gt=0)
    # None -> taken from the calibration table for (node, V_FE)
    leak_energy_per_gate: NonNegativeFloat | None = quantity(None, "energy")
    k_inv: NonNegativeFloat | None = None
    wire_resistance: float = quantity(500.0, "resistance", ge=0)
    wire_capacitance: float = quantity(5e-17, "capacitance", ge=0)


class DeviceGeometry(QuantityModel):
    """Device dimensions; unset lengths are derived from the feature size F."""

    f_feat: float = quantity(15e-9, "length", gt=0)
    h_pma: float = quantity(1e-9, "length", gt=0)
    w_pma: PositiveFloat | None = quantity(None, "length")
    l_pma: PositiveFloat | None = quantity(None, "length")
    h_ima: float = quantity(1e-9, "length", ge=0)
    ima_aspect: float = Field(2.0, gt=0)
    h_fe_in: float = quantity(5e-9, "length", gt=0)
    h_fe_out: float = quantity(5e-9, "length", gt=0)
    fe_in_area: PositiveFloat | None = quantity(None, "area")
    nucleation_offset: PositiveFloat | None = quantity(None, "length")
    propagation_distance: PositiveFloat | None = quantity(None, "length")
    inv_propagation_distance: PositiveFloat | None = quantity(None, "length")
    l_shm: PositiveFloat | None = quantity(None, "length")
    w_shm: PositiveFloat | None = quantity(None, "length")
    h_shm: float = quantity(3e-9, "length", gt=0)

    @model_validator(mode="after")
    def derive_lengths(self) -> "DeviceGeometry":
        f = self.f_feat
        derived = {
            "w_pma": f,
            "l_pma": 6 * f,
            "fe_in_area": (2 * f) * (1 * f),
            "nucleation_offset": 2 * f,
            "propagation_distance": 4 * f,
            "inv_propagation_distance": 2 * f,
            "l_shm": 6 * f,
            "w_shm": f,
        }
        for name, value in derived.items():
            if getattr(self, name) is None:
                # frozen model: bypass __setattr__ during validation
                object.__setattr__(self, name, value)
        return self

    def model_copy(self, *, update: Mapping[str, Any] | None = None, deep: bool = False) -> "DeviceGeometry":
        """Copy with ``update`` applied and validated.

        Only explicitly set lengths carry over; the rest are derived again
        from the (possibly updated) feature size.
        """
        values = {name: getattr(self, name) for name in self.model_fields_set}
        values.update(update or {})
        return type(self).model_validate(values)

    @property
    def fe_in_volume(self) -> float:
        return self.fe_in_area * self.h_fe_in

    @property
    def ima_footprint(self) -> tuple[float, float]:
        """IMA-FM (length, width); width is 1F, length follows the aspect ratio."""
        return self.ima_aspect * self.f_feat, self.f_feat

    def distance_for(self, gate_kind: GateKind | str) -> float:
        """DW travel distance to the output for a gate kind."""
        if GateKind(gate_kind) is GateKind.INV:
            return self.inv_propagation_distance
        return self.propagation_distance


class DriveSettings(QuantityModel):
    """Applied excitations; unset supply voltages default to the node V_DD."""

    v_fe: float = quantity(0.11, "voltage")
    j_c: float = quantity(5e11, "current_density")
    v_prop: NonNegativeFloat | None = quantity(None, "voltage")
    v_rst: NonNegativeFloat | None = quantity(None, "voltage")
    # None -> IME output voltage, scaled and clamped to the supply
    v_out: NonNegativeFloat | None = quantity(None, "voltage")


_NODE_TABLE: dict[TechnologyNode, dict[str, float]] = {
    TechnologyNode.N15: {"f_feat": 15e-9, "r_on": 3480.0, "v_dd": 0.85},
    TechnologyNode.N7: {"f_feat": 7e-9, "r_on": 4109.0, "v_dd": 0.7},
}


def resolve_node(node: TechnologyNode | str) -> TechnologyNode:
    try:
        return TechnologyNode(node)
    except ValueError as exc:
        supported = ", ".join(n.value for n in TechnologyNode)
        raise UnsupportedPresetError(
            f"Unsupported technology node '{node}'; supported: {supported}"
        ) from exc


def preset_technology(
    node: TechnologyNode | str,
) -> tuple[MaterialParams, TransistorParams, DeviceGeometry]:
    """Design-point defaults with the node-specific feature size, R_on and supply."""
    node = resolve_node(node)
    entry = _NODE_TABLE[node]
    material = MaterialParams()
    transistor = TransistorParams(node=node, r_on=entry["r_on"], v_dd=entry["v_dd"])
    geometry = DeviceGeometry(f_feat=entry["f_feat"])
    return material, transistor, geometry


def maj3_area(f_feat: float) -> float:
    """Layout area of the three-input majority gate, 29F x 16F [m^2]."""
    if not f_feat > 0:
        raise InvalidArgumentError(f"Feature size must be positive, got {f_feat}")
    return (29 * f_feat) * (16 * f_feat)
