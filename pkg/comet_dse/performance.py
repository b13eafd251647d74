"""
Gate-level delay and energy composition.

A gate evaluation runs nucleation, propagation and charge transfer twice
(initialization, then evaluation), so

    T = 2 (t_nucleate + t_propagate + t_qtransfer)
    E = 2 (E_FE + E_TX + E_Joule + E_leakage)

Stage delays are either produced by the solvers or injected directly.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, computed_field

from comet_dse.constants import PhysicalConstants, get_constants
from comet_dse.errors import InvalidArgumentError
from comet_dse.params import (
    DeviceGeometry,
    DriveSettings,
    GateKind,
    MaterialParams,
    TechnologyNode,
    TransistorParams,
)

logger = logging.getLogger(__name__)

# Wire RC delay factor for a distributed line driven by a step
WIRE_DELAY_FACTOR = 0.69

# CMOS reference (delay [s], energy [J]) at nominal supply
CMOS_REFERENCE: dict[tuple[TechnologyNode, GateKind], tuple[float, float]] = {
    (TechnologyNode.N15, GateKind.INV): (1.8e-12, 38.7e-18),
    (TechnologyNode.N7, GateKind.INV): (1.6e-12, 19.8e-18),
    (TechnologyNode.N15, GateKind.MAJ3): (14.8e-12, 704.2e-18),
    (TechnologyNode.N7, GateKind.MAJ3): (11.4e-12, 361.6e-18),
}


class PerfSettings(BaseModel):
    """Performance-model settings (config section ``perf``)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    ime_scale: float = Field(1.0, ge=0)
    target_delay: float = Field(100e-12, gt=0, json_schema_extra={"dimension": "time"})
    # nominal: unset drive voltages take V_DD; calibrated: fitted per (node, V_FE)
    drive_source: Literal["nominal", "calibrated"] = "nominal"


class StageDelays(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    t_nucleate: NonNegativeFloat
    t_propagate: NonNegativeFloat
    t_qtransfer: NonNegativeFloat

    @property
    def total(self) -> float:
        return self.t_nucleate + self.t_propagate + self.t_qtransfer


class EnergyBreakdown(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    e_fe: NonNegativeFloat
    e_tx: NonNegativeFloat
    e_joule: NonNegativeFloat
    e_leakage: NonNegativeFloat

    @property
    def total(self) -> float:
        return self.e_fe + self.e_tx + self.e_joule + self.e_leakage


class GateReport(BaseModel):
    """Delay and energy of one gate evaluation.

    ``t_comet`` and ``e_comet`` are derived from the stage values, so the
    factor-2 identities hold by construction.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    gate_kind: GateKind
    k_inputs: int = Field(..., ge=1)
    node: TechnologyNode
    delays: StageDelays
    energies: EnergyBreakdown
    v_out: float
    drive: DriveSettings
    target_delay: float = 100e-12

    @computed_field
    @property
    def t_comet(self) -> float:
        return 2.0 * self.delays.total

    @computed_field
    @property
    def e_comet(self) -> float:
        return 2.0 * self.energies.total

    @computed_field
    @property
    def edp(self) -> float:
        return self.t_comet * self.e_comet

    @computed_field
    @property
    def meets_target(self) -> bool:
        return self.t_comet <= self.target_delay

    @classmethod
    def from_record(cls, record: dict) -> "GateReport":
        """Rebuild from ``model_dump()`` output; derived fields are recomputed."""
        derived = {"t_comet", "e_comet", "edp", "meets_target"}
        return cls.model_validate({k: v for k, v in record.items() if k not in derived})

    def cmos_reference(self) -> tuple[float, float] | None:
        return CMOS_REFERENCE.get((self.node, self.gate_kind))

    def cmos_ratios(self) -> tuple[float, float] | None:
        """(T_CoMET / T_CMOS, E_CoMET / E_CMOS), when a reference exists."""
        reference = self.cmos_reference()
        if reference is None:
            return None
        return self.t_comet / reference[0], self.e_comet / reference[1]


def input_count(gate_kind: GateKind | str, k_inputs: int | None = None) -> int:
    gate_kind = GateKind(gate_kind)
    if gate_kind is GateKind.INV:
        return 1
    if gate_kind is GateKind.MAJ3:
        return 3
    if k_inputs is None or k_inputs < 1 or k_inputs % 2 == 0:
        raise InvalidArgumentError(f"MAJ-K needs an odd input count >= 1, got {k_inputs}")
    return k_inputs


def fe_capacitance(
    params: MaterialParams, geometry: DeviceGeometry, constants: PhysicalConstants | None = None
) -> float:
    """Parallel-plate capacitance of FE_in [F]."""
    constants = constants or get_constants()
    return constants.eps0 * params.eps_fe * geometry.fe_in_area / geometry.h_fe_in


def fe_charge_energy(
    k_inputs: int,
    v_fe: float,
    params: MaterialParams,
    geometry: DeviceGeometry,
    constants: PhysicalConstants | None = None,
) -> float:
    """E_FE = (K/2) C_FE V_FE^2."""
    if k_inputs < 1:
        raise InvalidArgumentError(f"k_inputs must be >= 1, got {k_inputs}")
    return 0.5 * k_inputs * fe_capacitance(params, geometry, constants) * v_fe**2


def ime_output_voltage(
    m_z: float,
    params: MaterialParams,
    geometry: DeviceGeometry,
    scale: float = 1.0,
) -> float:
    """V_OUT = E_IME h_FE_out with E_IME = kappa_IME (h_int / h_FE_out) M.

    ``scale`` is the unit-convention factor shared with the ME field.
    """
    if geometry.h_fe_out <= 0:
        raise InvalidArgumentError("FE_out thickness must be positive")
    e_ime = params.kappa_ime * (params.h_int / geometry.h_fe_out) * m_z
    return scale * e_ime * geometry.h_fe_out


def shm_resistance(geometry: DeviceGeometry, params: MaterialParams) -> float:
    """R_SHM = rho l / (w t)."""
    area = geometry.w_shm * geometry.h_shm
    if area <= 0:
        raise InvalidArgumentError("SHM cross-section must be positive")
    return params.rho_shm * geometry.l_shm / area


def joule_energy(
    j_c: float,
    geometry: DeviceGeometry,
    params: MaterialParams,
    transistor: TransistorParams,
    t_propagate: float,
) -> float:
    """E_Joule = (J_c w t)^2 (R_on + R_SHM) t_propagate."""
    if t_propagate < 0:
        raise InvalidArgumentError(f"t_propagate must be non-negative, got {t_propagate}")
    current = j_c * geometry.w_shm * geometry.h_shm
    return current**2 * (transistor.r_on + shm_resistance(geometry, params)) * t_propagate


def tx_energy(
    k_inputs: int, v_rst: float, v_prop: float, v_out: float, c_g: float
) -> float:
    """E_TX = (C_g/2) ((K+1) V_RST^2 + V_PROP^2 + 2 V_OUT^2)."""
    if k_inputs < 1:
        raise InvalidArgumentError(f"k_inputs must be >= 1, got {k_inputs}")
    return 0.5 * c_g * ((k_inputs + 1) * v_rst**2 + v_prop**2 + 2.0 * v_out**2)


def qtransfer_delay(
    transistor: TransistorParams,
    load_capacitance: float,
    wire_rc: tuple[float, float] | None = None,
) -> float:
    """Dual-rail inverter delay plus wire RC: k_inv R_on C_load + 0.69 R_w C_w."""
    if transistor.k_inv is None:
        raise InvalidArgumentError(
            "Transistor has no k_inv; resolve it from the calibration table first"
        )
    if load_capacitance < 0:
        raise InvalidArgumentError("Load capacitance must be non-negative")
    r_w, c_w = wire_rc if wire_rc is not None else (
        transistor.wire_resistance,
        transistor.wire_capacitance,
    )
    return transistor.k_inv * transistor.r_on * load_capacitance + WIRE_DELAY_FACTOR * r_w * c_w


def resolve_drive(
    drive: DriveSettings,
    params: MaterialParams,
    geometry: DeviceGeometry,
    transistor: TransistorParams,
    settings: PerfSettings | None = None,
) -> DriveSettings:
    """Fill unset supply voltages: V_PROP and V_RST from V_DD, V_OUT from the
    scaled IME output clamped to [0, V_DD]."""
    settings = settings or PerfSettings()
    v_dd = transistor.v_dd
    v_out = drive.v_out
    if v_out is None:
        raw = abs(ime_output_voltage(params.ms_pma, params, geometry, settings.ime_scale))
        v_out = min(raw, v_dd)
        if raw < transistor.v_th:
            logger.debug(f"IME output {raw:.3e} V is below V_th={transistor.v_th} V")
    return drive.model_copy(
        update={
            "v_prop": v_dd if drive.v_prop is None else drive.v_prop,
            "v_rst": v_dd if drive.v_rst is None else drive.v_rst,
            "v_out": v_out,
        }
    )


def gate_report(
    gate_kind: GateKind | str,
    params: MaterialParams,
    geometry: DeviceGeometry,
    transistor: TransistorParams,
    drive: DriveSettings,
    t_nucleate: float,
    t_propagate: float,
    k_inputs: int | None = None,
    t_qtransfer: float | None = None,
    settings: PerfSettings | None = None,
    constants: PhysicalConstants | None = None,
) -> GateReport:
    """Assemble a GateReport from stage delays.

    ``transistor`` must carry ``k_inv`` (unless ``t_qtransfer`` is given) and
    ``leak_energy_per_gate``. The MAJ3 worst case has one input differing from
    the others, so the caller supplies the full-distance ``t_propagate``.
    """
    settings = settings or PerfSettings()
    gate_kind = GateKind(gate_kind)
    k = input_count(gate_kind, k_inputs)
    if transistor.leak_energy_per_gate is None:
        raise InvalidArgumentError(
            "Transistor has no leakage energy; resolve it from the calibration table first"
        )
    resolved = resolve_drive(drive, params, geometry, transistor, settings)

    if t_qtransfer is None:
        load = fe_capacitance(params, geometry, constants) + transistor.c_g
        t_qtransfer = qtransfer_delay(transistor, load)

    delays = StageDelays(t_nucleate=t_nucleate, t_propagate=t_propagate, t_qtransfer=t_qtransfer)
    energies = EnergyBreakdown(
        e_fe=fe_charge_energy(k, resolved.v_fe, params, geometry, constants),
        e_tx=tx_energy(k, resolved.v_rst, resolved.v_prop, resolved.v_out, transistor.c_g),
        e_joule=joule_energy(resolved.j_c, geometry, params, transistor, t_propagate),
        e_leakage=transistor.leak_energy_per_gate,
    )
    return GateReport(
        gate_kind=gate_kind,
        k_inputs=k,
        node=transistor.node,
        delays=delays,
        energies=energies,
        v_out=resolved.v_out,
        drive=resolved,
        target_delay=settings.target_delay,
    )


@dataclass(frozen=True)
class StagePhase:
    name: str
    start: float
    end: float
    signal: str


def stage_schedule(report: GateReport) -> list[StagePhase]:
    """Timed phases of one gate evaluation (initialization half, then evaluation half).

    V_RST is asserted together with V_PROP so the output FE is reset before
    the wall arrives.
    """
    phases: list[StagePhase] = []
    t = 0.0
    d = report.delays
    for half in ("init", "eval"):
        for name, duration, signal in (
            ("nucleate", d.t_nucleate, "V_FE"),
            ("propagate", d.t_propagate, "V_PROP+V_RST"),
            ("qtransfer", d.t_qtransfer, "V_OUT"),
        ):
            phases.append(StagePhase(name=f"{half}-{name}", start=t, end=t + duration, signal=signal))
            t += duration
    return phases


def majority_polarity(inputs: Sequence[int]) -> int:
    """Majority of +/-1 input polarities (odd count)."""
    if not inputs or len(inputs) % 2 == 0:
        raise InvalidArgumentError(f"Majority needs an odd number of inputs, got {len(inputs)}")
    if any(v not in (-1, 1) for v in inputs):
        raise InvalidArgumentError("Input polarities must be +1 or -1")
    return 1 if sum(inputs) > 0 else -1


def cascade_polarity(v_out: float) -> int:
    """Sign of the next stage's V_FE; the dual-rail inverter drives it opposite to V_OUT."""
    if v_out == 0:
        raise InvalidArgumentError("V_OUT of zero carries no polarity")
    return -int(math.copysign(1, v_out))
