"""
Calibration of the surrogate constants against the published gate rows.

The published delay/energy rows (``data/calibration.yaml``) pin down values
the device equations leave open:

- ``k_inv`` per (node, V_FE), from t_qtransfer
- leakage energy per (node, V_FE), taken directly
- drive voltages V_RST and V_PROP = V_OUT, from the MAJ3/INV E_TX pair
- the SHM thickness, from the MAJ3 E_Joule row at the lower V_FE

Lookups between the calibrated V_FE points interpolate linearly and clamp
outside them.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from importlib import resources
from typing import Any

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict
from scipy.optimize import brentq

from comet_dse.constants import Precision, get_constants
from comet_dse.errors import ConfigError
from comet_dse.params import (
    DeviceGeometry,
    DriveSettings,
    GateKind,
    MaterialParams,
    TechnologyNode,
    TransistorParams,
    preset_technology,
    resolve_node,
)
from comet_dse.performance import WIRE_DELAY_FACTOR, fe_capacitance, joule_energy

logger = logging.getLogger(__name__)

NodeTable = dict[TechnologyNode, dict[float, float]]


class TargetRow(BaseModel):
    """One published (node, V_FE) row; gate-keyed entries hold MAJ3 and INV values."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    node: TechnologyNode
    v_fe: float
    t_nucleate: float
    t_propagate: dict[GateKind, float]
    t_qtransfer: float
    t_comet: dict[GateKind, float]
    e_fe: dict[GateKind, float]
    e_tx: dict[GateKind, float]
    e_joule: dict[GateKind, float]
    e_leakage: float
    e_comet: dict[GateKind, float]


class CalibrationFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    k_inv: NodeTable
    leakage: NodeTable
    v_rst: NodeTable
    v_prop: NodeTable
    t_nucleate: NodeTable
    shm_thickness: dict[TechnologyNode, float]
    # relative error of the INV E_Joule row under the MAJ3-fitted thickness
    joule_residual: dict[TechnologyNode, float]


@lru_cache(maxsize=1)
def _load_document() -> dict[str, Any]:
    text = resources.files("comet_dse").joinpath("data/calibration.yaml").read_text()
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"Packaged calibration data is malformed: {exc}") from exc


def load_targets() -> list[TargetRow]:
    return [TargetRow.model_validate(row) for row in _load_document()["targets"]]


def design_point() -> dict[str, float]:
    return dict(_load_document()["design_point"])


def recorded_fit() -> dict[str, dict]:
    return _load_document()["recorded_fit"]


def _fit_shm_thickness(
    row: TargetRow,
    params: MaterialParams,
    geometry: DeviceGeometry,
    transistor: TransistorParams,
    j_c: float,
) -> float:
    target = row.e_joule[GateKind.MAJ3]
    t_prop = row.t_propagate[GateKind.MAJ3]

    def mismatch(thickness: float) -> float:
        geom = geometry.model_copy(update={"h_shm": thickness})
        return joule_energy(j_c, geom, params, transistor, t_prop) - target

    return brentq(mismatch, 1e-12, 1e-7, xtol=1e-18, rtol=1e-12)


@lru_cache(maxsize=2)
def fit_calibration(precision: Precision | str = Precision.CODATA) -> CalibrationFit:
    """Fit every calibrated constant from the published rows."""
    constants = get_constants(precision)
    point = design_point()
    tables: dict[str, NodeTable] = {
        name: {} for name in ("k_inv", "leakage", "v_rst", "v_prop", "t_nucleate")
    }
    shm: dict[TechnologyNode, float] = {}
    residual: dict[TechnologyNode, float] = {}

    for row in sorted(load_targets(), key=lambda r: (r.node.value, r.v_fe)):
        material, transistor, geometry = preset_technology(row.node)
        material = material.model_copy(
            update={k: point[k] for k in ("ms_pma", "ku_pma", "a_ex", "alpha")}
        )
        for table in tables.values():
            table.setdefault(row.node, {})

        load = fe_capacitance(material, geometry, constants) + transistor.c_g
        wire = WIRE_DELAY_FACTOR * transistor.wire_resistance * transistor.wire_capacitance
        tables["k_inv"][row.node][row.v_fe] = (row.t_qtransfer - wire) / (transistor.r_on * load)
        tables["leakage"][row.node][row.v_fe] = row.e_leakage
        tables["t_nucleate"][row.node][row.v_fe] = row.t_nucleate

        # E_TX(MAJ3) - E_TX(INV) = C_g V_RST^2; INV: 2 E_TX / C_g = 2 V_RST^2 + 3 V_PROP^2
        c_g = transistor.c_g
        v_rst_sq = (row.e_tx[GateKind.MAJ3] - row.e_tx[GateKind.INV]) / c_g
        v_prop_sq = (2.0 * row.e_tx[GateKind.INV] / c_g - 2.0 * v_rst_sq) / 3.0
        tables["v_rst"][row.node][row.v_fe] = math.sqrt(max(v_rst_sq, 0.0))
        tables["v_prop"][row.node][row.v_fe] = math.sqrt(max(v_prop_sq, 0.0))

        if row.node not in shm:
            thickness = _fit_shm_thickness(row, material, geometry, transistor, point["j_c"])
            shm[row.node] = thickness
            geom = geometry.model_copy(update={"h_shm": thickness})
            inv = joule_energy(
                point["j_c"], geom, material, transistor, row.t_propagate[GateKind.INV]
            )
            target = row.e_joule[GateKind.INV]
            residual[row.node] = (inv - target) / target
            logger.info(
                f"{row.node.value}: SHM thickness {thickness * 1e9:.3f} nm, "
                f"INV E_Joule residual {residual[row.node]:+.1%}"
            )

    return CalibrationFit(**tables, shm_thickness=shm, joule_residual=residual)


def _lookup(table: NodeTable, node: TechnologyNode | str, v_fe: float) -> float:
    points = table[resolve_node(node)]
    xs = sorted(points)
    return float(np.interp(abs(v_fe), xs, [points[x] for x in xs]))


def calibrated_transistor(
    transistor: TransistorParams, v_fe: float, fit: CalibrationFit | None = None
) -> TransistorParams:
    """Fill unset ``k_inv`` and ``leak_energy_per_gate`` for the node and V_FE."""
    fit = fit or fit_calibration()
    update = {}
    if transistor.k_inv is None:
        update["k_inv"] = _lookup(fit.k_inv, transistor.node, v_fe)
    if transistor.leak_energy_per_gate is None:
        update["leak_energy_per_gate"] = _lookup(fit.leakage, transistor.node, v_fe)
    return transistor.model_copy(update=update) if update else transistor


def calibrated_drive(
    drive: DriveSettings, node: TechnologyNode | str, fit: CalibrationFit | None = None
) -> DriveSettings:
    """Fill unset V_RST, V_PROP and V_OUT with the fitted voltages."""
    fit = fit or fit_calibration()
    v_rst = _lookup(fit.v_rst, node, drive.v_fe)
    v_prop = _lookup(fit.v_prop, node, drive.v_fe)
    return drive.model_copy(
        update={
            "v_rst": v_rst if drive.v_rst is None else drive.v_rst,
            "v_prop": v_prop if drive.v_prop is None else drive.v_prop,
            "v_out": v_prop if drive.v_out is None else drive.v_out,
        }
    )


def calibrated_t_nucleate(
    node: TechnologyNode | str, v_fe: float, fit: CalibrationFit | None = None
) -> float:
    fit = fit or fit_calibration()
    return _lookup(fit.t_nucleate, node, v_fe)


def calibrated_geometry(
    geometry: DeviceGeometry, node: TechnologyNode | str, fit: CalibrationFit | None = None
) -> DeviceGeometry:
    fit = fit or fit_calibration()
    return geometry.model_copy(update={"h_shm": fit.shm_thickness[resolve_node(node)]})
