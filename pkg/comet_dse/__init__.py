"""
comet-dse - simulator and design-space explorer for magnetoelectric
domain-wall logic: ferroelectric drive, micromagnetic nucleation, 1D wall
propagation and gate-level delay/energy.
"""

__version__ = "0.1.0"

from comet_dse.calibration import CalibrationFit, fit_calibration
from comet_dse.config import CometConfig, load_config, parse_config
from comet_dse.constants import PhysicalConstants, Precision, get_constants
from comet_dse.domain_wall import (
    DwSettings,
    DwState,
    drive_fields,
    dw_step,
    dw_width,
    propagate,
    velocity_vs_jc,
)
from comet_dse.errors import (
    CometError,
    ConfigError,
    IncompleteSweepError,
    InvalidArgumentError,
    SolverError,
)
from comet_dse.exploration import (
    DesignPoint,
    ParameterSpace,
    ParetoFront,
    cluster_by_ms,
    enumerate_space,
    evaluate_gate,
    pareto_front,
    robust_point,
    run_point,
    run_sweep,
)
from comet_dse.ferroelectric import FeState, LandauCoefficients, lkh_step, me_field, voltage_to_field
from comet_dse.micromagnetics import (
    MagnetizationGrid,
    NucleationCase,
    effective_field,
    energy,
    llg_step,
    nucleate,
    relax,
)
from comet_dse.params import (
    DeviceGeometry,
    DriveSettings,
    GateKind,
    MaterialParams,
    TechnologyNode,
    TransistorParams,
    maj3_area,
    preset_technology,
)
from comet_dse.performance import GateReport, gate_report, joule_energy, qtransfer_delay, tx_energy
from comet_dse.reporting import emit_plotdata, emit_table2

__all__ = [
    "__version__",
    "CalibrationFit",
    "CometConfig",
    "CometError",
    "ConfigError",
    "DesignPoint",
    "DeviceGeometry",
    "DriveSettings",
    "DwSettings",
    "DwState",
    "FeState",
    "GateKind",
    "GateReport",
    "IncompleteSweepError",
    "InvalidArgumentError",
    "LandauCoefficients",
    "MagnetizationGrid",
    "MaterialParams",
    "NucleationCase",
    "ParameterSpace",
    "ParetoFront",
    "PhysicalConstants",
    "Precision",
    "SolverError",
    "TechnologyNode",
    "TransistorParams",
    "cluster_by_ms",
    "drive_fields",
    "dw_step",
    "dw_width",
    "effective_field",
    "emit_plotdata",
    "emit_table2",
    "energy",
    "enumerate_space",
    "evaluate_gate",
    "fit_calibration",
    "gate_report",
    "get_constants",
    "joule_energy",
    "llg_step",
    "load_config",
    "lkh_step",
    "maj3_area",
    "me_field",
    "nucleate",
    "pareto_front",
    "parse_config",
    "preset_technology",
    "propagate",
    "qtransfer_delay",
    "relax",
    "robust_point",
    "run_point",
    "run_sweep",
    "tx_energy",
    "velocity_vs_jc",
    "voltage_to_field",
]
