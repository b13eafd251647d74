"""
Output writers: gate tables, tidy figure data, sweep results and the
provenance sidecar.

Data files carry no timestamps; ``metadata.json`` holds the provenance.
Machine-readable files use shortest round-trip float text, display tables
use one decimal in ps/aJ/mV.
"""

from __future__ import annotations

import io
import json
import logging
from collections.abc import Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING, Any

import pandas as pd

from comet_dse import calibration
from comet_dse.domain_wall import propagate
from comet_dse.errors import IncompleteSweepError, InvalidArgumentError
from comet_dse.exploration import DesignPoint, KneeSelection, ParetoFront, results_frame
from comet_dse.params import DriveSettings, GateKind, preset_technology
from comet_dse.performance import (
    EnergyBreakdown,
    GateReport,
    StageDelays,
    gate_report,
)

if TYPE_CHECKING:
    from comet_dse.config import CometConfig

logger = logging.getLogger(__name__)

PS = 1e12
AJ = 1e18
MV = 1e3

TABLE2_COLUMNS = [
    "node",
    "gate",
    "v_fe_mV",
    "t_nucleate_ps",
    "t_propagate_ps",
    "t_qtransfer_ps",
    "t_comet_ps",
    "e_fe_aJ",
    "e_tx_aJ",
    "e_joule_aJ",
    "e_leakage_aJ",
    "e_comet_aJ",
]

PLOT_KINDS: dict[str, list[str]] = {
    "fig-nuc": ["ms_pma", "ku_pma", "a_ex", "alpha", "v_fe", "nucleated", "t_nucleate"],
    "fig-prop": ["ms_pma", "ku_pma", "alpha", "j_c", "v_avg", "t_propagate"],
    "fig-edp": ["ms_pma", "ku_pma", "alpha", "v_fe", "j_c", "t_comet", "e_comet"],
    "fig-imafm": ["h_ima", "nucleated", "t_nucleate"],
}
# columns that must hold at least one value for the figure to be meaningful
_PLOT_VALUES = {
    "fig-nuc": ["nucleated"],
    "fig-prop": ["v_avg", "t_propagate"],
    "fig-edp": ["t_comet", "e_comet"],
    "fig-imafm": ["h_ima"],
}


def _table2_row(report: GateReport) -> dict[str, Any]:
    d, e = report.delays, report.energies
    return {
        "node": report.node.value,
        "gate": report.gate_kind.value,
        "v_fe_mV": report.drive.v_fe * MV,
        "t_nucleate_ps": d.t_nucleate * PS,
        "t_propagate_ps": d.t_propagate * PS,
        "t_qtransfer_ps": d.t_qtransfer * PS,
        "t_comet_ps": report.t_comet * PS,
        "e_fe_aJ": e.e_fe * AJ,
        "e_tx_aJ": e.e_tx * AJ,
        "e_joule_aJ": e.e_joule * AJ,
        "e_leakage_aJ": e.e_leakage * AJ,
        "e_comet_aJ": report.e_comet * AJ,
    }


def table2_frame(reports: Sequence[GateReport]) -> pd.DataFrame:
    return pd.DataFrame([_table2_row(r) for r in reports], columns=TABLE2_COLUMNS)


def emit_table2(reports: Sequence[GateReport]) -> str:
    """Display CSV of the delay/energy decomposition, one row per report."""
    buffer = io.StringIO()
    table2_frame(reports).to_csv(buffer, index=False, float_format="%.1f", lineterminator="\n")
    return buffer.getvalue()


def emit_reports_json(reports: Sequence[GateReport]) -> str:
    """Full-precision machine-readable companion of :func:`emit_table2`."""
    return json.dumps([r.model_dump(mode="json") for r in reports], indent=2) + "\n"


def load_reports(text: str) -> list[GateReport]:
    return [GateReport.from_record(record) for record in json.loads(text)]


def published_reports(fit: calibration.CalibrationFit | None = None) -> list[GateReport]:
    """Reports built from the published stage delays and energies (MAJ3, then INV per row)."""
    fit = fit or calibration.fit_calibration()
    reports = []
    for row in calibration.load_targets():
        _, transistor, _ = preset_technology(row.node)
        for gate in (GateKind.MAJ3, GateKind.INV):
            drive = calibration.calibrated_drive(
                DriveSettings(v_fe=row.v_fe, j_c=calibration.design_point()["j_c"]),
                row.node,
                fit,
            )
            reports.append(
                GateReport(
                    gate_kind=gate,
                    k_inputs=3 if gate is GateKind.MAJ3 else 1,
                    node=transistor.node,
                    delays=StageDelays(
                        t_nucleate=row.t_nucleate,
                        t_propagate=row.t_propagate[gate],
                        t_qtransfer=row.t_qtransfer,
                    ),
                    energies=EnergyBreakdown(
                        e_fe=row.e_fe[gate],
                        e_tx=row.e_tx[gate],
                        e_joule=row.e_joule[gate],
                        e_leakage=row.e_leakage,
                    ),
                    v_out=drive.v_out,
                    drive=drive,
                )
            )
    return reports


def modelled_reports(config: CometConfig) -> list[GateReport]:
    """Model-side counterpart of :func:`published_reports`.

    Uses the design-point material, calibrated nucleation delay, drive
    voltages, SHM thickness and transistor constants; propagation comes from
    the 1D wall model and the remaining terms from the device equations.
    """
    fit = calibration.fit_calibration(config.precision)
    point = calibration.design_point()
    constants = config.constants
    reports = []
    for row in calibration.load_targets():
        material, transistor, geometry = preset_technology(row.node)
        material = material.model_copy(
            update={k: point[k] for k in ("ms_pma", "ku_pma", "a_ex", "alpha")}
        )
        geometry = calibration.calibrated_geometry(geometry, row.node, fit)
        transistor = calibration.calibrated_transistor(transistor, row.v_fe, fit)
        drive = calibration.calibrated_drive(
            config.drive.model_copy(update={"v_fe": row.v_fe, "j_c": point["j_c"]}), row.node, fit
        )
        for gate in (GateKind.MAJ3, GateKind.INV):
            result = propagate(
                geometry.distance_for(gate), material, point["j_c"], geometry=geometry,
                settings=config.dw, constants=constants,
            )
            reports.append(
                gate_report(
                    gate, material, geometry, transistor, drive,
                    calibration.calibrated_t_nucleate(row.node, row.v_fe, fit),
                    result.t_propagate, settings=config.perf, constants=constants,
                )
            )
    return reports


def report_annotations(reports: Sequence[GateReport]) -> list[dict[str, Any]]:
    """EDP, CMOS reference ratios and the delay-target verdict per report."""
    rows = []
    for r in reports:
        ratios = r.cmos_ratios()
        rows.append(
            {
                "node": r.node.value,
                "gate": r.gate_kind.value,
                "v_fe": r.drive.v_fe,
                "t_comet": r.t_comet,
                "e_comet": r.e_comet,
                "edp": r.edp,
                "meets_target": r.meets_target,
                "cmos_reference": r.cmos_reference(),
                "delay_ratio": ratios[0] if ratios else None,
                "energy_ratio": ratios[1] if ratios else None,
            }
        )
    return rows


def _missing_columns(kind: str, frame: pd.DataFrame) -> list[str]:
    missing = [c for c in PLOT_KINDS[kind] if c not in frame.columns]
    missing += [
        c for c in _PLOT_VALUES[kind] if c in frame.columns and frame[c].isna().all()
    ]
    return missing


def emit_plotdata(kind: str, results: pd.DataFrame | Sequence[DesignPoint]) -> pd.DataFrame:
    """Tidy long-format frame for one figure family.

    :raises IncompleteSweepError: the results lack the columns the figure needs
    """
    if kind not in PLOT_KINDS:
        raise InvalidArgumentError(f"Unknown figure kind '{kind}'; choose from {sorted(PLOT_KINDS)}")
    frame = results if isinstance(results, pd.DataFrame) else results_frame(results)
    if frame.empty:
        raise IncompleteSweepError(f"No results to build {kind} from")
    missing = _missing_columns(kind, frame)
    if missing:
        raise IncompleteSweepError(f"{kind} needs values for: {', '.join(missing)}")
    columns = PLOT_KINDS[kind]
    if kind == "fig-nuc":
        return frame[columns].reset_index(drop=True)
    if kind == "fig-imafm":
        return frame[columns].sort_values("h_ima", kind="stable").reset_index(drop=True)
    # failed points carry no values for these figures
    return frame.dropna(subset=_PLOT_VALUES[kind])[columns].reset_index(drop=True)


def imafm_frame(sweep: Sequence[tuple[float, float | None]]) -> pd.DataFrame:
    """Frame for fig-imafm from ``ima_thickness_sweep`` output."""
    return pd.DataFrame(
        [(h, t is not None, t) for h, t in sweep], columns=["h_ima", "nucleated", "t_nucleate"]
    )


def front_summary(front: ParetoFront, knee: KneeSelection | None) -> dict[str, Any]:
    return {
        "front": [
            {"index": p.index, "j_c": p.j_c, "v_fe": p.v_fe, "ms_pma": p.ms_pma,
             "t_comet": p.t_comet, "e_comet": p.e_comet}
            for p in front.points
        ],
        "knee": None if knee is None else {
            "index": knee.point.index,
            "j_c": knee.point.j_c,
            "flagged": knee.flagged,
            "gains_per_doubling": knee.gains,
        },
    }


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    logger.info(f"Wrote {path}")
    return path


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    """CSV with pandas' default shortest round-trip float text."""
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return write_text(path, buffer.getvalue())


def write_json(payload: Any, path: Path) -> Path:
    return write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_metadata(out_dir: Path, command: str, config: CometConfig) -> Path:
    """Provenance sidecar: package version, command, resolved config, UTC time."""
    from comet_dse import __version__

    payload = {
        "version": __version__,
        "command": command,
        "config": config.model_dump(mode="json"),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return write_json(payload, out_dir / "metadata.json")
