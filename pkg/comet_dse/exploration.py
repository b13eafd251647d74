"""
Design-space exploration: grid enumeration, per-point solver runs,
checkpointed parallel sweeps, energy-delay Pareto fronts and knee selection.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from comet_dse import calibration
from comet_dse.domain_wall import propagate
from comet_dse.errors import (
    ConfigError,
    IncompleteSweepError,
    InvalidArgumentError,
    SolverError,
)
from comet_dse.micromagnetics import NucleationCase, nucleation_delay
from comet_dse.params import GateKind, MaterialParams
from comet_dse.performance import GateReport, gate_report

if TYPE_CHECKING:
    from comet_dse.config import CometConfig

logger = logging.getLogger(__name__)

SweepMode = Literal["nucleation", "propagation", "gate"]
MODES: tuple[str, ...] = ("nucleation", "propagation", "gate")

# Current densities above this are used for the cluster separation verdict
CLUSTER_JC_FLOOR = 1e11

RESULT_COLUMNS = [
    "index",
    "ms_pma",
    "ku_pma",
    "a_ex",
    "alpha",
    "j_c",
    "v_fe",
    "mode",
    "nucleated",
    "t_nucleate",
    "t_propagate",
    "v_avg",
    "t_qtransfer",
    "e_fe",
    "e_tx",
    "e_joule",
    "e_leakage",
    "t_comet",
    "e_comet",
    "error",
]


def _swept(default: list[float], dimension: str | None) -> Any:
    return Field(default_factory=lambda: list(default), json_schema_extra={"dimension": dimension})


class SweepSettings(BaseModel):
    """Sweep definition (config section ``sweep``)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: SweepMode = "gate"
    ms_values: list[float] = _swept([0.3e6, 0.4e6, 0.5e6], "field")
    ku_values: list[float] = _swept([0.5e6, 0.6e6, 1.0e6], "energy_density")
    a_values: list[float] = _swept([10e-12, 20e-12, 30e-12, 40e-12], "exchange")
    alpha_values: list[float] = _swept([0.01, 0.05, 0.08, 0.1], None)
    jc_values: list[float] = _swept(np.logspace(10, 12, 13).tolist(), "current_density")
    vfe_values: list[float] = _swept([0.11, 0.15], "voltage")
    # exchange stiffness kept for propagation and gate sweeps once nucleation has been mapped
    selected_a: float = Field(10e-12, gt=0, json_schema_extra={"dimension": "exchange"})
    ima_thicknesses: list[float] = _swept([1e-9, 2e-9, 3e-9], "length")
    # grid: run the LLG solver per point; calibrated: published t_nucleate per (node, V_FE)
    nucleation: Literal["grid", "calibrated"] = "calibrated"
    gate: GateKind = GateKind.MAJ3
    knee_threshold: float = Field(0.10, gt=0)


class ParameterSpace(BaseModel):
    """Value sets of the swept axes; an empty set leaves that axis at the config value."""

    model_config = ConfigDict(frozen=True)

    ms_values: list[float] = Field(default_factory=lambda: [0.3e6, 0.4e6, 0.5e6])
    ku_values: list[float] = Field(default_factory=lambda: [0.5e6, 0.6e6, 1.0e6])
    a_values: list[float] = Field(default_factory=lambda: [10e-12, 20e-12, 30e-12, 40e-12])
    alpha_values: list[float] = Field(default_factory=lambda: [0.01, 0.05, 0.08, 0.1])
    jc_values: list[float] = Field(default_factory=list)
    vfe_values: list[float] = Field(default_factory=list)

    @classmethod
    def for_mode(cls, sweep: SweepSettings, mode: str | None = None) -> "ParameterSpace":
        """Axes relevant to a sweep mode: nucleation ignores J_c, propagation ignores
        V_FE, and both downstream modes hold A at ``selected_a``."""
        mode = mode or sweep.mode
        if mode not in MODES:
            raise InvalidArgumentError(f"Unknown sweep mode '{mode}'")
        if mode == "nucleation":
            return cls(
                ms_values=sweep.ms_values,
                ku_values=sweep.ku_values,
                a_values=sweep.a_values,
                alpha_values=sweep.alpha_values,
                vfe_values=sweep.vfe_values,
            )
        return cls(
            ms_values=sweep.ms_values,
            ku_values=sweep.ku_values,
            a_values=[sweep.selected_a],
            alpha_values=sweep.alpha_values,
            jc_values=sorted(sweep.jc_values),
            vfe_values=sweep.vfe_values if mode == "gate" else [],
        )


class DesignPoint(BaseModel):
    """One corner of the space plus whatever results the evaluated mode produced."""

    model_config = ConfigDict(frozen=True)

    index: int
    ms_pma: float | None = None
    ku_pma: float | None = None
    a_ex: float | None = None
    alpha: float | None = None
    j_c: float | None = None
    v_fe: float | None = None

    mode: str | None = None
    nucleated: bool | None = None
    t_nucleate: float | None = None
    t_propagate: float | None = None
    v_avg: float | None = None
    report: GateReport | None = None
    error: str | None = None

    @property
    def evaluated(self) -> bool:
        return self.mode is not None

    @property
    def t_comet(self) -> float | None:
        return self.report.t_comet if self.report else None

    @property
    def e_comet(self) -> float | None:
        return self.report.e_comet if self.report else None

    def material(self, base: MaterialParams) -> MaterialParams:
        """``base`` with this point's material overrides applied."""
        update = {
            name: getattr(self, name)
            for name in ("ms_pma", "ku_pma", "a_ex", "alpha")
            if getattr(self, name) is not None
        }
        return base.model_copy(update=update)

    def row(self) -> dict[str, Any]:
        """Flat result row with the RESULT_COLUMNS layout."""
        report = self.report
        values: dict[str, Any] = self.model_dump(exclude={"report"})
        values.update(
            {
                "t_qtransfer": report.delays.t_qtransfer if report else None,
                "e_fe": report.energies.e_fe if report else None,
                "e_tx": report.energies.e_tx if report else None,
                "e_joule": report.energies.e_joule if report else None,
                "e_leakage": report.energies.e_leakage if report else None,
                "t_comet": self.t_comet,
                "e_comet": self.e_comet,
            }
        )
        if report is not None and values["t_propagate"] is None:
            values["t_propagate"] = report.delays.t_propagate
        return {name: values.get(name) for name in RESULT_COLUMNS}

    def to_record(self) -> dict[str, Any]:
        return self.model_dump(mode="json")

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "DesignPoint":
        record = dict(record)
        report = record.pop("report", None)
        if report is not None:
            record["report"] = GateReport.from_record(report)
        return cls.model_validate(record)


def enumerate_space(
    space: ParameterSpace,
    predicate: Callable[[DesignPoint], bool] | None = None,
) -> list[DesignPoint]:
    """Cartesian product of the non-empty axes in field order (Ms, Ku, A, alpha, J_c, V_FE).

    Indices are assigned after filtering, so they are contiguous.
    """
    axes = [
        ("ms_pma", space.ms_values),
        ("ku_pma", space.ku_values),
        ("a_ex", space.a_values),
        ("alpha", space.alpha_values),
        ("j_c", space.jc_values),
        ("v_fe", space.vfe_values),
    ]
    names = [name for name, values in axes if values]
    product = itertools.product(*[values for _, values in axes if values])
    points = []
    for combo in product:
        point = DesignPoint(index=len(points), **dict(zip(names, combo)))
        if predicate is None or predicate(point):
            points.append(point)
    return points


def evaluate_gate(point: DesignPoint, config: CometConfig) -> DesignPoint:
    """Nucleation, propagation and gate report for one point; solver errors propagate."""
    constants = config.constants
    material = point.material(config.material)
    geometry = config.geometry
    v_fe = point.v_fe if point.v_fe is not None else config.drive.v_fe
    j_c = point.j_c if point.j_c is not None else config.drive.j_c
    gate = config.sweep.gate

    if config.sweep.nucleation == "calibrated":
        t_nucleate = calibration.calibrated_t_nucleate(config.node, v_fe)
    else:
        run = nucleation_delay(
            v_fe, material, geometry, NucleationCase.COMPOSITE_2F,
            config.llg, config.ferroelectric, constants,
        )
        if not run.nucleated:
            return point.model_copy(update={"mode": "gate", "nucleated": False})
        t_nucleate = run.t_nucleate

    drive = config.drive.model_copy(update={"v_fe": v_fe, "j_c": j_c})
    if config.perf.drive_source == "calibrated":
        drive = calibration.calibrated_drive(drive, config.node)
        geometry = calibration.calibrated_geometry(geometry, config.node)
    transistor = calibration.calibrated_transistor(config.transistor, v_fe)

    result = propagate(
        geometry.distance_for(gate), material, j_c, geometry=geometry, settings=config.dw,
        constants=constants,
    )
    report = gate_report(
        gate, material, geometry, transistor, drive, t_nucleate, result.t_propagate,
        settings=config.perf, constants=constants,
    )
    return point.model_copy(
        update={
            "mode": "gate",
            "nucleated": True,
            "t_nucleate": t_nucleate,
            "t_propagate": result.t_propagate,
            "v_avg": result.v_avg,
            "report": report,
        }
    )


def run_point(point: DesignPoint, mode: str, config: CometConfig) -> DesignPoint:
    """Evaluate one design point; solver failures are recorded on the point.

    Re-running a point already evaluated in ``mode`` returns it unchanged.
    """
    if mode not in MODES:
        raise InvalidArgumentError(f"Unknown sweep mode '{mode}'")
    if point.mode == mode:
        return point
    try:
        if mode == "nucleation":
            v_fe = point.v_fe if point.v_fe is not None else config.drive.v_fe
            run = nucleation_delay(
                v_fe, point.material(config.material), config.geometry,
                NucleationCase.COMPOSITE_2F, config.llg, config.ferroelectric, config.constants,
            )
            return point.model_copy(
                update={"mode": mode, "nucleated": run.nucleated, "t_nucleate": run.t_nucleate}
            )
        if mode == "propagation":
            j_c = point.j_c if point.j_c is not None else config.drive.j_c
            result = propagate(
                config.geometry.distance_for(config.sweep.gate), point.material(config.material),
                j_c, geometry=config.geometry, settings=config.dw, constants=config.constants,
            )
            return point.model_copy(
                update={"mode": mode, "t_propagate": result.t_propagate, "v_avg": result.v_avg}
            )
        return evaluate_gate(point, config)
    except SolverError as exc:
        logger.warning(f"Point {point.index} failed in {mode} mode: {exc}")
        return point.model_copy(update={"mode": mode, "error": f"{type(exc).__name__}: {exc}"})


def _evaluate(args: tuple[DesignPoint, str, CometConfig]) -> DesignPoint:
    point, mode, config = args
    return run_point(point, mode, config)


def sweep_fingerprint(config: CometConfig, mode: str) -> str:
    payload = json.dumps({"mode": mode, "config": config.model_dump(mode="json")}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _read_checkpoint(path: Path, fingerprint: str | None = None) -> dict[int, DesignPoint]:
    if not path.exists():
        return {}
    done: dict[int, DesignPoint] = {}
    with path.open() as handle:
        lines = handle.read().splitlines()
    if not lines:
        return {}
    header = json.loads(lines[0])
    if fingerprint is not None and header.get("sweep") != fingerprint:
        raise ConfigError(
            f"Checkpoint {path} belongs to a different sweep; remove it or change --out"
        )
    for number, line in enumerate(lines[1:], start=2):
        try:
            point = DesignPoint.from_record(json.loads(line))
        except (json.JSONDecodeError, ValueError):
            # an interrupted write leaves at most one partial trailing line
            logger.warning(f"Skipping unreadable checkpoint line {number} in {path}")
            continue
        done[point.index] = point
    return done


def load_checkpoint(path: str | Path) -> list[DesignPoint]:
    """Points recorded in a sweep checkpoint, ordered by index."""
    path = Path(path)
    if not path.is_file():
        raise IncompleteSweepError(f"No sweep results at {path}")
    done = _read_checkpoint(path)
    return [done[i] for i in sorted(done)]


def run_sweep(
    config: CometConfig,
    mode: str | None = None,
    jobs: int = 1,
    checkpoint: str | Path | None = None,
    predicate: Callable[[DesignPoint], bool] | None = None,
    show_progress: bool = False,
) -> list[DesignPoint]:
    """Evaluate every point of the configured space, ordered by index.

    With ``checkpoint`` set, each finished point is appended to that JSON-lines
    file and already-finished indices are skipped on the next call.
    """
    mode = mode or config.sweep.mode
    if jobs < 1:
        raise InvalidArgumentError(f"jobs must be >= 1, got {jobs}")
    points = enumerate_space(ParameterSpace.for_mode(config.sweep, mode), predicate)
    fingerprint = sweep_fingerprint(config, mode)

    done: dict[int, DesignPoint] = {}
    handle = None
    if checkpoint is not None:
        path = Path(checkpoint)
        done = _read_checkpoint(path, fingerprint)
        fresh = not path.exists() or path.stat().st_size == 0
        torn = not fresh and not path.read_bytes().endswith(b"\n")
        path.parent.mkdir(parents=True, exist_ok=True)
        handle = path.open("a")
        if fresh:
            handle.write(json.dumps({"sweep": fingerprint}) + "\n")
            handle.flush()
        elif torn:
            handle.write("\n")
    pending = [p for p in points if p.index not in done]
    logger.info(
        f"Sweep ({mode}): {len(points)} points, {len(done)} from checkpoint, "
        f"{len(pending)} to run on {jobs} worker(s)"
    )

    def record(point: DesignPoint) -> None:
        done[point.index] = point
        if handle is not None:
            handle.write(json.dumps(point.to_record()) + "\n")
            handle.flush()

    try:
        progress = tqdm(total=len(pending), desc=f"{mode} sweep", disable=not show_progress)
        if jobs == 1:
            for point in pending:
                record(run_point(point, mode, config))
                progress.update(1)
        else:
            with ProcessPoolExecutor(max_workers=jobs) as executor:
                futures = [executor.submit(_evaluate, (p, mode, config)) for p in pending]
                for future in as_completed(futures):
                    record(future.result())
                    progress.update(1)
        progress.close()
    finally:
        if handle is not None:
            handle.close()

    failed = sum(1 for p in done.values() if p.error)
    if failed:
        logger.warning(f"{failed} of {len(points)} points failed; see the error column")
    return [done[p.index] for p in points]


def results_frame(points: Iterable[DesignPoint]) -> pd.DataFrame:
    """Result rows sorted by point index with the stable RESULT_COLUMNS header."""
    rows = sorted((p.row() for p in points), key=lambda r: r["index"])
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def pareto_indices(delays: Sequence[float], energies: Sequence[float]) -> list[int]:
    """Positions of the non-dominated (delay, energy) pairs, ascending in delay.

    Exact duplicates keep the first occurrence.
    """
    t = np.asarray(delays, dtype=float)
    e = np.asarray(energies, dtype=float)
    if t.shape != e.shape:
        raise InvalidArgumentError("delays and energies must have the same length")
    order = np.lexsort((np.arange(t.size), e, t))
    front: list[int] = []
    best = math.inf
    for i in order:
        if e[i] < best:
            front.append(int(i))
            best = e[i]
    return front


class ParetoFront(BaseModel):
    """Non-dominated design points, ascending in T_CoMET and strictly descending in E_CoMET."""

    model_config = ConfigDict(frozen=True)

    points: list[DesignPoint] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def entries(self) -> list[tuple[float, float, DesignPoint]]:
        return [(p.t_comet, p.e_comet, p) for p in self.points]


def pareto_front(points: Sequence[DesignPoint]) -> ParetoFront:
    """Energy-delay front over the points that carry a gate report."""
    candidates = [p for p in points if p.report is not None and p.error is None]
    if not candidates:
        return ParetoFront()
    keep = pareto_indices([p.t_comet for p in candidates], [p.e_comet for p in candidates])
    return ParetoFront(points=[candidates[i] for i in keep])


@dataclass(frozen=True)
class KneeSelection:
    point: DesignPoint
    # True when no step fell below the threshold and the last point was taken
    flagged: bool
    gains: list[float] = field(default_factory=list)


def robust_point(front: ParetoFront, knee_threshold: float = 0.10) -> KneeSelection:
    """First point, walking up in J_c, whose delay gain per J_c doubling is below
    ``knee_threshold`` (relative to the previous point's T_CoMET)."""
    if not front.points:
        raise InvalidArgumentError("Cannot select a robust point from an empty front")
    ordered = sorted(
        front.points, key=lambda p: (p.j_c if p.j_c is not None else 0.0, -p.t_comet)
    )
    gains = []
    for prev, cur in zip(ordered, ordered[1:]):
        gain = (prev.t_comet - cur.t_comet) / prev.t_comet
        if prev.j_c and cur.j_c and cur.j_c > prev.j_c:
            gain *= math.log(2.0) / math.log(cur.j_c / prev.j_c)
        gains.append(gain)
        if gain < knee_threshold:
            logger.info(f"Knee at J_c={cur.j_c:.3e} A/m^2 (gain per doubling {gain:.1%})")
            return KneeSelection(point=cur, flagged=False, gains=gains)
    logger.warning(f"Delay gain never fell below {knee_threshold:.0%}; taking the last point")
    return KneeSelection(point=ordered[-1], flagged=True, gains=gains)


@dataclass(frozen=True)
class MsClusters:
    groups: dict[float, list[tuple[Any, list[tuple[float, float]]]]]
    # inter-cluster separation exceeds intra-cluster spread at every J_c above the floor
    separated: bool


def cluster_by_ms(
    curves: Sequence[tuple[Any, Sequence[tuple[float, float]]]],
    jc_floor: float = CLUSTER_JC_FLOOR,
) -> MsClusters:
    """Group velocity-vs-J_c curves by ``ms_pma`` and check the groups separate.

    ``curves`` holds (params, [(j_c, v_avg), ...]) pairs on a shared J_c grid;
    params is anything with an ``ms_pma`` attribute.
    """
    groups: dict[float, list] = {}
    for params, curve in curves:
        groups.setdefault(params.ms_pma, []).append((params, [tuple(pt) for pt in curve]))
    if len(groups) < 2:
        return MsClusters(groups=groups, separated=True)

    grid = sorted({j for _, curve in curves for j, _ in curve if j > jc_floor})
    separated = True
    for j_c in grid:
        stats = []
        for ms, members in groups.items():
            v = np.array([dict(curve)[j_c] for _, curve in members if j_c in dict(curve)])
            if v.size:
                stats.append((ms, float(v.mean()), float(v.max() - v.min())))
        stats.sort(key=lambda s: s[1])
        for (ms_a, mean_a, spread_a), (ms_b, mean_b, spread_b) in zip(stats, stats[1:]):
            if mean_b - mean_a <= max(spread_a, spread_b):
                logger.info(
                    f"Clusters Ms={ms_a:.2e} and Ms={ms_b:.2e} overlap at J_c={j_c:.3e}"
                )
                separated = False
    return MsClusters(groups=dict(sorted(groups.items())), separated=separated)


def velocity_curves(points: Sequence[DesignPoint]) -> list[tuple[DesignPoint, list[tuple[float, float]]]]:
    """Regroup a propagation sweep into one (corner, curve) pair per material corner."""
    by_corner: dict[tuple, list[DesignPoint]] = {}
    for p in points:
        if p.v_avg is None or p.j_c is None:
            continue
        by_corner.setdefault((p.ms_pma, p.ku_pma, p.a_ex, p.alpha), []).append(p)
    return [
        (members[0], [(p.j_c, p.v_avg) for p in sorted(members, key=lambda p: p.j_c)])
        for members in by_corner.values()
    ]


def nucleation_violations(points: Sequence[DesignPoint]) -> list[tuple[DesignPoint, DesignPoint]]:
    """Corner pairs (lower V_FE, higher V_FE) where raising V_FE lost nucleation or
    slowed it down."""
    by_corner: dict[tuple, list[DesignPoint]] = {}
    for p in points:
        if p.nucleated is None or p.v_fe is None:
            continue
        by_corner.setdefault((p.ms_pma, p.ku_pma, p.a_ex, p.alpha), []).append(p)
    violations = []
    for members in by_corner.values():
        members.sort(key=lambda p: abs(p.v_fe))
        for low, high in zip(members, members[1:]):
            if low.nucleated and not high.nucleated:
                violations.append((low, high))
            elif low.nucleated and high.t_nucleate > low.t_nucleate:
                violations.append((low, high))
    return violations
