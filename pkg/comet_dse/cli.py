"""
Command-line interface for comet-dse.

Exit codes: 0 success, 1 unexpected error, 2 configuration or argument
error, 3 solver failure, 4 incomplete sweep.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import pandas as pd

from comet_dse import calibration, reporting
from comet_dse.config import CometConfig, load_config
from comet_dse.domain_wall import propagate, velocity_vs_jc
from comet_dse.errors import CometError, IncompleteSweepError
from comet_dse.exploration import (
    DesignPoint,
    cluster_by_ms,
    evaluate_gate,
    load_checkpoint,
    pareto_front,
    results_frame,
    robust_point,
    run_sweep,
    velocity_curves,
)
from comet_dse.micromagnetics import (
    NucleationCase,
    ima_thickness_sweep,
    nucleation_delay,
    snapshot_frame,
    threshold_voltage,
)
from comet_dse.performance import stage_schedule
from comet_dse.settings import get_settings

logger = logging.getLogger(__name__)

SWEEP_FIGURES = {"nucleation": "fig-nuc", "propagation": "fig-prop", "gate": "fig-edp"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="comet-dse",
        description="Magnetoelectric domain-wall logic simulator and design-space explorer",
        epilog="Environment: COMET_CONFIG_DIR (directory holding comet.yaml), "
        "COMET_LOG_LEVEL, COMET_JOBS.",
    )
    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="Path to a YAML config file")
    common.add_argument(
        "--set",
        "-s",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config value by dotted path, e.g. material.ms_pma='0.4e6 A/m' (repeatable)",
    )
    common.add_argument("--out", "-o", default="out", help="Output directory (default: out)")
    common.add_argument("--quiet", "-q", action="store_true", help="Only log warnings and errors")

    nucleate_parser = subparsers.add_parser(
        "nucleate", parents=[common], help="Run ME-driven nucleation on the magnetization grid"
    )
    nucleate_parser.add_argument(
        "--case",
        choices=[c.value for c in NucleationCase],
        default=NucleationCase.COMPOSITE_2F.value,
        help="Input structure and drive window",
    )
    nucleate_parser.add_argument(
        "--threshold",
        action="store_true",
        help="Bisect the minimum nucleating V_FE for every structure instead",
    )
    nucleate_parser.add_argument(
        "--ima-sweep",
        action="store_true",
        help="Nucleation delay versus IMA thickness (sweep.ima_thicknesses)",
    )

    propagate_parser = subparsers.add_parser(
        "propagate", parents=[common], help="Drive the domain wall to the output"
    )
    propagate_parser.add_argument(
        "--curve",
        action="store_true",
        help="Velocity versus current density over sweep.jc_values",
    )

    subparsers.add_parser(
        "gate", parents=[common], help="Delay and energy of one gate evaluation"
    )

    sweep_parser = subparsers.add_parser(
        "sweep", parents=[common], help="Explore the configured parameter space"
    )
    sweep_parser.add_argument(
        "--mode",
        "-m",
        choices=list(SWEEP_FIGURES),
        help="Solver stage to run per point (default: sweep.mode)",
    )
    sweep_parser.add_argument("--jobs", "-j", type=int, help="Worker processes (default: COMET_JOBS)")
    sweep_parser.add_argument(
        "--figure",
        "-f",
        choices=list(reporting.PLOT_KINDS),
        help="Figure data to emit (default: the one matching the mode)",
    )

    pareto_parser = subparsers.add_parser(
        "pareto", parents=[common], help="Energy-delay front and knee of a gate sweep"
    )
    pareto_parser.add_argument(
        "--input", "-i", help="Sweep checkpoint (default: <out>/results.jsonl)"
    )

    subparsers.add_parser(
        "report", parents=[common], help="Delay/energy table at the calibrated design point"
    )
    return parser


def _configure_logging(quiet: bool) -> None:
    level = "WARNING" if quiet else get_settings().log_level.upper()
    logging.basicConfig(
        format="%(asctime)s - %(levelname)s - %(name)s -   %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        level=level,
    )


def _show_progress(args: argparse.Namespace) -> bool:
    return not args.quiet and sys.stderr.isatty()


def _run_nucleate(args: argparse.Namespace, config: CometConfig, out: Path) -> None:
    progress = _show_progress(args)
    common = dict(
        settings=config.llg, fe_settings=config.ferroelectric, constants=config.constants
    )
    if args.threshold:
        rows = []
        for case in NucleationCase:
            v_min = threshold_voltage(
                case, config.material, config.geometry, show_progress=progress, **common
            )
            rows.append({"case": case.value, "v_threshold": v_min})
            print(f"{case.value}: {'none' if v_min is None else f'{v_min * 1e3:.1f} mV'}")
        reporting.write_json(rows, out / "thresholds.json")
        return
    if args.ima_sweep:
        sweep = ima_thickness_sweep(
            config.sweep.ima_thicknesses, config.material, config.drive.v_fe, config.geometry,
            show_progress=progress, **common,
        )
        reporting.write_frame(
            reporting.emit_plotdata("fig-imafm", reporting.imafm_frame(sweep)), out / "fig-imafm.csv"
        )
        return

    case = NucleationCase(args.case)
    run = nucleation_delay(config.drive.v_fe, config.material, config.geometry, case, **common)
    reporting.write_frame(run.trace, out / "nucleation_trace.csv")
    reporting.write_frame(snapshot_frame(run.final_grid, float(run.trace["t"].iloc[-1])),
                          out / "final_grid.csv")
    reporting.write_json(
        {"case": case.value, "v_fe": config.drive.v_fe, "nucleated": run.nucleated,
         "t_nucleate": run.t_nucleate},
        out / "nucleation.json",
    )
    if run.nucleated:
        print(f"Nucleated after {run.t_nucleate * 1e12:.1f} ps")
    else:
        print(f"No nucleation within {config.llg.horizon * 1e12:.0f} ps")


def _run_propagate(args: argparse.Namespace, config: CometConfig, out: Path) -> None:
    distance = config.geometry.distance_for(config.sweep.gate)
    if args.curve:
        curve = velocity_vs_jc(
            sorted(config.sweep.jc_values), config.material, distance, config.geometry,
            config.dw, config.constants, show_progress=_show_progress(args),
        )
        frame = pd.DataFrame(curve, columns=["j_c", "v_avg"])
        reporting.write_frame(frame, out / "velocity.csv")
        return
    result = propagate(
        distance, config.material, config.drive.j_c, geometry=config.geometry,
        settings=config.dw, constants=config.constants,
    )
    reporting.write_frame(result.trace, out / "propagation_trace.csv")
    reporting.write_json(
        {"distance": distance, "j_c": config.drive.j_c, "t_propagate": result.t_propagate,
         "v_avg": result.v_avg},
        out / "propagation.json",
    )
    print(f"t_propagate = {result.t_propagate * 1e12:.1f} ps, v_avg = {result.v_avg:.1f} m/s")


def _run_gate(args: argparse.Namespace, config: CometConfig, out: Path) -> None:
    point = evaluate_gate(DesignPoint(index=0, j_c=config.drive.j_c, v_fe=config.drive.v_fe), config)
    if point.report is None:
        print("Input did not nucleate; no gate report")
        return
    report = point.report
    reporting.write_text(out / "table2.csv", reporting.emit_table2([report]))
    reporting.write_text(out / "reports.json", reporting.emit_reports_json([report]))
    reporting.write_frame(
        pd.DataFrame([vars(p) for p in stage_schedule(report)]), out / "schedule.csv"
    )
    reporting.write_json(reporting.report_annotations([report]), out / "annotations.json")
    print(f"T = {report.t_comet * 1e12:.1f} ps, E = {report.e_comet * 1e18:.1f} aJ")


def _run_sweep(args: argparse.Namespace, config: CometConfig, out: Path) -> None:
    mode = args.mode or config.sweep.mode
    jobs = args.jobs or get_settings().jobs
    points = run_sweep(
        config, mode=mode, jobs=jobs, checkpoint=out / "results.jsonl",
        show_progress=_show_progress(args),
    )
    frame = results_frame(points)
    reporting.write_frame(frame, out / "results.csv")
    figure = args.figure or SWEEP_FIGURES[mode]
    reporting.write_frame(reporting.emit_plotdata(figure, frame), out / f"{figure}.csv")
    if mode == "propagation":
        clusters = cluster_by_ms(velocity_curves(points))
        reporting.write_json(
            {"clusters": {str(ms): len(members) for ms, members in clusters.groups.items()},
             "separated": clusters.separated},
            out / "clusters.json",
        )
    failed = int(frame["error"].notna().sum())
    print(f"{len(points)} points evaluated, {failed} failed")


def _run_pareto(args: argparse.Namespace, config: CometConfig, out: Path) -> None:
    points = load_checkpoint(Path(args.input) if args.input else out / "results.jsonl")
    front = pareto_front(points)
    if not front.points:
        raise IncompleteSweepError("No gate reports in the sweep results; run a gate sweep")
    reporting.write_frame(results_frame(front.points), out / "pareto.csv")

    # knee per (material corner, V_FE) energy-delay curve
    slices: dict[tuple, list[DesignPoint]] = {}
    for p in points:
        slices.setdefault((p.ms_pma, p.ku_pma, p.a_ex, p.alpha, p.v_fe), []).append(p)
    knees = []
    for key, members in slices.items():
        curve = pareto_front(members)
        if curve.points:
            knee = robust_point(curve, config.sweep.knee_threshold)
            knees.append({"corner": list(key), **reporting.front_summary(curve, knee)["knee"]})
    summary = reporting.front_summary(front, None)
    summary["knees"] = knees
    reporting.write_json(summary, out / "pareto.json")
    print(f"Front of {len(front)} points; {len(knees)} curve knees")


def _run_report(args: argparse.Namespace, config: CometConfig, out: Path) -> None:
    fit = calibration.fit_calibration(config.precision)
    published = reporting.published_reports(fit)
    modelled = reporting.modelled_reports(config)
    reporting.write_text(out / "table2.csv", reporting.emit_table2(modelled))
    reporting.write_text(out / "reports.json", reporting.emit_reports_json(modelled))
    reporting.write_text(out / "table2_published.csv", reporting.emit_table2(published))
    reporting.write_json(
        {
            "modelled": reporting.report_annotations(modelled),
            "published": reporting.report_annotations(published),
            "calibration": json.loads(fit.model_dump_json()),
        },
        out / "annotations.json",
    )
    print(reporting.emit_table2(modelled), end="")


HANDLERS = {
    "nucleate": _run_nucleate,
    "propagate": _run_propagate,
    "gate": _run_gate,
    "sweep": _run_sweep,
    "pareto": _run_pareto,
    "report": _run_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    _configure_logging(args.quiet)

    try:
        config = load_config(args.config, args.overrides)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        HANDLERS[args.command](args, config, out)
        reporting.write_metadata(out, " ".join(["comet-dse", *(argv or sys.argv[1:])]), config)
    except CometError as exc:
        logger.error(str(exc))
        return exc.exit_code
    except Exception:
        logger.exception("Unexpected failure")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
