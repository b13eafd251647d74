"""Finite-difference LLG grid: fields, stepping, energy and nucleation."""

import logging
import math

import numpy as np
import pytest

from comet_dse.errors import InvalidArgumentError, TimestepTooLargeError
from comet_dse.ferroelectric import FerroelectricSettings
from comet_dse.micromagnetics import (
    PMA,
    PMA_UNDER_IMA,
    LlgSettings,
    MagnetizationGrid,
    MeDrive,
    NucleationCase,
    build_grid,
    detection_strip,
    drive_profile,
    drive_window,
    effective_field,
    energy,
    ima_thickness_sweep,
    llg_step,
    nucleate,
    nucleation_delay,
    prism_demag_factors,
    relax,
    snapshot_frame,
    stability_bound,
    threshold_voltage,
)
from comet_dse.params import DeviceGeometry

MS = 0.3e6
KU = 0.5e6


def _macrospin(tilt: float) -> MagnetizationGrid:
    return MagnetizationGrid(
        cells=np.array([[[math.sin(tilt), 0.0, math.cos(tilt)]]]),
        cell_size=(1e-9, 1e-9),
        thickness=1e-9,
        layer_map=np.full((1, 1), PMA),
        ms_map=np.full((1, 1), MS),
        ku_map=np.full((1, 1), KU),
        easy_axis_map=np.array([[[0.0, 0.0, 1.0]]]),
        a_ex=10e-12,
    )


def _constant(h):
    h = np.asarray(h, dtype=float)
    return lambda _t: h


@pytest.fixture
def small_geometry():
    return DeviceGeometry(f_feat=5e-9)


def test_cube_demag_factors_are_a_third():
    for factor in prism_demag_factors(1.0, 1.0, 1.0):
        assert factor == pytest.approx(1.0 / 3.0, abs=1e-12)


@pytest.mark.parametrize("dims", [(2.0, 1.0, 0.1), (30e-9, 15e-9, 1e-9), (5.0, 3.0, 7.0)])
def test_demag_factors_sum_to_one(dims):
    assert sum(prism_demag_factors(*dims)) == pytest.approx(1.0, abs=1e-10)


def test_thin_prism_factors_order_with_the_sides():
    nx, ny, nz = prism_demag_factors(2.0, 1.0, 0.1)
    assert nx < ny < nz


def test_demag_factors_reject_degenerate_prism():
    with pytest.raises(InvalidArgumentError):
        prism_demag_factors(1.0, 0.0, 1.0)


def test_composite_grid_layout(design_material, geometry_15nm):
    grid = build_grid(design_material, geometry_15nm, NucleationCase.COMPOSITE_2F)
    assert grid.shape == (90, 15)
    under = grid.layer_map == PMA_UNDER_IMA
    assert under.sum() == 30 * 15
    assert under[:30, :].all()
    assert np.all(grid.bias_map[under, 0] > 0)
    assert np.all(grid.bias_map[~under] == 0.0)
    assert np.all(grid.shape_k_map[under] > 0)


@pytest.mark.parametrize("case", [NucleationCase.BARE_2F, NucleationCase.BARE_1F])
def test_bare_grid_has_no_ima(design_material, geometry_15nm, case):
    grid = build_grid(design_material, geometry_15nm, case)
    assert np.all(grid.layer_map == PMA)
    assert np.all(grid.bias_map == 0.0)


def test_zero_ima_thickness_drops_the_layer(design_material, geometry_15nm):
    geometry = geometry_15nm.model_copy(update={"h_ima": 0.0})
    grid = build_grid(design_material, geometry, NucleationCase.COMPOSITE_2F)
    assert np.all(grid.layer_map == PMA)


@pytest.mark.parametrize(
    "case, window_rows, strip_rows",
    [
        (NucleationCase.COMPOSITE_2F, 30, (15, 30)),
        (NucleationCase.BARE_2F, 30, (15, 30)),
        (NucleationCase.BARE_1F, 15, (0, 15)),
    ],
)
def test_window_and_detection_strip(design_material, geometry_15nm, case, window_rows, strip_rows):
    grid = build_grid(design_material, geometry_15nm, case)
    window = drive_window(grid, geometry_15nm, case)
    strip = detection_strip(grid, geometry_15nm, case)
    assert window[:window_rows].all() and not window[window_rows:].any()
    start, end = strip_rows
    assert strip[start:end].all()
    assert strip.sum() == (end - start) * grid.shape[1]


def test_drive_profile_ramps_from_the_window_edges(design_material, geometry_15nm):
    grid = build_grid(design_material, geometry_15nm, NucleationCase.BARE_1F)
    profile = drive_profile(grid, geometry_15nm, NucleationCase.BARE_1F, 4e-9)
    row = profile[:, 0]
    assert row[:4] == pytest.approx([0.125, 0.375, 0.625, 0.875])
    assert row[4:11] == pytest.approx([1.0] * 7)
    assert row[11:15] == pytest.approx([0.875, 0.625, 0.375, 0.125])
    assert not row[15:].any()
    assert np.all(profile == profile[:, :1])


def test_wide_window_keeps_a_fully_driven_core(design_material, geometry_15nm):
    grid = build_grid(design_material, geometry_15nm, NucleationCase.BARE_2F)
    strip = detection_strip(grid, geometry_15nm, NucleationCase.BARE_2F)
    profile = drive_profile(grid, geometry_15nm, NucleationCase.BARE_2F, 4e-9)
    assert (profile[strip] == 1.0).mean() > 0.7
    narrow = NucleationCase.BARE_1F
    narrow_grid = build_grid(design_material, geometry_15nm, narrow)
    narrow_profile = drive_profile(narrow_grid, geometry_15nm, narrow, 4e-9)
    narrow_strip = detection_strip(narrow_grid, geometry_15nm, narrow)
    assert (narrow_profile[narrow_strip] == 1.0).mean() < 0.5


def test_zero_fringe_is_the_bare_window(design_material, geometry_15nm):
    grid = build_grid(design_material, geometry_15nm, NucleationCase.COMPOSITE_2F)
    profile = drive_profile(grid, geometry_15nm, NucleationCase.COMPOSITE_2F, 0.0)
    window = drive_window(grid, geometry_15nm, NucleationCase.COMPOSITE_2F)
    np.testing.assert_array_equal(profile, window.astype(float))


def test_uniform_field_on_bare_grid(design_material, geometry_15nm, constants):
    settings = LlgSettings(initial_tilt=0.0)
    grid = build_grid(design_material, geometry_15nm, NucleationCase.BARE_2F, settings)
    h = effective_field(grid, (10, 7), np.zeros(3), constants=constants)
    expected_z = 2 * KU / (constants.mu0 * MS) - MS
    assert h == pytest.approx([0.0, 0.0, expected_z])


def test_effective_field_rejects_outside_cell(design_material, geometry_15nm):
    grid = build_grid(design_material, geometry_15nm, NucleationCase.BARE_2F)
    with pytest.raises(InvalidArgumentError):
        effective_field(grid, (90, 0), np.zeros(3))


def test_default_step_is_halved_on_fine_cells(design_material, geometry_15nm, constants, caplog):
    grid = build_grid(design_material, geometry_15nm, NucleationCase.COMPOSITE_2F)
    bound = stability_bound(grid, 0.0, constants)
    assert 25e-15 < bound < 50e-15
    with pytest.raises(TimestepTooLargeError):
        llg_step(grid, _constant(np.zeros(3)), 0.01, 50e-15, constants=constants)
    with caplog.at_level(logging.WARNING, logger="comet_dse.micromagnetics"):
        relaxed = relax(grid, duration=0.1e-12, constants=constants)
    assert "Halving LLG step to 2.500e-14" in caplog.text
    assert np.allclose(np.linalg.norm(relaxed.cells, axis=-1), 1.0)


def test_llg_step_rejects_non_positive_dt():
    with pytest.raises(InvalidArgumentError):
        llg_step(_macrospin(0.1), _constant(np.zeros(3)), 0.1, 0.0)


def test_relax_with_zero_duration_is_identity(design_material, small_geometry):
    grid = build_grid(design_material, small_geometry, NucleationCase.BARE_2F)
    assert relax(grid, duration=0.0) is grid


def test_mirrored_grid_evolves_as_the_mirror(design_material, small_geometry, constants):
    settings = LlgSettings(initial_tilt=math.radians(10))
    grid = build_grid(design_material, small_geometry, NucleationCase.COMPOSITE_2F, settings, constants)
    step = llg_step(grid, _constant(np.zeros(3)), 0.05, 10e-15, constants=constants)
    step_of_mirror = llg_step(grid.mirrored(), _constant(np.zeros(3)), 0.05, 10e-15,
                              constants=constants)
    np.testing.assert_allclose(step_of_mirror.cells, step.mirrored().cells, atol=1e-12)


def test_damped_relaxation_lowers_energy(design_material, small_geometry, constants):
    settings = LlgSettings(initial_tilt=math.radians(20))
    grid = build_grid(design_material, small_geometry, NucleationCase.BARE_2F, settings, constants)
    energies = [energy(grid, constants=constants)]
    for _ in range(4):
        grid = relax(grid, duration=5e-12, settings=settings, constants=constants)
        energies.append(energy(grid, constants=constants))
    assert all(b <= a for a, b in zip(energies, energies[1:]))
    assert energies[-1] < energies[0]
    assert grid.mean_tilt() < math.radians(20)


def test_undamped_energy_error_shrinks_with_dt(constants):
    h_field = np.array([1e6, 0.0, 0.0])

    def drift(dt):
        grid = _macrospin(math.radians(30))
        start = energy(grid, h_field, constants)
        t = 0.0
        for _ in range(int(round(20e-12 / dt))):
            grid = llg_step(grid, _constant(h_field), 0.0, dt, t, constants)
            t += dt
        return abs(energy(grid, h_field, constants) - start)

    assert drift(0.4e-12) / drift(0.2e-12) > 4


def _macrospin_switch(alpha, constants, dt=0.1e-12, horizon=3e-9):
    grid = _macrospin(math.radians(1))
    field = _constant(np.array([0.0, 0.0, -3e6]))
    mz = [grid.cells[0, 0, 2]]
    t = 0.0
    while t < horizon:
        grid = llg_step(grid, field, alpha, dt, t, constants)
        t += dt
        mz.append(grid.cells[0, 0, 2])
        assert mz[-1] <= mz[-2] + 1e-12
        if mz[-1] < 0:
            return t
    return None


def test_macrospin_reversal_speeds_up_with_damping(constants):
    times = [_macrospin_switch(alpha, constants) for alpha in (0.05, 0.2, 1.0)]
    assert None not in times
    assert times[0] > times[1] > times[2]


def test_zero_drive_does_not_nucleate(design_material, small_geometry, constants):
    settings = LlgSettings(sample_interval=0.5e-12)
    grid = build_grid(design_material, small_geometry, NucleationCase.BARE_2F, settings, constants)
    run = nucleate(grid, 0.0, design_material, small_geometry, NucleationCase.BARE_2F,
                   horizon=2e-12, settings=settings, constants=constants)
    assert not run.nucleated
    assert run.t_nucleate is None
    assert run.trace["t"].tolist() == pytest.approx([0.0, 0.5e-12, 1e-12, 1.5e-12, 2e-12])
    assert (run.trace["mz_strip"] > 0).all()


def test_snapshot_frame(design_material, small_geometry):
    grid = build_grid(design_material, small_geometry, NucleationCase.BARE_2F)
    frame = snapshot_frame(grid, 1e-12)
    assert list(frame.columns) == ["t", "x", "y", "mx", "my", "mz"]
    assert len(frame) == grid.shape[0] * grid.shape[1]
    assert frame["x"].iloc[0] == pytest.approx(0.5e-9)
    assert (frame["t"] == 1e-12).all()


def test_ima_sweep_rejects_negative_thickness(design_material):
    with pytest.raises(InvalidArgumentError):
        ima_thickness_sweep([1e-9, -1e-9], design_material, 0.11)




@pytest.fixture
def switching_material(design_material):
    """Ms = 0.5e6 A/m, Ku = 0.6e6 J/m^3: the material of the published delay curve."""
    return design_material.model_copy(update={"ms_pma": 0.5e6, "ku_pma": 0.6e6})


def test_drive_holds_below_and_reverses_above_the_coercive_voltage(
    design_material, geometry_15nm, constants
):
    settings = LlgSettings()
    grid = build_grid(design_material, geometry_15nm, NucleationCase.BARE_2F, settings, constants)
    profile = drive_profile(grid, geometry_15nm, NucleationCase.BARE_2F, settings.fringe_length)

    def drive(v):
        return MeDrive(v, profile, design_material, geometry_15nm, 50e-12, settings,
                       FerroelectricSettings(), constants)

    held = drive(0.05)
    assert held.field_at(0.0)[2] > 1e7
    assert held.field_at(50e-12)[2] > 5e6
    reversed_ = drive(0.3)
    assert reversed_.field_at(0.0)[2] > 1e7
    final = reversed_.field_at(50e-12)
    assert final[2] < -1e7
    # the tilted FE axis leaves a small transverse component
    assert final[0] == pytest.approx(final[2] * math.tan(settings.fe_axis_tilt), rel=1e-6)


@pytest.mark.slow
def test_nucleation_trace_is_consistent(design_material, small_geometry, constants):
    settings = LlgSettings(horizon=150e-12, relax_duration=50e-12, fringe_length=1e-9)
    run = nucleation_delay(0.5, design_material, small_geometry, NucleationCase.COMPOSITE_2F,
                           settings, constants=constants)
    assert list(run.trace.columns) == ["t", "mz_strip"]
    assert run.trace["t"].iloc[0] == 0.0
    assert run.trace["mz_strip"].iloc[0] > 0
    assert run.nucleated
    assert 0.0 < run.t_nucleate <= 150e-12
    assert run.trace["mz_strip"].iloc[-1] < 0
    assert run.trace["t"].iloc[-1] == pytest.approx(run.t_nucleate + 2 * settings.sample_interval)


@pytest.mark.slow
def test_thresholds_order_strictly_by_structure(switching_material, geometry_15nm, constants):
    settings = LlgSettings(relax_duration=50e-12)

    def threshold(case):
        return threshold_voltage(case, switching_material, geometry_15nm, tolerance=0.05,
                                 settings=settings, constants=constants)

    composite = threshold(NucleationCase.COMPOSITE_2F)
    wide = threshold(NucleationCase.BARE_2F)
    narrow = threshold(NucleationCase.BARE_1F)
    assert None not in (composite, wide, narrow)
    assert composite < wide < narrow
    assert composite < 0.2


@pytest.mark.slow
def test_relaxed_composite_keeps_a_tilt(switching_material, geometry_15nm, constants):
    case = NucleationCase.COMPOSITE_2F
    grid = relax(build_grid(switching_material, geometry_15nm, case, constants=constants),
                 constants=constants)
    strip = detection_strip(grid, geometry_15nm, case)
    assert grid.mean_tilt(strip) > math.radians(5)
    bare = relax(build_grid(switching_material, geometry_15nm, NucleationCase.BARE_2F,
                            constants=constants), constants=constants)
    assert bare.mean_tilt() < math.radians(0.01)


@pytest.mark.slow
def test_composite_delay_falls_with_voltage(switching_material, geometry_15nm, constants):
    voltages = [0.11, 0.15, 0.35, 1.06, 1.5]
    times = [
        nucleation_delay(v, switching_material, geometry_15nm, constants=constants).t_nucleate
        for v in voltages
    ]
    assert None not in times
    assert 22e-12 <= times[0] <= 66e-12
    assert times[1] < times[0]
    assert all(b <= a for a, b in zip(times, times[1:]))


@pytest.mark.slow
def test_bare_wire_holds_at_the_composite_drive(switching_material, geometry_15nm, constants):
    run = nucleation_delay(0.11, switching_material, geometry_15nm, NucleationCase.BARE_2F,
                           constants=constants)
    assert not run.nucleated


@pytest.mark.slow
def test_thicker_ima_nucleates_later(switching_material, geometry_15nm, constants):
    sweep = ima_thickness_sweep([0.5e-9, 1e-9, 2e-9], switching_material, 0.11, geometry_15nm,
                                constants=constants)
    times = [t for _, t in sweep]
    assert None not in times
    assert all(b >= a for a, b in zip(times, times[1:]))
    assert times[-1] > times[0]
    without = ima_thickness_sweep([0.0], switching_material, 0.11, geometry_15nm,
                                  constants=constants)
    assert without == [(0.0, None)]
