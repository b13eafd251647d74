"""Stage delays, energy terms and gate reports."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from comet_dse.errors import InvalidArgumentError
from comet_dse.params import DriveSettings, GateKind, MaterialParams, TechnologyNode, preset_technology
from comet_dse.performance import (
    WIRE_DELAY_FACTOR,
    GateReport,
    PerfSettings,
    cascade_polarity,
    fe_capacitance,
    fe_charge_energy,
    gate_report,
    ime_output_voltage,
    input_count,
    joule_energy,
    majority_polarity,
    qtransfer_delay,
    resolve_drive,
    shm_resistance,
    stage_schedule,
    tx_energy,
)


@pytest.fixture
def transistor_15nm():
    transistor = preset_technology("15nm")[1]
    return transistor.model_copy(update={"k_inv": 2.0, "leak_energy_per_gate": 1e-18})


@pytest.fixture
def drive():
    return DriveSettings(v_fe=0.11, j_c=5e11, v_prop=0.5, v_rst=0.5, v_out=0.3)


def test_fe_capacitance_per_node(geometry_15nm, geometry_7nm, constants):
    material = MaterialParams()
    assert fe_capacitance(material, geometry_15nm, constants) == pytest.approx(1.306879e-16, rel=1e-6)
    assert fe_capacitance(material, geometry_7nm, constants) == pytest.approx(2.846091e-17, rel=1e-6)


def test_fe_charge_energy(geometry_15nm, constants):
    energy = fe_charge_energy(3, 0.11, MaterialParams(), geometry_15nm, constants)
    assert energy == pytest.approx(2.372e-18, rel=1e-3)
    with pytest.raises(InvalidArgumentError):
        fe_charge_energy(0, 0.11, MaterialParams(), geometry_15nm, constants)


def test_shm_resistance(geometry_15nm):
    assert shm_resistance(geometry_15nm, MaterialParams()) == pytest.approx(212.0)


def test_joule_energy(geometry_15nm, transistor_15nm):
    material = MaterialParams()
    current = 5e11 * 15e-9 * 3e-9
    expected = current**2 * (3480.0 + 212.0) * 100e-12
    assert joule_energy(5e11, geometry_15nm, material, transistor_15nm, 100e-12) == pytest.approx(
        expected
    )
    assert joule_energy(5e11, geometry_15nm, material, transistor_15nm, 0.0) == 0.0
    with pytest.raises(InvalidArgumentError):
        joule_energy(5e11, geometry_15nm, material, transistor_15nm, -1e-12)


def test_tx_energy():
    assert tx_energy(3, 0.85, 0.85, 0.1, 1e-16) == pytest.approx(0.5e-16 * (4 * 0.7225 + 0.7225 + 0.02))
    with pytest.raises(InvalidArgumentError):
        tx_energy(0, 0.85, 0.85, 0.1, 1e-16)


def test_qtransfer_delay(transistor_15nm):
    delay = qtransfer_delay(transistor_15nm, 2e-16)
    assert delay == pytest.approx(2.0 * 3480.0 * 2e-16 + WIRE_DELAY_FACTOR * 500.0 * 5e-17)
    assert qtransfer_delay(transistor_15nm, 2e-16, wire_rc=(0.0, 0.0)) == pytest.approx(
        2.0 * 3480.0 * 2e-16
    )


def test_qtransfer_needs_inverter_factor(transistor_15nm):
    with pytest.raises(InvalidArgumentError):
        qtransfer_delay(transistor_15nm.model_copy(update={"k_inv": None}), 1e-16)
    with pytest.raises(InvalidArgumentError):
        qtransfer_delay(transistor_15nm, -1e-16)


@pytest.mark.parametrize(
    "kind, k, expected",
    [(GateKind.INV, None, 1), ("MAJ3", None, 3), (GateKind.MAJK, 5, 5), ("MAJ-K", 1, 1)],
)
def test_input_count(kind, k, expected):
    assert input_count(kind, k) == expected


@pytest.mark.parametrize("k", [None, 0, 4])
def test_majk_needs_odd_input_count(k):
    with pytest.raises(InvalidArgumentError):
        input_count(GateKind.MAJK, k)


def test_resolve_drive_fills_from_supply(geometry_15nm, transistor_15nm):
    resolved = resolve_drive(DriveSettings(), MaterialParams(), geometry_15nm, transistor_15nm)
    assert resolved.v_prop == transistor_15nm.v_dd
    assert resolved.v_rst == transistor_15nm.v_dd
    assert 0.0 <= resolved.v_out <= transistor_15nm.v_dd


def test_resolve_drive_clamps_output_to_supply(geometry_15nm, transistor_15nm):
    resolved = resolve_drive(
        DriveSettings(), MaterialParams(), geometry_15nm, transistor_15nm,
        PerfSettings(ime_scale=1e12),
    )
    assert resolved.v_out == transistor_15nm.v_dd


def test_resolve_drive_keeps_explicit_values(geometry_15nm, transistor_15nm, drive):
    resolved = resolve_drive(drive, MaterialParams(), geometry_15nm, transistor_15nm)
    assert (resolved.v_prop, resolved.v_rst, resolved.v_out) == (0.5, 0.5, 0.3)


def test_gate_report_composition(geometry_15nm, transistor_15nm, drive, constants):
    report = gate_report(
        GateKind.MAJ3, MaterialParams(), geometry_15nm, transistor_15nm, drive,
        t_nucleate=40e-12, t_propagate=60e-12, t_qtransfer=20e-12, constants=constants,
    )
    assert report.k_inputs == 3
    assert report.node is TechnologyNode.N15
    assert report.t_comet == pytest.approx(240e-12)
    e = report.energies
    assert report.e_comet == pytest.approx(2 * (e.e_fe + e.e_tx + e.e_joule + e.e_leakage))
    assert e.e_fe == pytest.approx(fe_charge_energy(3, 0.11, MaterialParams(), geometry_15nm, constants))
    assert e.e_tx == pytest.approx(tx_energy(3, 0.5, 0.5, 0.3, transistor_15nm.c_g))
    assert e.e_leakage == 1e-18
    assert report.edp == pytest.approx(report.t_comet * report.e_comet)
    assert not report.meets_target


def test_gate_report_models_qtransfer_when_not_given(geometry_15nm, transistor_15nm, drive, constants):
    report = gate_report(
        GateKind.INV, MaterialParams(), geometry_15nm, transistor_15nm, drive,
        t_nucleate=10e-12, t_propagate=20e-12, constants=constants,
    )
    load = fe_capacitance(MaterialParams(), geometry_15nm, constants) + transistor_15nm.c_g
    assert report.delays.t_qtransfer == pytest.approx(qtransfer_delay(transistor_15nm, load))
    assert report.meets_target


def test_gate_report_needs_leakage(geometry_15nm, transistor_15nm, drive):
    transistor = transistor_15nm.model_copy(update={"leak_energy_per_gate": None})
    with pytest.raises(InvalidArgumentError):
        gate_report(GateKind.INV, MaterialParams(), geometry_15nm, transistor, drive, 1e-12, 1e-12)


@given(
    t_n=st.floats(0, 1e-9),
    t_p=st.floats(0, 1e-9),
    t_q=st.floats(0, 1e-10),
)
def test_report_totals_are_twice_the_stage_sums(t_n, t_p, t_q):
    _, transistor, geometry = preset_technology("7nm")
    transistor = transistor.model_copy(update={"k_inv": 1.5, "leak_energy_per_gate": 2e-18})
    report = gate_report("MAJ3", MaterialParams(), geometry, transistor, DriveSettings(),
                         t_n, t_p, t_qtransfer=t_q)
    assert report.t_comet == pytest.approx(2 * (t_n + t_p + t_q))
    assert report.e_comet >= 2 * 2e-18


def test_report_record_round_trip(geometry_15nm, transistor_15nm, drive):
    report = gate_report(GateKind.MAJ3, MaterialParams(), geometry_15nm, transistor_15nm, drive,
                         40e-12, 60e-12, t_qtransfer=20e-12)
    record = report.model_dump(mode="json")
    assert record["t_comet"] == pytest.approx(240e-12)
    assert GateReport.from_record(record) == report


def test_cmos_ratios(geometry_15nm, transistor_15nm, drive):
    report = gate_report(GateKind.INV, MaterialParams(), geometry_15nm, transistor_15nm, drive,
                         40e-12, 20e-12, t_qtransfer=20e-12)
    t_ratio, e_ratio = report.cmos_ratios()
    assert t_ratio == pytest.approx(report.t_comet / 1.8e-12)
    assert e_ratio == pytest.approx(report.e_comet / 38.7e-18)
    majk = gate_report(GateKind.MAJK, MaterialParams(), geometry_15nm, transistor_15nm, drive,
                       40e-12, 20e-12, k_inputs=5, t_qtransfer=20e-12)
    assert majk.cmos_ratios() is None


def test_stage_schedule_covers_the_evaluation(geometry_15nm, transistor_15nm, drive):
    report = gate_report(GateKind.MAJ3, MaterialParams(), geometry_15nm, transistor_15nm, drive,
                         40e-12, 60e-12, t_qtransfer=20e-12)
    phases = stage_schedule(report)
    assert [p.name for p in phases] == [
        "init-nucleate", "init-propagate", "init-qtransfer",
        "eval-nucleate", "eval-propagate", "eval-qtransfer",
    ]
    assert phases[0].start == 0.0
    assert phases[-1].end == pytest.approx(report.t_comet)
    assert all(a.end == b.start for a, b in zip(phases, phases[1:]))
    assert phases[1].signal == "V_PROP+V_RST"


@pytest.mark.parametrize(
    "inputs, expected", [([1, 1, -1], 1), ([-1, -1, 1], -1), ([1], 1), ([-1, 1, -1, 1, -1], -1)]
)
def test_majority_polarity(inputs, expected):
    assert majority_polarity(inputs) == expected


@pytest.mark.parametrize("inputs", [[], [1, -1], [1, 0, 1]])
def test_majority_rejects_bad_inputs(inputs):
    with pytest.raises(InvalidArgumentError):
        majority_polarity(inputs)


def test_cascade_polarity_inverts():
    assert cascade_polarity(0.3) == -1
    assert cascade_polarity(-0.3) == 1
    with pytest.raises(InvalidArgumentError):
        cascade_polarity(0.0)


def test_ime_output_voltage(geometry_15nm):
    material = MaterialParams()
    literal = ime_output_voltage(0.3e6, material, geometry_15nm)
    assert literal == pytest.approx((1.4 / 3e8) * 1.5e-9 * 0.3e6)
    assert ime_output_voltage(-0.3e6, material, geometry_15nm) == pytest.approx(-literal)
    assert ime_output_voltage(0.3e6, material, geometry_15nm, scale=1e6) == pytest.approx(1e6 * literal)
    with pytest.raises(InvalidArgumentError):
        ime_output_voltage(0.3e6, material, geometry_15nm.model_copy(update={"h_fe_out": 0.0}))
