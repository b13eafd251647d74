"""Constants registry, unit parsing and parameter records."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import constants as sp

from comet_dse import params as params_module
from comet_dse.constants import SYMBOL_REGISTRY, PhysicalConstants, Precision, get_constants
from comet_dse.errors import InvalidArgumentError, UnitMismatchError, UnsupportedPresetError
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
from comet_dse.performance import GateReport
from comet_dse.units import parse_quantity


def test_codata_constants_come_from_scipy():
    c = PhysicalConstants.codata()
    assert c.e_charge == sp.e
    assert c.mu0 == sp.mu_0
    assert c.hbar == sp.hbar


def test_printed_constants_table():
    c = get_constants(Precision.PRINTED)
    assert c.eps0 == 8.85e-12
    assert c.mu0 == 1.25e-6
    assert c.gamma_g == 1.76e11
    assert c.e_charge == 1.60e-19
    assert c.mu_b == 9.274e-24
    assert c.c_light == 3e8


def test_constants_are_positive_and_cached():
    for precision in Precision:
        c = get_constants(precision)
        assert all(v > 0 for v in c.model_dump().values())
        assert get_constants(precision) is c


def test_every_symbol_resolves_to_exactly_one_field():
    records = {
        "PhysicalConstants": PhysicalConstants.model_fields,
        "MaterialParams": MaterialParams.model_fields,
        "TransistorParams": TransistorParams.model_fields,
        "DeviceGeometry": {**DeviceGeometry.model_fields, "fe_in_volume": None},
        "DriveSettings": DriveSettings.model_fields,
        "GateReport": GateReport.model_fields,
    }
    targets = list(SYMBOL_REGISTRY.values())
    assert len(targets) == len(set(targets))
    for symbol, (record, name) in SYMBOL_REGISTRY.items():
        assert name in records[record], symbol


@pytest.mark.parametrize(
    "raw, dimension, expected",
    [
        ("15 nm", "length", 15e-9),
        ("110 mV", "voltage", 0.11),
        ("0.3e6 A/m", "field", 3e5),
        ("10 pJ/m", "exchange", 10e-12),
        ("5e11 A/m2", "current_density", 5e11),
        ("0.1 fF", "capacitance", 1e-16),
        ("2.4 aJ", "energy", 2.4e-18),
        ("42", "length", 42.0),
        (7.0, "length", 7.0),
    ],
)
def test_parse_quantity_converts_to_si(raw, dimension, expected):
    assert parse_quantity(raw, dimension) == pytest.approx(expected, rel=1e-12)


def test_parse_quantity_rejects_wrong_dimension():
    with pytest.raises(UnitMismatchError, match="material.ms_pma"):
        parse_quantity("15 nm", "field", "material.ms_pma")


def test_parse_quantity_rejects_unknown_suffix():
    with pytest.raises(UnitMismatchError):
        parse_quantity("3 furlongs", "length")


def test_labels_on_dimensionless_fields_are_left_alone():
    assert parse_quantity("15nm", None, "transistor.node") == "15nm"
    assert parse_quantity("0.5", None) == 0.5


def test_parse_quantity_maps_over_lists():
    assert parse_quantity(["110 mV", 0.15], "voltage") == pytest.approx([0.11, 0.15])


def test_records_accept_unit_strings():
    material = MaterialParams(ms_pma="0.4e6 A/m", a_ex="20 pJ/m")
    assert material.ms_pma == pytest.approx(4e5)
    assert material.a_ex == pytest.approx(20e-12)


def test_records_are_frozen():
    material = MaterialParams()
    with pytest.raises(ValueError):
        material.ms_pma = 1.0


@pytest.mark.parametrize("field, value", [("alpha", 0.0), ("alpha", 1.0), ("theta_she", 1.5), ("ms_pma", -1.0)])
def test_material_bounds(field, value):
    with pytest.raises(ValueError):
        MaterialParams(**{field: value})


def test_material_defaults_match_table():
    m = MaterialParams()
    assert m.d_dmi == 0.8e-3
    assert m.theta_she == 0.5
    assert m.beta_stt == 0.4
    assert m.kappa_me == pytest.approx(0.2 / 3e8)
    assert m.kappa_ime == pytest.approx(1.4 / 3e8)
    assert m.h_int == 1.5e-9


def test_geometry_derives_lengths_from_feature_size():
    g = DeviceGeometry(f_feat=15e-9)
    assert g.nucleation_offset == pytest.approx(30e-9)
    assert g.propagation_distance == pytest.approx(60e-9)
    assert g.inv_propagation_distance == pytest.approx(30e-9)
    assert g.fe_in_area == pytest.approx(2 * 15e-9 * 15e-9)
    assert g.h_fe_in == g.h_fe_out == 5e-9
    assert g.h_pma == 1e-9
    assert g.ima_footprint == pytest.approx((30e-9, 15e-9))
    assert g.distance_for(GateKind.INV) == g.inv_propagation_distance
    assert g.distance_for("MAJ3") == g.propagation_distance


def test_geometry_keeps_explicit_lengths():
    g = DeviceGeometry(f_feat=15e-9, propagation_distance="45 nm")
    assert g.propagation_distance == pytest.approx(45e-9)
    assert g.inv_propagation_distance == pytest.approx(30e-9)


def test_copy_with_new_feature_size_rederives_lengths():
    g = DeviceGeometry(f_feat=15e-9).model_copy(update={"f_feat": 7e-9})
    assert g.w_pma == pytest.approx(7e-9)
    assert g.l_pma == pytest.approx(42e-9)
    assert g.fe_in_area == pytest.approx(2 * 7e-9 * 7e-9)
    assert g.propagation_distance == pytest.approx(28e-9)
    assert g.inv_propagation_distance == pytest.approx(14e-9)
    assert g.nucleation_offset == pytest.approx(14e-9)
    assert g.l_shm == pytest.approx(42e-9) and g.w_shm == pytest.approx(7e-9)


def test_copy_keeps_explicit_lengths_and_validates():
    g = DeviceGeometry(f_feat=15e-9, propagation_distance="45 nm", h_ima="2 nm")
    copy = g.model_copy(update={"f_feat": 7e-9})
    assert copy.propagation_distance == pytest.approx(45e-9)
    assert copy.h_ima == pytest.approx(2e-9)
    assert copy.inv_propagation_distance == pytest.approx(14e-9)
    assert g.model_copy(update={"h_ima": "3 nm"}).h_ima == pytest.approx(3e-9)
    with pytest.raises(ValueError):
        g.model_copy(update={"f_feat": -1e-9})


@pytest.mark.parametrize(
    "node, r_on, f_feat",
    [("15nm", 3480.0, 15e-9), ("7nm", 4109.0, 7e-9), (TechnologyNode.N7, 4109.0, 7e-9)],
)
def test_preset_technology(node, r_on, f_feat):
    material, transistor, geometry = preset_technology(node)
    assert transistor.r_on == r_on
    assert transistor.c_g == pytest.approx(0.1e-15)
    assert transistor.v_th == 0.2
    assert geometry.f_feat == f_feat
    assert material.kappa_me == pytest.approx(0.2 / 3e8)


def test_preset_rejects_unknown_node():
    with pytest.raises(UnsupportedPresetError, match="22nm"):
        preset_technology("22nm")


@pytest.mark.parametrize(
    "f_feat, area",
    [(15e-9, 1.044e-13), (1.0, 464.0), (7e-9, 2.2736e-14)],
)
def test_maj3_area(f_feat, area):
    assert maj3_area(f_feat) == pytest.approx(area, rel=1e-12)


@pytest.mark.parametrize("f_feat", [0.0, -1e-9])
def test_maj3_area_rejects_non_positive(f_feat):
    with pytest.raises(InvalidArgumentError):
        maj3_area(f_feat)


@given(f_feat=st.floats(1e-9, 1e-6))
def test_maj3_area_scales_with_feature_size_squared(f_feat):
    assert maj3_area(f_feat) / f_feat**2 == pytest.approx(464.0)


def test_kappa_defaults_use_printed_speed_of_light():
    assert params_module.C_PRINTED == 3e8
    assert not math.isclose(params_module.C_PRINTED, sp.c, rel_tol=0)
