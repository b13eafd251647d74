"""
Physical constants registry.

Two tables are available: full-precision CODATA values taken from
``scipy.constants`` and the truncated values printed in the simulation
parameter table, used for regression against printed figures.
"""

from __future__ import annotations

from enum import Enum
from functools import lru_cache

from pydantic import BaseModel, ConfigDict, Field
from scipy import constants as sp


class Precision(str, Enum):
    """Which constants table to use."""

    CODATA = "codata"
    PRINTED = "printed"


class PhysicalConstants(BaseModel):
    """Physical constants in SI units."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    eps0: float = Field(..., gt=0, description="vacuum permittivity [F/m]")
    mu0: float = Field(..., gt=0, description="vacuum permeability [T*m/A]")
    e_charge: float = Field(..., gt=0, description="elementary charge [C]")
    gamma_g: float = Field(..., gt=0, description="gyromagnetic ratio [rad/(s*T)]")
    hbar: float = Field(..., gt=0, description="reduced Planck constant [J*s]")
    mu_b: float = Field(..., gt=0, description="Bohr magneton [J/T]")
    c_light: float = Field(..., gt=0, description="speed of light [m/s]")

    @classmethod
    def codata(cls) -> "PhysicalConstants":
        return cls(
            eps0=sp.epsilon_0,
            mu0=sp.mu_0,
            e_charge=sp.e,
            gamma_g=sp.physical_constants["electron gyromag. ratio"][0],
            hbar=sp.hbar,
            mu_b=sp.physical_constants["Bohr magneton"][0],
            c_light=sp.c,
        )

    @classmethod
    def printed(cls) -> "PhysicalConstants":
        # hbar is not printed; CODATA is used in both tables
        return cls(
            eps0=8.85e-12,
            mu0=1.25e-6,
            e_charge=1.60e-19,
            gamma_g=1.76e11,
            hbar=sp.hbar,
            mu_b=9.274e-24,
            c_light=3e8,
        )


@lru_cache(maxsize=2)
def get_constants(precision: Precision | str = Precision.CODATA) -> PhysicalConstants:
    """Return the (cached) constants table for ``precision``."""
    precision = Precision(precision)
    if precision is Precision.PRINTED:
        return PhysicalConstants.printed()
    return PhysicalConstants.codata()


# Printed scalars that are not physical constants
GAMMA_V = 5.47e-5  # FE viscosity coefficient, opaque scalar [V*m*s/K as printed]
KAPPA_ME_NUMERATOR = 0.2  # kappa_ME = 0.2/c [s/m]
KAPPA_IME_NUMERATOR = 1.4  # kappa_IME = 1.4/c [s/m]

# Symbol -> (record type, field) for every symbol of the device equations.
SYMBOL_REGISTRY: dict[str, tuple[str, str]] = {
    # constants
    "epsilon_0": ("PhysicalConstants", "eps0"),
    "mu_0": ("PhysicalConstants", "mu0"),
    "e": ("PhysicalConstants", "e_charge"),
    "gamma": ("PhysicalConstants", "gamma_g"),
    "hbar": ("PhysicalConstants", "hbar"),
    "mu_B": ("PhysicalConstants", "mu_b"),
    "c": ("PhysicalConstants", "c_light"),
    # material
    "M_S,PMA": ("MaterialParams", "ms_pma"),
    "K_U,PMA": ("MaterialParams", "ku_pma"),
    "A": ("MaterialParams", "a_ex"),
    "alpha": ("MaterialParams", "alpha"),
    "M_S,IMA": ("MaterialParams", "ms_ima"),
    "D": ("MaterialParams", "d_dmi"),
    "theta_SHE": ("MaterialParams", "theta_she"),
    "beta": ("MaterialParams", "beta_stt"),
    "P_PMA": ("MaterialParams", "p_pma"),
    "rho_SHM": ("MaterialParams", "rho_shm"),
    "rho_PMA": ("MaterialParams", "rho_pma"),
    "epsilon_FE": ("MaterialParams", "eps_fe"),
    "kappa_ME": ("MaterialParams", "kappa_me"),
    "kappa_IME": ("MaterialParams", "kappa_ime"),
    "gamma_v": ("MaterialParams", "gamma_v"),
    "h_int": ("MaterialParams", "h_int"),
    # transistor
    "R_on": ("TransistorParams", "r_on"),
    "C_g": ("TransistorParams", "c_g"),
    "V_th": ("TransistorParams", "v_th"),
    "E_leakage": ("TransistorParams", "leak_energy_per_gate"),
    # geometry
    "F": ("DeviceGeometry", "f_feat"),
    "h_PMA": ("DeviceGeometry", "h_pma"),
    "w_PMA": ("DeviceGeometry", "w_pma"),
    "h_IMA": ("DeviceGeometry", "h_ima"),
    "h_FE_in": ("DeviceGeometry", "h_fe_in"),
    "h_FE_out": ("DeviceGeometry", "h_fe_out"),
    "a_FE_in": ("DeviceGeometry", "fe_in_volume"),
    "l_SHM": ("DeviceGeometry", "l_shm"),
    "w_SHM": ("DeviceGeometry", "w_shm"),
    "t_SHM": ("DeviceGeometry", "h_shm"),
    # drive
    "V_FE": ("DriveSettings", "v_fe"),
    "J_c": ("DriveSettings", "j_c"),
    "V_PROP": ("DriveSettings", "v_prop"),
    "V_RST": ("DriveSettings", "v_rst"),
    "V_OUT": ("DriveSettings", "v_out"),
    "K": ("GateReport", "k_inputs"),
}
