"""
Ferroelectric input stage: Landau-Khalatnikov polarization dynamics and the
magnetoelectric field it produces.

The free energy density is the symmetric double well

    f(P) = a2 |P|^2 + a4 |P|^4 - E . P

with a2 < 0 < a4 calibrated from a remnant polarization and a coercive field.
The polarization is uniform over the input capacitor, so the volume factor of
the kinetic equation cancels against the volume of F_T.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from comet_dse.errors import InvalidArgumentError, NumericFailureError, TimestepTooLargeError

logger = logging.getLogger(__name__)

# |lambda| * dt limit for classic RK4 on a real negative eigenvalue is ~2.78
RK4_STABILITY_LIMIT = 2.5


class FerroelectricSettings(BaseModel):
    """Landau surrogate and integrator settings (config section ``ferroelectric``)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    # BiFeO3-like film; V_c = E_c * h_FE_in is 100 mV at 5 nm
    p_remnant: float = Field(0.65, gt=0, json_schema_extra={"dimension": "polarization"})
    e_coercive: float = Field(2e7, gt=0, json_schema_extra={"dimension": "electric_field"})
    p_saturation: float = Field(2.0, gt=0, json_schema_extra={"dimension": "polarization"})
    dt: float = Field(0.1e-12, gt=0, json_schema_extra={"dimension": "time"})
    # signed P along the drive axis at t=0; None: remnant state opposing the field
    initial_polarization: float | None = Field(
        None, json_schema_extra={"dimension": "polarization"}
    )

    @model_validator(mode="after")
    def check_bounds(self) -> "FerroelectricSettings":
        if self.p_saturation < self.p_remnant:
            raise ValueError("p_saturation must be at least p_remnant")
        return self

    def coefficients(self) -> "LandauCoefficients":
        return LandauCoefficients.from_targets(self.p_remnant, self.e_coercive)

    def initial_state(self, e_applied: float | np.ndarray, axis: np.ndarray | None = None) -> "FeState":
        """Starting polarization along ``axis`` (default z).

        Unless ``initial_polarization`` is set, the film sits in the remnant
        well opposite to ``e_applied``, so a field above coercive reverses it.
        """
        direction = _unit(axis)
        if self.initial_polarization is not None:
            return FeState(p_vec=self.initial_polarization * direction)
        along = float(np.dot(as_vector(e_applied, direction), direction))
        sign = -1.0 if along >= 0 else 1.0
        return FeState(p_vec=sign * self.p_remnant * direction)


class LandauCoefficients(BaseModel):
    """Double-well coefficients and the targets they were calibrated from."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    a2: float = Field(..., lt=0)
    a4: float = Field(..., gt=0)
    p_remnant: float = Field(..., gt=0)
    e_coercive: float = Field(..., gt=0)

    @classmethod
    def from_targets(cls, p_remnant: float, e_coercive: float) -> "LandauCoefficients":
        """Calibrate (a2, a4) so the well sits at ``p_remnant`` and the
        maximum restoring field equals ``e_coercive``.

        Minimum: P_r^2 = -a2 / (2 a4). Coercive field is the extremum of
        -df/dP at P_r/sqrt(3): E_c = 4 |a2| P_r / (3 sqrt(3)).
        """
        if p_remnant <= 0 or e_coercive <= 0:
            raise InvalidArgumentError("p_remnant and e_coercive must be positive")
        a2 = -3.0 * math.sqrt(3.0) * e_coercive / (4.0 * p_remnant)
        a4 = -a2 / (2.0 * p_remnant**2)
        return cls(a2=a2, a4=a4, p_remnant=p_remnant, e_coercive=e_coercive)

    def well_minimum(self) -> float:
        return math.sqrt(-self.a2 / (2.0 * self.a4))

    def energy_density(self, p_vec: np.ndarray, e_applied: np.ndarray) -> float:
        p2 = float(np.dot(p_vec, p_vec))
        return self.a2 * p2 + self.a4 * p2 * p2 - float(np.dot(e_applied, p_vec))

    def gradient(self, p_vec: np.ndarray, e_applied: np.ndarray) -> np.ndarray:
        p2 = float(np.dot(p_vec, p_vec))
        return (2.0 * self.a2 + 4.0 * self.a4 * p2) * p_vec - e_applied

    def curvature_bound(self, p_vec: np.ndarray) -> float:
        """Largest |eigenvalue| of the Hessian of f at ``p_vec``."""
        p2 = float(np.dot(p_vec, p_vec))
        longitudinal = 2.0 * self.a2 + 12.0 * self.a4 * p2
        transverse = 2.0 * self.a2 + 4.0 * self.a4 * p2
        return max(abs(longitudinal), abs(transverse))


@dataclass(frozen=True)
class FeState:
    """Uniform polarization of FE_in at time ``t_now``."""

    p_vec: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t_now: float = 0.0


def _unit(axis: np.ndarray | None) -> np.ndarray:
    if axis is None:
        return np.array([0.0, 0.0, 1.0])
    axis = np.asarray(axis, dtype=float)
    norm = float(np.linalg.norm(axis))
    if norm == 0.0:
        raise InvalidArgumentError("Polarization axis must be non-zero")
    return axis / norm


def as_vector(value: float | np.ndarray, axis: np.ndarray | None = None) -> np.ndarray:
    """Promote a scalar along ``axis`` (default z) to a 3-vector."""
    if np.ndim(value) == 0:
        axis = np.array([0.0, 0.0, 1.0]) if axis is None else np.asarray(axis, dtype=float)
        return float(value) * axis
    return np.asarray(value, dtype=float)


def stability_bound(state: FeState, coeffs: LandauCoefficients, gamma_v: float) -> float:
    """Largest stable RK4 step at ``state``."""
    rate = coeffs.curvature_bound(state.p_vec) / gamma_v
    if rate == 0.0:
        return math.inf
    return RK4_STABILITY_LIMIT / rate


def lkh_step(
    state: FeState,
    e_applied: float | np.ndarray,
    coeffs: LandauCoefficients,
    gamma_v: float,
    fe_volume: float,
    dt: float,
    p_saturation: float | None = None,
) -> FeState:
    """Advance the Landau-Khalatnikov equation by one RK4 step.

    gamma_v dP/dt = -(1/a_FE) dF_T/dP with F_T = a_FE f(P).

    :raises TimestepTooLargeError: ``dt`` above the RK4 stability bound at ``state``
    :raises NumericFailureError: non-finite result or |P| above ``p_saturation``
    """
    if dt <= 0:
        raise InvalidArgumentError(f"dt must be positive, got {dt}")
    if fe_volume <= 0:
        raise InvalidArgumentError(f"FE volume must be positive, got {fe_volume}")
    e_vec = as_vector(e_applied)
    bound = stability_bound(state, coeffs, gamma_v)
    if dt > bound:
        raise TimestepTooLargeError(
            f"LKh step {dt:.3e} s exceeds stability bound {bound:.3e} s", dt=dt, bound=bound
        )

    def rate(p: np.ndarray) -> np.ndarray:
        return -coeffs.gradient(p, e_vec) / gamma_v

    p = state.p_vec
    k1 = rate(p)
    k2 = rate(p + 0.5 * dt * k1)
    k3 = rate(p + 0.5 * dt * k2)
    k4 = rate(p + dt * k3)
    p_next = p + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0

    if not np.all(np.isfinite(p_next)):
        raise NumericFailureError(f"Non-finite polarization at t={state.t_now:.3e} s")
    if p_saturation is not None and np.linalg.norm(p_next) > p_saturation:
        raise NumericFailureError(
            f"|P| = {np.linalg.norm(p_next):.3f} C/m^2 exceeds saturation {p_saturation} C/m^2"
        )
    return FeState(p_vec=p_next, t_now=state.t_now + dt)


def advance(
    state: FeState,
    e_applied: float | np.ndarray,
    coeffs: LandauCoefficients,
    gamma_v: float,
    fe_volume: float,
    dt: float,
    p_saturation: float | None = None,
) -> FeState:
    """Advance by exactly ``dt``, sub-stepping with halved steps when the
    stability bound is violated."""
    n_sub = 1
    while True:
        sub_dt = dt / n_sub
        try:
            current = state
            for _ in range(n_sub):
                current = lkh_step(
                    current, e_applied, coeffs, gamma_v, fe_volume, sub_dt, p_saturation
                )
            return current
        except TimestepTooLargeError as exc:
            if n_sub >= 1 << 16:
                raise
            n_sub *= 2
            logger.debug(f"Halving LKh step to {dt / n_sub:.3e} s ({exc})")


def me_field(
    p_vec: np.ndarray,
    kappa_me: float,
    h_int: float,
    h_fe_in: float,
    eps0: float,
    scale: float = 1.0,
) -> np.ndarray:
    """Magnetoelectric field (kappa_ME/eps0)(h_int/h_FE_in) P, evaluated literally.

    With kappa_ME in s/m and P in C/m^2 the result is a flux density mu0*H in
    tesla. ``scale`` is an optional calibration factor (default 1).
    """
    if h_fe_in <= 0:
        raise InvalidArgumentError(f"FE thickness must be positive, got {h_fe_in}")
    return scale * (kappa_me / eps0) * (h_int / h_fe_in) * np.asarray(p_vec, dtype=float)


def voltage_to_field(v_fe: float, h_fe_in: float) -> float:
    """Electric field across FE_in, V_FE / h_FE_in [V/m]."""
    if h_fe_in <= 0:
        raise InvalidArgumentError(f"FE thickness must be positive, got {h_fe_in}")
    return v_fe / h_fe_in


def integrate_polarization(
    e_applied: float | np.ndarray,
    duration: float,
    settings: FerroelectricSettings,
    gamma_v: float,
    fe_volume: float,
    state: FeState | None = None,
    axis: np.ndarray | None = None,
) -> pd.DataFrame:
    """Integrate P(t) under a constant field; returns a (t, px, py, pz) trace.

    A scalar ``e_applied`` acts along ``axis`` (default z), which is also the
    axis of the starting polarization when ``state`` is not given.
    """
    coeffs = settings.coefficients()
    e_applied = as_vector(e_applied, _unit(axis))
    state = state or settings.initial_state(e_applied, axis)
    n_steps = int(round(duration / settings.dt))
    rows = [(state.t_now, *state.p_vec)]
    for _ in range(n_steps):
        state = advance(
            state, e_applied, coeffs, gamma_v, fe_volume, settings.dt, settings.p_saturation
        )
        rows.append((state.t_now, *state.p_vec))
    return pd.DataFrame(rows, columns=["t", "px", "py", "pz"])


def switching_time(
    e_applied: float,
    settings: FerroelectricSettings,
    gamma_v: float,
    fe_volume: float,
    fraction: float = 0.9,
    horizon: float = 1e-9,
) -> float | None:
    """Time for P_z to reach ``fraction`` of the remnant polarization from the
    configured initial state, or None within ``horizon``."""
    if e_applied <= 0:
        return None
    coeffs = settings.coefficients()
    target = fraction * coeffs.p_remnant
    state = settings.initial_state(e_applied)
    while state.t_now < horizon:
        state = advance(
            state, e_applied, coeffs, gamma_v, fe_volume, settings.dt, settings.p_saturation
        )
        if state.p_vec[2] >= target:
            return state.t_now
    return None
