"""
One-dimensional collective-coordinate domain-wall model.

The wall is described by its position Q, phase phi and width Delta. Q and
phi follow the coupled current-driven equations with spin-Hall, DMI and
spin-transfer terms; Delta is re-solved from the implicit width equation
at every right-hand-side evaluation.

Fields are evaluated in one of two conventions (see :class:`FieldConvention`).
In the default ``tesla`` convention every field is mu0*H in tesla, so
gamma*Delta*H is a velocity and gamma*H a phase rate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from tqdm import tqdm

from comet_dse.constants import PhysicalConstants, get_constants
from comet_dse.errors import (
    InvalidArgumentError,
    NumericFailureError,
    PropagationStallError,
    WidthSolveError,
)
from comet_dse.params import DeviceGeometry, MaterialParams

logger = logging.getLogger(__name__)

WIDTH_BRACKET = (1e-15, 1e-6)


class FieldConvention(str, Enum):
    """How the effective-field expressions are evaluated.

    TESLA: mu0*H in tesla; the spin-Hall field uses the PMA thickness.
    PRINTED: the expressions exactly as written, mixed units included.
    """

    TESLA = "tesla"
    PRINTED = "printed"


class WallAnisotropy(str, Enum):
    """Field used in the sin(2 phi) terms."""

    SHAPE = "shape"
    UNIAXIAL = "uniaxial"


class DwSettings(BaseModel):
    """Integrator and convention settings (config section ``dw``)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    dt: float = Field(0.1e-12, gt=0, json_schema_extra={"dimension": "time"})
    horizon: float = Field(10e-9, gt=0, json_schema_extra={"dimension": "time"})
    convention: FieldConvention = FieldConvention.TESLA
    hk_mu0: bool = False
    wall_anisotropy: WallAnisotropy = WallAnisotropy.SHAPE
    include_stt: bool = True
    dmi_sign: Literal[-1, 1] = 1
    she_sign: Literal[-1, 1] = 1
    # spin transfer drives the wall along the electron flow, against J_c
    stt_sign: Literal[-1, 1] = -1
    initial_phase: float = Field(math.pi / 2, json_schema_extra={"dimension": "angle"})
    relax_chunk: float = Field(1e-9, gt=0, json_schema_extra={"dimension": "time"})
    relax_max: float = Field(50e-9, gt=0, json_schema_extra={"dimension": "time"})
    phase_tol: float = Field(1e-9, gt=0)
    width_tol: float = Field(1e-14, gt=0)
    trace_every: int = Field(10, ge=1)


@dataclass(frozen=True)
class DwState:
    q_pos: float
    phi: float
    delta: float
    t_now: float = 0.0


@dataclass(frozen=True)
class DriveFields:
    """Effective fields at one (J_c, Delta).

    ``b_stt`` is a velocity set by the current shunted through the PMA-FM.
    """

    h_k: float
    h_she: float
    h_dmi: float
    b_stt: float
    h_wall: float

    def anisotropy(self, kind: WallAnisotropy) -> float:
        return self.h_wall if kind is WallAnisotropy.SHAPE else self.h_k


@dataclass
class PropagationResult:
    t_propagate: float
    v_avg: float
    trace: pd.DataFrame


def _width_map(
    delta: float, base: float, coupling: float, h: float, w: float
) -> float:
    thickness_term = h / (h + delta) - h / (h + w)
    denom = 1.0 + coupling * thickness_term
    if denom <= 0.0:
        raise WidthSolveError(
            f"Width equation denominator {denom:.3e} <= 0 at Delta={delta:.3e} m"
        )
    return base / math.sqrt(denom)


def _width_terms(
    phi: float, params: MaterialParams, constants: PhysicalConstants
) -> tuple[float, float]:
    base = math.sqrt(params.a_ex / params.ku_pma)
    coupling = constants.mu0 * params.ms_pma**2 / params.ku_pma * math.sin(phi) ** 2
    return base, coupling


def solve_width_bracketed(
    phi: float,
    params: MaterialParams,
    geometry: DeviceGeometry,
    constants: PhysicalConstants | None = None,
) -> float:
    """Width from a bracketing root search on Delta - F(Delta) over (0, 1 um)."""
    constants = constants or get_constants()
    base, coupling = _width_terms(phi, params, constants)
    h, w = geometry.h_pma, geometry.w_pma
    lo, hi = WIDTH_BRACKET

    def residual(delta: float) -> float:
        return delta - _width_map(delta, base, coupling, h, w)

    r_lo, r_hi = residual(lo), residual(hi)
    if r_lo * r_hi > 0:
        raise WidthSolveError(
            f"No wall width in ({lo:.0e}, {hi:.0e}) m for A={params.a_ex:.3e}, "
            f"Ku={params.ku_pma:.3e}, Ms={params.ms_pma:.3e}"
        )
    return brentq(residual, lo, hi, xtol=1e-24, rtol=4 * np.finfo(float).eps, maxiter=200)


def dw_width(
    phi: float,
    params: MaterialParams,
    geometry: DeviceGeometry,
    constants: PhysicalConstants | None = None,
    seed: float | None = None,
    tol: float = 1e-14,
    damping: float = 0.8,
    max_iter: int = 200,
) -> float:
    """Self-consistent wall width at phase ``phi``.

    Damped fixed-point iteration seeded by ``seed`` (or sqrt(A/Ku)); falls back
    to a bracketing search when the iteration does not converge.

    :raises WidthSolveError: no root in (0, 1 um)
    """
    constants = constants or get_constants()
    base, coupling = _width_terms(phi, params, constants)
    if coupling == 0.0:
        return base
    h, w = geometry.h_pma, geometry.w_pma

    delta = seed if seed is not None and seed > 0 else base
    try:
        for _ in range(max_iter):
            updated = (1.0 - damping) * delta + damping * _width_map(delta, base, coupling, h, w)
            if abs(updated - delta) <= tol * updated:
                return updated
            delta = updated
    except WidthSolveError:
        pass
    logger.debug(f"Width fixed point did not settle at phi={phi:.6f}; using bracketed search")
    return solve_width_bracketed(phi, params, geometry, constants)


def drive_fields(
    params: MaterialParams,
    j_c: float,
    delta: float,
    geometry: DeviceGeometry,
    settings: DwSettings | None = None,
    constants: PhysicalConstants | None = None,
) -> DriveFields:
    """Anisotropy, spin-Hall, DMI, STT and wall-shape terms for (J_c, Delta)."""
    settings = settings or DwSettings()
    constants = constants or get_constants()
    if params.ms_pma <= 0:
        raise InvalidArgumentError("Saturation magnetization must be positive")
    if delta <= 0:
        raise InvalidArgumentError(f"Wall width must be positive, got {delta}")
    ms = params.ms_pma
    e = constants.e_charge

    h_k = 2.0 * params.ku_pma / ms
    if settings.hk_mu0:
        h_k /= constants.mu0
    d = settings.dmi_sign * params.d_dmi
    theta = settings.she_sign * params.theta_she
    if settings.convention is FieldConvention.TESLA:
        h_she = constants.hbar * theta * j_c / (2.0 * e * ms * geometry.h_pma)
        h_dmi = d / (ms * delta)
    else:
        h_she = constants.hbar * theta * j_c / (2.0 * constants.mu0 * e * ms)
        h_dmi = d / (constants.mu0 * ms * delta)
    b_stt = 0.0
    if settings.include_stt:
        j_fm = j_c * params.rho_shm / params.rho_pma
        b_stt = settings.stt_sign * constants.mu_b * params.p_pma * j_fm / (e * ms)
    h, w = geometry.h_pma, geometry.w_pma
    h_wall = constants.mu0 * ms * (h / (h + delta) - h / (h + w))
    return DriveFields(h_k=h_k, h_she=h_she, h_dmi=h_dmi, b_stt=b_stt, h_wall=h_wall)


def dw_rates(
    phi: float,
    delta: float,
    fields: DriveFields,
    params: MaterialParams,
    settings: DwSettings,
    constants: PhysicalConstants,
) -> tuple[float, float]:
    """(dQ/dt, dphi/dt) at phase ``phi`` and width ``delta``."""
    gamma = constants.gamma_g
    alpha = params.alpha
    beta = params.beta_stt
    h_a = fields.anisotropy(settings.wall_anisotropy)
    sin2 = math.sin(2.0 * phi)
    sin1 = math.sin(phi)
    cos1 = math.cos(phi)
    norm = 1.0 + alpha**2

    dq = (
        -gamma * delta * 0.5 * h_a * sin2
        + (1.0 + alpha**2 * beta) * fields.b_stt
        + gamma * delta * 0.5 * math.pi * (alpha * fields.h_she * cos1 + fields.h_dmi * sin1)
    ) / norm
    dphi = (
        -gamma * alpha * 0.5 * h_a * sin2
        + (beta - alpha) * fields.b_stt / delta
        + gamma * 0.5 * math.pi * (fields.h_she * cos1 + alpha * fields.h_dmi * sin1)
    ) / norm
    return dq, dphi


class _Rhs:
    """Right-hand side with the width re-solved at each evaluation."""

    def __init__(
        self,
        params: MaterialParams,
        geometry: DeviceGeometry,
        j_c: float,
        settings: DwSettings,
        constants: PhysicalConstants,
    ):
        self.params = params
        self.geometry = geometry
        self.j_c = j_c
        self.settings = settings
        self.constants = constants
        self.last_delta: float | None = None

    def width(self, phi: float) -> float:
        self.last_delta = dw_width(
            phi,
            self.params,
            self.geometry,
            self.constants,
            seed=self.last_delta,
            tol=self.settings.width_tol,
        )
        return self.last_delta

    def __call__(self, phi: float) -> tuple[float, float]:
        delta = self.width(phi)
        fields = drive_fields(
            self.params, self.j_c, delta, self.geometry, self.settings, self.constants
        )
        return dw_rates(phi, delta, fields, self.params, self.settings, self.constants)


def _rk4(rhs: _Rhs, state: DwState, dt: float) -> DwState:
    rhs.last_delta = state.delta
    dq1, dp1 = rhs(state.phi)
    dq2, dp2 = rhs(state.phi + 0.5 * dt * dp1)
    dq3, dp3 = rhs(state.phi + 0.5 * dt * dp2)
    dq4, dp4 = rhs(state.phi + dt * dp3)
    q = state.q_pos + dt * (dq1 + 2 * dq2 + 2 * dq3 + dq4) / 6.0
    phi = state.phi + dt * (dp1 + 2 * dp2 + 2 * dp3 + dp4) / 6.0
    if not (math.isfinite(q) and math.isfinite(phi)):
        raise NumericFailureError(f"Non-finite wall state at t={state.t_now:.3e} s")
    delta = rhs.width(phi)
    return DwState(q_pos=q, phi=phi, delta=delta, t_now=state.t_now + dt)


def dw_step(
    state: DwState,
    params: MaterialParams,
    j_c: float,
    dt: float,
    geometry: DeviceGeometry | None = None,
    settings: DwSettings | None = None,
    constants: PhysicalConstants | None = None,
) -> DwState:
    """One RK4 step of the (Q, phi) equations."""
    if dt <= 0:
        raise InvalidArgumentError(f"dt must be positive, got {dt}")
    rhs = _Rhs(
        params,
        geometry or DeviceGeometry(),
        j_c,
        settings or DwSettings(),
        constants or get_constants(),
    )
    return _rk4(rhs, state, dt)


def relax_phase(
    params: MaterialParams,
    geometry: DeviceGeometry | None = None,
    settings: DwSettings | None = None,
    constants: PhysicalConstants | None = None,
) -> DwState:
    """Zero-current equilibrium wall, at Q = 0.

    The phase equation is integrated with J_c = 0 in chunks of
    ``settings.relax_chunk`` until the phase moves less than ``phase_tol``
    across a chunk.
    """
    geometry = geometry or DeviceGeometry()
    settings = settings or DwSettings()
    constants = constants or get_constants()
    rhs = _Rhs(params, geometry, 0.0, settings, constants)

    def phase_rate(_t: float, y: np.ndarray) -> list[float]:
        return [rhs(float(y[0]))[1]]

    phi = settings.initial_phase
    elapsed = 0.0
    while elapsed < settings.relax_max:
        sol = solve_ivp(
            phase_rate, (0.0, settings.relax_chunk), [phi], method="RK45", rtol=1e-10, atol=1e-12
        )
        if not sol.success:
            raise NumericFailureError(f"Phase relaxation failed: {sol.message}")
        new_phi = float(sol.y[0, -1])
        elapsed += settings.relax_chunk
        if abs(new_phi - phi) < settings.phase_tol:
            phi = new_phi
            break
        phi = new_phi
    else:
        logger.warning(
            f"Wall phase still moving after {settings.relax_max * 1e9:.0f} ns of relaxation"
        )
    delta = dw_width(phi, params, geometry, constants, tol=settings.width_tol)
    logger.debug(f"Relaxed wall phase {phi:.6f} rad after {elapsed * 1e9:.0f} ns")
    return DwState(q_pos=0.0, phi=phi, delta=delta)


def run_trajectory(
    params: MaterialParams,
    j_c: float,
    duration: float,
    geometry: DeviceGeometry | None = None,
    settings: DwSettings | None = None,
    constants: PhysicalConstants | None = None,
    state: DwState | None = None,
) -> pd.DataFrame:
    """Integrate for a fixed ``duration`` from ``state`` (default: relaxed wall).

    Returns a trace with columns t, q, phi, delta, v_inst, sampled every
    ``settings.trace_every`` steps and at the final step.
    """
    geometry = geometry or DeviceGeometry()
    settings = settings or DwSettings()
    constants = constants or get_constants()
    state = state or relax_phase(params, geometry, settings, constants)
    rhs = _Rhs(params, geometry, j_c, settings, constants)

    n_steps = int(round(duration / settings.dt))
    rows = [_trace_row(rhs, state)]
    for step in range(1, n_steps + 1):
        state = _rk4(rhs, state, settings.dt)
        if step % settings.trace_every == 0 or step == n_steps:
            rows.append(_trace_row(rhs, state))
    return pd.DataFrame(rows, columns=["t", "q", "phi", "delta", "v_inst"])


def _trace_row(rhs: _Rhs, state: DwState) -> tuple[float, float, float, float, float]:
    rhs.last_delta = state.delta
    v_inst, _ = rhs(state.phi)
    return state.t_now, state.q_pos, state.phi, state.delta, v_inst


def propagate(
    distance: float,
    params: MaterialParams,
    j_c: float,
    horizon: float | None = None,
    geometry: DeviceGeometry | None = None,
    settings: DwSettings | None = None,
    constants: PhysicalConstants | None = None,
) -> PropagationResult:
    """Drive the relaxed wall until it has travelled ``distance``.

    t_propagate is the first crossing of ``distance``, interpolated within
    the crossing step; v_avg = distance / t_propagate.

    :raises PropagationStallError: ``distance`` not reached within ``horizon``
    """
    if distance <= 0:
        raise InvalidArgumentError(f"Propagation distance must be positive, got {distance}")
    geometry = geometry or DeviceGeometry()
    settings = settings or DwSettings()
    constants = constants or get_constants()
    horizon = horizon if horizon is not None else settings.horizon
    direction = 1.0 if j_c >= 0 else -1.0
    target = direction * distance

    state = relax_phase(params, geometry, settings, constants)
    rhs = _Rhs(params, geometry, j_c, settings, constants)
    rows = [_trace_row(rhs, state)]
    step = 0
    while state.t_now < horizon:
        previous = state
        state = _rk4(rhs, state, settings.dt)
        step += 1
        if direction * state.q_pos >= distance:
            frac = (target - previous.q_pos) / (state.q_pos - previous.q_pos)
            t_propagate = previous.t_now + frac * settings.dt
            rows.append(_trace_row(rhs, state))
            trace = pd.DataFrame(rows, columns=["t", "q", "phi", "delta", "v_inst"])
            return PropagationResult(
                t_propagate=t_propagate, v_avg=target / t_propagate, trace=trace
            )
        if step % settings.trace_every == 0:
            rows.append(_trace_row(rhs, state))
    raise PropagationStallError(
        f"Wall at Q={state.q_pos * 1e9:.2f} nm did not reach {distance * 1e9:.2f} nm "
        f"within {horizon * 1e9:.2f} ns (J_c={j_c:.3e} A/m^2)"
    )


def velocity_vs_jc(
    jc_list: list[float],
    params: MaterialParams,
    distance: float | None = None,
    geometry: DeviceGeometry | None = None,
    settings: DwSettings | None = None,
    constants: PhysicalConstants | None = None,
    show_progress: bool = False,
) -> list[tuple[float, float]]:
    """Average velocity over ``distance`` (default 4F) for each current density."""
    geometry = geometry or DeviceGeometry()
    distance = distance if distance is not None else geometry.propagation_distance
    if any(j <= 0 for j in jc_list) or list(jc_list) != sorted(jc_list):
        raise InvalidArgumentError("Current densities must be positive and ascending")
    curve = []
    for j_c in tqdm(jc_list, desc="J_c sweep", disable=not show_progress):
        result = propagate(distance, params, j_c, geometry=geometry, settings=settings,
                           constants=constants)
        curve.append((j_c, result.v_avg))
    return curve


def saturation_velocity(
    params: MaterialParams, constants: PhysicalConstants | None = None
) -> float:
    """High-current limit gamma*pi*D/(2 Ms) of the spin-Hall/DMI drive."""
    constants = constants or get_constants()
    return constants.gamma_g * math.pi * params.d_dmi / (2.0 * params.ms_pma)
