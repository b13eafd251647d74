"""
Finite-difference LLG solver for the PMA-FM input region.

The PMA film is one cell thick, so the grid is 2D: ``m[i, j]`` with i along
the wire (x) and j across it (y). Fields are in A/m and the equation is

    dm/dt = -gamma*mu0/(1+alpha^2) [m x H + alpha m x (m x H)]

integrated with RK4 and renormalized after every step. Demagnetization is
the local thin-film term -Ms m_z z. Cells beneath the IMA-FM carry an in-plane
shape anisotropy and an interlayer bias along the IMA long axis. The
magnetoelectric drive ramps up over a fringe length inside the FE_in edges.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from comet_dse.constants import PhysicalConstants, get_constants
from comet_dse.errors import InvalidArgumentError, NumericFailureError, TimestepTooLargeError
from comet_dse.ferroelectric import (
    FerroelectricSettings,
    integrate_polarization,
    me_field,
    voltage_to_field,
)
from comet_dse.params import DeviceGeometry, MaterialParams

logger = logging.getLogger(__name__)

RK4_STABILITY_LIMIT = 2.5
MAX_HALVINGS = 12

PMA = 0
PMA_UNDER_IMA = 1

FieldFn = Callable[[float], np.ndarray]


class NucleationCase(str, Enum):
    """Input structure: composite IMA/PMA with a 2F window, or bare PMA with a 2F or 1F window."""

    COMPOSITE_2F = "composite-2F"
    BARE_2F = "bare-2F"
    BARE_1F = "bare-1F"

    @property
    def window_features(self) -> int:
        return 1 if self is NucleationCase.BARE_1F else 2

    @property
    def composite(self) -> bool:
        return self is NucleationCase.COMPOSITE_2F


class LlgSettings(BaseModel):
    """Grid solver settings (config section ``llg``)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    cell_size: float = Field(1e-9, gt=0, json_schema_extra={"dimension": "length"})
    dt: float = Field(50e-15, gt=0, json_schema_extra={"dimension": "time"})
    relax_duration: float = Field(200e-12, ge=0, json_schema_extra={"dimension": "time"})
    relax_damping: float = Field(0.5, gt=0, le=1)
    horizon: float = Field(200e-12, gt=0, json_schema_extra={"dimension": "time"})
    sample_interval: float = Field(1e-12, gt=0, json_schema_extra={"dimension": "time"})
    persistence: int = Field(3, ge=1)
    initial_tilt: float = Field(math.radians(1.0), ge=0, json_schema_extra={"dimension": "angle"})
    norm_tolerance: float = Field(1e-3, gt=0)
    me_scale: float = Field(1.0, ge=0)
    fe_axis_sign: Literal[-1, 1] = -1
    # FE polarization axis leans this far from the film normal, toward x
    fe_axis_tilt: float = Field(math.radians(0.15), ge=0, le=math.pi / 2,
                                json_schema_extra={"dimension": "angle"})
    # drive ramps linearly from the FE_in edges along the wire
    fringe_length: float = Field(4e-9, ge=0, json_schema_extra={"dimension": "length"})
    interlayer_scale: float = Field(0.1, ge=0)
    # None -> rectangular-prism demagnetizing factors of the IMA footprint
    ima_shape_factor: float | None = None


@dataclass
class MagnetizationGrid:
    """Unit magnetization and per-cell material maps on an (nx, ny) grid."""

    cells: np.ndarray
    cell_size: tuple[float, float]
    thickness: float
    layer_map: np.ndarray
    ms_map: np.ndarray
    ku_map: np.ndarray
    easy_axis_map: np.ndarray
    a_ex: float
    # composite-cell extras, zero outside the IMA footprint
    shape_k_map: np.ndarray | None = None
    bias_map: np.ndarray | None = None

    def __post_init__(self):
        nx, ny = self.shape
        if self.shape_k_map is None:
            self.shape_k_map = np.zeros((nx, ny))
        if self.bias_map is None:
            self.bias_map = np.zeros((nx, ny, 3))

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape[0], self.cells.shape[1]

    @property
    def cell_volume(self) -> float:
        return self.cell_size[0] * self.cell_size[1] * self.thickness

    def with_cells(self, cells: np.ndarray) -> "MagnetizationGrid":
        return replace(self, cells=cells)

    def mirrored(self) -> "MagnetizationGrid":
        """Rotate by pi about x: y -> -y for positions, (mx, my, mz) -> (mx, -my, -mz)."""
        rotation = np.array([1.0, -1.0, -1.0])
        return replace(
            self,
            cells=(self.cells[:, ::-1, :] * rotation).copy(),
            bias_map=(self.bias_map[:, ::-1, :] * rotation).copy(),
            layer_map=self.layer_map[:, ::-1].copy(),
            ms_map=self.ms_map[:, ::-1].copy(),
            ku_map=self.ku_map[:, ::-1].copy(),
            easy_axis_map=(self.easy_axis_map[:, ::-1, :] * rotation).copy(),
            shape_k_map=self.shape_k_map[:, ::-1].copy(),
        )

    def mean_tilt(self, mask: np.ndarray | None = None) -> float:
        """Mean angle [rad] between m and +z over ``mask`` (default: all cells)."""
        mz = self.cells[..., 2] if mask is None else self.cells[mask][:, 2]
        return float(np.mean(np.arccos(np.clip(mz, -1.0, 1.0))))


@dataclass
class LlgRunResult:
    t_nucleate: float | None
    nucleated: bool
    final_grid: MagnetizationGrid
    trace: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=["t", "mz_strip"]))


def prism_demag_factors(lx: float, ly: float, lz: float) -> tuple[float, float, float]:
    """Demagnetizing factors (Nx, Ny, Nz) of a uniformly magnetized rectangular prism."""
    if min(lx, ly, lz) <= 0:
        raise InvalidArgumentError("Prism dimensions must be positive")
    half = (lx / 2.0, ly / 2.0, lz / 2.0)
    nx = _prism_axis_factor(half[1], half[2], half[0])
    ny = _prism_axis_factor(half[2], half[0], half[1])
    nz = _prism_axis_factor(half[0], half[1], half[2])
    return nx, ny, nz


def _prism_axis_factor(a: float, b: float, c: float) -> float:
    """Factor along the axis of half-length ``c`` for half-sides a, b, c."""
    abc = math.sqrt(a * a + b * b + c * c)
    ab = math.sqrt(a * a + b * b)
    bc = math.sqrt(b * b + c * c)
    ac = math.sqrt(a * a + c * c)
    value = (
        (b * b - c * c) / (2 * b * c) * math.log((abc - a) / (abc + a))
        + (a * a - c * c) / (2 * a * c) * math.log((abc - b) / (abc + b))
        + b / (2 * c) * math.log((ab + a) / (ab - a))
        + a / (2 * c) * math.log((ab + b) / (ab - b))
        + c / (2 * a) * math.log((bc - b) / (bc + b))
        + c / (2 * b) * math.log((ac - a) / (ac + a))
        + 2 * math.atan(a * b / (c * abc))
        + (a**3 + b**3 - 2 * c**3) / (3 * a * b * c)
        + (a * a + b * b - 2 * c * c) / (3 * a * b * c) * abc
        + c / (a * b) * (ac + bc)
        - (ab**3 + bc**3 + ac**3) / (3 * a * b * c)
    )
    return value / math.pi


def drive_window(grid: MagnetizationGrid, geometry: DeviceGeometry, case: NucleationCase) -> np.ndarray:
    """Boolean mask of the cells under FE_in (left end of the wire)."""
    nx, ny = grid.shape
    length = case.window_features * geometry.f_feat
    n_cells = max(1, int(round(length / grid.cell_size[0])))
    mask = np.zeros((nx, ny), dtype=bool)
    mask[: min(n_cells, nx), :] = True
    return mask


def detection_strip(grid: MagnetizationGrid, geometry: DeviceGeometry, case: NucleationCase) -> np.ndarray:
    """Last feature-size slab of the drive window."""
    nx, ny = grid.shape
    end = int(round(case.window_features * geometry.f_feat / grid.cell_size[0]))
    width = max(1, int(round(geometry.f_feat / grid.cell_size[0])))
    end = max(1, min(end, nx))
    mask = np.zeros((nx, ny), dtype=bool)
    mask[max(0, end - width) : end, :] = True
    return mask


def drive_profile(
    grid: MagnetizationGrid,
    geometry: DeviceGeometry,
    case: NucleationCase,
    fringe_length: float,
) -> np.ndarray:
    """Per-cell ME drive weight in [0, 1]: zero outside the window, ramping
    linearly over ``fringe_length`` from both window edges along the wire."""
    window = drive_window(grid, geometry, case)
    if fringe_length <= 0:
        return window.astype(float)
    dx = grid.cell_size[0]
    n_cells = int(window[:, 0].sum())
    centres = (np.arange(grid.shape[0]) + 0.5) * dx
    to_edge = np.minimum(centres, n_cells * dx - centres)
    ramp = np.clip(to_edge / fringe_length, 0.0, 1.0)
    return window * ramp[:, None]


def build_grid(
    params: MaterialParams,
    geometry: DeviceGeometry,
    case: NucleationCase = NucleationCase.COMPOSITE_2F,
    settings: LlgSettings | None = None,
    constants: PhysicalConstants | None = None,
) -> MagnetizationGrid:
    """PMA wire of l_PMA x w_PMA, tilted by ``initial_tilt`` toward +x.

    For the composite case (and a non-zero IMA layer) the cells under the
    IMA footprint are tagged and given their shape and bias terms.
    """
    settings = settings or LlgSettings()
    constants = constants or get_constants()
    d = settings.cell_size
    nx = max(1, int(round(geometry.l_pma / d)))
    ny = max(1, int(round(geometry.w_pma / d)))

    tilt = settings.initial_tilt
    cells = np.zeros((nx, ny, 3))
    cells[..., 0] = math.sin(tilt)
    cells[..., 2] = math.cos(tilt)
    easy = np.zeros((nx, ny, 3))
    easy[..., 2] = 1.0

    grid = MagnetizationGrid(
        cells=cells,
        cell_size=(d, d),
        thickness=geometry.h_pma,
        layer_map=np.full((nx, ny), PMA, dtype=int),
        ms_map=np.full((nx, ny), params.ms_pma),
        ku_map=np.full((nx, ny), params.ku_pma),
        easy_axis_map=easy,
        a_ex=params.a_ex,
    )
    if case.composite and geometry.h_ima > 0 and params.ms_ima > 0:
        _attach_ima(grid, params, geometry, settings, constants)
    return grid


def _attach_ima(
    grid: MagnetizationGrid,
    params: MaterialParams,
    geometry: DeviceGeometry,
    settings: LlgSettings,
    constants: PhysicalConstants,
) -> None:
    length, width = geometry.ima_footprint
    nx_ima = max(1, int(round(length / grid.cell_size[0])))
    ny_ima = max(1, int(round(width / grid.cell_size[1])))
    footprint = np.zeros(grid.shape, dtype=bool)
    footprint[:nx_ima, :ny_ima] = True

    if settings.ima_shape_factor is None:
        n_x, n_y, _ = prism_demag_factors(length, width, geometry.h_ima)
        shape_factor = n_y - n_x
    else:
        shape_factor = settings.ima_shape_factor
    # IMA in-plane shape energy carried by the PMA cell beneath it
    k_shape = 0.5 * constants.mu0 * params.ms_ima**2 * shape_factor * geometry.h_ima / geometry.h_pma

    j_interlayer = settings.interlayer_scale * params.a_ex / (geometry.h_pma + geometry.h_ima)
    h_bias = j_interlayer / (constants.mu0 * params.ms_pma * geometry.h_pma)

    grid.layer_map[footprint] = PMA_UNDER_IMA
    grid.shape_k_map[footprint] = k_shape
    grid.bias_map[footprint, 0] = h_bias
    logger.debug(
        f"IMA footprint {nx_ima}x{ny_ima} cells: K_shape={k_shape:.3e} J/m^3, "
        f"H_bias={h_bias:.3e} A/m"
    )


def _exchange_coefficient(grid: MagnetizationGrid, constants: PhysicalConstants) -> np.ndarray:
    return 2.0 * grid.a_ex / (constants.mu0 * grid.ms_map)


def laplacian(cells: np.ndarray, cell_size: tuple[float, float]) -> np.ndarray:
    """5-point Laplacian with free (Neumann) boundaries."""
    padded = np.pad(cells, ((1, 1), (1, 1), (0, 0)), mode="edge")
    dx, dy = cell_size
    return (
        (padded[2:, 1:-1] + padded[:-2, 1:-1] - 2.0 * cells) / dx**2
        + (padded[1:-1, 2:] + padded[1:-1, :-2] - 2.0 * cells) / dy**2
    )


def effective_field_map(
    grid: MagnetizationGrid,
    h_zeeman: np.ndarray,
    constants: PhysicalConstants | None = None,
    cells: np.ndarray | None = None,
) -> np.ndarray:
    """H_eff [A/m] for every cell; ``h_zeeman`` is a 3-vector or an (nx, ny, 3) map."""
    constants = constants or get_constants()
    m = grid.cells if cells is None else cells
    mu0 = constants.mu0
    ms = grid.ms_map[..., None]

    proj = np.sum(m * grid.easy_axis_map, axis=-1, keepdims=True)
    h_anis = (2.0 * grid.ku_map[..., None] / (mu0 * ms)) * proj * grid.easy_axis_map

    h_demag = np.zeros_like(m)
    h_demag[..., 2] = -grid.ms_map * m[..., 2]

    h_ex = _exchange_coefficient(grid, constants)[..., None] * laplacian(m, grid.cell_size)

    h_shape = np.zeros_like(m)
    h_shape[..., 0] = 2.0 * grid.shape_k_map / (mu0 * grid.ms_map) * m[..., 0]

    return h_anis + h_demag + h_ex + h_shape + grid.bias_map + np.broadcast_to(h_zeeman, m.shape)


def effective_field(
    grid: MagnetizationGrid,
    cell: tuple[int, int],
    h_zeeman: np.ndarray,
    params: MaterialParams | None = None,
    constants: PhysicalConstants | None = None,
) -> np.ndarray:
    """H_eff [A/m] at one cell. Material values come from the grid maps."""
    i, j = cell
    nx, ny = grid.shape
    if not (0 <= i < nx and 0 <= j < ny):
        raise InvalidArgumentError(f"Cell {cell} outside grid {grid.shape}")
    return effective_field_map(grid, h_zeeman, constants)[i, j].copy()


def stability_bound(
    grid: MagnetizationGrid,
    h_zeeman_max: float,
    constants: PhysicalConstants | None = None,
) -> float:
    """Largest stable RK4 step: gamma*mu0*H_max*dt <= 2.5."""
    constants = constants or get_constants()
    nx, ny = grid.shape
    dx, dy = grid.cell_size
    stencil = (4.0 / dx**2 if nx > 1 else 0.0) + (4.0 / dy**2 if ny > 1 else 0.0)
    h_ex = float(np.max(_exchange_coefficient(grid, constants))) * stencil
    h_k = float(np.max(2.0 * grid.ku_map / (constants.mu0 * grid.ms_map)))
    h_shape = float(np.max(2.0 * grid.shape_k_map / (constants.mu0 * grid.ms_map)))
    h_bias = float(np.max(np.linalg.norm(grid.bias_map, axis=-1)))
    h_max = h_ex + h_k + float(np.max(grid.ms_map)) + h_shape + h_bias + abs(h_zeeman_max)
    return RK4_STABILITY_LIMIT / (constants.gamma_g * constants.mu0 * h_max)


def _torque(
    grid: MagnetizationGrid,
    cells: np.ndarray,
    h_zeeman: np.ndarray,
    alpha: float,
    constants: PhysicalConstants,
) -> np.ndarray:
    h = effective_field_map(grid, h_zeeman, constants, cells)
    if not np.all(np.isfinite(h)):
        raise NumericFailureError("Non-finite effective field")
    mxh = np.cross(cells, h)
    prefactor = -constants.gamma_g * constants.mu0 / (1.0 + alpha**2)
    return prefactor * (mxh + alpha * np.cross(cells, mxh))


def llg_step(
    grid: MagnetizationGrid,
    h_zeeman_fn: FieldFn,
    alpha: float,
    dt: float,
    t_now: float = 0.0,
    constants: PhysicalConstants | None = None,
    norm_tolerance: float = 1e-3,
) -> MagnetizationGrid:
    """One RK4 step followed by renormalization.

    :raises TimestepTooLargeError: ``dt`` above the stability bound, or the
        pre-renormalization norm drifted by more than ``norm_tolerance``
    """
    constants = constants or get_constants()
    if dt <= 0:
        raise InvalidArgumentError(f"dt must be positive, got {dt}")
    h0 = h_zeeman_fn(t_now)
    h_half = h_zeeman_fn(t_now + 0.5 * dt)
    h1 = h_zeeman_fn(t_now + dt)
    h_peak = max(float(np.max(np.linalg.norm(np.atleast_2d(h), axis=-1))) for h in (h0, h_half, h1))
    bound = stability_bound(grid, h_peak, constants)
    if dt > bound:
        raise TimestepTooLargeError(
            f"LLG step {dt:.3e} s exceeds stability bound {bound:.3e} s", dt=dt, bound=bound
        )

    m = grid.cells
    k1 = _torque(grid, m, h0, alpha, constants)
    k2 = _torque(grid, m + 0.5 * dt * k1, h_half, alpha, constants)
    k3 = _torque(grid, m + 0.5 * dt * k2, h_half, alpha, constants)
    k4 = _torque(grid, m + dt * k3, h1, alpha, constants)
    m_next = m + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0

    norms = np.linalg.norm(m_next, axis=-1, keepdims=True)
    if not np.all(np.isfinite(norms)):
        raise NumericFailureError(f"Non-finite magnetization at t={t_now:.3e} s")
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > norm_tolerance:
        raise TimestepTooLargeError(
            f"|m| drifted by {drift:.2e} in one step", dt=dt, bound=0.5 * dt
        )
    return grid.with_cells(m_next / norms)


def energy(
    grid: MagnetizationGrid,
    h_zeeman: np.ndarray | None = None,
    constants: PhysicalConstants | None = None,
) -> float:
    """Total micromagnetic energy [J] consistent with :func:`effective_field_map`."""
    constants = constants or get_constants()
    mu0 = constants.mu0
    m = grid.cells
    vol = grid.cell_volume
    dx, dy = grid.cell_size

    e_ex = grid.a_ex * vol * (
        np.sum((m[1:, :] - m[:-1, :]) ** 2) / dx**2 + np.sum((m[:, 1:] - m[:, :-1]) ** 2) / dy**2
    )
    proj = np.sum(m * grid.easy_axis_map, axis=-1)
    e_anis = -np.sum(grid.ku_map * proj**2) * vol
    e_demag = 0.5 * mu0 * np.sum(grid.ms_map**2 * m[..., 2] ** 2) * vol
    e_shape = -np.sum(grid.shape_k_map * m[..., 0] ** 2) * vol
    h_ext = grid.bias_map.copy()
    if h_zeeman is not None:
        h_ext = h_ext + np.broadcast_to(h_zeeman, m.shape)
    e_zeeman = -mu0 * np.sum(grid.ms_map * np.sum(m * h_ext, axis=-1)) * vol
    return float(e_ex + e_anis + e_demag + e_shape + e_zeeman)


def _zero_field(_t: float) -> np.ndarray:
    return np.zeros(3)


class _Integrator:
    """Fixed-step driver that halves dt on stability or norm violations."""

    def __init__(
        self,
        grid: MagnetizationGrid,
        h_zeeman_fn: FieldFn,
        alpha: float,
        settings: LlgSettings,
        constants: PhysicalConstants,
    ):
        self.grid = grid
        self.h_zeeman_fn = h_zeeman_fn
        self.alpha = alpha
        self.settings = settings
        self.constants = constants
        self.t_now = 0.0
        self.dt = settings.dt

    def advance_to(self, t_end: float) -> None:
        while self.t_now < t_end - 1e-21:
            dt = min(self.dt, t_end - self.t_now)
            try:
                self.grid = llg_step(
                    self.grid,
                    self.h_zeeman_fn,
                    self.alpha,
                    dt,
                    self.t_now,
                    self.constants,
                    self.settings.norm_tolerance,
                )
            except TimestepTooLargeError as exc:
                if self.settings.dt / self.dt >= 2**MAX_HALVINGS:
                    raise
                self.dt *= 0.5
                logger.warning(f"Halving LLG step to {self.dt:.3e} s ({exc})")
                continue
            self.t_now += dt


def relax(
    grid: MagnetizationGrid,
    params: MaterialParams | None = None,
    duration: float | None = None,
    settings: LlgSettings | None = None,
    constants: PhysicalConstants | None = None,
) -> MagnetizationGrid:
    """Integrate with zero Zeeman field at the relaxation damping."""
    settings = settings or LlgSettings()
    duration = settings.relax_duration if duration is None else duration
    if duration <= 0:
        return grid
    integrator = _Integrator(
        grid, _zero_field, settings.relax_damping, settings, constants or get_constants()
    )
    integrator.advance_to(duration)
    logger.debug(f"Relaxed grid for {duration * 1e12:.0f} ps; mean tilt {math.degrees(integrator.grid.mean_tilt()):.1f} deg")
    return integrator.grid


class MeDrive:
    """Time-dependent H_ME map from the ferroelectric chain at one V_FE.

    P(t) is integrated once up to the horizon and interpolated. The film
    starts in the remnant state opposing V_FE, so below the coercive voltage
    the field keeps holding the relaxed magnetization.
    """

    def __init__(
        self,
        v_fe: float,
        profile: np.ndarray,
        params: MaterialParams,
        geometry: DeviceGeometry,
        horizon: float,
        settings: LlgSettings,
        fe_settings: FerroelectricSettings,
        constants: PhysicalConstants,
    ):
        e_field = voltage_to_field(v_fe, geometry.h_fe_in)
        tilt = settings.fe_axis_tilt
        axis = settings.fe_axis_sign * np.array([math.sin(tilt), 0.0, math.cos(tilt)])
        trace = integrate_polarization(
            e_field, horizon + fe_settings.dt, fe_settings, params.gamma_v, geometry.fe_in_volume,
            axis=axis,
        )
        self.times = trace["t"].to_numpy()
        p_vec = trace[["px", "py", "pz"]].to_numpy()
        b_me = me_field(
            p_vec, params.kappa_me, params.h_int, geometry.h_fe_in, constants.eps0, settings.me_scale
        )
        self.h_me = b_me / constants.mu0
        self.profile = profile[..., None]

    def field_at(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.h_me[:, k]) for k in range(3)])

    def __call__(self, t: float) -> np.ndarray:
        return self.profile * self.field_at(t)


def nucleate(
    grid: MagnetizationGrid,
    v_fe: float,
    params: MaterialParams,
    geometry: DeviceGeometry,
    case: NucleationCase = NucleationCase.COMPOSITE_2F,
    horizon: float | None = None,
    settings: LlgSettings | None = None,
    fe_settings: FerroelectricSettings | None = None,
    constants: PhysicalConstants | None = None,
) -> LlgRunResult:
    """Drive the relaxed ``grid`` with the ME field of ``v_fe`` over the input window.

    Nucleation is the first sample of ``persistence`` consecutive samples whose
    strip-averaged m_z has the opposite sign of the relaxed state.
    """
    settings = settings or LlgSettings()
    fe_settings = fe_settings or FerroelectricSettings()
    constants = constants or get_constants()
    horizon = settings.horizon if horizon is None else horizon

    profile = drive_profile(grid, geometry, case, settings.fringe_length)
    strip = detection_strip(grid, geometry, case)
    drive = MeDrive(v_fe, profile, params, geometry, horizon, settings, fe_settings, constants)
    integrator = _Integrator(grid, drive, params.alpha, settings, constants)

    initial_sign = np.sign(np.mean(grid.cells[strip][:, 2])) or 1.0
    samples = []
    flipped_since: float | None = None
    run = 0
    n_samples = int(round(horizon / settings.sample_interval))
    for k in range(n_samples + 1):
        t_sample = k * settings.sample_interval
        integrator.advance_to(t_sample)
        mz = float(np.mean(integrator.grid.cells[strip][:, 2]))
        samples.append((t_sample, mz))
        if mz * initial_sign < 0:
            if run == 0:
                flipped_since = t_sample
            run += 1
            if run >= settings.persistence:
                logger.debug(f"Nucleated at {flipped_since * 1e12:.1f} ps (V_FE={v_fe * 1e3:.0f} mV)")
                return LlgRunResult(
                    t_nucleate=flipped_since,
                    nucleated=True,
                    final_grid=integrator.grid,
                    trace=pd.DataFrame(samples, columns=["t", "mz_strip"]),
                )
        else:
            run = 0
            flipped_since = None
    return LlgRunResult(
        t_nucleate=None,
        nucleated=False,
        final_grid=integrator.grid,
        trace=pd.DataFrame(samples, columns=["t", "mz_strip"]),
    )


def nucleation_delay(
    v_fe: float,
    params: MaterialParams,
    geometry: DeviceGeometry,
    case: NucleationCase = NucleationCase.COMPOSITE_2F,
    settings: LlgSettings | None = None,
    fe_settings: FerroelectricSettings | None = None,
    constants: PhysicalConstants | None = None,
) -> LlgRunResult:
    """Build, relax and drive a fresh grid for one (case, V_FE)."""
    settings = settings or LlgSettings()
    constants = constants or get_constants()
    grid = build_grid(params, geometry, case, settings, constants)
    grid = relax(grid, params, settings=settings, constants=constants)
    return nucleate(
        grid, v_fe, params, geometry, case, settings=settings, fe_settings=fe_settings,
        constants=constants,
    )


def ima_thickness_sweep(
    thicknesses: list[float],
    params: MaterialParams,
    v_fe: float,
    geometry: DeviceGeometry | None = None,
    settings: LlgSettings | None = None,
    fe_settings: FerroelectricSettings | None = None,
    constants: PhysicalConstants | None = None,
    show_progress: bool = False,
) -> list[tuple[float, float | None]]:
    """Composite-structure nucleation delay for each IMA thickness (None: no nucleation)."""
    if any(h < 0 for h in thicknesses):
        raise InvalidArgumentError("IMA thicknesses must be non-negative")
    geometry = geometry or DeviceGeometry()
    results = []
    for h_ima in tqdm(thicknesses, desc="IMA thickness", disable=not show_progress):
        geom = geometry.model_copy(update={"h_ima": h_ima})
        run = nucleation_delay(
            v_fe, params, geom, NucleationCase.COMPOSITE_2F, settings, fe_settings, constants
        )
        results.append((h_ima, run.t_nucleate))
    return results


def threshold_voltage(
    case: NucleationCase,
    params: MaterialParams,
    geometry: DeviceGeometry,
    v_max: float = 1.5,
    tolerance: float = 5e-3,
    settings: LlgSettings | None = None,
    fe_settings: FerroelectricSettings | None = None,
    constants: PhysicalConstants | None = None,
    show_progress: bool = False,
) -> float | None:
    """Smallest V_FE that nucleates within the horizon, by bisection on (0, v_max].

    Returns None when ``v_max`` itself does not nucleate.
    """
    settings = settings or LlgSettings()
    constants = constants or get_constants()
    relaxed = relax(build_grid(params, geometry, case, settings, constants), params,
                    settings=settings, constants=constants)

    def nucleates(v: float) -> bool:
        return nucleate(
            relaxed, v, params, geometry, case, settings=settings, fe_settings=fe_settings,
            constants=constants,
        ).nucleated

    if not nucleates(v_max):
        logger.warning(f"No nucleation for {case.value} up to {v_max * 1e3:.0f} mV")
        return None
    lo, hi = 0.0, v_max
    n_iter = max(1, math.ceil(math.log2(v_max / tolerance)))
    for _ in tqdm(range(n_iter), desc=f"Threshold {case.value}", disable=not show_progress):
        mid = 0.5 * (lo + hi)
        if nucleates(mid):
            hi = mid
        else:
            lo = mid
    return hi


def snapshot_frame(grid: MagnetizationGrid, t: float = 0.0) -> pd.DataFrame:
    """Grid snapshot with columns (t, x, y, mx, my, mz), positions at cell centres."""
    nx, ny = grid.shape
    dx, dy = grid.cell_size
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    return pd.DataFrame(
        {
            "t": t,
            "x": ((ix + 0.5) * dx).ravel(),
            "y": ((iy + 0.5) * dy).ravel(),
            "mx": grid.cells[..., 0].ravel(),
            "my": grid.cells[..., 1].ravel(),
            "mz": grid.cells[..., 2].ravel(),
        }
    )
