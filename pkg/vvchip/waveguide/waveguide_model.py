"""
Permittivity profiles of the written waveguides and the laser write model
"""
import logging
from dataclasses import replace
from typing import Optional, Tuple

import numpy as np
from scipy.constants import epsilon_0

from vvchip.exceptions.chip_exception import ContractError, GeometryError, ModelError
from vvchip.waveguide.waveguide_objects import (
    BirefringenceTensor,
    GridSpec,
    PermittivityProfile,
    RingSpec,
    TrackSpec,
    WriteParams,
)

logger = logging.getLogger(__name__)

DEFAULT_N_S = 1.4537
FOOTPRINT_MARGIN_PX = 3


def _check_inside(grid: GridSpec, track: TrackSpec):
    x_low, x_high, y_low, y_high = track.bounds()
    if not grid.contains_box(x_low, x_high, y_low, y_high, FOOTPRINT_MARGIN_PX):
        raise GeometryError(
            f"track at {track.center} with widths {track.widths} um does not fit the "
            f"grid {grid.extent} with a {FOOTPRINT_MARGIN_PX} px margin"
        )


def _track_values(grid: GridSpec, track: TrackSpec) -> np.ndarray:
    xx, yy = grid.mesh()
    dx = xx - track.center[0]
    dy = yy - track.center[1]
    cos_a, sin_a = np.cos(track.angle), np.sin(track.angle)
    along = dx * cos_a + dy * sin_a
    across = -dx * sin_a + dy * cos_a
    return track.peak_delta_eps * np.exp(
        -((along / track.widths[0]) ** 2) - (across / track.widths[1]) ** 2
    )


def gaussian_track_profile(
    grid: GridSpec,
    track: TrackSpec,
    n_s: float = DEFAULT_N_S,
    d_eps: Optional[BirefringenceTensor] = None,
) -> PermittivityProfile:
    """
    Profile of a single elliptical Gaussian track

    Parameters
    ----------
    grid : GridSpec
        Sampling grid, must hold the track footprint with a 3 px margin
    track : TrackSpec
        Track geometry and peak permittivity change
    n_s : float
        Substrate refractive index
    d_eps : BirefringenceTensor, optional
        Birefringence acting over the written region

    Returns
    -------
    PermittivityProfile
    """
    _check_inside(grid, track)
    return PermittivityProfile(
        grid=grid,
        eps_s=n_s ** 2,
        eps_iso=_track_values(grid, track),
        written_peak=track.peak_delta_eps,
        d_eps=d_eps or BirefringenceTensor(),
        axis_center=track.center,
    )


def ring_profile(
    grid: GridSpec,
    ring: RingSpec,
    n_s: float = DEFAULT_N_S,
    d_eps: Optional[BirefringenceTensor] = None,
    axis_mode: str = "fixed",
) -> PermittivityProfile:
    """
    Profile of the annular waveguide: pixelwise maximum over all of its tracks

    Parameters
    ----------
    grid : GridSpec
    ring : RingSpec
        With ``n_tracks=13`` (or ``center_scan``) a middle track is added
    n_s : float
        Substrate refractive index
    d_eps : BirefringenceTensor, optional
    axis_mode : str
        "fixed" for one optical axis over the whole ring, "radial" for an axis
        following the local radial direction

    Returns
    -------
    PermittivityProfile
    """
    eps_iso = np.zeros(grid.shape)
    for track in ring.tracks():
        _check_inside(grid, track)
        np.maximum(eps_iso, _track_values(grid, track), out=eps_iso)
    logger.debug(
        "ring profile R=%.4f um, %d tracks, peak %.4e",
        ring.radius,
        ring.n_tracks,
        eps_iso.max(),
    )
    return PermittivityProfile(
        grid=grid,
        eps_s=n_s ** 2,
        eps_iso=eps_iso,
        written_peak=ring.track.peak_delta_eps,
        d_eps=d_eps or BirefringenceTensor(),
        axis_mode=axis_mode,
        axis_center=ring.center,
    )


def circular_core_profile(
    grid: GridSpec,
    radius: float,
    delta_n: float,
    n_s: float = DEFAULT_N_S,
    supersample: int = 8,
    center: Tuple[float, float] = (0.0, 0.0),
) -> PermittivityProfile:
    """
    Step-index circular core with sub-pixel area averaging of the core fraction
    """
    if radius <= 0 or delta_n <= 0:
        raise GeometryError(
            f"core radius and index step must be positive ({radius}, {delta_n})"
        )
    if not grid.contains_box(
        center[0] - radius,
        center[0] + radius,
        center[1] - radius,
        center[1] + radius,
        FOOTPRINT_MARGIN_PX,
    ):
        raise GeometryError(
            f"core of radius {radius} um does not fit the grid {grid.extent}"
        )
    offsets = (np.arange(supersample) + 0.5) / supersample - 0.5
    xx, yy = grid.mesh()
    fraction = np.zeros(grid.shape)
    for oy in offsets:
        for ox in offsets:
            distance = np.hypot(
                xx + ox * grid.dx - center[0], yy + oy * grid.dy - center[1]
            )
            fraction += distance <= radius
    fraction /= supersample ** 2
    step = (n_s + delta_n) ** 2 - n_s ** 2
    return PermittivityProfile(
        grid=grid,
        eps_s=n_s ** 2,
        eps_iso=step * fraction,
        written_peak=step,
        axis_center=center,
    )


def rotation_matrix(theta: float) -> np.ndarray:
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    return np.array([[cos_t, -sin_t, 0.0], [sin_t, cos_t, 0.0], [0.0, 0.0, 1.0]])


def rotate_tensor(t: BirefringenceTensor, theta: float) -> np.ndarray:
    """
    R(theta) applied to the diagonal tensor
    :param t: tensor with diagonal entries
    :param theta: rotation angle about z (rad)
    :return: 3x3 array
    """
    return rotation_matrix(theta) @ t.diagonal()


def lab_tensor(t: BirefringenceTensor, theta: Optional[float] = None) -> np.ndarray:
    """
    Tensor expressed in grid axes when its optical axis is rotated by theta
    """
    angle = t.theta if theta is None else theta
    return rotate_tensor(t, angle) @ rotation_matrix(-angle)


def track_birefringence_field(profile: PermittivityProfile) -> np.ndarray:
    """
    Per-pixel birefringence tensor over the written region, shape (ny, nx, 3, 3)
    """
    weight = profile.weight()
    tensor = profile.d_eps
    if profile.axis_mode == "fixed":
        return weight[..., None, None] * lab_tensor(tensor)[None, None, :, :]
    _, phi = profile.grid.polar(profile.axis_center)
    angle = phi + tensor.theta
    cos_a, sin_a = np.cos(angle), np.sin(angle)
    rotation = np.zeros(profile.grid.shape + (3, 3))
    rotation[..., 0, 0] = cos_a
    rotation[..., 0, 1] = -sin_a
    rotation[..., 1, 0] = sin_a
    rotation[..., 1, 1] = cos_a
    rotation[..., 2, 2] = 1.0
    local = np.einsum("...ij,jk,...lk->...il", rotation, tensor.diagonal(), rotation)
    return weight[..., None, None] * local


def _write_index_slope(p: WriteParams) -> float:
    return p.eta * p.f_rp / (2 * epsilon_0 * p.n_s * p.w0 * p.v)


def propagation_constant_from_write(
    p: WriteParams, E_sp: Optional[float] = None, v: Optional[float] = None
) -> float:
    """
    Propagation constant of a written waveguide in rad/m
    """
    energy = p.E_sp if E_sp is None else E_sp
    speed = p.v if v is None else v
    index_change = p.eta * energy * p.f_rp / (2 * epsilon_0 * p.n_s * p.w0 * speed)
    if index_change >= p.n_s:
        raise ModelError(
            f"written index change {index_change:.3e} is not small against n_s={p.n_s}"
        )
    return p.k0_prime * (p.n_s + index_change)


def delta_beta_from_write(p: WriteParams, dE: float, dv: float = 0.0) -> float:
    """
    Linear change of the propagation constant (rad/m) for a pulse energy change dE
    (J) and a writing speed change dv (m/s)
    """
    if abs(dE) >= p.E_sp or abs(dv) >= p.v:
        raise ContractError(
            "delta_beta_from_write",
            f"|dE|={abs(dE):.3e} J must stay below E_sp "
            f"and |dv|={abs(dv):.3e} m/s below v",
        )
    slope = p.k0_prime * _write_index_slope(p)
    return slope * dE - slope * p.E_sp / p.v * dv + p.xi


def write_energy_for_delta_beta(
    p: WriteParams, target_delta_beta: float, dv: float = 0.0
) -> float:
    """
    Pulse energy change (J) producing a given propagation constant change
    """
    slope = p.k0_prime * _write_index_slope(p)
    return (target_delta_beta - p.xi + slope * p.E_sp / p.v * dv) / slope


def perturbation_from_energy(base: TrackSpec, p: WriteParams, dE: float) -> TrackSpec:
    """
    Track written with pulse energy E_sp + dE; only the peak change scales
    """
    scale = 1.0 + dE / p.E_sp
    peak = base.peak_delta_eps * scale
    if peak <= 0:
        raise ModelError(
            f"energy change {dE:.3e} J leaves a non-positive "
            f"peak permittivity {peak:.3e}"
        )
    return replace(base, peak_delta_eps=peak)


def profile_image(profile: PermittivityProfile) -> np.ndarray:
    """
    16-bit image of eps_iso scaled to its peak
    """
    peak = profile.max_delta_eps
    if peak <= 0:
        return np.zeros(profile.grid.shape, dtype=np.uint16)
    return np.round(profile.eps_iso / peak * 65535).astype(np.uint16)
