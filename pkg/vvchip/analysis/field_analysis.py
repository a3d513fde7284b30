"""
Output-facet field synthesis, polarization analysis, interference and phase
singularity diagnostics
"""
import logging
import math
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import map_coordinates

from vvchip.analysis.field_objects import (
    ChargeMeasurement,
    ExtinctionCurve,
    ProjectionAxis,
    ReferenceBeam,
    SineFit,
    VectorField,
)
from vvchip.conversions.conversions import POLARIZATION_JONES, UM_PER_M
from vvchip.coupling.coupling_objects import AmplitudeState, GammaCoefficients
from vvchip.exceptions.chip_exception import ContractError, SingularSamplingCircle
from vvchip.modes.mode_objects import ModeField
from vvchip.waveguide.waveguide_objects import GridSpec

logger = logging.getLogger(__name__)

CIRCLE_SAMPLES = 360
SINGULAR_AMPLITUDE = 1e-9
SINGULAR_FRACTION = 0.1
MAX_PHASE_JUMP = np.pi / 2
MAX_EXTINCTION_DB = 60.0
MAX_ARM_ORDER = 8
LOBE_ANGLE_TOL = 1e-9
PURITY_ANALYZERS = ("H", "V", "D", "A", "RCP", "LCP")


def synthesize_field(
    gamma: GammaCoefficients, ring_modes: Sequence[ModeField]
) -> VectorField:
    """
    Output field E_x = g_xl E_l + g_x-l E_-l, E_y = g_yl E_l + g_y-l E_-l

    Parameters
    ----------
    gamma : GammaCoefficients
    ring_modes : sequence of ModeField
        The four vortex modes in the order [x_l, x_-l, y_l, y_-l]

    Returns
    -------
    VectorField
    """
    if len(ring_modes) != 4:
        raise ContractError("synthesize_field", "expected the four vortex modes")
    grid = ring_modes[0].grid
    for mode in ring_modes[1:]:
        grid.check_same(mode.grid, "synthesize_field")
    g_xp, g_xn, g_yp, g_yn = gamma.as_array()
    ex = g_xp * ring_modes[0].profile + g_xn * ring_modes[1].profile
    ey = g_yp * ring_modes[2].profile + g_yn * ring_modes[3].profile
    return VectorField(grid, ex, ey)


def project_polarization(f: VectorField, axis: ProjectionAxis) -> np.ndarray:
    """
    Scalar field behind an analyzer: conj(analyzer) . (E_x, E_y) per pixel
    """
    ax, ay = np.conj(axis.vector)
    return ax * f.ex + ay * f.ey


def projected_power(f: VectorField, axis: ProjectionAxis) -> float:
    projected = project_polarization(f, axis)
    return float(np.sum(np.abs(projected) ** 2) * f.grid.pixel_area)


def intensity_image(f: VectorField) -> np.ndarray:
    return f.intensity


def conversion_efficiency(
    gamma: GammaCoefficients, input_state: AmplitudeState
) -> float:
    """
    Fraction of the input power found in the vortex modes at the output facet
    """
    if input_state.power <= 0:
        raise ContractError("conversion_efficiency", "input carries no power")
    return gamma.power / input_state.power


def extinction_ratio(pA: float, pB: float) -> float:
    """
    10 log10(pA / pB) in dB; math.inf when pB is zero
    """
    if pA < 0 or pB < 0:
        raise ContractError(
            "extinction_ratio", f"powers must be non-negative ({pA}, {pB})"
        )
    if pB == 0:
        if pA == 0:
            raise ContractError("extinction_ratio", "both powers are zero")
        logger.debug("infinite extinction, pA=%.3e", pA)
        return math.inf
    if pA == 0:
        return -math.inf
    return 10 * math.log10(pA / pB)


def polarization_extinction(f: VectorField, axis: ProjectionAxis) -> float:
    """
    Extinction between an analyzer and its orthogonal partner, on whole-beam powers
    """
    return extinction_ratio(
        projected_power(f, axis), projected_power(f, axis.orthogonal())
    )


def stokes_parameters(f: VectorField) -> Dict[str, np.ndarray]:
    """
    Per-pixel Stokes parameters with the polarization azimuth and ellipticity angle
    """
    s0 = f.intensity
    s1 = np.abs(f.ex) ** 2 - np.abs(f.ey) ** 2
    cross = np.conj(f.ex) * f.ey
    s2 = 2 * cross.real
    s3 = 2 * cross.imag
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(s0 > 0, s3 / np.where(s0 > 0, s0, 1.0), 0.0)
    return {
        "S0": s0,
        "S1": s1,
        "S2": s2,
        "S3": s3,
        "azimuth": 0.5 * np.arctan2(s2, s1),
        "ellipticity": 0.5 * np.arcsin(np.clip(ratio, -1.0, 1.0)),
    }


def vector_purity(f: VectorField) -> float:
    """
    1 minus the largest power fraction passed by any of the H, V, D, A, R, L
    analyzers; 0 for a uniformly polarized beam
    """
    total = f.power
    if total <= 0:
        raise ContractError("vector_purity", "field carries no power")
    fractions = [
        projected_power(f, ProjectionAxis(jones=tuple(POLARIZATION_JONES[name])))
        / total
        for name in PURITY_ANALYZERS
    ]
    return float(1.0 - max(fractions))


def intensity_centroid(image: np.ndarray, grid: GridSpec) -> Tuple[float, float]:
    total = float(np.sum(image))
    if total <= 0:
        raise ContractError("intensity_centroid", "image is empty")
    xx, yy = grid.mesh()
    return float(np.sum(xx * image) / total), float(np.sum(yy * image) / total)


def _sample(values: np.ndarray, grid: GridSpec, x: np.ndarray, y: np.ndarray):
    rows, columns = grid.to_pixel(x, y)
    coordinates = np.vstack([np.ravel(rows), np.ravel(columns)])
    if np.iscomplexobj(values):
        real = map_coordinates(values.real, coordinates, order=1, mode="nearest")
        imag = map_coordinates(values.imag, coordinates, order=1, mode="nearest")
        return real + 1j * imag
    return map_coordinates(values, coordinates, order=1, mode="nearest")


def _inner_radius(grid: GridSpec, center: Tuple[float, float]) -> float:
    x0, x1, y0, y1 = grid.extent
    return min(center[0] - x0, x1 - center[0], center[1] - y0, y1 - center[1])


def crest_radius(
    image: np.ndarray, grid: GridSpec, center: Tuple[float, float]
) -> float:
    """
    Radius of the maximum azimuthally averaged intensity
    """
    r, _ = grid.polar(center)
    step = min(grid.dx, grid.dy)
    limit = _inner_radius(grid, center)
    inside = r < limit
    bins = (r[inside] / step).astype(int)
    sums = np.bincount(bins, weights=image[inside])
    counts = np.bincount(bins)
    averages = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    return float((np.argmax(averages) + 0.5) * step)


def _circle(center: Tuple[float, float], radius: float, samples: int = CIRCLE_SAMPLES):
    phi = 2 * np.pi * np.arange(samples) / samples
    return center[0] + radius * np.cos(phi), center[1] + radius * np.sin(phi)


def topological_charge(
    field: np.ndarray,
    grid: GridSpec,
    center: Optional[Tuple[float, float]] = None,
    radius: Optional[float] = None,
) -> ChargeMeasurement:
    """
    Phase winding of a scalar field on a circle around its intensity centroid

    The circle sits at the crest of the azimuthally averaged intensity unless a
    radius is given.

    Parameters
    ----------
    field : ndarray
        Complex scalar field of shape (ny, nx)
    grid : GridSpec
    center : tuple, optional
        Circle center in um, defaults to the intensity centroid
    radius : float, optional
        Circle radius in um

    Returns
    -------
    ChargeMeasurement
        Rounded charge, distance of the circulation from that integer, radius

    Raises
    ------
    SingularSamplingCircle
        When the amplitude vanishes on the circle or the phase jumps between
        neighbouring samples
    """
    intensity = np.abs(field) ** 2
    if center is None:
        center = intensity_centroid(intensity, grid)
    if radius is None:
        radius = crest_radius(intensity, grid, center)
    samples = _sample(field, grid, *_circle(center, radius))
    amplitude = np.abs(samples)
    peak = np.sqrt(intensity.max())
    low = np.mean(amplitude < SINGULAR_AMPLITUDE * peak)
    if low > SINGULAR_FRACTION:
        raise SingularSamplingCircle(radius, f"amplitude vanishes on {low:.0%} of it")
    steps = np.angle(np.roll(samples, -1) / np.where(amplitude > 0, samples, 1.0))
    if np.max(np.abs(steps)) > MAX_PHASE_JUMP:
        raise SingularSamplingCircle(radius, "phase jumps across a nodal line")
    winding = float(np.sum(steps) / (2 * np.pi))
    charge = int(round(winding))
    logger.debug("winding %.6f on r=%.3f um", winding, radius)
    return ChargeMeasurement(
        charge=charge, residual=abs(winding - charge), radius=radius
    )


def radial_profile(
    image: np.ndarray,
    grid: GridSpec,
    direction: float = 0.0,
    center: Optional[Tuple[float, float]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bilinear samples along a ray from the centroid to the grid edge, step dx/2
    """
    if center is None:
        center = intensity_centroid(image, grid)
    x0, x1, y0, y1 = grid.extent
    cos_d, sin_d = math.cos(direction), math.sin(direction)
    limits = []
    if cos_d > 1e-12:
        limits.append((x1 - center[0]) / cos_d)
    elif cos_d < -1e-12:
        limits.append((x0 - center[0]) / cos_d)
    if sin_d > 1e-12:
        limits.append((y1 - center[1]) / sin_d)
    elif sin_d < -1e-12:
        limits.append((y0 - center[1]) / sin_d)
    step = grid.dx / 2
    r = np.arange(0.0, min(limits) + 1e-12, step)
    values = _sample(image, grid, center[0] + r * cos_d, center[1] + r * sin_d)
    return r, values


def lobe_axis_angle(
    image: np.ndarray, grid: GridSpec, center: Optional[Tuple[float, float]] = None
) -> float:
    """
    Axis of a two-lobe pattern in [0, pi) from its second azimuthal harmonic
    """
    if center is None:
        center = intensity_centroid(image, grid)
    _, phi = grid.polar(center)
    harmonic = np.sum(image * np.exp(2j * phi))
    angle = float(np.mod(np.angle(harmonic) / 2, np.pi))
    # rounding below zero wraps to pi; that axis is 0
    if np.pi - angle < LOBE_ANGLE_TOL:
        return 0.0
    return angle


def reference_field(
    grid: GridSpec, ref: ReferenceBeam, k0: float, peak: float = 1.0
) -> np.ndarray:
    """
    Reference beam on the grid; k0 in rad/m, amplitude relative to ``peak``
    """
    k = k0 / UM_PER_M
    xx, yy = grid.mesh()
    x = xx - ref.center[0]
    y = yy - ref.center[1]
    r2 = x ** 2 + y ** 2
    phase = -k * (ref.tilt[0] * x + ref.tilt[1] * y) + ref.delta
    if ref.curvature is not None:
        phase = phase - k * r2 / (2 * ref.curvature * UM_PER_M)
    return ref.amplitude * peak * np.exp(-r2 / ref.waist ** 2) * np.exp(1j * phase)


def fork_reference(
    waist: float = 40.0, tilt: Tuple[float, float] = (0.05, 0.0), amplitude: float = 1.0
) -> ReferenceBeam:
    """
    Tilted planar reference giving fork fringes instead of spirals
    """
    return ReferenceBeam(waist=waist, curvature=None, tilt=tilt, amplitude=amplitude)


def interfere_reference(
    f: VectorField, ref: ReferenceBeam, axis: ProjectionAxis, k0: float
) -> np.ndarray:
    """
    |projected field + reference|^2
    """
    projected = project_polarization(f, axis)
    peak = float(np.max(np.abs(projected))) if projected.size else 0.0
    reference = reference_field(f.grid, ref, k0, peak if peak > 0 else 1.0)
    return np.abs(projected + reference) ** 2


def _angular_harmonics(
    image: np.ndarray, grid: GridSpec, center: Tuple[float, float], radius: float
) -> np.ndarray:
    samples = _sample(image, grid, *_circle(center, radius))
    return np.fft.rfft(samples) / len(samples)


def arm_count(
    interference: np.ndarray,
    grid: GridSpec,
    center: Optional[Tuple[float, float]] = None,
    radius: Optional[float] = None,
) -> Tuple[int, int]:
    """
    Number of spiral arms and their handedness (+1 or -1, 0 when undetermined)

    The dominant angular harmonic of the fringe intensity on rings around the
    crest gives the arm count; the drift of its phase with radius the handedness.
    """
    if center is None:
        center = intensity_centroid(interference, grid)
    if radius is None:
        radius = crest_radius(interference, grid, center)
    radii = radius * np.array([0.8, 0.9, 1.0, 1.1, 1.2])
    radii = radii[radii < _inner_radius(grid, center)]
    if radii.size < 2:
        raise ContractError("arm_count", "sampling rings do not fit the grid")
    spectra = np.array(
        [_angular_harmonics(interference, grid, center, r) for r in radii]
    )
    strength = np.mean(np.abs(spectra[:, 1 : MAX_ARM_ORDER + 1]), axis=0)
    arms = int(np.argmax(strength)) + 1
    drift = np.angle(spectra[-1, arms] / spectra[0, arms])
    handedness = int(np.sign(drift)) if abs(drift) > 1e-6 else 0
    return arms, handedness


def image_correlation(a: np.ndarray, b: np.ndarray) -> float:
    """
    Normalized cross-correlation of two images at zero shift
    """
    if a.shape != b.shape:
        raise ContractError(
            "image_correlation", f"shapes {a.shape} and {b.shape} differ"
        )
    da = a - a.mean()
    db = b - b.mean()
    norm = math.sqrt(float(np.sum(da ** 2)) * float(np.sum(db ** 2)))
    if norm == 0:
        return 1.0 if np.array_equal(a, b) else 0.0
    return float(np.sum(da * db) / norm)


def birefringent_leakage(
    a_x: complex, b_y: complex, phi_x: float, phi_y: float
) -> complex:
    """
    Cross-polarized amplitude a_x b_y (exp(j phi_x) - exp(j phi_y)) left behind a
    birefringent section
    """
    return complex(a_x * b_y * (np.exp(1j * phi_x) - np.exp(1j * phi_y)))


def fit_sine(psi: Sequence[float], values: Sequence[float]) -> SineFit:
    """
    Least-squares fit of amplitude * sin(2 psi + phase) + offset
    """
    psi = np.asarray(psi, dtype=float)
    values = np.asarray(values, dtype=float)
    scale = max(1.0, float(np.max(np.abs(values))))
    if np.ptp(values) <= 1e-9 * scale:
        logger.warning("extinction curve is flat, sine fit unconstrained")
        return SineFit(0.0, 0.0, float(np.mean(values)), 0.0, unconstrained=True)
    design = np.column_stack([np.sin(2 * psi), np.cos(2 * psi), np.ones_like(psi)])
    (a, b, offset), *_ = np.linalg.lstsq(design, values, rcond=None)
    fitted = design @ np.array([a, b, offset])
    residual = float(np.sqrt(np.mean((values - fitted) ** 2)))
    amplitude, phase = float(np.hypot(a, b)), float(np.arctan2(b, a))
    return SineFit(amplitude, phase, float(offset), residual)


def extinction_vs_polarization(
    field_for_jones: Callable[[np.ndarray], VectorField],
    psis: Sequence[float],
    max_db: float = MAX_EXTINCTION_DB,
) -> ExtinctionCurve:
    """
    Output extinction for linear inputs at each psi, with a sine fit

    Parameters
    ----------
    field_for_jones : callable
        Runs the device for an input Jones vector and returns the output field
    psis : sequence of float
        At least 8 distinct input polarization angles (rad)
    max_db : float
        Extinction values are clipped to +-max_db

    Returns
    -------
    ExtinctionCurve
    """
    psis = np.asarray(psis, dtype=float)
    if np.unique(np.round(psis, 12)).size < 8:
        raise ContractError(
            "extinction_vs_polarization", "need at least 8 distinct angles"
        )
    values = []
    for psi in psis:
        jones = np.array([math.cos(psi), math.sin(psi)], dtype=complex)
        field = field_for_jones(jones)
        values.append(polarization_extinction(field, ProjectionAxis(psi)))
    curve = np.clip(np.array(values, dtype=float), -max_db, max_db)
    return ExtinctionCurve(psi=psis, extinction_db=curve, fit=fit_sine(psis, curve))
