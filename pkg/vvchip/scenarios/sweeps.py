"""
Experiment families: single propagation, pulse-energy sweep, emitter array,
polarization panel, interference and phase matching
"""
from concurrent.futures import ThreadPoolExecutor
import logging
import math
import re
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pandas import DataFrame

from vvchip.analysis.field_analysis import (
    arm_count,
    conversion_efficiency,
    extinction_vs_polarization,
    image_correlation,
    interfere_reference,
    lobe_axis_angle,
    polarization_extinction,
    project_polarization,
    radial_profile,
    synthesize_field,
    topological_charge,
    vector_purity,
)
from vvchip.analysis.field_objects import ProjectionAxis, VectorField
from vvchip.conversions.conversions import (
    PROJECTION_ANGLES,
    j_to_nj,
    jones_for_name,
)
from vvchip.coupling.coupled_mode_engine import TARGET_RELATIONS, relation_residual
from vvchip.coupling.coupling_objects import GammaCoefficients
from vvchip.exceptions.chip_exception import NoCrossingError, SingularSamplingCircle
from vvchip.io.netpbm import montage
from vvchip.modes.mode_solver import (
    bisect_radius,
    match_single_peak,
    phase_match_radius,
    ring_at,
)
from vvchip.scenarios.device_builder import Device, build_device
from vvchip.scenarios.scenario_objects import Scenario, SweepResult, gamma_columns
from vvchip.waveguide.waveguide_model import (
    delta_beta_from_write,
    gaussian_track_profile,
    profile_image,
)
from vvchip.waveguide.waveguide_objects import GridSpec, RingSpec

logger = logging.getLogger(__name__)

CIRCULAR_ANALYZERS = ("RCP", "LCP")
PANEL_COLUMNS = ("H", "D", "V", "A")


def _map(function: Callable, items: Sequence, workers: int) -> List:
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        return list(executor.map(function, items))


def safe_label(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.+-]+", "_", label).strip("_")


def ring_window(grid: GridSpec, ring: RingSpec) -> Tuple[slice, slice]:
    """
    Rows and columns of a square window around the ring
    """
    half = ring.radius + 2 * ring.track.widths[0] + 2.0
    row, column = grid.to_pixel(np.array(ring.center[0]), np.array(ring.center[1]))
    half_rows = int(math.ceil(half / grid.dy))
    half_columns = int(math.ceil(half / grid.dx))
    row, column = int(round(float(row))), int(round(float(column)))
    return (
        slice(max(0, row - half_rows), min(grid.ny, row + half_rows + 1)),
        slice(max(0, column - half_columns), min(grid.nx, column + half_columns + 1)),
    )


def _crop(image: np.ndarray, device: Device) -> np.ndarray:
    rows, columns = ring_window(device.scenario.grid, device.scenario.ring)
    return image[rows, columns]


def circular_charge(field: VectorField) -> Optional[int]:
    """
    Winding of the stronger circular-polarization component, None if singular
    """
    projections = [
        project_polarization(field, ProjectionAxis(jones=tuple(jones_for_name(name))))
        for name in CIRCULAR_ANALYZERS
    ]
    strongest = max(projections, key=lambda values: float(np.sum(np.abs(values) ** 2)))
    try:
        return topological_charge(strongest, field.grid).charge
    except SingularSamplingCircle as error:
        logger.warning("charge not measured: %s", error)
        return None


def field_metrics(
    gamma: GammaCoefficients, field: VectorField, input_power: float
) -> Dict[str, Any]:
    record: Dict[str, Any] = {
        "efficiency": gamma.power / input_power,
        "residue_power": gamma.residue_power,
    }
    if field.power > 0:
        record.update(
            vector_purity=vector_purity(field),
            extinction_HV_dB=polarization_extinction(field, ProjectionAxis(0.0)),
            extinction_DA_dB=polarization_extinction(
                field, ProjectionAxis(math.pi / 4)
            ),
            extinction_RL_dB=polarization_extinction(
                field, ProjectionAxis(jones=tuple(jones_for_name("RCP")))
            ),
            charge=circular_charge(field),
        )
    record.update(gamma_columns(gamma))
    return record


def propagate_run(scenario: Scenario) -> SweepResult:
    """
    One device, one input polarization
    """
    device = build_device(scenario)
    state = device.input_state()
    gamma = device.propagate()
    field = synthesize_field(gamma, device.ring_modes)
    point = {"input": scenario.input_label}
    point.update(field_metrics(gamma, field, state.power))
    point["efficiency"] = conversion_efficiency(gamma, state)
    result = SweepResult(
        kind="propagate", points=[point], extras={"device": device.summary()}
    )
    result.images["intensity"] = _crop(field.intensity, device)
    result.curves["coupling_matrix"] = device.matrix.to_frame()
    result.extras["provenance"] = device.matrix.provenance_table()
    return result


def energy_sweep(
    s: Scenario, energies: Sequence[float], workers: int = 1
) -> SweepResult:
    """
    Rebuild, re-solve and propagate the device for each ring pulse-energy offset

    Parameters
    ----------
    s : Scenario
    energies : sequence of float
        Pulse energy offsets (J) around the scenario's E_sp
    workers : int
        Concurrent points; results keep the order of ``energies``

    Returns
    -------
    SweepResult
    """
    baseline = build_device(s)

    def run(energy: float) -> Dict[str, Any]:
        if energy == 0:
            device = baseline
        else:
            device = build_device(s, energy, calibration=baseline.calibration)
        state = device.input_state()
        gamma = device.propagate()
        field = synthesize_field(gamma, device.ring_modes)
        point = {
            "energy_offset_nJ": j_to_nj(energy),
            "delta_beta_write_radpm": delta_beta_from_write(s.write, energy),
            "n_eff_ring": device.basis.modes[2].n_eff,
        }
        point.update(field_metrics(gamma, field, state.power))
        logger.info("energy offset %.4g nJ done", j_to_nj(energy))
        return point

    points = _map(run, list(energies), workers)
    return SweepResult(
        kind="sweep-energy", points=points, extras={"device": baseline.summary()}
    )


def array_robustness(
    s: Scenario, dE: Sequence[float], workers: int = 1
) -> SweepResult:
    """
    Emitters written with perturbed pulse energies, compared by image correlation,
    radial profile peak and charge
    """
    baseline = build_device(s)
    rng = np.random.default_rng(s.seed)
    if s.xi_max > 0:
        xis = rng.uniform(-s.xi_max, s.xi_max, size=len(dE))
    else:
        xis = np.zeros(len(dE))

    def run(job: Tuple[float, float]):
        energy, xi = job
        if energy == 0 and xi == 0:
            device = baseline
        else:
            device = build_device(s, energy, calibration=baseline.calibration, xi=xi)
        state = device.input_state()
        gamma = device.propagate()
        field = synthesize_field(gamma, device.ring_modes)
        image = field.intensity
        radii, profile = radial_profile(image, field.grid, 0.0, center=s.ring.center)
        point = {
            "energy_offset_nJ": j_to_nj(energy),
            "xi_radpm": float(xi),
            "profile_peak_radius_um": float(radii[int(np.argmax(profile))]),
        }
        point.update(field_metrics(gamma, field, state.power))
        profile_frame = DataFrame({"r_um": radii, "intensity": profile})
        return point, _crop(image, device), profile_frame

    outputs = _map(run, list(zip(dE, xis)), workers)
    result = SweepResult(kind="array", extras={"device": baseline.summary()})
    correlations = []
    for index, (point, image, profile) in enumerate(outputs):
        result.points.append(point)
        result.images[f"emitter_{index}"] = image
        result.curves[f"radial_profile_{index}"] = profile
    for first in range(len(outputs)):
        for second in range(first + 1, len(outputs)):
            correlations.append(
                {
                    "a": first,
                    "b": second,
                    "correlation": image_correlation(
                        outputs[first][1], outputs[second][1]
                    ),
                }
            )
    result.curves["correlations"] = DataFrame(
        correlations, columns=["a", "b", "correlation"]
    )
    charges = [point.get("charge") for point in result.points]
    result.extras.update(
        min_correlation=min(
            (item["correlation"] for item in correlations), default=1.0
        ),
        charges_equal=len(set(charges)) == 1 and charges[0] is not None,
    )
    return result


def polarization_panel(
    s: Scenario,
    inputs: Sequence[Tuple[str, np.ndarray]],
    workers: int = 1,
    psi_count: int = 12,
) -> SweepResult:
    """
    Intensity, the four analyzer projections and extinction ratios for each input
    polarization, with the target vector-beam relation residuals
    """
    device = build_device(s)
    transfer = device.transfer()

    def gamma_for(jones) -> GammaCoefficients:
        state = device.input_state(jones)
        return GammaCoefficients.from_state(transfer @ state.amplitudes)

    def run(item: Tuple[str, np.ndarray]):
        label, jones = item
        gamma = gamma_for(jones)
        field = synthesize_field(gamma, device.ring_modes)
        point: Dict[str, Any] = {"input": label}
        point.update(field_metrics(gamma, field, float(np.sum(np.abs(jones) ** 2))))
        if label in TARGET_RELATIONS and gamma.power > 0:
            point["relation_residual"] = relation_residual(gamma, label)
        images = [_crop(field.intensity, device)]
        for name in PANEL_COLUMNS:
            axis = ProjectionAxis(PROJECTION_ANGLES[name])
            projected = np.abs(project_polarization(field, axis)) ** 2
            images.append(_crop(projected, device))
            if field.power > 0:
                point[f"lobe_angle_{name}_rad"] = lobe_axis_angle(
                    projected, field.grid, center=s.ring.center
                )
        return point, images

    outputs = _map(run, list(inputs), workers)
    result = SweepResult(kind="panel", extras={"device": device.summary()})
    rows = []
    for (label, _), (point, images) in zip(inputs, outputs):
        result.points.append(point)
        rows.append(images)
        name = safe_label(label)
        result.images[f"{name}_total"] = images[0]
        for column, image in zip(PANEL_COLUMNS, images[1:]):
            result.images[f"{name}_{column}"] = image
    result.montage = montage(rows)
    if psi_count >= 8:
        psis = np.linspace(0.0, np.pi, psi_count, endpoint=False)
        curve = extinction_vs_polarization(
            lambda jones: synthesize_field(gamma_for(jones), device.ring_modes), psis
        )
        result.curves["extinction_vs_polarization"] = DataFrame(
            {
                "psi_rad": curve.psi,
                "extinction_dB": curve.extinction_db,
                "fit_dB": curve.fit(curve.psi),
            }
        )
        result.extras["extinction_fit"] = {
            "amplitude_dB": curve.fit.amplitude,
            "phase_rad": curve.fit.phase,
            "offset_dB": curve.fit.offset,
            "residual_dB": curve.fit.residual,
            "unconstrained": curve.fit.unconstrained,
        }
    return result


def interference_run(s: Scenario) -> SweepResult:
    """
    Analyzed output field against the reference beam: spiral or fork fringes
    """
    device = build_device(s)
    field = device.output_field()
    axis = ProjectionAxis(jones=tuple(jones_for_name(s.reference_analyzer)))
    projected = project_polarization(field, axis)
    fringes = interfere_reference(field, s.reference, axis, s.k0)
    point: Dict[str, Any] = {"input": s.input_label, "analyzer": s.reference_analyzer}
    try:
        measurement = topological_charge(projected, field.grid)
        point.update(charge=measurement.charge, charge_residual=measurement.residual)
    except SingularSamplingCircle as error:
        logger.warning("charge not measured: %s", error)
        point.update(charge=None, charge_residual=None)
    if s.reference.curvature is not None:
        arms, handedness = arm_count(fringes, field.grid, center=s.ring.center)
        point.update(arms=arms, handedness=handedness)
    result = SweepResult(
        kind="interfere", points=[point], extras={"device": device.summary()}
    )
    result.images["projected"] = _crop(np.abs(projected) ** 2, device)
    result.images["interference"] = _crop(fringes, device)
    return result


def modes_run(s: Scenario) -> SweepResult:
    """
    Mode indices, the coupling matrix and images of the profiles and modes
    """
    device = build_device(s)
    points = [
        {
            "mode": mode.pol + ("" if index < 2 else f"_{mode.oam:+d}"),
            "n_eff": mode.n_eff,
            "beta_radpm": mode.beta,
        }
        for index, mode in enumerate(device.basis.modes)
    ]
    result = SweepResult(
        kind="solve-modes", points=points, extras={"device": device.summary()}
    )
    result.images["profile_single"] = profile_image(device.single_profile)
    result.images["profile_ring"] = profile_image(device.ring_profile)
    result.images["mode_gaussian"] = device.basis.modes[0].intensity
    result.images["mode_ring"] = _crop(device.basis.modes[2].intensity, device)
    result.curves["coupling_matrix"] = device.matrix.to_frame()
    result.extras["provenance"] = device.matrix.provenance_table()
    return result


def phase_match_run(
    s: Scenario,
    radii: Sequence[float],
    workers: int = 1,
    orders: Sequence[int] = (1, 2),
) -> SweepResult:
    """
    Dispersion curves over ring radius and the phase matching radius of each order.
    With a match radius the single track peak is first fitted so that order ell
    is phase matched there.
    """
    track = s.single
    extras: Dict[str, Any] = {"scale_widths": s.scale_widths}
    if s.match_radius is not None:
        ring = ring_at(s.ring, s.match_radius, s.scale_widths)
        track = match_single_peak(s.grid, track, ring, s.ell, s.k0, s.n_s, s.model)
        extras.update(
            match_radius_um=s.match_radius,
            single_peak_delta_eps=track.peak_delta_eps,
        )
    single = gaussian_track_profile(s.grid, track, s.n_s)
    first = phase_match_radius(
        single,
        s.ring,
        s.ell,
        radii,
        s.k0,
        model=s.model,
        workers=workers,
        single_track=track,
        scale_widths=s.scale_widths,
    )
    curve = first.curve
    matched: Dict[int, Optional[float]] = {s.ell: first.radius_um}
    for order in orders:
        if order in matched or order not in curve.n_eff:
            continue
        mismatch = np.array(curve.n_eff[order]) - curve.n_eff_single
        crossings = np.nonzero(np.sign(mismatch[:-1]) != np.sign(mismatch[1:]))[0]
        if len(crossings) == 0:
            error = NoCrossingError(order, curve.radii[0], curve.radii[-1])
            logger.warning("%s", error)
            matched[order] = None
            continue
        index = int(crossings[0])
        matched[order] = bisect_radius(
            curve.n_eff_single,
            s.ring,
            order,
            curve.radii[index],
            curve.radii[index + 1],
            s.k0,
            s.n_s,
            s.grid.dx,
            s.model,
            s.scale_widths,
        )
    points = [
        {"order": order, "radius_um": matched[order]} for order in sorted(matched)
    ]
    result = SweepResult(kind="phase-match", points=points, extras=extras)
    result.curves["dispersion"] = curve.to_frame()
    return result
