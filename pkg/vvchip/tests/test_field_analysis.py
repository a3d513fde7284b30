import math

import numpy as np
import pytest

from vvchip.analysis.field_analysis import (
    arm_count,
    birefringent_leakage,
    conversion_efficiency,
    crest_radius,
    extinction_ratio,
    extinction_vs_polarization,
    fit_sine,
    fork_reference,
    image_correlation,
    interfere_reference,
    lobe_axis_angle,
    polarization_extinction,
    project_polarization,
    radial_profile,
    stokes_parameters,
    synthesize_field,
    topological_charge,
    vector_purity,
)
from vvchip.analysis.field_objects import ProjectionAxis, ReferenceBeam, VectorField
from vvchip.conversions.conversions import jones_for_name
from vvchip.coupling.coupling_objects import AmplitudeState, GammaCoefficients
from vvchip.exceptions.chip_exception import (
    ContractError,
    ModelError,
    SingularSamplingCircle,
)
from vvchip.modes.mode_solver import analytic_ring_modes, make_oam_pair
from vvchip.tests.utils import K0, uniform_field, vortex_field
from vvchip.waveguide.waveguide_model import ring_profile
from vvchip.waveguide.waveguide_objects import RingSpec, TrackSpec


@pytest.fixture(scope="module")
def vortex_modes(ring_pair):
    positive, negative = make_oam_pair(*ring_pair, 1)
    return positive, negative, positive, negative


@pytest.fixture(scope="module")
def radial_beam(vortex_modes):
    gamma = GammaCoefficients(0.5, 0.5, -0.5j, 0.5j)
    return synthesize_field(gamma, vortex_modes)


def _pixel(grid, x, y):
    row, column = grid.to_pixel(np.array(x), np.array(y))
    return int(round(float(row))), int(round(float(column)))


def test_radial_beam_polarization(radial_beam):
    grid = radial_beam.grid
    on_x = _pixel(grid, 3.5, 0.0)
    on_y = _pixel(grid, 0.0, 3.5)
    assert abs(radial_beam.ey[on_x]) < 1e-6 * abs(radial_beam.ex[on_x])
    assert abs(radial_beam.ex[on_y]) < 1e-6 * abs(radial_beam.ey[on_y])


def test_synthesized_power_matches_coefficients(radial_beam):
    assert radial_beam.power == pytest.approx(1.0, rel=1e-9)


def test_synthesize_needs_four_modes(vortex_modes):
    with pytest.raises(ContractError):
        synthesize_field(GammaCoefficients(1, 0, 0, 0), vortex_modes[:3])


def test_vector_purity(radial_beam, small_grid):
    assert vector_purity(radial_beam) == pytest.approx(0.5, abs=1e-6)
    horizontal = uniform_field(small_grid, (1, 0))
    assert vector_purity(horizontal) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    "powers, expected",
    [((10.0, 1.0), 10.0), ((1.0, 0.0), math.inf), ((0.0, 1.0), -math.inf)],
)
def test_extinction_ratio(powers, expected):
    assert extinction_ratio(*powers) == pytest.approx(expected)


@pytest.mark.parametrize("powers", [(0.0, 0.0), (-1.0, 1.0)])
def test_extinction_ratio_errors(powers):
    with pytest.raises(ContractError):
        extinction_ratio(*powers)


def test_polarization_extinction(small_grid):
    horizontal = uniform_field(small_grid, (1, 0))
    assert polarization_extinction(horizontal, ProjectionAxis(0.0)) > 100
    diagonal = uniform_field(small_grid, jones_for_name("D"))
    assert polarization_extinction(diagonal, ProjectionAxis(math.pi / 4)) > 100
    assert polarization_extinction(diagonal, ProjectionAxis(0.0)) == pytest.approx(
        0.0, abs=1e-9
    )


def test_circular_analyzers_are_orthogonal():
    axis = ProjectionAxis(jones=tuple(jones_for_name("RCP")))
    assert abs(np.vdot(axis.vector, axis.orthogonal().vector)) < 1e-15


def test_stokes_parameters(small_grid):
    circular = stokes_parameters(uniform_field(small_grid, jones_for_name("RCP")))
    np.testing.assert_allclose(np.abs(circular["S3"]), circular["S0"], atol=1e-12)
    np.testing.assert_allclose(circular["S1"], 0.0, atol=1e-12)
    horizontal = stokes_parameters(uniform_field(small_grid, (1, 0)))
    np.testing.assert_allclose(horizontal["S1"], horizontal["S0"])
    np.testing.assert_allclose(horizontal["azimuth"], 0.0)


@pytest.mark.parametrize("ell", [1, -1, 2, -2])
def test_topological_charge(ring_grid, ell):
    measurement = topological_charge(vortex_field(ring_grid, ell), ring_grid)
    assert measurement.charge == ell
    assert measurement.residual < 0.05


@pytest.mark.parametrize(
    "ell, radius, widths", [(1, 3.5, (1.75, 3.5)), (2, 5.0, (2.5, 5.0))]
)
def test_synthesized_mode_charge(ring_grid, ell, radius, widths):
    track = TrackSpec(center=(0.0, 0.0), widths=widths, peak_delta_eps=1e-2)
    ring = RingSpec(radius=radius, track=track)
    even, odd = analytic_ring_modes(ring_profile(ring_grid, ring), ring, ell, K0)
    positive, negative = make_oam_pair(even, odd, ell)
    modes = (positive, negative, positive, negative)
    for gamma, expected in (
        (GammaCoefficients(1, 0, 0, 0), ell),
        (GammaCoefficients(0, 1, 0, 0), -ell),
    ):
        field = synthesize_field(gamma, modes)
        assert topological_charge(field.ex, ring_grid).charge == expected


def test_charge_across_nodal_line(ring_grid):
    r, phi = ring_grid.polar((0.0, 0.0))
    field = np.exp(-(((r - 3.0) / 1.2) ** 2)) * np.cos(phi) + 0j
    with pytest.raises(SingularSamplingCircle):
        topological_charge(field, ring_grid, center=(0.0, 0.0), radius=3.0)


def test_crest_and_radial_profile(ring_grid):
    image = np.abs(vortex_field(ring_grid, 1)) ** 2
    assert crest_radius(image, ring_grid, (0.0, 0.0)) == pytest.approx(3.0, abs=0.25)
    radii, values = radial_profile(image, ring_grid, 0.0, center=(0.0, 0.0))
    assert radii[1] - radii[0] == pytest.approx(ring_grid.dx / 2)
    assert radii[int(np.argmax(values))] == pytest.approx(3.0, abs=0.13)


@pytest.mark.parametrize("angle", [0.0, 0.5, 1.2, 2.8])
def test_lobe_axis_angle(ring_grid, angle):
    r, phi = ring_grid.polar((0.0, 0.0))
    image = np.exp(-(((r - 3.0) / 1.2) ** 2)) * np.cos(phi - angle) ** 2
    measured = lobe_axis_angle(image, ring_grid, (0.0, 0.0))
    assert measured == pytest.approx(angle, abs=1e-4)


@pytest.mark.parametrize("tilt", [0.0, 1e-13, -1e-13])
def test_lobe_axis_near_zero_is_not_pi(ring_grid, tilt):
    r, phi = ring_grid.polar((0.0, 0.0))
    image = np.exp(-(((r - 3.0) / 1.2) ** 2)) * np.cos(phi + tilt) ** 2
    assert lobe_axis_angle(image, ring_grid, (0.0, 0.0)) == pytest.approx(
        0.0, abs=1e-12
    )


def test_even_x_pair_lobes_lie_on_x_axis(vortex_modes):
    gamma = GammaCoefficients(1 / math.sqrt(2), 1 / math.sqrt(2), 0, 0)
    field = synthesize_field(gamma, vortex_modes)
    assert np.max(np.abs(field.ey)) == 0.0
    angle = lobe_axis_angle(field.intensity, field.grid, (0.0, 0.0))
    assert angle == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("psi", [0.0, math.pi / 4, math.pi / 2])
def test_radial_beam_lobes_follow_analyzer(radial_beam, psi):
    projected = np.abs(project_polarization(radial_beam, ProjectionAxis(psi))) ** 2
    angle = lobe_axis_angle(projected, radial_beam.grid, (0.0, 0.0))
    assert angle == pytest.approx(psi % math.pi, abs=math.radians(1.0))


@pytest.mark.parametrize("ell", [1, 2])
def test_spiral_arm_count(ring_grid, ell):
    arms = []
    for sign in (1, -1):
        field = VectorField(
            ring_grid, vortex_field(ring_grid, sign * ell), np.zeros(ring_grid.shape)
        )
        fringes = interfere_reference(
            field, ReferenceBeam(waist=6.0, curvature=2e-5), ProjectionAxis(0.0), K0
        )
        arms.append(arm_count(fringes, ring_grid, center=(0.0, 0.0), radius=3.0))
    assert arms[0][0] == arms[1][0] == ell
    assert arms[0][1] == -arms[1][1] != 0


def test_fork_reference_is_planar():
    reference = fork_reference()
    assert reference.curvature is None
    assert reference.tilt == (0.05, 0.0)


def test_reference_validation():
    with pytest.raises(ModelError):
        ReferenceBeam(waist=0.0)


def test_image_correlation(ring_grid):
    image = np.abs(vortex_field(ring_grid, 1)) ** 2
    assert image_correlation(image, image) == pytest.approx(1.0)
    assert image_correlation(image, -image) == pytest.approx(-1.0)
    with pytest.raises(ContractError):
        image_correlation(image, image[1:])


def test_birefringent_leakage():
    assert birefringent_leakage(0.6, 0.8, 0.3, 0.3) == 0
    assert abs(birefringent_leakage(0.6, 0.8, 0.0, math.pi)) == pytest.approx(0.96)


def test_fit_sine():
    psi = np.linspace(0, math.pi, 12, endpoint=False)
    fit = fit_sine(psi, 3 * np.sin(2 * psi + 0.4) + 1)
    assert fit.amplitude == pytest.approx(3.0)
    assert fit.phase == pytest.approx(0.4)
    assert fit.offset == pytest.approx(1.0)
    assert fit.residual < 1e-9
    assert not fit.unconstrained


def test_extinction_curve_of_ideal_analyzer(small_grid):
    psis = np.linspace(0, math.pi, 8, endpoint=False)
    curve = extinction_vs_polarization(
        lambda jones: uniform_field(small_grid, jones), psis
    )
    assert np.all(curve.extinction_db == 60.0)
    assert curve.fit.unconstrained


def test_extinction_curve_needs_angles(small_grid):
    with pytest.raises(ContractError):
        extinction_vs_polarization(
            lambda jones: uniform_field(small_grid, jones), [0.0, 0.1, 0.2]
        )


def test_conversion_efficiency():
    state = AmplitudeState(np.array([1, 1, 0, 0, 0, 0], dtype=complex))
    gamma = GammaCoefficients(0.5, 0.5, 0.5, 0.5)
    assert conversion_efficiency(gamma, state) == pytest.approx(0.5)
    with pytest.raises(ContractError):
        conversion_efficiency(gamma, AmplitudeState(np.zeros(6, dtype=complex)))


def test_vector_field_validation(small_grid):
    with pytest.raises(ContractError):
        VectorField(small_grid, np.zeros((3, 3)), np.zeros((3, 3)))
    values = np.zeros(small_grid.shape)
    values[0, 0] = np.nan
    with pytest.raises(ModelError):
        VectorField(small_grid, values, np.zeros(small_grid.shape))
