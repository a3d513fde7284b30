import numpy as np
import pytest

from vvchip.exceptions.chip_exception import ContractError, GeometryError, ModelError
from vvchip.tests.utils import K0
from vvchip.waveguide.waveguide_model import (
    circular_core_profile,
    delta_beta_from_write,
    gaussian_track_profile,
    lab_tensor,
    perturbation_from_energy,
    profile_image,
    propagation_constant_from_write,
    ring_profile,
    rotate_tensor,
    rotation_matrix,
    track_birefringence_field,
    write_energy_for_delta_beta,
)
from vvchip.waveguide.waveguide_objects import (
    BirefringenceTensor,
    GridSpec,
    RingSpec,
    TrackSpec,
    WriteParams,
)


@pytest.fixture
def write_params():
    return WriteParams(
        E_sp=200e-9,
        v=0.02,
        f_rp=1e6,
        w0=1e-6,
        eta=5.66e-21,
        n_s=1.4537,
        k0_prime=K0,
    )


def test_gaussian_track_peak_at_center(single_profile, small_grid):
    row, column = small_grid.ny // 2, small_grid.nx // 2
    assert single_profile.eps_iso[row, column] == pytest.approx(1e-2)
    assert single_profile.max_delta_eps == pytest.approx(1e-2)
    assert single_profile.n_s == pytest.approx(1.4537)


def test_track_outside_grid(small_grid):
    track = TrackSpec(center=(6.0, 0.0), widths=(2.0, 2.0), peak_delta_eps=1e-3)
    with pytest.raises(GeometryError):
        gaussian_track_profile(small_grid, track)


def test_grid_too_small():
    with pytest.raises(GeometryError):
        GridSpec(nx=8, ny=32, dx=0.1, dy=0.1)


def test_ring_profile_is_pixelwise_maximum(ring_track_profile):
    assert ring_track_profile.max_delta_eps <= 1e-2 * (1 + 1e-12)
    assert ring_track_profile.max_delta_eps > 0.9 * 1e-2


def test_ring_center_track(ring_grid, ring_spec):
    center = (ring_grid.ny // 2, ring_grid.nx // 2)
    hollow = ring_profile(ring_grid, ring_spec)
    filled = ring_profile(
        ring_grid,
        RingSpec(radius=ring_spec.radius, track=ring_spec.track, n_tracks=13),
    )
    assert hollow.eps_iso[center] < 0.05 * 1e-2
    assert filled.eps_iso[center] == pytest.approx(1e-2)


def test_gaussian_track_moments():
    grid = GridSpec.centered(10.0, 10.0, 0.1)
    track = TrackSpec(center=(0.0, 0.0), widths=(2.0, 1.0), peak_delta_eps=1e-2)
    values = gaussian_track_profile(grid, track).eps_iso
    xx, yy = grid.mesh()
    ratio = np.sum(xx ** 2 * values) / np.sum(yy ** 2 * values)
    assert ratio == pytest.approx(4.0, rel=1e-2)
    integral = np.sum(values) * grid.pixel_area
    assert integral == pytest.approx(np.pi * 2.0 * 1.0 * 1e-2, rel=5e-3)


def test_ring_crest_is_nearly_uniform():
    grid = GridSpec.centered(12.0, 12.0, 0.1)
    ring = RingSpec(
        radius=3.7,
        track=TrackSpec(center=(0.0, 0.0), widths=(1.75, 3.5), peak_delta_eps=1e-2),
    )
    values = ring_profile(grid, ring).eps_iso
    assert values[grid.ny // 2, grid.nx // 2] < 0.05 * 1e-2
    r, phi = grid.polar(ring.center)
    near = np.abs(r - ring.radius) < 1.0
    bins = np.floor((phi[near] + np.pi) / (2 * np.pi) * 72).astype(int) % 72
    crest = np.zeros(72)
    np.maximum.at(crest, bins, values[near])
    assert (crest.max() - crest.min()) / crest.max() < 0.1


def test_ring_is_symmetric_under_half_turn(ring_track_profile):
    values = ring_track_profile.eps_iso
    np.testing.assert_allclose(values, values[::-1, ::-1], atol=1e-12)


@pytest.mark.parametrize(
    "radius, widths, n_tracks",
    [(3.5, (1.0, 3.5), 11), (-1.0, (1.0, 3.5), 12), (3.5, (1.0, 0.5), 12)],
)
def test_invalid_ring(radius, widths, n_tracks):
    with pytest.raises(GeometryError):
        RingSpec(
            radius=radius,
            track=TrackSpec(center=(0.0, 0.0), widths=widths, peak_delta_eps=1e-3),
            n_tracks=n_tracks,
        )


def test_tensor_axis_range():
    with pytest.raises(ModelError):
        BirefringenceTensor(d_eps_x=1e-4, theta=2.0)


def test_lab_tensor_rotation():
    tensor = BirefringenceTensor(d_eps_x=1e-4, d_eps_y=-1e-4)
    np.testing.assert_allclose(lab_tensor(tensor, 0.0), tensor.diagonal(), atol=1e-20)
    swapped = lab_tensor(tensor, np.pi / 2)
    assert swapped[0, 0] == pytest.approx(-1e-4)
    assert swapped[1, 1] == pytest.approx(1e-4)


@pytest.mark.parametrize("theta", [0.0, 0.4, -1.2, np.pi / 2])
def test_rotate_tensor_inverts_and_repeats(theta):
    tensor = BirefringenceTensor(d_eps_x=1e-4, d_eps_y=-3e-5, d_eps_z=2e-5)
    rotated = rotate_tensor(tensor, theta)
    np.testing.assert_allclose(
        rotation_matrix(-theta) @ rotated, tensor.diagonal(), atol=1e-18
    )
    np.testing.assert_allclose(
        rotate_tensor(tensor, theta + 2 * np.pi), rotated, atol=1e-18
    )


def test_radial_axis_follows_ring(ring_grid, ring_spec):
    tensor = BirefringenceTensor(d_eps_x=1e-4)
    profile = ring_profile(ring_grid, ring_spec, d_eps=tensor, axis_mode="radial")
    field = track_birefringence_field(profile)
    row, column = ring_grid.to_pixel(np.array(3.5), np.array(0.0))
    on_x = field[int(round(float(row))), int(round(float(column)))]
    row, column = ring_grid.to_pixel(np.array(0.0), np.array(3.5))
    on_y = field[int(round(float(row))), int(round(float(column)))]
    assert on_x[0, 0] == pytest.approx(1e-4, rel=1e-6)
    assert on_y[1, 1] == pytest.approx(1e-4, rel=1e-6)
    assert abs(on_y[0, 0]) < 1e-12


def test_circular_core_area():
    grid = GridSpec.centered(6.0, 6.0, 0.1)
    profile = circular_core_profile(grid, 2.0, 5e-3)
    area = np.sum(profile.eps_iso / profile.written_peak) * grid.pixel_area
    assert area == pytest.approx(np.pi * 4.0, rel=1e-3)


def test_propagation_constant_exceeds_substrate(write_params):
    beta = propagation_constant_from_write(write_params)
    assert beta > K0 * 1.4537
    assert beta < K0 * 1.47


def test_delta_beta_is_linear(write_params):
    first = delta_beta_from_write(write_params, 1e-9)
    assert delta_beta_from_write(write_params, 2e-9) == pytest.approx(2 * first)
    assert delta_beta_from_write(write_params, 0.0) == 0.0
    assert delta_beta_from_write(write_params, -1e-9) == pytest.approx(-first)


def test_delta_beta_matches_finite_difference(write_params):
    step = 1e-12
    finite = (
        propagation_constant_from_write(write_params, E_sp=200e-9 + step)
        - propagation_constant_from_write(write_params)
    )
    assert delta_beta_from_write(write_params, step) == pytest.approx(finite, rel=1e-4)


def test_energy_for_delta_beta_inverts(write_params):
    energy = write_energy_for_delta_beta(write_params, 250.0)
    assert delta_beta_from_write(write_params, energy) == pytest.approx(250.0)


def test_delta_beta_energy_range(write_params):
    with pytest.raises(ContractError):
        delta_beta_from_write(write_params, 200e-9)


def test_perturbation_scales_peak(single_track, write_params):
    track = perturbation_from_energy(single_track, write_params, 20e-9)
    assert track.peak_delta_eps == pytest.approx(1e-2 * 1.1)
    assert track.widths == single_track.widths
    with pytest.raises(ModelError):
        perturbation_from_energy(single_track, write_params, -200e-9)


def test_profile_image(single_profile):
    image = profile_image(single_profile)
    assert image.dtype == np.uint16
    assert image.max() == 65535
