import pytest

from vvchip.io.config import config_from_dict
from vvchip.modes.mode_solver import analytic_gaussian_mode, analytic_ring_modes
from vvchip.scenarios.device_builder import build_device
from vvchip.scenarios.scenario_objects import Scenario
from vvchip.tests.utils import FAST_CONFIG, K0
from vvchip.waveguide.waveguide_model import gaussian_track_profile, ring_profile
from vvchip.waveguide.waveguide_objects import GridSpec, RingSpec, TrackSpec


@pytest.fixture(scope="session")
def k0():
    return K0


@pytest.fixture(scope="session")
def small_grid():
    return GridSpec.centered(8.0, 8.0, 0.25)


@pytest.fixture(scope="session")
def ring_grid():
    return GridSpec.centered(12.0, 12.0, 0.25)


@pytest.fixture(scope="session")
def single_track():
    return TrackSpec(center=(0.0, 0.0), widths=(2.7, 2.7), peak_delta_eps=1e-2)


@pytest.fixture(scope="session")
def ring_spec():
    return RingSpec(
        radius=3.5,
        track=TrackSpec(center=(0.0, 0.0), widths=(1.75, 3.5), peak_delta_eps=1e-2),
    )


@pytest.fixture(scope="session")
def single_profile(small_grid, single_track):
    return gaussian_track_profile(small_grid, single_track)


@pytest.fixture(scope="session")
def ring_track_profile(ring_grid, ring_spec):
    return ring_profile(ring_grid, ring_spec)


@pytest.fixture(scope="session")
def gaussian_mode(single_profile, single_track, k0):
    return analytic_gaussian_mode(single_profile, single_track, k0)


@pytest.fixture(scope="session")
def ring_pair(ring_track_profile, ring_spec, k0):
    return analytic_ring_modes(ring_track_profile, ring_spec, 1, k0)


@pytest.fixture
def fast_config():
    return {key: dict(value) for key, value in FAST_CONFIG.items()}


@pytest.fixture(scope="session")
def fast_scenario():
    return Scenario.from_config(config_from_dict(FAST_CONFIG))


@pytest.fixture(scope="session")
def fast_device(fast_scenario):
    return build_device(fast_scenario)
