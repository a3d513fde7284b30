from dataclasses import replace
import math

import numpy as np
import pytest

from vvchip.conversions.conversions import PROJECTION_ANGLES, jones_for_name
from vvchip.coupling.coupled_mode_engine import (
    TARGET_RELATIONS,
    detuned_exchange,
    two_mode_exchange,
    vector_splitting,
)
from vvchip.io.config import config_from_dict
from vvchip.parsing.sweep_parser import parse_polarizations
from vvchip.scenarios.device_builder import build_device
from vvchip.scenarios.scenario_objects import Scenario
from vvchip.scenarios.sweeps import (
    array_robustness,
    energy_sweep,
    modes_run,
    polarization_panel,
    propagate_run,
    ring_window,
    safe_label,
)
from vvchip.tests.markers import slow
from vvchip.waveguide.waveguide_model import delta_beta_from_write

WINDOW = (61, 61)
LOBE_TOLERANCE = math.radians(5.0)


@pytest.fixture(scope="module")
def fitted_scenario():
    return Scenario.from_config(config_from_dict({"calibration": "fitted_first_order"}))


@pytest.fixture(scope="module")
def second_order_scenario():
    config = config_from_dict({"calibration": "fitted_second_order"})
    return Scenario.from_config(config)


def _axis_offset(angle: float, psi: float) -> float:
    return abs(math.remainder(angle - psi, math.pi))


def _power(point, name: str) -> float:
    return point[f"{name}_re"] ** 2 + point[f"{name}_im"] ** 2


def test_ring_window(fast_scenario):
    rows, columns = ring_window(fast_scenario.grid, fast_scenario.ring)
    assert (rows.stop - rows.start, columns.stop - columns.start) == WINDOW


@pytest.mark.parametrize(
    "label, expected",
    [("RCP", "RCP"), ("lin(30 deg)", "lin_30_deg"), ("jones(1,-1j)", "jones_1_-1j")],
)
def test_safe_label(label, expected):
    assert safe_label(label) == expected


def test_device_summary(fast_device):
    summary = fast_device.summary()
    assert summary["lead_in_m"] >= 0.0
    assert summary["lead_out_m"] == pytest.approx(3e-3)
    assert summary["coupling_m"] == pytest.approx(4e-3)
    assert summary["n_eff_ring"] < summary["n_eff_gaussian"] * 1.01
    assert "tensor_scale" in summary


def test_propagate_run(fast_scenario):
    result = propagate_run(fast_scenario)
    (point,) = result.points
    assert point["input"] == "H"
    assert 0.0 <= point["efficiency"] <= 1.0 + 1e-9
    assert point["efficiency"] + point["residue_power"] == pytest.approx(1.0, abs=1e-9)
    assert result.images["intensity"].shape == WINDOW
    assert len(result.curves["coupling_matrix"]) == 36
    assert result.extras["provenance"]


def test_zero_coupling_length(fast_config):
    fast_config["plan"] = {"coupling_mm": 0.0}
    fast_config["scenario"]["calibrate"] = False
    scenario = Scenario.from_config(config_from_dict(fast_config))
    (point,) = propagate_run(scenario).points
    assert point["efficiency"] == 0.0
    assert point["residue_power"] == pytest.approx(1.0)
    assert "vector_purity" not in point


def test_zero_energy_offset_matches_baseline(fast_scenario):
    (swept,) = energy_sweep(fast_scenario, [0.0]).points
    (single,) = propagate_run(fast_scenario).points
    for key in ("gamma_x_pos_re", "gamma_y_neg_im", "residue_power", "vector_purity"):
        assert swept[key] == single[key]
    assert swept["delta_beta_write_radpm"] == 0.0


def test_energy_sweep_keeps_order(fast_scenario):
    energies = [1e-9, 0.0, -1e-9]
    result = energy_sweep(fast_scenario, energies, workers=3)
    offsets = [point["energy_offset_nJ"] for point in result.points]
    assert offsets == pytest.approx([1.0, 0.0, -1.0])
    slopes = [point["delta_beta_write_radpm"] for point in result.points]
    assert slopes[0] == pytest.approx(-slopes[2])
    assert result.points[0]["n_eff_ring"] > result.points[2]["n_eff_ring"]


def test_workers_do_not_change_results(fast_scenario):
    energies = [0.5e-9, -0.5e-9]
    serial = energy_sweep(fast_scenario, energies, workers=1)
    parallel = energy_sweep(fast_scenario, energies, workers=2)
    assert serial.points == parallel.points


def test_polarization_panel(fast_scenario):
    inputs = parse_polarizations("H RCP lin(30 deg)")
    result = polarization_panel(fast_scenario, inputs, psi_count=8)
    assert [point["input"] for point in result.points] == ["H", "RCP", "lin(30deg)"]
    assert "relation_residual" in result.points[0]
    assert "relation_residual" not in result.points[2]
    assert set(result.images) >= {"H_total", "RCP_D", "lin_30deg_A"}
    height, width = WINDOW
    assert result.montage.shape == (3 * height + 4, 5 * width + 8, 3)
    assert len(result.curves["extinction_vs_polarization"]) == 8
    assert "extinction_fit" in result.extras


def test_panel_without_extinction_curve(fast_scenario):
    inputs = [("V", jones_for_name("V"))]
    result = polarization_panel(fast_scenario, inputs, psi_count=0)
    assert "extinction_vs_polarization" not in result.curves


def test_array_baseline_is_unperturbed(fast_scenario):
    result = array_robustness(fast_scenario, [0.0, 0.0])
    assert result.curves["correlations"]["correlation"].tolist() == pytest.approx([1.0])
    assert result.extras["min_correlation"] == pytest.approx(1.0)
    images = result.images
    np.testing.assert_array_equal(images["emitter_0"], images["emitter_1"])


def test_array_random_shifts_follow_seed(fast_scenario):
    scenario = replace(fast_scenario, xi_max=50.0)
    first = array_robustness(scenario, [0.0, 0.0, 0.0])
    second = array_robustness(scenario, [0.0, 0.0, 0.0])
    xis = [point["xi_radpm"] for point in first.points]
    assert xis == [point["xi_radpm"] for point in second.points]
    assert all(abs(xi) <= 50.0 for xi in xis)
    assert len(set(xis)) == 3


def test_modes_run(fast_scenario):
    result = modes_run(fast_scenario)
    labels = [point["mode"] for point in result.points]
    assert labels[:2] == ["x'", "y'"]
    assert labels[2:] == ["x_+1", "x_-1", "y_+1", "y_-1"]
    assert result.images["mode_ring"].shape == WINDOW




def test_write_detuning_follows_two_mode_law(fast_config):
    fast_config["scenario"]["calibrate"] = False
    scenario = Scenario.from_config(config_from_dict(fast_config))
    baseline = build_device(scenario)
    K = baseline.matrix.values
    # x' reaches only the x-polarized pair; its even member carries the coupling
    eigenvalues, vectors = np.linalg.eigh(K[2:4, 2:4])
    couplings = np.abs(vectors.conj().T @ K[2:4, 0])
    index = int(np.argmax(couplings))
    matched_detuning = K[0, 0].real - eigenvalues[index]
    for energy_offset in (0.0, 0.2e-9, -0.5e-9, 1.0e-9):
        xi = delta_beta_from_write(scenario.write, energy_offset) - scenario.write.xi
        device = build_device(scenario, xi=xi)
        expected = detuned_exchange(
            couplings[index], matched_detuning - xi, scenario.coupling_length
        )
        assert device.propagate(jones=(1.0, 0.0)).power == pytest.approx(
            expected, abs=0.02
        )


@slow
def test_fitted_first_order_radial_beam(fitted_scenario):
    device = build_device(fitted_scenario)
    _, kappa = vector_splitting(device.matrix, 0)
    (point,) = propagate_run(fitted_scenario).points
    assert point["efficiency"] == pytest.approx(
        two_mode_exchange(kappa, fitted_scenario.coupling_length), abs=0.02
    )
    assert point["vector_purity"] > 0.4
    assert point["charge"] in (1, -1)


@slow
def test_fitted_panel_extinction_and_relations(fitted_scenario):
    inputs = parse_polarizations("RCP LCP H")
    result = polarization_panel(fitted_scenario, inputs, psi_count=0)
    points = {point["input"]: point for point in result.points}
    assert points["RCP"]["extinction_DA_dB"] >= 10.0
    assert points["LCP"]["extinction_DA_dB"] >= 9.0
    for label in TARGET_RELATIONS:
        assert points[label]["relation_residual"] < 0.15


@slow
def test_fitted_radial_lobes_follow_the_analyzer(fitted_scenario):
    inputs = [("H", jones_for_name("H"))]
    (point,) = polarization_panel(fitted_scenario, inputs, psi_count=0).points
    for name, psi in PROJECTION_ANGLES.items():
        assert _axis_offset(point[f"lobe_angle_{name}_rad"], psi) < LOBE_TOLERANCE


@slow
def test_fitted_array_correlation(fitted_scenario):
    result = array_robustness(fitted_scenario, [-1.465e-9, 0.0, 1.465e-9], workers=3)
    assert result.extras["min_correlation"] >= 0.95
    assert result.extras["charges_equal"]
    assert abs(result.points[0]["charge"]) == 1


@slow
def test_second_order_array_correlation(second_order_scenario):
    result = array_robustness(second_order_scenario, [-0.4e-9, 0.0, 0.4e-9], workers=3)
    assert result.extras["min_correlation"] >= 0.95
    for point in result.points:
        # a Gaussian on the mirror axis feeds both windings alike: a l=2 standing wave
        assert point["efficiency"] > 0.0
        assert _power(point, "gamma_x_pos") == pytest.approx(
            _power(point, "gamma_x_neg"), rel=1e-3
        )
        assert _power(point, "gamma_y_pos") == pytest.approx(0.0, abs=1e-9)
        assert point["charge"] is None
