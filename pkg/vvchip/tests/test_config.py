import json

import pytest

from vvchip.exceptions.chip_exception import ArtifactIOError, ConfigError, ContractError
from vvchip.io.config import (
    WORKERS_ENV,
    Config,
    calibration_names,
    config_from_dict,
    config_to_dict,
    parse_config,
    serialize,
)
from vvchip.scenarios.scenario_objects import Scenario


def _write(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return path


def test_defaults_without_file():
    assert parse_config(None) == Config.defaults()


def test_minimal_file_matches_printed_defaults(tmp_path):
    config = parse_config(_write(tmp_path, {}))
    assert serialize(config) == serialize(Config.defaults())
    assert config.wavelength_nm == 780.0
    assert config.coupler.spacing_um == 15.0
    assert config.plan.coupling_mm == 4.0


@pytest.mark.parametrize(
    "data, path, unit",
    [
        ({"ring": {"radius_um": -1}}, "ring.radius_um", "um"),
        ({"grid": {"step_um": "fine"}}, "grid.step_um", "um"),
        ({"single": {"widths_um": [2.0]}}, "single.widths_um", "um"),
        ({"write": {"energy_nJ": 0}}, "write.energy_nJ", "nJ"),
        ({"plan": {"method": "euler"}}, "plan.method", None),
        ({"ring": {"n_tracks": 11}}, "ring.n_tracks", None),
    ],
)
def test_schema_errors_name_the_field(data, path, unit):
    with pytest.raises(ConfigError) as error:
        config_from_dict(data)
    assert error.value.path == path
    assert error.value.unit == unit
    assert path in str(error.value)


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigError) as error:
        config_from_dict({"ring": {"radius": 3.5}})
    assert "radius" in str(error.value)
    with pytest.raises(ConfigError):
        config_from_dict({"colour": "blue"})


@pytest.mark.parametrize(
    "data, path",
    [
        ({"plan": {"coupling_mm": 12.0}}, "plan.coupling_mm"),
        ({"plan": {"lead_in_mm": 7.0}}, "plan.lead_in_mm"),
        ({"plan": {"ramp_mm": 2.5}}, "plan.ramp_mm"),
        ({"grid": {"x_half_um": 18.0}}, "grid.x_half_um"),
        ({"grid": {"y_half_um": 6.0}}, "grid.y_half_um"),
        ({"ring": {"radius_um": 20.0}}, "grid.x_half_um"),
        ({"scenario": {"energies": "1:2 nJ"}}, "scenario.energies"),
        ({"scenario": {"polarizations": "RCP X"}}, "scenario.polarizations"),
    ],
)
def test_cross_field_errors(data, path):
    with pytest.raises(ConfigError) as error:
        config_from_dict(data)
    assert error.value.path == path


def test_missing_file(tmp_path):
    with pytest.raises(ArtifactIOError):
        parse_config(tmp_path / "absent.json")


def test_invalid_json(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(_write(tmp_path, "{not json"))


def test_unknown_calibration():
    with pytest.raises(ConfigError) as error:
        config_from_dict({"calibration": "unfitted"})
    assert "fitted_first_order" in str(error.value)


def test_calibration_sits_below_user_values():
    config = config_from_dict(
        {"calibration": "fitted_first_order", "scenario": {"selectivity": 5.0}}
    )
    assert config.scenario.selectivity == 5.0
    assert config.scenario.energies == "-2:2:9 nJ"
    assert config.birefringence.axis_mode == "radial"
    assert config.modes.model == "solved"


@pytest.mark.parametrize("name", calibration_names())
def test_round_trip(name, tmp_path):
    config = config_from_dict({"calibration": name, "seed": 7})
    again = parse_config(_write(tmp_path, config_to_dict(config)))
    assert again == config
    assert serialize(again) == serialize(config)


def test_worker_count(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert Config.defaults().worker_count == 1
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert Config.defaults().worker_count == 3
    assert config_from_dict({"workers": 2}).worker_count == 2
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(ConfigError):
        Config.defaults().worker_count


def test_scenario_from_config(fast_scenario):
    assert fast_scenario.grid.nx == 201
    assert fast_scenario.grid.ny == 97
    assert fast_scenario.single.center == (-15.0, 0.0)
    assert fast_scenario.length == pytest.approx(10e-3)
    assert fast_scenario.coupling_length == pytest.approx(4e-3)
    assert fast_scenario.lead_out == pytest.approx(3e-3)
    assert fast_scenario.input_label == "H"
    assert fast_scenario.grid.x[fast_scenario.grid.nx // 2] == pytest.approx(0.0)
    assert fast_scenario.grid.y[fast_scenario.grid.ny // 2] == pytest.approx(0.0)
    assert fast_scenario.segment_lengths == pytest.approx((3e-3, 4e-3, 3e-3))


def test_configured_lead_in():
    scenario = Scenario.from_config(config_from_dict({"plan": {"lead_in_mm": 2.0}}))
    assert scenario.lead_in == pytest.approx(2e-3)
    assert scenario.lead_out == pytest.approx(4e-3)


def test_lead_in_must_fit_the_chip(fast_scenario):
    values = dict(fast_scenario.__dict__)
    values.update(lead_in=7e-3)
    with pytest.raises(ContractError) as error:
        Scenario(**values).segment_lengths
    assert "exceed the chip length" in str(error.value)
