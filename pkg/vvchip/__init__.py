"""
isort:skip_file
"""

# flake8: noqa
from vvchip.io.config import parse_config
from vvchip.scenarios.scenario_objects import Scenario
from vvchip.scenarios.device_builder import build_device
from vvchip.scenarios.sweeps import (
    array_robustness,
    energy_sweep,
    polarization_panel,
)

from ._version import __version__
