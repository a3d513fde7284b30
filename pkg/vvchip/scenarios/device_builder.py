"""
Builds a complete device (profiles, modes, coupling matrices, segment plan) from a
scenario
"""
from dataclasses import dataclass
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from vvchip.analysis.field_analysis import synthesize_field
from vvchip.analysis.field_objects import VectorField
from vvchip.conversions.conversions import j_to_nj
from vvchip.coupling.coupled_mode_engine import (
    Calibration,
    assemble_matrix,
    butt_ratio,
    calibrate_device,
    mass_matrix,
    propagate_chip,
    transfer_matrix,
)
from vvchip.coupling.coupling_objects import (
    OAM,
    AmplitudeState,
    CouplingMatrix,
    GammaCoefficients,
    ModeBasis,
    SegmentPlan,
)
from vvchip.modes.mode_objects import ModeField
from vvchip.modes.mode_solver import (
    analytic_gaussian_mode,
    analytic_ring_modes,
    find_order_pair,
    make_oam_pair,
    solve_modes,
)
from vvchip.scenarios.scenario_objects import Scenario
from vvchip.waveguide.waveguide_model import (
    gaussian_track_profile,
    perturbation_from_energy,
    ring_profile,
    write_energy_for_delta_beta,
)
from vvchip.waveguide.waveguide_objects import PermittivityProfile, RingSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Device:
    scenario: Scenario
    single_profile: PermittivityProfile
    ring_profile: PermittivityProfile
    basis: ModeBasis
    matrix: CouplingMatrix
    plan: SegmentPlan
    calibration: Optional[Calibration]
    butt_ratio: float
    energy_offset: float = 0.0
    xi: float = 0.0

    @property
    def ring_modes(self) -> Tuple[ModeField, ...]:
        return self.basis.ring_modes

    def transfer(self) -> np.ndarray:
        return transfer_matrix(self.plan, self.scenario.method)

    def input_state(self, jones=None) -> AmplitudeState:
        jones = self.scenario.input_jones if jones is None else jones
        return AmplitudeState.from_jones(jones, self.scenario.frame_theta)

    def propagate(self, jones=None) -> GammaCoefficients:
        return propagate_chip(self.input_state(jones), self.plan, self.scenario.method)

    def output_field(self, jones=None) -> VectorField:
        return synthesize_field(self.propagate(jones), self.ring_modes)

    def summary(self) -> Dict[str, Any]:
        """
        Scalar description of the device for manifests
        """
        record: Dict[str, Any] = {
            "n_eff_gaussian": self.basis.modes[0].n_eff,
            "n_eff_ring": self.basis.modes[2].n_eff,
            "beta_bar_radpm": self.basis.beta_bar,
            "lead_in_m": self.plan.L1,
            "coupling_m": self.plan.Lcp,
            "lead_out_m": self.plan.L2,
            "butt_ratio": self.butt_ratio,
            "energy_offset_nJ": j_to_nj(self.energy_offset),
            "xi_radpm": self.xi,
        }
        if self.calibration is not None:
            calibration = self.calibration
            write = self.scenario.write
            record.update(
                tensor_scale=calibration.tensor_scale,
                detuning_x_radpm=calibration.detunings[0],
                detuning_y_radpm=calibration.detunings[1],
                detuning_x_energy_nJ=j_to_nj(
                    write_energy_for_delta_beta(write, calibration.detunings[0])
                ),
                detuning_y_energy_nJ=j_to_nj(
                    write_energy_for_delta_beta(write, calibration.detunings[1])
                ),
                splitting_radpm=calibration.splitting,
                relative_phase_rad=calibration.phase,
            )
        return record


def solve_device_modes(
    scenario: Scenario,
    single: PermittivityProfile,
    ring: PermittivityProfile,
    ring_spec: RingSpec,
) -> ModeBasis:
    """
    Gaussian mode of the single waveguide and the +-ell vortex pair of the ring
    """
    if scenario.model == "analytic":
        gaussian = analytic_gaussian_mode(single, scenario.single, scenario.k0)
        even, odd = analytic_ring_modes(ring, ring_spec, scenario.ell, scenario.k0)
    else:
        gaussian = solve_modes(single, scenario.k0, 1, **scenario.solver_options)[0]
        modes = solve_modes(
            ring, scenario.k0, 2 * scenario.ell + 4, **scenario.solver_options
        )
        even, odd = find_order_pair(modes, scenario.ell, ring_spec.center)
    positive, negative = make_oam_pair(even, odd, scenario.ell)
    logger.info(
        "modes: gaussian n_eff=%.7f, ring l=%d n_eff=%.7f",
        gaussian.n_eff,
        scenario.ell,
        positive.n_eff,
    )
    return ModeBasis.from_modes(gaussian, positive, negative, scenario.ell)


def _apply_calibration(K: CouplingMatrix, calibration: Calibration) -> CouplingMatrix:
    for index, detuning in enumerate(calibration.detunings):
        value = K.values[index, index].real + detuning
        K = K.with_diagonal(index, value, "write detuning")
    return K


def _apply_xi(K: CouplingMatrix, xi: float) -> CouplingMatrix:
    if xi == 0:
        return K
    for index in range(OAM.start, OAM.stop):
        K = K.with_diagonal(index, K.values[index, index].real + xi, "xi fluctuation")
    return K


def build_device(
    scenario: Scenario,
    energy_offset: float = 0.0,
    calibration: Optional[Calibration] = None,
    xi: float = 0.0,
) -> Device:
    """
    Build the device with the ring written at E_sp + energy_offset

    Parameters
    ----------
    scenario : Scenario
    energy_offset : float
        Pulse energy change of the ring tracks (J)
    calibration : Calibration, optional
        Reuse a calibration, as sweeps do around their baseline; when omitted and the
        scenario asks for it the device is calibrated here
    xi : float
        Residual propagation-constant shift of the ring modes (rad/m)

    Returns
    -------
    Device
    """
    track = perturbation_from_energy(scenario.ring.track, scenario.write, energy_offset)
    ring_spec = scenario.ring.with_track(track)
    single = gaussian_track_profile(
        scenario.grid, scenario.single, scenario.n_s, scenario.tensor_a
    )
    ring = ring_profile(
        scenario.grid, ring_spec, scenario.n_s, scenario.tensor_b, scenario.axis_mode
    )
    basis = solve_device_modes(scenario, single, ring, ring_spec)

    def build(scale: float) -> CouplingMatrix:
        return assemble_matrix(
            basis,
            single,
            ring,
            theta=scenario.frame_theta,
            tensor_b=scenario.tensor_b.scaled(scale),
        )

    lead_in, coupling_length, lead_out = scenario.segment_lengths
    if calibration is None and scenario.calibrate:
        calibration = calibrate_device(
            build,
            scenario.length,
            selectivity=scenario.selectivity,
            target_phase=scenario.target_phase,
            ell=scenario.ell,
        )
        K = calibration.matrix
    elif calibration is not None:
        K = _apply_calibration(build(calibration.tensor_scale), calibration)
    else:
        K = build(1.0)
    K = _apply_xi(K, xi)
    mass = mass_matrix(basis, scenario.frame_theta)
    plan = SegmentPlan.from_matrix(
        K,
        lead_in,
        coupling_length,
        lead_out,
        ramp=scenario.ramp,
        mass=mass if scenario.butt_coupling else None,
        total=scenario.length,
    )
    return Device(
        scenario=scenario,
        single_profile=single,
        ring_profile=ring,
        basis=basis,
        matrix=K,
        plan=plan,
        calibration=calibration,
        butt_ratio=butt_ratio(K, mass, basis),
        energy_offset=energy_offset,
        xi=xi,
    )
