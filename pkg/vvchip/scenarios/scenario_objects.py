"""
Scenario description and sweep results
"""
from dataclasses import dataclass, field
import hashlib
import json
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pandas import DataFrame

from vvchip.analysis.field_objects import ReferenceBeam
from vvchip.conversions.conversions import (
    ENERGY_UNIT_TO_J,
    k0_from_wavelength_nm,
    mm_to_m,
    um_to_m,
)
from vvchip.coupling.coupling_objects import GammaCoefficients
from vvchip.exceptions.chip_exception import ContractError
from vvchip.io.config import Config
from vvchip.parsing.sweep_parser import parse_polarizations
from vvchip.waveguide.waveguide_objects import (
    BirefringenceTensor,
    GridSpec,
    RingSpec,
    TrackSpec,
    WriteParams,
)


def _tensor(section) -> BirefringenceTensor:
    return BirefringenceTensor(
        d_eps_x=section.d_eps_x,
        d_eps_y=section.d_eps_y,
        d_eps_z=section.d_eps_z,
        theta=section.theta_rad,
    )


def _grid(config: Config) -> GridSpec:
    # symmetric about the ring center so the ring keeps its degenerate pairs
    grid = config.grid
    return GridSpec.centered(grid.x_half_um, grid.y_half_um, grid.step_um)


@dataclass(frozen=True, eq=False)
class Scenario:
    """
    Everything needed to build and run one device; lengths of the plan in metres
    """

    k0: float
    n_s: float
    grid: GridSpec
    single: TrackSpec
    ring: RingSpec
    tensor_a: BirefringenceTensor
    tensor_b: BirefringenceTensor
    axis_mode: str
    frame_theta: float
    write: WriteParams
    ell: int
    input_label: str
    input_jones: np.ndarray
    length: float
    coupling_length: float
    lead_in: Optional[float]
    ramp: float = 0.0
    butt_coupling: bool = False
    method: str = "expm"
    model: str = "analytic"
    solver_options: Dict[str, Any] = field(default_factory=dict)
    selectivity: float = 30.0
    target_phase: float = np.pi / 2
    calibrate: bool = True
    seed: int = 0
    xi_max: float = 0.0
    reference: ReferenceBeam = field(default_factory=ReferenceBeam)
    reference_analyzer: str = "D"
    scale_widths: bool = True
    match_radius: Optional[float] = None

    @classmethod
    def from_config(cls, config: Config) -> "Scenario":
        k0 = k0_from_wavelength_nm(config.wavelength_nm)
        ring = RingSpec(
            radius=config.ring.radius_um,
            track=TrackSpec(
                center=(0.0, 0.0),
                widths=config.ring.widths_um,
                peak_delta_eps=config.ring.peak_delta_eps,
            ),
            n_tracks=config.ring.n_tracks,
            center_scan=config.ring.center_scan,
        )
        single = TrackSpec(
            center=(ring.center[0] - config.coupler.spacing_um, ring.center[1]),
            widths=config.single.widths_um,
            peak_delta_eps=config.single.peak_delta_eps,
        )
        write = WriteParams(
            E_sp=config.write.energy_nJ * ENERGY_UNIT_TO_J["nJ"],
            v=config.write.speed_mps,
            f_rp=config.write.rep_rate_hz,
            w0=um_to_m(config.write.waist_um),
            eta=config.write.eta,
            n_s=config.n_s,
            k0_prime=k0,
            xi=config.write.xi_radpm,
        )
        (input_label, input_jones), *_ = parse_polarizations(config.scenario.input)
        reference = config.reference
        if reference.kind == "curved":
            beam = ReferenceBeam(
                waist=reference.waist_um,
                curvature=reference.curvature_m,
                delta=reference.delta_rad,
                amplitude=reference.amplitude,
                center=ring.center,
            )
        else:
            beam = ReferenceBeam(
                waist=reference.waist_um,
                curvature=None,
                tilt=reference.tilt_rad,
                delta=reference.delta_rad,
                amplitude=reference.amplitude,
                center=ring.center,
            )
        plan = config.plan
        return cls(
            k0=k0,
            n_s=config.n_s,
            grid=_grid(config),
            single=single,
            ring=ring,
            tensor_a=_tensor(config.birefringence.a),
            tensor_b=_tensor(config.birefringence.b),
            axis_mode=config.birefringence.axis_mode,
            frame_theta=config.birefringence.frame_theta_rad,
            write=write,
            ell=config.scenario.order,
            input_label=input_label,
            input_jones=input_jones,
            length=mm_to_m(plan.length_mm),
            coupling_length=mm_to_m(plan.coupling_mm),
            lead_in=None if plan.lead_in_mm is None else mm_to_m(plan.lead_in_mm),
            ramp=mm_to_m(plan.ramp_mm),
            butt_coupling=plan.butt_coupling,
            method=plan.method,
            model=config.modes.model,
            solver_options={
                "tol": config.modes.tol,
                "maxiter": config.modes.maxiter,
                "residual_tol": config.modes.residual_tol,
                "seed": config.seed,
            },
            selectivity=config.scenario.selectivity,
            target_phase=config.scenario.target_phase_rad,
            calibrate=config.scenario.calibrate,
            seed=config.seed,
            xi_max=config.write.xi_max_radpm,
            reference=beam,
            reference_analyzer=reference.analyzer,
            scale_widths=config.ring.scale_widths,
            match_radius=config.scenario.match_radius_um,
        )

    @property
    def segment_lengths(self) -> Tuple[float, float, float]:
        """
        (L1, Lcp, L2) summing to the chip length: the configured lead-in or an even
        split around the coupler, and the rest of the chip as lead-out
        """
        if self.lead_in is None:
            lead_in = 0.5 * (self.length - self.coupling_length)
        else:
            lead_in = self.lead_in
        lead_out = self.length - self.coupling_length - lead_in
        if lead_out < 0:
            raise ContractError(
                "Scenario",
                f"lead-in {lead_in:.4g} m and coupling {self.coupling_length:.4g} m "
                f"exceed the chip length {self.length:.4g} m",
            )
        return lead_in, self.coupling_length, lead_out

    @property
    def lead_out(self) -> float:
        return self.segment_lengths[2]

    def with_input(self, label: str, jones: np.ndarray) -> "Scenario":
        values = dict(self.__dict__)
        values.update(input_label=label, input_jones=np.asarray(jones, dtype=complex))
        return Scenario(**values)


def _complex_columns(prefix: str, value: complex) -> Dict[str, float]:
    return {f"{prefix}_re": float(value.real), f"{prefix}_im": float(value.imag)}


def gamma_columns(gamma: GammaCoefficients) -> Dict[str, float]:
    columns: Dict[str, float] = {}
    names = ("gamma_x_pos", "gamma_x_neg", "gamma_y_pos", "gamma_y_neg")
    for name, value in zip(names, gamma.as_array()):
        columns.update(_complex_columns(name, value))
    for name, value in zip(("residue_x", "residue_y"), gamma.gaussian_residue):
        columns.update(_complex_columns(name, value))
    return columns


@dataclass
class SweepResult:
    """
    Ordered per-point metrics with the images and curves produced along the way
    """

    kind: str
    points: List[Dict[str, Any]] = field(default_factory=list)
    images: Dict[str, np.ndarray] = field(default_factory=dict)
    montage: Optional[np.ndarray] = None
    curves: Dict[str, DataFrame] = field(default_factory=dict)
    extras: Dict[str, Any] = field(default_factory=dict)
    manifest_hash: str = ""

    def metrics_frame(self) -> DataFrame:
        return DataFrame(self.points)

    def compute_hash(self, echo: Dict[str, Any]) -> str:
        """
        SHA-256 of the scenario echo and every numeric result, timestamps excluded
        """
        payload = {
            "kind": self.kind,
            "echo": echo,
            "points": self.points,
            "extras": jsonable(self.extras),
            "curves": {
                name: frame.to_dict(orient="list")
                for name, frame in sorted(self.curves.items())
            },
        }
        text = json.dumps(jsonable(payload), sort_keys=True, separators=(",", ":"))
        self.manifest_hash = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return self.manifest_hash


def jsonable(value):
    if isinstance(value, dict):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value