"""
Coupled-mode assembly and propagation of the six-mode directional coupler
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import expm

from vvchip.coupling.coupling_objects import (
    BASIS_SIZE,
    OAM,
    AmplitudeState,
    CouplingMatrix,
    GammaCoefficients,
    ModeBasis,
    SegmentPlan,
    same_waveguide,
)
from vvchip.exceptions.chip_exception import ContractError, ModelError
from vvchip.modes.mode_objects import ModeField
from vvchip.waveguide.waveguide_model import rotation_matrix, track_birefringence_field
from vvchip.waveguide.waveguide_objects import BirefringenceTensor, PermittivityProfile

logger = logging.getLogger(__name__)

EIGEN_CONDITION_LIMIT = 1e8
MAX_PHASE_STEP = 0.02
RAMP_SUBSTEPS = 32
INPUT_TOL = 1e-15

EpsTerm = np.ndarray
Generator = Union[CouplingMatrix, np.ndarray]


def _term_weight(bra: ModeField, ket_jones: np.ndarray, term: EpsTerm) -> np.ndarray:
    """
    Polarization factor bra.jones^H T ket_jones per pixel; scalar terms act as T = 1
    """
    if term.ndim == 2:
        return term * np.vdot(bra.jones, ket_jones)
    return np.einsum("i,yxij,j->yx", np.conj(bra.jones), term, ket_jones)


def coupling_overlap(
    bra: ModeField,
    ket: ModeField,
    eps_terms: Sequence[EpsTerm],
    beta_X: Optional[float] = None,
    N_X: float = 1.0,
    theta: float = 0.0,
) -> complex:
    """
    Overlap k0^2 / (2 beta_X N_X) * sum of the integrals of
    conj(E_bra) E_ket (jones_bra^H T R(theta) jones_ket) over the grid

    Parameters
    ----------
    bra, ket : ModeField
        Modes on the same grid
    eps_terms : sequence of ndarray
        Scalar permittivity maps of shape (ny, nx) or tensor fields of shape
        (ny, nx, 3, 3)
    beta_X : float, optional
        Propagation constant in the prefactor, rad/m; defaults to the bra's
    N_X : float
        Normalization of the bra mode
    theta : float
        Rotation applied to the ket polarization

    Returns
    -------
    complex
        Coupling coefficient in rad/m
    """
    bra.grid.check_same(ket.grid, "coupling_overlap")
    beta = bra.beta if beta_X is None else beta_X
    if beta <= 0 or N_X <= 0:
        raise ContractError("coupling_overlap", "beta_X and N_X must be positive")
    ket_jones = rotation_matrix(theta) @ ket.jones
    field_product = np.conj(bra.profile) * ket.profile
    total = 0j
    for term in eps_terms:
        if term.shape[:2] != bra.grid.shape:
            raise ContractError(
                "coupling_overlap",
                f"permittivity term {term.shape} does not match grid {bra.grid.shape}",
            )
        total += np.sum(field_product * _term_weight(bra, ket_jones, term))
    total *= bra.grid.pixel_area
    return complex(bra.k0 ** 2 / (2 * beta * N_X) * total)


def butt_coupling(
    bra: ModeField, ket: ModeField, beta_ket: Optional[float] = None, N_X: float = 1.0
) -> complex:
    """
    Non-orthogonality correction (beta_ket / (beta_bra N_X)) * integral of
    conj(E_bra) E_ket
    """
    bra.grid.check_same(ket.grid, "butt_coupling")
    beta = ket.beta if beta_ket is None else beta_ket
    overlap = bra.inner(ket) * np.vdot(bra.jones, ket.jones)
    return complex(beta / (bra.beta * N_X) * overlap)


def _with_gaussian_frame(basis: ModeBasis, theta: float) -> Tuple[ModeField, ...]:
    rotation = rotation_matrix(theta)
    modes = list(basis.modes)
    for index in range(2):
        modes[index] = modes[index].with_jones(rotation @ modes[index].jones)
    return tuple(modes)


def assemble_matrix(
    basis: ModeBasis,
    profile_a: PermittivityProfile,
    profile_b: PermittivityProfile,
    theta: float = 0.0,
    tensor_a: Optional[BirefringenceTensor] = None,
    tensor_b: Optional[BirefringenceTensor] = None,
    coupled: bool = True,
) -> CouplingMatrix:
    """
    Build the 6x6 generator K for the basis [G_x', G_y', x_l, x_-l, y_l, y_-l]

    Diagonal entries are beta_X - beta_bar plus the self-coupling from the other
    waveguide's isotropic change and the own waveguide's birefringence. Entries
    between the waveguides average the two one-sided overlaps so K is Hermitian.

    Parameters
    ----------
    basis : ModeBasis
    profile_a : PermittivityProfile
        Single-mode waveguide (a)
    profile_b : PermittivityProfile
        Ring waveguide (b)
    theta : float
        Rotation of the Gaussian polarization axes x', y' from the grid axes
    tensor_a, tensor_b : BirefringenceTensor, optional
        Override the tensors carried by the profiles
    coupled : bool
        When False, the inter-waveguide blocks are zero

    Returns
    -------
    CouplingMatrix
    """
    profile_a.grid.check_same(basis.grid, "assemble_matrix")
    profile_b.grid.check_same(basis.grid, "assemble_matrix")
    if tensor_a is not None:
        profile_a = profile_a.with_tensor(tensor_a)
    if tensor_b is not None:
        profile_b = profile_b.with_tensor(tensor_b)
    field_a = track_birefringence_field(profile_a)
    field_b = track_birefringence_field(profile_b)
    terms = {
        "a": [profile_b.eps_iso, field_a],
        "b": [profile_a.eps_iso, field_b],
    }
    inter = {
        "a": [profile_a.eps_iso, field_a],
        "b": [profile_b.eps_iso, field_b],
    }
    modes = _with_gaussian_frame(basis, theta)
    beta_bar = basis.beta_bar
    values = np.zeros((BASIS_SIZE, BASIS_SIZE), dtype=complex)
    provenance: Dict[Tuple[int, int], str] = {}

    def side(index: int) -> str:
        return "a" if index < 2 else "b"

    for row in range(BASIS_SIZE):
        for column in range(BASIS_SIZE):
            bra, ket = modes[row], modes[column]
            if same_waveguide(row, column):
                own = side(row)
                other = "b" if own == "a" else "a"
                value = coupling_overlap(bra, ket, terms[own])
                origin = f"eps_iso({other}) + d_eps({own})"
                if row == column:
                    value = bra.beta - beta_bar + value.real
                    origin = f"beta - beta_bar + {origin}"
                values[row, column] = value
                provenance[(row, column)] = origin
            elif coupled:
                forward = coupling_overlap(bra, ket, inter[side(column)])
                backward = coupling_overlap(ket, bra, inter[side(row)])
                values[row, column] = 0.5 * (forward + np.conj(backward))
                provenance[(row, column)] = (
                    f"sym[eps_iso({side(column)}) + d_eps({side(column)}) | "
                    f"eps_iso({side(row)}) + d_eps({side(row)})]"
                )
    matrix = CouplingMatrix(values, provenance)
    if not matrix.is_hermitian(1e-9):
        raise ModelError("assembled coupling matrix is not Hermitian")
    logger.debug(
        "assembled K: |K|=%.4e rad/m, beta_bar=%.6e rad/m", matrix.scale, beta_bar
    )
    return matrix


def mass_matrix(basis: ModeBasis, theta: float = 0.0) -> np.ndarray:
    """
    Overlap matrix C between the two waveguides' modes; zero within a waveguide
    """
    modes = _with_gaussian_frame(basis, theta)
    values = np.zeros((BASIS_SIZE, BASIS_SIZE), dtype=complex)
    for row in range(BASIS_SIZE):
        for column in range(BASIS_SIZE):
            if not same_waveguide(row, column):
                values[row, column] = butt_coupling(modes[row], modes[column])
    return values


def butt_ratio(K: CouplingMatrix, mass: np.ndarray, basis: ModeBasis) -> float:
    """
    Size of the overlap correction |C| max|kappa| against the largest
    self-coupling shift
    """
    inter = np.max(np.abs(K.inter_block()))
    betas = np.array([mode.beta for mode in basis.modes])
    shifts = np.abs(np.diag(K.values).real - (betas - basis.beta_bar))
    reference = float(np.max(shifts))
    if reference == 0:
        return 0.0
    return float(np.max(np.abs(mass)) * inter / reference)


def _as_array(K: Generator) -> np.ndarray:
    return K.values if isinstance(K, CouplingMatrix) else np.asarray(K, dtype=complex)


def _is_hermitian(values: np.ndarray) -> bool:
    scale = max(float(np.max(np.abs(values))), np.finfo(float).tiny)
    return bool(np.max(np.abs(values - values.conj().T)) <= 1e-12 * scale)


def propagator(K: Generator, dz: float) -> np.ndarray:
    """
    exp(-j K dz) by eigendecomposition, falling back to scipy's expm
    """
    values = _as_array(K)
    if _is_hermitian(values):
        eigenvalues, vectors = np.linalg.eigh(0.5 * (values + values.conj().T))
        return (vectors * np.exp(-1j * eigenvalues * dz)) @ vectors.conj().T
    eigenvalues, vectors = np.linalg.eig(values)
    if np.linalg.cond(vectors) < EIGEN_CONDITION_LIMIT:
        return (vectors * np.exp(-1j * eigenvalues * dz)) @ np.linalg.inv(vectors)
    logger.warning("ill-conditioned eigenvectors, using scipy expm")
    return expm(-1j * values * dz)


def _rk4(
    values: np.ndarray, amplitudes: np.ndarray, dz: float, step: float
) -> np.ndarray:
    norm = np.linalg.norm(values, 2)
    steps = max(1, int(math.ceil(norm * abs(dz) / step))) if norm > 0 else 1
    h = dz / steps

    def derivative(a):
        return -1j * (values @ a)

    a = amplitudes.astype(complex)
    for _ in range(steps):
        k1 = derivative(a)
        k2 = derivative(a + 0.5 * h * k1)
        k3 = derivative(a + 0.5 * h * k2)
        k4 = derivative(a + h * k3)
        a = a + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return a


def evolve(
    state: AmplitudeState,
    K: Generator,
    dz: float,
    method: str = "expm",
    max_phase_step: float = MAX_PHASE_STEP,
) -> AmplitudeState:
    """
    Advance the amplitudes over dz (m) under dA/dz = -j K A

    ``method`` is "expm" (exact for constant K) or "rk4" with steps no larger than
    max_phase_step / |K|.
    """
    values = _as_array(K)
    if method == "expm":
        amplitudes = propagator(values, dz) @ state.amplitudes
    elif method == "rk4":
        amplitudes = _rk4(values, state.amplitudes, dz, max_phase_step)
    else:
        raise ContractError("evolve", f"unknown method {method}")
    return AmplitudeState(amplitudes, state.z + dz)


def ramp_weight(z: float, length: float, ramp: float) -> float:
    """
    Raised-cosine envelope of the inter-waveguide coupling along the coupler
    """
    if ramp <= 0:
        return 1.0
    distance = min(z, length - z)
    if distance >= ramp:
        return 1.0
    return 0.5 * (1 - math.cos(math.pi * max(distance, 0.0) / ramp))


def _generator(values: np.ndarray, mass: Optional[np.ndarray]) -> np.ndarray:
    if mass is None:
        return values
    return np.linalg.solve(np.eye(BASIS_SIZE) + mass, values)


def segment_transfer(
    K: CouplingMatrix,
    length: float,
    ramp: float = 0.0,
    mass: Optional[np.ndarray] = None,
    method: str = "expm",
) -> np.ndarray:
    if length == 0:
        return np.eye(BASIS_SIZE, dtype=complex)
    if ramp <= 0:
        return _segment_step(_generator(K.values, mass), length, method)
    uncoupled = K.values - K.inter_block()
    inter = K.inter_block()
    transfer = np.eye(BASIS_SIZE, dtype=complex)
    h = ramp / RAMP_SUBSTEPS
    edges = [(i + 0.5) * h for i in range(RAMP_SUBSTEPS)]
    pieces = [(z, h) for z in edges]
    middle = length - 2 * ramp
    if middle > 0:
        pieces.append((ramp + 0.5 * middle, middle))
    pieces += [(length - ramp + z, h) for z in edges]
    for z, dz in pieces:
        weight = ramp_weight(z, length, ramp)
        step = _segment_step(_generator(uncoupled + weight * inter, mass), dz, method)
        transfer = step @ transfer
    return transfer


def _segment_step(values: np.ndarray, dz: float, method: str) -> np.ndarray:
    if method == "expm":
        return propagator(values, dz)
    if method == "rk4":
        return np.column_stack(
            [_rk4(values, column, dz, MAX_PHASE_STEP) for column in np.eye(BASIS_SIZE)]
        )
    raise ContractError("evolve", f"unknown method {method}")


def transfer_matrix(plan: SegmentPlan, method: str = "expm") -> np.ndarray:
    """
    Whole-chip transfer M2 Mcp M1 acting on column amplitude vectors
    """
    first = segment_transfer(plan.K1, plan.L1, method=method)
    coupler = segment_transfer(plan.Kcp, plan.Lcp, plan.ramp, plan.mass, method)
    last = segment_transfer(plan.K2, plan.L2, method=method)
    return last @ coupler @ first


def propagate_chip(
    input_state: AmplitudeState, plan: SegmentPlan, method: str = "expm"
) -> GammaCoefficients:
    """
    Vortex coefficients at the chip output for a Gaussian-only input
    """
    amplitudes = input_state.amplitudes
    limit = INPUT_TOL * max(1.0, np.linalg.norm(amplitudes))
    if np.any(np.abs(amplitudes[OAM]) > limit):
        raise ContractError("propagate_chip", "input must not excite the vortex modes")
    output = transfer_matrix(plan, method) @ amplitudes
    return GammaCoefficients.from_state(output)


def vector_mode_basis(ell: int = 1) -> Dict[str, np.ndarray]:
    """
    Vector modes as unit vectors over [x_l, x_-l, y_l, y_-l]

    R = cos(l phi) x + sin(l phi) y, A = -sin(l phi) x + cos(l phi) y,
    He = cos(l phi) x - sin(l phi) y, Ho = sin(l phi) x + cos(l phi) y
    """
    if ell == 0:
        raise ContractError("vector_mode_basis", "ell must be non-zero")
    half = 0.5
    return {
        "R": half * np.array([1, 1, -1j, 1j]),
        "A": half * np.array([1j, -1j, 1, 1]),
        "He": half * np.array([1, 1, 1j, -1j]),
        "Ho": half * np.array([-1j, 1j, 1, 1]),
    }


# input polarizations with a known target relation between gamma coefficients
TARGET_RELATIONS = ("H", "RCP", "LCP")


def relation_residual(gamma: GammaCoefficients, kind: str) -> float:
    """
    Deviation of the output from the ideal vector beam for an H, RCP or LCP input
    """
    gx, gx_neg, gy, gy_neg = gamma.as_array()
    if kind == "H":
        lhs = np.array([gx_neg, gy_neg, gy])
        rhs = np.array([gx, -gy, -1j * gx])
    elif kind == "RCP":
        lhs = np.array([gx_neg, gy_neg, gy])
        rhs = np.array([1j * gx, 1j * gy, gx])
    elif kind == "LCP":
        lhs = np.array([gx_neg, gy_neg, gy])
        rhs = np.array([-1j * gx, -1j * gy, -gx])
    else:
        raise ContractError("relation_residual", f"no target relation for {kind}")
    scale = np.linalg.norm(gamma.as_array())
    if scale == 0:
        raise ContractError("relation_residual", "all coefficients are zero")
    return float(np.linalg.norm(lhs - rhs) / scale)


@dataclass
class Calibration:
    """
    Outcome of calibrating a device: scale of the ring birefringence, detunings
    added to the Gaussian diagonal entries (rad/m) and the relative phase (rad)
    the y'/x' branches gather over the chip
    """

    tensor_scale: float
    detunings: Tuple[float, float]
    matched_eigenvalues: Tuple[float, float]
    splitting: float
    phase: float
    matrix: CouplingMatrix


REFERENCE_MODES = ("R", "Ho")
PHASE_TRIM_STEPS = 3


def matched_eigenmode(
    K: CouplingMatrix, gaussian_index: int, ell: int = 1
) -> Tuple[int, np.ndarray, np.ndarray]:
    """
    Ring eigenmode that a Gaussian polarization is matched to

    Eigenvectors are scored by their coupling to the Gaussian mode times their
    overlap with the reference vector mode (R for x', Ho for y').
    """
    block = K.values[OAM, OAM]
    eigenvalues, vectors = np.linalg.eigh(0.5 * (block + block.conj().T))
    coupling = np.abs(vectors.conj().T @ K.coupling_column(gaussian_index))
    reference = vector_mode_basis(ell)[REFERENCE_MODES[gaussian_index]]
    score = coupling * np.abs(vectors.conj().T @ reference)
    if np.max(score) <= 1e-12 * max(np.max(coupling), np.finfo(float).tiny):
        score = coupling
    return int(np.argmax(score)), eigenvalues, coupling


def vector_splitting(
    K: CouplingMatrix, gaussian_index: int, ell: int = 1
) -> Tuple[float, float]:
    """
    Splitting between the matched eigenmode and the strongest other coupled
    eigenmode, and the matched coupling strength
    """
    index, eigenvalues, coupling = matched_eigenmode(K, gaussian_index, ell)
    scale = max(np.max(np.abs(eigenvalues)), np.finfo(float).tiny)
    splitting = 0.0
    best = 0.0
    for other, value in enumerate(eigenvalues):
        if other == index or abs(value - eigenvalues[index]) <= 1e-9 * scale:
            continue
        if coupling[other] > best and coupling[other] > 1e-6 * coupling[index]:
            best = coupling[other]
            splitting = float(eigenvalues[index] - value)
    return splitting, float(coupling[index])


def phase_trim(
    splitting: float, length: float, target_phase: float = math.pi / 2
) -> float:
    """
    Factor closest to one that scales the x'/y' splitting so the two branches
    gather a relative phase of target_phase (mod 2 pi) over ``length``
    """
    if splitting == 0 or length <= 0:
        raise ContractError(
            "phase_trim", "needs a non-zero x'/y' splitting and a positive length"
        )
    phase = splitting * length
    turns = round((phase - target_phase) / (2 * math.pi))
    wanted = target_phase + 2 * math.pi * turns
    if wanted == 0 or math.copysign(1.0, wanted) != math.copysign(1.0, phase):
        wanted += math.copysign(2 * math.pi, phase)
    return wanted / phase


def _match_gaussians(
    K: CouplingMatrix, ell: int
) -> Tuple[CouplingMatrix, Tuple[float, float], Tuple[float, float]]:
    matched = []
    detunings = []
    for gaussian_index in range(2):
        index, eigenvalues, _ = matched_eigenmode(K, gaussian_index, ell)
        target = float(eigenvalues[index])
        detunings.append(target - float(K.values[gaussian_index, gaussian_index].real))
        matched.append(target)
        K = K.with_diagonal(gaussian_index, target, "phase matched")
    return K, (detunings[0], detunings[1]), (matched[0], matched[1])


def calibrate_device(
    build: Callable[[float], CouplingMatrix],
    chip_length: float,
    selectivity: float = 30.0,
    target_phase: Optional[float] = math.pi / 2,
    ell: int = 1,
) -> Calibration:
    """
    Scale the ring birefringence, phase-match each Gaussian polarization to its
    vector mode and trim the birefringence to the target relative phase

    The y'/x' phase is gathered over every segment alike (lead-in in the Gaussian,
    lead-out in the matched ring modes), so it depends on the splitting and the
    chip length only, not on where the coupler sits.

    Parameters
    ----------
    build : callable
        Returns the coupling-segment K for a given ring-tensor scale factor
    chip_length : float
        L1 + Lcp + L2 (m)
    selectivity : float
        Wanted ratio of the vector-mode splitting to the matched coupling; 0 keeps
        the tensor as given
    target_phase : float, optional
        Relative phase between the y' and x' branches at the output (rad); None
        skips the trim

    Returns
    -------
    Calibration
    """
    scale = 1.0
    K = build(scale)
    if selectivity > 0:
        splitting, kappa = vector_splitting(K, 0, ell)
        if splitting == 0 or kappa == 0:
            logger.warning(
                "no vector-mode splitting in the ring, tensor scale kept at 1"
            )
        else:
            scale = selectivity * kappa / abs(splitting)
            K = build(scale)
            logger.info("ring birefringence scaled by %.4g", scale)
    matched_K, detunings, matched = _match_gaussians(K, ell)
    splitting = matched[1] - matched[0]
    degenerate = abs(splitting) <= 1e-12 * max(matched_K.scale, np.finfo(float).tiny)
    if target_phase is not None and degenerate:
        logger.warning("x'/y' branches are degenerate, relative phase not trimmed")
    elif target_phase is not None:
        # the splitting is close to linear in the scale; a few passes absorb the rest
        for _ in range(PHASE_TRIM_STEPS):
            factor = phase_trim(splitting, chip_length, target_phase)
            if abs(factor - 1.0) < 1e-12:
                break
            scale *= factor
            matched_K, detunings, matched = _match_gaussians(build(scale), ell)
            splitting = matched[1] - matched[0]
    phase = float(np.mod(splitting * chip_length, 2 * math.pi))
    logger.info(
        "calibrated: tensor scale %.4g, detunings %.4e, %.4e rad/m, phase %.4f rad",
        scale,
        detunings[0],
        detunings[1],
        phase,
    )
    return Calibration(
        tensor_scale=scale,
        detunings=detunings,
        matched_eigenvalues=matched,
        splitting=splitting,
        phase=phase,
        matrix=matched_K,
    )


def two_mode_exchange(kappa: float, z: float) -> float:
    """
    Power transferred between two phase-matched modes, sin^2(kappa z)
    """
    return math.sin(kappa * z) ** 2


def detuned_exchange(kappa: float, delta: float, z: float) -> float:
    """
    Peak-limited transfer kappa^2 / (kappa^2 + (delta/2)^2) sin^2(s z)
    """
    s = math.sqrt(kappa ** 2 + (delta / 2) ** 2)
    if s == 0:
        return 0.0
    return kappa ** 2 / s ** 2 * math.sin(s * z) ** 2
