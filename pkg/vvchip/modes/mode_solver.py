"""
Scalar weak-guidance mode solver on the finite-difference grid
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.sparse import csr_matrix, diags, identity, kron
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.special import jn_zeros, jv, kv

from vvchip.exceptions.chip_exception import (
    ContractError,
    CutoffError,
    NoConvergenceError,
    NoCrossingError,
)
from vvchip.modes.mode_objects import DispersionCurve, ModeField
from vvchip.waveguide.waveguide_model import gaussian_track_profile, ring_profile
from vvchip.waveguide.waveguide_objects import (
    GridSpec,
    PermittivityProfile,
    RingSpec,
    TrackSpec,
)

logger = logging.getLogger(__name__)

UM_PER_M = 1e6
DEGENERACY_TOL = 1e-5
PAIR_DEGENERACY_TOL = 1e-4
MAX_AZIMUTHAL_ORDER = 8
PHASE_MATCH_TOL_UM = 0.01


def helmholtz_operator(profile: PermittivityProfile, k0: float) -> csr_matrix:
    """
    Five-point discretization of laplacian + k0^2 eps with zero boundary, in um^-2
    """
    grid = profile.grid
    k0_um = k0 / UM_PER_M
    second_x = diags(
        [1.0, -2.0, 1.0], [-1, 0, 1], shape=(grid.nx, grid.nx)
    ) / grid.dx ** 2
    second_y = diags(
        [1.0, -2.0, 1.0], [-1, 0, 1], shape=(grid.ny, grid.ny)
    ) / grid.dy ** 2
    laplacian = kron(identity(grid.ny), second_x) + kron(second_y, identity(grid.nx))
    potential = diags(k0_um ** 2 * profile.eps_total.ravel())
    return csr_matrix(laplacian + potential)


def rayleigh_beta(operator: csr_matrix, field: np.ndarray) -> float:
    """
    Propagation constant (rad/m) of a trial field from the Rayleigh quotient
    """
    vector = field.ravel()
    quotient = np.vdot(vector, operator @ vector).real / np.vdot(vector, vector).real
    if quotient <= 0:
        return 0.0
    return float(np.sqrt(quotient) * UM_PER_M)


def _normalize(grid: GridSpec, field: np.ndarray) -> np.ndarray:
    power = np.sum(np.abs(field) ** 2) * grid.pixel_area
    return field / np.sqrt(power)


def _profile_centroid(profile: PermittivityProfile) -> Tuple[float, float]:
    xx, yy = profile.grid.mesh()
    weight = profile.eps_iso
    total = weight.sum()
    if total <= 0:
        return profile.axis_center
    return float((xx * weight).sum() / total), float((yy * weight).sum() / total)


def _order_of(grid: GridSpec, field: np.ndarray, center: Tuple[float, float]) -> int:
    _, phi = grid.polar(center)
    powers = [
        np.abs(np.sum(field * np.exp(-1j * order * phi))) ** 2
        for order in range(MAX_AZIMUTHAL_ORDER + 1)
    ]
    return int(np.argmax(powers))


def azimuthal_order(mode: ModeField, center: Tuple[float, float]) -> int:
    """
    Dominant azimuthal harmonic of a mode about a center
    """
    return _order_of(mode.grid, mode.profile, center)


def _gauge_pair(
    grid: GridSpec,
    first: np.ndarray,
    second: np.ndarray,
    order: int,
    center: Tuple[float, float],
) -> Tuple[np.ndarray, np.ndarray]:
    # rotate within the degenerate subspace so the even member follows cos(l phi)
    _, phi = grid.polar(center)
    cos_part = np.cos(order * phi)
    sin_part = np.sin(order * phi)
    a = np.sum(first * cos_part)
    b = np.sum(second * cos_part)
    length = np.hypot(a, b)
    if length == 0:
        return first, second
    even = (a * first + b * second) / length
    odd = (-b * first + a * second) / length
    if np.sum(odd * sin_part) < 0:
        odd = -odd
    return even, odd


def solve_modes(
    profile: PermittivityProfile,
    k0: float,
    count: int,
    tol: float = 1e-10,
    maxiter: int = 10000,
    residual_tol: float = 1e-8,
    seed: int = 0,
    min_feature_um: Optional[float] = None,
) -> List[ModeField]:
    """
    Guided modes of a profile, largest propagation constant first

    Parameters
    ----------
    profile : PermittivityProfile
    k0 : float
        Vacuum wavenumber in rad/m
    count : int
        Number of modes to return
    tol : float
        Eigen-iteration tolerance
    maxiter : int
        Eigen-iteration cap
    residual_tol : float
        Largest accepted relative eigen-residual
    seed : int
        Seed of the start vector
    min_feature_um : float, optional
        Smallest track width; the grid must resolve it with 8 pixels

    Returns
    -------
    list of ModeField
        Normalized, orthogonal modes; degenerate pairs are ordered even then odd

    See Also
    --------
    make_oam_pair : Combine a degenerate pair into vortex modes
    """
    if count < 1:
        raise ContractError("solve_modes", f"count must be at least 1, got {count}")
    grid = profile.grid
    if min_feature_um is not None and 2 * min_feature_um < 8 * max(grid.dx, grid.dy):
        raise ContractError(
            "solve_modes",
            f"grid spacing {max(grid.dx, grid.dy)} um does not resolve a "
            f"{2 * min_feature_um} um track with 8 pixels",
        )
    if profile.max_delta_eps <= 0:
        raise CutoffError(profile.n_s, profile.n_s)
    operator = helmholtz_operator(profile, k0)
    k0_um = k0 / UM_PER_M
    sigma = k0_um ** 2 * float(profile.eps_total.max())
    size = operator.shape[0]
    wanted = min(count + 1, size - 2)
    start = np.random.default_rng(seed).standard_normal(size)
    try:
        values, vectors = eigsh(
            operator,
            k=wanted,
            sigma=sigma,
            which="LM",
            v0=start,
            tol=tol,
            maxiter=maxiter,
        )
    except ArpackNoConvergence as err:
        residual = np.inf
        if len(err.eigenvalues):
            converged = err.eigenvectors
            errors = operator @ converged - converged * err.eigenvalues
            residual = float(
                np.max(np.linalg.norm(errors, axis=0) / np.abs(err.eigenvalues))
            )
        raise NoConvergenceError(residual, maxiter) from err
    ordering = np.argsort(values)[::-1]
    values = values[ordering]
    vectors = vectors[:, ordering]
    cutoff = k0_um ** 2 * profile.eps_s
    guided = values > cutoff
    if not np.any(guided):
        raise CutoffError(float(np.sqrt(values.max()) / k0_um), profile.n_s)
    values = values[guided]
    vectors = vectors[:, guided]

    for index in range(len(values)):
        vector = vectors[:, index]
        residual = np.linalg.norm(operator @ vector - values[index] * vector) / abs(
            values[index] * np.linalg.norm(vector)
        )
        n_eff = np.sqrt(values[index]) / k0_um
        logger.debug("mode %d: n_eff %.8f residual %.2e", index, n_eff, residual)
        if residual > residual_tol:
            raise NoConvergenceError(float(residual), maxiter)

    center = _profile_centroid(profile)
    fields = [vectors[:, index].reshape(grid.shape) for index in range(len(values))]
    orders = [_order_of(grid, field, center) for field in fields]
    parities = [""] * len(fields)
    index = 0
    while index < len(fields) - 1:
        gap = abs(values[index] - values[index + 1]) / (2 * values[index])
        if gap < DEGENERACY_TOL and orders[index] == orders[index + 1] > 0:
            fields[index], fields[index + 1] = _gauge_pair(
                grid, fields[index], fields[index + 1], orders[index], center
            )
            parities[index], parities[index + 1] = "even", "odd"
            index += 2
        else:
            index += 1

    modes = []
    for index in range(min(count, len(fields))):
        modes.append(
            ModeField(
                grid=grid,
                beta=float(np.sqrt(values[index]) * UM_PER_M),
                k0=k0,
                profile=_normalize(grid, fields[index].astype(complex)),
                oam=0,
                parity=parities[index],
            )
        )
    logger.info(
        "solved %d guided modes, n_eff %s",
        len(modes),
        ", ".join(f"{mode.n_eff:.6f}" for mode in modes),
    )
    return modes


def make_oam_pair(
    even: ModeField, odd: ModeField, ell: int
) -> Tuple[ModeField, ModeField]:
    """
    Vortex modes (even + j odd)/sqrt(2) and (even - j odd)/sqrt(2) with charges
    +ell and -ell
    """
    even.grid.check_same(odd.grid, "make_oam_pair")
    mismatch = abs(even.beta - odd.beta) / even.beta
    if mismatch >= PAIR_DEGENERACY_TOL:
        raise ContractError(
            "make_oam_pair",
            f"modes are not degenerate (relative beta gap {mismatch:.3e})",
        )
    overlap = abs(even.inner(odd))
    if overlap > 1e-6:
        raise ContractError(
            "make_oam_pair", f"modes are not orthogonal (overlap {overlap:.3e})"
        )
    if ell == 0:
        raise ContractError("make_oam_pair", "vortex order must be nonzero")
    beta = 0.5 * (even.beta + odd.beta)
    positive = replace(
        even,
        beta=beta,
        profile=(even.profile + 1j * odd.profile) / np.sqrt(2),
        oam=abs(ell),
        parity="",
    )
    negative = replace(
        even,
        beta=beta,
        profile=(even.profile - 1j * odd.profile) / np.sqrt(2),
        oam=-abs(ell),
        parity="",
    )
    return positive, negative


def split_oam_pair(
    positive: ModeField, negative: ModeField
) -> Tuple[ModeField, ModeField]:
    """
    Inverse of make_oam_pair
    """
    even = replace(
        positive,
        profile=(positive.profile + negative.profile) / np.sqrt(2),
        oam=0,
        parity="even",
    )
    odd = replace(
        positive,
        profile=(positive.profile - negative.profile) / (1j * np.sqrt(2)),
        oam=0,
        parity="odd",
    )
    return even, odd


def find_order_pair(
    modes: Sequence[ModeField], ell: int, center: Tuple[float, float]
) -> Tuple[ModeField, ...]:
    """
    First mode of azimuthal order ell (ell=0), or the first two consecutive modes of
    order ell whose propagation constants agree to PAIR_DEGENERACY_TOL, rotated into
    an even/odd pair
    """
    orders = [azimuthal_order(mode, center) for mode in modes]
    for index, mode in enumerate(modes):
        if orders[index] != ell:
            continue
        if ell == 0:
            return (mode,)
        if index + 1 == len(modes) or orders[index + 1] != ell:
            continue
        partner = modes[index + 1]
        if abs(mode.beta - partner.beta) / mode.beta >= PAIR_DEGENERACY_TOL:
            continue
        grid = mode.grid
        even, odd = _gauge_pair(
            grid, mode.profile.real, partner.profile.real, ell, center
        )
        return (
            replace(mode, profile=_normalize(grid, even + 0j), parity="even"),
            replace(partner, profile=_normalize(grid, odd + 0j), parity="odd"),
        )
    raise ContractError("find_order_pair", f"no mode pair of azimuthal order {ell}")


def effective_index(
    profile: PermittivityProfile,
    k0: float,
    mode_selector: Union[int, str] = 0,
    **solver_options,
) -> float:
    """
    Effective index of a selected mode. ``mode_selector`` is a position in the
    solver output or an azimuthal order label such as "l1".
    """
    if isinstance(mode_selector, int):
        modes = solve_modes(profile, k0, mode_selector + 1, **solver_options)
        if mode_selector >= len(modes):
            raise CutoffError(modes[-1].n_eff, profile.n_s)
        return modes[mode_selector].n_eff
    ell = int(str(mode_selector).lstrip("l"))
    modes = solve_modes(profile, k0, 2 * ell + 4, **solver_options)
    try:
        selected = find_order_pair(modes, ell, _profile_centroid(profile))
    except ContractError as error:
        # order ell is not among the guided modes
        raise CutoffError(profile.n_s, profile.n_s) from error
    return float(np.mean([mode.n_eff for mode in selected]))


def analytic_gaussian_mode(
    profile: PermittivityProfile, track: TrackSpec, k0: float
) -> ModeField:
    """
    Variational Gaussian mode of a single track: the waist scale maximizes the
    Rayleigh quotient of the finite-difference operator
    """
    grid = profile.grid
    operator = helmholtz_operator(profile, k0)
    xx, yy = grid.mesh()
    cx, cy = track.center

    def trial(scale: float) -> np.ndarray:
        wx, wy = scale * track.widths[0], scale * track.widths[1]
        return np.exp(-0.5 * (((xx - cx) / wx) ** 2 + ((yy - cy) / wy) ** 2))

    best = minimize_scalar(
        lambda scale: -rayleigh_beta(operator, trial(scale)),
        bounds=(0.3, 6.0),
        method="bounded",
    )
    field = trial(best.x)
    beta = rayleigh_beta(operator, field)
    if beta <= k0 * profile.n_s:
        raise CutoffError(beta / k0, profile.n_s)
    return ModeField(
        grid=grid,
        beta=beta,
        k0=k0,
        profile=_normalize(grid, field.astype(complex)),
    )


def analytic_ring_modes(
    profile: PermittivityProfile, ring: RingSpec, ell: int, k0: float
) -> Tuple[ModeField, ...]:
    """
    Variational ring modes: a Gaussian annulus at the ring radius times cos/sin of
    ell phi (a single mode for ell=0). The annulus width maximizes the Rayleigh
    quotient of the vortex field.
    """
    grid = profile.grid
    operator = helmholtz_operator(profile, k0)
    radius, phi = grid.polar(ring.center)

    def annulus(width: float) -> np.ndarray:
        return np.exp(-0.5 * ((radius - ring.radius) / width) ** 2)

    def vortex(width: float) -> np.ndarray:
        return annulus(width) * np.exp(1j * ell * phi)

    best = minimize_scalar(
        lambda width: -rayleigh_beta(operator, vortex(width)),
        bounds=(0.2 * ring.track.widths[0], 4.0 * ring.track.widths[0]),
        method="bounded",
    )
    radial = annulus(best.x)
    beta = rayleigh_beta(operator, vortex(best.x))
    if beta <= k0 * profile.n_s:
        raise CutoffError(beta / k0, profile.n_s)
    if ell == 0:
        radial_profile = _normalize(grid, radial + 0j)
        return (ModeField(grid=grid, beta=beta, k0=k0, profile=radial_profile),)
    even = ModeField(
        grid=grid,
        beta=beta,
        k0=k0,
        profile=_normalize(grid, radial * np.cos(ell * phi) + 0j),
        parity="even",
    )
    odd = ModeField(
        grid=grid,
        beta=beta,
        k0=k0,
        profile=_normalize(grid, radial * np.sin(ell * phi) + 0j),
        parity="odd",
    )
    return even, odd


def lp_mode_neff(
    radius_um: float,
    delta_n: float,
    n_s: float,
    wavelength_um: float,
    ell: int = 0,
) -> float:
    """
    Effective index of the fundamental LP(ell, 1) mode of a step-index core from the
    Bessel-function matching condition
    """
    k0 = 2 * np.pi / wavelength_um
    n_core = n_s + delta_n
    v_number = k0 * radius_um * np.sqrt(n_core ** 2 - n_s ** 2)
    lower = jn_zeros(ell - 1, 1)[0] if ell > 0 else 0.0
    if v_number <= lower:
        raise CutoffError(n_s, n_s)
    upper = min(v_number, jn_zeros(ell, 1)[0]) * (1 - 1e-12)
    lower = max(lower, 1e-9 * v_number) * (1 + 1e-12)

    def mismatch(u: float) -> float:
        w = np.sqrt(v_number ** 2 - u ** 2)
        return u * jv(ell + 1, u) / jv(ell, u) - w * kv(ell + 1, w) / kv(ell, w)

    u_root = brentq(mismatch, lower, upper, xtol=1e-14, rtol=1e-14)
    return float(np.sqrt(n_core ** 2 - (u_root / (k0 * radius_um)) ** 2))


@dataclass
class PhaseMatchResult:
    radius_um: float
    order: int
    curve: DispersionCurve


def ring_grid(ring: RingSpec, step: float) -> GridSpec:
    half = ring.radius + 2 * max(ring.track.widths) + 3.0
    return GridSpec.centered(half, half, step)


def ring_at(template: RingSpec, radius: float, scale_widths: bool = True) -> RingSpec:
    """
    Ring of a size scan: self-similar when ``scale_widths``, otherwise the template
    tracks on a circle of the new radius
    """
    if scale_widths:
        return template.scaled_to(radius)
    return template.with_radius(radius)


def ring_order_neff(
    ring: RingSpec,
    ell: int,
    k0: float,
    n_s: float,
    step: float,
    model: str = "solved",
) -> float:
    """
    Effective index of the order-ell ring mode for one ring geometry; a mode below
    cutoff reports the substrate index
    """
    centered = RingSpec(
        radius=ring.radius,
        track=ring.track,
        n_tracks=ring.n_tracks,
        center_scan=ring.center_scan,
    )
    profile = ring_profile(ring_grid(centered, step), centered, n_s=n_s)
    try:
        if model == "analytic":
            return analytic_ring_modes(profile, centered, ell, k0)[0].n_eff
        return effective_index(profile, k0, f"l{ell}")
    except CutoffError:
        logger.debug("order %d is cut off at R=%.4f um", ell, ring.radius)
        return n_s


def single_neff(
    single: PermittivityProfile, k0: float, model: str, track: Optional[TrackSpec]
) -> float:
    if model == "analytic" and track is not None:
        return analytic_gaussian_mode(single, track, k0).n_eff
    return solve_modes(single, k0, 1)[0].n_eff


def dispersion_scan(
    single: PermittivityProfile,
    ring_template: RingSpec,
    radii: Sequence[float],
    k0: float,
    orders: Sequence[int] = (1, 2),
    model: str = "solved",
    workers: int = 1,
    step: Optional[float] = None,
    single_track: Optional[TrackSpec] = None,
    scale_widths: bool = True,
) -> DispersionCurve:
    """
    Ring mode effective indices over a list of radii, evaluated concurrently
    """
    step = step or single.grid.dx
    n_s = single.n_s
    jobs = [(radius, ell) for radius in radii for ell in orders]

    def evaluate(job):
        radius, ell = job
        ring = ring_at(ring_template, radius, scale_widths)
        return ring_order_neff(ring, ell, k0, n_s, step, model)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        values = list(executor.map(evaluate, jobs))
    curves = {ell: [] for ell in orders}
    for (_, ell), value in zip(jobs, values):
        curves[ell].append(value)
    return DispersionCurve(
        radii=[float(radius) for radius in radii],
        n_eff=curves,
        n_eff_single=single_neff(single, k0, model, single_track),
    )


def bisect_radius(
    target_n_eff: float,
    ring_template: RingSpec,
    order: int,
    low: float,
    high: float,
    k0: float,
    n_s: float,
    step: float,
    model: str = "solved",
    scale_widths: bool = True,
) -> float:
    """
    Ring radius whose order-ell mode matches a target effective index, to 0.01 um
    """

    def mismatch(radius: float) -> float:
        ring = ring_at(ring_template, radius, scale_widths)
        return ring_order_neff(ring, order, k0, n_s, step, model) - target_n_eff

    low_value = mismatch(low)
    high_value = mismatch(high)
    if np.sign(low_value) == np.sign(high_value):
        raise NoCrossingError(order, low, high)
    while high - low > PHASE_MATCH_TOL_UM:
        middle = 0.5 * (low + high)
        middle_value = mismatch(middle)
        logger.debug("bisection R=%.4f um mismatch %.3e", middle, middle_value)
        if np.sign(middle_value) == np.sign(low_value):
            low, low_value = middle, middle_value
        else:
            high, high_value = middle, middle_value
    return 0.5 * (low + high)


def match_single_peak(
    grid: GridSpec,
    single_track: TrackSpec,
    ring: RingSpec,
    order: int,
    k0: float,
    n_s: float,
    model: str = "solved",
    bracket: Tuple[float, float] = (0.25, 4.0),
) -> TrackSpec:
    """
    Single-mode track whose peak permittivity change puts its effective index on
    the order-ell mode of ``ring``

    Parameters
    ----------
    grid : GridSpec
        Grid of the single waveguide
    single_track : TrackSpec
        Track whose peak is fitted; its widths are kept
    ring : RingSpec
        Ring geometry at the wanted phase matching radius
    order : int
        Vortex order matched at that radius
    bracket : tuple of float
        Search range of the peak as multiples of the track's current peak

    Returns
    -------
    TrackSpec
    """
    target = ring_order_neff(ring, order, k0, n_s, grid.dx, model)
    if target <= n_s:
        raise CutoffError(target, n_s)

    def mismatch(factor: float) -> float:
        track = replace(
            single_track, peak_delta_eps=single_track.peak_delta_eps * factor
        )
        profile = gaussian_track_profile(grid, track, n_s)
        try:
            return single_neff(profile, k0, model, track) - target
        except CutoffError:
            return n_s - target

    low, high = bracket
    if np.sign(mismatch(low)) == np.sign(mismatch(high)):
        raise NoCrossingError(order, ring.radius, ring.radius)
    factor = brentq(mismatch, low, high, xtol=1e-6)
    fitted = replace(single_track, peak_delta_eps=single_track.peak_delta_eps * factor)
    logger.info(
        "single track peak %.5e matches order %d at R=%.3f um (n_eff %.7f)",
        fitted.peak_delta_eps,
        order,
        ring.radius,
        target,
    )
    return fitted


def phase_match_radius(
    single: PermittivityProfile,
    ring_template: RingSpec,
    order: int,
    radii: Sequence[float],
    k0: float,
    model: str = "solved",
    workers: int = 1,
    step: Optional[float] = None,
    single_track: Optional[TrackSpec] = None,
    scale_widths: bool = True,
) -> PhaseMatchResult:
    """
    Ring radius at which the order-ell ring mode is phase matched to the single-mode
    waveguide

    Parameters
    ----------
    single : PermittivityProfile
        Single-mode waveguide profile
    ring_template : RingSpec
        Ring geometry; the radius is varied, and the track widths with it when
        ``scale_widths`` is set
    order : int
        Vortex order
    radii : sequence of float
        Scan radii in um; consecutive radii with a sign change bracket the root
    k0 : float
        Vacuum wavenumber in rad/m
    model : str
        "solved" for the finite-difference solver, "analytic" for variational modes
    scale_widths : bool
        Scale the track widths with the radius (self-similar rings)

    Returns
    -------
    PhaseMatchResult
        Root radius to 0.01 um and the dispersion curve of the scan
    """
    radii = sorted(float(radius) for radius in radii)
    step = step or single.grid.dx
    curve = dispersion_scan(
        single,
        ring_template,
        radii,
        k0,
        orders=sorted({1, 2, order}),
        model=model,
        workers=workers,
        step=step,
        single_track=single_track,
        scale_widths=scale_widths,
    )
    mismatch = np.array(curve.n_eff[order]) - curve.n_eff_single
    crossings = np.nonzero(np.sign(mismatch[:-1]) != np.sign(mismatch[1:]))[0]
    if len(crossings) == 0:
        raise NoCrossingError(order, radii[0], radii[-1])
    index = int(crossings[0])
    radius = bisect_radius(
        curve.n_eff_single,
        ring_template,
        order,
        radii[index],
        radii[index + 1],
        k0,
        single.n_s,
        step,
        model,
        scale_widths,
    )
    logger.info("order %d phase matched at R=%.3f um", order, radius)
    return PhaseMatchResult(radius_um=radius, order=order, curve=curve)
