"""
Value objects describing the sampled cross-section of the chip
"""
from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np

from vvchip.exceptions.chip_exception import ContractError, GeometryError, ModelError

AXIS_MODES = ("fixed", "radial")


@dataclass(frozen=True)
class GridSpec:
    """
    Regular sampling grid of the transverse plane, lengths in um.
    Arrays sampled on the grid have shape (ny, nx).
    """

    nx: int
    ny: int
    dx: float
    dy: float
    origin: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 16 or self.ny < 16:
            raise GeometryError(
                f"grid needs at least 16x16 pixels, got {self.nx}x{self.ny}"
            )
        if self.dx <= 0 or self.dy <= 0:
            raise GeometryError(
                f"grid spacing must be positive, got ({self.dx}, {self.dy})"
            )

    @classmethod
    def centered(cls, half_width: float, half_height: float, step: float) -> "GridSpec":
        """
        Grid symmetric about (0, 0) whose pixel centers include the origin
        """
        nx = 2 * int(round(half_width / step)) + 1
        ny = 2 * int(round(half_height / step)) + 1
        return cls(
            nx=nx,
            ny=ny,
            dx=step,
            dy=step,
            origin=(-(nx // 2) * step, -(ny // 2) * step),
        )

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.dx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.dy * np.arange(self.ny)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.ny, self.nx

    @property
    def pixel_area(self) -> float:
        return self.dx * self.dy

    @property
    def extent(self) -> Tuple[float, float, float, float]:
        return self.x[0], self.x[-1], self.y[0], self.y[-1]

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y)

    def polar(self, center: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray]:
        xx, yy = self.mesh()
        dx = xx - center[0]
        dy = yy - center[1]
        return np.hypot(dx, dy), np.arctan2(dy, dx)

    def to_pixel(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Fractional (row, column) indices of physical coordinates
        """
        return (np.asarray(y) - self.origin[1]) / self.dy, (
            np.asarray(x) - self.origin[0]
        ) / self.dx

    def contains_box(
        self, x_low: float, x_high: float, y_low: float, y_high: float, margin_px: int
    ) -> bool:
        x0, x1, y0, y1 = self.extent
        return (
            x_low >= x0 + margin_px * self.dx
            and x_high <= x1 - margin_px * self.dx
            and y_low >= y0 + margin_px * self.dy
            and y_high <= y1 - margin_px * self.dy
        )

    def check_same(self, other: "GridSpec", operation: str):
        if self != other:
            raise ContractError(operation, f"grid mismatch: {self} vs {other}")


@dataclass(frozen=True)
class TrackSpec:
    """
    One laser-written track: an elliptical Gaussian change of permittivity.

    ``widths`` are 1/e half-widths along the track's own axes, which are rotated by
    ``angle`` from the grid axes.
    """

    center: Tuple[float, float]
    widths: Tuple[float, float]
    peak_delta_eps: float
    angle: float = 0.0

    def __post_init__(self):
        if min(self.widths) <= 0:
            raise GeometryError(f"track widths must be positive, got {self.widths}")
        if self.peak_delta_eps < 0:
            raise ModelError(
                "peak permittivity change must be non-negative, "
                f"got {self.peak_delta_eps}"
            )

    def bounds(self) -> Tuple[float, float, float, float]:
        """
        Bounding box of the two-width ellipse
        """
        wx, wy = 2 * self.widths[0], 2 * self.widths[1]
        cos_a, sin_a = abs(np.cos(self.angle)), abs(np.sin(self.angle))
        half_x = np.hypot(wx * cos_a, wy * sin_a)
        half_y = np.hypot(wx * sin_a, wy * cos_a)
        cx, cy = self.center
        return cx - half_x, cx + half_x, cy - half_y, cy + half_y


@dataclass(frozen=True)
class RingSpec:
    """
    Annular waveguide made of overlapping tracks on a circle.

    The template track's widths are read in the local frame of each track: the
    first width is radial and the second is tangential.
    """

    radius: float
    track: TrackSpec
    n_tracks: int = 12
    center_scan: bool = False
    center: Tuple[float, float] = (0.0, 0.0)

    ring_track_count = 12

    def __post_init__(self):
        if self.n_tracks not in (12, 13):
            raise GeometryError(f"n_tracks must be 12 or 13, got {self.n_tracks}")
        if self.radius <= 0:
            raise GeometryError(f"ring radius must be positive, got {self.radius}")
        radial_width, tangential_width = self.track.widths
        if self.radius < radial_width:
            raise GeometryError(
                f"ring radius {self.radius} um is below the track width "
                f"{radial_width} um, the tracks coincide"
            )
        half_chord = self.radius * np.sin(np.pi / self.ring_track_count)
        if tangential_width < half_chord:
            raise GeometryError(
                f"adjacent tracks do not overlap: tangential width {tangential_width} "
                f"um is below {half_chord:.4f} um"
            )

    @property
    def has_center_track(self) -> bool:
        return self.n_tracks == 13 or self.center_scan

    def tracks(self):
        """
        Yields every track of the ring, the optional middle track last
        """
        cx, cy = self.center
        for index in range(self.ring_track_count):
            phi = 2 * np.pi * index / self.ring_track_count
            yield TrackSpec(
                center=(cx + self.radius * np.cos(phi), cy + self.radius * np.sin(phi)),
                widths=self.track.widths,
                peak_delta_eps=self.track.peak_delta_eps,
                angle=phi,
            )
        if self.has_center_track:
            radial_width = self.track.widths[0]
            yield TrackSpec(
                center=self.center,
                widths=(radial_width, radial_width),
                peak_delta_eps=self.track.peak_delta_eps,
            )

    def with_radius(self, radius: float) -> "RingSpec":
        return RingSpec(
            radius=radius,
            track=self.track,
            n_tracks=self.n_tracks,
            center_scan=self.center_scan,
            center=self.center,
        )

    def scaled_to(self, radius: float) -> "RingSpec":
        """
        Self-similar ring: the track widths follow the radius
        """
        factor = radius / self.radius
        widths = (self.track.widths[0] * factor, self.track.widths[1] * factor)
        return RingSpec(
            radius=radius,
            track=replace(self.track, widths=widths),
            n_tracks=self.n_tracks,
            center_scan=self.center_scan,
            center=self.center,
        )

    def with_track(self, track: TrackSpec) -> "RingSpec":
        return RingSpec(
            radius=self.radius,
            track=track,
            n_tracks=self.n_tracks,
            center_scan=self.center_scan,
            center=self.center,
        )


@dataclass(frozen=True)
class BirefringenceTensor:
    """
    Diagonal anisotropic permittivity perturbation with its optical-axis angle
    """

    d_eps_x: float = 0.0
    d_eps_y: float = 0.0
    d_eps_z: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not -np.pi / 2 <= self.theta <= np.pi / 2:
            raise ModelError(
                f"optical axis angle must lie in [-pi/2, pi/2], got {self.theta}"
            )

    def diagonal(self) -> np.ndarray:
        return np.diag([self.d_eps_x, self.d_eps_y, self.d_eps_z]).astype(float)

    def magnitude(self) -> float:
        return float(max(abs(self.d_eps_x), abs(self.d_eps_y), abs(self.d_eps_z)))

    def scaled(self, factor: float) -> "BirefringenceTensor":
        return BirefringenceTensor(
            d_eps_x=self.d_eps_x * factor,
            d_eps_y=self.d_eps_y * factor,
            d_eps_z=self.d_eps_z * factor,
            theta=self.theta,
        )

    @property
    def is_zero(self) -> bool:
        return self.magnitude() == 0.0


@dataclass(frozen=True, eq=False)
class PermittivityProfile:
    """
    Relative permittivity eps_s + eps_iso(x, y) of one waveguide, plus its
    birefringence tensor acting over the written region.

    ``written_peak`` is the peak change of the tracks; the written region weight is
    eps_iso / written_peak. ``axis_mode`` selects a common optical axis ("fixed") or
    an axis following the local radial direction about ``axis_center`` ("radial").
    """

    grid: GridSpec
    eps_s: float
    eps_iso: np.ndarray
    written_peak: float
    d_eps: BirefringenceTensor = field(default_factory=BirefringenceTensor)
    axis_mode: str = "fixed"
    axis_center: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.eps_iso.shape != self.grid.shape:
            raise ContractError(
                "PermittivityProfile",
                f"eps_iso shape {self.eps_iso.shape} "
                f"does not match grid {self.grid.shape}",
            )
        if np.any(self.eps_iso < 0):
            raise ModelError("isotropic permittivity change must be non-negative")
        if self.axis_mode not in AXIS_MODES:
            raise ModelError(
                f"axis_mode must be one of {AXIS_MODES}, got {self.axis_mode}"
            )
        if self.eps_s <= 0:
            raise ModelError(
                f"substrate permittivity must be positive, got {self.eps_s}"
            )
        self.eps_iso.setflags(write=False)

    @property
    def n_s(self) -> float:
        return float(np.sqrt(self.eps_s))

    @property
    def eps_total(self) -> np.ndarray:
        return self.eps_s + self.eps_iso

    @property
    def max_delta_eps(self) -> float:
        return float(self.eps_iso.max())

    def weight(self) -> np.ndarray:
        """
        Written-region weight in [0, 1]
        """
        if self.written_peak <= 0:
            return np.zeros(self.grid.shape)
        return self.eps_iso / self.written_peak

    def with_tensor(self, d_eps: BirefringenceTensor) -> "PermittivityProfile":
        return PermittivityProfile(
            grid=self.grid,
            eps_s=self.eps_s,
            eps_iso=self.eps_iso,
            written_peak=self.written_peak,
            d_eps=d_eps,
            axis_mode=self.axis_mode,
            axis_center=self.axis_center,
        )


@dataclass(frozen=True)
class WriteParams:
    """
    Laser writing parameters in SI units.

    E_sp: single-pulse energy (J), v: writing speed (m/s), f_rp: repetition rate
    (Hz), w0: spot waist (m), eta: energy-to-index efficiency, n_s: substrate index,
    k0_prime: modified propagation constant (rad/m), xi: residual shift (rad/m).
    """

    E_sp: float
    v: float
    f_rp: float
    w0: float
    eta: float
    n_s: float
    k0_prime: float
    xi: float = 0.0

    def __post_init__(self):
        for name in ("E_sp", "v", "f_rp", "w0", "eta", "n_s", "k0_prime"):
            if getattr(self, name) <= 0:
                raise ModelError(f"write parameter {name} must be positive")
