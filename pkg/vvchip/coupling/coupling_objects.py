"""
Value objects of the six-mode coupled system
"""
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np
from pandas import DataFrame

from vvchip.exceptions.chip_exception import ContractError
from vvchip.modes.mode_objects import ModeField

BASIS_LABELS = ("G_x'", "G_y'", "x_l", "x_-l", "y_l", "y_-l")
GAUSSIAN = slice(0, 2)
OAM = slice(2, 6)
BASIS_SIZE = 6


def same_waveguide(row: int, column: int) -> bool:
    return (row < 2) == (column < 2)


@dataclass(frozen=True, eq=False)
class ModeBasis:
    """
    The six modes [G_x', G_y', x_l, x_-l, y_l, y_-l]; the Gaussian modes belong to
    the single-mode waveguide, the vortex modes to the ring
    """

    modes: Tuple[ModeField, ...]
    ell: int

    def __post_init__(self):
        if len(self.modes) != BASIS_SIZE:
            raise ContractError("ModeBasis", f"expected 6 modes, got {len(self.modes)}")
        grid = self.modes[0].grid
        for mode in self.modes[1:]:
            grid.check_same(mode.grid, "ModeBasis")

    @classmethod
    def from_modes(
        cls, gaussian: ModeField, positive: ModeField, negative: ModeField, ell: int
    ) -> "ModeBasis":
        return cls(
            modes=(
                gaussian.polarized("x'"),
                gaussian.polarized("y'"),
                positive.polarized("x"),
                negative.polarized("x"),
                positive.polarized("y"),
                negative.polarized("y"),
            ),
            ell=ell,
        )

    @property
    def beta_bar(self) -> float:
        return float(np.mean([mode.beta for mode in self.modes]))

    @property
    def ring_modes(self) -> Tuple[ModeField, ...]:
        return self.modes[OAM]

    @property
    def grid(self):
        return self.modes[0].grid

    def shifted(self, delta_beta: float) -> "ModeBasis":
        return ModeBasis(
            modes=tuple(
                replace(mode, beta=mode.beta + delta_beta) for mode in self.modes
            ),
            ell=self.ell,
        )


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """
    Generator K of dA/dz = -j K A in rad/m, with the origin of every entry
    """

    values: np.ndarray
    provenance: Dict[Tuple[int, int], str] = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (BASIS_SIZE, BASIS_SIZE):
            raise ContractError(
                "CouplingMatrix", f"expected 6x6, got {self.values.shape}"
            )

    @property
    def scale(self) -> float:
        return float(np.linalg.norm(self.values, 2))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        deviation = np.max(np.abs(self.values - self.values.conj().T))
        return bool(deviation <= tol * max(self.scale, np.finfo(float).tiny))

    def inter_block(self) -> np.ndarray:
        mask = np.zeros((BASIS_SIZE, BASIS_SIZE), dtype=bool)
        mask[GAUSSIAN, OAM] = True
        mask[OAM, GAUSSIAN] = True
        return np.where(mask, self.values, 0.0)

    def uncoupled(self) -> "CouplingMatrix":
        provenance = {
            key: value
            for key, value in self.provenance.items()
            if same_waveguide(*key)
        }
        return CouplingMatrix(self.values - self.inter_block(), provenance)

    def with_diagonal(self, index: int, value: float, origin: str) -> "CouplingMatrix":
        values = self.values.copy()
        values[index, index] = value
        provenance = dict(self.provenance)
        provenance[(index, index)] = f"{provenance.get((index, index), '')}; {origin}"
        return CouplingMatrix(values, provenance)

    def coupling_column(self, gaussian_index: int) -> np.ndarray:
        """
        Couplings from one Gaussian mode into the four vortex modes
        """
        return self.values[OAM, gaussian_index]

    def to_frame(self) -> DataFrame:
        rows = []
        for row in range(BASIS_SIZE):
            for column in range(BASIS_SIZE):
                value = self.values[row, column]
                rows.append(
                    {
                        "row": BASIS_LABELS[row],
                        "column": BASIS_LABELS[column],
                        "re": value.real,
                        "im": value.imag,
                    }
                )
        return DataFrame(rows)

    def provenance_table(self) -> str:
        width = max(len(label) for label in BASIS_LABELS)
        lines = []
        for (row, column), origin in sorted(self.provenance.items()):
            lines.append(
                f"{BASIS_LABELS[row]:<{width}}  "
                f"{BASIS_LABELS[column]:<{width}}  {origin}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class AmplitudeState:
    amplitudes: np.ndarray
    z: float = 0.0

    def __post_init__(self):
        if self.amplitudes.shape != (BASIS_SIZE,):
            raise ContractError("AmplitudeState", "expected 6 amplitudes")

    @classmethod
    def from_jones(cls, jones, theta: float = 0.0) -> "AmplitudeState":
        """
        Gaussian input with a lab-frame Jones vector; theta rotates the x'/y' axes
        """
        jx, jy = np.asarray(jones, dtype=complex).reshape(2)
        cos_t, sin_t = np.cos(theta), np.sin(theta)
        amplitudes = np.zeros(BASIS_SIZE, dtype=complex)
        amplitudes[0] = cos_t * jx + sin_t * jy
        amplitudes[1] = -sin_t * jx + cos_t * jy
        return cls(amplitudes)

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True, eq=False)
class SegmentPlan:
    """
    Lead-in, coupling and lead-out segments with lengths in metres. K1 and K2 carry
    no inter-waveguide coupling. ``ramp`` is the raised-cosine length at each end
    of the coupling segment; ``mass`` holds the optional overlap (Butt) matrix.
    """

    L1: float
    Lcp: float
    L2: float
    K1: CouplingMatrix
    Kcp: CouplingMatrix
    K2: CouplingMatrix
    ramp: float = 0.0
    mass: Optional[np.ndarray] = None

    def __post_init__(self):
        if min(self.L1, self.Lcp, self.L2, self.ramp) < 0:
            raise ContractError("SegmentPlan", "segment lengths must be non-negative")
        if 2 * self.ramp > self.Lcp and self.Lcp > 0:
            raise ContractError(
                "SegmentPlan", "ramps are longer than the coupling segment"
            )

    @classmethod
    def from_matrix(
        cls,
        K: CouplingMatrix,
        L1: float,
        Lcp: float,
        L2: float,
        ramp: float = 0.0,
        mass: Optional[np.ndarray] = None,
        total: Optional[float] = None,
    ) -> "SegmentPlan":
        """
        Plan whose lead segments drop the inter-waveguide blocks of K; ``total``
        is the chip length the three segments must add up to
        """
        if total is not None and abs(L1 + Lcp + L2 - total) > 1e-12 * max(total, 1.0):
            raise ContractError(
                "SegmentPlan",
                f"segments add up to {L1 + Lcp + L2:.6g} m, not the chip length "
                f"{total:.6g} m",
            )
        uncoupled = K.uncoupled()
        return cls(L1, Lcp, L2, uncoupled, K, uncoupled, ramp=ramp, mass=mass)

    @property
    def length(self) -> float:
        return self.L1 + self.Lcp + self.L2


@dataclass(frozen=True)
class GammaCoefficients:
    gamma_x_pos: complex
    gamma_x_neg: complex
    gamma_y_pos: complex
    gamma_y_neg: complex
    gaussian_residue: Tuple[complex, complex] = (0j, 0j)

    @classmethod
    def from_state(cls, amplitudes: np.ndarray) -> "GammaCoefficients":
        return cls(
            complex(amplitudes[2]),
            complex(amplitudes[3]),
            complex(amplitudes[4]),
            complex(amplitudes[5]),
            (complex(amplitudes[0]), complex(amplitudes[1])),
        )

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.gamma_x_pos, self.gamma_x_neg, self.gamma_y_pos, self.gamma_y_neg]
        )

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.as_array()) ** 2))

    @property
    def residue_power(self) -> float:
        return float(sum(abs(value) ** 2 for value in self.gaussian_residue))

    def scaled(self, factor: complex) -> "GammaCoefficients":
        return GammaCoefficients(
            *(factor * self.as_array()),
            gaussian_residue=tuple(factor * value for value in self.gaussian_residue),
        )
