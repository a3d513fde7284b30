"""
Unit conversion tables and named polarization states
"""
import numpy as np

from vvchip.exceptions.chip_exception import ContractError

UM_PER_M = 1e6
NJ_PER_J = 1e9
MM_PER_M = 1e3

ENERGY_UNIT_TO_J = {"J": 1.0, "uJ": 1e-6, "nJ": 1e-9, "pJ": 1e-12}
ANGLE_UNIT_TO_RAD = {"rad": 1.0, "deg": np.pi / 180.0}

_SQRT_HALF = np.sqrt(0.5)

# Jones vectors (E_x, E_y); the circular handedness follows exp(j(wt - bz))
POLARIZATION_JONES = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([_SQRT_HALF, _SQRT_HALF], dtype=complex),
    "A": np.array([-_SQRT_HALF, _SQRT_HALF], dtype=complex),
    "RCP": np.array([_SQRT_HALF, 1j * _SQRT_HALF], dtype=complex),
    "LCP": np.array([_SQRT_HALF, -1j * _SQRT_HALF], dtype=complex),
}

PANEL_ORDER = ("RCP", "LCP", "H", "V", "D", "A")

# analyzer angles of the four projection images, in panel column order
PROJECTION_ANGLES = {"H": 0.0, "D": np.pi / 4, "V": np.pi / 2, "A": 3 * np.pi / 4}


def um_to_m(value_um: float) -> float:
    return value_um / UM_PER_M


def m_to_um(value_m: float) -> float:
    return value_m * UM_PER_M


def nj_to_j(value_nj: float) -> float:
    return value_nj / NJ_PER_J


def j_to_nj(value_j: float) -> float:
    return value_j * NJ_PER_J


def mm_to_m(value_mm: float) -> float:
    return value_mm / MM_PER_M


def k0_from_wavelength_nm(wavelength_nm: float) -> float:
    """
    Vacuum wavenumber in rad/m
    """
    return 2 * np.pi / (wavelength_nm * 1e-9)


def linear_jones(psi: float) -> np.ndarray:
    return np.array([np.cos(psi), np.sin(psi)], dtype=complex)


def normalize_jones(jones) -> np.ndarray:
    vector = np.asarray(jones, dtype=complex).reshape(2)
    norm = np.linalg.norm(vector)
    if norm == 0:
        raise ContractError("normalize_jones", "Jones vector has zero length")
    return vector / norm


def jones_for_name(name: str) -> np.ndarray:
    """
    Returns the Jones vector of a named polarization state
    :param name: one of RCP, LCP, H, V, D, A (case insensitive)
    :return:
    """
    key = name.upper()
    if key not in POLARIZATION_JONES:
        raise ContractError(
            "jones_for_name",
            f"Unknown polarization '{name}', expected one of {list(PANEL_ORDER)}",
        )
    return POLARIZATION_JONES[key].copy()
