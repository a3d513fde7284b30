"""
Parser of energy lists and polarization lists
"""
import math
import os
from pathlib import Path
from typing import List, Tuple

from lark import Lark, Transformer, UnexpectedInput, v_args
from lark.exceptions import VisitError
import numpy as np

from vvchip.conversions.conversions import (
    ANGLE_UNIT_TO_RAD,
    ENERGY_UNIT_TO_J,
    jones_for_name,
    linear_jones,
)
from vvchip.exceptions.chip_exception import InvalidSweepExpression

_ROOT = Path(__file__).parent.parent
GRAMMAR_PATH = os.path.join(_ROOT, "grammar", "sweep.lark")
with open(file=GRAMMAR_PATH) as sweep_grammar_file:
    _GRAMMAR_TEXT = sweep_grammar_file.read()

DEFAULT_ENERGY_UNIT = "nJ"
DEFAULT_ANGLE_UNIT = "deg"

Polarization = Tuple[str, np.ndarray]


def _format_number(value: float) -> str:
    return f"{value:g}"


class SweepTransformer(Transformer):
    """
    Turns a parsed sweep expression into energies (J) or labelled Jones vectors
    """

    @v_args(inline=True)
    def number(self, token) -> float:
        return float(token)

    @v_args(inline=True)
    def energy_range(self, start: float, stop: float, count: float) -> List[float]:
        if count != int(count) or count < 1:
            raise InvalidSweepExpression(
                f"Range count must be a positive integer, got {_format_number(count)}"
            )
        return [float(value) for value in np.linspace(start, stop, int(count))]

    def energies(self, items) -> List[float]:
        unit = DEFAULT_ENERGY_UNIT
        if items and not isinstance(items[-1], (float, list)):
            unit = str(items[-1])
            items = items[:-1]
        scale = ENERGY_UNIT_TO_J[unit]
        values: List[float] = []
        for item in items:
            values.extend(item if isinstance(item, list) else [item])
        return [value * scale for value in values]

    def values(self, items) -> List[float]:
        values: List[float] = []
        for item in items:
            values.extend(item if isinstance(item, list) else [item])
        return values

    @v_args(inline=True)
    def imaginary(self, token) -> complex:
        return complex(str(token))

    def real_imaginary(self, items) -> complex:
        value = complex(items[0])
        if len(items) == 2:
            value += complex(str(items[1]))
        return value

    @v_args(inline=True)
    def named(self, token) -> Polarization:
        name = str(token).upper()
        return name, jones_for_name(name)

    def linear(self, items) -> Polarization:
        angle = items[0]
        unit = str(items[1]) if len(items) > 1 else DEFAULT_ANGLE_UNIT
        label = f"lin({_format_number(angle)}{unit})"
        return label, linear_jones(angle * ANGLE_UNIT_TO_RAD[unit])

    @v_args(inline=True)
    def jones(self, jx: complex, jy: complex) -> Polarization:
        vector = np.array([jx, jy], dtype=complex)
        norm = np.linalg.norm(vector)
        if norm == 0 or not math.isfinite(norm):
            raise InvalidSweepExpression("Jones vector must be non-zero and finite")
        return f"jones({jx:g}, {jy:g})", vector / norm

    def polarizations(self, items) -> List[Polarization]:
        return list(items)


class SweepParser:
    parser = Lark(
        _GRAMMAR_TEXT, parser="lalr", start=["energies", "values", "polarizations"]
    )

    def parse(self, text: str, start: str):
        try:
            tree = self.parser.parse(text, start=start)
            return SweepTransformer().transform(tree)
        except UnexpectedInput as err:
            message = (
                f"Unexpected input at line {err.line}, column {err.column}\n"
                f"{err.get_context(text)}"
            )
            raise InvalidSweepExpression(message)
        except VisitError as err:
            curr_err: Exception = err
            while isinstance(curr_err, VisitError):
                curr_err = curr_err.orig_exc
            raise curr_err


def parse_energies(text: str) -> List[float]:
    """
    Energy offsets in J from an expression such as "-1.465, 0, 1.465 nJ" or
    "-2:2:9 nJ" (start:stop:count); the unit defaults to nJ
    """
    return SweepParser().parse(text, "energies")


def parse_polarizations(text: str) -> List[Polarization]:
    """
    Labelled Jones vectors from an expression such as "RCP H lin(30deg) jones(1, 1j)"
    """
    return SweepParser().parse(text, "polarizations")


def parse_values(text: str) -> List[float]:
    """
    Plain numbers and start:stop:count ranges, e.g. "2:6:17" or "3.5, 4.9"
    """
    return SweepParser().parse(text, "values")
