import math

import numpy as np
import pytest

from vvchip.exceptions.chip_exception import InvalidSweepExpression
from vvchip.parsing.sweep_parser import (
    parse_energies,
    parse_polarizations,
    parse_values,
)


@pytest.mark.parametrize(
    "text, expected_nj",
    [
        ("0 nJ", [0.0]),
        ("-1.465, 0, 1.465 nJ", [-1.465, 0.0, 1.465]),
        ("-2:2:5 nJ", [-2.0, -1.0, 0.0, 1.0, 2.0]),
        ("-1:1:3", [-1.0, 0.0, 1.0]),
    ],
)
def test_energies(text, expected_nj):
    np.testing.assert_allclose(parse_energies(text), np.array(expected_nj) * 1e-9)


def test_energy_units():
    assert parse_energies("2 uJ") == pytest.approx([2e-6])
    assert parse_energies("300 pJ") == pytest.approx([3e-10])
    assert parse_energies("1e-9 J") == pytest.approx([1e-9])


def test_values():
    assert parse_values("2:6:17")[:3] == pytest.approx([2.0, 2.25, 2.5])
    assert parse_values("3.5, 4.9") == pytest.approx([3.5, 4.9])


def test_named_polarizations():
    parsed = parse_polarizations("RCP lcp H V D A")
    assert [label for label, _ in parsed] == ["RCP", "LCP", "H", "V", "D", "A"]
    for _, jones in parsed:
        assert np.linalg.norm(jones) == pytest.approx(1.0)


def test_linear_polarization():
    (label, jones), (radians_label, radians_jones) = parse_polarizations(
        "lin(30deg) lin(0.5 rad)"
    )
    assert label == "lin(30deg)"
    np.testing.assert_allclose(jones, [math.cos(math.pi / 6), math.sin(math.pi / 6)])
    assert radians_label == "lin(0.5rad)"
    np.testing.assert_allclose(radians_jones, [math.cos(0.5), math.sin(0.5)])


def test_jones_polarization():
    ((label, jones),) = parse_polarizations("jones(1, 1j)")
    assert label.startswith("jones(")
    np.testing.assert_allclose(jones, np.array([1, 1j]) / math.sqrt(2))
    ((_, jones),) = parse_polarizations("jones(1+1j, -2j)")
    assert np.linalg.norm(jones) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "parse, text",
    [
        (parse_energies, ""),
        (parse_energies, "1, , 2 nJ"),
        (parse_energies, "1:2 nJ"),
        (parse_energies, "0:1:2.5 nJ"),
        (parse_energies, "5 kJ"),
        (parse_values, "2 nJ"),
        (parse_polarizations, "Q"),
        (parse_polarizations, "jones(0, 0)"),
        (parse_polarizations, "lin()"),
    ],
)
def test_invalid_expressions(parse, text):
    with pytest.raises(InvalidSweepExpression):
        parse(text)
