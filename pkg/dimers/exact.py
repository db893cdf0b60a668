"""Exact Gaussian-rational arithmetic used by the Kasteleyn solver.

Kasteleyn entries live in Q(i): weights are rationals and phases are powers of i.
Determinants are taken fraction-free over Z[i] after clearing row denominators;
linear solves go through sympy's LU over Q(i).
"""
from __future__ import annotations

import logging
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from sympy import QQ, QQ_I, ZZ_I
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError

from .exceptions import InfeasibleInput, MalformedSpec

logger = logging.getLogger(__name__)

ZERO = QQ_I(0, 0)
ONE = QQ_I(1, 0)
_UNITS = (QQ_I(1, 0), QQ_I(0, 1), QQ_I(-1, 0), QQ_I(0, -1))


def to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise MalformedSpec("Booleans are not numbers here.")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise MalformedSpec(f"Not a rational number: {value!r}") from exc
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**12)
    numerator = getattr(value, "numerator", None)
    denominator = getattr(value, "denominator", None)
    if numerator is not None and denominator is not None:
        return Fraction(int(numerator), int(denominator))
    raise MalformedSpec(f"Not a rational number: {value!r}")


def rational(value) -> object:
    frac = to_fraction(value)
    return QQ(frac.numerator, frac.denominator)


def gaussian(real, imag=0) -> object:
    return QQ_I(rational(real), rational(imag))


def unit(exponent: int) -> object:
    """i**exponent as an element of Q(i)."""
    return _UNITS[exponent % 4]


def parts(value) -> tuple[Fraction, Fraction]:
    return to_fraction(value.x), to_fraction(value.y)


def to_complex(value) -> complex:
    real, imag = parts(value)
    return complex(float(real), float(imag))


def real_part(value, *, what: str = "value") -> Fraction:
    real, imag = parts(value)
    if imag:
        raise MalformedSpec(f"Expected a real {what}, got {real} + {imag}i.")
    return real


def modulus_if_axis(value) -> Fraction:
    """|z| for z on a coordinate axis of the complex plane; anything else is an error."""
    real, imag = parts(value)
    if real and imag:
        raise MalformedSpec(
            f"Determinant {real} + {imag}i is not a real or purely imaginary number; "
            "the phasing is not Kasteleyn."
        )
    return abs(real) + abs(imag)


def dense_matrix(rows: Sequence[Sequence[object]]) -> DomainMatrix:
    size = len(rows)
    width = len(rows[0]) if rows else 0
    return DomainMatrix([list(row) for row in rows], (size, width), QQ_I)


def sparse_matrix(entries: Mapping[int, Mapping[int, object]], shape: tuple[int, int]) -> DomainMatrix:
    cleaned = {i: {j: v for j, v in row.items() if v} for i, row in entries.items()}
    cleaned = {i: row for i, row in cleaned.items() if row}
    return DomainMatrix(cleaned, shape, QQ_I)


def determinant(matrix: DomainMatrix) -> object:
    """Exact determinant in Q(i) via fraction-free elimination over Z[i]."""
    rows, cols = matrix.shape
    if rows != cols:
        raise MalformedSpec(f"Determinant of a non-square {rows}x{cols} matrix.")
    if rows == 0:
        return ONE
    logger.debug("Exact determinant of a %dx%d Gaussian matrix", rows, cols)
    den, numerators = matrix.to_dense().clear_denoms_rowwise(convert=True)
    value = numerators.convert_to(ZZ_I).det()
    scale = QQ.one
    for index in range(rows):
        scale *= QQ.convert(den[index, index].element.x)
    return QQ_I(QQ.convert(value.x) / scale, QQ.convert(value.y) / scale)


def solve_columns(matrix: DomainMatrix, columns: Iterable[int]) -> dict[int, list[object]]:
    """Solve matrix @ x = e_c for each requested column index c."""
    size = matrix.shape[0]
    wanted = sorted(set(columns))
    if not wanted:
        return {}
    rhs_rows = [[ONE if r == c else ZERO for c in wanted] for r in range(size)]
    rhs = DomainMatrix(rhs_rows, (size, len(wanted)), QQ_I)
    try:
        solution = matrix.to_dense().lu_solve(rhs)
    except (DMNonInvertibleMatrixError, ZeroDivisionError) as exc:
        raise InfeasibleInput("no dimer cover") from exc
    table = solution.to_list()
    return {c: [table[r][k] for r in range(size)] for k, c in enumerate(wanted)}


def float_determinant(matrix: DomainMatrix) -> complex:
    """Floating point cross-check of :func:`determinant`."""
    values = np.array(
        [[to_complex(v) for v in row] for row in matrix.to_dense().to_list()],
        dtype=np.complex128,
    )
    if values.size == 0:
        return 1.0 + 0.0j
    return complex(np.linalg.det(values))


__all__ = [
    "ONE",
    "ZERO",
    "dense_matrix",
    "determinant",
    "float_determinant",
    "gaussian",
    "modulus_if_axis",
    "parts",
    "rational",
    "real_part",
    "solve_columns",
    "sparse_matrix",
    "to_complex",
    "to_fraction",
    "unit",
]
