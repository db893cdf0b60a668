"""Laurent polynomials in two variables with exact rational coefficients."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from .exact import to_fraction
from .exceptions import MalformedSpec

Z, W = sp.symbols("z w")

Exponent = tuple[int, int]


@dataclass(frozen=True)
class LaurentPoly2:
    """Finitely supported map (i, j) -> c_ij for the polynomial sum c_ij z^i w^j."""

    terms: tuple[tuple[Exponent, Fraction], ...]

    @classmethod
    def from_mapping(cls, mapping: Mapping[Exponent, object]) -> "LaurentPoly2":
        cleaned = {}
        for (i, j), value in mapping.items():
            value = to_fraction(value)
            if value:
                cleaned[(int(i), int(j))] = cleaned.get((int(i), int(j)), Fraction(0)) + value
        return cls(tuple(sorted((k, v) for k, v in cleaned.items() if v)))

    @classmethod
    def constant(cls, value) -> "LaurentPoly2":
        return cls.from_mapping({(0, 0): value})

    @classmethod
    def monomial(cls, i: int, j: int, value=1) -> "LaurentPoly2":
        return cls.from_mapping({(i, j): value})

    @cached_property
    def coefficients(self) -> dict[Exponent, Fraction]:
        return dict(self.terms)

    def coefficient(self, i: int, j: int) -> Fraction:
        return self.coefficients.get((i, j), Fraction(0))

    @property
    def support(self) -> list[Exponent]:
        return [exponent for exponent, _ in self.terms]

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def z_range(self) -> tuple[int, int]:
        exponents = [i for i, _ in self.support]
        return (min(exponents), max(exponents))

    def w_range(self) -> tuple[int, int]:
        exponents = [j for _, j in self.support]
        return (min(exponents), max(exponents))

    # arithmetic

    def __add__(self, other: "LaurentPoly2 | int | Fraction") -> "LaurentPoly2":
        other = _coerce(other)
        merged = dict(self.coefficients)
        for key, value in other.terms:
            merged[key] = merged.get(key, Fraction(0)) + value
        return LaurentPoly2.from_mapping(merged)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly2":
        return LaurentPoly2(tuple((k, -v) for k, v in self.terms))

    def __sub__(self, other) -> "LaurentPoly2":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "LaurentPoly2":
        return _coerce(other) - self

    def __mul__(self, other) -> "LaurentPoly2":
        other = _coerce(other)
        product: dict[Exponent, Fraction] = {}
        for (i1, j1), c1 in self.terms:
            for (i2, j2), c2 in other.terms:
                key = (i1 + i2, j1 + j2)
                product[key] = product.get(key, Fraction(0)) + c1 * c2
        return LaurentPoly2.from_mapping(product)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "LaurentPoly2":
        if exponent < 0:
            raise MalformedSpec("Only non-negative powers of a Laurent polynomial are supported.")
        result = LaurentPoly2.constant(1)
        for _ in range(exponent):
            result = result * self
        return result

    def scaled_variables(self, x, y) -> "LaurentPoly2":
        """P(x z, y w) for non-zero rationals x, y."""
        x, y = to_fraction(x), to_fraction(y)
        if not x or not y:
            raise MalformedSpec("Variable scalings must be non-zero.")
        return LaurentPoly2.from_mapping({(i, j): c * x**i * y**j for (i, j), c in self.terms})

    def swapped(self) -> "LaurentPoly2":
        return LaurentPoly2.from_mapping({(j, i): c for (i, j), c in self.terms})

    # evaluation

    def evaluate(self, z, w):
        """Complex value at (z, w); broadcasts over numpy arrays."""
        z = np.asarray(z, dtype=np.complex128)
        w = np.asarray(w, dtype=np.complex128)
        total = np.zeros(np.broadcast(z, w).shape, dtype=np.complex128)
        for (i, j), c in self.terms:
            total = total + float(c) * z**i * w**j
        return total if total.shape else complex(total)

    def fiber_coefficients(self, z) -> tuple[np.ndarray, int]:
        """Coefficients of w -> P(z, w) times w^-jmin, highest power first, one row per z."""
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        jmin, jmax = self.w_range()
        rows = np.zeros((z.size, jmax - jmin + 1), dtype=np.complex128)
        for (i, j), c in self.terms:
            rows[:, jmax - j] += float(c) * z**i
        return rows, jmin

    def log_abs(self, z, w) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.evaluate(z, w)))

    # conversions

    def to_sympy(self, z=Z, w=W) -> sp.Expr:
        return sp.Add(*(sp.Rational(c.numerator, c.denominator) * z**i * w**j for (i, j), c in self.terms))

    @classmethod
    def from_sympy(cls, expr, z=Z, w=W) -> "LaurentPoly2":
        expr = sp.expand(sp.sympify(expr))
        extra = expr.free_symbols - {z, w}
        if extra:
            raise MalformedSpec(f"Unexpected symbols {sorted(map(str, extra))} in polynomial.")
        real, imaginary = {}, {}
        for term in sp.Add.make_args(expr):
            if term == 0:
                continue
            coeff, rest = term.as_coeff_Mul()
            powers = rest.as_powers_dict()
            i, j = powers.get(z, 0), powers.get(w, 0)
            unit = rest / (z**i * w**j)
            if not (sp.sympify(i).is_Integer and sp.sympify(j).is_Integer):
                raise MalformedSpec(f"Non-integer exponent in {term}.")
            if unit == sp.I:
                target = imaginary
            elif unit == 1:
                target = real
            else:
                raise MalformedSpec(f"Cannot read coefficient of term {term}.")
            key = (int(i), int(j))
            value = sp.Rational(coeff)
            target[key] = target.get(key, Fraction(0)) + Fraction(int(value.p), int(value.q))
        real = {k: v for k, v in real.items() if v}
        imaginary = {k: v for k, v in imaginary.items() if v}
        if real and imaginary:
            raise MalformedSpec("Characteristic polynomials must have coefficients on one axis.")
        return cls.from_mapping(real or imaginary)

    @classmethod
    def parse(cls, text: str) -> "LaurentPoly2":
        try:
            expr = parse_expr(text, local_dict={"z": Z, "w": W, "I": sp.I}, transformations=standard_transformations)
        except (SyntaxError, TypeError, ValueError, sp.SympifyError) as exc:
            raise MalformedSpec(f"Cannot parse polynomial {text!r}: {exc}") from exc
        return cls.from_sympy(expr)

    def to_json(self) -> dict:
        return {"terms": [[i, j, str(c)] for (i, j), c in self.terms]}

    @classmethod
    def from_json(cls, doc: Mapping) -> "LaurentPoly2":
        try:
            return cls.from_mapping({(int(i), int(j)): c for i, j, c in doc["terms"]})
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedSpec(f"Malformed polynomial document: {exc}") from exc

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        return str(self.to_sympy())


def _coerce(value) -> LaurentPoly2:
    if isinstance(value, LaurentPoly2):
        return value
    return LaurentPoly2.constant(value)


def polynomial(value: "LaurentPoly2 | str | Mapping | Iterable") -> LaurentPoly2:
    """Accept a LaurentPoly2, an expression string, or a JSON document."""
    if isinstance(value, LaurentPoly2):
        return value
    if isinstance(value, str):
        return LaurentPoly2.parse(value)
    if isinstance(value, Mapping):
        return LaurentPoly2.from_json(value)
    raise MalformedSpec(f"Cannot interpret {value!r} as a polynomial.")


__all__ = ["W", "Z", "LaurentPoly2", "polynomial"]
