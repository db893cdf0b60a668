"""Characteristic polynomials and partition functions of periodic graphs.

A fundamental domain is a periodic BipartiteGraph whose edges record how often
they cross the two seams.  Its characteristic polynomial is det K(z, w), where
an edge with crossing (cx, cy) carries the factor z**cx * w**cy.  The n x n
torus partition function combines the four products of P over the n-th roots
of +-1 with one sign per seam-winding class mod 2.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np
import sympy as sp

from .constants import TORUS_CLASS_SIGNS, TWIST_CLASSES
from .exceptions import InfeasibleInput, MalformedSpec
from .graphs import BipartiteGraph, kasteleyn_phasing
from .oracle import class_sign_table, torus_brute_force
from .polynomials import W, Z, LaurentPoly2

logger = logging.getLogger(__name__)

_SYMPY_UNITS = (sp.Integer(1), sp.I, sp.Integer(-1), -sp.I)


def _require_domain(domain: BipartiteGraph) -> None:
    if not domain.is_periodic:
        raise MalformedSpec("A fundamental domain must carry two periods.")
    if not domain.is_balanced:
        raise MalformedSpec("A fundamental domain needs as many white as black vertices.")


def twisted_kasteleyn(domain: BipartiteGraph) -> sp.Matrix:
    """K(z, w) of the fundamental domain as a sympy matrix (rows black, columns white)."""
    _require_domain(domain)
    phasing = kasteleyn_phasing(domain)
    matrix = sp.zeros(domain.n_black, domain.n_white)
    for index, edge in enumerate(domain.edges):
        weight = sp.Rational(edge.weight.numerator, edge.weight.denominator)
        unit = _SYMPY_UNITS[phasing.exponents[index] % 4]
        matrix[edge.black, edge.white] += unit * weight * Z ** edge.crossing[0] * W ** edge.crossing[1]
    return matrix


def characteristic_polynomial(domain: BipartiteGraph) -> LaurentPoly2:
    matrix = twisted_kasteleyn(domain)
    determinant = sp.expand(matrix.det(method="berkowitz"))
    poly = LaurentPoly2.from_sympy(determinant)
    logger.debug("P(z, w) of %s has %d monomials", domain.name or "domain", len(poly.terms))
    return poly


def _root_product(n: int, sign: int) -> sp.Integer:
    """Product of the n roots of x**n = sign."""
    return sp.Integer((-1) ** (n + 1) * sign)


def twisted_product(poly: LaurentPoly2, n: int, sigma: int, tau: int) -> Fraction:
    """prod over z**n = (-1)**sigma and w**n = (-1)**tau of P(z, w), exactly."""
    if n < 1:
        raise MalformedSpec("The torus size must be a positive integer.")
    if poly.is_zero:
        return Fraction(0)
    zs, ws = (-1) ** sigma, (-1) ** tau
    imin, _ = poly.z_range()
    jmin, _ = poly.w_range()
    shifted = sp.expand(poly.to_sympy() * Z ** (-imin) * W ** (-jmin))
    inner = sp.expand(sp.resultant(W**n - ws, shifted, W) if shifted.has(W) else shifted**n)
    outer = sp.resultant(Z**n - zs, inner, Z) if inner.has(Z) else inner**n
    outer = sp.Rational(sp.expand(outer))
    # divide back the monomial shift: every z is paired with n values of w and vice versa
    correction = _root_product(n, zs) ** (imin * n) * _root_product(n, ws) ** (jmin * n)
    value = outer * correction
    return Fraction(int(value.p), int(value.q))


def twisted_products(poly: LaurentPoly2, n: int) -> dict[tuple[int, int], Fraction]:
    return {cls: twisted_product(poly, n, *cls) for cls in TWIST_CLASSES}


def resolve_class_signs(domain: BipartiteGraph, parity: int) -> tuple[int, int, int, int]:
    """Determinant sign of each seam-winding class mod 2, read from a small brute-forced torus.

    Odd parity uses the 1 x 1 torus, even parity the 2 x 2 torus.  When exactly
    one class has no covers there its sign is minus the product of the others;
    further missing classes default to +1.
    """
    n = 1 if parity % 2 else 2
    table = class_sign_table(domain, n)
    missing = [cls for cls in TWIST_CLASSES if cls not in table]
    if len(missing) == 1:
        product = 1
        for sign in table.values():
            product *= sign
        table[missing[0]] = -product
    elif missing:
        logger.warning("Classes %s have no covers on the %dx%d torus of %s", missing, n, n, domain.name)
        for cls in missing:
            table[cls] = 1
    signs = tuple(table[cls] for cls in TWIST_CLASSES)
    frozen = TORUS_CLASS_SIGNS.get((domain.name, parity % 2))
    if frozen is not None and frozen != signs:
        logger.warning("Resolved class signs %s differ from the stored table %s", signs, frozen)
    return signs


@dataclass(frozen=True)
class TorusPartition:
    n: int
    products: Mapping[tuple[int, int], Fraction]
    class_signs: tuple[int, int, int, int]
    class_totals: Mapping[tuple[int, int], Fraction]
    total: Fraction


def torus_partition(domain: BipartiteGraph, n: int, class_signs: tuple[int, ...] | None = None) -> TorusPartition:
    """Weighted cover count of the n x n torus built from ``domain``.

    The weight of the covers in winding class c mod 2 is
    eps_c / 4 * sum (-1)**(sigma c1 + tau c2) Z_sigma_tau.
    """
    poly = characteristic_polynomial(domain)
    products = twisted_products(poly, n)
    signs = tuple(class_signs) if class_signs is not None else resolve_class_signs(domain, n % 2)
    totals = {}
    for cls, sign in zip(TWIST_CLASSES, signs):
        combined = sum(
            ((-1) ** (sigma * cls[0] + tau * cls[1]) * value for (sigma, tau), value in products.items()),
            Fraction(0),
        )
        totals[cls] = sign * combined / 4
    negative = [cls for cls, value in totals.items() if value < 0]
    if negative:
        raise MalformedSpec(f"Class signs {signs} give negative weight to classes {negative}.")
    total = sum(totals.values(), Fraction(0))
    logger.debug("Torus %dx%d of %s: Z = %s", n, n, domain.name or "domain", total)
    return TorusPartition(n=n, products=products, class_signs=signs, class_totals=totals, total=total)


def class_sign(hx: int, hy: int, n: int) -> int:
    """(-1)**(q + n (hx + hy)) with q = gcd(hx, hy); the zero class counts as q = 0."""
    q = math.gcd(hx, hy)
    return -1 if (q + n * (hx + hy)) % 2 else 1


def _honeycomb_weights(domain: BipartiteGraph) -> dict[str, Fraction]:
    if domain.lattice != "honeycomb" or domain.n_white != 1:
        raise MalformedSpec("Height-change distributions are computed for the one-vertex honeycomb domain.")
    weights = {}
    for edge in domain.edges:
        weights[edge.label] = edge.weight
    if set(weights) != {"a", "b", "c"}:
        raise MalformedSpec("The honeycomb domain needs edges labelled a, b and c.")
    return weights


def height_change_distribution(domain: BipartiteGraph, n: int) -> dict[tuple[int, int], int]:
    """Number of covers of the honeycomb n x n torus with height change (hx, hy).

    Z_00 with a = 1 is a polynomial in B = b**n and C = c**n, namely the
    resultant in u of u**n - B and (1 + u)**n - (-1)**n C; the coefficient of
    B**hx C**hy is class_sign(hx, hy, n) times the count.
    """
    _honeycomb_weights(domain)
    if n < 1:
        raise MalformedSpec("The torus size must be a positive integer.")
    u, big_b, big_c = sp.symbols("u B C")
    res = sp.resultant(u**n - big_b, (1 + u) ** n - (-1) ** n * big_c, u)
    poly = sp.Poly(sp.expand(res), big_b, big_c)
    counts = {}
    for (hx, hy), coefficient in poly.terms():
        count = int(coefficient) * class_sign(hx, hy, n)
        if count < 0:
            raise MalformedSpec(f"Negative count {count} at height change ({hx}, {hy}).")
        if count:
            counts[(int(hx), int(hy))] = count
    return dict(sorted(counts.items()))


def distribution_mass(domain: BipartiteGraph, n: int, counts: Mapping[tuple[int, int], int]) -> dict[tuple[int, int], Fraction]:
    """Weighted mass a**(n(n-hx-hy)) b**(n hx) c**(n hy) * C of each height-change class."""
    weights = _honeycomb_weights(domain)
    a, b, c = weights["a"], weights["b"], weights["c"]
    return {
        (hx, hy): count * a ** (n * (n - hx - hy)) * b ** (n * hx) * c ** (n * hy)
        for (hx, hy), count in counts.items()
    }


@dataclass(frozen=True)
class DiscreteGaussianFit:
    centre: tuple[int, int]
    c0: float
    curvature: float
    r_squared: float


def fit_discrete_gaussian(counts: Mapping[tuple[int, int], int], radius: int = 1) -> DiscreteGaussianFit:
    """Least-squares fit log C(centre + (j, k)) = c0 - c (j^2 + j k + k^2) around the mode."""
    centre = max(counts, key=counts.get)
    rows, values = [], []
    for j in range(-radius, radius + 1):
        for k in range(-radius, radius + 1):
            key = (centre[0] + j, centre[1] + k)
            if counts.get(key, 0) > 0:
                rows.append((1.0, -(j * j + j * k + k * k)))
                values.append(math.log(counts[key]))
    if len(rows) < 3:
        raise InfeasibleInput("Too few classes around the mode to fit.")
    design, target = np.array(rows), np.array(values)
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    fitted = design @ coef
    spread = float(np.sum((target - target.mean()) ** 2))
    r_squared = 1.0 - float(np.sum((target - fitted) ** 2)) / spread if spread else 1.0
    return DiscreteGaussianFit(centre=centre, c0=float(coef[0]), curvature=float(coef[1]), r_squared=r_squared)


def magnetic_reweight(domain: BipartiteGraph, bx: float, by: float) -> BipartiteGraph:
    """Multiply each edge weight by exp(bx * crossing_x + by * crossing_y)."""
    _require_domain(domain)
    weights = [
        edge.weight * Fraction(math.exp(bx * edge.crossing[0] + by * edge.crossing[1]))
        for edge in domain.edges
    ]
    return domain.with_weights(weights)


@dataclass(frozen=True)
class ConditionedClass:
    hx: int
    hy: int
    mass: Fraction


def conditioned_class(domain: BipartiteGraph, n: int, s: float, t: float) -> ConditionedClass:
    """The height-change class (floor(n s), floor(n t)) targeting slope (s, t), with its probability."""
    if s < 0 or t < 0 or s + t > 1:
        raise InfeasibleInput("slope infeasible")
    hx, hy = math.floor(n * s), math.floor(n * t)
    counts = height_change_distribution(domain, n)
    masses = distribution_mass(domain, n, counts)
    total = sum(masses.values(), Fraction(0))
    return ConditionedClass(hx, hy, masses.get((hx, hy), Fraction(0)) / total)


def brute_force_distribution(domain: BipartiteGraph, n: int) -> dict[tuple[int, int], int]:
    return {winding: count for winding, (count, _) in torus_brute_force(domain, n).items()}


__all__ = [
    "ConditionedClass",
    "DiscreteGaussianFit",
    "TorusPartition",
    "brute_force_distribution",
    "characteristic_polynomial",
    "class_sign",
    "conditioned_class",
    "distribution_mass",
    "fit_discrete_gaussian",
    "height_change_distribution",
    "magnetic_reweight",
    "resolve_class_signs",
    "torus_partition",
    "twisted_kasteleyn",
    "twisted_product",
    "twisted_products",
]
