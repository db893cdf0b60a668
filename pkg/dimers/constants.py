from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

REGION_SCHEMA_VERSION = 1

PHASE_FROZEN = "frozen"
PHASE_LIQUID = "liquid"
PHASE_GAS = "gas"
PHASES: tuple[str, ...] = (PHASE_FROZEN, PHASE_LIQUID, PHASE_GAS)


@dataclass(frozen=True)
class Lattice:
    key: str
    name: str
    summary: str
    height_scale: int
    aliases: tuple[str, ...]


LATTICES: tuple[Lattice, ...] = (
    Lattice(
        key="square",
        name="Square grid",
        summary="Domino tilings; cells are the vertices of Z^2, white when i+j is even.",
        height_scale=4,
        aliases=("domino", "dominoes", "z2", "square grid"),
    ),
    Lattice(
        key="honeycomb",
        name="Honeycomb",
        summary="Lozenge tilings; cells are the triangles of the triangular lattice.",
        height_scale=3,
        aliases=("hexagonal", "lozenge", "lozenges", "triangular"),
    ),
    Lattice(
        key="custom",
        name="Custom graph",
        summary="Explicit vertices and edges with optional phases and periodicity.",
        height_scale=1,
        aliases=("graph", "explicit"),
    ),
)


def normalize_lattice_key(raw: str | None) -> str:
    token = " ".join((raw or "").strip().lower().replace("_", " ").replace("-", " ").split())
    for lattice in LATTICES:
        if token in (lattice.key, lattice.name.lower()):
            return lattice.key
        if token in lattice.aliases:
            return lattice.key
    return ""


def lattice_by_key(key: str | None) -> Lattice | None:
    normalized = normalize_lattice_key(key)
    for lattice in LATTICES:
        if lattice.key == normalized:
            return lattice
    return None


def iter_lattices() -> Iterable[Lattice]:
    return LATTICES


# Twist classes in the order (sigma, tau) = (0,0), (1,0), (0,1), (1,1).
TWIST_CLASSES: tuple[tuple[int, int], ...] = ((0, 0), (1, 0), (0, 1), (1, 1))

# Determinant sign of each seam-winding class mod 2 (TWIST_CLASSES order) for the built-in
# domains, keyed by (domain name, n mod 2).  torus.resolve_class_signs recomputes them.
TORUS_CLASS_SIGNS: dict[tuple[str, int], tuple[int, int, int, int]] = {
    ("honeycomb-1", 1): (1, 1, 1, -1),
    ("honeycomb-1", 0): (1, -1, -1, -1),
    ("square-1", 0): (1, -1, -1, -1),
    ("square-1", 1): (1, 1, 1, -1),
}
