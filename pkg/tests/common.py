"""Polytope builders shared by the test modules."""

from __future__ import annotations

import numpy as np

from polytope_capacity.polytope import Polytope, from_halfspaces

SQUARE_HALFSPACES = [((1, 0), 1), ((0, 1), 1), ((-1, 0), 1), ((0, -1), 1)]
ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])  # J in R²


def square(half: float = 1.0) -> Polytope:
    return from_halfspaces([(n, half) for n, _ in SQUARE_HALFSPACES], 2)


def triangle_p1() -> Polytope:
    """{x >= -1, y <= 1, x <= y}."""
    return from_halfspaces([((-1, 0), 1), ((0, 1), 1), ((1, -1), 0)], 2)


def triangle_p2() -> Polytope:
    """{x <= 1, y >= -1, x >= y}."""
    return from_halfspaces([((1, 0), 1), ((0, -1), 1), ((-1, 1), 0)], 2)


def triangle_centred() -> Polytope:
    """{x >= -1, y >= -1, x + y <= 1}; the origin is interior."""
    return from_halfspaces([((-1, 0), 1), ((0, -1), 1), ((1, 1), 1)], 2)


def slab(t: float, upper: bool = True) -> Polytope:
    """square ∩ {x >= t} (upper) or square ∩ {x <= t}."""
    cut = ((-1, 0), -t) if upper else ((1, 0), t)
    return from_halfspaces([*SQUARE_HALFSPACES, cut], 2)


def random_polygon(rng: np.random.Generator, n_facets: int) -> Polytope:
    """Random convex polygon around the origin with about ``n_facets`` sides."""
    gap = 2 * np.pi / n_facets
    angles = gap * np.arange(n_facets) + rng.uniform(-0.3, 0.3, n_facets) * gap
    angles += rng.uniform(0, 2 * np.pi)
    normals = np.column_stack([np.cos(angles), np.sin(angles)])
    heights = rng.uniform(0.6, 1.4, n_facets)
    return from_halfspaces(list(zip(normals, heights)), 2)


def admissible_line(
    rng: np.random.Generator, poly: Polytope
) -> tuple[np.ndarray, float]:
    """Non-horizontal line through an interior point of the q-axis."""
    lo, hi = _q_axis_span(poly)
    x = rng.uniform(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo))
    angle = rng.uniform(0.2, np.pi - 0.2)  # keeps the normal away from (0, ±1)
    normal = np.array([np.sin(angle), -np.cos(angle)])
    return normal, float(normal[0] * x)


def _q_axis_span(poly: Polytope) -> tuple[float, float]:
    lo, hi = -np.inf, np.inf
    for n, h in poly.facets:
        if abs(n[0]) < 1e-12:
            continue
        bound = h / n[0]
        if n[0] > 0:
            hi = min(hi, bound)
        else:
            lo = max(lo, bound)
    return lo, hi
