"""Convex polytopes in R^{2n} in dual representation.

A ``Polytope`` carries unit outer facet normals n_i with heights h_i (so that
K = {x : ⟨x, n_i⟩ <= h_i}) together with its vertex list.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from itertools import combinations, islice
from math import comb
from pathlib import Path
from typing import Any

import numpy as np
import voluptuous as vol
from scipy.optimize import linprog

from .config import DEFAULT_CONFIG, SolverConfig
from .const import NORMAL_TOL
from .exceptions import (
    BudgetExceededError,
    DegenerateCutError,
    InvalidDimensionError,
    NoInteriorPointError,
    PreconditionError,
    ValidationError,
)

_LOGGER = logging.getLogger(__name__)

_SUBSET_CHUNK = 50_000
_MAX_SUBSETS = 5_000_000

_VECTOR = [vol.Coerce(float)]

HALFSPACE_SCHEMA = vol.Schema(
    {
        vol.Required("dim"): vol.All(int, vol.Range(min=2)),
        vol.Required("halfspaces"): [
            {vol.Required("normal"): _VECTOR, vol.Required("offset"): vol.Coerce(float)}
        ],
    }
)
VERTEX_SCHEMA = vol.Schema(
    {
        vol.Required("dim"): vol.All(int, vol.Range(min=2)),
        vol.Required("vertices"): [_VECTOR],
    }
)
POLYTOPE_SCHEMA = vol.Any(HALFSPACE_SCHEMA, VERTEX_SCHEMA)


@dataclass(frozen=True, eq=False)
class Polytope:
    normals: np.ndarray  # (F, 2n), unit rows
    heights: np.ndarray  # (F,)
    vertices: np.ndarray  # (V, 2n)

    def __post_init__(self) -> None:
        for arr in (self.normals, self.heights, self.vertices):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.normals.shape[1])

    @property
    def n(self) -> int:
        return self.dim // 2

    @property
    def n_facets(self) -> int:
        return int(self.normals.shape[0])

    @property
    def facets(self) -> list[tuple[np.ndarray, float]]:
        return [(nv, float(h)) for nv, h in zip(self.normals, self.heights)]

    def halfspaces(self) -> list[tuple[np.ndarray, float]]:
        return self.facets

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(self.normals @ np.asarray(x, dtype=float) <= self.heights + tol))

    def __repr__(self) -> str:
        return f"Polytope(dim={self.dim}, facets={self.n_facets}, vertices={len(self.vertices)})"


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    """{origin + basis @ y}; ``basis`` columns need not be orthonormal."""

    origin: np.ndarray
    basis: np.ndarray  # (2n, k)

    @classmethod
    def linear(cls, basis: np.ndarray) -> AffineSubspace:
        basis = np.asarray(basis, dtype=float)
        return cls(np.zeros(basis.shape[0]), basis)

    @classmethod
    def coordinate(cls, indices: Iterable[int], dim: int) -> AffineSubspace:
        return cls.linear(np.eye(dim)[:, list(indices)])


# ───────────────────────────── helpers ─────────────────────────────────


def _check_dim(dim: int, config: SolverConfig) -> None:
    if dim <= 0 or dim % 2:
        raise InvalidDimensionError(f"ambient dimension must be even, got {dim}")
    if dim > config.max_dim:
        raise BudgetExceededError(f"dimension {dim} exceeds cap {config.max_dim}")


def _affine_rank(points: np.ndarray, tol: float = 1e-9) -> int:
    if len(points) < 2:
        return 0
    diffs = points[1:] - points[0]
    scale = max(1.0, float(np.max(np.abs(diffs))))
    return int(np.linalg.matrix_rank(diffs, tol=tol * scale))


def _unique_rows(rows: np.ndarray, tol: float) -> np.ndarray:
    """Greedy tolerance dedup, returned in lexicographic order."""
    if len(rows) == 0:
        return rows
    order = np.lexsort(rows.T[::-1])
    kept: list[np.ndarray] = []
    for row in rows[order]:
        if not any(np.max(np.abs(row - k)) <= tol for k in kept):
            kept.append(row)
    return np.array(kept)


def _subset_chunks(m: int, size: int) -> Iterator[np.ndarray]:
    it = combinations(range(m), size)
    while chunk := list(islice(it, _SUBSET_CHUNK)):
        yield np.array(chunk, dtype=int)


def _normalize(a: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(a, axis=1)
    if np.any(norms <= NORMAL_TOL):
        raise ValidationError("halfspace with zero normal")
    return a / norms[:, None], c / norms


def _check_bounded(a: np.ndarray, c: np.ndarray) -> None:
    dim = a.shape[1]
    for j in range(dim):
        for sign in (1.0, -1.0):
            obj = np.zeros(dim)
            obj[j] = -sign
            res = linprog(obj, A_ub=a, b_ub=c, bounds=[(None, None)] * dim, method="highs")
            if res.status == 2:
                raise ValidationError("halfspace system is empty")
            if res.status == 3:
                raise ValidationError("halfspace system is unbounded")


def _enumerate_vertices(
    a: np.ndarray, c: np.ndarray, config: SolverConfig
) -> np.ndarray:
    """Solve every dim-subset of facet equalities and keep feasible points."""
    m, dim = a.shape
    found: list[np.ndarray] = []
    slack_tol = config.feas_tol * (1.0 + np.abs(c))
    for idx in _subset_chunks(m, dim):
        mats = a[idx]
        ok = np.abs(np.linalg.det(mats)) > NORMAL_TOL
        if not np.any(ok):
            continue
        pts = np.linalg.solve(mats[ok], c[idx[ok]][..., None])[..., 0]
        feasible = np.all(pts @ a.T <= c + slack_tol, axis=1)
        found.append(pts[feasible])
    if not found:
        return np.empty((0, dim))
    return _unique_rows(np.concatenate(found), config.dedup_tol)


def _finalize(
    a: np.ndarray, c: np.ndarray, vertices: np.ndarray, config: SolverConfig
) -> Polytope:
    """Drop redundant/duplicate halfspaces and check the dual invariants."""
    dim = a.shape[1]
    if len(vertices) == 0 or _affine_rank(vertices) < dim:
        raise ValidationError("polytope is lower-dimensional or empty")
    keep: list[int] = []
    for i in range(len(a)):
        active = vertices[np.abs(vertices @ a[i] - c[i]) <= config.feas_tol * (1 + abs(c[i]))]
        if _affine_rank(active) != dim - 1:
            continue
        if any(
            np.max(np.abs(a[i] - a[j])) <= config.dedup_tol
            and abs(c[i] - c[j]) <= config.dedup_tol
            for j in keep
        ):
            continue
        keep.append(i)
    dropped = len(a) - len(keep)
    if dropped:
        _LOGGER.debug("dropped %d redundant or duplicate halfspaces", dropped)
    normals, heights = a[keep].copy(), c[keep].copy()
    if np.any(vertices @ normals.T > heights + config.feas_tol * (1 + np.abs(heights))):
        raise ValidationError("vertex violates a facet inequality")
    return Polytope(normals, heights, vertices.copy())


# ─────────────────────────── constructors ──────────────────────────────


def from_halfspaces(
    raw: Iterable[tuple[Sequence[float], float]],
    dim: int,
    *,
    config: SolverConfig = DEFAULT_CONFIG,
) -> Polytope:
    """Build a polytope from halfspaces ⟨x, a⟩ <= c."""
    _check_dim(dim, config)
    pairs = list(raw)
    try:
        a = np.array([np.asarray(nv, dtype=float) for nv, _ in pairs], dtype=float)
        c = np.array([float(off) for _, off in pairs])
    except ValueError as err:
        raise InvalidDimensionError(f"ragged halfspace normals: {err}") from err
    if a.ndim != 2 or a.shape[1] != dim:
        raise InvalidDimensionError(f"halfspace normals must have size {dim}")
    if len(a) < dim + 1:
        raise ValidationError(f"need at least {dim + 1} halfspaces, got {len(a)}")
    if len(a) > config.max_facets:
        raise BudgetExceededError(
            f"{len(a)} halfspaces exceed the enumeration cap {config.max_facets}"
        )
    a, c = _normalize(a, c)
    _check_bounded(a, c)
    vertices = _enumerate_vertices(a, c, config)
    poly = _finalize(a, c, vertices, config)
    _LOGGER.debug("from_halfspaces: %s", poly)
    return poly


def from_vertices(
    points: Iterable[Sequence[float]],
    dim: int,
    *,
    config: SolverConfig = DEFAULT_CONFIG,
) -> Polytope:
    """Convex hull of ``points`` by enumerating hyperplanes through dim-subsets."""
    _check_dim(dim, config)
    pts = np.array([np.asarray(p, dtype=float) for p in points], dtype=float)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise InvalidDimensionError(f"points must have size {dim}")
    pts = _unique_rows(pts, config.dedup_tol)
    if len(pts) < dim + 1 or _affine_rank(pts) < dim:
        raise ValidationError("points do not span the ambient space affinely")
    if comb(len(pts), dim) > _MAX_SUBSETS:
        raise BudgetExceededError(f"too many points ({len(pts)}) for subset enumeration")

    scale = max(1.0, float(np.max(np.abs(pts))))
    side_tol = config.feas_tol * scale
    normals: list[np.ndarray] = []
    heights: list[np.ndarray] = []
    for idx in _subset_chunks(len(pts), dim):
        sub = pts[idx]
        diffs = sub[:, 1:] - sub[:, :1]
        _, s, vt = np.linalg.svd(diffs)
        ok = s[:, -1] > NORMAL_TOL * scale
        nv = vt[ok, -1]
        off = np.einsum("bi,bi->b", nv, sub[ok, 0])
        side = pts @ nv.T - off
        below = np.all(side <= side_tol, axis=0)
        above = np.all(side >= -side_tol, axis=0)
        normals += [nv[below], -nv[above]]
        heights += [off[below], -off[above]]
    a = np.concatenate(normals)
    c = np.concatenate(heights)
    facets = _unique_rows(np.column_stack([a, c]), config.dedup_tol)
    a, c = facets[:, :dim], facets[:, dim]

    # points on the boundary but not extreme are dropped
    active = np.abs(pts @ a.T - c) <= side_tol
    extreme = [
        i
        for i in range(len(pts))
        if active[i].sum() >= dim
        and np.linalg.matrix_rank(a[active[i]], tol=1e-9) == dim
    ]
    poly = _finalize(a, c, pts[extreme], config)
    _LOGGER.debug("from_vertices: %s", poly)
    return poly


def load_polytope(
    source: str | Path | Mapping[str, Any], *, config: SolverConfig = DEFAULT_CONFIG
) -> Polytope:
    """Read the halfspace or vertex JSON form."""
    if isinstance(source, Mapping):
        data = source
    else:
        data = json.loads(Path(source).read_text(encoding="utf-8"))
    try:
        data = POLYTOPE_SCHEMA(data)
    except vol.Invalid as err:
        raise ValidationError(f"malformed polytope file: {err}") from err
    if "halfspaces" in data:
        raw = [(h["normal"], h["offset"]) for h in data["halfspaces"]]
        return from_halfspaces(raw, data["dim"], config=config)
    return from_vertices(data["vertices"], data["dim"], config=config)


def to_json(poly: Polytope) -> dict[str, Any]:
    return {
        "dim": poly.dim,
        "halfspaces": [
            {"normal": nv.tolist(), "offset": float(h)} for nv, h in poly.facets
        ],
    }


# ──────────────────────────── queries ──────────────────────────────────


def support(poly: Polytope, y: np.ndarray) -> float:
    """h_K(y) = max over vertices of ⟨x, y⟩."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != poly.dim:
        raise InvalidDimensionError(f"expected vectors of size {poly.dim}")
    return float(np.max(poly.vertices @ y))


def legendre_dual(
    poly: Polytope, w: np.ndarray, *, config: SolverConfig = DEFAULT_CONFIG
) -> float:
    """H*_K(w) = h_K(w)² / 4; requires 0 ∈ Int(K)."""
    if np.any(poly.heights <= config.feas_tol):
        raise PreconditionError("origin is not interior to the polytope")
    return support(poly, w) ** 2 / 4.0


# ────────────────────────── transformations ────────────────────────────


def translate(poly: Polytope, p: np.ndarray) -> Polytope:
    """Image of the polytope under x ↦ x − p."""
    p = np.asarray(p, dtype=float)
    if p.shape != (poly.dim,):
        raise InvalidDimensionError(f"expected vector of size {poly.dim}")
    return Polytope(poly.normals.copy(), poly.heights - poly.normals @ p, poly.vertices - p)


def scale(poly: Polytope, lam: float) -> Polytope:
    if lam <= 0:
        raise PreconditionError(f"scale factor must be positive, got {lam}")
    return Polytope(poly.normals.copy(), lam * poly.heights, lam * poly.vertices)


def linear_image(
    poly: Polytope, m: np.ndarray, *, config: SolverConfig = DEFAULT_CONFIG
) -> Polytope:
    m = np.asarray(m, dtype=float)
    if m.shape != (poly.dim, poly.dim):
        raise InvalidDimensionError(f"expected a {poly.dim}×{poly.dim} matrix")
    s = np.linalg.svd(m, compute_uv=False)
    if s[-1] <= NORMAL_TOL * max(1.0, float(s[0])):
        raise PreconditionError("linear map is singular")
    return from_vertices(poly.vertices @ m.T, poly.dim, config=config)


def cut(
    poly: Polytope,
    normal: Sequence[float],
    offset: float,
    *,
    config: SolverConfig = DEFAULT_CONFIG,
) -> tuple[Polytope, Polytope]:
    """Split along ⟨x, normal⟩ = offset into the (<=, >=) parts."""
    a = np.asarray(normal, dtype=float)
    if a.shape != (poly.dim,):
        raise InvalidDimensionError(f"cut normal must have size {poly.dim}")
    norm = float(np.linalg.norm(a))
    if norm <= NORMAL_TOL:
        raise ValidationError("cut normal is zero")
    a, c = a / norm, float(offset) / norm
    vals = poly.vertices @ a
    tol = config.feas_tol * (1.0 + abs(c))
    if not (vals.min() < c - tol and vals.max() > c + tol):
        raise DegenerateCutError("cut hyperplane does not meet the interior")
    base = poly.halfspaces()
    lower = from_halfspaces([*base, (a, c)], poly.dim, config=config)
    upper = from_halfspaces([*base, (-a, -c)], poly.dim, config=config)
    return lower, upper


def _lift(dim_p: int, dim_q: int) -> tuple[np.ndarray, np.ndarray]:
    """Column positions of P's and Q's coordinates in the product."""
    m, l = dim_p // 2, dim_q // 2
    pos_p = np.r_[np.arange(m), m + l + np.arange(m)]
    pos_q = np.r_[m + np.arange(l), 2 * m + l + np.arange(l)]
    return pos_p, pos_q


def product(p: Polytope, q: Polytope) -> Polytope:
    """P × Q with coordinates ordered (q_P, q_Q, p_P, p_Q)."""
    if not isinstance(p, Polytope) or not isinstance(q, Polytope):
        raise ValidationError("product needs two validated polytopes")
    pos_p, pos_q = _lift(p.dim, q.dim)
    dim = p.dim + q.dim
    normals = np.zeros((p.n_facets + q.n_facets, dim))
    normals[: p.n_facets, pos_p] = p.normals
    normals[p.n_facets :, pos_q] = q.normals
    heights = np.concatenate([p.heights, q.heights])
    vp = np.zeros((len(p.vertices), dim))
    vp[:, pos_p] = p.vertices
    vq = np.zeros((len(q.vertices), dim))
    vq[:, pos_q] = q.vertices
    vertices = (vp[:, None, :] + vq[None, :, :]).reshape(-1, dim)
    return Polytope(normals, heights, vertices)


# ─────────────────────────── interior point ────────────────────────────


def interior_point(
    poly: Polytope,
    affine: AffineSubspace | None = None,
    *,
    config: SolverConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """Deepest point of the polytope inside ``affine``.

    Maximizes the slack s in ⟨x, n_i⟩ + s <= h_i over x in the subspace, then
    picks the lexicographically smallest optimal coordinates.
    """
    if affine is None:
        affine = AffineSubspace.linear(np.eye(poly.dim))
    x0 = np.asarray(affine.origin, dtype=float)
    basis = np.asarray(affine.basis, dtype=float)
    if basis.ndim != 2 or basis.shape[0] != poly.dim:
        raise InvalidDimensionError(f"subspace basis must have {poly.dim} rows")
    k = basis.shape[1]
    nb = poly.normals @ basis
    rhs = poly.heights - poly.normals @ x0
    ones = np.ones((poly.n_facets, 1))

    obj = np.zeros(k + 1)
    obj[-1] = -1.0
    res = linprog(
        obj, A_ub=np.hstack([nb, ones]), b_ub=rhs, bounds=[(None, None)] * (k + 1),
        method="highs",
    )
    if res.status != 0:
        raise NoInteriorPointError(f"interior-point LP failed: {res.message}")
    slack = -float(res.fun)
    if slack <= config.feas_tol:
        raise NoInteriorPointError(
            f"subspace misses the interior of the polytope (slack {slack:.3e})"
        )
    y = np.asarray(res.x[:k], dtype=float)

    # lexicographic refinement over the optimal face
    floor = slack - config.feas_tol * max(1.0, slack)
    fixed: list[int] = []
    for j in range(k):
        obj = np.zeros(k)
        obj[j] = 1.0
        a_eq = np.eye(k)[fixed] if fixed else None
        b_eq = y[fixed] if fixed else None
        step = linprog(
            obj, A_ub=nb, b_ub=rhs - floor, A_eq=a_eq, b_eq=b_eq,
            bounds=[(None, None)] * k, method="highs",
        )
        if step.status != 0:
            break
        y = np.asarray(step.x, dtype=float)
        fixed.append(j)
    point = x0 + basis @ y
    _LOGGER.debug("interior point %s with slack %.6g", point, slack)
    return point
