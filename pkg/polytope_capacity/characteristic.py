"""Minimizing paths behind a capacity value.

A ``CapacityResult`` determines a piecewise affine path on the boundary of the
polytope: one segment per facet with positive weight, of duration β_i·h_i and
velocity (2T/h_i)·J n_i. This module rebuilds that path, computes its action
in closed form, and checks it against the boundary condition, the facets and
the capacity value.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Union

import numpy as np
import voluptuous as vol

from .capacity import CapacityResult
from .config import DEFAULT_CONFIG, SolverConfig
from .const import KIND_LR, KIND_PSI, SCHEMA_VERSION
from .exceptions import (
    InvalidDimensionError,
    PreconditionError,
    ReconstructionError,
    ValidationError,
)
from .polytope import Polytope, legendre_dual, translate
from .symplectic import (
    CoisotropicFrame,
    Subspace,
    SymplecticMatrix,
    apply_j,
    fixed_decomposition,
    validate_symplectic,
)

_LOGGER = logging.getLogger(__name__)


# ───────────────────────── boundary conditions ─────────────────────────


@dataclass(frozen=True)
class Closed:
    """z(1) = z(0)."""


@dataclass(frozen=True, eq=False)
class PsiTwisted:
    """z(1) = Ψ z(0)."""

    psi: SymplecticMatrix


@dataclass(frozen=True)
class Leafwise:
    """z(0), z(1) ∈ R^{n,k} and z(1) − z(0) ∈ V_0^{n,k}."""

    n: int
    k: int

    @property
    def frame(self) -> CoisotropicFrame:
        return CoisotropicFrame(self.n, self.k)


Boundary = Union[Closed, PsiTwisted, Leafwise]


# ─────────────────────────────── paths ─────────────────────────────────


@dataclass(frozen=True, eq=False)
class PiecewiseAffinePath:
    start: np.ndarray
    lengths: np.ndarray  # |I_i|, summing to 1
    velocities: np.ndarray  # (m, 2n)
    facets: tuple[int, ...]  # facet label per segment
    total_time: float
    origin: np.ndarray | None  # solver translation; None when not recorded

    @property
    def breakpoints(self) -> np.ndarray:
        return np.r_[0.0, np.cumsum(self.lengths)]

    @property
    def displacements(self) -> np.ndarray:
        return self.lengths[:, None] * self.velocities

    def points(self) -> np.ndarray:
        """z at every breakpoint, shape (m + 1, 2n)."""
        steps = np.vstack([np.zeros((1, len(self.start))), self.displacements])
        return self.start + np.cumsum(steps, axis=0)

    @property
    def end(self) -> np.ndarray:
        return self.start + self.displacements.sum(axis=0)

    def at(self, t: float) -> np.ndarray:
        """z(t) for t in [0, 1]."""
        taus = self.breakpoints
        pts = self.points()
        i = int(np.clip(np.searchsorted(taus, t, side="right") - 1, 0, len(self.lengths) - 1))
        return pts[i] + (t - taus[i]) * self.velocities[i]


def action(path: PiecewiseAffinePath) -> float:
    """½∫⟨−Jż, z⟩dt in closed form.

    Equals ½[Σ_{j<i} |I_i||I_j| ω₀(w_i, w_j) + ω₀(z(1), z(0))] with
    ω₀(u, v) = ⟨u, Jv⟩.
    """
    if len(path.lengths) == 0:
        return 0.0
    d = path.displacements
    before = np.cumsum(d, axis=0) - d
    cross = float(np.einsum("si,si->", d, apply_j(before)))
    endpoint = float(path.end @ apply_j(path.start))
    return 0.5 * (cross + endpoint)


# ─────────────────────────── reconstruction ────────────────────────────


def _anchor_space(
    result: CapacityResult, boundary: Boundary, dim: int, config: SolverConfig
) -> tuple[np.ndarray, np.ndarray]:
    """(base, basis): the start point ranges over base + span(basis)."""
    if isinstance(boundary, Closed):
        return np.zeros(dim), np.eye(dim)
    if isinstance(boundary, PsiTwisted):
        dec = fixed_decomposition(boundary.psi, config=config)
        return result.value * result.v, dec.kernel_basis
    if isinstance(boundary, Leafwise):
        return np.zeros(dim), boundary.frame.basis(Subspace.R)
    raise ValidationError(f"unknown boundary condition {boundary!r}")


def reconstruct(
    poly: Polytope,
    result: CapacityResult,
    boundary: Boundary,
    *,
    config: SolverConfig = DEFAULT_CONFIG,
) -> PiecewiseAffinePath:
    heights = result.heights
    total = result.value
    segments = [
        i for i in result.traversal_order() if result.beta[i] * heights[i] > config.pos_tol
    ]
    if not segments:
        raise ReconstructionError("certificate has no facet with positive weight")
    idx = np.array(segments, dtype=int)
    normals = poly.normals[idx]
    lengths = result.beta[idx] * heights[idx]
    velocities = (2.0 * total / heights[idx])[:, None] * apply_j(normals)
    d = lengths[:, None] * velocities
    before = np.cumsum(d, axis=0) - d

    base, basis = _anchor_space(result, boundary, poly.dim, config)
    rhs = heights[idx] - np.einsum("si,si->s", normals, base + before)
    lhs = normals @ basis
    if basis.shape[1]:
        coeffs, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    else:
        coeffs = np.zeros(0)
    residual = float(np.max(np.abs(lhs @ coeffs - rhs)))
    limit = config.reconstruct_tol * max(1.0, float(np.max(np.abs(heights))))
    if residual > limit:
        raise ReconstructionError(
            f"facet anchoring residual {residual:.3e} exceeds {limit:.1e}"
        )
    if residual > 0.01 * limit:
        _LOGGER.warning("facet anchoring residual %.3e is close to threshold", residual)
    start = base + basis @ coeffs + result.translation
    return PiecewiseAffinePath(
        start=start,
        lengths=lengths,
        velocities=velocities,
        facets=tuple(segments),
        total_time=total,
        origin=np.asarray(result.translation, dtype=float).copy(),
    )


def boundary_for(result: CapacityResult, psi: SymplecticMatrix | None = None) -> Boundary:
    """The boundary condition matching the solver that produced ``result``."""
    if result.kind == KIND_PSI:
        if psi is None:
            raise ValidationError("Ψ is required to rebuild a Ψ-characteristic")
        return PsiTwisted(psi)
    if result.kind == KIND_LR:
        assert result.frame is not None
        return Leafwise(*result.frame)
    return Closed()


# ──────────────────────────── verification ─────────────────────────────


@dataclass(frozen=True)
class VerificationReport:
    boundary_residual: float
    facet_residual: float
    containment_violation: float
    action: float
    action_error: float  # relative
    hstar_sum: float | None  # None when no interior centre is known
    hstar_error: float | None  # relative
    facets_unique: bool

    def passed(self, boundary_tol: float = 1e-8, rel_tol: float = 1e-8) -> bool:
        return (
            self.boundary_residual <= boundary_tol
            and self.facet_residual <= boundary_tol
            and self.containment_violation <= boundary_tol
            and self.action_error <= rel_tol
            and (self.hstar_error is None or self.hstar_error <= rel_tol)
            and self.facets_unique
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "boundary_residual": self.boundary_residual,
            "facet_residual": self.facet_residual,
            "containment_violation": self.containment_violation,
            "action": self.action,
            "action_error": self.action_error,
            "hstar_sum": self.hstar_sum,
            "hstar_error": self.hstar_error,
            "facets_unique": self.facets_unique,
        }


def _boundary_residual(path: PiecewiseAffinePath, boundary: Boundary) -> float:
    z0, z1 = path.start, path.end
    if isinstance(boundary, Closed):
        return float(np.linalg.norm(z1 - z0))
    if isinstance(boundary, PsiTwisted):
        return float(np.linalg.norm(z1 - boundary.psi.matrix @ z0))
    frame = boundary.frame
    off_r = frame.complement(Subspace.R)
    off_v0 = frame.complement(Subspace.V0)
    return float(
        max(
            np.linalg.norm(z0[off_r]),
            np.linalg.norm(z1[off_r]),
            np.linalg.norm((z1 - z0)[off_v0]),
        )
    )


def _segment_centre(path: PiecewiseAffinePath, poly: Polytope) -> np.ndarray | None:
    """Translation implied by the segment speeds |w_i| = 2T / (h_i − ⟨n_i, p⟩)."""
    speeds = np.linalg.norm(path.velocities, axis=1)
    keep = speeds > 0.0
    if not keep.any():
        return None
    idx = np.array(path.facets, dtype=int)[keep]
    rhs = poly.heights[idx] - 2.0 * path.total_time / speeds[keep]
    centre, *_ = np.linalg.lstsq(poly.normals[idx], rhs, rcond=None)
    return centre


def _hstar_sum(
    path: PiecewiseAffinePath, poly: Polytope, config: SolverConfig
) -> float | None:
    """Σ|I_i|·H*(−Jw_i/√T) about the path's centre, or None without one."""
    if len(path.lengths) == 0:
        return 0.0
    centre = path.origin if path.origin is not None else _segment_centre(path, poly)
    if centre is None:
        return None
    hat = translate(poly, centre)
    root = np.sqrt(path.total_time)
    try:
        return float(
            sum(
                length * legendre_dual(hat, -apply_j(w) / root, config=config)
                for length, w in zip(path.lengths, path.velocities)
            )
        )
    except PreconditionError as err:
        _LOGGER.warning("H* sum not computable: %s", err)
        return None


def verify(
    path: PiecewiseAffinePath,
    poly: Polytope,
    boundary: Boundary,
    expected_value: float,
    *,
    config: SolverConfig = DEFAULT_CONFIG,
) -> VerificationReport:
    if len(path.start) != poly.dim:
        raise InvalidDimensionError("path and polytope dimensions differ")
    idx = np.array(path.facets, dtype=int)
    if len(idx) and (idx.max() >= poly.n_facets):
        raise ValidationError(f"facet label {int(idx.max())} not in the polytope")
    pts = path.points()
    if len(idx):
        n_seg = poly.normals[idx]
        h_seg = poly.heights[idx]
        at_start = np.abs(np.einsum("si,si->s", pts[:-1], n_seg) - h_seg)
        at_end = np.abs(np.einsum("si,si->s", pts[1:], n_seg) - h_seg)
        facet_residual = float(max(at_start.max(), at_end.max()))
    else:
        facet_residual = 0.0
    containment = float(max(0.0, np.max(pts @ poly.normals.T - poly.heights)))

    value = action(path)
    scale = max(abs(expected_value), np.finfo(float).tiny)

    hstar = _hstar_sum(path, poly, config)
    return VerificationReport(
        boundary_residual=_boundary_residual(path, boundary),
        facet_residual=facet_residual,
        containment_violation=containment,
        action=value,
        action_error=abs(value - expected_value) / scale,
        hstar_sum=hstar,
        hstar_error=None if hstar is None else abs(hstar - expected_value) / scale,
        facets_unique=len(set(path.facets)) == len(path.facets),
    )


# ──────────────────────────── path JSON ────────────────────────────────

_BOUNDARY_SCHEMA = vol.Any(
    vol.Schema({vol.Required("kind"): "closed"}),
    vol.Schema({vol.Required("kind"): "psi", vol.Required("rows"): [[vol.Coerce(float)]]}),
    vol.Schema(
        {
            vol.Required("kind"): "leaf",
            vol.Required("n"): vol.All(int, vol.Range(min=1)),
            vol.Required("k"): vol.All(int, vol.Range(min=0)),
        }
    ),
)

PATH_SCHEMA = vol.Schema(
    {
        vol.Optional("schema"): SCHEMA_VERSION,
        vol.Required("total_time"): vol.Coerce(float),
        vol.Required("start"): [vol.Coerce(float)],
        vol.Optional("origin"): [vol.Coerce(float)],
        vol.Optional("boundary"): _BOUNDARY_SCHEMA,
        vol.Required("segments"): [
            {
                vol.Required("length"): vol.All(vol.Coerce(float), vol.Range(min=0.0)),
                vol.Required("velocity"): [vol.Coerce(float)],
                vol.Required("facet"): vol.All(int, vol.Range(min=0)),
            }
        ],
    }
)


def _boundary_to_json(boundary: Boundary) -> dict[str, Any]:
    if isinstance(boundary, PsiTwisted):
        return {"kind": "psi", "rows": boundary.psi.matrix.tolist()}
    if isinstance(boundary, Leafwise):
        return {"kind": "leaf", "n": boundary.n, "k": boundary.k}
    return {"kind": "closed"}


def path_to_json(path: PiecewiseAffinePath, boundary: Boundary) -> dict[str, Any]:
    data: dict[str, Any] = {
        "schema": SCHEMA_VERSION,
        "total_time": float(path.total_time),
        "start": path.start.tolist(),
        "boundary": _boundary_to_json(boundary),
        "segments": [
            {"length": float(length), "velocity": w.tolist(), "facet": int(f)}
            for length, w, f in zip(path.lengths, path.velocities, path.facets)
        ],
    }
    if path.origin is not None:
        data["origin"] = path.origin.tolist()
    return data


def path_from_json(
    source: str | Path | Mapping[str, Any], *, config: SolverConfig = DEFAULT_CONFIG
) -> tuple[PiecewiseAffinePath, Boundary]:
    """Parse a path certificate; a missing boundary means a closed path."""
    if isinstance(source, Mapping):
        data = source
    else:
        data = json.loads(Path(source).read_text(encoding="utf-8"))
    try:
        data = PATH_SCHEMA(data)
    except vol.Invalid as err:
        raise ValidationError(f"malformed path file: {err}") from err
    dim = len(data["start"])
    segs = data["segments"]
    if any(len(s["velocity"]) != dim for s in segs):
        raise InvalidDimensionError("segment velocity size differs from start")
    origin = np.asarray(data["origin"], dtype=float) if "origin" in data else None
    if origin is not None and origin.shape != (dim,):
        raise InvalidDimensionError("origin size differs from start")
    path = PiecewiseAffinePath(
        start=np.asarray(data["start"], dtype=float),
        lengths=np.array([s["length"] for s in segs], dtype=float),
        velocities=np.array([s["velocity"] for s in segs], dtype=float).reshape(-1, dim),
        facets=tuple(s["facet"] for s in segs),
        total_time=data["total_time"],
        origin=origin,
    )
    raw = data.get("boundary", {"kind": "closed"})
    boundary: Boundary
    if raw["kind"] == "psi":
        boundary = PsiTwisted(validate_symplectic(raw["rows"], config=config))
    elif raw["kind"] == "leaf":
        boundary = Leafwise(raw["n"], raw["k"])
    else:
        boundary = Closed()
    return path, boundary
