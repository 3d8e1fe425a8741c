"""Global maximization of an indefinite quadratic form over {β >= 0, Aβ = b}.

The feasible set does not depend on the objective, so its faces are prepared
once in a ``FaceLattice``; each objective is then maximized by collecting the
relative-interior stationary point of every face (minimum-norm solution on
singular faces) plus every vertex, and keeping the best candidate.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from .config import DEFAULT_CONFIG, SolverConfig
from .const import DEFAULT_ASCENT_RESTARTS, DEFAULT_ASCENT_STEPS, TIE_TOL
from .exceptions import (
    BudgetExceededError,
    Infeasible,
    InvalidDimensionError,
    ValidationError,
)

_LOGGER = logging.getLogger(__name__)

_PINV_RCOND = 1e-10


@dataclass(frozen=True, eq=False)
class QuadMaxProblem:
    """Maximize q(β) = βᵀUβ over {β >= 0, a_eq β = b_eq}."""

    u: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray

    def __post_init__(self) -> None:
        m = self.u.shape[0]
        if self.u.shape != (m, m):
            raise InvalidDimensionError(f"U must be square, got {self.u.shape}")
        if self.a_eq.ndim != 2 or self.a_eq.shape[1] != m:
            raise InvalidDimensionError("A_eq column count must match U")
        if self.b_eq.shape != (self.a_eq.shape[0],):
            raise InvalidDimensionError("b_eq length must match A_eq rows")

    @classmethod
    def build(cls, u: object, a_eq: object, b_eq: object) -> QuadMaxProblem:
        return cls(
            np.atleast_2d(np.asarray(u, dtype=float)),
            np.atleast_2d(np.asarray(a_eq, dtype=float)),
            np.atleast_1d(np.asarray(b_eq, dtype=float)),
        )

    @property
    def m(self) -> int:
        return int(self.u.shape[0])

    def value(self, beta: np.ndarray) -> float:
        return float(beta @ self.u @ beta)


@dataclass(frozen=True, eq=False)
class QuadMaxResult:
    value: float
    argmax: np.ndarray
    active_set: tuple[int, ...]  # coordinates pinned at zero


@dataclass(frozen=True, eq=False)
class _FaceGroup:
    """Faces sharing (free-set size, null-space dimension), stacked."""

    free: np.ndarray  # (g, f)
    origin: np.ndarray  # (g, f)
    null: np.ndarray  # (g, f, k)


def _check_bounded(a_eq: np.ndarray) -> None:
    """The recession cone {β >= 0, Aβ = 0} must be {0}."""
    m = a_eq.shape[1]
    res = linprog(
        np.zeros(m),
        A_eq=np.vstack([a_eq, np.ones((1, m))]),
        b_eq=np.r_[np.zeros(a_eq.shape[0]), 1.0],
        bounds=[(0, None)] * m,
        method="highs",
    )
    if res.status == 0:
        raise ValidationError("quadratic program has an unbounded feasible set")


class FaceLattice:
    """All faces of {β >= 0, a_eq β = b_eq}, ready for repeated maximization."""

    def __init__(
        self, a_eq: np.ndarray, b_eq: np.ndarray, *, config: SolverConfig = DEFAULT_CONFIG
    ) -> None:
        a_eq = np.atleast_2d(np.asarray(a_eq, dtype=float))
        b_eq = np.atleast_1d(np.asarray(b_eq, dtype=float))
        m = a_eq.shape[1]
        if 2**m - 1 > config.face_budget:
            raise BudgetExceededError(
                f"{m} variables give {2**m - 1} faces, over budget {config.face_budget}"
            )
        _check_bounded(a_eq)
        self.m = m
        self.feas_tol = config.feas_tol
        tol = config.feas_tol * (1.0 + float(np.linalg.norm(b_eq)))

        vertices: list[np.ndarray] = []
        stacks: dict[tuple[int, int], list[tuple[tuple[int, ...], np.ndarray, np.ndarray]]]
        stacks = defaultdict(list)
        for size in range(m, 0, -1):
            for free in combinations(range(m), size):
                sub = a_eq[:, free]
                x0, *_ = np.linalg.lstsq(sub, b_eq, rcond=None)
                if np.linalg.norm(sub @ x0 - b_eq) > tol:
                    continue  # empty affine hull
                basis = null_space(sub, rcond=_PINV_RCOND)
                if basis.shape[1] == 0:
                    if x0.min() >= -config.feas_tol:
                        point = np.zeros(m)
                        point[list(free)] = np.maximum(x0, 0.0)
                        vertices.append(point)
                    continue
                stacks[(size, basis.shape[1])].append((free, x0, basis))

        self.groups = [
            _FaceGroup(
                free=np.array([f for f, _, _ in faces], dtype=int),
                origin=np.array([x for _, x, _ in faces]),
                null=np.array([n for _, _, n in faces]),
            )
            for _, faces in sorted(stacks.items(), reverse=True)
        ]
        self.vertices = _dedup(vertices, config.dedup_tol, m)
        _LOGGER.debug(
            "face lattice: %d variables, %d vertices, %d face groups",
            m,
            len(self.vertices),
            len(self.groups),
        )

    @property
    def feasible(self) -> bool:
        return len(self.vertices) > 0

    @property
    def n_candidates(self) -> int:
        """Candidate points per objective: vertices plus one per face."""
        return len(self.vertices) + sum(len(grp.free) for grp in self.groups)

    def _candidates(self, us: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Candidate points (b, c, m) and their values (b, c) for each U."""
        n_obj = us.shape[0]
        h = us + np.swapaxes(us, 1, 2)
        points = [np.broadcast_to(self.vertices, (n_obj, *self.vertices.shape))]
        valid = [np.ones((n_obj, len(self.vertices)), dtype=bool)]
        for grp in self.groups:
            free = grp.free
            hff = h[:, free[:, :, None], free[:, None, :]]
            hr = np.einsum("gfk,bgfe,gel->bgkl", grp.null, hff, grp.null)
            gr = np.einsum("gfk,bgfe,ge->bgk", grp.null, hff, grp.origin)
            y = -np.einsum("bgkl,bgl->bgk", np.linalg.pinv(hr, rcond=_PINV_RCOND), gr)
            resid = np.linalg.norm(np.einsum("bgkl,bgl->bgk", hr, y) + gr, axis=-1)
            stationary = resid <= self.feas_tol * (1.0 + np.linalg.norm(gr, axis=-1))
            beta_f = grp.origin + np.einsum("gfk,bgk->bgf", grp.null, y)
            ok = stationary & (beta_f.min(axis=-1) >= -self.feas_tol)
            full = np.zeros((n_obj, len(free), self.m))
            rows = np.arange(len(free))[:, None]
            full[:, rows, free] = np.maximum(beta_f, 0.0)
            points.append(full)
            valid.append(ok)
        cand = np.concatenate(points, axis=1)
        mask = np.concatenate(valid, axis=1)
        values = np.einsum("bci,bij,bcj->bc", cand, us, cand)
        values = np.where(mask, values, -np.inf)
        return cand, values

    def maximize_many(self, us: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Best value and argmax for a stack of objective matrices (b, m, m).

        Ties within TIE_TOL resolve to the lexicographically smallest β.
        """
        if not self.feasible:
            raise ValidationError("maximize_many called on an empty feasible set")
        cand, values = self._candidates(np.asarray(us, dtype=float))
        best = values.max(axis=1)
        mask = values >= (best - TIE_TOL * np.maximum(1.0, np.abs(best)))[:, None]
        for j in range(self.m):
            coord = np.where(mask, cand[:, :, j], np.inf)
            low = coord.min(axis=1)
            mask &= coord <= (low + TIE_TOL)[:, None]
        pick = mask.argmax(axis=1)
        argmax = cand[np.arange(len(cand)), pick]
        return values[np.arange(len(cand)), pick], argmax

    def maximize(self, u: np.ndarray) -> QuadMaxResult | Infeasible:
        if not self.feasible:
            return Infeasible("feasible set is empty")
        value, argmax = self.maximize_many(np.asarray(u, dtype=float)[None])
        beta = argmax[0]
        return QuadMaxResult(
            value=float(value[0]),
            argmax=beta,
            active_set=tuple(int(i) for i in np.flatnonzero(beta == 0.0)),
        )


def _dedup(points: list[np.ndarray], tol: float, m: int) -> np.ndarray:
    kept: list[np.ndarray] = []
    for p in points:
        if not any(np.max(np.abs(p - k)) <= tol for k in kept):
            kept.append(p)
    if not kept:
        return np.empty((0, m))
    arr = np.array(kept)
    return arr[np.lexsort(arr.T[::-1])]


# ───────────────────────────── entry points ────────────────────────────


def enumerate_vertices(
    prob: QuadMaxProblem, *, config: SolverConfig = DEFAULT_CONFIG
) -> list[np.ndarray]:
    lattice = FaceLattice(prob.a_eq, prob.b_eq, config=config)
    return list(lattice.vertices)


def maximize(
    prob: QuadMaxProblem, *, config: SolverConfig = DEFAULT_CONFIG
) -> QuadMaxResult | Infeasible:
    return FaceLattice(prob.a_eq, prob.b_eq, config=config).maximize(prob.u)


def project_simplex(points: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    srt = -np.sort(-points, axis=-1)
    css = np.cumsum(srt, axis=-1) - 1.0
    idx = np.arange(1, points.shape[-1] + 1)
    cond = srt - css / idx > 0
    rho = points.shape[-1] - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1)
    return np.maximum(points - theta, 0.0)


def multistart_ascent(
    prob: QuadMaxProblem,
    restarts: int = DEFAULT_ASCENT_RESTARTS,
    seed: int = 0,
    *,
    steps: int = DEFAULT_ASCENT_STEPS,
    config: SolverConfig = DEFAULT_CONFIG,
) -> float | Infeasible:
    """Best local maximum of projected-gradient ascent from random starts.

    Points are parametrized as convex combinations of the feasible vertices,
    so every iterate stays feasible.
    """
    vertices = FaceLattice(prob.a_eq, prob.b_eq, config=config).vertices
    if len(vertices) == 0:
        return Infeasible("feasible set is empty")
    gram = vertices @ prob.u @ vertices.T
    sym = gram + gram.T
    lipschitz = float(np.linalg.norm(sym, 2))
    rng = np.random.default_rng(seed)
    lam = rng.dirichlet(np.ones(len(vertices)), size=restarts)
    if lipschitz > 0:
        step = 1.0 / lipschitz
        for _ in range(steps):
            lam = project_simplex(lam + step * lam @ sym.T)
    values = np.einsum("ri,ij,rj->r", lam, gram, lam)
    return float(values.max())
