"""Independent oracles used to cross-check the exact solvers."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from .capacity import (
    InnerProblem,
    PreparedProblem,
    prepare_ehz,
    prepare_lr,
    prepare_psi,
)
from .config import DEFAULT_CONFIG, SolverConfig
from .const import DEFAULT_ORACLE_SAMPLES, KIND_EHZ, KIND_LR, KIND_PSI
from .exceptions import (
    HypothesisViolationError,
    Infeasible,
    InfeasibleError,
    InvalidDimensionError,
    NoInteriorPointError,
    ValidationError,
)
from .polytope import AffineSubspace, Polytope, cut, interior_point
from .symplectic import SymplecticMatrix, validate_symplectic

_LOGGER = logging.getLogger(__name__)

_BATCH = 4096


def _require_planar(poly: Polytope) -> None:
    if poly.dim != 2:
        raise InvalidDimensionError(f"planar oracle called on dimension {poly.dim}")


def polygon_area(poly: Polytope) -> float:
    """Shoelace area of the vertices ordered by angle around their centroid."""
    _require_planar(poly)
    pts = poly.vertices
    centered = pts - pts.mean(axis=0)
    ordered = pts[np.argsort(np.arctan2(centered[:, 1], centered[:, 0]))]
    x, y = ordered[:, 0], ordered[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def ehz_oracle_2d(poly: Polytope) -> float:
    return polygon_area(poly)


def lr_oracle(poly: Polytope, *, config: SolverConfig = DEFAULT_CONFIG) -> float:
    """min(Area(K ∩ {p >= 0}), Area(K ∩ {p <= 0}))."""
    _require_planar(poly)
    try:
        interior_point(poly, AffineSubspace.coordinate([0], 2), config=config)
    except NoInteriorPointError as err:
        raise HypothesisViolationError(f"K has no interior q-axis point: {err}") from err
    below, above = cut(poly, (0.0, 1.0), 0.0, config=config)
    return min(polygon_area(below), polygon_area(above))


# ─────────────────────────── dense search ──────────────────────────────


@dataclass(frozen=True)
class DenseSearchResult:
    kind: str
    value: float  # best inner objective found
    capacity_bound: float  # capacity implied by ``value``; an upper bound
    samples: int
    seed: int
    workers: int


def _sample_block(args: tuple[InnerProblem, int, np.random.SeedSequence]) -> float:
    inner, count, seq = args
    rng = np.random.default_rng(seq)
    vertices = inner.lattice.vertices
    n_vert, n_facets = vertices.shape
    best = -np.inf
    remaining = count
    while remaining > 0:
        size = min(_BATCH, remaining)
        remaining -= size
        perms = rng.permuted(np.tile(np.arange(n_facets), (size, 1)), axis=1)
        # random face of the vertex simplex, then uniform weights on it
        support = rng.integers(1, n_vert + 1, size=size)
        ranks = np.argsort(np.argsort(rng.random((size, n_vert)), axis=1), axis=1)
        weights = rng.exponential(size=(size, n_vert)) * (ranks < support[:, None])
        lam = weights / weights.sum(axis=1, keepdims=True)
        beta = lam @ vertices
        values = np.einsum("bi,bij,bj->b", beta, inner.objectives(perms), beta)
        best = max(best, float(values.max()))
    return best


def _prepare(
    poly: Polytope,
    mode: str,
    psi: SymplecticMatrix | None,
    k: int,
    config: SolverConfig,
) -> PreparedProblem:
    if mode == KIND_EHZ:
        return prepare_ehz(poly, config=config)
    if mode == KIND_PSI:
        if psi is None:
            raise ValidationError("psi mode needs a symplectic matrix")
        if not isinstance(psi, SymplecticMatrix):
            psi = validate_symplectic(psi, config=config)
        return prepare_psi(poly, psi, config=config)
    if mode == KIND_LR:
        return prepare_lr(poly, poly.n, k, config=config)
    raise ValidationError(f"unknown dense-search mode {mode!r}")


def dense_search(
    poly: Polytope,
    mode: str,
    samples: int = DEFAULT_ORACLE_SAMPLES,
    seed: int = 0,
    *,
    psi: SymplecticMatrix | None = None,
    k: int = 0,
    workers: int = 1,
    config: SolverConfig = DEFAULT_CONFIG,
) -> DenseSearchResult | Infeasible:
    """Random (σ, β) search; its value never exceeds the exact inner maximum.

    β is drawn uniformly from a random face of the simplex spanned by the
    feasible vertices. Each worker draws from its own spawned seed stream.
    """
    try:
        prepared = _prepare(poly, mode, psi, k, config)
    except InfeasibleError as err:
        return Infeasible(str(err))
    inner = prepared.inner
    seqs = np.random.SeedSequence(seed).spawn(workers)
    counts = [samples // workers + (1 if i < samples % workers else 0) for i in range(workers)]
    jobs = list(zip([inner] * workers, counts, seqs))
    if workers > 1:
        with Pool(processes=workers) as pool:
            bests = pool.map(_sample_block, jobs)
    else:
        bests = [_sample_block(job) for job in jobs]
    value = max(bests)
    _LOGGER.debug("dense search %s: best objective %.12g over %d samples", mode, value, samples)
    bound = prepared.value_from_objective(value) if value > 0 else np.inf
    return DenseSearchResult(
        kind=mode,
        value=value,
        capacity_bound=float(bound),
        samples=samples,
        seed=seed,
        workers=workers,
    )
