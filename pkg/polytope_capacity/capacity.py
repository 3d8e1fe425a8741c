"""Combinatorial capacity solvers: c_EHZ, c^Ψ_EHZ and c_LR of convex polytopes.

Each capacity is a min over permutations σ of the facets of 1/(2·max Q_σ)
(resp. 2/max D_σ for the Ψ case), where Q_σ(β) = Σ_{j<i} β_σ(i) β_σ(j)
ω₀(n_σ(i), n_σ(j)) is maximized over a polyhedron in β that does not depend
on σ. The polyhedron's face lattice is built once and every σ is evaluated
against it.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from itertools import islice, permutations as _all_permutations
from multiprocessing import Pool
from typing import Any

import numpy as np

from .config import DEFAULT_CONFIG, SolverConfig
from .const import (
    KIND_EHZ,
    KIND_LR,
    KIND_PSI,
    MODE_EXACT,
    MODE_RANDOM,
    TIE_TOL,
    TRANSLATE_NONE,
)
from .exceptions import (
    BudgetExceededError,
    HypothesisViolationError,
    InfeasibleError,
    InvalidDimensionError,
    InvalidPermutationError,
    NoInteriorPointError,
    ValidationError,
)
from .polytope import AffineSubspace, Polytope, cut, interior_point, translate
from .qp import FaceLattice
from .symplectic import (
    CoisotropicFrame,
    Subspace,
    SymplecticMatrix,
    apply_j,
    fixed_decomposition,
    omega_matrix,
    standard_j,
    validate_symplectic,
)

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CapacityResult:
    """Capacity value with its optimal certificate.

    ``beta`` and ``heights`` refer to the polytope translated by
    ``translation`` (x ↦ x − translation).
    """

    kind: str
    value: float
    sigma: tuple[int, ...]
    beta: np.ndarray
    v: np.ndarray
    objective: float
    mode: str
    translation: np.ndarray
    heights: np.ndarray
    omega_sign: int = 1
    evaluated: int = 0
    seed: int = 0
    workers: int = 1
    frame: tuple[int, int] | None = None

    def traversal_order(self) -> tuple[int, ...]:
        """Facet order along the minimizing path under the configured ω₀ sign."""
        return self.sigma if self.omega_sign > 0 else self.sigma[::-1]


# ──────────────────────── objective assembly ───────────────────────────


def _check_sigma(sigma: Sequence[int], n_facets: int) -> np.ndarray:
    arr = np.asarray(sigma, dtype=int)
    if arr.shape != (n_facets,) or sorted(arr.tolist()) != list(range(n_facets)):
        raise InvalidPermutationError(
            f"{list(sigma)} is not a permutation of 0..{n_facets - 1}"
        )
    return arr


def _order_mask(perms: np.ndarray) -> np.ndarray:
    """mask[b, a, c] is true iff facet a comes after facet c in perms[b]."""
    pos = np.argsort(perms, axis=1)
    return pos[:, :, None] > pos[:, None, :]


def objective_matrix(
    poly: Polytope, sigma: Sequence[int], *, sign: int = 1
) -> np.ndarray:
    """U_σ with βᵀU_σβ = Σ_{j<i} β_σ(i) β_σ(j) ω₀(n_σ(i), n_σ(j))."""
    perm = _check_sigma(sigma, poly.n_facets)
    omega = omega_matrix(poly.normals, sign=sign)
    return omega * _order_mask(perm[None])[0]


def permutations(
    n_facets: int,
    mode: str = MODE_EXACT,
    budget: int = 0,
    seed: int = 0,
    *,
    config: SolverConfig = DEFAULT_CONFIG,
) -> Iterator[tuple[int, ...]]:
    if n_facets < 2:
        raise ValidationError("need at least two facets")
    if mode == MODE_EXACT:
        if n_facets > config.exact_cap:
            raise BudgetExceededError(
                f"{n_facets} facets exceed the exact-mode cap {config.exact_cap}; "
                "use --mode random with --perm-budget"
            )
        yield from _all_permutations(range(n_facets))
        return
    if mode != MODE_RANDOM:
        raise ValidationError(f"unknown search mode {mode!r}")
    rng = np.random.default_rng(seed)
    for _ in range(budget):
        yield tuple(int(i) for i in rng.permutation(n_facets))


# ───────────────────────────── search ──────────────────────────────────


@dataclass(frozen=True, eq=False)
class _Best:
    value: float
    sigma: tuple[int, ...]
    beta: np.ndarray


def _better(a: _Best | None, b: _Best | None) -> _Best | None:
    """Associative max: larger value, ties go to the smaller σ."""
    if a is None:
        return b
    if b is None:
        return a
    tol = TIE_TOL * max(1.0, abs(a.value), abs(b.value))
    if abs(a.value - b.value) <= tol:
        return a if a.sigma <= b.sigma else b
    return a if a.value > b.value else b


@dataclass(frozen=True, eq=False)
class InnerProblem:
    """Permutation-independent part of a capacity formula.

    For σ the objective matrix is ``factor * (omega ∘ order_σ) + constant``.
    """

    lattice: FaceLattice
    omega: np.ndarray
    constant: np.ndarray
    factor: float
    pos_tol: float

    def chunk_length(self, config: SolverConfig) -> int:
        """Permutations per chunk, capped so a chunk stays within ``chunk_cells``."""
        m = self.omega.shape[0]
        per_objective = max(1, self.lattice.n_candidates) * m * m
        return max(1, min(config.chunk_size, config.chunk_cells // per_objective))

    def objectives(self, perms: np.ndarray) -> np.ndarray:
        return self.factor * self.omega[None] * _order_mask(perms) + self.constant[None]

    def evaluate(self, perms: np.ndarray) -> _Best | None:
        values, betas = self.lattice.maximize_many(self.objectives(perms))
        best: _Best | None = None
        for i in np.flatnonzero(values > self.pos_tol):
            best = _better(
                best, _Best(float(values[i]), tuple(int(s) for s in perms[i]), betas[i])
            )
        return best


_WORKER_PROBLEM: InnerProblem | None = None


def _init_worker(problem: InnerProblem) -> None:
    global _WORKER_PROBLEM
    _WORKER_PROBLEM = problem


def _evaluate_chunk(perms: np.ndarray) -> _Best | None:
    assert _WORKER_PROBLEM is not None
    return _WORKER_PROBLEM.evaluate(perms)


def _chunks(stream: Iterable[tuple[int, ...]], size: int) -> Iterator[np.ndarray]:
    it = iter(stream)
    while chunk := list(islice(it, size)):
        yield np.array(chunk, dtype=int)


def search(
    problem: InnerProblem,
    stream: Iterable[tuple[int, ...]],
    *,
    config: SolverConfig = DEFAULT_CONFIG,
) -> tuple[_Best | None, int]:
    """Reduce the permutation stream to its best σ; returns (best, evaluated).

    Chunk boundaries depend only on the problem and the config, and chunks are
    reduced in stream order, so the result does not depend on the worker count.
    """
    counted = 0
    size = problem.chunk_length(config)

    def counting() -> Iterator[np.ndarray]:
        nonlocal counted
        for chunk in _chunks(stream, size):
            counted += len(chunk)
            yield chunk

    best: _Best | None = None
    if config.workers > 1:
        with Pool(
            processes=config.workers, initializer=_init_worker, initargs=(problem,)
        ) as pool:
            for part in pool.imap(_evaluate_chunk, counting()):
                best = _better(best, part)
    else:
        for chunk in counting():
            best = _better(best, problem.evaluate(chunk))
    return best, counted


# ─────────────────────────── preparation ───────────────────────────────


@dataclass(frozen=True, eq=False)
class PreparedProblem:
    """Translated polytope plus the inner problem for one capacity kind."""

    kind: str
    translated: Polytope
    translation: np.ndarray
    inner: InnerProblem
    v_map: np.ndarray  # β ↦ v
    frame: tuple[int, int] | None = None

    def value_from_objective(self, objective: float) -> float:
        return 2.0 / objective if self.kind == KIND_PSI else 1.0 / (2.0 * objective)


def _translation(
    poly: Polytope,
    affine: AffineSubspace | None,
    clause: str,
    config: SolverConfig,
) -> np.ndarray:
    if config.translate == TRANSLATE_NONE:
        if np.any(poly.heights <= config.feas_tol):
            raise HypothesisViolationError(
                f"{clause} (translation disabled and the origin is not interior)"
            )
        return np.zeros(poly.dim)
    try:
        return interior_point(poly, affine, config=config)
    except NoInteriorPointError as err:
        raise HypothesisViolationError(f"{clause}: {err}") from err


def _inner(
    translated: Polytope,
    rows: np.ndarray,
    constant: np.ndarray | None,
    factor: float,
    config: SolverConfig,
) -> InnerProblem:
    a_eq = np.vstack([translated.heights[None], rows])
    b_eq = np.r_[1.0, np.zeros(len(rows))]
    lattice = FaceLattice(a_eq, b_eq, config=config)
    if not lattice.feasible:
        raise InfeasibleError("the weight polytope of the capacity formula is empty")
    f = translated.n_facets
    return InnerProblem(
        lattice=lattice,
        omega=omega_matrix(translated.normals, sign=config.omega_sign),
        constant=np.zeros((f, f)) if constant is None else constant,
        factor=factor,
        pos_tol=config.pos_tol,
    )


def prepare_ehz(poly: Polytope, *, config: SolverConfig = DEFAULT_CONFIG) -> PreparedProblem:
    p = _translation(poly, None, "the polytope has no interior point", config)
    hat = translate(poly, p)
    inner = _inner(hat, hat.normals.T, None, 1.0, config)
    return PreparedProblem(KIND_EHZ, hat, p, inner, np.zeros((poly.dim, poly.n_facets)))


def prepare_psi(
    poly: Polytope, psi: SymplecticMatrix, *, config: SolverConfig = DEFAULT_CONFIG
) -> PreparedProblem:
    if psi.dim != poly.dim:
        raise InvalidDimensionError(f"Ψ is {psi.dim}-dimensional, polytope {poly.dim}")
    dec = fixed_decomposition(psi, config=config)
    p = _translation(
        poly,
        AffineSubspace.linear(dec.kernel_basis),
        "no fixed point of Ψ interior to K",
        config,
    )
    hat = translate(poly, p)
    c_mat = 2.0 * apply_j(hat.normals).T  # columns 2J n_i
    v_map = dec.pseudo_inverse() @ c_mat
    # endpoint term ⟨Ψv, Jv⟩ of the action; the same under either ω₀ sign
    constant = v_map.T @ psi.matrix.T @ standard_j(poly.dim) @ v_map
    inner = _inner(hat, dec.cokernel_basis.T @ c_mat, constant, 4.0, config)
    return PreparedProblem(KIND_PSI, hat, p, inner, v_map)


def prepare_lr(
    poly: Polytope, n: int, k: int, *, config: SolverConfig = DEFAULT_CONFIG
) -> PreparedProblem:
    frame = CoisotropicFrame(n, k)
    if poly.dim != frame.dim:
        raise InvalidDimensionError(f"polytope is {poly.dim}-dimensional, need {frame.dim}")
    p = _translation(
        poly,
        AffineSubspace.coordinate(frame.indices(Subspace.R), frame.dim),
        f"K ∩ R^{{{n},{k}}} has no interior point",
        config,
    )
    hat = translate(poly, p)
    rows = frame.selector(Subspace.V0) @ apply_j(hat.normals).T
    inner = _inner(hat, rows, None, 1.0, config)
    return PreparedProblem(
        KIND_LR, hat, p, inner, np.zeros((poly.dim, poly.n_facets)), frame=(n, k)
    )


def solve(prepared: PreparedProblem, *, config: SolverConfig = DEFAULT_CONFIG) -> CapacityResult:
    """Run the permutation search on a prepared problem."""
    f = prepared.translated.n_facets
    stream = permutations(f, config.mode, config.perm_budget, config.seed, config=config)
    started = time.monotonic()
    best, evaluated = search(prepared.inner, stream, config=config)
    if best is None:
        raise InfeasibleError("no permutation admits a positive objective")
    value = prepared.value_from_objective(best.value)
    _LOGGER.info(
        "%s capacity %.12g (%d permutations, %d workers, %.2fs)",
        prepared.kind,
        value,
        evaluated,
        config.workers,
        time.monotonic() - started,
    )
    return CapacityResult(
        kind=prepared.kind,
        value=value,
        sigma=best.sigma,
        beta=best.beta,
        v=prepared.v_map @ best.beta,
        objective=best.value,
        mode=config.mode,
        translation=prepared.translation,
        heights=prepared.translated.heights,
        omega_sign=config.omega_sign,
        evaluated=evaluated,
        seed=config.seed,
        workers=config.workers,
        frame=prepared.frame,
    )


# ───────────────────────────── solvers ─────────────────────────────────


def ehz(poly: Polytope, *, config: SolverConfig = DEFAULT_CONFIG) -> CapacityResult:
    return solve(prepare_ehz(poly, config=config), config=config)


def psi_ehz(
    poly: Polytope, psi: SymplecticMatrix | Any, *, config: SolverConfig = DEFAULT_CONFIG
) -> CapacityResult:
    if not isinstance(psi, SymplecticMatrix):
        psi = validate_symplectic(psi, config=config)
    return solve(prepare_psi(poly, psi, config=config), config=config)


def lr(poly: Polytope, n: int, k: int, *, config: SolverConfig = DEFAULT_CONFIG) -> CapacityResult:
    return solve(prepare_lr(poly, n, k, config=config), config=config)


# ─────────────────────────── cut experiments ───────────────────────────


@dataclass(frozen=True, eq=False)
class CutReport:
    capacity: str
    normal: np.ndarray
    offset: float
    whole: CapacityResult
    lower: CapacityResult  # part with ⟨x, normal⟩ <= offset
    upper: CapacityResult
    margin: float
    expected_sign: int  # +1: c(D) >= c(D1)+c(D2); -1: the reverse

    def holds(self, tol: float = 1e-8) -> bool:
        return self.expected_sign * self.margin >= -tol


@dataclass(frozen=True)
class SkippedCut:
    offset: float
    reason: str


def _check_cut_hypotheses(
    poly: Polytope, a: np.ndarray, c: float, config: SolverConfig
) -> None:
    tol = config.feas_tol
    if abs(a[0]) <= tol:
        if abs(c) <= tol:
            raise HypothesisViolationError("the cut line coincides with the q-axis")
        raise HypothesisViolationError("the cut line does not meet the q-axis inside K")
    crossing = np.array([c / a[0], 0.0])
    if not poly.contains(crossing, tol):
        raise HypothesisViolationError("the cut line does not meet the q-axis inside K")


def cut_experiment(
    poly: Polytope,
    normal: Sequence[float],
    offset: float,
    *,
    capacity: str = KIND_LR,
    config: SolverConfig = DEFAULT_CONFIG,
) -> CutReport:
    """Capacities of a planar domain and of the two parts of a line cut.

    For c_LR the margin c(D) − c(D1) − c(D2) is expected to be >= 0; for c_EHZ
    the classical subadditivity makes it <= 0.
    """
    if poly.dim != 2:
        raise InvalidDimensionError("cut experiments are planar")
    if capacity not in (KIND_LR, KIND_EHZ):
        raise ValidationError(f"cut experiments support lr or ehz, not {capacity!r}")
    a = np.asarray(normal, dtype=float)
    norm = float(np.linalg.norm(a))
    if a.shape != (2,) or norm == 0.0:
        raise ValidationError("cut normal must be a nonzero planar vector")
    a, c = a / norm, float(offset) / norm

    def run(part: Polytope, name: str) -> CapacityResult:
        if capacity == KIND_EHZ:
            return ehz(part, config=config)
        try:
            return lr(part, 1, 0, config=config)
        except HypothesisViolationError as err:
            raise HypothesisViolationError(
                f"the {name} part has no interior q-axis point ({err})"
            ) from err

    if capacity == KIND_LR:
        _check_cut_hypotheses(poly, a, c, config)
    lower_poly, upper_poly = cut(poly, a, c, config=config)
    whole = run(poly, "whole")
    lower = run(lower_poly, "lower")
    upper = run(upper_poly, "upper")
    margin = whole.value - lower.value - upper.value
    _LOGGER.debug("cut %s·x = %.6g: margin %.3e", a, c, margin)
    return CutReport(
        capacity=capacity,
        normal=a,
        offset=c,
        whole=whole,
        lower=lower,
        upper=upper,
        margin=margin,
        expected_sign=1 if capacity == KIND_LR else -1,
    )


def cut_sweep(
    poly: Polytope,
    normal: Sequence[float],
    offsets: Iterable[float],
    *,
    capacity: str = KIND_LR,
    config: SolverConfig = DEFAULT_CONFIG,
) -> list[CutReport | SkippedCut]:
    """cut_experiment over parallel lines; failing offsets are skipped."""
    reports: list[CutReport | SkippedCut] = []
    for t in offsets:
        try:
            reports.append(
                cut_experiment(poly, normal, t, capacity=capacity, config=config)
            )
        except HypothesisViolationError as err:
            _LOGGER.warning("skipping offset %s: %s", t, err)
            reports.append(SkippedCut(float(t), str(err)))
    return reports
