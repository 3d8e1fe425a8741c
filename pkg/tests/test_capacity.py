"""Tests for the capacity solvers and the cut experiments."""

import numpy as np
import pytest

from polytope_capacity.capacity import (
    CutReport,
    SkippedCut,
    cut_experiment,
    cut_sweep,
    ehz,
    lr,
    objective_matrix,
    permutations,
    prepare_ehz,
    psi_ehz,
)
from polytope_capacity.config import DEFAULT_CONFIG, SolverConfig
from polytope_capacity.const import MODE_RANDOM
from polytope_capacity.exceptions import (
    BudgetExceededError,
    HypothesisViolationError,
    InvalidDimensionError,
    InvalidPermutationError,
)
from polytope_capacity.oracle2d import polygon_area
from polytope_capacity.polytope import cut, from_halfspaces, product, scale, translate
from polytope_capacity.symplectic import apply_j, standard_j
from tests.common import (
    admissible_line,
    random_polygon,
    slab,
    square,
    triangle_centred,
    triangle_p1,
    triangle_p2,
)

MINUS_I = -np.eye(2)


# ─────────────────────────── permutations ──────────────────────────────


def test_exact_permutations():
    perms = list(permutations(4))
    assert len(perms) == 24
    assert len(set(perms)) == 24
    assert perms[0] == (0, 1, 2, 3)


def test_random_permutations_reproducible():
    a = list(permutations(6, MODE_RANDOM, 30, seed=5))
    b = list(permutations(6, MODE_RANDOM, 30, seed=5))
    assert a == b
    assert len(a) == 30
    assert all(sorted(p) == list(range(6)) for p in a)


def test_exact_cap():
    with pytest.raises(BudgetExceededError, match="random"):
        list(permutations(9))


def test_objective_matrix_reversal(unit_square, rng):
    sigma = (2, 0, 3, 1)
    u = objective_matrix(unit_square, sigma)
    u_rev = objective_matrix(unit_square, sigma[::-1])
    for _ in range(5):
        beta = rng.uniform(0, 1, 4)
        assert beta @ u_rev @ beta == pytest.approx(-(beta @ u @ beta), abs=1e-12)


def test_objective_matrix_rejects_non_permutation(unit_square):
    with pytest.raises(InvalidPermutationError):
        objective_matrix(unit_square, (0, 1, 1, 3))


# ──────────────────────────── c_EHZ ────────────────────────────────────


def test_ehz_square(unit_square):
    res = ehz(unit_square)
    assert res.value == pytest.approx(4.0, abs=1e-9)
    assert res.sigma == (0, 1, 2, 3)
    assert np.allclose(res.beta, 0.25)
    assert res.objective == pytest.approx(0.125)
    assert res.evaluated == 24
    assert np.allclose(res.translation, 0.0, atol=1e-9)


def test_ehz_certificate_constraints(p1):
    res = ehz(p1)
    assert np.all(res.beta >= 0.0)
    assert res.beta @ res.heights == pytest.approx(1.0, abs=1e-9)
    normals = translate(p1, res.translation).normals
    assert np.allclose(res.beta @ normals, 0.0, atol=1e-9)


def test_ehz_equals_area_on_random_polygons(rng):
    for _ in range(20):
        poly = random_polygon(rng, int(rng.integers(4, 7)))
        assert ehz(poly).value == pytest.approx(polygon_area(poly), rel=1e-6)


@pytest.mark.slow
def test_ehz_equals_area_on_large_polygons(rng):
    for _ in range(5):
        poly = random_polygon(rng, int(rng.integers(7, 9)))
        assert ehz(poly).value == pytest.approx(polygon_area(poly), rel=1e-6)


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.0])
def test_ehz_scaling(p2, lam):
    base = ehz(p2).value
    assert ehz(scale(p2, lam)).value == pytest.approx(lam**2 * base, rel=1e-9)


def test_ehz_translation_invariant(p1):
    moved = translate(p1, np.array([0.4, -2.5]))
    assert ehz(moved).value == pytest.approx(ehz(p1).value, rel=1e-9)


def test_ehz_monotone_under_inclusion(rng):
    for _ in range(5):
        outer = random_polygon(rng, 5)
        inner, _ = cut(outer, (1.0, 0.3), 0.2)
        assert ehz(inner).value <= ehz(outer).value + 1e-9


def test_translation_disabled_needs_interior_origin(unit_square):
    moved = translate(unit_square, np.array([1.0, 0.0]))
    with pytest.raises(HypothesisViolationError):
        ehz(moved, config=SolverConfig(translate="none"))


def test_random_mode_bounds_exact(unit_square):
    exact = ehz(unit_square).value
    budgeted = ehz(unit_square, config=SolverConfig(mode="random", perm_budget=40, seed=3))
    assert budgeted.value >= exact - 1e-12
    assert budgeted.evaluated == 40


def test_workers_do_not_change_result(rng):
    poly = random_polygon(rng, 6)
    base = SolverConfig(chunk_size=50)
    one = ehz(poly, config=base)
    two = ehz(poly, config=base.with_options(workers=2))
    assert one.value == two.value
    assert one.sigma == two.sigma
    assert np.array_equal(one.beta, two.beta)
    assert one.evaluated == two.evaluated == 720


def test_chunk_length_bounded_by_cells():
    angles = 2 * np.pi * np.arange(12) / 12
    normals = np.column_stack([np.cos(angles), np.sin(angles)])
    poly = from_halfspaces([(n, 1.0) for n in normals], 2)
    inner = prepare_ehz(poly).inner
    m = poly.n_facets
    length = inner.chunk_length(DEFAULT_CONFIG)
    assert 1 <= length < DEFAULT_CONFIG.chunk_size
    assert length * inner.lattice.n_candidates * m * m <= DEFAULT_CONFIG.chunk_cells


def test_chunk_cells_do_not_change_result(rng):
    poly = random_polygon(rng, 6)
    base = ehz(poly)
    narrow = ehz(poly, config=SolverConfig(chunk_cells=1))
    assert narrow.value == pytest.approx(base.value, rel=1e-12)
    assert narrow.sigma == base.sigma
    assert np.allclose(narrow.beta, base.beta, atol=1e-12)
    assert narrow.evaluated == base.evaluated


@pytest.mark.slow
def test_ehz_four_dimensional_cube(unit_square):
    cube = product(unit_square, unit_square)
    one = ehz(cube)
    eight = ehz(cube, config=SolverConfig(workers=8))
    assert one.value == pytest.approx(4.0, rel=1e-9)
    assert one.value == eight.value
    assert one.sigma == eight.sigma
    assert np.array_equal(one.beta, eight.beta)


# ──────────────────────────── c^Ψ_EHZ ──────────────────────────────────


def test_psi_identity_reduces_to_ehz(rng):
    fixtures = [square(), triangle_p1(), triangle_p2(), slab(0.3), slab(-0.6, upper=False)]
    randoms = [random_polygon(rng, int(rng.integers(4, 7))) for _ in range(20)]
    for poly in fixtures + randoms:
        assert psi_ehz(poly, np.eye(2)).value == pytest.approx(ehz(poly).value, rel=1e-9)


def test_psi_translation_along_fixed_points(unit_square):
    shear = np.array([[1.0, 1.0], [0.0, 1.0]])  # fixes the q-axis
    moved = translate(unit_square, np.array([0.5, 0.0]))
    base = psi_ehz(unit_square, shear)
    assert psi_ehz(moved, shear).value == pytest.approx(base.value, rel=1e-9)


def test_psi_four_dimensional_twist():
    pair = product(triangle_centred(), triangle_centred())
    twist = np.diag([-1.0, 1.0, -1.0, 1.0])
    moved = translate(pair, np.array([0.0, 0.2, 0.0, -0.1]))
    base = psi_ehz(pair, twist)
    assert base.value > 0.0
    assert psi_ehz(moved, twist).value == pytest.approx(base.value, rel=1e-9)
    assert psi_ehz(scale(pair, 2.0), twist).value == pytest.approx(4.0 * base.value, rel=1e-9)


def test_psi_minus_identity(unit_square):
    res = psi_ehz(unit_square, MINUS_I)
    assert res.value == pytest.approx(2.0, abs=1e-9)
    assert np.all(res.beta >= 0.0)
    assert res.beta @ res.heights == pytest.approx(1.0, abs=1e-9)
    # Σ 2β_i J n_i = Ψv − v
    shift = 2.0 * res.beta @ apply_j(unit_square.normals)
    assert np.allclose(shift, (MINUS_I - np.eye(2)) @ res.v, atol=1e-9)


def test_psi_minus_identity_tie_break(unit_square):
    """Equal optima resolve to the lexicographically smallest β."""
    res = psi_ehz(unit_square, MINUS_I)
    assert np.allclose(res.beta, [0.0, 0.0, 0.5, 0.5])
    assert np.allclose(res.v, [-0.5, 0.5])


def test_psi_rotation(unit_square):
    res = psi_ehz(unit_square, standard_j(2))
    assert res.value == pytest.approx(1.0, abs=1e-9)
    assert res.value <= ehz(unit_square).value + 1e-9


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.0])
def test_psi_scaling(unit_square, lam):
    value = psi_ehz(scale(unit_square, lam), MINUS_I).value
    assert value == pytest.approx(2.0 * lam**2, rel=1e-9)


def test_psi_dimension_mismatch(unit_square):
    with pytest.raises(InvalidDimensionError):
        psi_ehz(unit_square, np.eye(4))


def test_psi_fixed_point_outside(unit_square):
    moved = translate(unit_square, np.array([3.0, 0.0]))
    with pytest.raises(HypothesisViolationError):
        psi_ehz(moved, MINUS_I)


# ───────────────────────────── c_LR ────────────────────────────────────


def test_lr_square(unit_square):
    res = lr(unit_square, 1, 0)
    assert res.value == pytest.approx(2.0, abs=1e-9)
    assert np.allclose(res.beta, [0.25, 0.5, 0.25, 0.0])
    assert res.frame == (1, 0)


@pytest.mark.parametrize("poly_fixture", ["p1", "p2"])
def test_lr_triangles(poly_fixture, request):
    poly = request.getfixturevalue(poly_fixture)
    assert lr(poly, 1, 0).value == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("t", [-0.6, 0.0, 0.3])
def test_lr_slabs(t):
    assert lr(slab(t, upper=True), 1, 0).value == pytest.approx(1.0 - t, abs=1e-6)
    assert lr(slab(t, upper=False), 1, 0).value == pytest.approx(1.0 + t, abs=1e-6)


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.0])
def test_lr_scaling(p1, lam):
    assert lr(scale(p1, lam), 1, 0).value == pytest.approx(0.5 * lam**2, rel=1e-9)


def test_lr_translation_along_q(p1):
    moved = translate(p1, np.array([0.7, 0.0]))
    assert lr(moved, 1, 0).value == pytest.approx(lr(p1, 1, 0).value, rel=1e-9)


def test_lr_needs_q_axis_interior(unit_square):
    lifted = translate(unit_square, np.array([0.0, -2.0]))
    with pytest.raises(HypothesisViolationError):
        lr(lifted, 1, 0)


def test_lr_frame_dimension(unit_square):
    with pytest.raises(InvalidDimensionError):
        lr(unit_square, 2, 0)


# ─────────────────────── ω₀ sign convention ────────────────────────────


FLIPPED = SolverConfig().flipped()
SOLVERS = {
    "ehz": lambda poly, config: ehz(poly, config=config),
    "lr": lambda poly, config: lr(poly, 1, 0, config=config),
    "psi-minus": lambda poly, config: psi_ehz(poly, MINUS_I, config=config),
    "psi-rot": lambda poly, config: psi_ehz(poly, standard_j(2), config=config),
}


@pytest.mark.parametrize("kind", sorted(SOLVERS))
def test_flipped_convention_keeps_values(kind, rng):
    polys = [random_polygon(rng, int(rng.integers(4, 6))) for _ in range(5)]
    polys.append(square())
    if not kind.startswith("psi"):
        polys += [triangle_p1(), triangle_p2(), slab(0.3), slab(-0.6, upper=False)]
    solve = SOLVERS[kind]
    for poly in polys:
        base = solve(poly, SolverConfig()).value
        assert solve(poly, FLIPPED).value == pytest.approx(base, rel=1e-12)
        assert solve(scale(poly, 2.0), FLIPPED).value == pytest.approx(4.0 * base, rel=1e-9)


def test_flipped_convention_keeps_cut_margins(unit_square):
    strict = cut_experiment(unit_square, (-1.0, 1.0), 0.0, config=FLIPPED)
    tight = cut_experiment(unit_square, (1.0, 0.0), 0.3, config=FLIPPED)
    assert strict.margin == pytest.approx(1.0, abs=1e-6)
    assert tight.margin == pytest.approx(0.0, abs=1e-6)


def test_flipped_convention_reverses_traversal(unit_square):
    res = ehz(unit_square, config=SolverConfig(omega_sign=-1))
    assert res.traversal_order() == res.sigma[::-1]


# ─────────────────────────── cut experiments ───────────────────────────


def test_cut_diagonal_strict(unit_square):
    rep = cut_experiment(unit_square, (-1.0, 1.0), 0.0)
    assert isinstance(rep, CutReport)
    assert rep.whole.value == pytest.approx(2.0, abs=1e-6)
    assert rep.lower.value == pytest.approx(0.5, abs=1e-6)
    assert rep.upper.value == pytest.approx(0.5, abs=1e-6)
    assert rep.margin == pytest.approx(1.0, abs=1e-6)
    assert rep.holds()


def test_cut_vertical_is_tight(unit_square):
    rep = cut_experiment(unit_square, (1.0, 0.0), 0.3)
    assert rep.lower.value == pytest.approx(1.3, abs=1e-6)
    assert rep.upper.value == pytest.approx(0.7, abs=1e-6)
    assert rep.margin == pytest.approx(0.0, abs=1e-6)


def test_cut_missing_q_axis(unit_square):
    with pytest.raises(HypothesisViolationError):
        cut_experiment(unit_square, (0.0, 1.0), 2.0)
    with pytest.raises(HypothesisViolationError):
        cut_experiment(unit_square, (0.0, 1.0), 0.0)
    with pytest.raises(HypothesisViolationError):
        cut_experiment(unit_square, (1.0, 0.0), 1.5)


def test_random_cuts_keep_superadditivity(rng):
    for _ in range(50):
        poly = random_polygon(rng, int(rng.integers(4, 6)))
        normal, offset = admissible_line(rng, poly)
        rep = cut_experiment(poly, normal, offset)
        assert rep.margin >= -1e-8


def test_ehz_cut_is_subadditive(unit_square):
    rep = cut_experiment(unit_square, (-1.0, 1.0), 0.0, capacity="ehz")
    assert rep.expected_sign == -1
    assert rep.whole.value == pytest.approx(4.0, abs=1e-9)
    assert rep.margin == pytest.approx(0.0, abs=1e-9)
    assert rep.holds()


def test_cut_sweep_skips_bad_offsets(unit_square):
    reports = cut_sweep(unit_square, (1.0, 0.0), [-0.5, 0.0, 0.5, 1.5])
    assert [type(r) for r in reports] == [CutReport, CutReport, CutReport, SkippedCut]
    for rep, t in zip(reports[:3], (-0.5, 0.0, 0.5)):
        assert rep.lower.value == pytest.approx(1.0 + t, abs=1e-6)
        assert rep.margin == pytest.approx(0.0, abs=1e-6)
    assert reports[3].offset == 1.5
