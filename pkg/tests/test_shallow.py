import numpy as np
import pytest

from helpers import REGION_WB, TOY, X3, exact_rank, toy
from localdim.dimension import local_dimension
from localdim.errors import ConfigurationError, DomainError, InvariantError
from localdim.net import Architecture, Params, forward, init_params
from localdim.shallow import (
    OrderedSample,
    alpha_of,
    analyze_shallow,
    classify_cone,
    classify_cones,
    closed_form_rank,
    cone_coordinates,
    dedupe,
    e_vectors,
    image_line_residual,
    image_set_description,
    image_set_dim_111,
    index_sets,
    l0_quantities,
    project_many,
    project_to_P,
    rank_matrix,
    seen_regions,
    shallow_bounds_check,
    threshold_pattern,
    toy_region,
    toy_region_of,
)


def test_e_vectors_toy():
    E = e_vectors([0.0, 1.0, 2.0])
    np.testing.assert_array_equal(E[1], [0, 1, 2])
    np.testing.assert_array_equal(E[2], [0, 0, 1])
    np.testing.assert_array_equal(E[3], [0, 0, 0])
    np.testing.assert_array_equal(E[4], [0, 0, 0])
    np.testing.assert_array_equal(E[5], [1, 0, 0])
    np.testing.assert_array_equal(E[6], [2, 1, 0])
    np.testing.assert_array_equal(E[0], E[6])


def test_ordered_sample_sorts_and_rejects_duplicates():
    s = OrderedSample.from_values([2.0, 0.0, 1.0])
    np.testing.assert_array_equal(s.xs, [0, 1, 2])
    np.testing.assert_array_equal(s.order, [1, 2, 0])
    with pytest.raises(DomainError):
        OrderedSample.from_values([1.0, 2.0, 1.0])
    with pytest.raises(DomainError):
        OrderedSample.from_values([])


def test_dedupe_keeps_first_occurrences():
    vals, dropped = dedupe([3.0, 1.0, 3.0, 2.0, 1.0])
    np.testing.assert_array_equal(vals, [3, 1, 2])
    assert dropped == 2


@pytest.mark.parametrize("row, alpha", [((1, 1, 1), 1), ((0, 0, 1), 3), ((1, 1, 0), 6), ((0, 0, 0), 4),
                                        ((0, 1, 1), 2), ((1, 0, 0), 5)])
def test_alpha_of_examples(row, alpha):
    assert alpha_of([row]).tolist() == [alpha]
    np.testing.assert_array_equal(threshold_pattern(alpha, 3), row)


def test_alpha_of_rejects_non_monotone_rows():
    with pytest.raises(InvariantError):
        alpha_of([[1, 0, 1]])
    with pytest.raises(ConfigurationError):
        alpha_of([[1, 1]], [0.0, 1.0, 2.0])
    with pytest.raises(DomainError):
        threshold_pattern(7, 3)


@pytest.mark.parametrize("alpha, rank", [(1, 2), (2, 3), (4, 1), (3, 2), (5, 2), (6, 3)])
def test_closed_form_rank_toy(alpha, rank):
    ev = e_vectors([0.0, 1.0, 2.0])
    assert closed_form_rank([alpha], ev) == rank
    assert exact_rank(rank_matrix([alpha], ev).tolist()) == rank


def test_closed_form_matches_figure_ranks():
    # region labels and cone indices are different numberings of the same six sets
    for j, (w, b) in REGION_WB.items():
        a = analyze_shallow(TOY, toy(w, b), X3)
        assert a.closed_form_rank == a.numeric_rank == local_dimension(TOY, toy(w, b), X3).rank


def test_seen_regions_examples():
    assert seen_regions([[1, 1, 1], [0, 0, 0]]) == 1
    assert seen_regions([[0, 1, 1], [0, 0, 1]]) == 3
    assert seen_regions([[0, 1, 1]]) == 2


def test_l0_examples():
    assert l0_quantities([1], [[1, 1, 1]], 3) == (2, 2)
    assert l0_quantities([4, 4], [[0, 0, 0], [0, 0, 0]], 3)[0] == 0
    # (0,1,1): two pieces, one with a single example
    assert l0_quantities([2], [[0, 1, 1]], 3) == (2, 3)


def test_index_sets_fold():
    L, Lp, Lpp = index_sets([1, 5, 3], 3)
    # index 0 is identified with 2n = 6
    assert L == {1, 2, 5, 6}
    assert Lp == {1, 5}
    assert Lpp == {1, 2}


def test_bounds_examples():
    a = analyze_shallow(TOY, toy(1, 1), X3)
    assert (a.closed_form_rank, a.l0_neurons, a.l0_linear) == (2, 2, 2)
    assert a.bounds["l0"] == (2.0, 2.0)
    assert shallow_bounds_check(a)
    dead = analyze_shallow(TOY, toy(0, -1), X3)
    assert dead.closed_form_rank == 1 and dead.seen_regions == 1
    assert shallow_bounds_check(dead)


def test_analyze_shallow_unsorted_sample_and_json():
    arch = Architecture((1, 4, 1))
    p = init_params(arch, seed=3)
    a = analyze_shallow(arch, p, [2.0, -1.0, 0.5, 3.0])
    b = analyze_shallow(arch, p, [-1.0, 0.5, 2.0, 3.0])
    assert a.to_dict() == b.to_dict()
    assert set(a.to_dict()) >= {"closed_form_rank", "seen_regions", "l0_neurons", "l0_linear", "bounds", "alpha"}


def test_analyze_shallow_rejects_other_shapes():
    with pytest.raises(ConfigurationError):
        analyze_shallow(Architecture((2, 3, 1)), init_params(Architecture((2, 3, 1)), seed=0), [0.0, 1.0])
    with pytest.raises(ConfigurationError):
        analyze_shallow(Architecture((1, 3, 1), "softmax"), init_params(Architecture((1, 3, 1)), seed=0), [0.0])
    with pytest.raises(DomainError):
        analyze_shallow(TOY, toy(1, 0), [0.0, 1.0, 0.0])


@pytest.mark.parametrize("wb, cone", [((0.0, 0.0), 1), ((1.0, -1.5), 3), ((-1.0, 0.5), 5), ((0.0, -1.0), 4)])
def test_classify_cone_examples(wb, cone):
    assert classify_cone(*wb, [0.0, 1.0, 2.0]) == cone


def test_toy_region_matches_hand_picked_points():
    for j, (w, b) in REGION_WB.items():
        assert toy_region_of(w, b) == j


def test_cone_completeness_10k():
    rng = np.random.default_rng(7)
    xs = np.sort(rng.uniform(-3, 3, 5))
    W = rng.standard_normal(10_000)
    B = rng.standard_normal(10_000) * 3
    cones = classify_cones(W, B, xs)
    assert set(np.unique(cones)) <= set(range(1, 11))
    for w, b, i in zip(W, B, cones):
        lam, t = cone_coordinates(w, b, int(i), xs)
        assert lam > 0
        assert -1e-9 <= t <= 1 + 1e-9


def test_cone_coordinates_round_trip():
    xs = [0.0, 1.0, 2.0]
    lam, t = cone_coordinates(1.0, -0.5, 3, xs)
    # cone 3 is spanned by (1, -1) and (1, -2)
    np.testing.assert_allclose(lam * ((1 - t) * np.array([1, -1]) + t * np.array([1, -2])), [1.0, -0.5])
    with pytest.raises(DomainError):
        cone_coordinates(1.0, 0.0, 1, [0.0])


@pytest.mark.parametrize("Y, proj", [((2.0, 2.0, 2.0), (0.0, 0.0)), ((1.0, 1.0, -2.0), (np.sqrt(6), 0.0)),
                                     ((-1.0, 1.0, 0.0), (0.0, np.sqrt(2)))])
def test_project_to_P_examples(Y, proj):
    np.testing.assert_allclose(project_to_P(Y), proj, atol=1e-15)
    np.testing.assert_allclose(project_many(np.array([Y]))[0], proj, atol=1e-15)


def test_image_set_table():
    assert [image_set_dim_111(j) for j in range(1, 7)] == [0, 1, 2, 1, 2, 1]
    assert "sqrt(3) x + y = 0" in image_set_description(2)
    assert image_set_description(6) == "line y = 0"
    with pytest.raises(DomainError):
        image_set_dim_111(7)
    with pytest.raises(DomainError):
        image_line_residual(3, (0.0, 0.0))


@pytest.mark.parametrize("j", [1, 2, 3, 4, 5, 6])
def test_image_sets_from_random_parameters(j):
    rng = np.random.default_rng(j)
    pts = []
    while len(pts) < 200:
        w, b, v, c = rng.standard_normal(4) * 2
        if toy_region_of(w, b) != j:
            continue
        pts.append(project_to_P(forward(TOY, toy(w, b, v, c), X3).output[0]))
    pts = np.array(pts)
    if j == 1:
        np.testing.assert_allclose(pts, 0.0, atol=1e-12)
    elif image_set_dim_111(j) == 1:
        res = [image_line_residual(j, p) for p in pts]
        np.testing.assert_allclose(res, 0.0, atol=1e-9)
    else:
        # a 2-D set spans the plane: centered points have full rank
        assert np.linalg.matrix_rank(pts - pts.mean(axis=0)) == 2


def test_closed_form_equals_numeric_examples():
    arch = Architecture((1, 6, 1))
    rng = np.random.default_rng(3)
    for _ in range(20):
        p = init_params(arch, seed=rng)
        xs = rng.uniform(-2, 2, 9)
        a = analyze_shallow(arch, p, xs)
        if a.margin > 1e-6:
            assert a.closed_form_rank == a.numeric_rank
            assert shallow_bounds_check(a)


def test_all_dead_shallow_closed_form():
    arch = Architecture((1, 3, 1))
    p = Params((np.zeros((3, 1)), np.ones((1, 3))), (-np.ones(3), np.zeros(1)))
    a = analyze_shallow(arch, p, [0.0, 1.0, 5.0])
    assert a.alpha == [4, 4, 4]
    assert a.closed_form_rank == a.numeric_rank == 1


def test_l0_bound_with_both_end_hinges():
    # alpha contains 1 (uses e_0) and 2n (uses e_2n), the same vector
    ev = e_vectors([0.0, 1.0])
    assert closed_form_rank([1, 4], ev) == 2
    assert l0_quantities([1, 4], [[1, 1], [1, 0]], 2)[0] == 2
    arch = Architecture((1, 2, 1))
    p = Params(([[1.0], [-1.0]], [[1.0, 1.0]]), ([0.5, 0.5], [0.0]))
    a = analyze_shallow(arch, p, [0.0, 1.0])
    assert a.alpha == [1, 4]
    assert shallow_bounds_check(a)
