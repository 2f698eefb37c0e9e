"""Partition bookkeeping, midpoint quadrature, and refinement rules."""

import numpy as np
import pytest

from deepls.quad import (
    Partition,
    integrate,
    refine_global,
    refine_local,
    uniform_partition,
)


def test_uniform_partition_midpoints_and_widths():
    part = uniform_partition((0.0, 1.0), 4)
    np.testing.assert_allclose(part.midpoints, [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(part.widths, 0.25)
    assert part.n_elements == 4
    assert (part.left, part.right) == (0.0, 1.0)


def test_uniform_partition_matches_protocol_grids():
    part = uniform_partition((-1.0, 1.0), 2000)
    assert part.widths[0] == pytest.approx(0.001)
    assert part.midpoints[0] == pytest.approx(-0.9995)
    assert uniform_partition((0.0, 1.0), 200).widths[0] == pytest.approx(0.005)


def test_uniform_partition_rejects_zero_elements():
    with pytest.raises(ValueError):
        uniform_partition((0.0, 1.0), 0)


def test_partition_validates_breakpoints():
    with pytest.raises(ValueError):
        Partition(np.array([0.0, 0.5, 0.5, 1.0]))
    with pytest.raises(ValueError):
        Partition(np.array([0.0]))
    with pytest.raises(ValueError):
        Partition(np.array([0.0, np.nan, 1.0]))


def test_breakpoints_are_read_only():
    part = uniform_partition((0.0, 1.0), 3)
    with pytest.raises(ValueError):
        part.breakpoints[0] = 5.0


def test_boundary_element_lengths_follow_end_elements():
    part = Partition(np.array([0.0, 0.1, 0.6, 1.0]))
    assert part.h_left == pytest.approx(0.1)
    assert part.h_right == pytest.approx(0.4)


def test_midpoint_rule_exact_on_affine():
    part = uniform_partition((0.0, 2.0), 7)
    value = integrate(lambda x: 3.0 * x - 1.0, part)
    assert value == pytest.approx(4.0, rel=1e-14)
    ragged = Partition(np.array([0.0, 0.3, 0.35, 1.1, 2.0]))
    assert integrate(lambda x: 3.0 * x - 1.0, ragged) == pytest.approx(4.0, rel=1e-14)


def test_midpoint_rule_second_order_convergence():
    exact = 1.0 - np.cos(1.0)
    errs = []
    for n in (64, 128):
        part = uniform_partition((0.0, 1.0), n)
        errs.append(abs(integrate(np.sin, part) - exact))
    ratio = errs[0] / errs[1]
    assert 3.6 <= ratio <= 4.4


def test_measure_conservation_under_refinement():
    part = uniform_partition((0.0, 1.0), 50)
    rng = np.random.default_rng(9)
    for _ in range(4):
        eta = rng.uniform(size=part.n_elements)
        part = refine_local(part, eta, 0.1)
        assert abs(np.sum(part.widths) - 1.0) < 1e-12
    doubled = refine_global(part)
    assert abs(np.sum(doubled.widths) - 1.0) < 1e-12


def test_global_refinement_bisects_every_element():
    part = Partition(np.array([0.0, 0.4, 1.0]))
    refined = refine_global(part)
    assert refined.n_elements == 4
    np.testing.assert_allclose(refined.breakpoints, [0.0, 0.2, 0.4, 0.7, 1.0])


def test_local_refinement_marks_top_fraction():
    part = uniform_partition((0.0, 1.0), 10)
    eta = np.arange(10, dtype=np.float64)
    refined = refine_local(part, eta, 0.1)  # ceil(0.1 * 10) = 1 element
    assert refined.n_elements == 11
    # the marked element is the last one (largest indicator)
    np.testing.assert_allclose(refined.breakpoints[-2], 0.95)


def test_local_refinement_includes_ties_at_threshold():
    part = uniform_partition((0.0, 1.0), 5)
    eta = np.array([1.0, 5.0, 5.0, 2.0, 0.5])
    refined = refine_local(part, eta, 0.2)  # threshold value 5.0 is hit twice
    assert refined.n_elements == 7


def test_local_refinement_fraction_one_equals_global():
    part = uniform_partition((0.0, 1.0), 8)
    eta = np.ones(8)
    refined = refine_local(part, eta, 1.0)
    np.testing.assert_allclose(refined.breakpoints, refine_global(part).breakpoints)


def test_local_refinement_validates_inputs():
    part = uniform_partition((0.0, 1.0), 4)
    with pytest.raises(ValueError):
        refine_local(part, np.ones(3), 0.1)
    with pytest.raises(ValueError):
        refine_local(part, np.ones(4), 0.0)
    with pytest.raises(ValueError):
        refine_local(part, np.ones(4), 1.5)


def test_partition_csv_round_trip(tmp_path):
    part = refine_local(uniform_partition((0.0, 1.0), 7), np.arange(7.0), 0.3)
    path = tmp_path / "partition.csv"
    part.save_csv(path)
    loaded = Partition.load_csv(path)
    np.testing.assert_array_equal(loaded.breakpoints, part.breakpoints)
