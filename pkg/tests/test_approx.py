import numpy as np
import pytest

from epitest.approx import (
    BeliefGrid,
    approx_solve_lower,
    approx_solve_upper,
    nested_grid_ladder,
    prune_at_points,
    sandwich,
)
from epitest.beliefs import Belief
from epitest.errors import CoverageError, SizeCapError, ValidationError
from epitest.exact import AlphaSet, AlphaVector, evaluate, solve
from epitest.model import ContactGraph, ContactSchedule, infection_counts
from epitest.oracle import oracle_value
from epitest.presets import probe_beliefs, scenario_a, scenario_c
from epitest.scenario import ScenarioConfig

EMPTY = frozenset()


def config(n, horizon, p, lam, edges, seed=0):
    g = ContactGraph.from_edges(n, edges)
    return ScenarioConfig(
        n, horizon, p, lam, ContactSchedule.static(horizon, g), Belief.uniform(n), seed
    )


class TestGrids:
    def test_corners(self):
        grid = BeliefGrid.corners(2)
        assert len(grid) == 4
        assert np.array_equal(grid.matrix(), np.eye(4))

    def test_uniform_random_is_seeded(self):
        a = BeliefGrid.uniform_random(2, 3, seed=5)
        b = BeliefGrid.uniform_random(2, 3, seed=5)
        assert np.array_equal(a.matrix(), b.matrix())
        assert np.allclose(a.matrix().sum(axis=1), 1.0)

    def test_regular_grid(self):
        grid = BeliefGrid.regular(1, 4)
        assert len(grid) == 5  # compositions of 4 into 2 parts
        assert sorted(pt[1] for pt in grid.points) == [0.0, 0.25, 0.5, 0.75, 1.0]
        with pytest.raises(SizeCapError):
            BeliefGrid.regular(3, 40)

    def test_nested_ladder_shares_prefixes(self):
        g2, g4 = nested_grid_ladder(2, [2, 4], seed=9)
        assert len(g2) == 4 + 2 and len(g4) == 4 + 4
        assert np.array_equal(g2.matrix(), g4.matrix()[: len(g2)])

    def test_dimension_check(self):
        with pytest.raises(ValidationError):
            BeliefGrid(2, [np.ones(3) / 3], "bad")


class TestPruneAtPoints:
    def test_singleton_unchanged(self):
        aset = AlphaSet([AlphaVector(infection_counts(2), 0)], t=1)
        grid = BeliefGrid.corners(2)
        assert prune_at_points(aset, grid).vectors == aset.vectors

    def test_dominated_vector_dropped(self):
        aset = AlphaSet(
            [AlphaVector(np.ones(4), 0), AlphaVector(np.zeros(4), 1)], t=1
        )
        pruned = prune_at_points(aset, BeliefGrid.corners(2))
        assert len(pruned) == 1
        assert pruned.vectors[0].action == 1

    def test_grid_point_values_preserved(self):
        cfg = scenario_a()
        vf = solve(cfg)
        full = vf.alpha_set(1)
        grid = BeliefGrid.corners_plus_random(3, 5, seed=3)
        pruned = prune_at_points(full, grid)
        assert len(pruned) <= min(len(full), len(grid))
        for pt in grid.points:
            assert evaluate(pruned, pt).value == pytest.approx(
                evaluate(full, pt).value, abs=1e-12
            )


class TestUpperBound:
    def test_sound_even_with_one_grid_point(self):
        cfg = scenario_a()
        grid = BeliefGrid(3, [np.full(8, 1 / 8)], "center-only")
        ub = approx_solve_upper(cfg, grid)
        for b in probe_beliefs(3, 10):
            assert ub.value(1, b) >= oracle_value(cfg, b) - 1e-9

    def test_equals_exact_when_tests_cannot_pay(self):
        cfg = config(2, 3, 0.5, 100.0, [(1, 2, 1.0)])
        grid = BeliefGrid(2, [np.full(4, 0.25)], "center-only")
        ub = approx_solve_upper(cfg, grid)
        vf = solve(cfg)
        for b in probe_beliefs(2, 10):
            assert ub.value(1, b) == pytest.approx(vf.value(1, b), abs=1e-9)

    def test_cap(self):
        cfg = config(2, 2, 0.5, 0.5, [(1, 2, 1.0)])
        with pytest.raises(SizeCapError):
            approx_solve_upper(cfg, BeliefGrid.corners(2), max_n=1)


class TestLowerBound:
    def test_exact_at_corners_single_individual(self):
        cfg = config(1, 2, 0.0, 0.5, [])
        lb = approx_solve_lower(cfg, BeliefGrid.corners(1))
        vf = solve(cfg)
        for corner in np.eye(2):
            assert lb.value(1, corner) == pytest.approx(
                evaluate(vf.alpha_set(1), corner).value, abs=1e-12
            )

    def test_exact_when_value_is_linear(self):
        # p=0, lam=0: never any reason to test, value is linear in belief
        cfg = config(2, 3, 0.0, 0.0, [(1, 2, 1.0)])
        lb = approx_solve_lower(cfg, BeliefGrid.corners(2))
        vf = solve(cfg)
        for b in probe_beliefs(2, 10):
            assert lb.value(1, b) == pytest.approx(vf.value(1, b), abs=1e-9)

    def test_coverage_error_without_corners(self):
        cfg = scenario_c()
        lonely = BeliefGrid(2, [np.full(4, 0.25)], "center-only")
        with pytest.raises(CoverageError):
            approx_solve_lower(cfg, lonely)


class TestSandwich:
    def test_oracle_between_bounds(self):
        cfg = scenario_c()
        probes = probe_beliefs(2, 8)
        sw = sandwich(cfg, BeliefGrid.corners_plus_random(2, 4, seed=1), probes)
        assert not sw.violations
        for row in sw.rows:
            ov = oracle_value(cfg, probes[row.probe], t=row.t)
            assert row.lower - 1e-9 <= ov <= row.upper + 1e-9

    def test_zero_gap_when_value_linear(self):
        cfg = config(2, 3, 0.5, 100.0, [(1, 2, 1.0)])
        probes = probe_beliefs(2, 6)
        sw = sandwich(cfg, BeliefGrid.corners_plus_random(2, 2, seed=2), probes)
        assert all(row.tight for row in sw.rows)

    def test_refinement_tightens_gaps(self):
        cfg = scenario_c()
        probes = probe_beliefs(2, 6)
        grids = nested_grid_ladder(2, [1, 3], seed=4)
        small = sandwich(cfg, grids[0], probes)
        large = sandwich(cfg, grids[1], probes)
        for r_small, r_large in zip(small.rows, large.rows):
            assert (r_large.t, r_large.probe) == (r_small.t, r_small.probe)
            assert r_large.gap <= r_small.gap + 1e-9

    def test_refinement_never_loosens_at_old_grid_points(self):
        cfg = scenario_c()
        coarse, fine = nested_grid_ladder(2, [2, 6], seed=8)
        ub_c, ub_f = approx_solve_upper(cfg, coarse), approx_solve_upper(cfg, fine)
        lb_c, lb_f = approx_solve_lower(cfg, coarse), approx_solve_lower(cfg, fine)
        for t in range(1, cfg.horizon + 1):
            for pt in coarse.points:
                assert ub_f.value(t, pt) <= ub_c.value(t, pt) + 1e-9
                assert lb_f.value(t, pt) >= lb_c.value(t, pt) - 1e-9

    def test_rich_grid_reproduces_exact_solution(self):
        # every linear piece wins somewhere on the grid, so nothing is pruned
        cfg = scenario_c()
        vf = solve(cfg)
        ub = approx_solve_upper(cfg, BeliefGrid.corners_plus_random(2, 16, seed=77))
        for t in (1, 2, 3):
            for b in probe_beliefs(2, 20):
                assert ub.value(t, b) == pytest.approx(vf.value(t, b), abs=1e-12)
