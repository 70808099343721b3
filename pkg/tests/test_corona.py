import math

import numpy as np
import pytest

from h2w.constants import a2_constant, testing_constant as t_constant
from h2w.corona import (
    StoppingData,
    UniformitySpec,
    b_above,
    build_stopping_data,
    calibrate_c0,
    carleson_check,
    corona_split,
    energy_stopping_intervals,
    local_estimate_ratios,
    quasi_norm,
    reduction_residual,
    uniformity_check,
)
from h2w.errors import PreconditionViolation
from h2w.grid import GridInterval
from h2w.haar import (
    WeightedFunction,
    corona_projection,
    good_projection,
    haar_function,
    splitting_nodes,
)
from h2w.measure import AtomicMeasure, random_ensemble
from h2w.params import SUITE_BELOW_GAP, SUITE_EPS, SUITE_R

from conftest import unit_grid


def _h_const(sigma, w):
    return math.sqrt(a2_constant(sigma, w)) + max(
        t_constant(sigma, w, "forward"), t_constant(sigma, w, "backward")
    )


def _instance(seed, family="uniform", max_atoms=16, depth=10):
    sigma, w = random_ensemble(seed, 1, max_atoms, depth, family=family)[0]
    grid = unit_grid(sigma, w, depth)
    rng = np.random.default_rng(seed)
    f = good_projection(
        WeightedFunction(sigma, rng.standard_normal(sigma.n_atoms)), grid, SUITE_EPS, SUITE_R
    )
    g = good_projection(
        WeightedFunction(w, rng.standard_normal(w.n_atoms)), grid, SUITE_EPS, SUITE_R
    )
    return sigma, w, grid, f, g


class TestEnergyStopping:
    def test_single_atom_w_empty(self):
        sigma, _, grid, f, _ = _instance(81)
        w1 = AtomicMeasure.from_triples([(1, 11, 1.0)])
        out = energy_stopping_intervals(grid.root_interval, sigma, w1, 3.0, 1.0, grid)
        assert out == []

    def test_huge_threshold_selects_no_mass(self):
        # with an astronomic threshold no charged interval can pass; only
        # intervals with positive energy but zero sigma mass may remain
        sigma, w, grid, _, _ = _instance(82)
        out = energy_stopping_intervals(grid.root_interval, sigma, w, 5.0, 1e12, grid)
        assert all(sigma.mass_on(F.interval) == 0.0 for F in out)

    def test_calibrated_mass_bound(self):
        for seed in range(83, 89):
            sigma, w, grid, f, _ = _instance(seed, family="mixed", max_atoms=20, depth=12)
            h = _h_const(sigma, w)
            if h == 0:
                continue
            c0 = calibrate_c0(grid.root_interval, sigma, w, h, grid)
            chosen = energy_stopping_intervals(grid.root_interval, sigma, w, h, c0, grid)
            mass = sum(sigma.mass_on(F.interval) for F in chosen)
            assert mass <= sigma.total_mass / 10.0

    def test_selected_are_maximal(self):
        sigma, w, grid, _, _ = _instance(90, family="clusters", depth=12)
        h = _h_const(sigma, w)
        chosen = energy_stopping_intervals(grid.root_interval, sigma, w, h, 0.001, grid)
        for a in chosen:
            for b in chosen:
                if a.key != b.key:
                    assert not a.contains(b) and not b.contains(a)


class TestStoppingData:
    def test_flat_function_root_only(self):
        sigma, _, grid, _, _ = _instance(91)
        w1 = AtomicMeasure.from_triples([(1, 11, 1.0)])  # no energy triggers
        f = WeightedFunction.constant(sigma, 1.0)
        sd = build_stopping_data(f, grid.root_interval, sigma, w1, 3.0, 1.0, grid)
        assert sd.members == (grid.root_interval,)
        assert sd.reason[grid.root_interval.key] == "root"

    def test_spike_walks_down_to_the_atom_cell(self):
        # a light atom with a large value hides next to a heavy companion:
        # the average trigger cannot fire until the cells separate them, so
        # the stop lands deep, at the spike's own cell
        sigma = AtomicMeasure.from_triples(
            [(3, 6, 10.0), (41, 6, 0.1), (43, 6, 10.0)]
        )
        w1 = AtomicMeasure.from_triples([(3, 8, 1.0)])
        grid = unit_grid(sigma, w1, 5)
        f = WeightedFunction(sigma, np.array([1.0, 200.0, 1.0]))
        sd = build_stopping_data(f, grid.root_interval, sigma, w1, 10.0, 1.0, grid)
        spike = sigma.positions_f[1]
        deep = [m for m in sd.members if m.level >= 4 and m.left_f <= spike < m.right_f]
        assert deep, "expected an average-triggered stop at the spike cell"
        assert all(sd.reason[m.key] == "average" for m in deep)
        shallow = [
            m for m in sd.members if 1 <= m.level < 4 and m.left_f <= spike < m.right_f
        ]
        assert not shallow, "the heavy companion must mask the spike above its cell"

    def test_invariants_on_ensemble(self):
        for seed in (92, 93, 94):
            sigma, w, grid, f, _ = _instance(seed, family="mixed", max_atoms=20, depth=12)
            if f.norm() == 0:
                continue
            h = _h_const(sigma, w)
            c0 = calibrate_c0(grid.root_interval, sigma, w, h, grid)
            sd = build_stopping_data(f, grid.root_interval, sigma, w, h, c0, grid)
            # root is maximal
            assert all(sd.root.contains(F) for F in sd.members)
            # control values grow inward
            for F in sd.members:
                for G in sd.members:
                    if F.key != G.key and G.contains(F):
                        assert sd.alpha[F.key] >= sd.alpha[G.key]
            # averages dominated by ten times the control value
            absf = np.abs(f.values)
            for lev in range(grid.depth + 1):
                for k in range(1 << lev):
                    gi = grid.interval(lev, k)
                    lo, hi = sigma.index_range(gi.interval)
                    if hi == lo:
                        continue
                    avg = float(
                        np.sum(absf[lo:hi] * sigma.masses_f[lo:hi])
                    ) / sigma.mass_on(gi.interval)
                    pi = sd.pi(gi)
                    assert avg <= 10.0 * sd.alpha[pi.key]

    def test_zero_function_rejected(self):
        sigma, w, grid, _, _ = _instance(95)
        z = WeightedFunction(sigma, np.zeros(sigma.n_atoms))
        with pytest.raises(PreconditionViolation):
            build_stopping_data(z, grid.root_interval, sigma, w, 1.0, 1.0, grid)


class TestCarleson:
    def test_root_only_ratio_one(self):
        sigma, _, grid, _, _ = _instance(96)
        sd = StoppingData(grid.root_interval, (grid.root_interval,), {grid.root_interval.key: 1.0}, {}, {})
        assert carleson_check(sd, sigma) == 1.0

    def test_constructed_families_pack(self):
        for seed in (97, 98):
            sigma, w, grid, f, _ = _instance(seed, family="mixed", max_atoms=20, depth=12)
            if f.norm() == 0:
                continue
            h = _h_const(sigma, w)
            c0 = calibrate_c0(grid.root_interval, sigma, w, h, grid)
            sd = build_stopping_data(f, grid.root_interval, sigma, w, h, c0, grid)
            assert carleson_check(sd, sigma) <= 2.0

    def test_negative_control(self):
        sigma = AtomicMeasure.from_triples([(1, 9, 1.0)])
        grid = unit_grid(sigma, AtomicMeasure.empty(), 8)
        chain = tuple(GridInterval(grid, lev, 0) for lev in range(5))
        fake = StoppingData(chain[0], chain, {c.key: 1.0 for c in chain}, {}, {})
        assert carleson_check(fake, sigma) > 2.0


class TestQuasiNorm:
    def test_root_only_value(self):
        sigma, _, grid, _, _ = _instance(99)
        root = grid.root_interval
        sd = StoppingData(root, (root,), {root.key: 1.5}, {}, {})
        expected = 1.5 * math.sqrt(sigma.total_mass)
        assert abs(quasi_norm(sd, sigma) - expected) < 1e-12 * expected

    def test_nested_chain_exact_accumulation(self):
        sigma = AtomicMeasure.from_triples([(1, 9, 2.0)])
        grid = unit_grid(sigma, AtomicMeasure.empty(), 8)
        chain = tuple(GridInterval(grid, lev, 0) for lev in range(4))
        sd = StoppingData(chain[0], chain, {c.key: 0.5 for c in chain}, {}, {})
        # the atom sits in all four members: value 4 * 0.5 = 2, mass 2
        assert abs(quasi_norm(sd, sigma) - 2.0 * math.sqrt(2.0)) < 1e-12


class TestUniformity:
    def test_trivially_uniform(self):
        sigma, _, grid, _, _ = _instance(100)
        w1 = AtomicMeasure.from_triples([(1, 11, 1.0)])
        f = WeightedFunction.constant(sigma, 0.5)
        spec = UniformitySpec(grid.root_interval, (), 1.0)
        ok, violations = uniformity_check(f, spec, sigma, w1, 3.0, grid)
        assert ok and violations == []

    def test_violation_names_interval(self):
        sigma, _, grid, _, _ = _instance(101)
        w1 = AtomicMeasure.from_triples([(1, 11, 1.0)])
        f = WeightedFunction.constant(sigma, 2.0)
        spec = UniformitySpec(grid.root_interval, (), 1.0)
        ok, violations = uniformity_check(f, spec, sigma, w1, 3.0, grid)
        assert not ok and any("average" in v for v in violations)

    def test_disjointness_enforced(self):
        sigma, _, grid, _, _ = _instance(102)
        with pytest.raises(ValueError):
            UniformitySpec(grid.root_interval, (grid.interval(1, 0), grid.interval(2, 1)), 1.0)


class TestBAbove:
    def test_no_gap_pairs_zero(self):
        sigma, w, grid, f, g = _instance(103, max_atoms=8, depth=6)
        if f.norm() == 0 or g.norm() == 0:
            pytest.skip("projection vanished")
        assert b_above(f, g, grid, below_gap=9) == 0.0

    def test_single_term_against_direct_kernel_sum(self):
        sigma, w = random_ensemble(104, 1, 20, 12, family="lacunary")[0]
        grid = unit_grid(sigma, w, 12)
        s_nodes = splitting_nodes(sigma, grid)
        w_nodes = splitting_nodes(w, grid)
        pair = None
        for ni in s_nodes:
            for nj in w_nodes:
                if nj.level - ni.level >= 4 and (nj.index >> (nj.level - ni.level)) == ni.index:
                    pair = (ni, nj)
                    break
            if pair:
                break
        if pair is None:
            pytest.skip("no gap pair in this draw")
        ni, nj = pair
        gi = GridInterval(grid, ni.level, ni.index)
        jj = GridInterval(grid, nj.level, nj.index)
        f = haar_function(gi, sigma)
        g = haar_function(jj, w)
        value = b_above(f, g, grid, below_gap=4)
        # independent evaluation: single (I, J) pair survives
        child_bit = (nj.index >> (nj.level - ni.level - 1)) & 1
        child = gi.children()[child_bit]
        lo, hi = sigma.index_range(child.interval)
        e_val = f.values[lo] if hi > lo else 0.0
        jlo, jhi = w.index_range(jj.interval)
        direct = 0.0
        for k in range(jlo, jhi):
            inner_sum = 0.0
            for s in range(lo, hi):
                inner_sum += sigma.masses_f[s] / (sigma.positions_f[s] - w.positions_f[k])
            direct += w.masses_f[k] * g.values[k] * inner_sum
        expected = e_val * direct
        assert abs(value - expected) < 1e-10 * max(1.0, abs(expected))

    def test_bilinearity(self):
        sigma, w, grid, f, g = _instance(105, family="lacunary", max_atoms=20, depth=12)
        if f.norm() == 0 or g.norm() == 0:
            pytest.skip("projection vanished")
        lhs = b_above(f, g + 0.5 * g, grid, SUITE_BELOW_GAP)
        rhs = b_above(f, g, grid, SUITE_BELOW_GAP) + b_above(f, 0.5 * g, grid, SUITE_BELOW_GAP)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def test_side_swap(self):
        sigma, w, grid, f, g = _instance(106, family="lacunary", max_atoms=20, depth=12)
        if f.norm() == 0 or g.norm() == 0:
            pytest.skip("projection vanished")
        assert b_above(f, g, grid, SUITE_BELOW_GAP, side="below") == b_above(
            g, f, grid, SUITE_BELOW_GAP
        )


class TestCoronaSplit:
    def test_single_corona_residual_zero(self):
        sigma, w, grid, f, g = _instance(107, family="lacunary", max_atoms=20, depth=12)
        if f.norm() == 0 or g.norm() == 0:
            pytest.skip("projection vanished")
        root = grid.root_interval
        sd = StoppingData(root, (root,), {root.key: 1.0}, {}, {})
        split_value, residual = corona_split(f, g, sd, grid, SUITE_BELOW_GAP)
        total = b_above(f, g, grid, SUITE_BELOW_GAP)
        # the single corona projection reproduces f up to coefficient dust
        assert abs(residual) <= 1e-12 * max(1.0, abs(total))
        assert abs(split_value - total) <= 1e-12 * max(1.0, abs(total))

    def test_cross_sum_oracle(self):
        sigma, w, grid, f, g = _instance(109, family="lacunary", max_atoms=24, depth=12)
        if f.norm() == 0 or g.norm() == 0:
            pytest.skip("projection vanished")
        h = _h_const(sigma, w)
        c0 = calibrate_c0(grid.root_interval, sigma, w, h, grid)
        sd = build_stopping_data(f, grid.root_interval, sigma, w, h, c0, grid)
        split_value, residual = corona_split(f, g, sd, grid, SUITE_BELOW_GAP)
        total = b_above(f, g, grid, SUITE_BELOW_GAP)
        assert abs(split_value + residual - total) <= 1e-10 * max(1.0, abs(total))
        cross = 0.0
        for Fp in sd.members:
            pf = corona_projection(f, sd, Fp)
            for Fq in sd.members:
                if Fp.key == Fq.key:
                    continue
                qg = corona_projection(g, sd, Fq)
                cross += b_above(pf, qg, grid, SUITE_BELOW_GAP)
        assert abs(cross - residual) <= 1e-10 * max(1.0, abs(total))


class TestReductionResidual:
    def test_zero_inputs(self):
        sigma, w, grid, f, g = _instance(109)
        z = WeightedFunction(sigma, np.zeros(sigma.n_atoms))
        out = reduction_residual(z, g, grid, 2.0, SUITE_BELOW_GAP)
        assert out.inner_product == 0.0 and out.b_above == 0.0 and out.b_below == 0.0
        assert out.residual_ratio == 0.0

    def test_comparable_scales_leave_only_the_pairing(self):
        sigma, w = random_ensemble(110, 1, 16, 10)[0]
        grid = unit_grid(sigma, w, 10)
        s_nodes = [n for n in splitting_nodes(sigma, grid) if n.level <= 3]
        w_nodes = [n for n in splitting_nodes(w, grid) if n.level <= 3]
        if not s_nodes or not w_nodes:
            pytest.skip("no shallow splits in this draw")
        f = haar_function(GridInterval(grid, s_nodes[0].level, s_nodes[0].index), sigma)
        g = haar_function(GridInterval(grid, w_nodes[0].level, w_nodes[0].index), w)
        out = reduction_residual(f, g, grid, 5.0, below_gap=9)
        assert out.b_above == 0.0 and out.b_below == 0.0
        assert out.residual_ratio == abs(out.inner_product) / (5.0 * f.norm() * g.norm())


class TestLocalEstimate:
    def test_ratios_nonnegative_and_finite(self):
        sigma, w, grid, f, g = _instance(111, family="lacunary", max_atoms=24, depth=12)
        if f.norm() == 0 or g.norm() == 0:
            pytest.skip("projection vanished")
        h = _h_const(sigma, w)
        c0 = calibrate_c0(grid.root_interval, sigma, w, h, grid)
        sd = build_stopping_data(f, grid.root_interval, sigma, w, h, c0, grid)
        for r in local_estimate_ratios(f, g, sd, grid, SUITE_BELOW_GAP):
            assert 0.0 <= r < math.inf
