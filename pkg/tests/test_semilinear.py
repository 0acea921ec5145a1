import math

import numpy as np
import pytest

from conftest import scalar_pde_oracle
from liewave.harmonics import (
    GridField,
    GroupSpec,
    SpectralField,
    build_grid,
    forward,
    inverse,
    random_real_field,
)
from liewave.propagator import FieldState, propagate_field
from liewave.semilinear import (
    SolveConfig,
    gn_ratio,
    initial_data,
    mean_functional,
    nonlinearity,
    picard_diagnostic,
    preset_field,
    scalar_blowup_time,
    solve,
    step,
)

TORUS = GroupSpec.torus(1, 8, oversampling=2.0)


class TestNonlinearity:
    def test_zero(self, torus1_spec):
        g = build_grid(torus1_spec)
        out = nonlinearity(GridField(g, np.zeros(g.n_points)), 2.0)
        assert np.abs(out.values).max() == 0.0

    def test_constant(self, torus1_spec):
        g = build_grid(torus1_spec)
        out = nonlinearity(GridField(g, np.full(g.n_points, 1.5)), 2.5)
        assert np.abs(out.values - 1.5**2.5).max() < 1e-14

    def test_cosine_squared_mean(self):
        spec = GroupSpec.torus(1, 4, oversampling=2.0)
        g = build_grid(spec)
        out = nonlinearity(GridField(g, np.cos(g.points[:, 0])), 2.0)
        F = forward(GridField(g, out.values.astype(complex)))
        assert abs(F.mean - 0.5) < 1e-12  # mean of cos^2 under normalized measure

    def test_preserves_realness(self, torus1_spec):
        g = build_grid(torus1_spec)
        vals = np.cos(g.points[:, 0]) + 0j
        out = nonlinearity(GridField(g, vals), 1.7)
        assert np.isrealobj(out.values)

    def test_rejects_bad_exponent(self, torus1_spec):
        g = build_grid(torus1_spec)
        with pytest.raises(ValueError):
            nonlinearity(GridField(g, np.zeros(g.n_points)), 1.0)


class TestStep:
    def test_zero_data_stays_zero(self):
        st = FieldState(SpectralField.zeros(TORUS), SpectralField.zeros(TORUS))
        for _ in range(5):
            st = step(st, 0.01, 2.0)
        assert np.abs(st.U.coeffs).max() == 0.0

    def test_constant_reduction_matches_ode(self):
        cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=0.5, u0="constant", u1="constant",
                          dt=1e-3, t_max=1.0 + 1e-9)
        traj = solve(cfg)
        idx = int(np.argmin(np.abs(traj.times - 1.0)))
        exact = scalar_pde_oracle(2.0, 0.5, 0.5, np.array([1.0]))[0]
        assert abs(traj.U0_values[idx] - exact) / abs(exact) < 1e-6

    def test_constant_reduction_tracks_ode_over_interval(self):
        cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=0.5, u0="constant", u1="constant",
                          dt=1e-3, t_max=2.0 + 1e-9)
        traj = solve(cfg)
        exact = scalar_pde_oracle(2.0, 0.5, 0.5, traj.times)
        rel = np.abs(traj.U0_values - exact) / np.maximum(np.abs(exact), 1e-12)
        assert rel.max() < 1e-5

    def test_second_order_convergence(self):
        exact = scalar_pde_oracle(2.0, 0.5, 0.5, np.array([1.0]))[0]
        errs = []
        for dt in (4e-3, 2e-3, 1e-3):
            cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=0.5, dt=dt, t_max=1.0 + 1e-9)
            traj = solve(cfg)
            idx = int(np.argmin(np.abs(traj.times - 1.0)))
            errs.append(abs(traj.U0_values[idx] - exact))
        for coarse, fine in zip(errs, errs[1:]):
            assert 3.4 < coarse / fine < 4.6


class TestSolve:
    def test_zero_epsilon(self):
        traj = solve(SolveConfig(spec=TORUS, p=2.0, epsilon=0.0, dt=1e-2, t_max=0.5))
        assert not traj.blew_up
        assert np.abs(traj.U0_values).max() == 0.0

    def test_blowup_time_matches_scalar_oracle_su2(self):
        spec = GroupSpec.su2(2, oversampling=2.0)
        cfg = SolveConfig(spec=spec, p=2.0, epsilon=0.5, dt=1e-3, t_max=20.0,
                          record_every=10, record_source=False)
        traj = solve(cfg)
        oracle = scalar_blowup_time(2.0, 0.5, 0.5)
        assert traj.blew_up
        assert abs(traj.T_num - oracle) / oracle < 0.01

    def test_mean_dominates_linear_part(self):
        # nonnegative data: U0(t) >= U0(0) + U0'(0)(1 - e^{-t}) while finite
        cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=0.05, u0="trivial-plus-lowest",
                          u1="trivial-plus-lowest", dt=1e-3, t_max=6.0)
        traj = solve(cfg)
        floor = traj.U0_values[0] + traj.du0_values[0] * (1.0 - np.exp(-traj.times))
        assert np.all(traj.U0_values >= 0.999 * floor)

    def test_jensen_direction(self):
        cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=0.3, u0="trivial-plus-lowest",
                          u1="trivial-plus-lowest", dt=1e-3, t_max=2.0)
        traj = solve(cfg)
        assert np.all(traj.source_means >= np.abs(traj.U0_values) ** 2.0 - 1e-12)

    def test_integral_identity_residual_order(self):
        # psi == 1 energy identity: U0' + U0 - U0'(0) - U0(0) = int int |u|^p
        def residual(dt):
            cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=0.3, u0="trivial-plus-lowest",
                              u1="trivial-plus-lowest", dt=dt, t_max=1.0 + 1e-9)
            traj = solve(cfg)
            lhs = traj.du0_values[-1] + traj.U0_values[-1] - traj.du0_values[0] - traj.U0_values[0]
            rhs = np.trapezoid(traj.source_means, traj.times)
            scale = 1.0 + abs(lhs) + abs(rhs)
            return abs(lhs - rhs), scale

        dts = (4e-3, 2e-3, 1e-3)
        res = [residual(dt) for dt in dts]
        assert res[-1][0] < 5e-4 * res[-1][1]
        order = np.polyfit(np.log(dts), np.log([r[0] for r in res]), 1)[0]
        assert order >= 2.0 - 0.2

    def test_linear_consistency_is_exact(self):
        cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=0.3, u0="trivial-plus-lowest",
                          u1="trivial-plus-lowest", dt=1e-2, t_max=0.5 + 1e-9,
                          source_scale=0.0)
        traj = solve(cfg)
        d0, d1 = initial_data(cfg)
        st = FieldState(U=0.3 * d0, V=0.3 * d1)
        ref = [st.U.mean.real]
        for _ in range(traj.times.size - 1):
            st = propagate_field(st, 1e-2)
            ref.append(st.U.mean.real)
        assert np.abs(np.array(ref) - traj.U0_values).max() == 0.0

    def test_dealiasing_insensitivity(self):
        t_ref = None
        for os_ in (2.0, 4.0):
            spec = GroupSpec.torus(1, 8, oversampling=os_)
            cfg = SolveConfig(spec=spec, p=2.0, epsilon=0.3, u0="trivial-plus-lowest",
                              u1="trivial-plus-lowest", dt=1e-3, t_max=20.0,
                              record_every=10, record_source=False)
            traj = solve(cfg)
            assert traj.blew_up
            if t_ref is None:
                t_ref = traj.T_num
            else:
                assert abs(traj.T_num - t_ref) / t_ref < 0.005

    def test_threshold_insensitivity(self):
        # polynomial blow-up: the detected time barely moves across thresholds
        times = []
        for thr in (1e6, 1e10):
            cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=0.5, dt=5e-4, t_max=20.0,
                              blowup_threshold=thr, record_every=10, record_source=False)
            times.append(solve(cfg).T_num)
        assert abs(times[1] - times[0]) / times[0] < 0.01

    def test_validation(self):
        with pytest.raises(ValueError):
            SolveConfig(spec=TORUS, p=1.0, epsilon=0.1)
        with pytest.raises(ValueError):
            SolveConfig(spec=TORUS, p=2.0, epsilon=-0.1)
        with pytest.raises(ValueError):
            SolveConfig(spec=TORUS, p=2.0, epsilon=0.1, dt=2.0, t_max=1.0)


class TestPresets:
    def test_constant(self):
        f = preset_field(TORUS, "constant:2.0", 0)
        assert abs(f.mean - 2.0) < 1e-15

    def test_trivial_plus_lowest_nonneg(self):
        for spec in (TORUS, GroupSpec.su2(2, oversampling=2.0), GroupSpec.torus(2, 3)):
            f = preset_field(spec, "trivial-plus-lowest", 0)
            g = build_grid(spec)
            vals = inverse(f, g).values.real
            assert vals.min() > 0.05
            assert abs(f.mean - 1.0) < 1e-12

    def test_random_nonneg(self):
        f = preset_field(TORUS, "random-nonneg", 42)
        g = build_grid(TORUS)
        vals = inverse(f, g).values.real
        assert vals.min() >= -1e-12
        assert f.mean.real > 0.0

    def test_modes_literal(self):
        f = preset_field(TORUS, "modes: 0=0.1 1=0.025 -1=0.025", 0)
        assert abs(f.mean - 0.1) < 1e-15
        assert abs(f.matrix((1,))[0, 0] - 0.025) < 1e-15

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            preset_field(TORUS, "bogus", 0)


class TestPicard:
    def test_zero_data_all_zero(self):
        cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=0.0, dt=2.5e-3, t_max=1.0)
        dists = picard_diagnostic(cfg, T=0.5, iters=3)
        assert dists == [0.0, 0.0, 0.0]

    def test_contraction_for_small_horizon(self):
        cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=0.01, u0="trivial-plus-lowest",
                          u1="trivial-plus-lowest", dt=2.5e-3, t_max=1.0)
        d = picard_diagnostic(cfg, T=0.5, iters=4)
        ratios = [b / a for a, b in zip(d, d[1:]) if a > 0]
        assert all(r < 1.0 for r in ratios)

    def test_contraction_strengthens_with_shrinking_horizon(self):
        # the fixed-point estimate bounds the contraction factor by c*T, so the
        # measured ratio must vanish at least linearly as T -> 0; the observed
        # rate is ~T^2 because the first Duhamel correction's value component
        # vanishes to second order at t=0
        cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=0.01, u0="trivial-plus-lowest",
                          u1="trivial-plus-lowest", dt=2.5e-3, t_max=2.0)
        horizons = (0.25, 0.5, 1.0)
        first_ratios = []
        for T in horizons:
            d = picard_diagnostic(cfg, T=T, iters=2)
            first_ratios.append(d[1] / d[0])
        slope = np.polyfit(np.log(horizons), np.log(first_ratios), 1)[0]
        assert 0.7 <= slope <= 3.0

    def test_needs_two_iterates(self):
        cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=0.01, dt=2.5e-3, t_max=1.0)
        with pytest.raises(ValueError):
            picard_diagnostic(cfg, T=0.5, iters=1)


class TestGNRatio:
    def test_constant_field_ratio_one(self):
        spec = GroupSpec.su2(2)
        f = SpectralField.from_dict(spec, {0.0: 3.0})
        assert abs(gn_ratio(f, 3.0, 3) - 1.0) < 1e-12

    def test_q2_degenerates(self):
        spec = GroupSpec.su2(2)
        rng = np.random.default_rng(1)
        f = random_real_field(spec, rng)
        assert abs(gn_ratio(f, 2.0, 3) - 1.0) < 1e-10

    def test_random_ensemble_bounded(self):
        spec = GroupSpec.su2(4)
        ratios = []
        for i in range(200):
            rng = np.random.default_rng(1000 + i)
            ratios.append(gn_ratio(random_real_field(spec, rng), 3.0, 3))
        ratios = np.array(ratios)
        assert np.all(np.isfinite(ratios))
        assert ratios.max() < 1.5
        # empirical sup stabilizes: the second hundred does not move it much
        assert ratios.max() / ratios[:100].max() < 1.25

    def test_rejects_out_of_range(self):
        spec = GroupSpec.su2(2)
        f = SpectralField.from_dict(spec, {0.0: 1.0})
        with pytest.raises(ValueError):
            gn_ratio(f, 7.0, 3)  # q > 2n/(n-2) = 6
        with pytest.raises(ValueError):
            gn_ratio(f, 1.5, 3)
        with pytest.raises(ValueError):
            gn_ratio(f, 3.0, 4)  # field lives on a 3-dimensional group


class TestMeanFunctional:
    def test_constant(self, su2_spec):
        f = SpectralField.from_dict(su2_spec, {0.0: 2.5})
        assert mean_functional(f) == 2.5

    def test_cosine_has_zero_mean(self):
        spec = GroupSpec.torus(1, 2)
        g = build_grid(spec)
        F = forward(GridField(g, np.cos(g.points[:, 0]).astype(complex)))
        assert abs(mean_functional(F)) < 1e-14

    def test_matches_quadrature(self, torus2_spec):
        rng = np.random.default_rng(17)
        g = build_grid(torus2_spec)
        f = inverse(random_real_field(torus2_spec, rng), g)
        F = forward(f)
        assert abs(mean_functional(F) - np.dot(g.weights, f.values.real)) < 1e-12


class TestEdgeBehavior:
    def test_picard_divergence_reported_not_fatal(self):
        cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=20.0, u0="constant", u1="constant",
                          dt=2.5e-2, t_max=20.0)
        with np.errstate(all="ignore"), pytest.warns(UserWarning, match="diverged"):
            d = picard_diagnostic(cfg, T=8.0, iters=9)
        assert len(d) == 9
        assert d[-1] == math.inf

    def test_grid_field_length_validation(self):
        g = build_grid(TORUS)
        with pytest.raises(ValueError):
            GridField(g, np.zeros(g.n_points + 1))

    def test_immediate_blowup_detection(self):
        cfg = SolveConfig(spec=TORUS, p=2.0, epsilon=1.0, u0="constant:2000.0",
                          u1="constant:2000.0", dt=1e-3, t_max=1.0, blowup_threshold=1e3)
        traj = solve(cfg)
        assert traj.blew_up
        assert 0.0 < traj.T_num <= 1e-3
