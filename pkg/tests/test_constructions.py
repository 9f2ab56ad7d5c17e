import numpy as np
import pytest

from hjlab import (
    ConfigurationError,
    Curve,
    HamiltonianModel,
    LagrangianModel,
    MetricQuery,
    action_of_curve,
    build_doubling_path,
    build_halving_path,
    burago_nd,
    check_subadditivity,
    check_superadditivity,
    compute_metric,
    find_cheap_window,
)
from hjlab.constructions import (
    complement_decomposition,
    small_time_threshold,
    space_time_lift,
)


@pytest.fixture(scope="module")
def free_lag():
    return LagrangianModel(HamiltonianModel.separable_quadratic(0.0))


@pytest.fixture(scope="module")
def osc_lag():
    return LagrangianModel(HamiltonianModel.separable_quadratic(1.0))


class TestCheapWindow:
    def test_uniform_curve_first_window(self, free_lag):
        eta = Curve.straight_line(0.0, 10.0, [0.0], [1.0], 100)
        win = find_cheap_window(free_lag, eta, 6.0)
        # all windows cost the same on a straight line; ties keep the first
        assert win.l == 0.0
        assert win.window_action == pytest.approx(6.0 * 0.005)

    def test_window_avoids_expensive_stretch(self, free_lag):
        # fast in [0, 4], stationary afterwards: the cheap window sits late
        knots = np.array([0.0, 4.0, 16.0])
        nodes = np.array([[0.0], [4.0], [4.0]])
        win = find_cheap_window(free_lag, Curve(knots, nodes), 6.0)
        assert win.l >= 4.0
        assert win.window_action == pytest.approx(0.0, abs=1e-12)

    def test_averaging_bound(self, osc_lag):
        res = compute_metric(osc_lag, MetricQuery(0.0, 12.0, [0.0], [1.0]))
        eta = res.minimizer
        win = find_cheap_window(osc_lag, eta, 6.0)
        total = action_of_curve(osc_lag, eta)
        K = osc_lag.growth.K
        n_windows = int(np.floor(eta.duration / 6.0))
        assert win.window_action <= (total + K * eta.duration) / n_windows + 1e-9

    def test_window_must_fit(self, free_lag):
        eta = Curve.straight_line(0.0, 3.0, [0.0], [1.0], 8)
        with pytest.raises(ConfigurationError):
            find_cheap_window(free_lag, eta, 6.0)


class TestDoublingPath:
    def test_endpoints_and_domain(self, free_lag):
        eta = Curve.straight_line(0.0, 10.0, [0.0], [1.3], 160)
        mu, report = build_doubling_path(free_lag, eta, [1.3])
        assert mu.t_start == 0.0
        assert mu.t_end == 20.0
        assert np.allclose(mu.at(0.0), 0.0, atol=1e-12)
        assert np.allclose(mu.at(20.0), 2.6, atol=1e-9)
        assert report.junction_gap <= 1e-12

    def test_fractional_part_recorded(self, free_lag):
        eta = Curve.straight_line(0.0, 10.0, [0.0], [2.7], 160)
        _, report = build_doubling_path(free_lag, eta, [2.7])
        assert report.w[0] == pytest.approx(0.7)

    def test_total_matches_curve_action(self, free_lag):
        eta = Curve.straight_line(0.0, 10.0, [0.0], [1.0], 160)
        mu, report = build_doubling_path(free_lag, eta, [1.0])
        assert report.total == pytest.approx(action_of_curve(free_lag, mu), abs=1e-8)

    def test_admissibility_upper_bound(self, osc_lag):
        # the doubled path is a competitor for m(2t, 0, 2y)
        t, y = 10.0, 1.0
        res = compute_metric(osc_lag, MetricQuery(0.0, t, [0.0], [y]))
        mu, report = build_doubling_path(osc_lag, res.minimizer, [y])
        m2 = compute_metric(osc_lag, MetricQuery(0.0, 2 * t, [0.0], [2 * y]))
        assert report.total >= m2.value - 1e-6

    def test_requires_large_time(self, free_lag):
        eta = Curve.straight_line(0.0, 5.0, [0.0], [1.0], 80)
        with pytest.raises(ConfigurationError):
            build_doubling_path(free_lag, eta, [1.0])

    def test_requires_matching_endpoints(self, free_lag):
        eta = Curve.straight_line(0.0, 10.0, [0.0], [1.0], 160)
        with pytest.raises(ConfigurationError):
            build_doubling_path(free_lag, eta, [2.0])


class TestSubadditivity:
    def test_free_particle_zero_defect(self, free_lag):
        out = check_subadditivity(free_lag, 10.0, [1.0])
        assert out["defect"] == pytest.approx(0.0, abs=1e-8)
        assert out["constructive_defect"] >= out["defect"] - 1e-9

    def test_oscillatory_defect_bounded(self, osc_lag):
        out = check_subadditivity(osc_lag, 10.0, [1.0])
        # the direct defect can be slightly negative only through
        # discretization noise; the constructive one is an upper bound
        assert out["defect"] >= -0.05
        assert out["constructive_defect"] >= out["defect"] - 1e-9
        assert np.isfinite(out["constructive_defect"])

    def test_velocity_bound_enforced(self, free_lag):
        with pytest.raises(ConfigurationError):
            check_subadditivity(free_lag, 2.0, [10.0])

    def test_no_construction_below_threshold(self, free_lag):
        out = check_subadditivity(free_lag, 4.0, [1.0])
        assert "constructive_defect" not in out


class TestSpaceTimeLift:
    def test_lift_appends_time_coordinate(self):
        eta = Curve.straight_line(0.0, 4.0, [1.0], [3.0], 4)
        lift = space_time_lift(eta)
        assert lift.dim == 2
        assert np.allclose(lift.nodes[:, 1], lift.knots)

    def test_complement_partitions_domain(self):
        eta = Curve.straight_line(0.0, 8.0, [0.0], [2.0], 16)
        lift = space_time_lift(eta)
        dec = burago_nd(lift)
        comp = complement_decomposition(dec, 8.0, lift)
        assert dec.duration_sum + comp.duration_sum == pytest.approx(8.0, abs=1e-9)
        # half the displacement each, so the complement certifies too
        assert comp.residual <= max(1e-6, 2 * dec.residual + 1e-9)


class TestHalvingPath:
    def test_threshold_value(self):
        assert small_time_threshold(1) == 100.0

    def test_free_particle_construction(self, free_lag):
        t, y = 150.0, 1.0
        m2 = compute_metric(free_lag, MetricQuery(0.0, 2 * t, [0.0], [2 * y],
                                                  multistarts=1), seed=0)
        eta = m2.minimizer
        lift = space_time_lift(eta)
        dec = burago_nd(lift)
        zeta, sched, bound = build_halving_path(free_lag, eta, [y], dec)
        assert zeta.t_start == 0.0
        assert zeta.t_end == pytest.approx(t)
        assert np.allclose(zeta.at(0.0), 0.0, atol=1e-12)
        assert np.allclose(zeta.at(t), y, atol=1e-9)
        # schedule invariants: first gap in [1, 2), integer shifts
        d_prev = 0.0
        for ci, di in zip(sched.c, sched.d):
            assert 1.0 - 1e-9 <= ci - d_prev < 2.0 + 1e-9
            d_prev = di
        assert all(isinstance(wi, int) for shift in sched.w for wi in shift)
        # admissibility: the bound dominates m(t, 0, y)
        m1 = compute_metric(free_lag, MetricQuery(0.0, t, [0.0], [y],
                                                  multistarts=1), seed=0)
        assert bound >= m1.value - 1e-6

    def test_rejects_small_time(self, free_lag):
        eta = Curve.straight_line(0.0, 100.0, [0.0], [1.0], 64)
        dec = burago_nd(space_time_lift(eta))
        with pytest.raises(ConfigurationError):
            build_halving_path(free_lag, eta, [0.5], dec)

    def test_rejects_wrong_duration_sum(self, free_lag):
        from hjlab.burago import BuragoDecomposition

        eta = Curve.straight_line(0.0, 400.0, [0.0], [2.0], 512)
        bad = BuragoDecomposition(((0.0, 50.0),), 0.0)  # 50 != 200
        with pytest.raises(ConfigurationError):
            build_halving_path(free_lag, eta, [1.0], bad)


class TestSuperadditivity:
    def test_free_particle_zero_defect(self, free_lag):
        out = check_superadditivity(free_lag, 150.0, [1.0], multistarts=1)
        assert out["defect"] == pytest.approx(0.0, abs=1e-6)
        assert out["constructive_defect"] >= -1e-6
        b1, b2 = out["halving_bounds"]
        assert b1 + b2 >= out["m_2t"] - 1e-6

    def test_oscillatory_constructive_route(self, osc_lag):
        out = check_superadditivity(osc_lag, 200.0, [1.0], seed=1)
        assert np.isfinite(out["constructive_defect"])
        assert out["constructive_defect"] >= out["defect"] - 1e-9
        assert len(out["schedules"]) == 2

    def test_constructive_flag_off(self, osc_lag):
        out = check_superadditivity(osc_lag, 150.0, [1.0], constructive=False)
        assert "constructive_defect" not in out
