import numpy as np
import pytest

from hjlab import (
    ConfigurationError,
    GrowthBounds,
    HamiltonianModel,
    LagrangianModel,
    RadiusTooSmallError,
    eval_hamiltonian,
    legendre_transform,
    verify_model,
)


@pytest.fixture
def quad_free():
    return HamiltonianModel.separable_quadratic(0.0)


@pytest.fixture
def quad_a1():
    return HamiltonianModel.separable_quadratic(1.0)


class TestGrowthBounds:
    def test_conjugate_exponent_identity(self):
        g = GrowthBounds(0.5, 0.5, 1.0, 2.0)
        assert 1.0 / g.m + 1.0 / g.m0 == 1.0

    def test_conjugate_exponent_m0_4(self):
        g = GrowthBounds(1.0, 1.0, 0.0, 4.0)
        assert g.m == pytest.approx(4.0 / 3.0)
        assert 1.0 / g.m + 1.0 / g.m0 == pytest.approx(1.0, abs=1e-15)

    def test_quadratic_self_dual_coefficients(self):
        # (|p|^2/2)* = |v|^2/2, so alpha = beta = 1/2 for alpha0 = beta0 = 1/2
        g = GrowthBounds(0.5, 0.5, 0.3, 2.0)
        assert g.alpha == pytest.approx(0.5)
        assert g.beta == pytest.approx(0.5)
        assert g.K == 0.3

    def test_rejects_bad_constants(self):
        with pytest.raises(ConfigurationError):
            GrowthBounds(-1.0, 0.5, 0.0, 2.0)
        with pytest.raises(ConfigurationError):
            GrowthBounds(0.5, 0.5, 0.0, 1.0)


class TestEvalHamiltonian:
    def test_potential_off(self, quad_free):
        assert eval_hamiltonian(quad_free, [0.0], 0.0, [2.0]) == pytest.approx(2.0)

    def test_potential_peak(self, quad_a1):
        # sin(pi/2)^2 = 1 at (x, t) = (0.25, 0.25)
        assert eval_hamiltonian(quad_a1, [0.25], 0.25, [0.0]) == pytest.approx(1.0)

    def test_periodic_reduction(self, quad_a1):
        assert eval_hamiltonian(quad_a1, [1.25], 3.25, [0.0]) == pytest.approx(1.0)

    def test_analytic_periodicity_tight(self, quad_a1):
        rng = np.random.default_rng(1)
        for _ in range(50):
            x, t, p = rng.random(), rng.random(), rng.uniform(-3, 3)
            w, v = rng.integers(-3, 4, 2)
            a = eval_hamiltonian(quad_a1, [x], t, [p])
            b = eval_hamiltonian(quad_a1, [x + w], t + v, [p])
            assert abs(a - b) <= 1e-12

    def test_unknown_family_rejected(self):
        with pytest.raises(ConfigurationError):
            HamiltonianModel(family="nope", params={}, dimension=1,
                             growth=GrowthBounds(0.5, 0.5, 0.0, 2.0))


class TestLegendreTransform:
    def test_quadratic_self_conjugate(self, quad_free):
        lag = LagrangianModel(quad_free, mode="numeric")
        assert legendre_transform(lag, [0.0], 0.0, [1.0]) == pytest.approx(0.5, abs=1e-8)

    def test_potential_shifts_conjugate_down(self, quad_a1):
        lag = LagrangianModel(quad_a1, mode="numeric")
        x, t, v = 0.15, 0.4, 1.3
        V = np.sin(2 * np.pi * x) * np.sin(2 * np.pi * t)
        expected = 0.5 * v**2 - V
        assert legendre_transform(lag, [x], t, [v]) == pytest.approx(expected, abs=1e-7)

    def test_power_coercive_quartic(self):
        # sup_p (p - p^4) at p = (1/4)^(1/3); frozen from a dense-grid scan
        # over p in [-2, 2] with 10^6 points
        model = HamiltonianModel(
            family="power-coercive", params={"m0": 4.0, "offset": 0.0},
            dimension=1, growth=GrowthBounds(1.0, 1.0, 0.0, 4.0),
        )
        # this family evaluates a(x,t)|p|^4; pick (x,t) where a = 1
        lag = LagrangianModel(model, mode="numeric")
        value = legendre_transform(lag, [0.0], 0.25, [1.0])
        assert value == pytest.approx(0.47247, abs=1e-4)

    def test_dense_grid_oracle_matches_numeric(self):
        model = HamiltonianModel.power_coercive(m0=4.0)
        lag_num = LagrangianModel(model, mode="numeric")
        x, t, v = 0.3, 0.7, 1.0
        ps = np.linspace(-2.0, 2.0, 1_000_001)
        H = model.hamiltonian(np.full((ps.size, 1), x), np.full(ps.size, t), ps[:, None])
        oracle = float(np.max(ps * v - H))
        assert legendre_transform(lag_num, [x], t, [v]) == pytest.approx(oracle, abs=1e-6)

    def test_boundary_argmax_raises(self, quad_free):
        lag = LagrangianModel(quad_free, mode="numeric", radius=0.5)
        with pytest.raises(RadiusTooSmallError):
            legendre_transform(lag, [0.0], 0.0, [2.0])  # argmax at p = 2

    def test_analytic_matches_numeric_power_coercive(self):
        model = HamiltonianModel.power_coercive(m0=3.0)
        ana = LagrangianModel(model, mode="analytic")
        num = LagrangianModel(model, mode="numeric")
        rng = np.random.default_rng(2)
        for _ in range(20):
            x, t, v = rng.random(), rng.random(), rng.uniform(-2, 2)
            a = legendre_transform(ana, [x], t, [v])
            b = legendre_transform(num, [x], t, [v])
            assert a == pytest.approx(b, abs=1e-6)


class TestFenchelYoung:
    def test_one_sided_inequality(self, quad_a1):
        lag = LagrangianModel(quad_a1)
        rng = np.random.default_rng(3)
        for _ in range(200):
            x = rng.random((1,))
            t = rng.random()
            p = rng.uniform(-3, 3, (1,))
            v = rng.uniform(-3, 3, (1,))
            L = float(lag.lagrangian(x, t, v))
            H = eval_hamiltonian(quad_a1, x, t, p)
            assert p @ v <= L + H + 1e-9

    def test_double_conjugation_recovers_h(self, quad_a1):
        lag = LagrangianModel(quad_a1)
        rng = np.random.default_rng(4)
        for _ in range(10):
            x = rng.random((1,))
            t = rng.random()
            p = rng.uniform(-1.5, 1.5)
            vs = np.linspace(-4, 4, 2001)
            Ls = lag.lagrangian(np.broadcast_to(x, (vs.size, 1)),
                                np.full(vs.size, t), vs[:, None])
            H_back = float(np.max(p * vs - Ls))
            assert H_back == pytest.approx(eval_hamiltonian(quad_a1, x, t, [p]), abs=1e-5)

    def test_growth_sandwich_for_lagrangian(self):
        model = HamiltonianModel.power_coercive(m0=4.0)
        lag = LagrangianModel(model)
        g = model.growth
        rng = np.random.default_rng(5)
        for _ in range(200):
            x = rng.random((1,))
            t = rng.random()
            v = rng.uniform(-3, 3, (1,))
            L = float(lag.lagrangian(x, t, v))
            speed = abs(v[0])
            assert g.alpha * speed**g.m - g.K - 1e-9 <= L
            assert L <= g.beta * speed**g.m + g.K + 1e-9


class TestVerifyModel:
    def test_builtin_passes(self, quad_a1):
        report = verify_model(quad_a1, 1000, 1e-9)
        assert report["all_passed"]

    def test_power_coercive_passes(self):
        report = verify_model(HamiltonianModel.power_coercive(m0=4.0), 1000, 1e-9)
        assert report["all_passed"]

    def test_concave_bump_fails_convexity(self):
        xg = np.linspace(0.0, 1.0, 5, endpoint=False)
        tg = np.linspace(0.0, 1.0, 5, endpoint=False)
        pg = np.linspace(-4.0, 4.0, 41)
        vals = np.broadcast_to(0.5 * pg**2 - np.exp(-4 * pg**2), (5, 5, 41)).copy()
        model = HamiltonianModel.custom_table(
            xg, tg, pg, vals, GrowthBounds(0.25, 1.0, 2.0, 2.0))
        report = verify_model(model, 500, 1e-9)
        assert not report["convexity"]["passed"]

    def test_growth_violation_reported_until_k0_raised(self):
        bad = HamiltonianModel.power_coercive(m0=2.0, offset=10.0, k0=0.0)
        report = verify_model(bad, 500, 1e-9)
        assert not report["growth"]["passed"]
        good = HamiltonianModel.power_coercive(m0=2.0, offset=10.0)
        assert verify_model(good, 500, 1e-9)["growth"]["passed"]

    def test_requires_positive_samples(self, quad_a1):
        with pytest.raises(ConfigurationError):
            verify_model(quad_a1, 0, 1e-9)
