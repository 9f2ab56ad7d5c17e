import numpy as np
import pytest

from hjlab import (
    ConfigurationError,
    HamiltonianModel,
    LagrangianModel,
    RadiusTooSmallError,
    UnsupportedDimensionError,
    effective_hamiltonian,
    effective_lagrangian,
    homogenized_metric,
    hopf_lax_effective,
)
from hjlab.effective import (
    EffectiveLagrangianTable,
    invert_mechanical_quadrature,
    mechanical_hbar_quadrature,
)


@pytest.fixture(scope="module")
def free_lag():
    return LagrangianModel(HamiltonianModel.separable_quadratic(0.0))


@pytest.fixture(scope="module")
def free_table(free_lag):
    return effective_lagrangian(free_lag, q_grid=np.linspace(-2.0, 2.0, 17),
                                levels=2, multistarts=1)


def quadratic_table(q_lo=-3.0, q_hi=3.0, n=61):
    q = np.linspace(q_lo, q_hi, n)
    return EffectiveLagrangianTable(q_grid=q, values=0.5 * q**2, levels=0,
                                    extrapolation_residuals=np.zeros(n))


class TestHomogenizedMetric:
    def test_free_particle_exact(self, free_lag):
        val, residuals = homogenized_metric(free_lag, [1.0], levels=2, multistarts=1)
        assert val == pytest.approx(0.5, abs=1e-8)
        assert np.max(np.abs(residuals)) <= 1e-8

    def test_residuals_shrink_oscillatory(self):
        lag = LagrangianModel(HamiltonianModel.separable_quadratic(1.0))
        _, residuals = homogenized_metric(lag, [1.0], levels=4, multistarts=2)
        # successive level differences collapse once the window is large
        assert abs(residuals[-1]) < abs(residuals[0])
        assert abs(residuals[-1]) < 0.05

    def test_needs_two_levels(self, free_lag):
        with pytest.raises(ConfigurationError):
            homogenized_metric(free_lag, [1.0], levels=1)


class TestEffectiveLagrangian:
    def test_free_particle_table_is_quadratic(self, free_table):
        assert np.allclose(free_table.values, 0.5 * free_table.q_grid**2, atol=1e-6)
        assert free_table.convexity_defect() <= 1e-9

    def test_interpolation_and_range_check(self, free_table):
        assert free_table(1.0) == pytest.approx(0.5, abs=1e-6)
        with pytest.raises(ConfigurationError):
            free_table(5.0)

    def test_oscillatory_sandwich_and_flat_piece(self):
        # Lbar inherits the conjugated growth sandwich, and for a mechanical
        # potential it is depressed near q = 0 (trapping)
        lag = LagrangianModel(HamiltonianModel.separable_quadratic(1.0))
        tab = effective_lagrangian(lag, q_grid=np.linspace(-1.5, 1.5, 7),
                                   levels=3, multistarts=2)
        g = lag.growth
        speeds = np.abs(tab.q_grid)
        assert np.all(tab.values >= g.alpha * speeds**g.m - g.K - 0.05)
        assert np.all(tab.values <= g.beta * speeds**g.m + g.K + 0.05)
        assert tab.convexity_defect() <= 1e-3
        assert tab.values[3] < 0.0  # q = 0 sits below the free value 0

    def test_rejects_2d(self):
        lag = LagrangianModel(HamiltonianModel.separable_quadratic(0.0, dimension=2))
        with pytest.raises(UnsupportedDimensionError):
            effective_lagrangian(lag)


class TestEffectiveHamiltonian:
    def test_quadratic_conjugates_back(self):
        tab = quadratic_table()
        htab = effective_hamiltonian(tab, np.linspace(-1.5, 1.5, 11))
        assert np.allclose(htab.values, 0.5 * htab.p_grid**2, atol=1e-3)

    def test_fenchel_young_against_source(self):
        tab = quadratic_table()
        htab = effective_hamiltonian(tab, np.linspace(-1.5, 1.5, 11))
        rng = np.random.default_rng(0)
        for _ in range(100):
            p = rng.uniform(-1.5, 1.5)
            q = rng.uniform(-3.0, 3.0)
            assert p * q <= float(tab(q)) + float(htab(p)) + 1e-3

    def test_boundary_argmax_raises(self):
        tab = quadratic_table(-1.0, 1.0, 21)
        with pytest.raises(RadiusTooSmallError):
            effective_hamiltonian(tab, np.array([3.0]))


class TestHopfLax:
    def test_linear_datum_exact(self):
        # g(y) = p*y gives u(x,t) = p*x - t*Hbar(p) = p*x - t*p^2/2
        tab = quadratic_table()
        p = 0.7
        u = hopf_lax_effective(tab, lambda y: p * y, x=0.3, t=2.0)
        assert u == pytest.approx(p * 0.3 - 2.0 * p**2 / 2.0, abs=1e-4)

    def test_quadratic_datum_exact(self):
        # g(y) = y^2/2 with Lbar = q^2/2: u(x,t) = x^2 / (2(1+t))
        tab = quadratic_table()
        u = hopf_lax_effective(tab, lambda y: 0.5 * y**2, x=1.0, t=1.0)
        assert u == pytest.approx(0.25, abs=1e-4)

    def test_boundary_minimizer_warns(self):
        tab = quadratic_table(-1.0, 1.0, 21)
        with pytest.warns(UserWarning):
            hopf_lax_effective(tab, lambda y: 10.0 * y, x=0.0, t=1.0)

    def test_needs_positive_time(self):
        tab = quadratic_table()
        with pytest.raises(ConfigurationError):
            hopf_lax_effective(tab, lambda y: 0.0, x=0.0, t=0.0)


class TestMechanicalQuadrature:
    def test_zero_potential_reduces_to_parabola(self):
        # |p| = sqrt(2 hbar) so hbar = p^2/2
        assert mechanical_hbar_quadrature(lambda x: 0.0 * x, 2.0) == pytest.approx(2.0)
        assert invert_mechanical_quadrature(lambda x: 0.0 * x, 1.0) == pytest.approx(0.5, abs=1e-8)

    def test_inversion_round_trip(self):
        # round trip holds above the flat piece, i.e. p > 2*sqrt(2)/pi
        V = lambda x: np.sin(np.pi * x) ** 2
        for p in (1.0, 1.3, 2.0):
            hbar = invert_mechanical_quadrature(V, p)
            assert mechanical_hbar_quadrature(V, hbar) == pytest.approx(p, abs=1e-6)

    def test_energy_below_potential_rejected(self):
        with pytest.raises(ConfigurationError):
            mechanical_hbar_quadrature(lambda x: np.ones_like(x), 0.5)

    def test_flat_piece_level_is_potential_max(self):
        # as p -> 0 the inverted level approaches max V (the flat piece of Hbar)
        V = lambda x: np.sin(np.pi * x) ** 2
        hbar = invert_mechanical_quadrature(V, 0.01)
        assert hbar == pytest.approx(1.0, abs=0.01)
