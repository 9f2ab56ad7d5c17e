"""Homogenized cost, effective Lagrangian/Hamiltonian tables, Hopf-Lax solver.

The homogenized cost is the linear-rescaling limit of the travel metric,
and by Hopf-Lax it is t * Lbar((y-x)/t). We estimate Lbar(q) by metric
computations at doubling window lengths and extrapolate under the additive
defect model m(2^k)/2^k = mbar + c/2^k, which is exactly the error form the
iterated doubling inequality provides. Hbar is the convex conjugate of the
tabulated Lbar.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, RadiusTooSmallError, UnsupportedDimensionError
from .metric import MetricQuery, compute_metric
from .models import LagrangianModel

DEFAULT_LEVELS = 5
DEFAULT_Q_GRID = (-2.0, 2.0, 33)


@dataclass(frozen=True)
class EffectiveLagrangianTable:
    q_grid: np.ndarray
    values: np.ndarray
    levels: int
    extrapolation_residuals: np.ndarray  # last successive difference per point

    def __call__(self, q):
        """Linear interpolation between grid points."""
        q = np.asarray(q, dtype=float)
        if np.any(q < self.q_grid[0] - 1e-12) or np.any(q > self.q_grid[-1] + 1e-12):
            raise ConfigurationError("velocity outside the tabulated range")
        return np.interp(q, self.q_grid, self.values)

    def convexity_defect(self) -> float:
        """Worst midpoint-convexity violation along the grid (<= 0 is convex)."""
        mid = 0.5 * (self.values[:-2] + self.values[2:])
        return float(np.max(self.values[1:-1] - mid))


@dataclass(frozen=True)
class EffectiveHamiltonianTable:
    p_grid: np.ndarray
    values: np.ndarray
    source: EffectiveLagrangianTable

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return np.interp(p, self.p_grid, self.values)


def homogenized_metric(lag: LagrangianModel, q, levels: int = DEFAULT_LEVELS,
                       seed=0, **metric_kwargs):
    """Extrapolated limit of m(2^j, 0, 2^j q) / 2^j.

    Returns (value, residuals) where residuals are the successive level
    differences. The extrapolation uses the last two levels,
    2*a_j - a_{j-1}, which cancels the leading c/2^j defect exactly.
    """
    if levels < 2:
        raise ConfigurationError("need at least 2 doubling levels")
    q = np.atleast_1d(np.asarray(q, dtype=float))
    zero = np.zeros_like(q)
    per_level = []
    for j in range(levels + 1):
        scale = float(2**j)
        res = compute_metric(
            lag,
            MetricQuery(0.0, scale, zero, scale * q, **metric_kwargs),
            seed=seed,
        )
        per_level.append(res.value / scale)
    per_level = np.array(per_level)
    residuals = np.diff(per_level)
    value = 2.0 * per_level[-1] - per_level[-2]
    return float(value), residuals


def effective_lagrangian(lag: LagrangianModel, q_grid=None,
                         levels: int = DEFAULT_LEVELS, seed=0,
                         **metric_kwargs) -> EffectiveLagrangianTable:
    """Tabulate Lbar(q) = mbar(1, 0, q) on a velocity grid (1D models).

    The table records raw extrapolated values; convexity is checked by the
    caller, never enforced by smoothing.
    """
    if lag.dimension != 1:
        raise UnsupportedDimensionError("effective tables are implemented for 1D models")
    if q_grid is None:
        lo, hi, npts = DEFAULT_Q_GRID
        q_grid = np.linspace(lo, hi, npts)
    q_grid = np.asarray(q_grid, dtype=float)
    values = np.empty(q_grid.size)
    residuals = np.empty(q_grid.size)
    for i, qv in enumerate(q_grid):
        val, res = homogenized_metric(lag, [qv], levels=levels, seed=seed,
                                      **metric_kwargs)
        values[i] = val
        residuals[i] = res[-1]
    return EffectiveLagrangianTable(q_grid=q_grid, values=values, levels=levels,
                                    extrapolation_residuals=residuals)


def effective_hamiltonian(tab: EffectiveLagrangianTable,
                          p_grid) -> EffectiveHamiltonianTable:
    """Hbar(p) = max_q (p*q - Lbar(q)) over the table, with parabolic refinement.

    Raises when the argmax sits on the edge of the q-grid: the grid is too
    narrow for that p.
    """
    p_grid = np.asarray(p_grid, dtype=float)
    q = tab.q_grid
    vals = np.empty(p_grid.size)
    for i, p in enumerate(p_grid):
        obj = p * q - tab.values
        k = int(np.argmax(obj))
        if k == 0 or k == q.size - 1:
            raise RadiusTooSmallError(
                f"conjugation argmax on the q-grid boundary for p={p:g}; widen the grid"
            )
        # local quadratic refinement through the three bracketing points
        y0, y1, y2 = obj[k - 1], obj[k], obj[k + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom < 0:
            shift = 0.5 * (y0 - y2) / denom
            shift = float(np.clip(shift, -1.0, 1.0))
            vals[i] = y1 - 0.25 * (y0 - y2) * shift
        else:
            vals[i] = y1
    return EffectiveHamiltonianTable(p_grid=p_grid, values=vals, source=tab)


def hopf_lax_effective(tab: EffectiveLagrangianTable, g, x: float, t: float,
                       radius: float = None, coarse: int = 65,
                       refine_rounds: int = 3) -> float:
    """u(x, t) = inf_y ( g(y) + t * Lbar((x - y)/t) ) by grid search + refinement.

    The search covers |x - y| <= radius * t (default: the tabulated velocity
    range); a minimizer on the search boundary triggers a warning, not an
    error.
    """
    if t <= 0:
        raise ConfigurationError("Hopf-Lax evaluation needs t > 0")
    if radius is None:
        radius = float(min(-tab.q_grid[0], tab.q_grid[-1]))
    lo, hi = x - radius * t, x + radius * t

    def objective(ys):
        qs = (x - ys) / t
        return np.array([g(yv) for yv in ys]) + t * tab(qs)

    ys = np.linspace(lo, hi, coarse)
    vals = objective(ys)
    k = int(np.argmin(vals))
    if k == 0 or k == ys.size - 1:
        warnings.warn("Hopf-Lax minimizer on the search boundary; enlarge the radius")
    # near a kink of u the coarse scan sees several nearly-tied basins whose
    # depths differ only after refinement, so refine each candidate basin
    cands = [i for i in range(ys.size)
             if vals[i] <= vals[max(i - 1, 0)]
             and vals[i] <= vals[min(i + 1, ys.size - 1)]]
    cands.sort(key=lambda i: vals[i])
    cands = [i for i in cands if vals[i] <= vals[cands[0]] + 0.05][:3]
    step0 = ys[1] - ys[0]
    best = float(vals[k])
    for i in cands:
        yy, kk, step = ys, i, step0
        for _ in range(refine_rounds):
            yy = np.linspace(max(lo, yy[kk] - step), min(hi, yy[kk] + step), 17)
            vv = objective(yy)
            kk = int(np.argmin(vv))
            step = yy[1] - yy[0]
            best = min(best, float(vv[kk]))
    return best


def mechanical_hbar_quadrature(potential, hbar: float, n_points: int = 100_000) -> float:
    """Momentum as a function of the energy level for 1D mechanical Hamiltonians.

    For H = p^2/2 + V(x) with V 1-periodic and hbar >= max V, the classical
    identity |p| = integral_0^1 sqrt(2*(hbar - V(x))) dx holds above the flat
    piece of Hbar. Serves as an independent oracle for the conjugation route.
    """
    xs = (np.arange(n_points) + 0.5) / n_points
    integrand = 2.0 * (hbar - potential(xs))
    if np.any(integrand < -1e-12):
        raise ConfigurationError("energy level below the potential maximum")
    return float(np.mean(np.sqrt(np.maximum(integrand, 0.0))))


def invert_mechanical_quadrature(potential, p: float, hbar_max: float = 50.0,
                                 tol: float = 1e-10) -> float:
    """Solve |p| = integral sqrt(2(hbar - V)) for hbar by bisection."""
    xs = (np.arange(100_000) + 0.5) / 100_000
    vmax = float(np.max(potential(xs)))
    lo, hi = vmax, hbar_max
    if mechanical_hbar_quadrature(potential, hi) < abs(p):
        raise ConfigurationError("hbar_max too small for this momentum")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mechanical_hbar_quadrature(potential, mid) < abs(p):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
