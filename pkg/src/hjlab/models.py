"""Hamiltonian families, growth metadata, and Legendre-transformed Lagrangians.

A Hamiltonian H(x, t, p) here is 1-periodic in every component of (x, t),
convex in p, and sandwiched between power bounds

    alpha0*|p|**m0 - K0 <= H(x,t,p) <= beta0*|p|**m0 + K0.

Conjugating the bounds gives the matching sandwich for the Lagrangian
L(x,t,v) = sup_p (p.v - H(x,t,p)) with the dual exponent m = m0/(m0-1).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, RadiusTooSmallError

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

BUILTIN_FAMILIES = ("separable-quadratic", "power-coercive", "custom-table")

# Potential shapes available for the separable-quadratic family. All are
# 1-periodic in (x1, t); 'sin2x' is time-independent (the mechanical case).
_POTENTIALS = {
    "sinsin": lambda x1, t, A: A * np.sin(2 * np.pi * x1) * np.sin(2 * np.pi * t),
    "sin2x": lambda x1, t, A: A * np.sin(np.pi * x1) ** 2,
    "cosx": lambda x1, t, A: A * np.cos(2 * np.pi * x1),
}

_POTENTIAL_DX = {
    "sinsin": lambda x1, t, A: 2 * np.pi * A * np.cos(2 * np.pi * x1) * np.sin(2 * np.pi * t),
    "sin2x": lambda x1, t, A: np.pi * A * np.sin(2 * np.pi * x1),
    "cosx": lambda x1, t, A: -2 * np.pi * A * np.sin(2 * np.pi * x1),
}


@dataclass(frozen=True)
class GrowthBounds:
    """Power sandwich constants for H, plus the derived constants for L.

    The Lagrangian constants come from conjugating the power bounds:
    (c*|p|**m0)* = (1 - 1/m0) * (c*m0)**(1-m) * |v|**m, so the upper H bound
    yields the lower L bound and vice versa. The additive constant K0 passes
    through unchanged.
    """

    alpha0: float
    beta0: float
    K0: float
    m0: float

    def __post_init__(self):
        if self.alpha0 <= 0 or self.beta0 <= 0 or self.K0 < 0:
            raise ConfigurationError("growth constants must be positive (K0 >= 0)")
        if self.m0 <= 1:
            raise ConfigurationError("growth exponent m0 must exceed 1")

    @property
    def m(self) -> float:
        # conjugate exponent: 1/m + 1/m0 = 1
        return self.m0 / (self.m0 - 1.0)

    @staticmethod
    def _conjugate_coefficient(c: float, m0: float) -> float:
        m = m0 / (m0 - 1.0)
        return (1.0 - 1.0 / m0) * (c * m0) ** (1.0 - m)

    @property
    def alpha(self) -> float:
        return self._conjugate_coefficient(self.beta0, self.m0)

    @property
    def beta(self) -> float:
        return self._conjugate_coefficient(self.alpha0, self.m0)

    @property
    def K(self) -> float:
        return self.K0


@dataclass(frozen=True)
class HamiltonianModel:
    """A parametric Hamiltonian family with periodicity and growth metadata.

    Instances are immutable; evaluation is pure and vectorized, so models are
    safe to share across concurrent callers.
    """

    family: str
    params: dict
    dimension: int
    growth: GrowthBounds
    table: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in BUILTIN_FAMILIES:
            raise ConfigurationError(f"unknown Hamiltonian family {self.family!r}")
        if self.dimension < 1:
            raise ConfigurationError("dimension must be a positive integer")

    # -- constructors ------------------------------------------------------

    @classmethod
    def separable_quadratic(cls, amplitude=1.0, dimension=1, potential="sinsin"):
        """H = |p|^2/2 + V(x1, t) with a selectable periodic potential V."""
        if potential not in _POTENTIALS:
            raise ConfigurationError(f"unknown potential {potential!r}")
        growth = GrowthBounds(0.5, 0.5, abs(float(amplitude)), 2.0)
        return cls(
            family="separable-quadratic",
            params={"amplitude": float(amplitude), "potential": potential},
            dimension=dimension,
            growth=growth,
        )

    @classmethod
    def power_coercive(cls, m0=4.0, offset=0.0, dimension=1, k0=None):
        """H = a(x,t)|p|^m0 + offset with a = 1 + sin(2 pi x1) cos(2 pi t)/2."""
        if k0 is None:
            k0 = abs(float(offset))
        growth = GrowthBounds(0.5, 1.5, float(k0), float(m0))
        return cls(
            family="power-coercive",
            params={"m0": float(m0), "offset": float(offset)},
            dimension=dimension,
            growth=growth,
        )

    @classmethod
    def custom_table(cls, x_grid, t_grid, p_grid, values, growth, dimension=1):
        """Periodic trilinear interpolation of H samples on a regular grid.

        ``values[i, j, k] = H(x_grid[i], t_grid[j], p_grid[k])`` with x_grid
        and t_grid covering [0, 1) uniformly (the wrap slice is added here).
        1D only.
        """
        if dimension != 1:
            raise ConfigurationError("custom-table models are 1D only")
        x_grid = np.asarray(x_grid, dtype=float)
        t_grid = np.asarray(t_grid, dtype=float)
        p_grid = np.asarray(p_grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.shape != (x_grid.size, t_grid.size, p_grid.size):
            raise ConfigurationError("table shape does not match its grids")
        # periodic wrap in x and t
        xg = np.append(x_grid, 1.0)
        tg = np.append(t_grid, 1.0)
        vals = np.concatenate([values, values[:1]], axis=0)
        vals = np.concatenate([vals, vals[:, :1]], axis=1)
        return cls(
            family="custom-table",
            params={"p_min": float(p_grid[0]), "p_max": float(p_grid[-1])},
            dimension=1,
            growth=growth,
            table=(xg, tg, p_grid, vals),
        )

    @classmethod
    def custom_table_from_csv(cls, path, growth):
        """Load (x, t, p, H) samples on a regular grid from a CSV file."""
        xs, ts, ps, hs = [], [], [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            for row in reader:
                if not row or row[0].strip().lower() in ("x", "# x"):
                    continue
                x, t, p, h = (float(c) for c in row[:4])
                xs.append(x), ts.append(t), ps.append(p), hs.append(h)
        x_grid = np.unique(xs)
        t_grid = np.unique(ts)
        p_grid = np.unique(ps)
        n = x_grid.size * t_grid.size * p_grid.size
        if len(hs) != n:
            raise ConfigurationError("CSV samples do not fill a regular grid")
        values = np.full((x_grid.size, t_grid.size, p_grid.size), np.nan)
        xi = {v: i for i, v in enumerate(x_grid)}
        ti = {v: i for i, v in enumerate(t_grid)}
        pi = {v: i for i, v in enumerate(p_grid)}
        for x, t, p, h in zip(xs, ts, ps, hs):
            values[xi[x], ti[t], pi[p]] = h
        if np.isnan(values).any():
            raise ConfigurationError("CSV samples do not fill a regular grid")
        return cls.custom_table(x_grid, t_grid, p_grid, values, growth)

    # -- evaluation --------------------------------------------------------

    def hamiltonian(self, x, t, p):
        """Evaluate H(x, t, p), reducing (x, t) to the unit cell first.

        ``x`` and ``p`` have shape (..., n), ``t`` shape (...,); broadcasting
        over leading axes is supported.
        """
        x = np.asarray(x, dtype=float) % 1.0
        t = np.asarray(t, dtype=float) % 1.0
        p = np.asarray(p, dtype=float)
        if self.family == "separable-quadratic":
            A = self.params["amplitude"]
            V = _POTENTIALS[self.params["potential"]](x[..., 0], t, A)
            return 0.5 * np.sum(p * p, axis=-1) + V
        if self.family == "power-coercive":
            m0 = self.params["m0"]
            a = 1.0 + 0.5 * np.sin(2 * np.pi * x[..., 0]) * np.cos(2 * np.pi * t)
            speed = np.sqrt(np.sum(p * p, axis=-1))
            return a * speed**m0 + self.params["offset"]
        # custom table: trilinear, periodic in (x, t), bounded p range
        xg, tg, pg, vals = self.table
        pv = p[..., 0]
        if np.any(pv < pg[0] - 1e-12) or np.any(pv > pg[-1] + 1e-12):
            raise RadiusTooSmallError(
                "momentum outside the tabulated range "
                f"[{pg[0]}, {pg[-1]}]"
            )
        return _trilinear(xg, tg, pg, vals, x[..., 0], t, np.clip(pv, pg[0], pg[-1]))


def _trilinear(xg, tg, pg, vals, x, t, p):
    """Trilinear interpolation on the (x, t, p) grid; x, t already in [0,1)."""
    out_shape = np.broadcast(x, t, p).shape
    x, t, p = np.broadcast_arrays(x, t, p)

    def locate(g, q):
        i = np.clip(np.searchsorted(g, q, side="right") - 1, 0, g.size - 2)
        w = (q - g[i]) / (g[i + 1] - g[i])
        return i, w

    ix, wx = locate(xg, x)
    it, wt = locate(tg, t)
    ip, wp = locate(pg, p)
    acc = np.zeros(out_shape)
    for dx_, cx in ((0, 1 - wx), (1, wx)):
        for dt_, ct in ((0, 1 - wt), (1, wt)):
            for dp_, cp in ((0, 1 - wp), (1, wp)):
                acc = acc + cx * ct * cp * vals[ix + dx_, it + dt_, ip + dp_]
    return acc


def eval_hamiltonian(model: HamiltonianModel, x, t, p) -> float:
    """Scalar convenience wrapper around :meth:`HamiltonianModel.hamiltonian`."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    return float(model.hamiltonian(x, t, p))


class LagrangianModel:
    """Legendre transform of a Hamiltonian model.

    ``mode='analytic'`` uses the closed-form conjugate of the built-in
    families; ``mode='numeric'`` maximizes p.v - H(x,t,p) on a momentum grid
    with golden-section refinement per axis. Custom-table models only support
    the numeric mode.
    """

    def __init__(self, model: HamiltonianModel, mode=None, radius=None, grid_size=65):
        if mode is None:
            mode = "numeric" if model.family == "custom-table" else "analytic"
        if mode not in ("analytic", "numeric"):
            raise ConfigurationError(f"unknown conjugation mode {mode!r}")
        if mode == "analytic" and model.family == "custom-table":
            raise ConfigurationError("custom-table models have no analytic conjugate")
        if grid_size < 3:
            raise ConfigurationError("conjugation grid size must be at least 3")
        self.model = model
        self.mode = mode
        self.radius = radius
        self.grid_size = int(grid_size)

    @property
    def dimension(self) -> int:
        return self.model.dimension

    @property
    def growth(self) -> GrowthBounds:
        return self.model.growth

    def default_radius(self, v) -> float:
        """Search radius guaranteeing an interior argmax, from coercivity.

        At the maximizer, v is a subgradient of H in p, and the lower growth
        bound forces |p| <= (2|v|/(alpha0*m0))**(1/(m0-1)) + 1 once H grows
        faster than the linear term p.v.
        """
        g = self.growth
        speed = float(np.linalg.norm(np.atleast_1d(v)))
        return (2.0 * max(speed, 1.0) / (g.alpha0 * g.m0)) ** (1.0 / (g.m0 - 1.0)) + 1.0

    # -- evaluation --------------------------------------------------------

    def lagrangian(self, x, t, v):
        """Vectorized L(x, t, v); shapes as in HamiltonianModel.hamiltonian."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.mode == "analytic":
            return self._analytic(x, t, v)
        return self._numeric_batch(x, t, v)

    def lagrangian_with_grads(self, x, t, v):
        """Return (L, dL/dx, dL/dv) at (x, t, v), vectorized.

        Built-in families use closed forms; otherwise central differences
        (step 1e-5), which is what makes custom-table models usable in the
        trajectory optimizer.
        """
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.mode == "analytic":
            return self._analytic_grads(x, t, v)
        h = 1e-5
        L = self._numeric_batch(x, t, v)
        Lx = np.zeros_like(x)
        Lv = np.zeros_like(v)
        for i in range(self.dimension):
            e = np.zeros(self.dimension)
            e[i] = h
            Lx[..., i] = (self._numeric_batch(x + e, t, v) - self._numeric_batch(x - e, t, v)) / (2 * h)
            Lv[..., i] = (self._numeric_batch(x, t, v + e) - self._numeric_batch(x, t, v - e)) / (2 * h)
        return L, Lx, Lv

    def _analytic(self, x, t, v):
        model = self.model
        if model.family == "separable-quadratic":
            A = model.params["amplitude"]
            V = _POTENTIALS[model.params["potential"]](x[..., 0] % 1.0, t % 1.0, A)
            return 0.5 * np.sum(v * v, axis=-1) - V
        # power-coercive: (a|p|^m0 + c)* = phi(a)|v|^m - c
        m0 = model.params["m0"]
        m = m0 / (m0 - 1.0)
        a = 1.0 + 0.5 * np.sin(2 * np.pi * (x[..., 0] % 1.0)) * np.cos(2 * np.pi * (t % 1.0))
        phi = (1.0 - 1.0 / m0) * (a * m0) ** (1.0 - m)
        speed = np.sqrt(np.sum(v * v, axis=-1))
        return phi * speed**m - model.params["offset"]

    def _analytic_grads(self, x, t, v):
        model = self.model
        if model.family == "separable-quadratic":
            A = model.params["amplitude"]
            dV = _POTENTIAL_DX[model.params["potential"]](x[..., 0] % 1.0, t % 1.0, A)
            Lx = np.zeros_like(x)
            Lx[..., 0] = -dV
            return self._analytic(x, t, v), Lx, v.copy()
        m0 = model.params["m0"]
        m = m0 / (m0 - 1.0)
        x1 = x[..., 0] % 1.0
        tm = t % 1.0
        a = 1.0 + 0.5 * np.sin(2 * np.pi * x1) * np.cos(2 * np.pi * tm)
        da = np.pi * np.cos(2 * np.pi * x1) * np.cos(2 * np.pi * tm)
        phi = (1.0 - 1.0 / m0) * (a * m0) ** (1.0 - m)
        dphi = (1.0 - m) * phi / a
        speed = np.sqrt(np.sum(v * v, axis=-1))
        L = phi * speed**m - model.params["offset"]
        Lx = np.zeros_like(x)
        Lx[..., 0] = dphi * da * speed**m
        # m|v|^(m-2) v -> 0 as v -> 0 for m > 1
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(speed > 0.0, m * phi * speed ** (m - 2.0), 0.0)
        Lv = scale[..., None] * v
        return L, Lx, Lv

    # -- numeric conjugation ----------------------------------------------

    def _numeric_batch(self, x, t, v):
        flat_x = np.atleast_2d(x.reshape(-1, self.dimension))
        flat_t = np.atleast_1d(np.asarray(t, dtype=float)).reshape(-1)
        if flat_t.size == 1 and flat_x.shape[0] > 1:
            flat_t = np.full(flat_x.shape[0], flat_t[0])
        flat_v = np.atleast_2d(v.reshape(-1, self.dimension))
        out = np.array(
            [
                self._conjugate_point(flat_x[i], flat_t[i], flat_v[i])
                for i in range(flat_x.shape[0])
            ]
        )
        return out.reshape(np.asarray(t).shape)

    def _conjugate_point(self, x, t, v):
        R = self.radius if self.radius is not None else self.default_radius(v)
        n = self.dimension

        def neg_obj_axis(p, axis):
            def f(val):
                q = p.copy()
                q[axis] = val
                return float(np.dot(q, v) - self.model.hamiltonian(x, t, q))

            return f

        if n == 1:
            grid = np.linspace(-R, R, self.grid_size)
            vals = grid * v[0] - self.model.hamiltonian(
                np.broadcast_to(x, (grid.size, 1)), np.full(grid.size, t), grid[:, None]
            )
            k = int(np.argmax(vals))
            if k == 0 or k == grid.size - 1:
                raise RadiusTooSmallError(
                    f"conjugation argmax on the search boundary (R={R:g}); enlarge the radius"
                )
            lo, hi = grid[k - 1], grid[k + 1]
            p_star, val = _golden_max(neg_obj_axis(np.array([0.0]), 0), lo, hi)
            return val
        # n >= 2: best point on a coarse product grid, then cyclic per-axis
        # golden refinement
        per_axis = min(self.grid_size, 21)
        grid = np.linspace(-R, R, per_axis)
        mesh = np.stack(np.meshgrid(*([grid] * n), indexing="ij"), axis=-1).reshape(-1, n)
        vals = mesh @ v - self.model.hamiltonian(
            np.broadcast_to(x, (mesh.shape[0], n)), np.full(mesh.shape[0], t), mesh
        )
        p = mesh[int(np.argmax(vals))].copy()
        if np.any(np.abs(np.abs(p) - R) < 1e-12):
            raise RadiusTooSmallError(
                f"conjugation argmax on the search boundary (R={R:g}); enlarge the radius"
            )
        step = grid[1] - grid[0]
        best = -np.inf
        for _ in range(4):
            for axis in range(n):
                lo = max(p[axis] - step, -R)
                hi = min(p[axis] + step, R)
                p_axis, val = _golden_max(neg_obj_axis(p, axis), lo, hi)
                p[axis] = p_axis
                best = val
        return best


def _golden_max(f, lo, hi, tol=1e-10, max_iter=200):
    """Golden-section maximization of a unimodal scalar function on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = (a + b) / 2.0
    return x, f(x)


def legendre_transform(lag: LagrangianModel, x, t, v) -> float:
    """L(x, t, v) at a single point.

    Numeric mode maximizes over the momentum grid and raises
    :class:`RadiusTooSmallError` when the argmax lands on the boundary.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if lag.mode == "analytic":
        return float(lag._analytic(x, np.asarray(t, dtype=float), v))
    return float(lag._conjugate_point(x, float(t), v))


def verify_model(model: HamiltonianModel, samples: int, tol: float, seed=0) -> dict:
    """Check periodicity, convexity in p, and the growth sandwich on random samples.

    Failures are reported, not raised; each entry carries the worst violation
    magnitude observed.
    """
    if samples < 1:
        raise ConfigurationError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    n = model.dimension
    x = rng.random((samples, n))
    t = rng.random(samples)
    p = rng.uniform(-3.0, 3.0, (samples, n))

    base = model.hamiltonian(x, t, p)

    shifts = rng.integers(-2, 3, (samples, n + 1))
    shifted = model.hamiltonian(x + shifts[:, :n], t + shifts[:, n], p)
    periodicity_worst = float(np.max(np.abs(shifted - base))) if samples else 0.0

    p2 = rng.uniform(-3.0, 3.0, (samples, n))
    mid = model.hamiltonian(x, t, 0.5 * (p + p2))
    chord = 0.5 * (base + model.hamiltonian(x, t, p2))
    convexity_worst = float(np.max(mid - chord))

    g = model.growth
    speed = np.linalg.norm(p, axis=-1)
    lower = g.alpha0 * speed**g.m0 - g.K0
    upper = g.beta0 * speed**g.m0 + g.K0
    growth_worst = float(np.max(np.maximum(lower - base, base - upper)))

    report = {
        "periodicity": {"passed": periodicity_worst <= tol, "worst": periodicity_worst},
        "convexity": {"passed": convexity_worst <= tol, "worst": convexity_worst},
        "growth": {"passed": growth_worst <= tol, "worst": growth_worst},
    }
    report["all_passed"] = all(entry["passed"] for entry in report.values() if isinstance(entry, dict))
    return report
