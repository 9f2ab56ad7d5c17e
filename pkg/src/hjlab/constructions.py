"""Explicit competitor paths certifying sub- and super-additivity of the metric.

``build_doubling_path`` doubles a near-minimizer of m(t,0,y) into an
admissible curve for m(2t,0,2y): copy, straight connector to the nearest
integer translate, shifted copy with one cheap window compressed 6x in time
to pay for the connectors, and a final straight connector. Its action
exceeds 2*m(t,0,y) by a t-independent amount.

``build_halving_path`` goes the other way: an interval decomposition of the
space-time lift of a near-minimizer of m(2t,0,2y) selects half the curve
(in both time and displacement), the pieces are shifted by integer vectors
so consecutive endpoints share a unit cube, joined by short connectors, and
one long piece is compressed 3x to free the time the connectors consume.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .burago import BuragoDecomposition
from .curves import Curve, concatenate_pieces
from .errors import ConfigurationError
from .metric import MetricQuery, action_of_curve, compute_metric
from .models import LagrangianModel

# bound used for |y| <= velocity_bound * t admissibility checks; distinct
# from the connector time budget of the halving construction
DEFAULT_VELOCITY_BOUND = 2.0


@dataclass(frozen=True)
class CheapWindow:
    l: float
    width: float
    window_action: float
    window_velocity_m_integral: float


@dataclass(frozen=True)
class ShiftSchedule:
    c: tuple
    d: tuple  # d_1..d_k (d_0 = 0 implicit)
    w: tuple  # integer shift vectors
    connector_budget: int
    j: int  # index (1-based) of the compressed segment


@dataclass(frozen=True)
class DoublingReport:
    K: tuple  # six per-segment costs
    total: float
    defect: float
    w: np.ndarray
    junction_gap: float


def find_cheap_window(lag: LagrangianModel, eta: Curve, width: float,
                      budget: float = None) -> CheapWindow:
    """Cheapest window [l, l+width] over integer start offsets.

    Scans l = t0, t0+1, t0+2, ... while the window fits (a final fractional
    tail is ignored). The averaging argument guarantees the winner's action
    is at most (total + K*domain) / floor(domain/width).
    """
    t0, t1 = eta.t_start, eta.t_end
    if eta.duration < width:
        raise ConfigurationError("curve domain shorter than the window width")
    best = None
    l = t0
    while l + width <= t1 + 1e-12:
        window = eta.restrict(l, min(l + width, t1))
        act = action_of_curve(lag, window)
        if best is None or act < best[1]:
            best = (l, act, window)
        l += 1.0
    l, act, window = best
    m = lag.growth.m
    ds = np.diff(window.knots)
    speeds = np.linalg.norm(window.velocities(), axis=1)
    vel_integral = float(np.sum(ds * speeds**m))
    return CheapWindow(l=l, width=width, window_action=act,
                       window_velocity_m_integral=vel_integral)


def build_doubling_path(lag: LagrangianModel, eta: Curve, y):
    """Six-segment doubled path mu on [0, 2t] from a near-minimizer of m(t,0,y).

    Requires t > 6 (the small-time branch of the subadditivity bound needs no
    construction) and eta spanning [0, t] with eta(0) = 0, eta(t) = y.
    Returns (mu, DoublingReport).
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    t = eta.t_end
    if eta.t_start != 0.0:
        raise ConfigurationError("eta must start at time 0")
    if t <= 6:
        raise ConfigurationError("doubling construction requires t > 6")
    if np.linalg.norm(eta.start) > 1e-9 or np.linalg.norm(eta.end - y) > 1e-9:
        raise ConfigurationError("eta must join 0 to y")

    w = y - np.floor(y)  # y - w is the integer part, w in [0,1)^n
    shift = y - w
    tc = float(np.ceil(t))
    window = find_cheap_window(lag, eta, 6.0)
    l = window.l

    # the six segments of the case table; 3 and 5 may be empty when the
    # cheap window touches an end of the domain
    pieces = [eta, Curve(np.array([t, tc + 2.0]), np.array([eta.end, shift]))]
    if l > 1e-12:
        pieces.append(eta.map_time(0.0, l, tc + 2.0, tc + l + 2.0, dx=shift))
    pieces.append(eta.map_time(l, l + 6.0, tc + l + 2.0, tc + l + 3.0, dx=shift))
    if l + 6.0 < t - 1e-12:
        pieces.append(eta.map_time(l + 6.0, t, tc + l + 3.0, tc + t - 3.0, dx=shift))
    pieces.append(Curve(np.array([tc + t - 3.0, 2.0 * t]),
                        np.array([eta.end + shift, 2.0 * y])))

    K = _doubling_costs(lag, eta, y, shift, t, tc, l)

    mu, gap = concatenate_pieces(pieces)
    total = float(sum(K))
    defect = total - 2.0 * action_of_curve(lag, eta)
    report = DoublingReport(K=tuple(K), total=total, defect=defect, w=w,
                            junction_gap=gap)
    return mu, report


def _doubling_costs(lag, eta, y, shift, t, tc, l):
    """Per-segment costs K1..K6 of the doubled path (zeros for empty segments)."""
    K1 = action_of_curve(lag, eta)
    K2 = action_of_curve(lag, Curve(np.array([t, tc + 2.0]),
                                    np.array([eta.end, shift])))
    if l > 1e-12:
        K3 = action_of_curve(lag, eta.map_time(0.0, l, tc + 2.0, tc + l + 2.0, dx=shift))
    else:
        K3 = 0.0
    K4 = action_of_curve(lag, eta.map_time(l, l + 6.0, tc + l + 2.0, tc + l + 3.0, dx=shift))
    if l + 6.0 < t - 1e-12:
        K5 = action_of_curve(lag, eta.map_time(l + 6.0, t, tc + l + 3.0, tc + t - 3.0, dx=shift))
    else:
        K5 = 0.0
    K6 = action_of_curve(lag, Curve(np.array([tc + t - 3.0, 2.0 * t]),
                                    np.array([eta.end + shift, 2.0 * np.atleast_1d(y)])))
    return [K1, K2, K3, K4, K5, K6]


def check_subadditivity(lag: LagrangianModel, t: float, y, seed=0,
                        velocity_bound=DEFAULT_VELOCITY_BOUND, **metric_kwargs) -> dict:
    """Measure m(2t,0,2y) - 2*m(t,0,y) and the constructive upper bound.

    The direct defect uses two metric computations; for t > 6 the doubled
    path provides the constructive route action(mu) - 2*m(t,0,y).
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.linalg.norm(y) > velocity_bound * t + 1e-9:
        raise ConfigurationError("|y| exceeds the configured velocity bound times t")
    zero = np.zeros_like(y)
    m1 = compute_metric(lag, MetricQuery(0.0, t, zero, y, **metric_kwargs), seed=seed)
    m2 = compute_metric(lag, MetricQuery(0.0, 2.0 * t, zero, 2.0 * y, **metric_kwargs),
                        seed=seed)
    out = {
        "defect": m2.value - 2.0 * m1.value,
        "m_t": m1.value,
        "m_2t": m2.value,
        "residuals": (m1.first_order_residual, m2.first_order_residual),
    }
    if t > 6:
        mu, report = build_doubling_path(lag, m1.minimizer, y)
        out["constructive_defect"] = report.total - 2.0 * m1.value
        out["doubling_report"] = report
    return out


def small_time_threshold(dimension: int) -> float:
    """Below this t the halving construction is unnecessary: 4*(n+4)^2."""
    return 4.0 * (dimension + 4) ** 2


def build_halving_path(lag: LagrangianModel, eta: Curve, y, dec: BuragoDecomposition):
    """Shift-and-reconnect path zeta on [0, t] from a minimizer of m(2t,0,2y).

    ``dec`` decomposes the space-time lift of eta: its intervals carry half
    the displacement and half the duration. Returns
    (zeta, ShiftSchedule, upper_bound) where upper_bound = action(zeta) is an
    admissible bound for m(t,0,y).
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = eta.dim
    if eta.t_start != 0.0:
        raise ConfigurationError("eta must start at time 0")
    two_t = eta.t_end
    t = two_t / 2.0
    if t <= small_time_threshold(n):
        raise ConfigurationError(
            f"halving construction requires t > {small_time_threshold(n):g}"
        )
    kept = [ab for ab in dec.intervals if ab[1] - ab[0] > 1e-10]
    a = np.array([ab[0] for ab in kept])
    b = np.array([ab[1] for ab in kept])
    k = a.size
    if abs(float(np.sum(b - a)) - t) > 1e-6 * t:
        raise ConfigurationError("decomposition durations do not sum to half the window")

    # shift schedule: c_i smallest with c_i - a_i integer and c_i - d_prev >= 1
    c = np.empty(k)
    d = np.empty(k)
    d_prev = 0.0
    for i in range(k):
        c[i] = a[i] + np.ceil(d_prev + 1.0 - a[i])
        if not (1.0 - 1e-9 <= c[i] - d_prev < 2.0 + 1e-9):
            raise ConfigurationError("shift schedule violated its gap bounds")
        d[i] = c[i] + (b[i] - a[i])
        d_prev = d[i]

    # integer shifts: first landing point in the unit cube, then consecutive
    # landing points share a cube
    w = np.empty((k, n))
    w[0] = -np.floor(eta.at(a[0]))
    for i in range(1, k):
        w[i] = np.floor(eta.at(b[i - 1]) + w[i - 1]) - np.floor(eta.at(a[i]))

    mus = [eta.map_time(a[i], b[i], c[i], d[i], dx=w[i]) for i in range(k)]

    # connector budget: least integer exceeding the sum of schedule gaps
    gap_sum = float(c[0] + np.sum(c[1:] - d[:-1])) if k > 1 else float(c[0])
    Mc = int(np.floor(gap_sum)) + 1

    lengths = d - c
    j = int(np.argmax(lengths))
    if lengths[j] <= 3 * Mc:
        raise ConfigurationError(
            "no segment long enough to compress; malformed decomposition"
        )
    window = find_cheap_window(lag, mus[j].restrict(c[j], d[j]), 3.0 * Mc)
    l = window.l

    pieces = []
    # initial straight run 0 -> mu_1(c_1)
    pieces.append(Curve(np.array([0.0, c[0]]),
                        np.array([np.zeros(n), mus[0].start])))
    for i in range(k):
        if i < j:
            pieces.append(mus[i])
            nxt_start = mus[i + 1].start
            pieces.append(Curve(np.array([d[i], c[i + 1]]),
                                np.array([mus[i].end, nxt_start])))
        elif i == j:
            if l > c[j] + 1e-12:
                pieces.append(mus[j].restrict(c[j], l))
            pieces.append(mus[j].map_time(l, l + 3.0 * Mc, l, l + Mc))
            if d[j] > l + 3.0 * Mc + 1e-12:
                pieces.append(mus[j].map_time(l + 3.0 * Mc, d[j],
                                              l + Mc, d[j] - 2.0 * Mc))
            if i < k - 1:
                pieces.append(Curve(np.array([d[j] - 2.0 * Mc, c[j + 1] - 2.0 * Mc]),
                                    np.array([mus[j].end, mus[j + 1].start])))
        else:
            pieces.append(mus[i].map_time(c[i], d[i], c[i] - 2.0 * Mc, d[i] - 2.0 * Mc))
            if i < k - 1:
                pieces.append(Curve(np.array([d[i] - 2.0 * Mc, c[i + 1] - 2.0 * Mc]),
                                    np.array([mus[i].end, mus[i + 1].start])))
    # final straight run to y
    pieces.append(Curve(np.array([d[k - 1] - 2.0 * Mc, t]),
                        np.array([mus[k - 1].end, y])))

    zeta, gap = concatenate_pieces(pieces)
    schedule = ShiftSchedule(
        c=tuple(c), d=tuple(d),
        w=tuple(tuple(int(round(wi)) for wi in w[i]) for i in range(k)),
        connector_budget=Mc, j=j + 1,
    )
    upper_bound = action_of_curve(lag, zeta)
    return zeta, schedule, upper_bound


def complement_decomposition(dec: BuragoDecomposition, domain_end: float,
                             lift: Curve) -> BuragoDecomposition:
    """The complementary intervals of a decomposition within [0, domain_end].

    If the original intervals carry half the displacement and duration, so
    does the complement; the residual is recomputed against the lift.
    """
    from .burago import _residual

    edges = [0.0]
    for ai, bi in dec.intervals:
        edges.extend([ai, bi])
    edges.append(domain_end)
    intervals = tuple(
        (edges[2 * i], edges[2 * i + 1])
        for i in range(len(edges) // 2)
        if edges[2 * i + 1] - edges[2 * i] > 1e-12
    )
    return BuragoDecomposition(intervals, _residual(lift, intervals))


def space_time_lift(eta: Curve) -> Curve:
    """The curve s -> (eta(s), s), used to decompose time alongside space."""
    nodes = np.concatenate([eta.nodes, eta.knots[:, None]], axis=1)
    return Curve(eta.knots, nodes)


def check_superadditivity(lag: LagrangianModel, t: float, y, seed=0,
                          velocity_bound=DEFAULT_VELOCITY_BOUND,
                          constructive=None, **metric_kwargs) -> dict:
    """Measure 2*m(t,0,y) - m(2t,0,2y), optionally with the constructive route.

    The constructive route decomposes the lift of the m(2t,0,2y) minimizer,
    builds the halving path for the decomposition and for its complement,
    and sums the two admissible bounds: their total exceeds m(2t,0,2y) by a
    t-independent amount.
    """
    from .burago import burago_nd

    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.linalg.norm(y) > velocity_bound * t + 1e-9:
        raise ConfigurationError("|y| exceeds the configured velocity bound times t")
    zero = np.zeros_like(y)
    m1 = compute_metric(lag, MetricQuery(0.0, t, zero, y, **metric_kwargs), seed=seed)
    m2 = compute_metric(lag, MetricQuery(0.0, 2.0 * t, zero, 2.0 * y, **metric_kwargs),
                        seed=seed)
    out = {
        "defect": 2.0 * m1.value - m2.value,
        "m_t": m1.value,
        "m_2t": m2.value,
        "residuals": (m1.first_order_residual, m2.first_order_residual),
    }
    if constructive is None:
        constructive = t > small_time_threshold(lag.dimension)
    if constructive:
        eta = m2.minimizer
        lift = space_time_lift(eta)
        dec = burago_nd(lift, seed=seed)
        comp = complement_decomposition(dec, eta.t_end, lift)
        _, sched1, bound1 = build_halving_path(lag, eta, y, dec)
        _, sched2, bound2 = build_halving_path(lag, eta, y, comp)
        out["constructive_defect"] = (bound1 + bound2) - m2.value
        out["halving_bounds"] = (bound1, bound2)
        out["schedules"] = (sched1, sched2)
    return out
