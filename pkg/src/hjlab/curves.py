"""Sampled absolutely continuous curves: time knots plus spatial nodes.

A Curve is piecewise linear between its knots, so its velocity is constant
per segment. The same representation doubles as a "path" for the interval
decomposition machinery, where the target dimension may differ from the
model's spatial dimension (the space-time lift uses d = n + 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Curve:
    knots: np.ndarray  # (N+1,), strictly increasing
    nodes: np.ndarray  # (N+1, d)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        if knots.ndim != 1 or knots.size < 2:
            raise ConfigurationError("a curve needs at least two knots")
        if nodes.shape[0] != knots.size:
            raise ConfigurationError("node count must equal knot count")
        if np.any(np.diff(knots) <= 0):
            raise ConfigurationError("knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "nodes", nodes)

    # -- basic geometry ----------------------------------------------------

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def t_start(self) -> float:
        return float(self.knots[0])

    @property
    def t_end(self) -> float:
        return float(self.knots[-1])

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    @property
    def start(self) -> np.ndarray:
        return self.nodes[0]

    @property
    def end(self) -> np.ndarray:
        return self.nodes[-1]

    def at(self, s):
        """Piecewise-linear interpolation; s may be scalar or array."""
        s = np.asarray(s, dtype=float)
        out = np.empty(s.shape + (self.dim,))
        for j in range(self.dim):
            out[..., j] = np.interp(s, self.knots, self.nodes[:, j])
        return out

    def velocities(self) -> np.ndarray:
        """Constant per-segment velocity, shape (N, d)."""
        ds = np.diff(self.knots)
        return np.diff(self.nodes, axis=0) / ds[:, None]

    # -- constructors ------------------------------------------------------

    @staticmethod
    def straight_line(t0, t1, x0, x1, segments):
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        x1 = np.atleast_1d(np.asarray(x1, dtype=float))
        knots = np.linspace(t0, t1, segments + 1)
        frac = (knots - t0) / (t1 - t0)
        nodes = x0[None, :] + frac[:, None] * (x1 - x0)[None, :]
        return Curve(knots, nodes)

    @staticmethod
    def from_function(f, t0, t1, segments):
        knots = np.linspace(t0, t1, segments + 1)
        nodes = np.array([np.atleast_1d(f(s)) for s in knots], dtype=float)
        return Curve(knots, nodes)

    # -- transformations ---------------------------------------------------

    def restrict(self, a, b) -> "Curve":
        """Sub-curve on [a, b] with interpolated endpoint nodes."""
        if a < self.t_start - 1e-12 or b > self.t_end + 1e-12 or b <= a:
            raise ConfigurationError(f"[{a}, {b}] is not inside the curve's domain")
        a = max(a, self.t_start)
        b = min(b, self.t_end)
        inside = (self.knots > a) & (self.knots < b)
        knots = np.concatenate([[a], self.knots[inside], [b]])
        nodes = np.concatenate([[self.at(a)], self.nodes[inside], [self.at(b)]])
        keep = np.concatenate([[True], np.diff(knots) > 1e-14])
        return Curve(knots[keep], nodes[keep])

    def shift(self, dx=None, dt=0.0) -> "Curve":
        nodes = self.nodes if dx is None else self.nodes + np.asarray(dx, dtype=float)
        return Curve(self.knots + dt, nodes)

    def map_time(self, src_a, src_b, dst_a, dst_b, dx=None) -> "Curve":
        """Restrict to [src_a, src_b] and affinely remap time onto [dst_a, dst_b]."""
        sub = self.restrict(src_a, src_b)
        scale = (dst_b - dst_a) / (src_b - src_a)
        knots = dst_a + (sub.knots - src_a) * scale
        knots[0] = dst_a  # guard against round-off at the ends
        knots[-1] = dst_b
        nodes = sub.nodes if dx is None else sub.nodes + np.asarray(dx, dtype=float)
        return Curve(knots, nodes)


def concatenate_pieces(pieces, gap_tol=np.inf):
    """Join curve pieces end to end into one Curve.

    Pieces must tile a common time axis (end knot of one equals start knot of
    the next, to round-off). Returns (curve, max_junction_gap) where the gap
    is the largest spatial mismatch between consecutive piece endpoints; the
    joined curve keeps the earlier piece's endpoint node.
    """
    max_gap = 0.0
    knots = [pieces[0].knots]
    nodes = [pieces[0].nodes]
    for prev, nxt in zip(pieces[:-1], pieces[1:]):
        if abs(nxt.t_start - prev.t_end) > 1e-9 * max(1.0, abs(prev.t_end)):
            raise ConfigurationError("curve pieces do not tile the time axis")
        max_gap = max(max_gap, float(np.linalg.norm(nxt.start - prev.end)))
        knots.append(nxt.knots[1:])
        nodes.append(nxt.nodes[1:])
    if max_gap > gap_tol:
        raise ConfigurationError(f"junction gap {max_gap:g} exceeds tolerance")
    all_knots = np.concatenate(knots)
    all_nodes = np.concatenate(nodes)
    # enforce strict monotonicity where mapped knots collide at junctions
    for i in range(1, all_knots.size):
        if all_knots[i] <= all_knots[i - 1]:
            all_knots[i] = np.nextafter(all_knots[i - 1], np.inf)
    return Curve(all_knots, all_nodes), max_gap
