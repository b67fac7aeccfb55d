"""Leading-order fields by the method of characteristics.

The slow field u0 decouples, so its characteristics are straight lines and
u0 is evaluated implicitly: given (x, t), the foot xi of the line through
the point is found by a safeguarded bisection/Newton solve of
x = xi + lam(u0(xi)) * t on the relevant half-line.  The fast field v0
bends through u0 and is traced forward as a discrete fan of curves, each
carrying its initial value and the Jacobian J = dx/dxi of the flow map,
which gives the spatial derivative v0_x = v0'(xi) / J.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from shockasym import model
from shockasym.errors import (
    CoarseFanError,
    DomainError,
    FocusingError,
    OutOfHullError,
)


class Region(Enum):
    """Which family of data feeds a field.

    OUTER_LEFT continues the data on x < 0, OUTER_RIGHT the data on x > 0.
    INNER tags first-order fields living in the wedge between the shocks,
    whose leading coefficients are u0 from OUTER_RIGHT and v0 from
    OUTER_LEFT (the families that cross into the wedge).
    """

    OUTER_LEFT = "outer_left"
    OUTER_RIGHT = "outer_right"
    INNER = "inner"


_SIDE = {Region.OUTER_LEFT: "left", Region.OUTER_RIGHT: "right"}


@dataclass(frozen=True)
class SampledCurve:
    """A curve x(t) sampled on a uniform time grid, linearly interpolated."""

    t: np.ndarray
    x: np.ndarray

    def __call__(self, t):
        return np.interp(t, self.t, self.x)


def cluster_feet(span: float, count: int, side: str) -> np.ndarray:
    """Feet on one half-line, geometrically refined toward the origin.

    The origin itself is included as the limiting foot so the fan hull
    reaches the extreme characteristic emanating from the jump.
    """
    if count < 2:
        raise ValueError("need at least two feet")
    tiny = span * 1e-8
    m = count - 1
    if m > 1:
        ratio = (tiny / span) ** (1.0 / (m - 1))
        mags = span * ratio ** np.arange(m)
    else:
        mags = np.array([span])
    mags = np.append(mags, 0.0)
    if side == "left":
        return np.sort(-mags)
    return np.sort(mags)


# ---------------------------------------------------------------------------
# slow field

class U0Field:
    """Implicit evaluator for the decoupled slow field of one region."""

    def __init__(self, spec: model.ProblemSpec, region: Region, span_factor: float = 10.0):
        if region is Region.INNER:
            raise ValueError("u0 fields exist for the outer regions only")
        self.spec = spec
        self.region = region
        side = _SIDE[region]
        self.u_init, self.du_init = spec.initial.piece("u", side)
        self.lam = spec.coeffs.lam
        self.lam_u = spec.coeffs.lam_u
        span = span_factor * model.speed_bound(spec) * spec.horizon + 1.0
        if side == "left":
            self.xi_lo, self.xi_hi = -span, 0.0
        else:
            self.xi_lo, self.xi_hi = 0.0, span
        self.tol = spec.numerics.newton_tol
        self.max_iter = max(spec.numerics.newton_max_iter, 60)
        # constant data make the characteristic relation explicit
        self.flat = f"u_{side}" in spec.initial.flat
        if self.flat:
            self.flat_u = float(self.u_init(0.0))
            self.flat_speed = float(self.lam(self.flat_u))

    def eval(self, x, t):
        """Return (u0, u0_x, xi) at (x, t); x and t may be arrays."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        ta = np.broadcast_to(np.asarray(t, dtype=float), xa.shape)
        scalar = np.ndim(x) == 0

        if self.flat:
            xi = xa - self.flat_speed * ta
            edge = self.tol * (1.0 + np.abs(xa))
            bad = (xi < self.xi_lo - edge) | (xi > self.xi_hi + edge)
            if np.any(bad):
                i = int(np.argmax(bad))
                raise DomainError(
                    f"point (x={xa[i]:.6g}, t={float(ta[i]):.6g}) is outside the "
                    f"domain of dependence of the {self.region.value} data"
                )
            xi = np.clip(xi, self.xi_lo, self.xi_hi)
            if scalar:
                return self.flat_u, 0.0, float(xi[0])
            return np.full_like(xa, self.flat_u), np.zeros_like(xa), xi

        lo = np.full_like(xa, self.xi_lo)
        hi = np.full_like(xa, self.xi_hi)
        edge = self.tol * (1.0 + np.abs(xa))

        def g(xi):
            return xi + self.lam(self.u_init(xi)) * ta - xa

        g_lo, g_hi = g(lo), g(hi)
        bad = (g_lo > edge) | (g_hi < -edge)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise DomainError(
                f"point (x={xa[i]:.6g}, t={float(ta[i]):.6g}) is outside the "
                f"domain of dependence of the {self.region.value} data"
            )

        xi = 0.5 * (lo + hi)
        for _ in range(self.max_iter):
            u0 = self.u_init(xi)
            gv = xi + self.lam(u0) * ta - xa
            if np.all(np.abs(gv) <= edge):
                break
            pos = gv > 0.0
            hi = np.where(pos, xi, hi)
            lo = np.where(pos, lo, xi)
            gp = 1.0 + ta * self.lam_u(u0) * self.du_init(xi)
            safe = gp > 1e-14
            newton = xi - gv / np.where(safe, gp, 1.0)
            inside = safe & (newton > lo) & (newton < hi)
            xi = np.where(inside, newton, 0.5 * (lo + hi))

        u0 = self.u_init(xi)
        denom = 1.0 + ta * self.lam_u(u0) * self.du_init(xi)
        if np.any(denom <= 0.0):
            i = int(np.argmax(denom <= 0.0))
            raise FocusingError(
                f"slow characteristics focus at (x={xa[i]:.6g}, t={float(ta[i]):.6g})"
            )
        u0x = self.du_init(xi) / denom
        if scalar:
            return float(u0[0]), float(u0x[0]), float(xi[0])
        return u0, u0x, xi


class SwitchedU0Field:
    """Slow-field coefficient seen by fast characteristics that cross the
    slow shock: the left continuation up to the shock, the right one beyond.

    Fast curves carrying left data overtake every left slow characteristic,
    so the purely left field stops being defined along their paths; the
    physical coefficient past the slow shock is the right field.
    """

    def __init__(self, left: U0Field, right: U0Field, boundary: SampledCurve):
        self.left = left
        self.right = right
        self.boundary = boundary

    def eval(self, x, t):
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        ta = np.broadcast_to(np.asarray(t, dtype=float), xa.shape)
        scalar = np.ndim(x) == 0
        b = np.interp(ta, self.boundary.t, self.boundary.x)
        on_left = xa <= b
        u0 = np.empty_like(xa)
        u0x = np.empty_like(xa)
        xi = np.empty_like(xa)
        for mask, fld in ((on_left, self.left), (~on_left, self.right)):
            if np.any(mask):
                r = fld.eval(xa[mask], ta[mask] if np.ndim(t) else t)
                u0[mask], u0x[mask], xi[mask] = r
        if scalar:
            return float(u0[0]), float(u0x[0]), float(xi[0])
        return u0, u0x, xi


def u0_eval(field_or_region, x, t):
    """Evaluate a slow field at (x, t): returns (u0, u0_x, xi)."""
    return field_or_region.eval(x, t)


# ---------------------------------------------------------------------------
# fast-field fan

@dataclass(eq=False)
class VFan:
    """A fan of fast characteristics for one region.

    Positions X[j, k] and Jacobians J[j, k] are stored per curve j and time
    level t_k = k * dt; the carried value is constant along each curve.
    """

    region: Region
    xi: np.ndarray
    values: np.ndarray
    vprime: np.ndarray
    X: np.ndarray
    J: np.ndarray
    dt: float
    fan_count: int
    _integrate: Callable = field(repr=False, default=None)

    @property
    def n_levels(self) -> int:
        return self.X.shape[1]

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_levels)

    def coarse_tol(self, mid) -> np.ndarray:
        span = float(self.xi[-1] - self.xi[0])
        return np.maximum(8.0 * span / self.fan_count, 0.5 * np.abs(mid))

    def refine(self, j: int) -> None:
        """Insert one curve between feet j-1 and j."""
        foot = 0.5 * (self.xi[j - 1] + self.xi[j])
        xrow, jrow = self._integrate(np.array([foot]))
        side = "left" if self.region is Region.OUTER_LEFT else "right"
        vfn, dvfn = self._pieces
        self.xi = np.insert(self.xi, j, foot)
        self.values = np.insert(self.values, j, float(vfn(foot)))
        self.vprime = np.insert(self.vprime, j, float(dvfn(foot)))
        self.X = np.insert(self.X, j, xrow[0], axis=0)
        self.J = np.insert(self.J, j, jrow[0], axis=0)


def build_v_fan(spec: model.ProblemSpec, region: Region, u_field,
                horizon: Optional[float] = None, span_factor: float = 8.0,
                feet: Optional[np.ndarray] = None,
                refract_at=None) -> VFan:
    """Trace the fast-characteristic fan of one region.

    Each curve starts from a foot xi on the region's half-line, carries the
    value v0(xi), and integrates dx/dt = mu(u0(x,t), v0(xi)) together with
    the variational equation dJ/dt = mu_u*u0_x*J + mu_v*v0'(xi), J(0) = 1,
    by classical four-stage Runge-Kutta.

    For the left region ``u_field`` must carry the slow coefficient across
    the slow shock (the fast family overtakes every left slow
    characteristic), i.e. be the switched field the pipeline builds, and
    ``refract_at`` should name that shock curve: a curve crossing it changes
    dynamics discontinuously, so the step containing the crossing is split
    at the crossing time and the Jacobian picks up the refraction factor
    (mu_after - D) / (mu_before - D).

    The default foot spread is wide enough that correction fans, whose own
    curves drift, always query this fan strictly inside its hull.
    """
    if region is Region.INNER:
        raise ValueError("fans exist for the outer regions only")
    side = _SIDE[region]
    vfn, dvfn = spec.initial.piece("v", side)
    c = spec.coeffs
    T = spec.horizon if horizon is None else horizon
    dt = spec.numerics.dt
    n_steps = max(1, int(round(T / dt)))
    dt = T / n_steps
    if feet is None:
        span = span_factor * model.speed_bound(spec) * T + 1.0
        feet = cluster_feet(span, spec.numerics.fan_count, side)
    else:
        feet = np.asarray(feet, dtype=float)

    def integrate(feet_arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        vals = np.asarray(vfn(feet_arr), dtype=float)
        vpr = np.asarray(dvfn(feet_arr), dtype=float)
        X = np.empty((feet_arr.size, n_steps + 1))
        J = np.empty_like(X)
        x = feet_arr.astype(float).copy()
        jac = np.ones_like(x)
        X[:, 0], J[:, 0] = x, jac

        def rhs(tau, xs, js, vv, vp):
            u0, u0x, _ = u_field.eval(xs, tau)
            dx = c.mu(u0, vv)
            dj = c.mu_u(u0, vv) * u0x * js + c.mu_v(u0, vv) * vp
            return dx, dj

        def rk4(xs, js, ta, tb, vv, vp):
            h = tb - ta
            k1x, k1j = rhs(ta, xs, js, vv, vp)
            k2x, k2j = rhs(ta + h / 2, xs + h / 2 * k1x, js + h / 2 * k1j, vv, vp)
            k3x, k3j = rhs(ta + h / 2, xs + h / 2 * k2x, js + h / 2 * k2j, vv, vp)
            k4x, k4j = rhs(ta + h, xs + h * k3x, js + h * k3j, vv, vp)
            return (xs + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x),
                    js + h / 6 * (k1j + 2 * k2j + 2 * k3j + k4j))

        crossed = np.zeros(feet_arr.size, dtype=bool)
        for k in range(n_steps):
            t0, t1 = k * dt, (k + 1) * dt
            x_new, j_new = rk4(x, jac, t0, t1, vals, vpr)
            if refract_at is not None:
                b0 = float(np.interp(t0, refract_at.t, refract_at.s0))
                b1 = float(np.interp(t1, refract_at.t, refract_at.s0))
                d0 = x - b0
                d1 = x_new - b1
                now = (~crossed) & (d0 <= 0.0) & (d1 > 0.0)
                for i in np.nonzero(now)[0]:
                    theta = 0.0 if d1[i] <= d0[i] else -d0[i] / (d1[i] - d0[i])
                    ts = t0 + float(np.clip(theta, 0.0, 1.0)) * dt
                    one = np.array([x[i]])
                    jc = np.array([jac[i]])
                    vv = vals[i:i + 1]
                    vp = vpr[i:i + 1]
                    if ts > t0:
                        one, jc = rk4(one, jc, t0, ts, vv, vp)
                    ds = float(np.interp(ts, refract_at.t, refract_at.D0))
                    # one-sided slow values taken on the shock curve itself,
                    # which the entropy margins keep inside both domains
                    xq = float(np.interp(ts, refract_at.t, refract_at.s0))
                    u_before, _, _ = u_field.left.eval(xq, ts)
                    u_after, _, _ = u_field.right.eval(xq, ts)
                    mu_before = float(c.mu(u_before, vals[i]))
                    mu_after = float(c.mu(u_after, vals[i]))
                    jc = jc * (mu_after - ds) / (mu_before - ds)
                    if ts < t1:
                        one, jc = rk4(one, jc, ts, t1, vv, vp)
                    x_new[i], j_new[i] = one[0], jc[0]
                crossed |= now
            x, jac = x_new, j_new
            X[:, k + 1], J[:, k + 1] = x, jac
        return X, J

    X, J = integrate(feet)
    if np.any(np.diff(X, axis=0) <= 0.0):
        bad = np.argwhere(np.diff(X, axis=0) <= 0.0)[0]
        raise FocusingError(
            f"fast characteristics crossed near xi={feet[bad[0]]:.6g} "
            f"at t={bad[1] * dt:.6g} ({region.value})"
        )
    if np.any(J <= 0.0):
        bad = np.argwhere(J <= 0.0)[0]
        raise FocusingError(
            f"fan Jacobian lost positivity near xi={feet[bad[0]]:.6g} "
            f"at t={bad[1] * dt:.6g} ({region.value})"
        )

    fan = VFan(
        region=region,
        xi=feet,
        values=np.asarray(vfn(feet), dtype=float),
        vprime=np.asarray(dvfn(feet), dtype=float),
        X=X,
        J=J,
        dt=dt,
        fan_count=spec.numerics.fan_count,
        _integrate=integrate,
    )
    fan._pieces = (vfn, dvfn)
    return fan


def _level_blend(fan: VFan, t: float) -> tuple[np.ndarray, np.ndarray]:
    kmax = fan.n_levels - 2
    pos = t / fan.dt
    k = int(np.clip(np.floor(pos), 0, kmax))
    theta = float(np.clip(pos - k, 0.0, 1.0))
    nodes = fan.X[:, k] * (1.0 - theta) + fan.X[:, k + 1] * theta
    jt = fan.J[:, k] * (1.0 - theta) + fan.J[:, k + 1] * theta
    return nodes, jt


def fan_edges(fan: VFan, t: float) -> tuple[float, float]:
    """Hull boundaries (leftmost, rightmost curve position) at time t."""
    nodes, _ = _level_blend(fan, float(t))
    return float(nodes[0]), float(nodes[-1])


def v0_eval(fan: VFan, x, t: float, clamp: bool = False):
    """Interpolate (v0, v0_x) from the fan at time t.

    Queries must fall inside the fan hull (``clamp`` snaps them to the
    nearest edge instead of raising, for callers probing a fan's fringe);
    a bracketing interval much wider than the nominal spacing triggers one
    on-demand curve insertion before interpolation, and fails if the gap is
    still too wide.
    """
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    scalar = np.ndim(x) == 0

    for _attempt in range(3):
        nodes, jt = _level_blend(fan, float(t))
        tol = 1e-9 * (1.0 + np.abs(nodes[-1] - nodes[0]))
        outside = (xa < nodes[0] - tol) | (xa > nodes[-1] + tol)
        if np.any(outside):
            if not clamp:
                i = int(np.argmax(outside))
                raise OutOfHullError(
                    f"x={xa[i]:.6g} outside fan hull [{nodes[0]:.6g}, "
                    f"{nodes[-1]:.6g}] at t={t:.6g} ({fan.region.value})"
                )
            xa = np.clip(xa, nodes[0], nodes[-1])
        idx = np.clip(np.searchsorted(nodes, xa), 1, nodes.size - 1)
        gaps = fan.xi[idx] - fan.xi[idx - 1]
        mids = 0.5 * (fan.xi[idx] + fan.xi[idx - 1])
        wide = gaps > fan.coarse_tol(mids)
        if not np.any(wide):
            break
        j = int(idx[int(np.argmax(wide))])
        if _attempt == 2 or fan._integrate is None:
            raise CoarseFanError(
                f"fan bracketing interval of width {gaps[np.argmax(wide)]:.6g} "
                f"too coarse near x={xa[np.argmax(wide)]:.6g}"
            )
        fan.refine(j)

    width = nodes[idx] - nodes[idx - 1]
    w = np.clip((xa - nodes[idx - 1]) / width, 0.0, 1.0)
    v0 = fan.values[idx - 1] * (1.0 - w) + fan.values[idx] * w
    slope = fan.vprime / jt
    v0x = slope[idx - 1] * (1.0 - w) + slope[idx] * w
    if scalar:
        return float(v0[0]), float(v0x[0])
    return v0, v0x


def v0_eval_batch(fan: VFan, x: np.ndarray, t: np.ndarray):
    """Vectorised fan interpolation with a separate time per query point."""
    xa = np.asarray(x, dtype=float)
    ta = np.asarray(t, dtype=float)
    out_v = np.empty_like(xa)
    out_d = np.empty_like(xa)
    for i in range(xa.size):
        out_v[i], out_d[i] = v0_eval(fan, float(xa[i]), float(ta[i]))
    return out_v, out_d


def dump_fan_csv(fan: VFan, path) -> None:
    """Debug dump: one row per (curve, time level)."""
    times = fan.times()
    with open(path, "w") as handle:
        handle.write("region,family,xi,t,x,J,value\n")
        for j in range(fan.xi.size):
            for k in range(fan.n_levels):
                handle.write(
                    f"{fan.region.value},v,{fan.xi[j]:.17g},{times[k]:.17g},"
                    f"{fan.X[j, k]:.17g},{fan.J[j, k]:.17g},{fan.values[j]:.17g}\n"
                )
