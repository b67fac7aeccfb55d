"""First-order correction fields.

The order-one corrections solve linear transport equations along the
leading-order characteristics: zero data on the initial line for the outer
regions, and data fed from the shock curves for the wedge between them
(slow-family data arrive on the fast shock, fast-family data on the slow
shock, matching the directions in which characteristics cross the wedge).

Outer fields are built as fans up front.  Curves that leave their region's
domain of validity (e.g. left-data curves overtaken by or crossing the slow
shock) record the delivered value and freeze, so the one-sided traces at a
shock come from crossing records rather than from extrapolated junk.
Wedge fields are built incrementally, one new curve per time step from the
moving boundary point, which is exactly how the shock march feeds them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from shockasym import model
from shockasym.characteristics import (
    Region,
    SampledCurve,
    U0Field,
    VFan,
    cluster_feet,
    v0_eval,
)
from shockasym.errors import FocusingError, OutOfHullError

SPAN_V_CORR = 3.0
SPAN_U_CORR = 5.0

_SIDE = {Region.OUTER_LEFT: "left", Region.OUTER_RIGHT: "right"}


class Series:
    """Append-only (t, w) samples; linear interpolation, linear end
    extrapolation, zero before the first sample exists."""

    def __init__(self, capacity: int = 64):
        self._t = np.empty(capacity)
        self._w = np.empty(capacity)
        self._n = 0

    def append(self, t: float, w: float) -> None:
        if self._n == self._t.size:
            self._t = np.concatenate([self._t, np.empty(self._t.size)])
            self._w = np.concatenate([self._w, np.empty(self._w.size)])
        if self._n and t < self._t[self._n - 1]:
            t = self._t[self._n - 1]
        self._t[self._n] = t
        self._w[self._n] = w
        self._n += 1

    def __len__(self) -> int:
        return self._n

    def data(self) -> tuple[np.ndarray, np.ndarray]:
        return self._t[: self._n], self._w[: self._n]

    def __call__(self, t: float) -> float:
        n = self._n
        if n == 0:
            return 0.0
        ts, ws = self._t[:n], self._w[:n]
        if n == 1 or t <= ts[0]:
            return float(ws[0])
        if t >= ts[-1]:
            span = ts[-1] - ts[-2]
            if span <= 0.0:
                return float(ws[-1])
            return float(ws[-1] + (t - ts[-1]) * (ws[-1] - ws[-2]) / span)
        return float(np.interp(t, ts, ws))


def _strict_profile(xs: np.ndarray, ws: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(xs, kind="stable")
    xs, ws = xs[order], ws[order]
    if xs.size > 1:
        keep = np.concatenate([[True], np.diff(xs) > 0.0])
        xs, ws = xs[keep], ws[keep]
    return xs, ws


# ---------------------------------------------------------------------------
# outer correction fans

@dataclass(eq=False)
class OuterCorrection:
    """Sampled first-order field of one outer region and one family."""

    region: Region
    family: str
    xi: np.ndarray
    W: np.ndarray
    dt: float
    # u-family curves are straight lines; v-family paths are stored
    lam: Optional[np.ndarray] = None
    X: Optional[np.ndarray] = field(default=None, repr=False)
    J: Optional[np.ndarray] = field(default=None, repr=False)
    values: Optional[np.ndarray] = None
    vprime: Optional[np.ndarray] = None
    stop: Optional[SampledCurve] = None
    stop_sign: float = 1.0
    cross_t: Optional[np.ndarray] = None
    rec: Series = field(default_factory=Series)

    def positions(self, t: float) -> np.ndarray:
        if self.family == "u":
            return self.xi + self.lam * t
        k, theta = self._level(t)
        return self.X[:, k] * (1.0 - theta) + self.X[:, k + 1] * theta

    def _level(self, t: float) -> tuple[int, float]:
        kmax = self.W.shape[1] - 2
        pos = t / self.dt
        k = int(np.clip(np.floor(pos), 0, kmax))
        return k, float(np.clip(pos - k, 0.0, 1.0))

    def values_at(self, t: float) -> np.ndarray:
        k, theta = self._level(t)
        return self.W[:, k] * (1.0 - theta) + self.W[:, k + 1] * theta

    def eval(self, x, t: float, clamp: bool = False):
        """Interpolated correction value(s) at (x, t)."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        scalar = np.ndim(x) == 0
        pos = self.positions(t)
        val = self.values_at(t)
        if self.stop is not None and self.stop_sign > 0:
            # crossing the stop curve ends this region's validity: replace
            # crossed curves by the boundary node carrying the recorded trace
            alive = self.cross_t > t
            b = float(self.stop(t))
            keep = alive & (pos < b)
            xs = np.append(pos[keep], b)
            ws = np.append(val[keep], self.rec(t))
        else:
            # a freeze-only stop (right region): frozen curves keep moving on
            # their analytic paths with held values, preserving the hull
            xs, ws = pos, val
        xs, ws = _strict_profile(xs, ws)
        if xs.size == 0:
            raise OutOfHullError(f"correction fan empty at t={t:.6g}")
        if not clamp:
            tol = 1e-9 * (1.0 + abs(xs[-1] - xs[0]))
            if np.any(xa < xs[0] - tol) or np.any(xa > xs[-1] + tol):
                i = int(np.argmax((xa < xs[0] - tol) | (xa > xs[-1] + tol)))
                raise OutOfHullError(
                    f"x={xa[i]:.6g} outside correction hull "
                    f"[{xs[0]:.6g}, {xs[-1]:.6g}] at t={t:.6g} "
                    f"({self.region.value}, {self.family})"
                )
        out = np.interp(xa, xs, ws)
        if scalar:
            return float(out[0])
        return out

    def boundary_series(self) -> tuple[np.ndarray, np.ndarray]:
        """Crossing records (times, delivered values) at the stop curve."""
        return self.rec.data()


def _grid(spec: model.ProblemSpec, horizon: Optional[float]) -> tuple[int, float]:
    T = spec.horizon if horizon is None else horizon
    n_steps = max(1, int(round(T / spec.numerics.dt)))
    return n_steps, T / n_steps


def _linear_rk4(w, h, a0, b0, am, bm, a1, b1):
    """One classical Runge-Kutta step of dw/dt = a(t) w + b(t)."""
    k1 = a0 * w + b0
    k2 = am * (w + 0.5 * h * k1) + bm
    k3 = am * (w + 0.5 * h * k2) + bm
    k4 = a1 * (w + h * k3) + b1
    return w + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _detect_crossings(sign, x0, x1, b0, b1, alive):
    """Fractions of the step at which alive curves crossed the boundary."""
    d0 = sign * (x0 - b0)
    d1 = sign * (x1 - b1)
    crossed = alive & (d1 >= 0.0)
    denom = np.where(np.abs(d1 - d0) > 0.0, d1 - d0, 1.0)
    theta = np.clip(-d0 / denom, 0.0, 1.0)
    return crossed, theta


def _build_outer_u1(spec, region, u_field, v_fan, stop, horizon):
    side = _SIDE[region]
    ufn, dufn = spec.initial.piece("u", side)
    c = spec.coeffs
    n_steps, dt = _grid(spec, horizon)
    span = SPAN_U_CORR * model.speed_bound(spec) * (n_steps * dt) + 1.0
    feet = cluster_feet(span, spec.numerics.fan_count, side)
    u0 = np.asarray(ufn(feet), dtype=float)
    du = np.asarray(dufn(feet), dtype=float)
    lam = np.asarray(c.lam(u0), dtype=float)
    lamu = np.asarray(c.lam_u(u0), dtype=float)

    W = np.zeros((feet.size, n_steps + 1))
    cross_t = np.full(feet.size, np.inf)
    rec = Series(feet.size + 8)
    stop_sign = 1.0 if region is Region.OUTER_LEFT else -1.0

    # right-region slow curves fall behind the fast fan's trailing edge
    # (the fast family always outruns them); their source is continued with
    # the edge value of v0, which only ever feeds interpolation brackets in
    # a zone no consumer queries
    clamp_v0 = region is Region.OUTER_RIGHT

    w = np.zeros(feet.size)
    for k in range(n_steps):
        t0, t1 = k * dt, (k + 1) * dt
        alive = cross_t > t0
        idx = np.nonzero(alive)[0]
        if idx.size:
            sub = idx

            def coef(tau):
                xs = feet[sub] + lam[sub] * tau
                denom = 1.0 + tau * lamu[sub] * du[sub]
                if np.any(denom <= 0.0):
                    raise FocusingError("slow characteristics focus in a correction fan")
                a = -lamu[sub] * du[sub] / denom
                v0, _ = v0_eval(v_fan, xs, tau, clamp=clamp_v0)
                return a, c.f(u0[sub], v0)

            a0, b0 = coef(t0)
            am, bm = coef(t0 + dt / 2)
            a1, b1 = coef(t1)
            w_old = w[sub].copy()
            w_new = _linear_rk4(w_old, dt, a0, b0, am, bm, a1, b1)
            w[sub] = w_new
            if stop is not None:
                x0s = feet[sub] + lam[sub] * t0
                x1s = feet[sub] + lam[sub] * t1
                crossed, theta = _detect_crossings(
                    stop_sign, x0s, x1s, float(stop(t0)), float(stop(t1)),
                    np.ones(sub.size, dtype=bool),
                )
                if np.any(crossed):
                    tc = t0 + theta * dt
                    wc = w_old + theta * (w_new - w_old)
                    order = np.argsort(tc[crossed])
                    for tcj, wcj in zip(tc[crossed][order], wc[crossed][order]):
                        rec.append(float(tcj), float(wcj))
                    cross_t[sub[crossed]] = tc[crossed]
        W[:, k + 1] = w

    return OuterCorrection(
        region=region, family="u", xi=feet, W=W, dt=dt,
        lam=lam, stop=stop, stop_sign=stop_sign, cross_t=cross_t, rec=rec,
    )


def _build_outer_v1(spec, region, u_field, u1_field, stop, horizon):
    side = _SIDE[region]
    vfn, dvfn = spec.initial.piece("v", side)
    c = spec.coeffs
    n_steps, dt = _grid(spec, horizon)
    span = SPAN_V_CORR * model.speed_bound(spec) * (n_steps * dt) + 1.0
    feet = cluster_feet(span, spec.numerics.fan_count, side)
    vals = np.asarray(vfn(feet), dtype=float)
    vpr = np.asarray(dvfn(feet), dtype=float)

    X = np.empty((feet.size, n_steps + 1))
    J = np.empty_like(X)
    W = np.zeros_like(X)
    x = feet.astype(float).copy()
    jac = np.ones_like(x)
    w = np.zeros_like(x)
    X[:, 0], J[:, 0] = x, jac
    cross_t = np.full(feet.size, np.inf)
    rec = Series(feet.size + 8)
    stop_sign = 1.0 if region is Region.OUTER_LEFT else -1.0

    def path_rhs(tau, xs, js):
        uq, u0x, _ = u_field.eval(xs, tau)
        dx = c.mu(uq, vals)
        dj = c.mu_u(uq, vals) * u0x * js + c.mu_v(uq, vals) * vpr
        return dx, dj

    for k in range(n_steps):
        t0, t1 = k * dt, (k + 1) * dt
        alive = cross_t > t0

        # paths and Jacobians advance for every curve; values only while the
        # curve is still inside its region of validity
        k1x, k1j = path_rhs(t0, x, jac)
        k2x, k2j = path_rhs(t0 + dt / 2, x + dt / 2 * k1x, jac + dt / 2 * k1j)
        k3x, k3j = path_rhs(t0 + dt / 2, x + dt / 2 * k2x, jac + dt / 2 * k2j)
        k4x, k4j = path_rhs(t0 + dt, x + dt * k3x, jac + dt * k3j)
        x_new = x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        jac_new = jac + dt / 6 * (k1j + 2 * k2j + 2 * k3j + k4j)

        idx = np.nonzero(alive)[0]
        if idx.size:
            sub = idx

            def value_coef(tau, frac):
                xs = x[sub] * (1.0 - frac) + x_new[sub] * frac
                js = jac[sub] * (1.0 - frac) + jac_new[sub] * frac
                uq, _, _ = u_field.eval(xs, tau)
                v0x = vpr[sub] / js
                a = -c.mu_v(uq, vals[sub]) * v0x
                u1 = np.atleast_1d(u1_field.eval(xs, tau, clamp=True))
                b = -c.mu_u(uq, vals[sub]) * u1 * v0x + c.g(uq, vals[sub])
                return a, b

            a0, b0 = value_coef(t0, 0.0)
            am, bm = value_coef(t0 + dt / 2, 0.5)
            a1, b1 = value_coef(t1, 1.0)
            w_old = w[sub].copy()
            w_new = _linear_rk4(w_old, dt, a0, b0, am, bm, a1, b1)
            w[sub] = w_new
            if stop is not None:
                crossed, theta = _detect_crossings(
                    stop_sign, x[sub], x_new[sub], float(stop(t0)), float(stop(t1)),
                    np.ones(sub.size, dtype=bool),
                )
                if np.any(crossed):
                    tc = t0 + theta * dt
                    wc = w_old + theta * (w_new - w_old)
                    order = np.argsort(tc[crossed])
                    for tcj, wcj in zip(tc[crossed][order], wc[crossed][order]):
                        rec.append(float(tcj), float(wcj))
                    cross_t[sub[crossed]] = tc[crossed]

        x, jac = x_new, jac_new
        X[:, k + 1], J[:, k + 1], W[:, k + 1] = x, jac, w

    return OuterCorrection(
        region=region, family="v", xi=feet, W=W, dt=dt,
        X=X, J=J, values=vals, vprime=vpr,
        stop=stop, stop_sign=stop_sign, cross_t=cross_t, rec=rec,
    )


# ---------------------------------------------------------------------------
# wedge fields

@dataclass(eq=False)
class WedgeContext:
    """Everything a wedge transport solve needs from the leading order."""

    spec: model.ProblemSpec
    u_right: U0Field
    fan_left: VFan
    s_minus: SampledCurve
    s_plus: SampledCurve


class InnerUField:
    """Slow-family correction inside the wedge.

    Curves are launched from the fast shock (where the slow field is
    continuous, so the boundary value there is solvable) and drift backwards
    relative to both shocks until the slow shock overtakes them, delivering
    the one-sided inner trace recorded in ``rec``.
    """

    family = "u"

    def __init__(self, ctx: WedgeContext, capacity: int, keep_history: bool = False):
        self.ctx = ctx
        cap = capacity + 2
        self.t0 = np.empty(cap)
        self.x0 = np.empty(cap)
        self.lam = np.empty(cap)
        self.u0 = np.empty(cap)
        self.du = np.empty(cap)
        self.lamu = np.empty(cap)
        self.w = np.empty(cap)
        self.n = 0
        self.lo = 0
        self.rec = Series(cap)
        self.bnd = Series(cap)
        self.history: Optional[list] = [] if keep_history else None
        self.snapshots: list = []
        self.last = None
        self.now = 0.0

    def launch(self, t: float, value: float) -> None:
        x = float(self.ctx.s_plus(t))
        u0, _, xi = self.ctx.u_right.eval(x, t)
        _, dufn = self.ctx.spec.initial.piece("u", "right")
        i = self.n
        if i == self.t0.size:
            for name in ("t0", "x0", "lam", "u0", "du", "lamu", "w"):
                setattr(self, name, np.concatenate([getattr(self, name),
                                                    np.empty(self.t0.size)]))
        self.t0[i] = t
        self.x0[i] = x
        self.u0[i] = u0
        self.lam[i] = float(self.ctx.spec.coeffs.lam(u0))
        self.du[i] = float(dufn(xi))
        self.lamu[i] = float(self.ctx.spec.coeffs.lam_u(u0))
        self.w[i] = value
        self.n += 1
        self.bnd.append(t, value)

    def _positions(self, tau: float, lo: int, n: int) -> np.ndarray:
        sl = slice(lo, n)
        return self.x0[sl] + self.lam[sl] * (tau - self.t0[sl])

    def advance(self, t0: float, t1: float) -> None:
        lo, n = self.lo, self.n
        sl = slice(lo, n)
        w0 = self.w[sl].copy()
        h = t1 - t0
        if n > lo:
            c = self.ctx.spec.coeffs

            def coef(tau):
                xs = self._positions(tau, lo, n)
                denom = 1.0 + tau * self.lamu[sl] * self.du[sl]
                if np.any(denom <= 0.0):
                    raise FocusingError("wedge slow characteristics focus")
                a = -self.lamu[sl] * self.du[sl] / denom
                v0, _ = v0_eval(self.ctx.fan_left, xs, tau)
                return a, c.f(self.u0[sl], v0)

            a0, b0 = coef(t0)
            am, bm = coef(0.5 * (t0 + t1))
            a1, b1 = coef(t1)
            w1 = _linear_rk4(w0, h, a0, b0, am, bm, a1, b1)
            self.w[sl] = w1
        else:
            w1 = w0
        self.last = (t0, t1, lo, n, w0, w1.copy())

        if n > lo:
            x0s = self._positions(t0, lo, n)
            x1s = self._positions(t1, lo, n)
            crossed, theta = _detect_crossings(
                -1.0, x0s, x1s, float(self.ctx.s_minus(t0)), float(self.ctx.s_minus(t1)),
                np.ones(n - lo, dtype=bool),
            )
            count = int(np.argmin(crossed)) if not crossed.all() else crossed.size
            for j in range(count):
                tc = t0 + theta[j] * h
                wc = w0[j] + theta[j] * (w1[j] - w0[j])
                self.rec.append(float(tc), float(wc))
            self.lo += count
        self.now = t1
        if self.history is not None:
            self.history.append(self._profile(t1))

    def interp(self, xq, tau: float):
        """Values along the live profile at any time inside the last step."""
        if self.last is None:
            return np.zeros_like(np.atleast_1d(np.asarray(xq, dtype=float)))
        t0, t1, lo, n, w0, w1 = self.last
        theta = 0.0 if t1 <= t0 else float(np.clip((tau - t0) / (t1 - t0), 0.0, 1.0))
        wt = w0 + theta * (w1 - w0)
        xs = self._positions(tau, lo, n)
        return self._interp_profile(xq, tau, xs, wt)

    def _interp_profile(self, xq, tau, xs, ws):
        xe = float(self.ctx.s_minus(tau))
        xb = float(self.ctx.s_plus(tau))
        keep = (xs > xe) & (xs < xb)
        all_x = np.concatenate([[xe], xs[keep], [xb]])
        all_w = np.concatenate([[self.rec(tau)], ws[keep], [self.bnd(tau)]])
        all_x, all_w = _strict_profile(all_x, all_w)
        return np.interp(np.asarray(xq, dtype=float), all_x, all_w)

    def _profile(self, t: float):
        xs = self._positions(t, self.lo, self.n)
        ws = self.w[self.lo:self.n]
        xe, xb = float(self.ctx.s_minus(t)), float(self.ctx.s_plus(t))
        keep = (xs > xe) & (xs < xb)
        all_x = np.concatenate([[xe], xs[keep], [xb]])
        all_w = np.concatenate([[self.rec(t)], ws[keep], [self.bnd(t)]])
        all_x, all_w = _strict_profile(all_x, all_w)
        return (t, all_x, all_w)

    def snapshot(self, t: float) -> None:
        self.snapshots.append(self._profile(t))

    def eval(self, x, t: float):
        """Field value from stored profiles (history or explicit snapshots)."""
        profiles = self.history if self.history else self.snapshots
        if not profiles:
            raise OutOfHullError("wedge field holds no stored profiles")
        ts = np.array([p[0] for p in profiles])
        i = int(np.searchsorted(ts, t))
        tol = 1e-9 * (1.0 + abs(t))
        scalar = np.ndim(x) == 0
        xa = np.atleast_1d(np.asarray(x, dtype=float))

        def at(j):
            _, xs, ws = profiles[j]
            return np.interp(xa, xs, ws)

        if i < ts.size and abs(ts[i] - t) <= max(tol, 1e-12):
            out = at(i)
        elif i > 0 and abs(ts[i - 1] - t) <= max(tol, 1e-12):
            out = at(i - 1)
        elif 0 < i < ts.size:
            th = (t - ts[i - 1]) / (ts[i] - ts[i - 1])
            out = at(i - 1) * (1.0 - th) + at(i) * th
        else:
            raise OutOfHullError(f"wedge field not recorded at t={t:.6g}")
        if scalar:
            return float(out[0])
        return out

    def exit_value(self, t: float, fallback=None) -> float:
        """Inner trace delivered at the slow shock.

        Crossing records lag the march by up to the launch-to-exit time
        ratio times dt; when the field's live state is current, the fresher
        estimate extrapolates the two curves nearest the exit boundary.
        While the wedge is still empty, ``fallback`` (the freshest opposite
        boundary value) stands in.
        """
        ts, _ = self.rec.data()
        if len(ts) and ts[-1] >= t - 1e-14:
            return self.rec(t)
        if abs(t - self.now) <= 1e-9 * (1.0 + abs(t)):
            b = float(self.ctx.s_minus(t))
            live = self.n - self.lo
            if live >= 2:
                xs = self._positions(t, self.lo, self.lo + 2)
                pts = ((float(xs[0]), float(self.w[self.lo])),
                       (float(xs[1]), float(self.w[self.lo + 1])))
            elif live == 1:
                xs = self._positions(t, self.lo, self.lo + 1)
                pts = ((float(xs[0]), float(self.w[self.lo])),
                       (float(self.ctx.s_plus(t)), self.bnd(t)))
            else:
                return self.bnd(t) if fallback is None else fallback
            (x1, w1), (x2, w2) = pts
            if abs(x2 - x1) > 0.0:
                return w1 + (b - x1) * (w2 - w1) / (x2 - x1)
            return w1
        return self.rec(t)

    def boundary_value(self, t: float) -> float:
        """Inner trace fed at the fast shock."""
        return self.bnd(t)


class InnerVField:
    """Fast-family correction inside the wedge.

    Curves are launched from the slow shock (where the fast field is
    continuous) and outrun the fast shock, delivering the inner trace
    there; coefficients couple to the slow correction through ``u1_at``.
    """

    family = "v"

    def __init__(self, ctx: WedgeContext, capacity: int, keep_history: bool = False):
        self.ctx = ctx
        cap = capacity + 2
        self.t0 = np.empty(cap)
        self.x = np.empty(cap)
        self.w = np.empty(cap)
        self.n = 0
        self.lo = 0
        self.rec = Series(cap)
        self.bnd = Series(cap)
        self.history: Optional[list] = [] if keep_history else None
        self.snapshots: list = []
        self.now = 0.0

    def launch(self, t: float, value: float) -> None:
        i = self.n
        if i == self.t0.size:
            for name in ("t0", "x", "w"):
                setattr(self, name, np.concatenate([getattr(self, name),
                                                    np.empty(self.t0.size)]))
        self.t0[i] = t
        self.x[i] = float(self.ctx.s_minus(t))
        self.w[i] = value
        self.n += 1
        self.bnd.append(t, value)

    def advance(self, t0: float, t1: float, u1_at: Callable) -> None:
        lo, n = self.lo, self.n
        sl = slice(lo, n)
        h = t1 - t0
        if n > lo:
            c = self.ctx.spec.coeffs
            x0 = self.x[sl].copy()
            w0 = self.w[sl].copy()

            def rhs(tau, xs, ws):
                uq, _, _ = self.ctx.u_right.eval(xs, tau)
                v0, v0x = v0_eval(self.ctx.fan_left, xs, tau)
                dx = c.mu(uq, v0)
                u1 = np.atleast_1d(u1_at(xs, tau))
                dw = (-c.mu_v(uq, v0) * v0x * ws
                      - c.mu_u(uq, v0) * u1 * v0x
                      + c.g(uq, v0))
                return dx, dw

            k1x, k1w = rhs(t0, x0, w0)
            k2x, k2w = rhs(t0 + h / 2, x0 + h / 2 * k1x, w0 + h / 2 * k1w)
            k3x, k3w = rhs(t0 + h / 2, x0 + h / 2 * k2x, w0 + h / 2 * k2w)
            k4x, k4w = rhs(t0 + h, x0 + h * k3x, w0 + h * k3w)
            x1 = x0 + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            w1 = w0 + h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w)
            self.x[sl], self.w[sl] = x1, w1

            crossed, theta = _detect_crossings(
                1.0, x0, x1, float(self.ctx.s_plus(t0)), float(self.ctx.s_plus(t1)),
                np.ones(n - lo, dtype=bool),
            )
            count = int(np.argmin(crossed)) if not crossed.all() else crossed.size
            for j in range(count):
                tc = t0 + theta[j] * h
                wc = w0[j] + theta[j] * (w1[j] - w0[j])
                self.rec.append(float(tc), float(wc))
            self.lo += count
        self.now = t1
        if self.history is not None:
            self.history.append(self._profile(t1))

    def _profile(self, t: float):
        sl = slice(self.lo, self.n)
        xs = self.x[sl]
        ws = self.w[sl]
        xe, xb = float(self.ctx.s_minus(t)), float(self.ctx.s_plus(t))
        keep = (xs > xe) & (xs < xb)
        all_x = np.concatenate([[xe], xs[keep], [xb]])
        all_w = np.concatenate([[self.bnd(t)], ws[keep], [self.rec(t)]])
        all_x, all_w = _strict_profile(all_x, all_w)
        return (t, all_x, all_w)

    snapshot = InnerUField.snapshot
    eval = InnerUField.eval

    def exit_value(self, t: float, fallback=None) -> float:
        """Inner trace delivered at the fast shock (see InnerUField)."""
        ts, _ = self.rec.data()
        if len(ts) and ts[-1] >= t - 1e-14:
            return self.rec(t)
        if abs(t - self.now) <= 1e-9 * (1.0 + abs(t)):
            b = float(self.ctx.s_plus(t))
            live = self.n - self.lo
            if live >= 2:
                pts = ((float(self.x[self.lo]), float(self.w[self.lo])),
                       (float(self.x[self.lo + 1]), float(self.w[self.lo + 1])))
            elif live == 1:
                pts = ((float(self.x[self.lo]), float(self.w[self.lo])),
                       (float(self.ctx.s_minus(t)), self.bnd(t)))
            else:
                return self.bnd(t) if fallback is None else fallback
            (x1, w1), (x2, w2) = pts
            if abs(x2 - x1) > 0.0:
                return w1 + (b - x1) * (w2 - w1) / (x2 - x1)
            return w1
        return self.rec(t)

    def boundary_value(self, t: float) -> float:
        """Inner trace fed at the slow shock."""
        return self.bnd(t)


# ---------------------------------------------------------------------------
# public builders

def build_u1(spec: model.ProblemSpec, region: Region, u_field, v_fan: VFan,
             boundary_data=None, curves=None, stop: Optional[SampledCurve] = None,
             horizon: Optional[float] = None):
    """Solve the slow-family first-order transport problem of one region.

    Outer regions start from zero data on the initial line.  The wedge
    (Region.INNER) requires ``boundary_data = (times, values)`` sampled on
    the fast shock and ``curves = (s_minus, s_plus)``; one curve per time
    step is launched from the moving boundary point.
    """
    if region is Region.INNER:
        if boundary_data is None:
            raise ValueError("wedge slow-family solve requires boundary data")
        if curves is None:
            raise ValueError("wedge solve requires the leading shock curves")
        s_minus, s_plus = curves
        ts, ws = np.asarray(boundary_data[0], float), np.asarray(boundary_data[1], float)
        n_steps, dt = _grid(spec, horizon)
        ctx = WedgeContext(spec, u_field, v_fan, s_minus, s_plus)
        inner = InnerUField(ctx, n_steps + 1, keep_history=True)
        inner.launch(0.0, float(np.interp(0.0, ts, ws)))
        inner.history.append(inner._profile(0.0))
        for k in range(n_steps):
            t0, t1 = k * dt, (k + 1) * dt
            inner.advance(t0, t1)
            inner.launch(t1, float(np.interp(t1, ts, ws)))
        return inner
    return _build_outer_u1(spec, region, u_field, v_fan, stop, horizon)


def build_v1(spec: model.ProblemSpec, region: Region, u_field, u1_field,
             boundary_data=None, curves=None, stop: Optional[SampledCurve] = None,
             horizon: Optional[float] = None, v_fan: Optional[VFan] = None):
    """Solve the fast-family first-order transport problem of one region.

    ``u1_field`` supplies the already-built slow correction whose values
    enter the coupling term.  The wedge takes ``boundary_data`` sampled on
    the slow shock.
    """
    if region is Region.INNER:
        if boundary_data is None:
            raise ValueError("wedge fast-family solve requires boundary data")
        if curves is None:
            raise ValueError("wedge solve requires the leading shock curves")
        if v_fan is None:
            raise ValueError("wedge solve requires the left fan")
        s_minus, s_plus = curves
        ts, ws = np.asarray(boundary_data[0], float), np.asarray(boundary_data[1], float)
        n_steps, dt = _grid(spec, horizon)
        ctx = WedgeContext(spec, u_field, v_fan, s_minus, s_plus)
        inner = InnerVField(ctx, n_steps + 1, keep_history=True)

        def u1_at(xs, tau):
            return u1_field.eval(xs, tau)

        inner.launch(0.0, float(np.interp(0.0, ts, ws)))
        inner.history.append(inner._profile(0.0))
        for k in range(n_steps):
            t0, t1 = k * dt, (k + 1) * dt
            inner.advance(t0, t1, u1_at)
            inner.launch(t1, float(np.interp(t1, ts, ws)))
        return inner
    return _build_outer_v1(spec, region, u_field, u1_field, stop, horizon)


# ---------------------------------------------------------------------------
# composite evaluation

@dataclass(eq=False)
class FirstOrderFields:
    """Everything needed to evaluate (u1, v1) anywhere at a given epsilon."""

    eps: float
    s0_minus: SampledCurve
    s0_plus: SampledCurve
    s1_minus: SampledCurve
    s1_plus: SampledCurve
    u1_left: OuterCorrection
    v1_left: OuterCorrection
    u1_right: OuterCorrection
    v1_right: OuterCorrection
    inner_u: InnerUField
    inner_v: InnerVField


def eval_first_order(fields: FirstOrderFields, x: float, t: float,
                     eps: Optional[float] = None) -> tuple[float, float]:
    """(u1, v1) at one point, region-resolved against the corrected shocks."""
    e = fields.eps if eps is None else eps
    xm = float(fields.s0_minus(t)) + e * float(fields.s1_minus(t))
    xp = float(fields.s0_plus(t)) + e * float(fields.s1_plus(t))
    if x < xm:
        return (float(fields.u1_left.eval(x, t)), float(fields.v1_left.eval(x, t)))
    if x > xp:
        return (float(fields.u1_right.eval(x, t)), float(fields.v1_right.eval(x, t)))
    return (float(fields.inner_u.eval(x, t)), float(fields.inner_v.eval(x, t)))


def dump_correction_csv(corr: OuterCorrection, path) -> None:
    """Debug dump mirroring the fan dump: one row per (curve, level)."""
    n_levels = corr.W.shape[1]
    with open(path, "w") as handle:
        handle.write("region,family,xi,t,x,value\n")
        for k in range(n_levels):
            t = k * corr.dt
            pos = corr.positions(t)
            for j in range(corr.xi.size):
                handle.write(
                    f"{corr.region.value},{corr.family},{corr.xi[j]:.17g},"
                    f"{t:.17g},{pos[j]:.17g},{corr.W[j, k]:.17g}\n"
                )
