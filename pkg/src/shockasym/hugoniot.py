"""Shock curves: leading-order speeds from jump quotients and first-order
corrections from the linearised jump conditions.

At leading order each shock speed is a flux-difference quotient over the
jump of its conserved density (first law across the slow shock where u
jumps, second law across the fast shock where v jumps).  At first order
the two linearised jump conditions per shock are each linear in a single
unknown once the wedge transport problems supply the inner traces, and the
whole construction closes as a time march:

  1. fast shock, first condition  -> inner slow trace fed into the wedge
  2. wedge slow transport         -> inner slow trace at the slow shock
  3. slow shock, first condition  -> slow-shock speed correction
  4. slow shock, second condition -> inner fast trace fed into the wedge
  5. wedge fast transport         -> inner fast trace at the fast shock
  6. fast shock, second condition -> fast-shock speed correction

Every solve here is a generic linear solve of the full condition; the
reduced closed forms that exist in special cases serve as test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from shockasym import model
from shockasym.characteristics import (
    Region,
    SampledCurve,
    U0Field,
    VFan,
    v0_eval,
)
from shockasym.corrections import (
    InnerUField,
    InnerVField,
    OuterCorrection,
    WedgeContext,
)
from shockasym.errors import (
    DegenerateCoefficientError,
    JumpCollapseError,
    NumericalError,
)

DENOM_GUARD = 1e-12


@dataclass(frozen=True, eq=False)
class ShockCurve:
    """One discontinuity line: position, speed, and their first-order
    corrections, sampled on the marching grid."""

    side: str  # 'minus' or 'plus'
    t: np.ndarray
    s0: np.ndarray
    D0: np.ndarray
    s1: Optional[np.ndarray] = None
    D1: Optional[np.ndarray] = None

    def s0_curve(self) -> SampledCurve:
        return SampledCurve(self.t, self.s0)

    def s1_curve(self) -> SampledCurve:
        if self.s1 is None:
            raise ValueError("first-order correction not computed yet")
        return SampledCurve(self.t, self.s1)

    def position(self, t, eps: float = 0.0):
        x = np.interp(t, self.t, self.s0)
        if eps and self.s1 is not None:
            x = x + eps * np.interp(t, self.t, self.s1)
        return x


@dataclass
class TraceSet:
    """One-sided boundary values at a shock at time t.

    Outer values come from the adjacent outer region, inner (tilde) values
    from the wedge side.  First-order inner traces are None until the march
    has produced them.
    """

    side: str
    t: float
    u0: float
    v0: float
    u0x: float
    v0x: float
    ut0: float
    vt0: float
    ut0x: float
    vt0x: float
    u1: float = 0.0
    v1: float = 0.0
    ut1: Optional[float] = None
    vt1: Optional[float] = None


@dataclass(eq=False)
class LeadingFields:
    """Bundle of leading-order evaluators shared by the shock solves."""

    u0_left: U0Field
    u0_right: U0Field
    fan_left: VFan
    fan_right: VFan


# ---------------------------------------------------------------------------
# leading order

def _rk4_scalar(rhs: Callable, y0: float, t_grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = np.empty_like(t_grid)
    d = np.empty_like(t_grid)
    y[0] = y0
    d[0] = rhs(y0, t_grid[0])
    for k in range(t_grid.size - 1):
        t0 = t_grid[k]
        h = t_grid[k + 1] - t0
        k1 = d[k]
        k2 = rhs(y[k] + h / 2 * k1, t0 + h / 2)
        k3 = rhs(y[k] + h / 2 * k2, t0 + h / 2)
        k4 = rhs(y[k] + h * k3, t0 + h)
        y[k + 1] = y[k] + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        d[k + 1] = rhs(y[k + 1], t0 + h)
    return y, d


def _time_grid(spec: model.ProblemSpec, horizon: Optional[float]) -> np.ndarray:
    T = spec.horizon if horizon is None else horizon
    n = max(1, int(round(T / spec.numerics.dt)))
    return np.linspace(0.0, T, n + 1)


def solve_minus(spec: model.ProblemSpec, u0_left: U0Field, u0_right: U0Field,
                horizon: Optional[float] = None) -> ShockCurve:
    """Leading slow shock from the first conservation law's jump quotient."""
    c = spec.coeffs
    grid = _time_grid(spec, horizon)

    def rhs(x, t):
        uo, _, _ = u0_left.eval(x, t)
        ui, _, _ = u0_right.eval(x, t)
        if abs(uo - ui) < DENOM_GUARD:
            raise JumpCollapseError(f"u jump collapsed at (x={x:.6g}, t={t:.6g})")
        return (float(c.Lam(uo)) - float(c.Lam(ui))) / (uo - ui)

    s0, d0 = _rk4_scalar(rhs, 0.0, grid)
    return ShockCurve("minus", grid, s0, d0)


def solve_plus(spec: model.ProblemSpec, u0_right: U0Field,
               fan_left: VFan, fan_right: VFan,
               horizon: Optional[float] = None) -> ShockCurve:
    """Leading fast shock from the second conservation law's jump quotient."""
    c = spec.coeffs
    grid = _time_grid(spec, horizon)

    def rhs(x, t):
        uq, _, _ = u0_right.eval(x, t)
        vp, _ = v0_eval(fan_right, x, t)
        vt, _ = v0_eval(fan_left, x, t)
        dphi = float(c.Phi(uq, vp)) - float(c.Phi(uq, vt))
        if abs(dphi) < DENOM_GUARD:
            raise JumpCollapseError(f"Phi jump collapsed at (x={x:.6g}, t={t:.6g})")
        return (float(c.Psi(uq, vp)) - float(c.Psi(uq, vt))) / dphi

    s0, d0 = _rk4_scalar(rhs, 0.0, grid)
    return ShockCurve("plus", grid, s0, d0)


def solve_leading(spec: model.ProblemSpec, fields: LeadingFields,
                  horizon: Optional[float] = None) -> tuple[ShockCurve, ShockCurve]:
    """Both leading shock curves (positions and speeds only)."""
    minus = solve_minus(spec, fields.u0_left, fields.u0_right, horizon)
    plus = solve_plus(spec, fields.u0_right, fields.fan_left, fields.fan_right, horizon)
    return minus, plus


# ---------------------------------------------------------------------------
# traces

def boundary_traces(spec: model.ProblemSpec, t: float, side: str,
                    curves: tuple[ShockCurve, ShockCurve],
                    fields: LeadingFields,
                    corr: Optional[dict] = None,
                    inner: Optional[tuple] = None) -> TraceSet:
    """Evaluate all one-sided values at a shock at time t.

    ``corr`` maps 'u1_left', 'v1_left', 'u1_right', 'v1_right' to outer
    correction fields; ``inner`` is the (InnerUField, InnerVField) pair once
    the march has produced it.
    """
    minus, plus = curves
    if side == "minus":
        x = float(np.interp(t, minus.t, minus.s0))
        uo, uox, _ = fields.u0_left.eval(x, t)
        ui, uix, _ = fields.u0_right.eval(x, t)
        vo, vox = v0_eval(fields.fan_left, x, t)
        tr = TraceSet(side, t, float(uo), float(vo), float(uox), float(vox),
                      float(ui), float(vo), float(uix), float(vox))
        if corr:
            tr.u1 = float(corr["u1_left"].eval(x, t))
            tr.v1 = float(corr["v1_left"].eval(x, t))
        if inner:
            tr.ut1 = inner[0].exit_value(t)
            tr.vt1 = inner[1].boundary_value(t)
        return tr
    x = float(np.interp(t, plus.t, plus.s0))
    uo, uox, _ = fields.u0_right.eval(x, t)
    vp, vpx = v0_eval(fields.fan_right, x, t)
    vt, vtx = v0_eval(fields.fan_left, x, t)
    tr = TraceSet(side, t, float(uo), float(vp), float(uox), float(vpx),
                  float(uo), float(vt), float(uox), float(vtx))
    if corr:
        tr.u1 = float(corr["u1_right"].eval(x, t))
        tr.v1 = float(corr["v1_right"].eval(x, t))
    if inner:
        tr.ut1 = inner[0].boundary_value(t)
        tr.vt1 = inner[1].exit_value(t)
    return tr


# ---------------------------------------------------------------------------
# linearised jump conditions

def _solve_linear(residual: Callable[[float], float], what: str) -> float:
    r0 = residual(0.0)
    r1 = residual(1.0)
    a = r1 - r0
    if abs(a) < DENOM_GUARD:
        raise DegenerateCoefficientError(
            f"coefficient of {what} degenerated ({a:.3e})"
        )
    return -r0 / a


def _first_condition_residual(c: model.Coefficients, tr: TraceSet, s1: float,
                              D0: float, D1: float, ut1: float) -> float:
    P = tr.u1 + tr.u0x * s1
    Pt = ut1 + tr.ut0x * s1
    lam_o = float(c.Lam_u(tr.u0))
    lam_i = float(c.Lam_u(tr.ut0))
    return (D1 * (tr.u0 - tr.ut0) + D0 * (P - Pt)) - (lam_o * P - lam_i * Pt)


def _second_condition_residual(c: model.Coefficients, tr: TraceSet, s1: float,
                               D0: float, D1: float, vt1: float) -> float:
    P = tr.u1 + tr.u0x * s1
    Pt = (tr.ut1 if tr.ut1 is not None else 0.0) + tr.ut0x * s1
    Q = tr.v1 + tr.v0x * s1
    Qt = vt1 + tr.vt0x * s1
    phi_o = float(c.Phi(tr.u0, tr.v0))
    phi_i = float(c.Phi(tr.ut0, tr.vt0))
    bracket_phi = (float(c.Phi_u(tr.u0, tr.v0)) * P
                   + float(c.Phi_v(tr.u0, tr.v0)) * Q
                   - float(c.Phi_u(tr.ut0, tr.vt0)) * Pt
                   - float(c.Phi_v(tr.ut0, tr.vt0)) * Qt)
    bracket_psi = (float(c.Psi_u(tr.u0, tr.v0)) * P
                   + float(c.Psi_v(tr.u0, tr.v0)) * Q
                   - float(c.Psi_u(tr.ut0, tr.vt0)) * Pt
                   - float(c.Psi_v(tr.ut0, tr.vt0)) * Qt)
    return D1 * (phi_o - phi_i) + D0 * bracket_phi - bracket_psi


def step1_inner_u1_boundary(c: model.Coefficients, tr: TraceSet, s1_plus: float,
                            D0_plus: float) -> float:
    """Inner slow trace at the fast shock from the first condition.

    The speed-correction term carries the (vanishing) u jump there, so the
    condition is linear in the inner trace alone; it is still solved from
    the full expression rather than the reduced formula.
    """
    return _solve_linear(
        lambda z: _first_condition_residual(c, tr, s1_plus, D0_plus, 0.0, z),
        "inner u trace at the fast shock",
    )


def step3_D1_minus(c: model.Coefficients, tr: TraceSet, s1_minus: float,
                   D0_minus: float) -> float:
    """Slow-shock speed correction from the first condition."""
    if tr.ut1 is None:
        raise ValueError("inner slow trace at the slow shock is required first")
    return _solve_linear(
        lambda z: _first_condition_residual(c, tr, s1_minus, D0_minus, z, tr.ut1),
        "slow-shock speed correction",
    )


def step4_inner_v1_boundary(c: model.Coefficients, tr: TraceSet, s1_minus: float,
                            D0_minus: float, D1_minus: float) -> float:
    """Inner fast trace at the slow shock from the second condition.

    The speed-correction term is retained: its coefficient is the jump of
    Phi across the slow shock, which vanishes only when Phi is independent
    of u.
    """
    return _solve_linear(
        lambda z: _second_condition_residual(c, tr, s1_minus, D0_minus, D1_minus, z),
        "inner v trace at the slow shock",
    )


def step6_D1_plus(c: model.Coefficients, tr: TraceSet, s1_plus: float,
                  D0_plus: float) -> float:
    """Fast-shock speed correction from the second condition."""
    if tr.vt1 is None:
        raise ValueError("inner fast trace at the fast shock is required first")
    return _solve_linear(
        lambda z: _second_condition_residual(c, tr, s1_plus, D0_plus, z, tr.vt1),
        "fast-shock speed correction",
    )


# ---------------------------------------------------------------------------
# the march

class _TraceTable:
    """Leading-order and outer-correction traces precomputed on the grid.

    Everything here is independent of the first-order shock shifts, so the
    march's per-step work reduces to arithmetic plus record interpolation.
    """

    def __init__(self, spec, curves, fields, corr):
        minus, plus = curves
        grid = minus.t
        n = grid.size
        self.t = grid
        m = {}
        uo, uox, _ = fields.u0_left.eval(minus.s0, grid)
        ui, uix, _ = fields.u0_right.eval(minus.s0, grid)
        vo = np.empty(n)
        vox = np.empty(n)
        for k in range(n):
            vo[k], vox[k] = v0_eval(fields.fan_left, float(minus.s0[k]), float(grid[k]))
        u1 = np.array([corr["u1_left"].eval(float(minus.s0[k]), float(grid[k]))
                       for k in range(n)])
        v1 = np.array([corr["v1_left"].eval(float(minus.s0[k]), float(grid[k]))
                       for k in range(n)])
        self.minus = dict(u0=uo, u0x=uox, ut0=ui, ut0x=uix, v0=vo, v0x=vox,
                          vt0=vo, vt0x=vox, u1=u1, v1=v1, D0=minus.D0)

        up, upx, _ = fields.u0_right.eval(plus.s0, grid)
        vp = np.empty(n)
        vpx = np.empty(n)
        vt = np.empty(n)
        vtx = np.empty(n)
        for k in range(n):
            vp[k], vpx[k] = v0_eval(fields.fan_right, float(plus.s0[k]), float(grid[k]))
            vt[k], vtx[k] = v0_eval(fields.fan_left, float(plus.s0[k]), float(grid[k]))
        u1p = np.array([corr["u1_right"].eval(float(plus.s0[k]), float(grid[k]))
                        for k in range(n)])
        v1p = np.array([corr["v1_right"].eval(float(plus.s0[k]), float(grid[k]))
                        for k in range(n)])
        self.plus = dict(u0=up, u0x=upx, ut0=up, ut0x=upx, v0=vp, v0x=vpx,
                         vt0=vt, vt0x=vtx, u1=u1p, v1=v1p, D0=plus.D0)

    def trace(self, side: str, k: int) -> TraceSet:
        row = self.minus if side == "minus" else self.plus
        return TraceSet(
            side, float(self.t[k]),
            u0=float(row["u0"][k]), v0=float(row["v0"][k]),
            u0x=float(row["u0x"][k]), v0x=float(row["v0x"][k]),
            ut0=float(row["ut0"][k]), vt0=float(row["vt0"][k]),
            ut0x=float(row["ut0x"][k]), vt0x=float(row["vt0x"][k]),
            u1=float(row["u1"][k]), v1=float(row["v1"][k]),
        )

    def D0(self, side: str, k: int) -> float:
        row = self.minus if side == "minus" else self.plus
        return float(row["D0"][k])


def march_first_order(spec: model.ProblemSpec,
                      curves: tuple[ShockCurve, ShockCurve],
                      fields: LeadingFields,
                      corr: dict,
                      record_times: tuple = ()) -> tuple[ShockCurve, ShockCurve,
                                                          InnerUField, InnerVField]:
    """March the coupled first-order system over the full horizon.

    Per step: the fast-shock first condition gives the wedge's slow
    boundary value, the wedge transports deliver the opposite traces, the
    two remaining conditions give the speed corrections, and the shock
    shifts advance by Heun's method (predict with the current corrections,
    re-evaluate the whole chain at the predicted state, average).
    """
    minus, plus = curves
    grid = minus.t
    n_steps = grid.size - 1
    table = _TraceTable(spec, curves, fields, corr)
    ctx = WedgeContext(spec, fields.u0_right, fields.fan_left,
                       minus.s0_curve(), plus.s0_curve())
    inner_u = InnerUField(ctx, n_steps + 1)
    inner_v = InnerVField(ctx, n_steps + 1)
    c = spec.coeffs

    s1m = np.zeros(n_steps + 1)
    s1p = np.zeros(n_steps + 1)
    D1m = np.zeros(n_steps + 1)
    D1p = np.zeros(n_steps + 1)

    def chain(k: int, s1_minus: float, s1_plus: float):
        t = float(grid[k])
        tr_p = table.trace("plus", k)
        d0p = table.D0("plus", k)
        ut1p = step1_inner_u1_boundary(c, tr_p, s1_plus, d0p)
        tr_p.ut1 = ut1p

        tr_m = table.trace("minus", k)
        d0m = table.D0("minus", k)
        # before any wedge curve has crossed, the freshest stand-in for the
        # arriving trace is the value just fed at the opposite boundary
        tr_m.ut1 = inner_u.exit_value(t, fallback=ut1p)
        d1m = step3_D1_minus(c, tr_m, s1_minus, d0m)
        vt1m = step4_inner_v1_boundary(c, tr_m, s1_minus, d0m, d1m)
        tr_m.vt1 = vt1m

        tr_p.vt1 = inner_v.exit_value(t, fallback=vt1m)
        d1p = step6_D1_plus(c, tr_p, s1_plus, d0p)
        return ut1p, d1m, vt1m, d1p

    rec_set = {}
    for rt in record_times:
        k = int(round(rt / (grid[1] - grid[0])))
        if 0 <= k <= n_steps:
            rec_set.setdefault(k, float(grid[k]))

    ut1p0, D1m[0], vt1m0, D1p[0] = chain(0, 0.0, 0.0)
    inner_u.launch(0.0, ut1p0)
    inner_v.launch(0.0, vt1m0)
    if 0 in rec_set:
        inner_u.snapshot(0.0)
        inner_v.snapshot(0.0)

    def u1_at(xs, tau):
        return inner_u.interp(xs, tau)

    for k in range(n_steps):
        t0, t1 = float(grid[k]), float(grid[k + 1])
        h = t1 - t0
        inner_u.advance(t0, t1)
        inner_v.advance(t0, t1, u1_at)

        s1m_star = s1m[k] + h * D1m[k]
        s1p_star = s1p[k] + h * D1p[k]
        _, d1m_star, _, d1p_star = chain(k + 1, s1m_star, s1p_star)

        s1m[k + 1] = s1m[k] + 0.5 * h * (D1m[k] + d1m_star)
        s1p[k + 1] = s1p[k] + 0.5 * h * (D1p[k] + d1p_star)

        ut1p, D1m[k + 1], vt1m, D1p[k + 1] = chain(k + 1, s1m[k + 1], s1p[k + 1])
        inner_u.launch(t1, ut1p)
        inner_v.launch(t1, vt1m)
        if (k + 1) in rec_set:
            inner_u.snapshot(t1)
            inner_v.snapshot(t1)

    eps = spec.epsilon
    gap = (plus.s0 + eps * s1p) - (minus.s0 + eps * s1m)
    if np.any(gap[1:] <= 0.0):
        bad = int(np.argmax(gap[1:] <= 0.0)) + 1
        raise NumericalError(
            f"corrected shocks cross at t={grid[bad]:.6g} for epsilon={eps:g}"
        )

    minus_out = replace(minus, s1=s1m, D1=D1m)
    plus_out = replace(plus, s1=s1p, D1=D1p)
    return minus_out, plus_out, inner_u, inner_v


def write_shock_csv(minus: ShockCurve, plus: ShockCurve, path) -> None:
    """Emit the shock curves with full precision, one row per time level."""
    with open(path, "w") as handle:
        handle.write("t,s0_minus,D0_minus,s1_minus,D1_minus,"
                     "s0_plus,D0_plus,s1_plus,D1_plus\n")
        s1m = minus.s1 if minus.s1 is not None else np.zeros_like(minus.s0)
        d1m = minus.D1 if minus.D1 is not None else np.zeros_like(minus.s0)
        s1p = plus.s1 if plus.s1 is not None else np.zeros_like(plus.s0)
        d1p = plus.D1 if plus.D1 is not None else np.zeros_like(plus.s0)
        for k in range(minus.t.size):
            row = (minus.t[k], minus.s0[k], minus.D0[k], s1m[k], d1m[k],
                   plus.s0[k], plus.D0[k], s1p[k], d1p[k])
            handle.write(",".join(f"{val:.17g}" for val in row) + "\n")
