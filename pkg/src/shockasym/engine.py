"""End-to-end construction of the first-order asymptotic solution.

Build order matters: the slow shock is solved first (it needs only the
implicit slow fields), because the left fast fan must switch its slow
coefficient across that curve; then the fast fans, the fast shock, the
outer corrections, and finally the coupled first-order march.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from shockasym import corrections, hugoniot, model
from shockasym.characteristics import (
    Region,
    SwitchedU0Field,
    U0Field,
    build_v_fan,
)


@dataclass(eq=False)
class AsymptoticSolution:
    """All computed artifacts for one problem (independent of epsilon:
    epsilon only enters when composing positions or fields)."""

    spec: model.ProblemSpec
    fields: hugoniot.LeadingFields
    u0_wedge: SwitchedU0Field
    corr: dict
    shock_minus: hugoniot.ShockCurve
    shock_plus: hugoniot.ShockCurve
    inner_u: corrections.InnerUField
    inner_v: corrections.InnerVField
    first_order: corrections.FirstOrderFields

    def shock_position(self, side: str, t, eps: Optional[float] = None):
        curve = self.shock_minus if side == "minus" else self.shock_plus
        e = self.spec.epsilon if eps is None else eps
        return curve.position(t, e)

    def eval_first_order(self, x: float, t: float,
                         eps: Optional[float] = None) -> tuple[float, float]:
        return corrections.eval_first_order(self.first_order, x, t, eps)


def solve_asymptotics(spec: model.ProblemSpec,
                      record_times: Sequence[float] = ()) -> AsymptoticSolution:
    """Run the full pipeline; ``record_times`` selects the times at which
    wedge profiles are stored for later pointwise evaluation."""
    u0_left = U0Field(spec, Region.OUTER_LEFT)
    u0_right = U0Field(spec, Region.OUTER_RIGHT)

    minus = hugoniot.solve_minus(spec, u0_left, u0_right)
    u0_wedge = SwitchedU0Field(u0_left, u0_right, minus.s0_curve())

    fan_left = build_v_fan(spec, Region.OUTER_LEFT, u0_wedge, refract_at=minus)
    fan_right = build_v_fan(spec, Region.OUTER_RIGHT, u0_right)
    fields = hugoniot.LeadingFields(u0_left, u0_right, fan_left, fan_right)

    plus = hugoniot.solve_plus(spec, u0_right, fan_left, fan_right)
    stop_minus = minus.s0_curve()

    u1_left = corrections.build_u1(spec, Region.OUTER_LEFT, u0_left, fan_left,
                                   stop=stop_minus)
    u1_right = corrections.build_u1(spec, Region.OUTER_RIGHT, u0_right, fan_right,
                                    stop=stop_minus)
    v1_left = corrections.build_v1(spec, Region.OUTER_LEFT, u0_wedge, u1_left,
                                   stop=stop_minus)
    v1_right = corrections.build_v1(spec, Region.OUTER_RIGHT, u0_right, u1_right)
    corr = {
        "u1_left": u1_left,
        "v1_left": v1_left,
        "u1_right": u1_right,
        "v1_right": v1_right,
    }

    minus, plus, inner_u, inner_v = hugoniot.march_first_order(
        spec, (minus, plus), fields, corr, record_times=tuple(record_times))

    first_order = corrections.FirstOrderFields(
        eps=spec.epsilon,
        s0_minus=minus.s0_curve(),
        s0_plus=plus.s0_curve(),
        s1_minus=minus.s1_curve(),
        s1_plus=plus.s1_curve(),
        u1_left=u1_left,
        v1_left=v1_left,
        u1_right=u1_right,
        v1_right=v1_right,
        inner_u=inner_u,
        inner_v=inner_v,
    )
    return AsymptoticSolution(
        spec=spec,
        fields=fields,
        u0_wedge=u0_wedge,
        corr=corr,
        shock_minus=minus,
        shock_plus=plus,
        inner_u=inner_u,
        inner_v=inner_v,
        first_order=first_order,
    )


def hugoniot_residuals(sol: AsymptoticSolution, eps: float,
                       times: Sequence[float]) -> float:
    """Max residual of the exact jump conditions under the composite
    first-order expansion, evaluated at the corrected shock positions.

    Inner first-order traces are taken at the leading shock position (the
    difference this makes is itself second order, below the measured
    remainder).
    """
    c = sol.spec.coeffs
    fields = sol.fields
    worst = 0.0
    for t in times:
        t = float(t)
        for curve, side in ((sol.shock_minus, "minus"), (sol.shock_plus, "plus")):
            xs = float(curve.position(t, eps))
            D = float(np.interp(t, curve.t, curve.D0)
                      + eps * np.interp(t, curve.t, curve.D1))
            if side == "minus":
                uo, _, _ = fields.u0_left.eval(xs, t)
                vo, _ = hugoniot.v0_eval(fields.fan_left, xs, t)
                ui, _, _ = fields.u0_right.eval(xs, t)
                vi, _ = hugoniot.v0_eval(fields.fan_left, xs, t)
                u_out = uo + eps * float(sol.corr["u1_left"].eval(xs, t, clamp=True))
                v_out = vo + eps * float(sol.corr["v1_left"].eval(xs, t, clamp=True))
                u_in = ui + eps * sol.inner_u.exit_value(t)
                v_in = vi + eps * sol.inner_v.boundary_value(t)
            else:
                uo, _, _ = fields.u0_right.eval(xs, t)
                vo, _ = hugoniot.v0_eval(fields.fan_right, xs, t)
                vi, _ = hugoniot.v0_eval(fields.fan_left, xs, t)
                u_out = uo + eps * float(sol.corr["u1_right"].eval(xs, t, clamp=True))
                v_out = vo + eps * float(sol.corr["v1_right"].eval(xs, t, clamp=True))
                u_in = uo + eps * sol.inner_u.boundary_value(t)
                v_in = vi + eps * sol.inner_v.exit_value(t)
            res1 = D * (u_out - u_in) - (float(c.Lam(u_out)) - float(c.Lam(u_in)))
            res2 = (D * (float(c.Phi(u_out, v_out)) - float(c.Phi(u_in, v_in)))
                    - (float(c.Psi(u_out, v_out)) - float(c.Psi(u_in, v_in))))
            worst = max(worst, abs(res1), abs(res2))
    return worst
