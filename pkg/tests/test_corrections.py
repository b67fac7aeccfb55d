import numpy as np
import pytest

from shockasym import characteristics as ch
from shockasym import corrections as co
from shockasym import hugoniot, model
from shockasym.errors import OutOfHullError

from conftest import make_spec


def outer_pipeline(spec):
    """Leading-order artifacts shared by the correction builders."""
    left = ch.U0Field(spec, ch.Region.OUTER_LEFT)
    right = ch.U0Field(spec, ch.Region.OUTER_RIGHT)
    minus = hugoniot.solve_minus(spec, left, right)
    switched = ch.SwitchedU0Field(left, right, minus.s0_curve())
    fan_left = ch.build_v_fan(spec, ch.Region.OUTER_LEFT, switched, refract_at=minus)
    fan_right = ch.build_v_fan(spec, ch.Region.OUTER_RIGHT, right)
    plus = hugoniot.solve_plus(spec, right, fan_left, fan_right)
    return left, right, switched, fan_left, fan_right, minus, plus


class TestOuterU1:
    def test_constant_damped_state(self):
        spec = make_spec(f="-u")
        left, right, switched, fan_l, fan_r, minus, plus = outer_pipeline(spec)
        u1 = co.build_u1(spec, ch.Region.OUTER_LEFT, left, fan_l,
                         stop=minus.s0_curve())
        for t in (0.1, 0.3, 0.5):
            # constant state u0=1, u0x=0: dw/dt = f = -1
            assert u1.eval(-0.5, t) == pytest.approx(-t, abs=1e-12)

    def test_zero_source(self):
        spec = make_spec()
        left, right, switched, fan_l, fan_r, minus, plus = outer_pipeline(spec)
        u1 = co.build_u1(spec, ch.Region.OUTER_LEFT, left, fan_l,
                         stop=minus.s0_curve())
        assert u1.eval(-0.5, 0.4) == 0.0

    def test_source_vanishes_on_zero_state(self):
        spec = make_spec(f="-u")
        left, right, switched, fan_l, fan_r, minus, plus = outer_pipeline(spec)
        u1 = co.build_u1(spec, ch.Region.OUTER_RIGHT, right, fan_r,
                         stop=minus.s0_curve())
        # right state is identically zero, so the damping source vanishes
        assert u1.eval(1.0, 0.4) == 0.0

    def test_out_of_hull_guard(self):
        spec = make_spec(f="-u")
        left, right, switched, fan_l, fan_r, minus, plus = outer_pipeline(spec)
        u1 = co.build_u1(spec, ch.Region.OUTER_LEFT, left, fan_l,
                         stop=minus.s0_curve())
        with pytest.raises(OutOfHullError):
            u1.eval(3.0, 0.1)
        assert np.isfinite(u1.eval(3.0, 0.1, clamp=True))


class TestOuterV1:
    def test_decoupled_damped(self):
        spec = make_spec(f="-u", g="-v")
        left, right, switched, fan_l, fan_r, minus, plus = outer_pipeline(spec)
        u1l = co.build_u1(spec, ch.Region.OUTER_LEFT, left, fan_l,
                          stop=minus.s0_curve())
        v1l = co.build_v1(spec, ch.Region.OUTER_LEFT, switched, u1l,
                          stop=minus.s0_curve())
        for t in (0.1, 0.3, 0.5):
            assert v1l.eval(-0.5, t) == pytest.approx(-3 * t, rel=1e-10)

    def test_zero_everything(self):
        spec = make_spec()
        left, right, switched, fan_l, fan_r, minus, plus = outer_pipeline(spec)
        u1r = co.build_u1(spec, ch.Region.OUTER_RIGHT, right, fan_r,
                          stop=minus.s0_curve())
        v1r = co.build_v1(spec, ch.Region.OUTER_RIGHT, right, u1r)
        assert v1r.eval(1.2, 0.4) == 0.0

    def test_decoupled_mu_ignores_u1(self):
        # mu_v = 0 coupling: with mu = v the u1 field never enters, so a
        # deliberately wrong u1 input must not change the answer
        spec = make_spec(g="-v")
        left, right, switched, fan_l, fan_r, minus, plus = outer_pipeline(spec)
        u1r = co.build_u1(spec, ch.Region.OUTER_RIGHT, right, fan_r,
                          stop=minus.s0_curve())
        v1a = co.build_v1(spec, ch.Region.OUTER_RIGHT, right, u1r)

        class Bogus:
            @staticmethod
            def eval(x, t, clamp=False):
                return np.full_like(np.atleast_1d(x), 123.0)

        v1b = co.build_v1(spec, ch.Region.OUTER_RIGHT, right, Bogus)
        for t in (0.2, 0.5):
            assert v1a.eval(1.2, t) == pytest.approx(v1b.eval(1.2, t), abs=0)


class TestInnerFields:
    def test_inner_u_requires_boundary_data(self):
        spec = make_spec()
        left, right, switched, fan_l, fan_r, minus, plus = outer_pipeline(spec)
        with pytest.raises(ValueError, match="boundary data"):
            co.build_u1(spec, ch.Region.INNER, right, fan_l)

    def test_inner_v_constant_transport(self):
        # g = -v with constant inner state 3 and boundary data -3t gives
        # the uniform field -3t throughout the wedge
        spec = make_spec(g="-v")
        left, right, switched, fan_l, fan_r, minus, plus = outer_pipeline(spec)
        curves = (minus.s0_curve(), plus.s0_curve())
        ts = minus.t
        inner_u = co.build_u1(spec, ch.Region.INNER, right, fan_l,
                              boundary_data=(ts, np.zeros_like(ts)), curves=curves)
        inner_v = co.build_v1(spec, ch.Region.INNER, right, inner_u,
                              boundary_data=(ts, -3.0 * ts), curves=curves,
                              v_fan=fan_l)
        t = 0.4
        xm, xp = 0.5 * t, 2.5 * t
        for x in np.linspace(xm + 0.05 * (xp - xm), xp - 0.05 * (xp - xm), 5):
            assert inner_v.eval(float(x), t) == pytest.approx(-1.2, abs=1e-9)

    def test_inner_boundary_consistency(self):
        # feeding a nontrivial series on the fast shock must be reproduced
        # by evaluating the wedge slow field on that curve
        spec = make_spec(f="-u", g="-v")
        left, right, switched, fan_l, fan_r, minus, plus = outer_pipeline(spec)
        curves = (minus.s0_curve(), plus.s0_curve())
        ts = minus.t
        fed = -0.7 * ts + 0.3 * ts**2
        inner_u = co.build_u1(spec, ch.Region.INNER, right, fan_l,
                              boundary_data=(ts, fed), curves=curves)
        worst = 0.0
        for k in range(0, ts.size, 50):
            t = float(ts[k])
            got = inner_u.eval(float(plus.s0[k]), t)
            worst = max(worst, abs(got - fed[k]))
        assert worst <= 1e-6


def test_linearity_in_sources():
    base = dict(f="-u+0.5*v", g="-2*v+u")
    scaled = dict(f="3*(-u+0.5*v)", g="3*(-2*v+u)")
    results = []
    for sources in (base, scaled):
        spec = make_spec(**sources)
        left, right, switched, fan_l, fan_r, minus, plus = outer_pipeline(spec)
        u1 = co.build_u1(spec, ch.Region.OUTER_LEFT, left, fan_l,
                         stop=minus.s0_curve())
        v1 = co.build_v1(spec, ch.Region.OUTER_LEFT, switched, u1,
                         stop=minus.s0_curve())
        results.append((u1.eval(-0.4, 0.5), v1.eval(-0.4, 0.5)))
    (u_a, v_a), (u_b, v_b) = results
    assert u_b == pytest.approx(3.0 * u_a, rel=1e-12)
    assert v_b == pytest.approx(3.0 * v_a, rel=1e-12)


def test_pde_residual_of_u1():
    # smooth single-hump source over a constant state; residual of the
    # linearised slow transport measured by central differences
    spec = make_spec(f="exp(0-(u+v-4)^2)*u", T=0.4)
    left, right, switched, fan_l, fan_r, minus, plus = outer_pipeline(spec)
    u1 = co.build_u1(spec, ch.Region.OUTER_LEFT, left, fan_l,
                     stop=minus.s0_curve())
    c = spec.coeffs
    h = 2e-3
    worst = 0.0
    for x in np.linspace(-1.0, -0.3, 6):
        for t in np.linspace(0.1, 0.3, 5):
            wt = (u1.eval(x, t + h) - u1.eval(x, t - h)) / (2 * h)
            wx = (u1.eval(x + h, t) - u1.eval(x - h, t)) / (2 * h)
            u0, u0x, _ = left.eval(x, t)
            v0, _ = ch.v0_eval(fan_l, x, t)
            w = u1.eval(x, t)
            resid = wt + c.lam(u0) * wx + c.lam_u(u0) * u0x * w - c.f(u0, v0)
            worst = max(worst, abs(resid))
    assert worst <= 1e-4


def test_eval_first_order_regions(decoupled_solution):
    sol = decoupled_solution
    t = 0.4
    u1, v1 = sol.eval_first_order(-0.5, t)
    assert (u1, v1) == pytest.approx((-0.4, -1.2), abs=1e-9)
    u1, v1 = sol.eval_first_order(0.6, t)
    assert (u1, v1) == pytest.approx((0.0, -1.2), abs=1e-9)
    u1, v1 = sol.eval_first_order(1.5, t)
    assert (u1, v1) == pytest.approx((0.0, -0.8), abs=1e-9)


def test_eval_first_order_zero_sources():
    spec = make_spec()
    from shockasym import engine

    sol = engine.solve_asymptotics(spec, record_times=[0.3])
    for x in (-0.5, 0.4, 1.5):
        u1, v1 = sol.eval_first_order(x, 0.3)
        assert abs(u1) <= 1e-12 and abs(v1) <= 1e-12
