import numpy as np
import pytest

from shockasym import characteristics as ch
from shockasym import corrections as co
from shockasym import engine, hugoniot, model
from shockasym.errors import DegenerateCoefficientError, JumpCollapseError

from conftest import make_spec


def leading(spec):
    left = ch.U0Field(spec, ch.Region.OUTER_LEFT)
    right = ch.U0Field(spec, ch.Region.OUTER_RIGHT)
    minus = hugoniot.solve_minus(spec, left, right)
    switched = ch.SwitchedU0Field(left, right, minus.s0_curve())
    fan_left = ch.build_v_fan(spec, ch.Region.OUTER_LEFT, switched, refract_at=minus)
    fan_right = ch.build_v_fan(spec, ch.Region.OUTER_RIGHT, right)
    fields = hugoniot.LeadingFields(left, right, fan_left, fan_right)
    return fields, minus


class TestSolveLeading:
    def test_burgers_speed(self, decoupled_spec):
        fields, minus = leading(decoupled_spec)
        assert np.allclose(minus.s0, 0.5 * minus.t, atol=1e-12)
        assert np.allclose(minus.D0, 0.5, atol=1e-12)

    def test_fast_shock_speed(self, decoupled_spec):
        fields, minus = leading(decoupled_spec)
        minus2, plus = hugoniot.solve_leading(decoupled_spec, fields)
        assert np.allclose(plus.s0, 2.5 * plus.t, atol=1e-11)
        assert np.allclose(minus2.s0, minus.s0, atol=0)

    def test_jump_collapse(self):
        spec = make_spec(initial={"u_left": "1", "u_right": "1"})
        left = ch.U0Field(spec, ch.Region.OUTER_LEFT)
        right = ch.U0Field(spec, ch.Region.OUTER_RIGHT)
        with pytest.raises(JumpCollapseError):
            hugoniot.solve_minus(spec, left, right)

    def test_speed_is_centered_difference_of_position(self, decoupled_solution):
        for curve in (decoupled_solution.shock_minus, decoupled_solution.shock_plus):
            dt = curve.t[1] - curve.t[0]
            fd = (curve.s0[2:] - curve.s0[:-2]) / (2 * dt)
            assert np.max(np.abs(fd - curve.D0[1:-1])) <= 10 * dt**2


class TestBoundaryTraces:
    def test_decoupled_minus_side(self, decoupled_solution):
        sol = decoupled_solution
        tr = hugoniot.boundary_traces(
            sol.spec, 0.4, "minus", (sol.shock_minus, sol.shock_plus),
            sol.fields, sol.corr, (sol.inner_u, sol.inner_v))
        assert tr.u0 == pytest.approx(1.0, abs=1e-12)
        assert tr.ut0 == pytest.approx(0.0, abs=1e-12)
        assert tr.v0 == pytest.approx(3.0, abs=1e-12)
        assert tr.vt0 == pytest.approx(3.0, abs=1e-12)
        for d in (tr.u0x, tr.v0x, tr.ut0x, tr.vt0x):
            assert d == pytest.approx(0.0, abs=1e-12)
        assert tr.u1 == pytest.approx(-0.4, abs=1e-9)
        assert tr.ut1 == pytest.approx(0.0, abs=1e-9)

    def test_decoupled_plus_side(self, decoupled_solution):
        sol = decoupled_solution
        tr = hugoniot.boundary_traces(
            sol.spec, 0.4, "plus", (sol.shock_minus, sol.shock_plus),
            sol.fields, sol.corr, (sol.inner_u, sol.inner_v))
        assert tr.u0 == tr.ut0 == pytest.approx(0.0, abs=1e-12)
        assert tr.v0 == pytest.approx(2.0, abs=1e-12)
        assert tr.vt0 == pytest.approx(3.0, abs=1e-12)
        assert tr.v1 == pytest.approx(-0.8, abs=1e-9)
        assert tr.vt1 == pytest.approx(-1.2, abs=1e-9)

    def test_all_first_order_traces_vanish_at_zero(self, decoupled_solution):
        sol = decoupled_solution
        tr = hugoniot.boundary_traces(
            sol.spec, 0.0, "minus", (sol.shock_minus, sol.shock_plus),
            sol.fields, sol.corr, (sol.inner_u, sol.inner_v))
        assert tr.u1 == tr.v1 == 0.0
        assert tr.ut1 == tr.vt1 == 0.0


def synthetic_traces(**kw):
    base = dict(side="plus", t=0.3, u0=0.0, v0=0.0, u0x=0.0, v0x=0.0,
                ut0=0.0, vt0=0.0, ut0x=0.0, vt0x=0.0, u1=0.0, v1=0.0)
    base.update(kw)
    return hugoniot.TraceSet(**base)


class TestJumpConditionSteps:
    def test_step1_reduced_formula(self, decoupled_spec):
        c = decoupled_spec.coeffs
        # synthetic: u1+=0.3, u0x jump 0.2, shift 0.5 -> inner trace 0.4
        tr = synthetic_traces(u0=1.0, ut0=1.0, u0x=0.25, ut0x=0.05, u1=0.3)
        got = hugoniot.step1_inner_u1_boundary(c, tr, s1_plus=0.5, D0_plus=2.5)
        assert got == pytest.approx(0.3 + 0.2 * 0.5, rel=1e-12)

    def test_step1_trivial(self, decoupled_spec):
        c = decoupled_spec.coeffs
        tr = synthetic_traces(u0=1.0, ut0=1.0, u0x=0.3, ut0x=0.3, u1=0.7)
        got = hugoniot.step1_inner_u1_boundary(c, tr, s1_plus=0.0, D0_plus=2.5)
        assert got == pytest.approx(0.7, rel=1e-12)

    def test_step1_degenerate_guard(self, decoupled_spec):
        c = decoupled_spec.coeffs
        # D0 equals the slow speed at the trace state: Lax separation lost
        tr = synthetic_traces(u0=1.0, ut0=1.0, u1=0.3)
        with pytest.raises(DegenerateCoefficientError):
            hugoniot.step1_inner_u1_boundary(c, tr, s1_plus=0.0, D0_plus=1.0)

    def test_step3_synthetic(self, decoupled_spec):
        c = decoupled_spec.coeffs
        tr = synthetic_traces(side="minus", u0=2.0, ut0=1.0, u1=1.0, ut1=0.0)
        got = hugoniot.step3_D1_minus(c, tr, s1_minus=0.0, D0_minus=1.5)
        assert got == pytest.approx(0.5, rel=1e-12)

    def test_step3_explicit_formula_oracle(self, decoupled_spec):
        c = decoupled_spec.coeffs
        rng = np.random.default_rng(5)
        for _ in range(20):
            u0, ut0 = 1.0 + rng.uniform(0.2, 1.0), rng.uniform(-0.5, 0.5)
            u1, ut1 = rng.normal(), rng.normal()
            u0x, ut0x = rng.normal(), rng.normal()
            s1, d0 = rng.normal(), rng.uniform(0.5, 1.5)
            tr = synthetic_traces(side="minus", u0=u0, ut0=ut0, u0x=u0x,
                                  ut0x=ut0x, u1=u1, ut1=ut1)
            got = hugoniot.step3_D1_minus(c, tr, s1_minus=s1, D0_minus=d0)
            # hand-reduced closed form of the same linear condition
            P = u1 + u0x * s1
            Pt = ut1 + ut0x * s1
            want = (u0 * P - ut0 * Pt - d0 * (P - Pt)) / (u0 - ut0)
            assert got == pytest.approx(want, rel=1e-12)

    def test_step4_decoupled_reduction(self, decoupled_solution):
        # with Phi independent of u the speed-correction term drops and the
        # inner trace equals the outer one; the march must reproduce -3t
        sol = decoupled_solution
        ts, ws = sol.inner_v.bnd.data()
        assert np.max(np.abs(ws + 3.0 * ts)) <= 1e-9

    def test_step4_retains_speed_term_when_phi_depends_on_u(self, coupled_spec):
        c = coupled_spec.coeffs
        tr = synthetic_traces(side="minus", u0=1.15, ut0=0.85, v0=2.2, vt0=2.2,
                              u1=-0.5, ut1=-0.3, v1=-1.1)
        s1, d0, d1 = -0.02, 1.0, -0.4
        got = hugoniot.step4_inner_v1_boundary(c, tr, s1_minus=s1,
                                               D0_minus=d0, D1_minus=d1)
        # independently coded scalar solve of the same linear condition
        P = tr.u1 + tr.u0x * s1
        Pt = tr.ut1 + tr.ut0x * s1
        Q = tr.v1 + tr.v0x * s1
        phi_o, phi_i = c.Phi(tr.u0, tr.v0), c.Phi(tr.ut0, tr.vt0)
        known = (d1 * (phi_o - phi_i)
                 + d0 * (c.Phi_u(tr.u0, tr.v0) * P + c.Phi_v(tr.u0, tr.v0) * Q
                         - c.Phi_u(tr.ut0, tr.vt0) * Pt)
                 - (c.Psi_u(tr.u0, tr.v0) * P + c.Psi_v(tr.u0, tr.v0) * Q
                    - c.Psi_u(tr.ut0, tr.vt0) * Pt))
        coef = d0 * c.Phi_v(tr.ut0, tr.vt0) - c.Psi_v(tr.ut0, tr.vt0)
        want = known / coef - tr.vt0x * s1
        assert got == pytest.approx(want, rel=1e-12)
        # and the speed-correction term genuinely matters here
        other = hugoniot.step4_inner_v1_boundary(c, tr, s1_minus=s1,
                                                 D0_minus=d0, D1_minus=0.0)
        assert abs(other - got) > 1e-6

    def test_step6_synthetic_duplicate_oracle(self, coupled_spec):
        c = coupled_spec.coeffs
        tr = synthetic_traces(side="plus", u0=0.85, ut0=0.85, v0=1.6, vt0=2.2,
                              u1=-0.4, ut1=-0.4, v1=-0.9, vt1=-1.4)
        s1, d0 = -0.05, 3.58
        got = hugoniot.step6_D1_plus(c, tr, s1_plus=s1, D0_plus=d0)
        P = tr.u1 + tr.u0x * s1
        Pt = tr.ut1 + tr.ut0x * s1
        Q = tr.v1 + tr.v0x * s1
        Qt = tr.vt1 + tr.vt0x * s1
        bracket_phi = (c.Phi_u(tr.u0, tr.v0) * P + c.Phi_v(tr.u0, tr.v0) * Q
                       - c.Phi_u(tr.ut0, tr.vt0) * Pt - c.Phi_v(tr.ut0, tr.vt0) * Qt)
        bracket_psi = (c.Psi_u(tr.u0, tr.v0) * P + c.Psi_v(tr.u0, tr.v0) * Q
                       - c.Psi_u(tr.ut0, tr.vt0) * Pt - c.Psi_v(tr.ut0, tr.vt0) * Qt)
        want = (bracket_psi - d0 * bracket_phi) / (c.Phi(tr.u0, tr.v0)
                                                   - c.Phi(tr.ut0, tr.vt0))
        assert got == pytest.approx(want, rel=1e-12)

    def test_step6_zero_sources(self, decoupled_spec):
        c = decoupled_spec.coeffs
        tr = synthetic_traces(u0=0.0, ut0=0.0, v0=2.0, vt0=3.0, ut1=0.0, vt1=0.0)
        assert hugoniot.step6_D1_plus(c, tr, s1_plus=0.0, D0_plus=2.5) == 0.0


class TestMarch:
    def test_zero_perturbation(self):
        spec = make_spec()  # f = g = 0
        sol = engine.solve_asymptotics(spec, record_times=[0.25])
        assert np.max(np.abs(sol.shock_minus.s1)) <= 1e-12
        assert np.max(np.abs(sol.shock_plus.s1)) <= 1e-12
        assert np.max(np.abs(sol.shock_minus.D1)) <= 1e-12
        assert np.max(np.abs(sol.shock_plus.D1)) <= 1e-12
        rt, rw = sol.inner_u.rec.data()
        assert np.max(np.abs(rw), initial=0.0) <= 1e-12
        rt, rw = sol.inner_v.rec.data()
        assert np.max(np.abs(rw), initial=0.0) <= 1e-12

    def test_decoupled_closed_form(self, decoupled_solution):
        sol = decoupled_solution
        tt = sol.shock_minus.t
        assert np.max(np.abs(sol.shock_minus.s1 + 0.25 * tt**2)) <= 1e-8
        assert np.max(np.abs(sol.shock_plus.s1 + 1.25 * tt**2)) <= 1e-8

    def test_wedge_ordering(self, coupled_solution):
        sol = coupled_solution
        eps = sol.spec.epsilon
        lo = sol.shock_minus.s0 + eps * sol.shock_minus.s1
        hi = sol.shock_plus.s0 + eps * sol.shock_plus.s1
        assert np.all(hi[1:] > lo[1:])

    def test_second_order_in_dt(self):
        # smooth nonconstant data so the speed corrections curve in time;
        # errors are measured against a much finer run of the same case
        def s1_at_T(dt):
            spec = make_spec(
                mu="2*u+v", Phi="-1/(u+v)", Psi="ln(u+v)-u/(u+v)",
                f="-u", g="-v", T=0.4,
                initial={"u_left": "1.15+0.05*sin(2*x)",
                         "u_right": "0.85-0.03*x*exp(-x^2)",
                         "v_left": "2.2+0.1*sin(x)",
                         "v_right": "1.6+0.05*cos(2*x)-0.05"},
                numerics={"dt": dt, "fan_count": 256,
                          "state_box": {"u": [0.6, 1.35], "v": [1.2, 2.5]},
                          "fv_domain": [-0.5, 3.0]},
            )
            sol = engine.solve_asymptotics(spec)
            return np.array([float(sol.shock_minus.s1[-1]),
                             float(sol.shock_plus.s1[-1])])

        ref = s1_at_T(2.5e-4)
        err_coarse = np.abs(s1_at_T(2e-3) - ref)
        err_fine = np.abs(s1_at_T(1e-3) - ref)
        for i, side in enumerate(("minus", "plus")):
            ratio = err_coarse[i] / max(err_fine[i], 1e-300)
            assert 3.5 <= ratio <= 4.5, (side, err_coarse[i], err_fine[i], ratio)


def test_write_shock_csv(tmp_path, decoupled_solution):
    sol = decoupled_solution
    path = tmp_path / "curves.csv"
    hugoniot.write_shock_csv(sol.shock_minus, sol.shock_plus, path)
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    assert header == ["t", "s0_minus", "D0_minus", "s1_minus", "D1_minus",
                      "s0_plus", "D0_plus", "s1_plus", "D1_plus"]
    assert len(lines) == sol.shock_minus.t.size + 1
