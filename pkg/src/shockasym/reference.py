"""Independent finite-volume reference solver.

The system is advanced in the conservative variables W = (u, Phi(u, v))
with fluxes (Lam(u), Psi(u, v)) and sources eps * (f, Phi_u f + Phi_v g),
using the local Lax-Friedrichs (Rusanov) interface flux with the pointwise
speed bound max(|lam|, |mu|), explicit first-order time stepping under a
CFL constraint, and outflow boundaries.  Working in exactly this pair makes
the scheme select the same weak solution the jump conditions of the
asymptotic engine encode, which is the whole point of the cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from shockasym import model
from shockasym.errors import CFLError, FrontError, NumericalError, RecoveryError

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(7)


@dataclass(eq=False)
class GridSolution:
    """Cell averages of the conservative state at the requested times."""

    x: np.ndarray
    dx: float
    times: np.ndarray
    U: np.ndarray  # (n_times, n_cells)
    V: np.ndarray
    W: np.ndarray
    eps: float
    conservation_defect: float = 0.0
    steps: int = 0

    def frame(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * (1.0 + abs(t)):
            raise NumericalError(f"no stored frame at t={t:.6g}")
        return i


def recover_v(spec: model.ProblemSpec, u, w, v_guess):
    """Invert Phi(u, .) = w by safeguarded Newton seeded at v_guess.

    Works elementwise on arrays.  The iteration must stay near the declared
    state box and converge to |Phi - w| <= 1e-12.
    """
    c = spec.coeffs
    box = spec.numerics.state_box.v
    pad = 0.5 * (box[1] - box[0])
    lo, hi = box[0] - pad, box[1] + pad
    scalar = np.ndim(u) == 0 and np.ndim(w) == 0
    ua = np.atleast_1d(np.asarray(u, dtype=float))
    wa = np.atleast_1d(np.asarray(w, dtype=float))
    v = np.broadcast_to(np.asarray(v_guess, dtype=float), ua.shape).copy()
    for _ in range(max(spec.numerics.newton_max_iter, 30)):
        res = c.Phi(ua, v) - wa
        if np.all(np.abs(res) <= 1e-12):
            break
        dphi = c.Phi_v(ua, v)
        if np.any(np.abs(dphi) < 1e-14) or not np.all(np.isfinite(dphi)):
            raise RecoveryError("Phi_v vanished while recovering v")
        v = v - res / dphi
        if np.any(v < lo) or np.any(v > hi):
            i = int(np.argmax((v < lo) | (v > hi)))
            raise RecoveryError(
                f"v recovery left the state box (v={v[i]:.6g} for u={ua[i]:.6g})"
            )
    else:
        raise RecoveryError("v recovery did not converge")
    if scalar:
        return float(v[0])
    return v


def _cell_averages(spec: model.ProblemSpec, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact (to quadrature) cell averages of u and w = Phi(u, v) for the
    piecewise initial data, splitting the cell that straddles x = 0."""
    ini, c = spec.initial, spec.coeffs

    def piece_avg(a: np.ndarray, b: np.ndarray, side: str):
        ufn, _ = ini.piece("u", side)
        vfn, _ = ini.piece("v", side)
        mid = 0.5 * (a + b)[:, None]
        half = 0.5 * (b - a)[:, None]
        xs = mid + half * _GAUSS_NODES[None, :]
        uu = ufn(xs.ravel()).reshape(xs.shape)
        vv = vfn(xs.ravel()).reshape(xs.shape)
        ww = c.Phi(uu, vv)
        wsum = _GAUSS_WEIGHTS[None, :] / 2.0
        return (uu * wsum).sum(axis=1), (ww * wsum).sum(axis=1)

    lefts, rights = edges[:-1], edges[1:]
    u_avg = np.empty(lefts.size)
    w_avg = np.empty(lefts.size)
    left_cells = rights <= 0.0
    right_cells = lefts >= 0.0
    split = ~(left_cells | right_cells)
    if np.any(left_cells):
        u_avg[left_cells], w_avg[left_cells] = piece_avg(
            lefts[left_cells], rights[left_cells], "left")
    if np.any(right_cells):
        u_avg[right_cells], w_avg[right_cells] = piece_avg(
            lefts[right_cells], rights[right_cells], "right")
    for i in np.nonzero(split)[0]:
        a, b = lefts[i], rights[i]
        ul, wl = piece_avg(np.array([a]), np.array([0.0]), "left")
        ur, wr = piece_avg(np.array([0.0]), np.array([b]), "right")
        u_avg[i] = (ul[0] * (0.0 - a) + ur[0] * (b - 0.0)) / (b - a)
        w_avg[i] = (wl[0] * (0.0 - a) + wr[0] * (b - 0.0)) / (b - a)
    return u_avg, w_avg


def run_reference(spec: model.ProblemSpec, output_times: Sequence[float],
                  eps: Optional[float] = None, cells: Optional[int] = None,
                  track_conservation: bool = False) -> GridSolution:
    """Advance the conservative form and store frames at the output times."""
    c = spec.coeffs
    eps = spec.epsilon if eps is None else float(eps)
    n = spec.numerics.fv_cells if cells is None else int(cells)
    lo, hi = spec.numerics.fv_domain
    cfl = spec.numerics.fv_cfl
    edges = np.linspace(lo, hi, n + 1)
    x = 0.5 * (edges[:-1] + edges[1:])
    dx = (hi - lo) / n

    out_times = np.asarray(sorted(float(t) for t in output_times), dtype=float)
    if out_times.size == 0 or out_times[0] < 0.0:
        raise ValueError("output times must be nonnegative and nonempty")

    u, w = _cell_averages(spec, edges)
    v = recover_v(spec, u, w, 0.5 * (spec.numerics.state_box.v[0]
                                     + spec.numerics.state_box.v[1]))

    frames_u = np.empty((out_times.size, n))
    frames_v = np.empty_like(frames_u)
    frames_w = np.empty_like(frames_u)

    dt_min = cfl * dx / max(model.speed_bound(spec), 1e-30) * 1e-6
    t = 0.0
    defect = 0.0
    steps = 0
    frame = 0
    while frame < out_times.size and out_times[frame] <= 1e-14:
        frames_u[frame], frames_v[frame], frames_w[frame] = u, v, w
        frame += 1

    while frame < out_times.size:
        target = out_times[frame]
        # padded states (outflow ghosts repeat the edge cells)
        up = np.concatenate([u[:1], u, u[-1:]])
        vp = np.concatenate([v[:1], v, v[-1:]])
        wp = np.concatenate([w[:1], w, w[-1:]])
        a_cell = np.maximum(np.abs(c.lam(up)), np.abs(c.mu(up, vp)))
        amax = float(np.max(a_cell))
        if amax <= 0.0:
            dt = target - t
        else:
            dt = cfl * dx / amax
        if dt < dt_min:
            raise CFLError(f"stable step {dt:.3e} fell below dt_min={dt_min:.3e}")
        dt = min(dt, target - t)

        fu = c.Lam(up)
        fw = c.Psi(up, vp)
        a_iface = np.maximum(a_cell[:-1], a_cell[1:])
        flux_u = 0.5 * (fu[:-1] + fu[1:]) - 0.5 * a_iface * (up[1:] - up[:-1])
        flux_w = 0.5 * (fw[:-1] + fw[1:]) - 0.5 * a_iface * (wp[1:] - wp[:-1])

        src_u = c.f(u, v)
        src_w = c.Phi_u(u, v) * src_u + c.Phi_v(u, v) * c.g(u, v)

        u_new = u - dt / dx * (flux_u[1:] - flux_u[:-1]) + dt * eps * src_u
        w_new = w - dt / dx * (flux_w[1:] - flux_w[:-1]) + dt * eps * src_w

        if track_conservation:
            for old, new, flux, src in ((u, u_new, flux_u, src_u),
                                        (w, w_new, flux_w, src_w)):
                change = dx * np.sum(new - old)
                budget = -dt * (flux[-1] - flux[0]) + dt * eps * dx * np.sum(src)
                defect = max(defect, abs(change - budget))

        u, w = u_new, w_new
        v = recover_v(spec, u, w, v)
        t += dt
        steps += 1
        if steps % 64 == 0 and not np.all(np.isfinite(u)):
            raise NumericalError(f"non-finite state at t={t:.6g}")
        if t >= target - 1e-14:
            frames_u[frame], frames_v[frame], frames_w[frame] = u, v, w
            frame += 1

    return GridSolution(x=x, dx=dx, times=out_times, U=frames_u, V=frames_v,
                        W=frames_w, eps=eps, conservation_defect=defect,
                        steps=steps)


def _front_position(x: np.ndarray, q: np.ndarray, dx: float,
                    margin: int = 20, noise: float = 1e-8) -> float:
    dq = np.diff(q)
    i = int(np.argmax(np.abs(dq)))
    if abs(dq[i]) <= noise:
        raise FrontError("no front found: largest jump below the noise floor")
    if i - margin < 0 or i + 1 + margin >= q.size:
        raise FrontError("front too close to the domain boundary")
    # the numerical profile width in cells scales with the ratio of the
    # interface speed bound to this family's characteristic jump, so the
    # far-state margin grows until the sampled plateaus stop moving
    m = margin
    while i - 2 * m >= 0 and i + 1 + 2 * m < q.size:
        jump = abs(q[i + 1 + m] - q[i - m])
        drift = max(abs(q[i - m] - q[i - 2 * m]),
                    abs(q[i + 1 + m] - q[i + 1 + 2 * m]))
        if jump > noise and drift <= 2e-3 * jump:
            break
        m *= 2
    else:
        raise FrontError("front plateau not resolved inside the domain")
    far_l = q[i - m]
    far_r = q[i + 1 + m]
    mid = 0.5 * (far_l + far_r)
    window = np.arange(max(i - m, 0), min(i + 1 + m, q.size - 1))
    sgn = (q[window] - mid) * (q[window + 1] - mid)
    hits = window[sgn <= 0.0]
    if hits.size == 0:
        raise FrontError("mid-value crossing not found near the front")
    j = int(hits[np.argmin(np.abs(hits - i))])
    denom = q[j + 1] - q[j]
    if denom == 0.0:
        return float(x[j])
    return float(x[j] + (mid - q[j]) / denom * dx)


def extract_shocks(sol: GridSolution, t: float) -> tuple[float, float]:
    """Sub-cell front positions at a stored time: the slow front from the
    steepest u jump, the fast front from the steepest v jump."""
    i = sol.frame(t)
    x_minus = _front_position(sol.x, sol.U[i], sol.dx)
    x_plus = _front_position(sol.x, sol.V[i], sol.dx)
    if x_plus - x_minus < 10.0 * sol.dx:
        raise FrontError(
            f"fronts at {x_minus:.6g} and {x_plus:.6g} closer than 10 cells"
        )
    return x_minus, x_plus


def write_snapshot_csv(sol: GridSolution, t: float, path) -> None:
    i = sol.frame(t)
    with open(path, "w") as handle:
        handle.write("x_center,u,v,w\n")
        for j in range(sol.x.size):
            handle.write(f"{sol.x[j]:.17g},{sol.U[i, j]:.17g},"
                         f"{sol.V[i, j]:.17g},{sol.W[i, j]:.17g}\n")


def write_extraction_csv(sol: GridSolution, path) -> None:
    with open(path, "w") as handle:
        handle.write("t,x_minus,x_plus\n")
        for t in sol.times:
            xm, xp = extract_shocks(sol, float(t))
            handle.write(f"{t:.17g},{xm:.17g},{xp:.17g}\n")
