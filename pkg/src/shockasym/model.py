"""Problem definition: coefficient functions, initial data, tunables, and
the structural validation that the two-shock construction relies on.

A problem is a weakly forced 2x2 quasilinear system

    u_t + lam(u) u_x = eps * f(u, v)
    v_t + mu(u, v) v_x = eps * g(u, v)

with piecewise initial data jumping at x = 0, together with a conservation
pair: a flux potential Lam with Lam' = lam for the first law, and (Phi, Psi)
with Psi_u = lam * Phi_u and Psi_v = mu * Phi_v for the second.  The pair is
part of the problem statement because it fixes the weak-solution semantics
shared by the asymptotic engine and the finite-volume reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from shockasym import expr
from shockasym.errors import ConfigError

IDENTITY_TOL = 1e-9
JUMP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class StateBox:
    """Rectangle in (u, v) over which validation sampling runs."""

    u: tuple[float, float]
    v: tuple[float, float]

    def grid(self, n: int = 41) -> tuple[np.ndarray, np.ndarray]:
        uu = np.linspace(self.u[0], self.u[1], n)
        vv = np.linspace(self.v[0], self.v[1], n)
        U, V = np.meshgrid(uu, vv, indexing="ij")
        return U.ravel(), V.ravel()


@dataclass(frozen=True, eq=False)
class NumericsConfig:
    dt: float
    fv_domain: tuple[float, float]
    state_box: StateBox
    fan_count: int = 256
    newton_tol: float = 1e-12
    newton_max_iter: int = 60
    fv_cells: int = 4096
    fv_cfl: float = 0.4


@dataclass(frozen=True, eq=False)
class Coefficients:
    """Compiled coefficient functions and their exact derivatives.

    One-argument callables take u (lam, lam_u, Lam, Lam_u); the rest take
    (u, v).  All accept scalars or numpy arrays.
    """

    lam: Callable
    lam_u: Callable
    mu: Callable
    mu_u: Callable
    mu_v: Callable
    f: Callable
    g: Callable
    Lam: Callable
    Lam_u: Callable
    Phi: Callable
    Phi_u: Callable
    Phi_v: Callable
    Psi: Callable
    Psi_u: Callable
    Psi_v: Callable
    asts: dict = field(repr=False, default_factory=dict)


@dataclass(frozen=True, eq=False)
class PiecewiseInitial:
    """Initial data given as one smooth expression per field per side of x=0."""

    u_left: Callable
    u_right: Callable
    v_left: Callable
    v_right: Callable
    du_left: Callable
    du_right: Callable
    dv_left: Callable
    dv_right: Callable
    asts: dict = field(repr=False, default_factory=dict)
    # pieces whose symbolic x-derivative folded to the literal zero; lets
    # evaluators skip root-finding for piecewise-constant data
    flat: frozenset = frozenset()

    def piece(self, fieldname: str, side: str) -> tuple[Callable, Callable]:
        """Return (value, derivative) callables for 'u'/'v' on 'left'/'right'."""
        table = {
            ("u", "left"): (self.u_left, self.du_left),
            ("u", "right"): (self.u_right, self.du_right),
            ("v", "left"): (self.v_left, self.dv_left),
            ("v", "right"): (self.v_right, self.dv_right),
        }
        return table[(fieldname, side)]


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    coeffs: Coefficients
    initial: PiecewiseInitial
    epsilon: float
    horizon: float
    numerics: NumericsConfig
    raw: dict = field(repr=False, default_factory=dict)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    mandatory: bool
    residual: float
    location: dict
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.mandatory)

    def failed_names(self) -> list[str]:
        return [c.name for c in self.checks if c.mandatory and not c.passed]

    def to_dict(self) -> dict:
        out = {
            c.name: {
                "status": "pass" if c.passed else "fail",
                "residual": c.residual,
                "location": c.location,
            }
            for c in self.checks
        }
        out["passed"] = self.passed
        return out

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            extra = f"  ({c.detail})" if c.detail else ""
            lines.append(f"{tag}  {c.name:<22} residual={c.residual:.3e}{extra}")
        lines.append(f"overall: {'pass' if self.passed else 'fail'}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# loading

_COEFF_FIELDS = ("lambda", "mu", "f", "g", "Lambda", "Phi", "Psi")
_INITIAL_FIELDS = ("u_left", "u_right", "v_left", "v_right")


def _parse_field(source: dict, name: str) -> expr.Node:
    value = source.get(name)
    if not isinstance(value, str):
        raise ConfigError(f"field '{name}' must be an expression string")
    try:
        return expr.parse(value)
    except expr.ExpressionError as err:
        raise ConfigError(f"field '{name}': {err}") from err


def _require_number(source: dict, name: str) -> float:
    value = source.get(name)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"field '{name}' must be a number")
    return float(value)


def load_spec(document) -> ProblemSpec:
    """Build a validated-for-shape ProblemSpec from JSON text or a dict.

    Expressions are parsed, derivatives precomputed symbolically, and all
    coefficient functions compiled.  Structural hypotheses (hyperbolicity,
    conservation-pair compatibility, entropy conditions) are checked
    separately by :func:`validate`.
    """
    if isinstance(document, (str, bytes)):
        try:
            config = json.loads(document)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON: {err}") from err
    elif isinstance(document, dict):
        config = document
    else:
        raise ConfigError("configuration must be JSON text or a dict")

    known = set(_COEFF_FIELDS) | {"initial", "epsilon", "T", "numerics"}
    unknown = set(config) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    missing = [k for k in known if k not in config]
    if missing:
        raise ConfigError(f"missing configuration keys: {sorted(missing)}")

    asts = {name: _parse_field(config, name) for name in _COEFF_FIELDS}

    def d(name: str, var: str) -> expr.Node:
        return expr.differentiate(asts[name], var)

    coeffs = Coefficients(
        lam=expr.compile_numpy(asts["lambda"], ("u",)),
        lam_u=expr.compile_numpy(d("lambda", "u"), ("u",)),
        mu=expr.compile_numpy(asts["mu"], ("u", "v")),
        mu_u=expr.compile_numpy(d("mu", "u"), ("u", "v")),
        mu_v=expr.compile_numpy(d("mu", "v"), ("u", "v")),
        f=expr.compile_numpy(asts["f"], ("u", "v")),
        g=expr.compile_numpy(asts["g"], ("u", "v")),
        Lam=expr.compile_numpy(asts["Lambda"], ("u",)),
        Lam_u=expr.compile_numpy(d("Lambda", "u"), ("u",)),
        Phi=expr.compile_numpy(asts["Phi"], ("u", "v")),
        Phi_u=expr.compile_numpy(d("Phi", "u"), ("u", "v")),
        Phi_v=expr.compile_numpy(d("Phi", "v"), ("u", "v")),
        Psi=expr.compile_numpy(asts["Psi"], ("u", "v")),
        Psi_u=expr.compile_numpy(d("Psi", "u"), ("u", "v")),
        Psi_v=expr.compile_numpy(d("Psi", "v"), ("u", "v")),
        asts=asts,
    )

    initial_cfg = config["initial"]
    if not isinstance(initial_cfg, dict):
        raise ConfigError("field 'initial' must be an object")
    unknown = set(initial_cfg) - set(_INITIAL_FIELDS)
    if unknown:
        raise ConfigError(f"unknown initial-data keys: {sorted(unknown)}")
    init_asts = {name: _parse_field(initial_cfg, name) for name in _INITIAL_FIELDS}
    for name, ast in init_asts.items():
        _reject_foreign_vars(ast, name, allowed={"x"})
    init_grad = {name: expr.differentiate(ast, "x") for name, ast in init_asts.items()}
    flat = frozenset(
        name for name, ast in init_grad.items()
        if isinstance(ast, expr.Const) and ast.value == 0.0
    )

    initial = PiecewiseInitial(
        u_left=expr.compile_numpy(init_asts["u_left"], ("x",)),
        u_right=expr.compile_numpy(init_asts["u_right"], ("x",)),
        v_left=expr.compile_numpy(init_asts["v_left"], ("x",)),
        v_right=expr.compile_numpy(init_asts["v_right"], ("x",)),
        du_left=expr.compile_numpy(init_grad["u_left"], ("x",)),
        du_right=expr.compile_numpy(init_grad["u_right"], ("x",)),
        dv_left=expr.compile_numpy(init_grad["v_left"], ("x",)),
        dv_right=expr.compile_numpy(init_grad["v_right"], ("x",)),
        asts=init_asts,
        flat=flat,
    )

    epsilon = _require_number(config, "epsilon")
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive")
    horizon = _require_number(config, "T")
    if horizon <= 0:
        raise ConfigError("T must be positive")

    numerics = _load_numerics(config["numerics"])
    return ProblemSpec(
        coeffs=coeffs,
        initial=initial,
        epsilon=epsilon,
        horizon=horizon,
        numerics=numerics,
        raw=config,
    )


def _reject_foreign_vars(ast: expr.Node, name: str, allowed: set[str]) -> None:
    if isinstance(ast, expr.Var):
        if ast.name not in allowed:
            raise ConfigError(f"field '{name}' may only use variables {sorted(allowed)}")
        return
    if isinstance(ast, expr.Const):
        return
    if isinstance(ast, expr.Neg):
        _reject_foreign_vars(ast.arg, name, allowed)
    elif isinstance(ast, expr.BinOp):
        _reject_foreign_vars(ast.left, name, allowed)
        _reject_foreign_vars(ast.right, name, allowed)
    elif isinstance(ast, expr.Pow):
        _reject_foreign_vars(ast.base, name, allowed)
    elif isinstance(ast, expr.Call):
        _reject_foreign_vars(ast.arg, name, allowed)


def _load_numerics(cfg) -> NumericsConfig:
    if not isinstance(cfg, dict):
        raise ConfigError("field 'numerics' must be an object")
    known = {
        "dt", "fan_count", "newton_tol", "newton_max_iter",
        "fv_cells", "fv_cfl", "fv_domain", "state_box",
    }
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"unknown numerics keys: {sorted(unknown)}")

    dt = _require_number(cfg, "dt")
    if dt <= 0:
        raise ConfigError("dt must be positive")

    domain = cfg.get("fv_domain")
    if (not isinstance(domain, (list, tuple)) or len(domain) != 2
            or not all(isinstance(b, (int, float)) for b in domain)):
        raise ConfigError("fv_domain must be [lo, hi]")
    lo, hi = float(domain[0]), float(domain[1])
    if lo >= hi:
        raise ConfigError("fv_domain must satisfy lo < hi")

    box_cfg = cfg.get("state_box")
    if not isinstance(box_cfg, dict) or set(box_cfg) != {"u", "v"}:
        raise ConfigError("state_box must be {'u': [lo, hi], 'v': [lo, hi]}")

    def _range(name):
        pair = box_cfg[name]
        if (not isinstance(pair, (list, tuple)) or len(pair) != 2
                or not all(isinstance(b, (int, float)) for b in pair)):
            raise ConfigError(f"state_box '{name}' must be [lo, hi]")
        a, b = float(pair[0]), float(pair[1])
        if a >= b:
            raise ConfigError(f"state_box '{name}' must satisfy lo < hi")
        return (a, b)

    box = StateBox(u=_range("u"), v=_range("v"))

    fan_count = int(cfg.get("fan_count", 256))
    if fan_count < 16:
        raise ConfigError("fan_count must be at least 16")
    newton_tol = float(cfg.get("newton_tol", 1e-12))
    if newton_tol <= 0:
        raise ConfigError("newton_tol must be positive")
    newton_max_iter = int(cfg.get("newton_max_iter", 60))
    fv_cells = int(cfg.get("fv_cells", 4096))
    if fv_cells < 64:
        raise ConfigError("fv_cells must be at least 64")
    fv_cfl = float(cfg.get("fv_cfl", 0.4))
    if not 0 < fv_cfl < 1:
        raise ConfigError("fv_cfl must lie strictly between 0 and 1")

    return NumericsConfig(
        dt=dt,
        fv_domain=(lo, hi),
        state_box=box,
        fan_count=fan_count,
        newton_tol=newton_tol,
        newton_max_iter=newton_max_iter,
        fv_cells=fv_cells,
        fv_cfl=fv_cfl,
    )


# ---------------------------------------------------------------------------
# validation

def speed_bound(spec: ProblemSpec) -> float:
    """Largest characteristic speed magnitude over the state box."""
    U, V = spec.numerics.state_box.grid()
    c = spec.coeffs
    return float(max(np.max(np.abs(c.lam(U))), np.max(np.abs(c.mu(U, V)))))


def initial_shock_speeds(spec: ProblemSpec) -> tuple[float, float]:
    """Leading-order shock speeds at t=0 from the jump quotients.

    The slow shock speed comes from the first conservation law across the
    u-jump; the fast one from the second law across the v-jump with the
    continuous u taken from the right state.
    """
    c, ini = spec.coeffs, spec.initial
    uL, uR = float(ini.u_left(0.0)), float(ini.u_right(0.0))
    vL, vR = float(ini.v_left(0.0)), float(ini.v_right(0.0))
    if abs(uL - uR) < JUMP_TOL:
        raise ConfigError("u jump at x=0 is degenerate")
    if abs(vL - vR) < JUMP_TOL:
        raise ConfigError("v jump at x=0 is degenerate")
    d_minus = (c.Lam(uL) - c.Lam(uR)) / (uL - uR)
    dphi = c.Phi(uR, vL) - c.Phi(uR, vR)
    if abs(dphi) < 1e-12:
        raise ConfigError("Phi jump across the fast shock is degenerate")
    d_plus = (c.Psi(uR, vL) - c.Psi(uR, vR)) / dphi
    return float(d_minus), float(d_plus)


def validate(spec: ProblemSpec) -> ValidationReport:
    """Run the structural checks; mandatory failures block solving.

    Identity checks (flux potential, conservation-pair compatibility) are
    sampled over the declared state box; wave-structure checks (entropy
    inequalities, shock ordering, transversality) are evaluated on the
    initial jump at t = 0; the focusing check scans initial-line feet up
    to the horizon.
    """
    c, ini = spec.coeffs, spec.initial
    checks: list[CheckResult] = []
    U, V = spec.numerics.state_box.grid()
    uu = np.unique(U)

    def identity(name, resid, where_u, where_v=None):
        i = int(np.argmax(np.abs(resid)))
        loc = {"u": float(where_u[i])}
        if where_v is not None:
            loc["v"] = float(where_v[i])
        worst = float(np.abs(resid[i]))
        checks.append(CheckResult(name, worst <= IDENTITY_TOL, True, worst, loc))

    identity("flux_potential", c.Lam_u(uu) - c.lam(uu), uu)
    identity("conservation_pair_u", c.Psi_u(U, V) - c.lam(U) * c.Phi_u(U, V), U, V)
    identity("conservation_pair_v", c.Psi_v(U, V) - c.mu(U, V) * c.Phi_v(U, V), U, V)

    phiv = np.abs(c.Phi_v(U, V))
    i = int(np.argmin(phiv))
    checks.append(CheckResult(
        "phi_v_nonzero", float(phiv[i]) > IDENTITY_TOL, True, float(phiv[i]),
        {"u": float(U[i]), "v": float(V[i])},
        detail="min |Phi_v| over state box",
    ))

    margin = c.mu(U, V) - c.lam(U)
    i = int(np.argmin(margin))
    checks.append(CheckResult(
        "hyperbolicity", float(margin[i]) > 0.0, True, float(margin[i]),
        {"u": float(U[i]), "v": float(V[i])},
        detail="min (mu - lam) over state box",
    ))

    uL, uR = float(ini.u_left(0.0)), float(ini.u_right(0.0))
    vL, vR = float(ini.v_left(0.0)), float(ini.v_right(0.0))
    jump = min(abs(uL - uR), abs(vL - vR))
    checks.append(CheckResult(
        "initial_jump", jump > JUMP_TOL, True, jump, {"x": 0.0},
        detail="both fields must jump at x=0",
    ))

    if jump > JUMP_TOL:
        d_minus, d_plus = initial_shock_speeds(spec)
        lam_l, lam_r = float(c.lam(uL)), float(c.lam(uR))
        m = min(lam_l - d_minus, d_minus - lam_r)
        checks.append(CheckResult(
            "lax_minus", m > 0.0, True, m, {"t": 0.0},
            detail=f"lam(uL)={lam_l:.6g} > D-(0)={d_minus:.6g} > lam(uR)={lam_r:.6g}",
        ))
        mu_in = float(c.mu(uR, vL))
        mu_out = float(c.mu(uR, vR))
        m = min(mu_in - d_plus, d_plus - mu_out)
        checks.append(CheckResult(
            "lax_plus", m > 0.0, True, m, {"t": 0.0},
            detail=f"mu(inner)={mu_in:.6g} > D+(0)={d_plus:.6g} > mu(outer)={mu_out:.6g}",
        ))
        m = d_plus - d_minus
        checks.append(CheckResult("ordering", m > 0.0, True, m, {"t": 0.0},
                                  detail="D-(0) < D+(0)"))
        m = min(d_plus - lam_r, mu_in - d_minus)
        checks.append(CheckResult(
            "transversality", m > 0.0, True, m, {"t": 0.0},
            detail="inner-state characteristics must enter the wedge",
        ))
    else:
        for name in ("lax_minus", "lax_plus", "ordering", "transversality"):
            checks.append(CheckResult(name, False, True, 0.0, {"t": 0.0},
                                      detail="skipped: initial jump degenerate"))

    span = 3.0 * speed_bound(spec) * spec.horizon + 1.0
    worst = np.inf
    loc = {"xi": 0.0, "side": "left"}
    for side, sign in (("left", -1.0), ("right", 1.0)):
        ufn, dufn = ini.piece("u", side)
        xi = sign * np.linspace(0.0, span, 400)
        factor = 1.0 + spec.horizon * c.lam_u(ufn(xi)) * dufn(xi)
        i = int(np.argmin(factor))
        if float(factor[i]) < worst:
            worst = float(factor[i])
            loc = {"xi": float(xi[i]), "side": side}
    checks.append(CheckResult(
        "no_focusing", worst > 0.0, False, worst, loc,
        detail="min (1 + T * lam_u * u0') over initial feet",
    ))

    return ValidationReport(tuple(checks))
