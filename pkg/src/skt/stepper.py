"""Implicit truncated time stepping.

One step solves, for the new state ``(u, v)`` given ``(u0, v0)``,

    (u - u0)/k - [div(P^M grad(u, v))]_1 + (b1|u| + c1 T(v)) u - a1 T(u) = 0
    (v - v0)/k - [div(P^M grad(u, v))]_2 + (b2 T(u) + c2|v|) v - a2 T(v) = 0

where ``T`` clamps to [0, M] and ``P^M`` is the diffusion matrix evaluated at
clamped values. The absolute values in the damping terms are kept during the
iteration so transient negative iterates are still pushed back to zero.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coefficients import Coefficients, require_solvable, truncate_slope
from .errors import LinearSolveFailure, NonConvergence, ValidationError
from .grid import Grid, State, _divergence, diffusion_operator

log = logging.getLogger(__name__)

PICARD = "picard"
NEWTON = "newton"


@dataclass(frozen=True)
class SchemeConfig:
    k: float
    M: float = 1.0e6
    solver: str = PICARD
    nonlinear_tol: float = 1.0e-10
    max_iters: int = 100
    linear_tol: float | None = None
    positivity_tol: float = 1.0e-10
    # sparse LU up to this many cells, preconditioned GMRES beyond
    direct_limit: int = 20000

    def __post_init__(self):
        if self.linear_tol is None:
            object.__setattr__(self, "linear_tol", self.nonlinear_tol / 10)
        for name in ("k", "M", "nonlinear_tol", "linear_tol"):
            x = getattr(self, name)
            if not (isinstance(x, (int, float)) and math.isfinite(x) and x > 0):
                raise ValidationError(f"{name}: must be finite and > 0, got {x!r}")
            object.__setattr__(self, name, float(x))
        if not (math.isfinite(self.positivity_tol) and self.positivity_tol >= 0):
            raise ValidationError(f"positivity_tol: must be finite and >= 0, got {self.positivity_tol!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValidationError(f"max_iters: must be an integer >= 1, got {self.max_iters!r}")
        object.__setattr__(self, "max_iters", int(self.max_iters))
        solver = str(self.solver).lower()
        if solver not in (PICARD, NEWTON):
            raise ValidationError(f"solver: must be 'picard' or 'newton', got {self.solver!r}")
        object.__setattr__(self, "solver", solver)


@dataclass
class StepReport:
    iterations: int
    final_residual: float
    min_u: float
    min_v: float
    energy_slack: float
    converged: bool
    clamp_mass: float = 0.0


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    k: float = 0.0

    @property
    def clamp_mass(self):
        return sum(r.clamp_mass for r in self.reports)


def _norm(x, g: Grid):
    return math.sqrt(float(np.dot(x, x)) * g.cell_volume)


def _residual_vec(x, x0, c, g, cfg):
    n = g.size
    u, v = x[:n], x[n:]
    tu, tv = np.clip(u, 0, cfg.M), np.clip(v, 0, cfg.M)
    du, dv = _divergence(c, u, v, cfg.M, g)
    r1 = (u - x0[:n]) / cfg.k - du.ravel() + (c.b1 * np.abs(u) + c.c1 * tv) * u - c.a1 * tu
    r2 = (v - x0[n:]) / cfg.k - dv.ravel() + (c.b2 * tu + c.c2 * np.abs(v)) * v - c.a2 * tv
    return np.concatenate([r1, r2])


def residual(candidate: State, prev: State, c: Coefficients, g: Grid, cfg: SchemeConfig):
    """Defect of ``candidate`` in the one-step equations; zero at a solution."""
    require_solvable(c)
    for s in (candidate, prev):
        if not s.conforms(g):
            raise ValidationError(f"state shape {s.u.shape} does not match grid {g.shape}")
    r = _residual_vec(candidate.stacked(), prev.stacked(), c, g, cfg)
    return r[:g.size].reshape(g.shape), r[g.size:].reshape(g.shape)


def _jacobian(x, c, g, cfg):
    """Exact Jacobian of the residual; kinks of |.| and the clamp use right derivatives."""
    n = g.size
    M = cfg.M
    u, v = x[:n], x[n:]
    tu, tv = np.clip(u, 0, M), np.clip(v, 0, M)
    su, sv = truncate_slope(u, M), truncate_slope(v, M)
    J = -diffusion_operator(c, State(u.reshape(g.shape), v.reshape(g.shape)), g, M)
    # derivative of the face coefficients times the frozen gradients
    blocks = [[None, None], [None, None]]

    def add(i, j, m):
        blocks[i][j] = m if blocks[i][j] is None else blocks[i][j] + m

    for G, D, A, _, _ in g.operators:
        gu = sp.diags(G @ u)
        gv = sp.diags(G @ v)
        Asu = A @ sp.diags(su)
        Asv = A @ sp.diags(sv)
        # flux1 = P11 gu + P12 gv, P11 = d1 + 2a11 T(u) + a12 T(v), P12 = a12 T(u)
        add(0, 0, D @ ((2 * c.a11) * (gu @ Asu) + c.a12 * (gv @ Asu)))
        add(0, 1, D @ (c.a12 * (gu @ Asv)))
        # flux2 = P21 gu + P22 gv, P21 = a21 T(v), P22 = d2 + a21 T(u) + 2a22 T(v)
        add(1, 0, D @ (c.a21 * (gv @ Asu)))
        add(1, 1, D @ (c.a21 * (gu @ Asv) + (2 * c.a22) * (gv @ Asv)))
    J = J - sp.bmat(blocks, format="csr")
    sign_u = np.where(u >= 0, 1.0, -1.0)
    sign_v = np.where(v >= 0, 1.0, -1.0)
    d_uu = 1 / cfg.k + c.b1 * (np.abs(u) + sign_u * u) + c.c1 * tv - c.a1 * su
    d_uv = c.c1 * sv * u
    d_vu = c.b2 * su * v
    d_vv = 1 / cfg.k + c.b2 * tu + c.c2 * (np.abs(v) + sign_v * v) - c.a2 * sv
    local = sp.bmat([[sp.diags(d_uu), sp.diags(d_uv)],
                     [sp.diags(d_vu), sp.diags(d_vv)]], format="csr")
    return (J + local).tocsr()


def _linear_solve(A, b, g, cfg):
    if g.size <= cfg.direct_limit:
        try:
            x = spla.splu(A.tocsc()).solve(b)
        except RuntimeError as exc:
            raise LinearSolveFailure(f"sparse LU failed: {exc}") from exc
    else:
        try:
            ilu = spla.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=10)
        except RuntimeError as exc:
            raise LinearSolveFailure(f"ILU preconditioner failed: {exc}") from exc
        pre = spla.LinearOperator(A.shape, ilu.solve)
        x, info = spla.gmres(A, b, M=pre, rtol=cfg.linear_tol, atol=0.0,
                             restart=50, maxiter=200)
        if info != 0:
            raise LinearSolveFailure(f"GMRES did not converge (info={info})")
    if not np.all(np.isfinite(x)):
        raise LinearSolveFailure("linear solve produced non-finite values")
    return x


def _picard(x0, c, g, cfg):
    n = g.size
    x = x0.copy()
    eye = sp.identity(2 * n, format="csr") / cfg.k
    res = diff = math.inf
    for it in range(1, cfg.max_iters + 1):
        u, v = x[:n], x[n:]
        tu, tv = np.clip(u, 0, cfg.M), np.clip(v, 0, cfg.M)
        damping = np.concatenate([c.b1 * np.abs(u) + c.c1 * tv,
                                  c.b2 * tu + c.c2 * np.abs(v)])
        L = diffusion_operator(c, State(u.reshape(g.shape), v.reshape(g.shape)), g, cfg.M)
        A = eye + sp.diags(damping) - L
        rhs = x0 / cfg.k + np.concatenate([c.a1 * tu, c.a2 * tv])
        x_new = _linear_solve(A, rhs, g, cfg)
        diff = _norm(x_new - x, g)
        x = x_new
        res = _norm(_residual_vec(x, x0, c, g, cfg), g)
        if res <= cfg.nonlinear_tol and diff <= cfg.nonlinear_tol:
            return x, it, res, True
    return x, cfg.max_iters, res, False


def _newton(x0, c, g, cfg):
    x = x0.copy()
    r = _residual_vec(x, x0, c, g, cfg)
    res = _norm(r, g)
    for it in range(1, cfg.max_iters + 1):
        dx = _linear_solve(_jacobian(x, c, g, cfg), -r, g, cfg)
        t = 1.0
        while True:
            x_try = x + t * dx
            r_try = _residual_vec(x_try, x0, c, g, cfg)
            res_try = _norm(r_try, g)
            if res_try <= (1 - 1e-4 * t) * res or t < 1.0 / 64 or res_try <= cfg.nonlinear_tol:
                break
            t *= 0.5
        diff = t * _norm(dx, g)
        x, r, res = x_try, r_try, res_try
        if res <= cfg.nonlinear_tol and diff <= cfg.nonlinear_tol:
            return x, it, res, True
    return x, cfg.max_iters, res, False


def step(prev: State, c: Coefficients, g: Grid, cfg: SchemeConfig):
    """Advance one time step; returns ``(State, StepReport)``.

    Negative entries no smaller than ``-positivity_tol`` are clamped to zero
    and their mass logged; anything more negative is left in place and shows
    up in ``min_u`` / ``min_v``.
    """
    from .diagnostics import constant_K1, energy_row, check_step_energy

    require_solvable(c)
    if not prev.conforms(g):
        raise ValidationError(f"state shape {prev.u.shape} does not match grid {g.shape}")
    if min(prev.u.min(), prev.v.min()) < -cfg.positivity_tol:
        raise ValidationError("prev: state must be nonnegative within positivity_tol")
    x0 = prev.stacked()
    solve = _newton if cfg.solver == NEWTON else _picard
    x, iters, res, ok = solve(x0, c, g, cfg)
    n = g.size
    min_u, min_v = float(x[:n].min()), float(x[n:].min())
    tiny = (x < 0) & (x >= -cfg.positivity_tol)
    clamp_mass = float(-x[tiny].sum() * g.cell_volume)
    x = np.where(tiny, 0.0, x)
    if clamp_mass > 0:
        log.debug("clamped %d tiny negative values, mass %.3e", int(tiny.sum()), clamp_mass)
    new = State.from_stacked(x, g)
    report = StepReport(iters, res, min_u, min_v, math.nan, ok, clamp_mass)
    if not ok:
        raise NonConvergence(
            f"{cfg.solver} iteration stalled after {iters} iterations, residual {res:.3e}",
            report=report)
    try:
        K1 = constant_K1(c, g.volume)
    except ValueError:
        K1 = math.inf
    report.energy_slack = check_step_energy(energy_row(prev, new, c, g, cfg), K1, cfg.k, c)
    return new, report


def run(initial: State, T: float, c: Coefficients, g: Grid, cfg: SchemeConfig) -> Trajectory:
    """March ``round(T/k)`` steps from ``initial``.

    A failing step raises with ``.step`` set to its index and
    ``.trajectory`` holding everything computed before it.
    """
    require_solvable(c)
    if not (math.isfinite(T) and T >= cfg.k):
        raise ValidationError(f"T: must be finite and >= k, got {T!r}")
    if not initial.conforms(g):
        raise ValidationError(f"state shape {initial.u.shape} does not match grid {g.shape}")
    if min(initial.u.min(), initial.v.min()) < -cfg.positivity_tol:
        raise ValidationError("initial: state must be nonnegative")
    N = int(round(T / cfg.k))
    traj = Trajectory([0.0], [initial], [], cfg.k)
    s = initial
    for m in range(1, N + 1):
        try:
            s, rep = step(s, c, g, cfg)
        except (NonConvergence, LinearSolveFailure) as exc:
            exc.step = m
            exc.trajectory = traj
            raise
        traj.times.append(m * cfg.k)
        traj.states.append(s)
        traj.reports.append(rep)
    return traj
