"""Energy bookkeeping along discrete trajectories.

For one accepted step from ``(u0, v0)`` to ``(u, v)`` the scheme satisfies

    E + |u - u0|^2 + |v - v0|^2 + 2k D_w + k (b1 |u|_3^3 + c2 |v|_3^3)
        <= E0 + 2k K1

with ``E = |u|^2 + |v|^2`` and ``D_w`` the weighted dissipation
``int (d0 + alpha(T(u) + T(v))) (|grad u|^2 + |grad v|^2)``. ``K1`` is the
sharp constant in ``int a1 u^2 + a2 v^2 <= int b1/2 |u|^3 + c2/2 |v|^3 + K1``.
The ledger stores every term so the inequality, and its telescoped sums,
can be re-checked from the saved states.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .coefficients import Coefficients, flux_potential, require_solvable
from .errors import PreconditionViolation, UnboundedReaction, ValidationError
from .grid import (Grid, State, dissipation, face_gradients, format_float,
                   grad_sq, l2_sq, lp_norm, weighted_dissipation)

LEDGER_COLUMNS = ("m", "t", "l2_sq_u", "l2_sq_v", "increment_sq", "dissipation",
                  "weighted_dissipation", "cubic_u", "cubic_v", "grad_p_l2",
                  "weighted_time_diff", "slack_energy")


def cubic_sup(a, b):
    """``max_{s >= 0} (a s^2 - b s^3)``; attained at ``s = 2a / (3b)``."""
    if a == 0:
        return 0.0
    if b <= 0:
        raise UnboundedReaction(f"growth {a} with no cubic damping")
    return 4.0 * a ** 3 / (27.0 * b * b)


def constant_K1(c: Coefficients, domain_volume: float) -> float:
    if c.b1 == 0 and c.a1 > 0:
        raise UnboundedReaction("b1 = 0 with a1 > 0: no finite K1")
    if c.c2 == 0 and c.a2 > 0:
        raise UnboundedReaction("c2 = 0 with a2 > 0: no finite K1")
    return domain_volume * (cubic_sup(c.a1, c.b1 / 2) + cubic_sup(c.a2, c.c2 / 2))


@dataclass
class LedgerRow:
    m: int
    t: float
    l2_sq_u: float
    l2_sq_v: float
    l2_sq_prev: float
    increment_sq: float
    dissipation: float
    weighted_dissipation: float
    grad_sq: float
    weighted_grad: float
    cubic_u: float
    cubic_v: float
    grad_p_l2: float
    weighted_time_diff: float
    weighted_time_diff_half: float
    slack_energy: float = math.nan
    slack_gronwall: float = math.nan


def grad_p_sq(c: Coefficients, s: State, g: Grid) -> float:
    p1, p2 = flux_potential(c, s.u, s.v)
    return grad_sq(p1, g) + grad_sq(p2, g)


def _weighted_grad(s: State, g: Grid, M):
    """Face quadrature of ``(T(u) + T(v)) (|grad u|^2 + |grad v|^2)``."""
    t = np.clip(s.u, 0, M).ravel() + np.clip(s.v, 0, M).ravel()
    total = 0.0
    for (_, _, A, w, _), a, b in zip(g.operators, face_gradients(s.u, g), face_gradients(s.v, g)):
        total += np.sum(w * (A @ t) * (a * a + b * b))
    return float(total)


def _time_diff(prev: State, s: State, c: Coefficients, g: Grid, k, factor):
    rep = require_solvable(c)
    weight = rep.d0 + factor * rep.alpha * (prev.u + prev.v + s.u + s.v)
    rate = ((s.u - prev.u) / k) ** 2 + ((s.v - prev.v) / k) ** 2
    return float(k * np.sum(weight * rate) * g.cell_volume)


def energy_row(prev: State, s: State, c: Coefficients, g: Grid, cfg, m=1, t=None) -> LedgerRow:
    """All monitored quantities of the step ``prev -> s``."""
    k, M = cfg.k, cfg.M
    return LedgerRow(
        m=m, t=m * k if t is None else t,
        l2_sq_u=l2_sq(s.u, g), l2_sq_v=l2_sq(s.v, g),
        l2_sq_prev=l2_sq(prev.u, g) + l2_sq(prev.v, g),
        increment_sq=l2_sq(s.u - prev.u, g) + l2_sq(s.v - prev.v, g),
        dissipation=dissipation(c, s, g, M),
        weighted_dissipation=weighted_dissipation(c, s, g, M),
        grad_sq=grad_sq(s.u, g) + grad_sq(s.v, g),
        weighted_grad=_weighted_grad(s, g, M),
        cubic_u=lp_norm(s.u, 3, g) ** 3, cubic_v=lp_norm(s.v, 3, g) ** 3,
        grad_p_l2=grad_p_sq(c, s, g),
        weighted_time_diff=_time_diff(prev, s, c, g, k, 0.25),
        weighted_time_diff_half=_time_diff(prev, s, c, g, k, 0.5),
    )


def check_step_energy(row: LedgerRow, K1: float, k: float, c: Coefficients) -> float:
    """Right side minus left side of the one-step energy inequality."""
    lhs = (row.l2_sq_u + row.l2_sq_v + row.increment_sq + 2 * k * row.weighted_dissipation
           + k * (c.b1 * row.cubic_u + c.c2 * row.cubic_v))
    rhs = 2 * k * K1 + row.l2_sq_prev
    return rhs - lhs


@dataclass
class EnergyLedger:
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def accumulate_bounds(traj, c: Coefficients, g: Grid, cfg) -> EnergyLedger:
    """Ledger rows for every step plus the five running sums and their bounds.

    Summing the one-step inequality gives, with
    ``B = E(0) + 2 K1 T + (sum of negative slacks)``::

        sup_m E(m)                                  <= B
        sum |u^m - u^{m-1}|^2 + |v^m - v^{m-1}|^2   <= B
        k sum |grad u|^2 + |grad v|^2               <= B / (2 d0)
        k sum int (T(u)+T(v))(|grad u|^2+|grad v|^2) <= B / (2 alpha)
        k sum |u|_3^3 + |v|_3^3                     <= B / min(b1, c2)

    The last two are skipped (bound = inf) when alpha or min(b1, c2) is zero.
    """
    rep = require_solvable(c)
    k = cfg.k
    try:
        K1 = constant_K1(c, g.volume)
    except UnboundedReaction:
        K1 = math.inf
    rows = []
    for m in range(1, len(traj.states)):
        row = energy_row(traj.states[m - 1], traj.states[m], c, g, cfg, m, traj.times[m])
        row.slack_energy = check_step_energy(row, K1, k, c)
        rows.append(row)
    monitor = grad_p_monitor(traj, c, g)
    for row, env, a in zip(rows, monitor["envelope"][1:], monitor["grad_p"][1:]):
        row.slack_gronwall = float(env - a)

    s0 = traj.states[0]
    E0 = l2_sq(s0.u, g) + l2_sq(s0.v, g)
    T = traj.times[-1]
    neg_slack = sum(max(0.0, -r.slack_energy) for r in rows)
    B = E0 + 2 * K1 * T + neg_slack
    sums = {
        "sup_l2": max((r.l2_sq_u + r.l2_sq_v for r in rows), default=0.0),
        "sum_increments": sum(r.increment_sq for r in rows),
        "sum_k_grad": k * sum(r.grad_sq for r in rows),
        "sum_k_weighted": k * sum(r.weighted_grad for r in rows),
        "sum_k_cubic": k * sum(r.cubic_u + r.cubic_v for r in rows),
    }
    damp = min(c.b1, c.c2)
    bounds = {
        "sup_l2": B,
        "sum_increments": B,
        "sum_k_grad": B / (2 * rep.d0),
        "sum_k_weighted": B / (2 * rep.alpha) if rep.alpha > 0 else math.inf,
        "sum_k_cubic": B / damp if damp > 0 else math.inf,
    }
    summary = dict(sums)
    summary.update({
        "K1": K1,
        "K2_star": max(sums.values()),
        "initial_energy": E0,
        "cumulative_slack": neg_slack,
        "bound": B,
        "bounds": bounds,
        "telescoped_ok": all(sums[key] <= 1.01 * bounds[key] + 1e-12 for key in sums),
        "min_slack_energy": min((r.slack_energy for r in rows), default=math.inf),
        "weighted_time_sum": monitor["weighted_sum"],
        "weighted_time_sum_half": monitor["weighted_sum_half"],
        "grad_p_growth": monitor["growth_constant"],
        "grad_p_within_envelope": monitor["within_envelope"],
    })
    return EnergyLedger(rows, summary)


def grad_p_monitor(traj, c: Coefficients, g: Grid) -> dict:
    """Track ``|grad p|^2`` and the weighted time-difference sum.

    The growth constant is the smallest ``c`` with
    ``(a_m - a_{m-1})/k <= c ((a_m + a_{m-1})/2 + 1)`` along the run, and the
    envelope is the discrete Gronwall bound for that ``c`` with theta = 1/2.
    """
    k = traj.k
    a = np.array([grad_p_sq(c, s, g) for s in traj.states])
    steps = list(zip(traj.states[:-1], traj.states[1:]))
    wtd = [_time_diff(p, s, c, g, k, 0.25) for p, s in steps]
    wtd_half = [_time_diff(p, s, c, g, k, 0.5) for p, s in steps]
    n = len(a) - 1
    growth = 0.0
    if n > 0:
        rates = (a[1:] - a[:-1]) / (k * ((a[1:] + a[:-1]) / 2 + 1))
        growth = float(max(0.0, rates.max()))
    envelope = np.full(n + 1, math.nan)
    within = False
    if n == 0:
        envelope = a.copy()
        within = True
    elif 0.5 * k * growth < 1:
        gin = GronwallInput(a0=float(a[0]), tau=[k] * n, lam=[growth] * (n + 1),
                            g=[growth] * n, theta=0.5)
        envelope = discrete_gronwall(gin)
        within = bool(np.all(a <= envelope * (1 + 1e-9) + 1e-12))
    return {
        "grad_p": a,
        "weighted_time_diff": np.array(wtd),
        "weighted_sum": float(sum(wtd)),
        "weighted_sum_half": float(sum(wtd_half)),
        "growth_constant": growth,
        "envelope": envelope,
        "within_envelope": within,
    }


@dataclass(frozen=True)
class GronwallInput:
    """Data for the bound on ``(a_n - a_{n-1})/tau_n <= g_n + (1-theta) lam_{n-1} a_{n-1} + theta lam_n a_n``.

    ``tau`` and ``g`` hold ``tau_1..tau_N`` and ``g_1..g_N``; ``lam`` holds
    ``lam_0..lam_N``.
    """

    a0: float
    tau: tuple
    lam: tuple
    g: tuple
    theta: float

    def __post_init__(self):
        for name in ("tau", "lam", "g"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        n = len(self.tau)
        if len(self.g) != n or len(self.lam) != n + 1:
            raise ValidationError("lengths: need len(g) == len(tau) and len(lam) == len(tau) + 1")
        if not 0 <= self.theta <= 1:
            raise ValidationError(f"theta: must lie in [0, 1], got {self.theta!r}")
        if any(t <= 0 for t in self.tau):
            raise ValidationError("tau: step sizes must be > 0")


def gronwall_factors(gin: GronwallInput) -> np.ndarray:
    """``omega_l = (1 + (1-theta) lam_l tau_{l+1}) / (1 - theta lam_{l+1} tau_{l+1})``, l = 0..N-1."""
    th = gin.theta
    tau = np.array(gin.tau)
    lam = np.array(gin.lam)
    den = 1 - th * lam[1:] * tau
    num = 1 + (1 - th) * lam[:-1] * tau
    if np.any(den <= 0):
        raise PreconditionViolation("1 - theta tau_n lam_n must be > 0")
    if np.any(num <= 0):
        raise PreconditionViolation("1 + (1 - theta) lam_{n-1} tau_n must be > 0")
    return num / den


def discrete_gronwall(gin: GronwallInput) -> np.ndarray:
    """Bounds ``A_0..A_N`` with ``a_n <= A_n``.

    ``A_n = a0 prod_{l<n} omega_l
            + sum_{j<n} tau_{j+1} g_{j+1} / (1 + (1-theta) lam_j tau_{j+1}) prod_{j<=l<n} omega_l``
    """
    omega = gronwall_factors(gin)
    th = gin.theta
    tau = np.array(gin.tau)
    lam = np.array(gin.lam)
    src = tau * np.array(gin.g) / (1 + (1 - th) * lam[:-1] * tau)
    N = len(tau)
    out = np.empty(N + 1)
    out[0] = gin.a0
    for n in range(1, N + 1):
        # tails[j] = prod_{l=j}^{n-1} omega_l
        tails = np.cumprod(omega[:n][::-1])[::-1]
        out[n] = gin.a0 * tails[0] + np.dot(src[:n], tails)
    return out


def write_ledger_csv(path, ledger: EnergyLedger):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LEDGER_COLUMNS)
        for row in ledger.rows:
            d = asdict(row)
            writer.writerow([str(d["m"])] + [format_float(d[col]) for col in LEDGER_COLUMNS[1:]])
