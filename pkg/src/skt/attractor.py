"""Long-time behaviour: absorbing ball, decay envelope, ensembles.

With ``Y = |u|^2 + |v|^2`` the energy obeys ``Y' + 2 int(b1 u^3 + c2 v^3) <=
2 int(a1 u^2 + a2 v^2)``. Adding ``alpha1 Y`` to both sides and bounding each
pointwise polynomial by its maximum gives ``Y' + alpha1 Y <= alpha2`` with

    alpha2 = |Omega| * sum_i max_{s>=0} ((2 a_i + alpha1) s^2 - 2 beta_i s^3)

(beta_1 = b1, beta_2 = c2), hence
``Y(t) <= R + (Y(0) - R) exp(-alpha1 t)``, ``R = alpha2 / alpha1``.

The attractor itself is out of reach numerically; the ball radius and the
post-entry hull of an ensemble are reported as outer bounds for it.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coefficients import Coefficients, require_solvable
from .diagnostics import cubic_sup
from .errors import LinearSolveFailure, NonConvergence, UnboundedReaction, ValidationError
from .grid import Grid, State, format_float, l2_sq
from .stepper import SchemeConfig, run

SUMMARY_COLUMNS = ("seed", "Y0", "entry_time_predicted", "entry_time_observed",
                   "violations", "final_Y")


@dataclass(frozen=True)
class AbsorbingBall:
    alpha1: float
    alpha2: float
    radius_sq: float
    derivation: dict = field(default_factory=dict)


def absorbing_constants(c: Coefficients, domain_volume: float, alpha1: float = 1.0) -> AbsorbingBall:
    require_solvable(c)
    if c.b1 == 0 or c.c2 == 0:
        raise UnboundedReaction("absorbing ball needs b1 > 0 and c2 > 0")
    if not alpha1 > 0:
        raise ValidationError(f"alpha1: must be > 0, got {alpha1!r}")
    sup_u = cubic_sup(2 * c.a1 + alpha1, 2 * c.b1)
    sup_v = cubic_sup(2 * c.a2 + alpha1, 2 * c.c2)
    alpha2 = domain_volume * (sup_u + sup_v)
    derivation = {
        "alpha1": alpha1,
        "domain_volume": domain_volume,
        "quadratic_u": 2 * c.a1 + alpha1, "cubic_u": 2 * c.b1,
        "argmax_u": 2 * (2 * c.a1 + alpha1) / (3 * 2 * c.b1), "sup_u": sup_u,
        "quadratic_v": 2 * c.a2 + alpha1, "cubic_v": 2 * c.c2,
        "argmax_v": 2 * (2 * c.a2 + alpha1) / (3 * 2 * c.c2), "sup_v": sup_v,
    }
    return AbsorbingBall(alpha1, alpha2, alpha2 / alpha1, derivation)


def envelope(t, Y0, ball: AbsorbingBall):
    """``Y0 exp(-alpha1 t) + R (1 - exp(-alpha1 t))``."""
    decay = np.exp(-ball.alpha1 * np.asarray(t, dtype=float))
    return Y0 * decay + ball.radius_sq * (1 - decay)


def check_envelope(Y, k, ball: AbsorbingBall, Y0, rel_tol=0.05, abs_tol=1e-9) -> int:
    """Number of samples ``Y[m]`` (at ``t = m k``) above the envelope beyond tolerance."""
    Y = np.asarray(Y, dtype=float)
    env = envelope(k * np.arange(len(Y)), Y0, ball)
    return int(np.sum(Y > env * (1 + rel_tol) + abs_tol))


def entry_time(Y0, ball: AbsorbingBall, r) -> float:
    """First time the envelope drops to ``r R``."""
    if not r > 1:
        raise ValidationError(f"r: must be > 1, got {r!r}")
    if Y0 < 0:
        raise ValidationError(f"Y0: must be >= 0, got {Y0!r}")
    R = ball.radius_sq
    if Y0 <= r * R:
        return 0.0
    return math.log((Y0 - R) / ((r - 1) * R)) / ball.alpha1


def energy_series(states, g: Grid) -> np.ndarray:
    return np.array([l2_sq(s.u, g) + l2_sq(s.v, g) for s in states])


def random_state(g: Grid, amplitude, seed) -> State:
    rng = np.random.default_rng(seed)
    return State(amplitude * rng.random(g.shape), amplitude * rng.random(g.shape))


@dataclass
class MemberResult:
    seed: int | None
    Y0: float
    Y: np.ndarray
    violations: int
    entry_time_predicted: float
    entry_time_observed: float
    final_Y: float
    hull_u: np.ndarray | None = None
    hull_v: np.ndarray | None = None
    post_entry_sup: float = math.nan
    error: str | None = None


@dataclass
class EnsembleResult:
    members: list
    ball: AbsorbingBall
    r: float
    hull_sup: float
    hull_u: np.ndarray | None
    hull_v: np.ndarray | None

    @property
    def total_violations(self):
        return sum(m.violations for m in self.members)


def _observed_entry(Y, k, level):
    """Earliest ``t_m`` after which ``Y`` stays at or below ``level``; nan if never."""
    above = np.nonzero(Y > level)[0]
    if len(above) == 0:
        return 0.0
    last = above[-1]
    if last == len(Y) - 1:
        return math.nan
    return (last + 1) * k


def _run_member(args):
    initial, T, c, g, cfg, r, ball, seed, abs_tol = args
    Y0 = l2_sq(initial.u, g) + l2_sq(initial.v, g)
    predicted = entry_time(Y0, ball, r)
    try:
        traj = run(initial, T, c, g, cfg)
    except (NonConvergence, LinearSolveFailure) as exc:
        partial = getattr(exc, "trajectory", None)
        Y = energy_series(partial.states, g) if partial else np.array([Y0])
        return MemberResult(seed, Y0, Y, check_envelope(Y, cfg.k, ball, Y0, abs_tol=abs_tol),
                            predicted, math.nan, float(Y[-1]), error=str(exc))
    Y = energy_series(traj.states, g)
    observed = _observed_entry(Y, cfg.k, r * ball.radius_sq)
    res = MemberResult(seed, Y0, Y, check_envelope(Y, cfg.k, ball, Y0, abs_tol=abs_tol),
                       predicted, observed, float(Y[-1]))
    if not math.isnan(observed):
        first = int(round(observed / cfg.k))
        post = traj.states[first:]
        res.hull_u = np.max([s.u for s in post], axis=0)
        res.hull_v = np.max([s.v for s in post], axis=0)
        res.post_entry_sup = float(Y[first:].max())
    return res


def hull(members):
    """Post-entry sup of Y and componentwise max fields over ``members``."""
    entered = [m for m in members if m.hull_u is not None]
    if not entered:
        return math.nan, None, None
    return (max(m.post_entry_sup for m in entered),
            np.max([m.hull_u for m in entered], axis=0),
            np.max([m.hull_v for m in entered], axis=0))


def ensemble(initials, T, c: Coefficients, g: Grid, cfg: SchemeConfig, r=2.0,
             seeds=None, max_workers=None, ball=None) -> EnsembleResult:
    """Run every initial state to ``T`` and audit it against the absorbing ball.

    Members are independent; with ``max_workers > 1`` they run in separate
    processes, and results are reduced in input order either way. A member
    whose run fails is reported with ``error`` set instead of aborting the
    ensemble.
    """
    if ball is None:
        ball = absorbing_constants(c, g.volume)
    seeds = list(seeds) if seeds is not None else [None] * len(initials)
    abs_tol = 10 * cfg.nonlinear_tol
    jobs = [(s0, T, c, g, cfg, r, ball, seed, abs_tol) for s0, seed in zip(initials, seeds)]
    if max_workers and max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            members = list(pool.map(_run_member, jobs))
    else:
        members = [_run_member(job) for job in jobs]
    sup, hu, hv = hull(members)
    return EnsembleResult(members, ball, r, sup, hu, hv)


def write_summary_csv(path, result: EnsembleResult):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for m in result.members:
            writer.writerow(["" if m.seed is None else str(m.seed), format_float(m.Y0),
                             format_float(m.entry_time_predicted),
                             format_float(m.entry_time_observed),
                             str(m.violations), format_float(m.final_Y)])
