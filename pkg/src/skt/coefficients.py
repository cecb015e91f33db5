"""Model constants and pointwise nonlinearities of the SKT competition system.

The two species ``u`` and ``v`` obey

    u_t - Lap p1(u, v) + q1(u, v) = l1(u)
    v_t - Lap p2(u, v) + q2(u, v) = l2(v)

with

    p1 = (d1 + a11 u + a12 v) u      q1 = (b1 u + c1 v) u      l1 = a1 u
    p2 = (d2 + a21 u + a22 v) v      q2 = (b2 u + c2 v) v      l2 = a2 v

All evaluation functions broadcast over numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ValidationError

COEFFICIENT_NAMES = ("d1", "d2", "a11", "a12", "a21", "a22",
                     "b1", "b2", "c1", "c2", "a1", "a2")


@dataclass(frozen=True)
class Coefficients:
    d1: float
    d2: float
    a11: float
    a12: float
    a21: float
    a22: float
    b1: float = 0.0
    b2: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    a1: float = 0.0
    a2: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ValidationError(f"{f.name}: expected a real number, got {value!r}")
            if not math.isfinite(value):
                raise ValidationError(f"{f.name}: must be finite, got {value!r}")
            if value < 0:
                raise ValidationError(f"{f.name}: must be >= 0, got {value!r}")
            object.__setattr__(self, f.name, value)
        for name in ("d1", "d2"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name}: must be > 0 (uniform ellipticity floor)")

    @property
    def d0(self) -> float:
        return min(self.d1, self.d2)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in COEFFICIENT_NAMES}


@dataclass(frozen=True)
class EllipticityReport:
    admissible: bool
    alpha: float
    d0: float
    margin: float
    violations: list = field(default_factory=list)


def _alpha_terms(c: Coefficients):
    return (2 * c.a11 - 0.5 * c.a12,
            2 * c.a22 - 0.5 * c.a21,
            c.a12 - 0.5 * c.a21,
            c.a21 - 0.5 * c.a12)


def check_admissibility(c: Coefficients) -> EllipticityReport:
    """Test the four strict cross-diffusion conditions and compute alpha.

    ``margin`` is the smallest of the four alpha candidates, so it is
    negative (or zero) exactly for the failed conditions and shows how close
    an admissible set sits to the boundary.
    """
    if not isinstance(c, Coefficients):
        raise ValidationError("expected a Coefficients instance")
    checks = (
        ("4*a11 > a12", 4 * c.a11 > c.a12),
        ("4*a22 > a21", 4 * c.a22 > c.a21),
        ("2*a21 > a12", 2 * c.a21 > c.a12),
        ("a12 > a21/2", c.a12 > 0.5 * c.a21),
    )
    violations = [name for name, ok in checks if not ok]
    margin = min(_alpha_terms(c))
    admissible = not violations
    alpha = margin if admissible else 0.0
    return EllipticityReport(admissible, alpha, c.d0, margin, violations)


def is_linear_diffusion(c: Coefficients) -> bool:
    return c.a11 == c.a12 == c.a21 == c.a22 == 0.0


def require_solvable(c: Coefficients) -> EllipticityReport:
    """Admissibility gate for the discrete operators and the solver.

    Admissible sets pass. The decoupled heat pair (every a_ij zero) also
    passes with alpha = 0, since P = diag(d1, d2) is uniformly elliptic.
    """
    rep = check_admissibility(c)
    if rep.admissible or is_linear_diffusion(c):
        return rep
    raise ValidationError("coefficients are not admissible: " + ", ".join(rep.violations))


def _check_state(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise ValidationError("u, v: must be finite")
    if np.any(u < 0) or np.any(v < 0):
        raise ValidationError("u, v: must be >= 0")
    return u, v


def matrix_entries(c: Coefficients, u, v):
    """Entries (P11, P12, P21, P22) of the diffusion matrix, unchecked."""
    p11 = c.d1 + 2 * c.a11 * u + c.a12 * v
    p12 = c.a12 * u
    p21 = c.a21 * v
    p22 = c.d2 + c.a21 * u + 2 * c.a22 * v
    return p11, p12, p21, p22


def diffusion_matrix(c: Coefficients, u, v) -> np.ndarray:
    """Jacobian of (u, v) -> (p1, p2); shape ``(..., 2, 2)``."""
    u, v = _check_state(u, v)
    p11, p12, p21, p22 = matrix_entries(c, u, v)
    p11, p12, p21, p22 = np.broadcast_arrays(p11, p12, p21, p22)
    return np.stack([np.stack([p11, p12], axis=-1),
                     np.stack([p21, p22], axis=-1)], axis=-2)


def flux_potential(c: Coefficients, u, v):
    p1 = (c.d1 + c.a11 * u + c.a12 * v) * u
    p2 = (c.d2 + c.a21 * u + c.a22 * v) * v
    return p1, p2


def reaction_terms(c: Coefficients, u, v):
    """Return (q1, q2, l1, l2)."""
    q1 = (c.b1 * u + c.c1 * v) * u
    q2 = (c.b2 * u + c.c2 * v) * v
    return q1, q2, c.a1 * u, c.a2 * v


def truncate(x, M):
    """Clamp to [0, M]."""
    if not M > 0:
        raise ValidationError(f"M: must be > 0, got {M!r}")
    if np.ndim(x) == 0:
        return float(min(max(x, 0.0), M))
    return np.clip(x, 0.0, M)


def truncate_slope(x, M):
    """Right derivative of ``truncate``: 1 on [0, M), 0 elsewhere."""
    x = np.asarray(x, dtype=float)
    return ((x >= 0) & (x < M)).astype(float)
