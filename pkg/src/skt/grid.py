"""Cell-centred finite-volume discretisation on intervals and rectangles.

Fields are numpy arrays of shape ``grid.shape == (nx, ny)`` (``ny == 1`` in
1-D). Cell ``(i, j)`` has centre ``((i + 1/2) hx, (j + 1/2) hy)``.

Every spatial operator is built from three sparse pieces per axis:

* ``G`` maps cell values to face gradients,
* ``D`` maps face fluxes to cell divergences,
* ``A`` averages cell values onto faces.

Neumann boundaries carry no face at all (zero flux). Dirichlet boundaries
carry a half-width face to the zero boundary value, which reproduces the
ghost-cell reflection ``ghost = -u``. With face quadrature weights ``w``
(cell volume for interior faces, half of it at Dirichlet faces) the discrete
integration by parts

    sum(vol * (D F) * f) == -sum(w * F * (G f))

holds exactly, which is what the energy bookkeeping relies on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .coefficients import Coefficients, matrix_entries, require_solvable
from .errors import ValidationError

NEUMANN = "neumann"
DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class Grid:
    dim: int
    nx: int
    ny: int = 1
    hx: float = 1.0
    hy: float = 1.0
    bc: str = NEUMANN

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValidationError(f"dim: must be 1 or 2, got {self.dim!r}")
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n:
                raise ValidationError(f"{name}: must be an integer, got {n!r}")
            object.__setattr__(self, name, int(n))
        if self.dim == 1 and self.ny != 1:
            raise ValidationError("ny: must be 1 when dim = 1")
        if self.nx < 3 or (self.dim == 2 and self.ny < 3):
            raise ValidationError("nx, ny: need at least 3 cells per active axis")
        for name in ("hx", "hy"):
            h = float(getattr(self, name))
            if not (math.isfinite(h) and h > 0):
                raise ValidationError(f"{name}: must be finite and > 0, got {h!r}")
            object.__setattr__(self, name, h)
        bc = str(self.bc).lower()
        if bc not in (NEUMANN, DIRICHLET):
            raise ValidationError(f"bc: must be 'neumann' or 'dirichlet', got {self.bc!r}")
        object.__setattr__(self, "bc", bc)

    @classmethod
    def unit_interval(cls, nx, bc=NEUMANN):
        return cls(1, nx, 1, 1.0 / nx, 1.0, bc)

    @classmethod
    def unit_square(cls, nx, ny=None, bc=NEUMANN):
        ny = nx if ny is None else ny
        return cls(2, nx, ny, 1.0 / nx, 1.0 / ny, bc)

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def size(self):
        return self.nx * self.ny

    @property
    def cell_volume(self):
        return self.hx if self.dim == 1 else self.hx * self.hy

    @property
    def volume(self):
        return self.size * self.cell_volume

    def centres(self):
        """Cell-centre coordinates ``(x, y)`` broadcast to ``shape``."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def zeros(self):
        return np.zeros(self.shape)

    # sparse building blocks, one entry per active axis

    def _axis_1d(self, n, h):
        dirichlet = self.bc == DIRICHLET
        nf = n + 1 if dirichlet else n - 1
        off = 1 if dirichlet else 0
        rows, cols, vals = [], [], []
        for f in range(n - 1):
            rows += [f + off, f + off]
            cols += [f, f + 1]
            vals += [-1.0 / h, 1.0 / h]
        if dirichlet:
            rows += [0, n]
            cols += [0, n - 1]
            vals += [2.0 / h, -2.0 / h]
        grad = sp.csr_matrix((vals, (rows, cols)), shape=(nf, n))
        # flux leaving through the right face minus entering through the left
        rows, cols, vals = [], [], []
        for i in range(n):
            left, right = i - 1 + off, i + off
            if 0 <= left < nf:
                rows.append(i); cols.append(left); vals.append(-1.0 / h)
            if 0 <= right < nf:
                rows.append(i); cols.append(right); vals.append(1.0 / h)
        div = sp.csr_matrix((vals, (rows, cols)), shape=(n, nf))
        rows, cols, vals = [], [], []
        for f in range(n - 1):
            rows += [f + off, f + off]
            cols += [f, f + 1]
            vals += [0.5, 0.5]
        weight = np.ones(nf)
        boundary = np.zeros(nf)
        if dirichlet:
            rows += [0, n]
            cols += [0, n - 1]
            vals += [0.5, 0.5]
            weight[[0, -1]] = 0.5
            boundary[[0, -1]] = 0.5
        avg = sp.csr_matrix((vals, (rows, cols)), shape=(nf, n))
        return grad, div, avg, weight, boundary

    @cached_property
    def operators(self):
        """Per-axis tuples ``(G, D, A, w, b)``.

        ``A @ c + b * c_boundary`` is the arithmetic face mean of a cell
        coefficient ``c`` whose boundary value is ``c_boundary``; ``w`` are
        the face quadrature weights.
        """
        ops = []
        ix, iy = sp.identity(self.nx, format="csr"), sp.identity(self.ny, format="csr")
        g, d, a, w, b = self._axis_1d(self.nx, self.hx)
        ops.append((sp.kron(g, iy, format="csr"), sp.kron(d, iy, format="csr"),
                    sp.kron(a, iy, format="csr"),
                    np.kron(w, np.ones(self.ny)) * self.cell_volume,
                    np.kron(b, np.ones(self.ny))))
        if self.dim == 2:
            g, d, a, w, b = self._axis_1d(self.ny, self.hy)
            ops.append((sp.kron(ix, g, format="csr"), sp.kron(ix, d, format="csr"),
                        sp.kron(ix, a, format="csr"),
                        np.kron(np.ones(self.nx), w) * self.cell_volume,
                        np.kron(np.ones(self.nx), b)))
        return tuple(ops)

    @cached_property
    def laplacian_matrix(self):
        return sum(D @ G for G, D, _, _, _ in self.operators).tocsr()


@dataclass(frozen=True)
class State:
    """The species pair (u, v) on one grid."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        v = np.array(self.v, dtype=float)
        if u.shape != v.shape:
            raise ValidationError(f"u, v: shape mismatch {u.shape} vs {v.shape}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValidationError("u, v: entries must be finite")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def zeros(cls, g: Grid):
        return cls(g.zeros(), g.zeros())

    @classmethod
    def constant(cls, g: Grid, u0, v0):
        return cls(np.full(g.shape, float(u0)), np.full(g.shape, float(v0)))

    def stacked(self):
        return np.concatenate([self.u.ravel(), self.v.ravel()])

    @classmethod
    def from_stacked(cls, x, g: Grid):
        n = g.size
        return cls(x[:n].reshape(g.shape), x[n:].reshape(g.shape))

    def conforms(self, g: Grid):
        return self.u.shape == g.shape


def _check_field(f, g: Grid):
    f = np.asarray(f, dtype=float)
    if f.shape != g.shape:
        raise ValidationError(f"field shape {f.shape} does not match grid {g.shape}")
    return f


def _check_state(s: State, g: Grid):
    if not s.conforms(g):
        raise ValidationError(f"state shape {s.u.shape} does not match grid {g.shape}")


def laplacian(f, g: Grid) -> np.ndarray:
    f = _check_field(f, g)
    return (g.laplacian_matrix @ f.ravel()).reshape(g.shape)


def face_gradients(f, g: Grid):
    f = np.asarray(f, dtype=float).ravel()
    return [G @ f for G, _, _, _, _ in g.operators]


def face_coefficients(c: Coefficients, u, v, g: Grid, M=None):
    """Face means of the (optionally truncated) diffusion-matrix entries.

    Returns one ``(P11, P12, P21, P22)`` tuple of face arrays per axis.
    Dirichlet faces average the cell value with ``P(0, 0) = diag(d1, d2)``.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if M is not None:
        u = np.clip(u, 0.0, M)
        v = np.clip(v, 0.0, M)
    cell = matrix_entries(c, u, v)
    at_boundary = (c.d1, 0.0, 0.0, c.d2)
    out = []
    for _, _, A, _, b in g.operators:
        out.append(tuple(A @ e + b * e0 for e, e0 in zip(cell, at_boundary)))
    return out


def divergence_form_apply(c: Coefficients, s: State, M, g: Grid):
    """Discrete ``div(P^M(u, v) grad(u, v))`` for both components."""
    _check_state(s, g)
    if not M > 0:
        raise ValidationError(f"M: must be > 0, got {M!r}")
    require_solvable(c)
    return _divergence(c, s.u, s.v, M, g)


def _divergence(c, u, v, M, g):
    du = np.zeros(g.size)
    dv = np.zeros(g.size)
    gu = face_gradients(u, g)
    gv = face_gradients(v, g)
    for (_, D, _, _, _), (p11, p12, p21, p22), a, b in zip(
            g.operators, face_coefficients(c, u, v, g, M), gu, gv):
        du += D @ (p11 * a + p12 * b)
        dv += D @ (p21 * a + p22 * b)
    return du.reshape(g.shape), dv.reshape(g.shape)


def diffusion_operator(c: Coefficients, coeff: State, g: Grid, M=None):
    """Sparse ``2N x 2N`` matrix of ``div(P^M(coeff) grad .)`` with frozen coefficients.

    Acting on ``[u.ravel(), v.ravel()]``.
    """
    blocks = [[None, None], [None, None]]
    for (G, D, _, _, _), entries in zip(g.operators,
                                        face_coefficients(c, coeff.u, coeff.v, g, M)):
        for k, e in enumerate(entries):
            i, j = divmod(k, 2)
            term = D @ sp.diags(e) @ G
            blocks[i][j] = term if blocks[i][j] is None else blocks[i][j] + term
    return sp.bmat(blocks, format="csr")


def inner(f, h, g: Grid) -> float:
    return float(np.sum(np.asarray(f) * np.asarray(h)) * g.cell_volume)


def l2_sq(f, g: Grid) -> float:
    f = np.asarray(f, dtype=float)
    return float(np.sum(f * f) * g.cell_volume)


def grad_sq(f, g: Grid) -> float:
    """Squared discrete H1 seminorm, face quadrature."""
    return float(sum(np.sum(w * a * a)
                     for a, (_, _, _, w, _) in zip(face_gradients(f, g), g.operators)))


def lp_norm(f, p, g: Grid) -> float:
    f = np.abs(np.asarray(f, dtype=float))
    return float((np.sum(f ** p) * g.cell_volume) ** (1.0 / p))


def norms(f, g: Grid) -> dict:
    f = _check_field(f, g)
    out = {f"l{p}": lp_norm(f, p, g) for p in (2, 3, 4, 5)}
    out["grad_l2"] = math.sqrt(grad_sq(f, g))
    return out


def dissipation(c: Coefficients, s: State, g: Grid, M=None) -> float:
    """Face quadrature of ``(P^M grad u) . grad u``; equals ``-<div(P^M grad u), u>``."""
    total = 0.0
    gu = face_gradients(s.u, g)
    gv = face_gradients(s.v, g)
    for (_, _, _, w, _), (p11, p12, p21, p22), a, b in zip(
            g.operators, face_coefficients(c, s.u, s.v, g, M), gu, gv):
        total += np.sum(w * ((p11 * a + p12 * b) * a + (p21 * a + p22 * b) * b))
    return float(total)


def weighted_dissipation(c: Coefficients, s: State, g: Grid, M=None) -> float:
    """Face quadrature of ``(d0 + alpha (u + v)) (|grad u|^2 + |grad v|^2)``.

    The weight is the arithmetic face mean, with zero boundary state on
    Dirichlet faces; values are truncated to [0, M] when ``M`` is given.
    """
    _check_state(s, g)
    rep = require_solvable(c)
    u, v = s.u.ravel(), s.v.ravel()
    if M is not None:
        u, v = np.clip(u, 0.0, M), np.clip(v, 0.0, M)
    total = 0.0
    for (_, _, A, w, _), a, b in zip(g.operators, face_gradients(s.u, g),
                                     face_gradients(s.v, g)):
        weight = rep.d0 + rep.alpha * (A @ (u + v))
        total += np.sum(w * weight * (a * a + b * b))
    return float(total)


# snapshot files: header "nx ny hx hy bc", then nx rows of ny values


def format_float(x) -> str:
    return repr(float(x))


def write_snapshot(path, f, g: Grid):
    f = _check_field(f, g)
    lines = [" ".join([str(g.nx), str(g.ny), format_float(g.hx),
                       format_float(g.hy), g.bc])]
    for row in f:
        lines.append(" ".join(format_float(x) for x in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_snapshot(path):
    """Return ``(field, grid)``."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 5:
            raise ValidationError(f"{path}: header must be 'nx ny hx hy bc'")
        nx, ny = int(header[0]), int(header[1])
        g = Grid(1 if ny == 1 else 2, nx, ny, float(header[2]), float(header[3]), header[4])
        values = [float(x) for x in fh.read().split()]
    if len(values) != g.size:
        raise ValidationError(f"{path}: expected {g.size} values, found {len(values)}")
    return np.array(values).reshape(g.shape), g
