import numpy as np
import pytest

from skt import Coefficients, Grid, SchemeConfig, State, residual, run, step
from skt.errors import NonConvergence, ValidationError
from skt.grid import inner, lp_norm
from skt.stepper import _jacobian, _residual_vec

from conftest import random_admissible
from oracles import heat_step_dense, scalar_step


def test_scheme_config_defaults_and_validation():
    cfg = SchemeConfig(k=0.1)
    assert (cfg.M, cfg.solver, cfg.nonlinear_tol, cfg.max_iters) == (1e6, "picard", 1e-10, 100)
    assert cfg.linear_tol == pytest.approx(1e-11)
    for bad in (dict(k=0), dict(k=0.1, M=-1), dict(k=0.1, solver="cg"), dict(k=0.1, max_iters=0),
                dict(k=0.1, positivity_tol=-1.0), dict(k=float("inf"))):
        with pytest.raises(ValidationError):
            SchemeConfig(**bad)


def test_zero_residual_at_zero(unit_c, line, cfg):
    z = State.zeros(line)
    r1, r2 = residual(z, z, unit_c, line, cfg)
    assert not r1.any() and not r2.any()


def test_constant_residual_is_scalar_expression(unit_c, square, cfg):
    u, v, u0, v0 = 1.3, 0.4, 0.9, 0.7
    r1, r2 = residual(State.constant(square, u, v), State.constant(square, u0, v0),
                      unit_c, square, cfg)
    c, k = unit_c, cfg.k
    e1 = (u - u0) / k + (c.b1 * u + c.c1 * v) * u - c.a1 * u
    e2 = (v - v0) / k + (c.b2 * u + c.c2 * v) * v - c.a2 * v
    np.testing.assert_allclose(r1, e1, rtol=1e-13)
    np.testing.assert_allclose(r2, e2, rtol=1e-13)


def test_reaction_pairing_bound(rng, square, cfg):
    for _ in range(10):
        c = random_admissible(rng)
        s = State(rng.uniform(0, 5, square.shape), rng.uniform(0, 5, square.shape))
        q1 = (c.b1 * s.u + c.c1 * s.v) * s.u
        q2 = (c.b2 * s.u + c.c2 * s.v) * s.v
        lower = c.b1 * lp_norm(s.u, 3, square) ** 3 + c.c2 * lp_norm(s.v, 3, square) ** 3
        assert inner(q1, s.u, square) + inner(q2, s.v, square) >= lower - 1e-10


@pytest.mark.parametrize("solver", ["picard", "newton"])
def test_zero_stays_zero(unit_c, line, solver):
    new, rep = step(State.zeros(line), unit_c, line, SchemeConfig(k=0.1, solver=solver))
    assert not new.u.any() and not new.v.any()
    assert rep.converged and rep.final_residual == 0.0


@pytest.mark.parametrize("solver", ["picard", "newton"])
def test_constant_state_matches_scalar_oracle(rng, solver):
    g = Grid.unit_interval(6)
    for _ in range(5):
        c = random_admissible(rng)
        cfg = SchemeConfig(k=0.05, solver=solver, nonlinear_tol=1e-11)
        u0, v0 = rng.uniform(0, 3, 2)
        new, _ = step(State.constant(g, u0, v0), c, g, cfg)
        u, v = scalar_step(c, u0, v0, cfg.k)
        assert np.max(np.abs(new.u - u)) <= 10 * cfg.nonlinear_tol
        assert np.max(np.abs(new.v - v)) <= 10 * cfg.nonlinear_tol


@pytest.mark.parametrize("g", [Grid.unit_interval(12), Grid.unit_square(5, 6, "dirichlet")])
def test_heat_pair_matches_dense_solve(heat_c, g, rng):
    cfg = SchemeConfig(k=0.01)
    s0 = State(rng.random(g.shape), rng.random(g.shape))
    new, _ = step(s0, heat_c, g, cfg)
    assert np.max(np.abs(new.u - heat_step_dense(heat_c.d1, s0.u, cfg.k, g))) <= cfg.linear_tol
    assert np.max(np.abs(new.v - heat_step_dense(heat_c.d2, s0.v, cfg.k, g))) <= cfg.linear_tol


def test_picard_and_newton_agree(rng):
    g = Grid.unit_square(8, 8)
    c = random_admissible(rng)
    s0 = State(rng.uniform(0, 3, g.shape), rng.uniform(0, 3, g.shape))
    a, ra = step(s0, c, g, SchemeConfig(k=0.05, solver="picard", nonlinear_tol=1e-11))
    b, rb = step(s0, c, g, SchemeConfig(k=0.05, solver="newton", nonlinear_tol=1e-11))
    assert np.max(np.abs(a.u - b.u)) < 1e-9 and np.max(np.abs(a.v - b.v)) < 1e-9
    assert rb.iterations <= ra.iterations


def test_newton_jacobian_finite_differences(rng):
    g = Grid.unit_square(4, 5, "dirichlet")
    c = random_admissible(rng)
    cfg = SchemeConfig(k=0.1, M=2.0)
    x = rng.uniform(0.1, 1.9, 2 * g.size)
    x0 = rng.random(2 * g.size)
    J = _jacobian(x, c, g, cfg).toarray()
    d = rng.normal(size=x.size)
    errs = []
    for h in (1e-3, 1e-4):
        fd = (_residual_vec(x + h * d, x0, c, g, cfg) - _residual_vec(x - h * d, x0, c, g, cfg)) / (2 * h)
        errs.append(np.linalg.norm(fd - J @ d) / np.linalg.norm(J @ d))
    assert max(errs) < 1e-6


def test_non_convergence_carries_report(unit_c, rng):
    g = Grid.unit_interval(16)
    s0 = State(rng.uniform(0, 5, g.shape), rng.uniform(0, 5, g.shape))
    with pytest.raises(NonConvergence) as info:
        step(s0, unit_c, g, SchemeConfig(k=0.5, max_iters=1))
    assert info.value.report is not None and not info.value.report.converged
    with pytest.raises(NonConvergence) as info:
        run(s0, 1.0, unit_c, g, SchemeConfig(k=0.5, max_iters=1))
    assert info.value.step == 1 and len(info.value.trajectory.states) == 1


def test_step_rejects_bad_input(unit_c, line):
    bad = Coefficients(d1=1, d2=1, a11=1, a12=2, a21=1, a22=1)
    z = State.zeros(line)
    with pytest.raises(ValidationError):
        step(z, bad, line, SchemeConfig(k=0.1))
    neg = State(np.full(line.shape, -1e-3), line.zeros())
    with pytest.raises(ValidationError):
        step(neg, unit_c, line, SchemeConfig(k=0.1))
    with pytest.raises(ValidationError):
        step(State.zeros(Grid.unit_interval(5)), unit_c, line, SchemeConfig(k=0.1))


def test_run_from_zero(unit_c, line):
    cfg = SchemeConfig(k=0.1)
    traj = run(State.zeros(line), 3 * cfg.k, unit_c, line, cfg)
    assert len(traj.states) == 4 and len(traj.reports) == 3
    np.testing.assert_allclose(traj.times, [0.0, 0.1, 0.2, 0.3])
    np.testing.assert_allclose(np.diff(traj.times), cfg.k)
    assert all(not s.u.any() and not s.v.any() for s in traj.states)


def test_positivity_and_energy_slack(rng):
    for g in (Grid.unit_interval(32), Grid.unit_square(10, 10, "dirichlet")):
        for _ in range(3):
            c = random_admissible(rng)
            s0 = State(rng.uniform(0, 4, g.shape) * (rng.random(g.shape) < 0.5),
                       rng.uniform(0, 4, g.shape))
            cfg = SchemeConfig(k=0.05)
            traj = run(s0, 0.5, c, g, cfg)
            for r in traj.reports:
                assert min(r.min_u, r.min_v) >= -cfg.positivity_tol
                assert r.energy_slack >= -10 * cfg.nonlinear_tol
            assert traj.clamp_mass <= 1e-8


def test_truncation_inactive(rng):
    g = Grid.unit_interval(32)
    c = random_admissible(rng)
    s0 = State(rng.uniform(0, 10, g.shape), rng.uniform(0, 10, g.shape))
    a = run(s0, 0.3, c, g, SchemeConfig(k=0.05, M=1e3))
    b = run(s0, 0.3, c, g, SchemeConfig(k=0.05, M=1e6))
    for x, y in zip(a.states, b.states):
        assert np.max(np.abs(x.u - y.u)) <= 1e-9 and np.max(np.abs(x.v - y.v)) <= 1e-9


def test_truncation_active_changes_solution(unit_c, rng):
    g = Grid.unit_interval(16)
    s0 = State(rng.uniform(0, 3, g.shape), rng.uniform(0, 3, g.shape))
    a, _ = step(s0, unit_c, g, SchemeConfig(k=0.05, M=0.5))
    b, _ = step(s0, unit_c, g, SchemeConfig(k=0.05, M=1e6))
    assert np.max(np.abs(a.u - b.u)) > 1e-3


def test_time_refinement_first_order():
    g = Grid.unit_interval(32)
    x = g.centres()[0]
    c = Coefficients(d1=0.5, d2=0.4, a11=0.3, a12=0.2, a21=0.2, a22=0.3,
                     b1=1, b2=0.3, c1=0.3, c2=1, a1=1, a2=0.5)
    s0 = State(1 + 0.5 * np.cos(np.pi * x), 1 + 0.5 * np.cos(2 * np.pi * x))
    ends = [run(s0, 0.4, c, g, SchemeConfig(k=k, nonlinear_tol=1e-12)).states[-1]
            for k in (0.1, 0.05, 0.025)]
    d1 = np.linalg.norm(ends[0].u - ends[1].u)
    d2 = np.linalg.norm(ends[1].u - ends[2].u)
    assert np.log2(d1 / d2) >= 0.8


def test_determinism(rng):
    g = Grid.unit_square(6, 6)
    c = random_admissible(rng)
    s0 = State(rng.random(g.shape), rng.random(g.shape))
    cfg = SchemeConfig(k=0.05)
    a = run(s0, 0.2, c, g, cfg)
    b = run(s0, 0.2, c, g, cfg)
    for x, y in zip(a.states, b.states):
        assert np.array_equal(x.u, y.u) and np.array_equal(x.v, y.v)
