import math

import numpy as np
import pytest

from skt import (AbsorbingBall, Coefficients, Grid, SchemeConfig, State, absorbing_constants,
                 check_envelope, ensemble, entry_time)
from skt.attractor import envelope, hull, random_state, write_summary_csv
from skt.errors import UnboundedReaction, ValidationError


def _c(**kw):
    base = dict(d1=1, d2=1, a11=1, a12=1, a21=1, a22=1, b1=1, c2=1)
    base.update(kw)
    return Coefficients(**base)


def test_alpha2_example():
    ball = absorbing_constants(_c(), 1.0)
    sigma = np.arange(0, 10, 1e-5)
    brute = 2 * np.max(sigma ** 2 - 2 * sigma ** 3)
    assert ball.alpha1 == 1.0
    assert ball.alpha2 == pytest.approx(2 / 27, rel=1e-15)
    assert ball.alpha2 == pytest.approx(brute, rel=1e-6)
    assert ball.radius_sq == ball.alpha2 / ball.alpha1


def test_alpha2_brute_force(rng):
    sigma = np.arange(0, 20, 1e-5)
    for _ in range(5):
        a1, a2, b1, c2 = rng.uniform(0.2, 2, 4)
        ball = absorbing_constants(_c(a1=a1, a2=a2, b1=b1, c2=c2), 1.0)
        brute = (np.max((2 * a1 + 1) * sigma ** 2 - 2 * b1 * sigma ** 3)
                 + np.max((2 * a2 + 1) * sigma ** 2 - 2 * c2 * sigma ** 3))
        assert ball.alpha2 == pytest.approx(brute, rel=1e-6)
        d = ball.derivation
        assert d["sup_u"] + d["sup_v"] == pytest.approx(ball.alpha2)


def test_volume_scaling():
    a, b = absorbing_constants(_c(a1=1), 1.0), absorbing_constants(_c(a1=1), 2.0)
    assert b.alpha2 == 2 * a.alpha2 and b.alpha1 == a.alpha1


def test_unbounded_reaction():
    with pytest.raises(UnboundedReaction):
        absorbing_constants(_c(b1=0), 1.0)
    with pytest.raises(UnboundedReaction):
        absorbing_constants(_c(c2=0), 1.0)


def test_check_envelope_examples():
    ball = AbsorbingBall(1.0, 2.0, 2.0)
    assert check_envelope(np.zeros(20), 0.1, ball, 0.0) == 0
    assert check_envelope(np.full(20, 2.0), 0.1, ball, 2.0) == 0
    Y = envelope(0.1 * np.arange(20), 10.0, ball)
    assert check_envelope(Y * 1.04, 0.1, ball, 10.0) == 0
    assert check_envelope(Y * 1.06, 0.1, ball, 10.0) == 20


def test_entry_time():
    ball = AbsorbingBall(1.0, 3.0, 3.0)
    r, R = 2.0, 3.0
    assert entry_time(r * R, ball, r) == 0.0
    assert entry_time(0.5, ball, r) == 0.0
    assert entry_time(math.e * (r - 1) * R + R, ball, r) == pytest.approx(1.0, rel=1e-15)
    # the envelope reaches r R exactly at the entry time
    t = entry_time(50.0, ball, r)
    assert float(envelope(t, 50.0, ball)) == pytest.approx(r * R, rel=1e-14)
    ts = [entry_time(y, ball, r) for y in np.linspace(0, 100, 50)]
    assert all(np.diff(ts) >= 0)
    with pytest.raises(ValidationError):
        entry_time(10.0, ball, 1.0)


def test_zero_ensemble():
    g = Grid.unit_interval(8)
    res = ensemble([State.zeros(g)], 0.3, _c(a1=1), g, SchemeConfig(k=0.1))
    m = res.members[0]
    assert m.entry_time_predicted == 0.0 and m.entry_time_observed == 0.0
    assert res.hull_sup == 0.0 and m.violations == 0 and not m.Y.any()


def test_identical_members_and_hull_nesting(tmp_path):
    g = Grid.unit_interval(16)
    c = _c(a1=1, a2=1)
    cfg = SchemeConfig(k=0.05)
    inits = [random_state(g, 3.0, s) for s in (1, 1, 2, 3)]
    res = ensemble(inits, 1.0, c, g, cfg, seeds=[1, 1, 2, 3])
    a, b = res.members[:2]
    assert np.array_equal(a.Y, b.Y) and a.final_Y == b.final_Y
    sub = hull(res.members[2:])[0]
    assert sub <= res.hull_sup
    assert res.total_violations == 0
    for m in res.members:
        # uniform boundedness
        assert np.all(m.Y <= (m.Y0 + res.ball.radius_sq) * 1.05)
    write_summary_csv(tmp_path / "e.csv", res)
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "seed,Y0,entry_time_predicted,entry_time_observed,violations,final_Y"
    assert len(lines) == 5


def test_parallel_matches_serial():
    g = Grid.unit_interval(12)
    c = _c(a1=1, a2=1)
    cfg = SchemeConfig(k=0.1)
    inits = [random_state(g, 2.0, s) for s in range(3)]
    a = ensemble(inits, 0.5, c, g, cfg, max_workers=2)
    b = ensemble(inits, 0.5, c, g, cfg)
    for x, y in zip(a.members, b.members):
        assert np.array_equal(x.Y, y.Y)
    assert np.array_equal(a.hull_u, b.hull_u)


def test_failed_member_does_not_abort():
    g = Grid.unit_interval(12)
    c = _c(a1=1, a2=1)
    cfg = SchemeConfig(k=0.5, max_iters=1)
    res = ensemble([random_state(g, 5.0, 0), State.zeros(g)], 1.0, c, g, cfg)
    assert res.members[0].error is not None
    assert res.members[1].error is None
