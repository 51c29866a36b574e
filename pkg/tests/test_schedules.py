import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tricrit.errors import ConfigError, PhaseError, RangeError, UnsupportedCombo
from tricrit.models import AqrmParams, JcmParams, classify_phase, PhaseLabel
from tricrit.schedules import (BoundaryLine, JcmLine, Parabola, PowerCurve, RampSpec, Scaling, StraightLine,
                               build_schedule, evolution_grid, gap_asymptote, path_from_dict, path_to_dict,
                               predict, ramp_rate)

from conftest import OMEGA, W

BASE = AqrmParams(OMEGA, W)
JBASE = JcmParams(2.5e5, 0.25)


def test_path_points():
    assert StraightLine(2).point(BASE, 0.5).g1 == 0
    assert Parabola(2).couplings(0.1)[0] == pytest.approx(0.64)
    p = BoundaryLine(-1).point(BASE, 0.25)
    assert p.s2 == pytest.approx(0.25)


def test_path_validation():
    with pytest.raises(ConfigError):
        StraightLine(1.0)
    with pytest.raises(PhaseError):
        PowerCurve(2, 1.0)
    with pytest.raises(ConfigError):
        BoundaryLine(1.0)
    with pytest.raises(ConfigError):
        JcmLine(3, 0.4)
    with pytest.raises(ConfigError):
        path_from_dict({"variant": "Spiral"})
    with pytest.raises(RangeError):
        build_schedule(StraightLine(2), RampSpec(1e-3), BASE, s_end=0.7)
    with pytest.raises(ConfigError):
        RampSpec(0.5)


def test_path_roundtrip():
    for p in (StraightLine(2.0), PowerCurve(2.0, 0.5), BoundaryLine(-3.0), JcmLine(3.0, 1.0)):
        assert path_from_dict(path_to_dict(p)) == p


@given(st.floats(1.1, 4), st.floats(1e-6, 0.999))
def test_straight_line_stays_in_np(k, frac):
    u = frac / k
    assert classify_phase(StraightLine(k).point(BASE, u)) is PhaseLabel.NP


def test_ramp_rate_straight_line():
    path, ramp = StraightLine(2), RampSpec(1e-3)
    v = float(ramp_rate(path, ramp, BASE, 0.01))
    assert v == pytest.approx(2e-3 / 2 * float(path.gap(BASE, 0.01)), rel=1e-14)
    asym = 4 * 1e-3 * W / 2 * math.sqrt(3) * 0.01
    assert asym == pytest.approx(8.66e-6, rel=1e-3)
    assert v == pytest.approx(asym, rel=0.01)


def test_ramp_rate_boundary_start_and_jcm():
    v0 = float(ramp_rate(BoundaryLine(-1), RampSpec(1e-3, "GapCubic"), BASE, 0.0))
    assert v0 == pytest.approx(1e-3 * 2 * W / 4, rel=1e-12)
    path = JcmLine(3, 1.0)
    v = float(ramp_rate(path, RampSpec(1e-3), JBASE, 0.01))
    assert v == pytest.approx(1e-3 * float(path.gap(JBASE, 0.01)))
    assert v == pytest.approx(1e-3 * 0.25 * math.sqrt(8) * 0.01, rel=0.05)


def test_unsupported_combo():
    with pytest.raises(UnsupportedCombo):
        ramp_rate(BoundaryLine(-1), RampSpec(1e-3), BASE, 0.1)
    with pytest.raises(UnsupportedCombo):
        predict(Parabola(2), RampSpec(1e-3, "GapQuadratic"), BASE)


def test_schedule_time_fig2():
    s = build_schedule(StraightLine(2), RampSpec(1e-3), BASE)
    asym = 1 / (4e-3 * W) / math.sqrt(0.75)
    assert asym == pytest.approx(1154.7, abs=0.05)
    assert s.T == pytest.approx(asym * math.log(1000), rel=0.10)
    assert s.certificate["T_rel_change"] < 1e-6
    assert np.all(np.diff(s.t) > 0) and np.all(np.diff(s.u) < 0)
    assert np.max(np.abs(np.diff(s.gap)) / s.gap[1:]) <= 0.02 + 1e-12


def test_empty_schedule():
    s = build_schedule(StraightLine(2), RampSpec(1e-3), BASE, 0.1, 0.1)
    assert s.T == 0 and s.empty


def test_asymptotic_consistency():
    path, ramp = StraightLine(2), RampSpec(1e-3)
    aT = 1 / (4e-3 * W) / math.sqrt(0.75)
    r = []
    for end in (1e-3, 1e-5, 1e-7):
        s = build_schedule(path, ramp, BASE, s_end=end)
        r.append(s.T / (aT * math.log(1 / end)))
    assert abs(r[2] - 1) < abs(r[1] - 1) < abs(r[0] - 1)
    assert abs(r[2] - 1) < 0.01


def test_schedule_interpolation():
    s = build_schedule(StraightLine(2), RampSpec(1e-3), BASE)
    assert float(s.u_at(0.0)) == pytest.approx(0.5)
    assert float(s.u_at(s.T)) == pytest.approx(1e-3, rel=1e-9)
    assert s.params_at(0.3 * s.T, omega=0.3).g1 == pytest.approx(s.params_at(0.3 * s.T).g1)


def test_evolution_grid_rules():
    s = build_schedule(StraightLine(2), RampSpec(1e-2), BASE, s_end=0.1)
    g = evolution_grid(s)
    mid = 0.5 * (g[1:] + g[:-1])
    u = s.u_at(mid)
    dt = np.diff(g)
    assert np.max(ramp_rate(s.path, s.ramp, BASE, u) * dt) <= 1.1e-3
    assert np.max(s.path.gap(BASE, u) * dt) <= 0.11


def test_predict_straight_line():
    pr = predict(StraightLine(2), RampSpec(1e-3), BASE)
    assert pr.scaling is Scaling.ExpSuperHS
    assert pr.coefficients["b"] == pytest.approx(1.732e-3, rel=1e-3)
    assert pr.N_final == pytest.approx(0.077350, abs=1e-6)
    assert pr.coefficients["c2_sq_asymptote"] == pytest.approx(7.8125e-9)


def test_predict_boundary_and_others():
    pr = predict(BoundaryLine(-1), RampSpec(1e-3, "GapCubic"), BASE)
    assert pr.coefficients["F_prefactor"] == pytest.approx(7.8125e-15)
    assert pr.coefficients["a_T"] == pytest.approx(2828.4, rel=1e-4)
    assert predict(StraightLine(2), RampSpec(1e-3, "GapQuadratic"), BASE).scaling is Scaling.Heisenberg
    assert predict(PowerCurve(2, 2 / 3), RampSpec(1e-3), BASE).coefficients["p"] == pytest.approx(1.0)
    assert predict(JcmLine(3), RampSpec(1e-3), JBASE).coefficients["b"] == pytest.approx(1.414e-3, rel=1e-3)


@pytest.mark.parametrize("path,ramp,base", [
    (StraightLine(2), RampSpec(1e-3), BASE),
    (StraightLine(2), RampSpec(1e-3, "GapQuadratic"), BASE),
    (Parabola(2), RampSpec(1e-3), BASE),
    (PowerCurve(2, 2 / 3), RampSpec(1e-3), BASE),
    (BoundaryLine(-1), RampSpec(1e-3, "GapCubic"), BASE),
    (JcmLine(3), RampSpec(1e-3), JBASE)])
def test_excitation_budget(path, ramp, base):
    assert predict(path, ramp, base).c2_sq < ramp.delta ** 2


@pytest.mark.parametrize("path,base", [(StraightLine(2), BASE), (Parabola(2), BASE), (PowerCurve(2, 0.6), BASE),
                                       (BoundaryLine(-2), BASE), (JcmLine(3), JBASE)])
def test_gap_asymptote(path, base):
    u = path.u_from_distance(1e-6)
    assert float(gap_asymptote(path, base, u)) == pytest.approx(float(path.gap(base, u)), rel=1e-2)
