from __future__ import annotations

import math

import numpy as np
import pytest

from switchcell.oracle import SolverError, energy_audit, integrate_dpt
from switchcell.trace import WaveformTrace, energies_from_trace
from switchcell.validation import compare_edge


@pytest.fixture(scope="module")
def turn_on_run(profile):
    return integrate_dpt(profile, 400.0, 15.0, [(0.0, -5.0), (10e-9, 20.0)], 2.5e-11, 300e-9)


def ring_frequency(t, x):
    s = np.nonzero(np.diff(np.sign(x)))[0]
    tc = t[s] - x[s] * (t[s + 1] - t[s]) / (x[s + 1] - x[s])
    return 1.0 / (2.0 * np.mean(np.diff(tc[:6])))


def test_quiescent_off_state(profile):
    tr = integrate_dpt(profile, 400.0, 15.0, [(0.0, -5.0)], 1e-10, 50e-9).trace
    np.testing.assert_allclose(tr.i_d, 0.0, atol=1e-12)
    np.testing.assert_allclose(tr.v_ds, 401.3, rtol=1e-12)
    np.testing.assert_allclose(tr.i_f, 15.0, rtol=1e-12)


def test_quiescent_on_state(profile):
    tr = integrate_dpt(profile, 400.0, 15.0, [(0.0, 20.0)], 1e-10, 50e-9).trace
    np.testing.assert_allclose(tr.i_d, 15.0, rtol=1e-9)
    np.testing.assert_allclose(tr.v_ds, 1.2, rtol=1e-9)


def test_turn_on_overshoot_and_ring(turn_on_run):
    tr = turn_on_run.trace
    k = int(np.argmax(tr.i_d))
    assert tr.i_d[k] > 15.0
    f = ring_frequency(tr.t[k:], tr.i_d[k:] - 15.0)
    assert f == pytest.approx(1.0 / (2 * math.pi * math.sqrt(150e-9 * 87e-12)), rel=0.02)


def test_kcl_and_newton(turn_on_run):
    assert turn_on_run.kcl_residual_max < 1e-3 * 15.0
    assert turn_on_run.newton_failures == 0
    np.testing.assert_allclose(turn_on_run.trace.i_d + turn_on_run.trace.i_f, 15.0, atol=1e-9)


def test_energy_audit_closes(turn_on_run):
    audit = energy_audit(turn_on_run.trace, 400.0, 15.0, 150e-9, (10e-9, 150e-9))
    assert audit["closure"] < 0.01


def test_dt_too_coarse(profile):
    with pytest.raises(ValueError, match="coarse"):
        integrate_dpt(profile, 400.0, 15.0, [(0.0, -5.0)], 1e-8, 1e-7)


def test_trace_energy_rectangle():
    t = np.linspace(0.0, 1e-6, 11)
    one = np.ones_like(t)
    tr = WaveformTrace(t, one, one, one, one, 0 * one)
    e_mos, e_sbd = energies_from_trace(tr, (0.0, 1e-6))
    assert e_mos == pytest.approx(1e-6, rel=1e-12)
    assert e_sbd == 0.0


def test_trace_energy_zero_current():
    t = np.linspace(0.0, 1e-6, 11)
    z = np.zeros_like(t)
    tr = WaveformTrace(t, z + 5.0, z + 400.0, z, z - 400.0, z)
    assert energies_from_trace(tr, (0.0, 1e-6)) == (0.0, 0.0)


def test_trace_energy_window_interpolates():
    t = np.linspace(0.0, 1.0, 3)
    one = np.ones_like(t)
    tr = WaveformTrace(t, one, t, one, one, 0 * one)
    assert energies_from_trace(tr, (0.25, 0.75))[0] == pytest.approx(0.25, rel=1e-12)


def test_trace_energy_converges(turn_on_run, profile):
    coarse = integrate_dpt(profile, 400.0, 15.0, [(0.0, -5.0), (10e-9, 20.0)], 5e-11, 300e-9)
    w = (10e-9, 150e-9)
    e1 = energies_from_trace(coarse.trace, w)[0]
    e2 = energies_from_trace(turn_on_run.trace, w)[0]
    assert abs(e1 - e2) / e2 < 0.002


def test_compare_edge_windows(profile, op15):
    cmp = compare_edge(profile, op15, "off", dt=1e-10)
    assert cmp.window == (10e-9, cmp.engine.t_end)
    assert cmp.e_engine == cmp.engine.e_off_mos
    with pytest.raises(ValueError):
        compare_edge(profile, op15, "both")


def test_solver_error_is_runtime_error():
    assert issubclass(SolverError, RuntimeError)
