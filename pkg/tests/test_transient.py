from __future__ import annotations

import math

import numpy as np
import pytest

from switchcell.device import CircuitParams, DeviceSet, PiecewiseCapacitance, SbdParams
from switchcell.trace import energies_from_trace
from switchcell.transient import (
    OperatingPoint,
    ResolutionError,
    StagePlanError,
    conduction_loss,
    cubic_bridge,
    oscillation_params,
    sample_trace,
    simulate_cycle,
    simulate_turn_off,
    simulate_turn_on,
    stitch_errors,
    turn_off_stage_plan,
    turn_on_stage_plan,
)
from switchcell.waveforms import Constant, Cubic, DampedCosine, describe

R_C = 10.0 * 2.571e-9


def hermite(coeffs, t):
    a, b, c, d = coeffs
    return a * t**3 + b * t**2 + c * t + d


def test_gate_charge_delay_turn_on(profile, op15):
    d1 = turn_on_stage_plan(profile, op15).durations["on-1"]
    assert d1 == pytest.approx(R_C * math.log(25.0 / 14.1), rel=1e-12)
    assert d1 == pytest.approx(14.7e-9, rel=0.005)


def test_gate_discharge_delay_turn_off(profile, op15):
    plan = turn_off_stage_plan(profile, op15)
    v_m = plan.markers["v_miller"]
    assert plan.durations["off-1"] == pytest.approx(R_C * math.log(25.0 / (v_m + 5.0)), rel=1e-12)


def test_gate_delay_vanishes_when_drive_starts_at_threshold(profile, op15):
    ds = profile.with_drive(v_ee=5.9 - 1e-9)
    assert turn_on_stage_plan(ds, op15).durations["on-1"] < 1e-15


def test_overshoot_positive_at_tiny_load(profile):
    plan = turn_on_stage_plan(profile, OperatingPoint(400.0, 0.01))
    assert plan.markers["i_peak"] > 0.01


def test_no_diode_capacitance_keeps_full_current(profile, op15):
    ds = DeviceSet(profile.mosfet, SbdParams(1.3, PiecewiseCapacitance.constant(1e-21)), profile.drive,
                   CircuitParams(profile.circuit.l_p, 0.0))
    assert turn_off_stage_plan(ds, op15).markers["i_t4"] == pytest.approx(15.0, rel=1e-9)


def test_no_inductance_no_overshoot(profile, op15):
    ds = profile.with_mosfet(l_d=0.0, l_s=0.0).with_circuit(l_p=0.0)
    assert turn_off_stage_plan(ds, op15).markers["v_peak"] == pytest.approx(401.3, rel=1e-12)


def test_marker_order(profile, op15):
    m = turn_on_stage_plan(profile, op15).markers
    assert m["v_th"] < m["v_gs_t3"] < m["v_miller"] < m["v_gs_peak"] < profile.drive.v_cc
    assert 0 < m["v_ds0"] < 401.3
    assert m["i_peak"] > 15.0
    mo = turn_off_stage_plan(profile, op15).markers
    assert mo["v_th"] <= mo["v_gs_t6"] <= mo["v_gs_t4"] <= mo["v_miller"]
    assert 0 < mo["i_t4"] <= 15.0 and mo["v_peak"] > 401.3


def test_plan_rejects_overload(profile):
    with pytest.raises(StagePlanError):
        turn_on_stage_plan(profile, OperatingPoint(400.0, 2000.0))


def test_operating_point_invariants():
    with pytest.raises(ValueError):
        OperatingPoint(-1.0, 15.0)
    with pytest.raises(ValueError):
        OperatingPoint(400.0, -15.0)


def test_cubic_flat():
    assert cubic_bridge(0.0, 2.0, 3.0, 3.0, 0.0, 0.0) == (0.0, 0.0, 0.0, 3.0)


def test_cubic_endpoint_slope_matches_next_line():
    s1 = 7.5 / 4e-9
    a, b, c, d = cubic_bridge(1e-9, 6e-9, 0.0, 7.5, 0.0, s1)
    h = 5e-9
    assert hermite((a, b, c, d), 0.0) == 0.0 and c == 0.0
    assert hermite((a, b, c, d), h) == pytest.approx(7.5, rel=1e-12)
    assert 3 * a * h * h + 2 * b * h + c == pytest.approx(s1, rel=1e-12)


def test_cubic_midpoint_symmetry():
    coeffs = cubic_bridge(0.0, 1.0, 2.0, 10.0, 0.0, 0.0)
    assert hermite(coeffs, 0.5) == pytest.approx(6.0, rel=1e-14)


def test_cubic_rejects_empty_interval():
    with pytest.raises(ValueError):
        cubic_bridge(1.0, 1.0, 0.0, 1.0, 0.0, 0.0)


def test_ring_frequency_example(profile, op15):
    osc = oscillation_params(profile, op15, "on")
    assert osc.omega == pytest.approx(1.0 / math.sqrt(150e-9 * 87e-12), rel=1e-12)
    assert osc.omega == pytest.approx(2.77e8, rel=0.002)


def test_ring_scaling_with_inductance(profile, op15):
    base = oscillation_params(profile, op15, "on")
    m = profile.mosfet
    ds = profile.with_mosfet(l_d=2 * m.l_d, l_s=2 * m.l_s).with_circuit(l_p=2 * profile.circuit.l_p)
    dbl = oscillation_params(ds, op15, "on", plan=turn_on_stage_plan(profile, op15))
    assert dbl.omega == pytest.approx(base.omega / math.sqrt(2.0), rel=1e-12)
    assert dbl.alpha == pytest.approx(base.alpha / 2.0, rel=1e-12)


def test_zero_amplitude_ring_is_flat():
    ring = DampedCosine(15.0, 0.0, 2.7e5, 2.8e8)
    t = np.linspace(0.0, 1e-7, 50)
    assert np.all(ring(t) == 15.0)


def test_stage_one_energies(profile, op15):
    on = simulate_turn_on(profile, op15)
    s = on.stage("on-1")
    assert s.e_mos == 0.0
    assert s.e_sbd == pytest.approx(15.0 * 1.3 * s.duration, rel=1e-9)
    off = simulate_turn_off(profile, op15)
    s = off.stage("off-1")
    assert s.e_mos == pytest.approx(15.0 * 1.2 * s.duration, rel=1e-9)
    assert s.e_sbd == 0.0


def test_current_rise_energy_vanishes_with_load(profile):
    hi = simulate_turn_on(profile, OperatingPoint(400.0, 15.0))
    lo = simulate_turn_on(profile, OperatingPoint(400.0, 1e-3))
    for label in ("on-2", "on-3"):
        assert lo.stage(label).e_mos < 1e-3 * hi.stage(label).e_mos


def test_total_is_sum_of_stages(profile, op15):
    on = simulate_turn_on(profile, op15)
    assert on.e_on_mos == pytest.approx(sum(s.e_mos for s in on.stages), rel=1e-14)
    off = simulate_turn_off(profile, op15)
    assert off.e_off_mos == pytest.approx(sum(s.e_mos for s in off.stages), rel=1e-14)


def test_stage_energy_crosschecks(profile, op15):
    for res in (simulate_turn_on(profile, op15), simulate_turn_off(profile, op15)):
        for label, pairs in res.crosschecks.items():
            for e_num, e_ref in zip(pairs[::2], pairs[1::2]):
                assert e_num == pytest.approx(e_ref, rel=1e-6, abs=1e-15), label


def test_stage_labels_and_time_continuity(profile, op15):
    on = simulate_turn_on(profile, op15, t0=5e-9)
    assert [s.label for s in on.stages] == [f"on-{k}" for k in range(1, 8)]
    assert on.t_start == 5e-9
    for a, b in zip(on.stages, on.stages[1:]):
        assert a.t_end == b.t_start


def test_kirchhoff_complement(profile, op15):
    for res in (simulate_turn_on(profile, op15), simulate_turn_off(profile, op15)):
        tr = sample_trace(res, 1e-10)
        np.testing.assert_allclose(tr.i_f + tr.i_d, 15.0, rtol=0, atol=1e-12)


def test_waveform_continuity(profile, op15):
    for res in (simulate_turn_on(profile, op15), simulate_turn_off(profile, op15)):
        assert max(stitch_errors(res).values()) <= 1e-6


def test_conduction_loss(profile):
    assert conduction_loss(profile, 15.0, 0.5)[0] == pytest.approx(9.0, rel=1e-12)
    assert conduction_loss(profile, 15.0, 1.0)[1] == 0.0
    assert conduction_loss(profile, 0.0, 0.4) == (0.0, 0.0)


def test_sampled_endpoints_are_exact(profile, op15):
    res = simulate_turn_on(profile, op15)
    tr = sample_trace(res, 1e-10)
    first = res.stages[0].evaluate(res.t_start)
    last = res.stages[-1].evaluate(res.t_end)
    assert tr.t[0] == res.t_start and tr.t[-1] == res.t_end
    assert tr.v_ds[0] == first["v_ds"] and tr.i_d[-1] == last["i_d"]


def test_constant_stage_sampling(profile, op15):
    res = simulate_turn_on(profile, op15)
    s = res.stage("on-1")
    assert isinstance(s.v_ds, Constant)
    t = np.linspace(s.t_start, s.t_end, 17)
    assert np.all(s.evaluate(t)["v_ds"] == s.v_ds.value(0.0))


def test_sampling_convergence(profile, op15):
    res = simulate_turn_off(profile, op15)
    win = (res.t_start, res.t_end)
    e1 = energies_from_trace(sample_trace(res, 2e-11), win)[0]
    e2 = energies_from_trace(sample_trace(res, 1e-11), win)[0]
    assert abs(e1 - e2) / abs(e2) < 1e-3
    assert e2 == pytest.approx(res.e_off_mos, rel=1e-3)


def test_sampling_too_coarse(profile, op15):
    with pytest.raises(ResolutionError):
        sample_trace(simulate_turn_on(profile, op15), 1e-7)


def test_cycle_contains_both_edges(profile, op15):
    cyc = simulate_cycle(profile, op15)
    on, off = simulate_turn_on(profile, op15), simulate_turn_off(profile, op15)
    assert cyc.e_on_mos == pytest.approx(on.e_on_mos, rel=1e-12)
    assert cyc.e_off_mos == pytest.approx(off.e_off_mos, rel=1e-12)


def test_hot_junction_changes_result(profile, op15):
    from switchcell.device import TempCoeffs

    ds = profile.with_mosfet(temp_coeffs=TempCoeffs(a=-0.006))
    cold = simulate_turn_on(ds, op15)
    hot = simulate_turn_on(ds, OperatingPoint(400.0, 15.0, 398.15))
    assert hot.markers["v_th"] < cold.markers["v_th"]


def test_waveform_description():
    assert describe(Cubic(1.0, 0.0, 0.0, 0.0))["kind"] == "cubic"
    assert describe(DampedCosine(1.0, 2.0, 0.0, 1.0))["amplitude"] == 2.0
