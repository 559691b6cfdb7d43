from __future__ import annotations

import numpy as np
import pytest

from switchcell.config import load_profile
from switchcell.device import (
    CircuitParams,
    DeviceSet,
    GateDrive,
    MosfetParams,
    PiecewiseCapacitance,
    SbdParams,
)
from switchcell.transient import OperatingPoint

PF, NF, NH = 1e-12, 1e-9, 1e-9


@pytest.fixture(scope="session")
def profile() -> DeviceSet:
    return load_profile("cmf20120d")


@pytest.fixture
def op15() -> OperatingPoint:
    return OperatingPoint(400.0, 15.0)


def with_total_rg(dset: DeviceSet, r_total: float) -> DeviceSet:
    return dset.with_drive(r_g_ext=r_total - dset.drive.r_g_int)


def random_device_set(rng: np.random.Generator) -> tuple[DeviceSet, OperatingPoint]:
    """A physically sensible parameter set scattered around the bundled profile."""
    s = lambda lo, hi: float(np.exp(rng.uniform(np.log(lo), np.log(hi))))  # noqa: E731
    b1 = rng.uniform(10.0, 40.0)
    bps = (b1, b1 + rng.uniform(30.0, 120.0))
    c_gd = sorted((s(300, 900) * PF, s(10, 30) * PF, s(5, 10) * PF), reverse=True)
    c_ds = sorted((s(0.8, 2.0) * NF, s(100, 200) * PF, s(50, 100) * PF), reverse=True)
    c_f = sorted((s(0.6, 2.0) * NF, s(60, 120) * PF, s(30, 60) * PF), reverse=True)
    mos = MosfetParams.from_linearized(
        s(3.0, 8.0), rng.uniform(4.5, 6.5), 15.0, r_ds_on=s(0.04, 0.15), c_gs=s(1.0, 3.0) * NF,
        c_gd=PiecewiseCapacitance(tuple(c_gd), bps), c_ds=PiecewiseCapacitance(tuple(c_ds), bps),
        l_d=s(20, 200) * NH, l_s=s(1, 10) * NH)
    sbd = SbdParams(rng.uniform(0.8, 1.8), PiecewiseCapacitance(tuple(c_f), bps), 5 * NH)
    drive = GateDrive(rng.uniform(18.0, 22.0), rng.uniform(-6.0, -2.0), 5.0, s(0.5, 20.0), s(1e-3, 50) * PF)
    circuit = CircuitParams(s(2, 20) * NH, s(10, 50) * PF)
    op = OperatingPoint(rng.uniform(250.0, 800.0), rng.uniform(3.0, 25.0))
    return DeviceSet(mos, sbd, drive, circuit), op


def property_violations(dset: DeviceSet, op: OperatingPoint, rng: np.random.Generator) -> list[str]:
    """Check the engine and fitting invariants on one parameter set; empty list means all hold."""
    from switchcell.extraction import CurveSamples, fit_transfer_curve, segment_capacitance_curve
    from switchcell.transient import (
        cubic_bridge,
        sample_trace,
        simulate_turn_off,
        simulate_turn_on,
        stitch_errors,
    )

    bad = []
    on, off = simulate_turn_on(dset, op), simulate_turn_off(dset, op)
    for res in (on, off):
        worst = max(stitch_errors(res).values())
        if worst > 1e-6:
            bad.append(f"{res.metadata['edge']}: knot mismatch {worst:.3g}")
        tr = sample_trace(res, min(s.duration for s in res.stages) / 4)
        kcl = float(np.max(np.abs(tr.i_f + tr.i_d - op.i_l)))
        if kcl > 1e-9 * op.i_l:
            bad.append(f"{res.metadata['edge']}: i_F + i_d off by {kcl:.3g} A")

    m, mo = on.markers, off.markers
    v_clamp = op.v_dc + dset.sbd.v_f0
    if not (m["v_th"] < m["v_gs_t3"] < m["v_miller"] < m["v_gs_peak"] < dset.drive.v_cc):
        bad.append("turn-on gate markers out of order")
    if not (0.0 < m["v_ds_on"] < m["v_ds0"] < v_clamp and m["i_peak"] > op.i_l):
        bad.append("turn-on drain markers out of order")
    if not (mo["v_th"] <= mo["v_gs_t6"] <= mo["v_gs_t4"] <= mo["v_miller"]):
        bad.append("turn-off gate markers out of order")
    if not (0.0 <= mo["i_t4"] <= op.i_l and mo["v_peak"] >= v_clamp):
        bad.append("turn-off drain markers out of order")
    t_prev = on.t_start
    for s in on.stages + off.stages:
        if s.duration < 0:
            bad.append(f"{s.label} has negative duration")
    if on.stages[-1].t_end < t_prev:
        bad.append("stage times decrease")

    t0, h = rng.uniform(0, 1e-8), rng.uniform(1e-10, 1e-7)
    y0, y1, s0, s1 = rng.normal(size=4) * np.array([10.0, 10.0, 1e9, 1e9])
    a, b, c, d = cubic_bridge(t0, t0 + h, y0, y1, s0, s1)
    end, slope_end = a * h**3 + b * h * h + c * h + d, 3 * a * h * h + 2 * b * h + c
    scale = abs(y0) + abs(y1) + h * (abs(s0) + abs(s1))
    if abs(d - y0) > 1e-12 * scale or abs(end - y1) > 1e-9 * scale or abs(c - s0) > 1e-12 * abs(s0) + 1e-300:
        bad.append("cubic bridge misses its end values")
    if abs(slope_end - s1) > 1e-9 * (abs(s0) + abs(s1) + abs(y1 - y0) / h):
        bad.append("cubic bridge misses its end slope")

    mos = dset.mosfet
    v = np.linspace(mos.v_th0 - 1.0, mos.v_th0 + 10.0, 40)
    fit = fit_transfer_curve(CurveSamples(v, mos.k_fs * np.clip(v - mos.v_th0, 0, None) ** 2))
    if abs(fit.k_fs - mos.k_fs) > 1e-6 * mos.k_fs or abs(fit.v_th0 - mos.v_th0) > 1e-6:
        bad.append(f"transfer fit drifted: {fit.k_fs} vs {mos.k_fs}, {fit.v_th0} vs {mos.v_th0}")
    cap = mos.c_gd
    vs = np.linspace(0.0, cap.v_max, 600)
    seg = segment_capacitance_curve(CurveSamples(vs, np.array([cap.at(x) for x in vs])), cap.breakpoints, cap.v_max)
    if max(abs(p - q) / q for p, q in zip(seg.values, cap.values)) > 1e-6:
        bad.append("capacitance segmentation drifted")
    return bad


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
