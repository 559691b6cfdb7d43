"""Full-circuit reference solver for the double-pulse switching cell.

The cell (gate loop with common-source inductance, power loop with lumped
stray inductance, Schottky diode with junction capacitance, ideal load
current source) is written in charge form

    d/dt Phi(x) = F(x, t),   x = (v_gs, v_ds, i_d, v_F)

and advanced with the implicit trapezoidal rule. Capacitor charges are
integrated directly, so crossing a capacitance breakpoint never creates or
destroys stored energy. The diode switches between a conducting mode
(v_F pinned at the forward drop) and a blocking mode (capacitive); the
switching instants are located by bisection on the step size.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .device import DeviceSet, PiecewiseCapacitance, linearize_channel
from .trace import WaveformTrace, energies_from_trace


class SolverError(RuntimeError):
    """The integration diverged or Newton failed below the minimum step."""


class _Charge:
    """Q(v) = integral of a piecewise-constant C from 0 to v, extended flat outside."""

    def __init__(self, cap: PiecewiseCapacitance, extra: float = 0.0):
        self.bounds = list(cap.breakpoints)
        self.values = [c + extra for c in cap.values]
        edges = [0.0, *self.bounds]
        self.q_at = [0.0]
        for k in range(len(self.bounds)):
            self.q_at.append(self.q_at[-1] + self.values[k] * (edges[k + 1] - edges[k]))
        self.edges = edges

    def c(self, v: float) -> float:
        if v <= 0.0:
            return self.values[0]
        return self.values[bisect.bisect_left(self.bounds, v)]

    def q(self, v: float) -> float:
        if v <= 0.0:
            return self.values[0] * v
        k = bisect.bisect_left(self.bounds, v)
        return self.q_at[k] + self.values[k] * (v - self.edges[k])


@dataclass
class OracleResult:
    trace: WaveformTrace
    kcl_residual_max: float
    newton_failures: int
    diode_events: list[tuple[float, str]] = field(default_factory=list)
    edges: list[float] = field(default_factory=list)


def dpt_gate_sequence(dset: DeviceSet, t_on: float, t_off: float) -> list[tuple[float, float]]:
    """Single-pulse gate program: off, on at ``t_on``, off at ``t_off``."""
    d = dset.drive
    return [(0.0, d.v_ee), (t_on, d.v_cc), (t_off, d.v_ee)]


def fastest_resonance(dset: DeviceSet) -> float:
    """Upper bound on the LC angular frequencies present in the cell (rad/s)."""
    m, c = dset.mosfet, dset.circuit
    l_loop = m.l_s + m.l_d + c.l_p
    c_f_min = min(dset.sbd.c_f.values) + c.c_l
    c_oss_min = min(m.c_gd.values) + dset.drive.c_gd_ext + min(m.c_ds.values)
    c_series = c_f_min * c_oss_min / (c_f_min + c_oss_min)
    w = 1.0 / math.sqrt(l_loop * c_series) if l_loop > 0 else 0.0
    if m.l_s > 0:
        c_iss_min = m.c_gs + min(m.c_gd.values) + dset.drive.c_gd_ext
        w = max(w, 1.0 / math.sqrt(m.l_s * c_iss_min))
    return w


class _Cell:
    def __init__(self, dset: DeviceSet, v_dc: float, i_l: float):
        m, sbd, drv = dset.mosfet, dset.sbd, dset.drive
        ch = linearize_channel(m, i_l)
        self.g_fs, self.v_th, self.r_on = ch.g_fs, ch.v_th, m.r_ds_on
        self.c_gs = m.c_gs
        self.q_gd = _Charge(m.c_gd, drv.c_gd_ext)
        self.q_ds = _Charge(m.c_ds)
        self.q_f = _Charge(sbd.c_f, dset.circuit.c_l)
        self.l_s = m.l_s
        self.l = m.l_s + m.l_d + dset.circuit.l_p
        self.r_g = drv.r_g
        self.v_dc, self.i_l, self.v_f0 = v_dc, i_l, sbd.v_f0
        if self.l <= 0:
            raise SolverError("power-loop inductance must be positive for the reference solver")

    def channel(self, v_gs, v_ds):
        """Channel current and its partials; cutoff, saturation and ohmic regions joined continuously by min()."""
        vov = v_gs - self.v_th
        if vov <= 0.0:
            return 0.0, 0.0, 0.0
        i_sat = self.g_fs * vov
        i_lin = v_ds / self.r_on
        if i_lin < i_sat:
            return i_lin, 0.0, 1.0 / self.r_on
        return i_sat, self.g_fs, 0.0

    def phi(self, x, blocking):
        v_gs, v_ds, i_d, v_f = x
        q_gd = self.q_gd.q(v_ds - v_gs)
        return np.array([
            self.c_gs * v_gs - q_gd + self.l_s / self.r_g * i_d,
            self.l * i_d,
            q_gd + self.q_ds.q(v_ds),
            -self.q_f.q(-v_f) if blocking else 0.0,
        ])

    def f(self, x, v_drive):
        v_gs, v_ds, i_d, v_f = x
        i_ch = self.channel(v_gs, v_ds)[0]
        return np.array([
            (v_drive - v_gs) / self.r_g,
            self.v_dc - v_ds + v_f,
            i_d - i_ch,
            self.i_l - i_d,
        ])

    def jac(self, x, h, blocking):
        v_gs, v_ds, i_d, v_f = x
        c_gd = self.q_gd.c(v_ds - v_gs)
        c_ds = self.q_ds.c(v_ds)
        _, gm, gds = self.channel(v_gs, v_ds)
        hh = 0.5 * h
        j = np.array([
            [self.c_gs + c_gd + hh / self.r_g, -c_gd, self.l_s / self.r_g, 0.0],
            [0.0, hh, self.l, -hh],
            [-c_gd + hh * gm, c_gd + c_ds + hh * gds, -hh, 0.0],
            [0.0, 0.0, hh, self.q_f.c(-v_f)],
        ])
        if not blocking:
            j[3] = (0.0, 0.0, 0.0, 1.0)
        return j


def _drive_level(seq, t, right):
    level = seq[0][1]
    for t_k, v in seq:
        if t_k < t or (right and t_k == t):
            level = v
    return level


def integrate_dpt(dset: DeviceSet, v_dc: float, i_l: float, gate_sequence, dt: float,
                  horizon: float, *, max_newton: int = 40, check_dt: bool = True) -> OracleResult:
    """Integrate the switching cell under ``gate_sequence`` up to ``horizon``.

    ``gate_sequence`` is a list of ``(time, drive_voltage)`` pairs; the first
    entry sets the initial level and the cell starts in the quiescent state
    for that level: diode freewheeling if the gate holds the MOSFET off,
    channel carrying the load current (diode blocking) if it holds it on.
    """
    cell = _Cell(dset, v_dc, i_l)
    w_max = fastest_resonance(dset)
    if check_dt and dt > 1.0 / (20.0 * w_max):
        raise ValueError(f"dt={dt:g} s too coarse; need <= {1.0 / (20.0 * w_max):.3g} s")
    seq = sorted(gate_sequence)
    edges = [t for t, _ in seq[1:] if 0.0 < t < horizon]
    v_g0 = seq[0][1]
    if v_g0 <= cell.v_th:
        x = np.array([v_g0, v_dc + cell.v_f0, 0.0, cell.v_f0])
        blocking = False
    else:
        if cell.g_fs * (v_g0 - cell.v_th) <= i_l:
            raise ValueError("initial gate level cannot carry the load current in the ohmic region")
        v_on = i_l * cell.r_on
        x = np.array([v_g0, v_on, i_l, v_on - v_dc])
        blocking = True
    t = 0.0
    ts, xs = [t], [x.copy()]
    kcl_max = 0.0
    failures = 0
    events = []
    h_min = dt * 1e-6
    scale = np.array([1.0, 1.0, 1.0, 1.0])

    def solve(x0, t0, h, blocking):
        f0 = cell.f(x0, _drive_level(seq, t0, True))
        v1 = _drive_level(seq, t0 + h, False)
        p0 = cell.phi(x0, blocking)
        rhs_const = p0 + 0.5 * h * f0
        x1 = x0 + 0.0
        for _ in range(max_newton):
            g = cell.phi(x1, blocking) - rhs_const - 0.5 * h * cell.f(x1, v1)
            if not blocking:
                g[3] = x1[3] - cell.v_f0
            dx = np.linalg.solve(cell.jac(x1, h, blocking), -g)
            x1 = x1 + dx
            if np.all(np.abs(dx) <= 1e-9 * (1.0 + np.abs(x1)) * scale):
                g = cell.phi(x1, blocking) - rhs_const - 0.5 * h * cell.f(x1, v1)
                if not blocking:
                    g[3] = 0.0
                return x1, float(max(abs(g[2]), abs(g[3]))) / h
        return None, math.inf

    def event_value(x1, blocking):
        # Sign change marks a diode commutation.
        return (cell.v_f0 - x1[3]) if blocking else (cell.i_l - x1[2])

    while t < horizon - 1e-18:
        t_next = min(t + dt, horizon)
        for e in edges:
            if t < e < t_next:
                t_next = e
        h = t_next - t
        x1, res = solve(x, t, h, blocking)
        while x1 is None:
            failures += 1
            h *= 0.5
            if h < h_min:
                raise SolverError(f"Newton failed at t={t:.4g} s even with h={h:.3g} s; reduce dt")
            x1, res = solve(x, t, h, blocking)
        if not np.all(np.isfinite(x1)) or np.max(np.abs(x1)) > 1e6:
            raise SolverError(f"state diverged at t={t:.4g} s; reduce dt")
        if event_value(x1, blocking) < 0.0:
            lo, hi = 0.0, h
            x_hi = x1
            while hi - lo > 1e-12:
                mid = 0.5 * (lo + hi)
                xm, _ = solve(x, t, mid, blocking)
                if xm is None:
                    break
                if event_value(xm, blocking) < 0.0:
                    hi, x_hi = mid, xm
                else:
                    lo = mid
            h, x1 = hi, x_hi
            blocking = not blocking
            if not blocking:
                x1 = x1.copy()
                x1[3] = cell.v_f0
            events.append((t + h, "block" if blocking else "conduct"))
        t = t + h
        x = x1
        kcl_max = max(kcl_max, res)
        ts.append(t)
        xs.append(x.copy())

    arr = np.array(xs)
    tt = np.array(ts)
    trace = WaveformTrace(tt, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], i_l - arr[:, 2])
    return OracleResult(trace, kcl_max, failures, events, edges)


def energy_audit(trace: WaveformTrace, v_dc: float, i_l: float, l_loop: float,
                 window: tuple[float, float] | None = None) -> dict:
    """Supply, load, stored and dissipated energies over ``window``.

    ``closure`` is the relative mismatch between source-side and device-side
    energy balances.
    """
    if window is None:
        window = (float(trace.t[0]), float(trace.t[-1]))
    tr = trace.window(*window)
    e_mos, e_sbd = energies_from_trace(trace, window)
    e_supply = float(np.trapezoid(v_dc * tr.i_d, tr.t))
    e_load = float(np.trapezoid(-tr.v_f * i_l, tr.t))
    i_a = float(np.interp(window[0], trace.t, trace.i_d))
    i_b = float(np.interp(window[1], trace.t, trace.i_d))
    e_stored = 0.5 * l_loop * (i_b**2 - i_a**2)
    lhs = e_supply - e_load - e_stored
    rhs = e_mos + e_sbd
    scale = abs(e_mos) + abs(e_sbd)
    return {
        "supply": e_supply, "load": e_load, "stored": e_stored,
        "e_mos": e_mos, "e_sbd": e_sbd,
        "closure": abs(lhs - rhs) / scale if scale > 0 else 0.0,
    }
