"""Time-segmented switching transients of the MOSFET/SBD pair.

Each edge is split into stages with closed-form durations. Inside a stage every
terminal quantity is a simple analytic piece (see :mod:`switchcell.waveforms`),
and stage energies are integrated numerically from those pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .device import (
    DeviceSet,
    DomainError,
    LinearizedChannel,
    PiecewiseCapacitance,
    capacitance_at,
    linearize_channel,
)
from .trace import WaveformTrace
from .waveforms import (
    Constant,
    Cubic,
    DampedCosine,
    ExpApproach,
    KvlDerived,
    Linear,
    PiecewiseLinear,
    Waveform,
)

SIMPSON_INTERVALS = 1024
SIGNALS = ("v_gs", "v_ds", "i_d", "v_f", "i_f")

# Row-order mapping of the canonical turn-off labels onto the time indices of
# the published turn-off table (which skips from t4 to t6).
OFF_LABEL_MAP = {
    "off-1": "t1-t2", "off-2": "t2-t3", "off-3": "t3-t4", "off-4": "t6-t7", "off-5": "t7-t8",
}


class StagePlanError(ValueError):
    """The closed-form stage plan has no physical solution for these inputs."""


class ResolutionError(ValueError):
    """Requested sampling step is coarser than a stage."""


@dataclass(frozen=True)
class OperatingPoint:
    v_dc: float
    i_l: float
    t_j: float = 298.15

    def __post_init__(self):
        if not self.v_dc > 0:
            raise DomainError(f"v_dc must be positive, got {self.v_dc}")
        if not self.i_l > 0:
            raise DomainError(f"i_l must be positive, got {self.i_l}")


@dataclass(frozen=True)
class OscillationParams:
    alpha: float
    omega: float
    amplitude: float


@dataclass(frozen=True)
class StageRecord:
    label: str
    t_start: float
    t_end: float
    v_gs: Waveform
    v_ds: Waveform
    i_d: Waveform
    v_f: Waveform
    i_f: Waveform
    e_mos: float = 0.0
    e_sbd: float = 0.0

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def evaluate(self, t) -> dict[str, np.ndarray]:
        tau = np.asarray(t, dtype=float) - self.t_start
        return {s: getattr(self, s).value(tau) for s in SIGNALS}


@dataclass(frozen=True)
class TransientResult:
    stages: tuple[StageRecord, ...]
    e_on_mos: float = 0.0
    e_off_mos: float = 0.0
    e_on_sbd: float = 0.0
    e_off_sbd: float = 0.0
    markers: dict = field(default_factory=dict)
    oscillation: dict = field(default_factory=dict)
    crosschecks: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def e_mos(self) -> float:
        return self.e_on_mos + self.e_off_mos

    @property
    def e_sbd(self) -> float:
        return self.e_on_sbd + self.e_off_sbd

    @property
    def t_start(self) -> float:
        return self.stages[0].t_start

    @property
    def t_end(self) -> float:
        return self.stages[-1].t_end

    def stage(self, label: str) -> StageRecord:
        for s in self.stages:
            if s.label == label:
                return s
        raise KeyError(label)


@dataclass(frozen=True)
class StagePlan:
    durations: dict[str, float]
    markers: dict[str, float]
    warnings: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# helpers


def cubic_bridge(t0: float, t1: float, y0: float, y1: float, s0: float, s1: float) -> tuple[float, float, float, float]:
    """Hermite cubic in local time ``tau = t - t0``: returns (a, b, c, d)."""
    h = t1 - t0
    if not h > 0:
        raise ValueError("cubic_bridge needs t1 > t0")
    dy = (y1 - y0) / h
    a = (s0 + s1 - 2.0 * dy) / (h * h)
    b = (3.0 * dy - 2.0 * s0 - s1) / h
    return a, b, s0, y0


def simpson(f, h: float, n: int = SIMPSON_INTERVALS) -> float:
    """Composite Simpson integral of ``f`` over [0, h] with ``n`` (even) intervals."""
    if h <= 0:
        return 0.0
    tau = np.linspace(0.0, h, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(h / (3.0 * n) * np.dot(w, f(tau)))


def _stage(label, t0, dur, v_gs, v_ds, i_d, v_f, i_f) -> StageRecord:
    e_mos = simpson(lambda x: v_ds.value(x) * i_d.value(x), dur)
    e_sbd = simpson(lambda x: v_f.value(x) * i_f.value(x), dur)
    return StageRecord(label, t0, t0 + dur, v_gs, v_ds, i_d, v_f, i_f, e_mos, e_sbd)


def _miller_ramp(c_gd: PiecewiseCapacitance, c_ext: float, v_a: float, v_b: float, rate: float):
    """Drain-voltage ramp from ``v_a`` to ``v_b`` limited by Miller charge.

    ``rate`` is the gate current (A) supplied while on the plateau. Each
    capacitance segment is crossed in ``charge / rate``, giving a piecewise
    linear voltage whose knots sit on the segment boundaries. Returns
    ``(knot_taus, knot_values, miller_charges)``.
    """
    lo, hi = min(v_a, v_b), max(v_a, v_b)
    cuts = [lo] + [e for e in c_gd.edges if lo < e < hi] + [hi]
    if v_b < v_a:
        cuts = cuts[::-1]
    taus, charges = [0.0], []
    for x, y in zip(cuts, cuts[1:]):
        q = abs(c_gd.charge(x, y)) + c_ext * abs(y - x)
        charges.append(q)
        taus.append(taus[-1] + q / rate)
    return taus, cuts, charges


def _rise_charges(dset: DeviceSet, v_a: float, v_b: float, rate: float):
    """Per-segment Miller and output (C_ds + diode) charges of a rising drain ramp."""
    taus, cuts, q_gd = _miller_ramp(dset.mosfet.c_gd, dset.drive.c_gd_ext, v_a, v_b, rate)
    v_dc = v_b
    q_out = []
    for x, y in zip(cuts, cuts[1:]):
        q_ds = dset.mosfet.c_ds.charge(x, y)
        q_fd = _diode_charge(dset, v_dc - x) - _diode_charge(dset, v_dc - y)
        q_out.append(q_ds + q_fd)
    return cuts, q_gd, q_out


def _rise_knots(dset: DeviceSet, v_a: float, v_b: float, rate: float, total: float):
    """Knot times of the off-3 ramp: Miller time per segment plus the remaining
    time shared in proportion to the output charge of each segment."""
    taus, cuts, _ = _miller_ramp(dset.mosfet.c_gd, dset.drive.c_gd_ext, v_a, v_b, rate)
    _, _, q_out = _rise_charges(dset, v_a, v_b, rate)
    spare = max(total - taus[-1], 0.0)
    q_sum = sum(q_out)
    out = [0.0]
    for k, q in enumerate(q_out):
        out.append(out[-1] + (taus[k + 1] - taus[k]) + spare * q / q_sum)
    scale = total / out[-1]
    return tuple(t * scale for t in out), tuple(cuts)


def _diode_charge(dset: DeviceSet, v_rev: float) -> float:
    """Charge on C_F + C_L when the diode goes from its forward drop to ``v_rev`` reverse."""
    c_f, c_l = dset.sbd.c_f, dset.circuit.c_l
    q = (c_f.values[0] + c_l) * dset.sbd.v_f0
    if v_rev > 0:
        v = min(v_rev, c_f.v_max)
        q += c_f.charge(0.0, v) + c_l * v
    return q


def _shifted_cosine(w: DampedCosine, dt: float) -> DampedCosine:
    return DampedCosine(w.offset, w.amplitude * math.exp(-w.alpha * dt), w.alpha, w.omega, w.phase + w.omega * dt)


def _electrical(dset: DeviceSet, op: OperatingPoint):
    m, drv, sbd = dset.mosfet, dset.drive, dset.sbd
    ch = linearize_channel(m, op.i_l)
    c_gd_low = m.c_gd.values[0] + drv.c_gd_ext
    c_gd_high = capacitance_at(m.c_gd, min(op.v_dc, m.c_gd.v_max)) + drv.c_gd_ext
    l_stray = m.l_s + m.l_d + dset.circuit.l_p
    return dict(
        m=m, drv=drv, sbd=sbd, ch=ch,
        r=drv.r_g, v_cc=drv.v_cc, v_ee=drv.v_ee,
        c_iss=m.c_gs + c_gd_low,
        c_gd_high=c_gd_high,
        c_oss_high=c_gd_high + capacitance_at(m.c_ds, min(op.v_dc, m.c_ds.v_max)),
        c_f_high=capacitance_at(sbd.c_f, min(op.v_dc, sbd.c_f.v_max)) + dset.circuit.c_l,
        l=l_stray, l_g=m.l_s,
        v_on=op.i_l * m.r_ds_on,
    )


# ---------------------------------------------------------------------------
# stage plans


def turn_on_stage_plan(dset: DeviceSet, op: OperatingPoint) -> StagePlan:
    e = _electrical(dset, op)
    ch: LinearizedChannel = e["ch"]
    r, v_cc, v_ee, c_iss, l, l_g = e["r"], e["v_cc"], e["v_ee"], e["c_iss"], e["l"], e["l_g"]
    i_l, v_dc, v_f0 = op.i_l, op.v_dc, dset.sbd.v_f0
    v_th, v_m, v_gs3, g = ch.v_th, ch.v_miller, ch.v_gs_t3, ch.g_fs
    if v_cc <= v_th:
        raise StagePlanError(f"gate supply {v_cc} V never reaches threshold {v_th:.3f} V")
    if v_cc <= v_m:
        raise StagePlanError(f"gate supply {v_cc} V below Miller plateau {v_m:.3f} V")
    d1 = r * c_iss * math.log((v_cc - v_ee) / (v_cc - v_th)) if v_ee < v_th else 0.0

    # Current rise to I_L/2: gate-loop balance over the stage, with the Miller
    # charge drawn by the inductive drain-voltage dip.
    qa = v_cc - 0.5 * (v_th + v_gs3)
    qb = r * c_iss * (v_gs3 - v_th) + 0.5 * l_g * i_l
    qc = 0.5 * r * e["c_gd_high"] * l * i_l
    disc = qb * qb + 4.0 * qa * qc
    if disc < 0:
        raise StagePlanError(f"negative discriminant in current-rise stage: A={qa}, B={qb}, C={qc}")
    d2 = (qb + math.sqrt(disc)) / (2.0 * qa)
    v_drop = l * i_l / (2.0 * d2)
    v_ds0 = v_dc + v_f0 - v_drop
    if v_ds0 <= v_m - v_th:
        raise StagePlanError(f"inductive dip leaves {v_ds0:.2f} V on the drain, below the plateau edge")

    d3 = (r * c_iss * (v_m - v_gs3) + 0.5 * l_g * i_l) / (v_cc - 0.5 * (v_gs3 + v_m))

    # Overshoot: the diode capacitance swings from forward conduction to the
    # reverse voltage set by the dip.
    q_f = _diode_charge(dset, v_drop - v_f0)
    q = 2.0 * q_f
    aa = v_cc - v_m
    bb = q / (2.0 * g)
    cc = (r * c_iss / g + l_g) * q
    d4 = (bb + math.sqrt(bb * bb + 4.0 * aa * cc)) / (2.0 * aa)
    i_peak = i_l + q / d4
    v_gs_peak = ch.v_gs_for(i_peak)
    if v_gs_peak >= v_cc:
        raise StagePlanError(f"overshoot needs gate voltage {v_gs_peak:.2f} V above supply")

    rate = (v_cc - v_m) / r
    taus5, _, _ = _miller_ramp(dset.mosfet.c_gd, dset.drive.c_gd_ext, v_ds0, v_m - v_th, rate)
    v_on = e["v_on"]
    if v_on >= v_m - v_th:
        raise StagePlanError("on-state voltage exceeds the plateau edge; load current too high")
    taus6, _, _ = _miller_ramp(dset.mosfet.c_gd, dset.drive.c_gd_ext, v_m - v_th, v_on, rate)
    d7 = 2.0 * r * c_iss
    return StagePlan(
        durations={"on-1": d1, "on-2": d2, "on-3": d3, "on-4": d4,
                   "on-5": taus5[-1], "on-6": taus6[-1], "on-7": d7},
        markers={"v_th": v_th, "g_fs": g, "v_miller": v_m, "v_gs_t3": v_gs3, "v_ds0": v_ds0,
                 "v_drop": v_drop, "i_peak": i_peak, "v_gs_peak": v_gs_peak, "v_ds_on": v_on,
                 "q_f_on": q_f, "c_iss": c_iss},
    )


def turn_off_stage_plan(dset: DeviceSet, op: OperatingPoint) -> StagePlan:
    e = _electrical(dset, op)
    ch: LinearizedChannel = e["ch"]
    r, v_cc, v_ee, c_iss, l, l_g = e["r"], e["v_cc"], e["v_ee"], e["c_iss"], e["l"], e["l_g"]
    i_l, v_dc, v_f0 = op.i_l, op.v_dc, dset.sbd.v_f0
    v_th, v_m, g = ch.v_th, ch.v_miller, ch.g_fs
    warnings = []
    if v_cc <= v_m:
        raise StagePlanError(f"gate supply {v_cc} V below Miller plateau {v_m:.3f} V")
    if v_ee >= v_th:
        raise StagePlanError(f"off-level {v_ee} V does not pull the gate below threshold {v_th:.3f} V")
    v_on = e["v_on"]
    v_edge = v_m - v_th
    if v_on >= v_edge:
        raise StagePlanError("on-state voltage exceeds the plateau edge; load current too high")
    if v_edge >= v_dc:
        raise StagePlanError("plateau edge above the bus voltage")

    d1 = r * c_iss * math.log((v_cc - v_ee) / (v_m - v_ee))
    rate = (v_m - v_ee) / r
    taus2, _, _ = _miller_ramp(dset.mosfet.c_gd, dset.drive.c_gd_ext, v_on, v_edge, rate)
    d2 = taus2[-1]

    # Voltage rise to the bus: the diode capacitance discharge diverts part of
    # the load current away from the channel, which lets the gate fall below
    # the plateau.
    knots, q_gd3, q_out3 = _rise_charges(dset, v_edge, v_dc, rate)
    q_gd = sum(q_gd3)
    q_f = _diode_charge(dset, v_dc - v_edge) - _diode_charge(dset, 0.0)
    # Channel current hands over to the drain-source and diode capacitances.
    q_out = sum(q_out3)
    aa = v_m - v_ee
    bb = q_out / (2.0 * g) + r * q_gd
    cc = (r * c_iss / g + l_g) * q_out
    d3 = (bb + math.sqrt(bb * bb + 4.0 * aa * cc)) / (2.0 * aa)
    i_t4 = i_l - q_f / d3
    if i_t4 < 0:
        warnings.append(f"capacitive desaturation: I_t4={i_t4:.4g} A clamped to 0")
        i_t4 = 0.0
    v_gs_t4 = ch.v_gs_for(i_t4)

    # Current fall: the duration, the gate voltage at its start and the drain
    # overshoot depend on each other; solve by bisection on the duration.
    c_oss = e["c_oss_high"]

    def fall(dur):
        v_peak = v_dc + v_f0 + l * i_t4 / dur
        v_gs6 = max(v_th, (i_t4 - c_oss * (v_peak - v_dc) / dur) / g + v_th)
        rhs = (i_t4 * l_g + r * c_iss * (v_gs6 - v_th)) / (0.5 * (v_gs6 + v_th) - v_ee)
        return rhs, v_peak, v_gs6

    if i_t4 > 0:
        lo, hi = 1e-15, 1e-15
        while fall(hi)[0] > hi:
            hi *= 2.0
            if hi > 1.0:
                raise StagePlanError("current-fall duration did not converge")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if fall(mid)[0] > mid:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-6 * hi:
                break
        d4 = hi
        _, v_peak, v_gs6 = fall(d4)
    else:
        d4 = r * c_iss * math.log((v_m - v_ee) / (v_th - v_ee))
        v_peak, v_gs6 = v_dc + v_f0, v_th
    d5 = 2.0 * r * c_iss
    return StagePlan(
        durations={"off-1": d1, "off-2": d2, "off-3": d3, "off-4": d4, "off-5": d5},
        markers={"v_th": v_th, "g_fs": g, "v_miller": v_m, "v_ds_on": v_on, "i_t4": i_t4,
                 "v_gs_t4": v_gs_t4, "i_t6": i_t4, "v_gs_t6": v_gs6, "v_peak": v_peak,
                 "q_f_off": q_f, "q_gd_off": q_gd, "c_iss": c_iss},
        warnings=tuple(warnings),
    )


def oscillation_params(dset: DeviceSet, op: OperatingPoint, edge: str, plan: StagePlan | None = None) -> OscillationParams:
    """Damped LC ring after the overshoot: power-loop inductance against the
    diode (turn-on) or MOSFET output (turn-off) capacitance at bus voltage."""
    e = _electrical(dset, op)
    l = e["l"]
    if not l > 0:
        raise DomainError("oscillation needs a positive loop inductance")
    if edge == "on":
        plan = plan or turn_on_stage_plan(dset, op)
        omega = 1.0 / math.sqrt(l * e["c_f_high"])
        alpha = dset.mosfet.r_ds_on / (2.0 * l)
        amp = plan.markers["i_peak"] - op.i_l
    elif edge == "off":
        plan = plan or turn_off_stage_plan(dset, op)
        omega = 1.0 / math.sqrt(l * e["c_oss_high"])
        r_damp = dset.r_damp_off if dset.r_damp_off is not None else dset.mosfet.r_ds_on
        alpha = r_damp / (2.0 * l)
        amp = plan.markers["v_peak"] - op.v_dc - dset.sbd.v_f0
    else:
        raise ValueError(f"edge must be 'on' or 'off', got {edge!r}")
    return OscillationParams(alpha=alpha, omega=omega, amplitude=amp)


# ---------------------------------------------------------------------------
# waveforms and energies


def _corrected(dset: DeviceSet, op: OperatingPoint) -> DeviceSet:
    return dset.at_temperature(op.t_j)


def simulate_turn_on(dset: DeviceSet, op: OperatingPoint, t0: float = 0.0) -> TransientResult:
    """Turn-on transient starting at gate edge ``t0``; parameters are
    temperature-corrected to ``op.t_j`` here."""
    dset = _corrected(dset, op)
    plan = turn_on_stage_plan(dset, op)
    e = _electrical(dset, op)
    mk, d = plan.markers, plan.durations
    i_l, v_dc, v_f0, l = op.i_l, op.v_dc, dset.sbd.v_f0, e["l"]
    v_cc, r, c_iss = e["v_cc"], e["r"], e["c_iss"]
    v_th, v_m = mk["v_th"], mk["v_miller"]
    i_f = lambda w: KvlDerived(i_l, -1.0, w, 0.0, Constant(0.0))  # noqa: E731
    stages = []
    t = t0

    # on-1: gate charges to threshold, diode carries the load.
    s = _stage("on-1", t, d["on-1"], ExpApproach(e["v_ee"], v_cc, r * c_iss), Constant(v_dc + v_f0),
               Constant(0.0), Constant(v_f0), Constant(i_l))
    stages.append(s)
    t = s.t_end

    # on-2: smooth current rise to I_L/2; the drain sees the inductive dip.
    d2, d3 = d["on-2"], d["on-3"]
    i2 = Cubic(*cubic_bridge(0.0, d2, 0.0, 0.5 * i_l, 0.0, mk["v_drop"] / l if l > 0 else 0.5 * i_l / d2))
    s = _stage("on-2", t, d2, Linear(v_th, (mk["v_gs_t3"] - v_th) / d2),
               KvlDerived(v_dc + v_f0, 0.0, Constant(0.0), -l, i2), i2, Constant(v_f0), i_f(i2))
    stages.append(s)
    t = s.t_end

    # on-3: linear rise to I_L at the dipped drain voltage.
    slope3 = 0.5 * i_l / d3
    i3 = Linear(0.5 * i_l, slope3)
    s = _stage("on-3", t, d3, Linear(mk["v_gs_t3"], (v_m - mk["v_gs_t3"]) / d3), Constant(mk["v_ds0"]),
               i3, Constant(v_f0), i_f(i3))
    stages.append(s)
    t = s.t_end

    # on-4: overshoot while the diode capacitance charges.
    d4 = d["on-4"]
    i4 = Cubic(*cubic_bridge(0.0, d4, i_l, mk["i_peak"], slope3, 0.0))
    s = _stage("on-4", t, d4, Linear(v_m, (mk["v_gs_peak"] - v_m) / d4), Constant(mk["v_ds0"]), i4,
               KvlDerived(mk["v_ds0"] - v_dc, 0.0, Constant(0.0), l, i4), i_f(i4))
    stages.append(s)
    t = s.t_end

    # on-5/on-6: Miller plateau drain-voltage fall with the ring on top.
    if l > 0:
        osc = oscillation_params(dset, op, "on", plan)
        ring = DampedCosine(i_l, osc.amplitude, osc.alpha, osc.omega)
    else:
        decay = 4.0 / (d["on-5"] + d["on-6"])
        osc = OscillationParams(decay, 0.0, mk["i_peak"] - i_l)
        ring = DampedCosine(i_l, osc.amplitude, decay, 0.0)
    rate = (v_cc - v_m) / r
    d5 = d["on-5"]
    taus, vals, _ = _miller_ramp(dset.mosfet.c_gd, dset.drive.c_gd_ext, mk["v_ds0"], v_m - v_th, rate)
    v5 = PiecewiseLinear(tuple(taus), tuple(vals))
    s = _stage("on-5", t, d5, Linear(mk["v_gs_peak"], (v_m - mk["v_gs_peak"]) / d5), v5, ring,
               KvlDerived(-v_dc, 1.0, v5, l, ring), i_f(ring))
    stages.append(s)
    t = s.t_end

    ring6 = _shifted_cosine(ring, d5)
    taus, vals, _ = _miller_ramp(dset.mosfet.c_gd, dset.drive.c_gd_ext, v_m - v_th, mk["v_ds_on"], rate)
    v6 = PiecewiseLinear(tuple(taus), tuple(vals))
    s = _stage("on-6", t, d["on-6"], Constant(v_m), v6, ring6, KvlDerived(-v_dc, 1.0, v6, l, ring6), i_f(ring6))
    stages.append(s)
    t = s.t_end

    # on-7: gate finishes charging; channel fully enhanced.
    ring7 = _shifted_cosine(ring, d5 + d["on-6"])
    v7 = Constant(mk["v_ds_on"])
    s = _stage("on-7", t, d["on-7"], ExpApproach(v_m, v_cc, r * c_iss), v7, ring7,
               KvlDerived(-v_dc, 1.0, v7, l, ring7), i_f(ring7))
    stages.append(s)

    checks = {
        "on-1": (stages[0].e_mos, 0.0, stages[0].e_sbd, i_l * v_f0 * d["on-1"]),
        "on-3": (stages[2].e_mos, 0.75 * mk["v_ds0"] * i_l * d3),
    }
    return TransientResult(
        stages=tuple(stages),
        e_on_mos=sum(x.e_mos for x in stages),
        e_on_sbd=sum(x.e_sbd for x in stages),
        markers=dict(mk),
        oscillation={"on": osc},
        crosschecks=checks,
        metadata={"edge": "on", "warnings": list(plan.warnings), "durations": dict(d),
                  "t_j": op.t_j, "oscillation_overlay": "on-5..on-7"},
    )


def simulate_turn_off(dset: DeviceSet, op: OperatingPoint, t0: float = 0.0) -> TransientResult:
    """Turn-off transient starting at gate edge ``t0``."""
    dset = _corrected(dset, op)
    plan = turn_off_stage_plan(dset, op)
    e = _electrical(dset, op)
    mk, d = plan.markers, plan.durations
    i_l, v_dc, v_f0, l = op.i_l, op.v_dc, dset.sbd.v_f0, e["l"]
    v_ee, r, c_iss = e["v_ee"], e["r"], e["c_iss"]
    v_th, v_m, v_on = mk["v_th"], mk["v_miller"], mk["v_ds_on"]
    i_f = lambda w: KvlDerived(i_l, -1.0, w, 0.0, Constant(0.0))  # noqa: E731
    rate = (v_m - v_ee) / r
    stages = []
    t = t0

    s = _stage("off-1", t, d["off-1"], ExpApproach(e["v_cc"], v_ee, r * c_iss), Constant(v_on),
               Constant(i_l), Constant(v_on - v_dc), Constant(0.0))
    stages.append(s)
    t = s.t_end

    taus, vals, _ = _miller_ramp(dset.mosfet.c_gd, dset.drive.c_gd_ext, v_on, v_m - v_th, rate)
    v2 = PiecewiseLinear(tuple(taus), tuple(vals))
    s = _stage("off-2", t, d["off-2"], Constant(v_m), v2, Constant(i_l),
               KvlDerived(-v_dc, 1.0, v2, 0.0, Constant(0.0)), Constant(0.0))
    stages.append(s)
    t = s.t_end

    # off-3: drain voltage rises to the bus; segment crossing times follow the
    # Miller charge of each segment.
    d3 = d["off-3"]
    v3 = PiecewiseLinear(*_rise_knots(dset, v_m - v_th, v_dc, rate, d3))
    i3 = Linear(i_l, (mk["i_t4"] - i_l) / d3)
    s = _stage("off-3", t, d3, Linear(v_m, (mk["v_gs_t4"] - v_m) / d3), v3, i3,
               KvlDerived(-v_dc, 1.0, v3, l, i3), i_f(i3))
    stages.append(s)
    t = s.t_end

    # off-4: current fall; the drain swings from the bus up to the overshoot peak.
    d4 = d["off-4"]
    i4 = Linear(mk["i_t4"], -mk["i_t4"] / d4)
    v4 = DampedCosine(v_dc, mk["v_peak"] - v_dc, 0.0, 0.5 * math.pi / d4, -0.5 * math.pi)
    s = _stage("off-4", t, d4, Linear(mk["v_gs_t6"], (v_th - mk["v_gs_t6"]) / d4), v4, i4,
               KvlDerived(-v_dc, 1.0, v4, l, i4), i_f(i4))
    stages.append(s)
    t = s.t_end

    # off-5: output-capacitance ring-down, diode conducting.
    v_os = mk["v_peak"] - v_dc - v_f0
    if l > 0 and v_os != 0.0:
        osc = oscillation_params(dset, op, "off", plan)
        a, w = osc.alpha, osc.omega
        ratio = a / w
        v5 = DampedCosine(v_dc + v_f0, v_os * math.sqrt(1.0 + ratio * ratio), a, w, -math.atan(ratio))
        i5 = DampedCosine(0.0, e["c_oss_high"] * v_os * (w + a * a / w), a, w, 0.5 * math.pi)
    else:
        osc = OscillationParams(0.0, 1.0 / math.sqrt(l * e["c_oss_high"]) if l > 0 else math.inf, 0.0)
        v5, i5 = Constant(v_dc + v_f0), Constant(0.0)
    s = _stage("off-5", t, d["off-5"], ExpApproach(v_th, v_ee, r * c_iss), v5, i5, Constant(v_f0), i_f(i5))
    stages.append(s)

    checks = {
        "off-1": (stages[0].e_mos, i_l * v_on * d["off-1"], stages[0].e_sbd, 0.0),
        "off-2": (stages[1].e_mos, 0.5 * (v_m - v_th + v_on) * i_l * d["off-2"]),
    }
    return TransientResult(
        stages=tuple(stages),
        e_off_mos=sum(x.e_mos for x in stages),
        e_off_sbd=sum(x.e_sbd for x in stages),
        markers=dict(mk),
        oscillation={"off": osc},
        crosschecks=checks,
        metadata={"edge": "off", "warnings": list(plan.warnings), "durations": dict(d),
                  "t_j": op.t_j, "label_map": dict(OFF_LABEL_MAP)},
    )


def simulate_cycle(dset: DeviceSet, op: OperatingPoint, t_off: float | None = None) -> TransientResult:
    """Turn-on followed by turn-off; ``t_off`` defaults to the end of turn-on."""
    on = simulate_turn_on(dset, op)
    start = on.t_end if t_off is None else t_off
    if start < on.t_end:
        raise ValueError("turn-off edge overlaps the turn-on transient")
    off = simulate_turn_off(dset, op, t0=start)
    gap = ()
    if start > on.t_end:
        hold = StageRecord("on-hold", on.t_end, start, Constant(dset.drive.v_cc),
                           Constant(on.markers["v_ds_on"]), Constant(op.i_l),
                           Constant(on.markers["v_ds_on"] - op.v_dc), Constant(0.0),
                           op.i_l * on.markers["v_ds_on"] * (start - on.t_end), 0.0)
        gap = (hold,)
    return TransientResult(
        stages=on.stages + gap + off.stages,
        e_on_mos=on.e_on_mos, e_off_mos=off.e_off_mos,
        e_on_sbd=on.e_on_sbd, e_off_sbd=off.e_off_sbd,
        markers={**on.markers, **off.markers},
        oscillation={**on.oscillation, **off.oscillation},
        crosschecks={**on.crosschecks, **off.crosschecks},
        metadata={"edge": "cycle", "warnings": on.metadata["warnings"] + off.metadata["warnings"],
                  "durations": {**on.metadata["durations"], **off.metadata["durations"]},
                  "t_j": op.t_j, "label_map": dict(OFF_LABEL_MAP)},
    )


def stitch_errors(result: TransientResult) -> dict[str, float]:
    """Largest jump of i_d and v_ds at the stage knots, relative to the largest
    knot magnitude of that signal."""
    pairs = []
    for a, b in zip(result.stages, result.stages[1:]):
        pairs.append((a.evaluate(a.t_end), b.evaluate(b.t_start)))
    out = {}
    for sig in ("i_d", "v_ds"):
        knots = [abs(float(s.evaluate(t)[sig])) for s in result.stages for t in (s.t_start, s.t_end)]
        scale = max(knots + [1e-300])
        out[sig] = max((abs(float(x[sig]) - float(y[sig])) / scale for x, y in pairs), default=0.0)
    return out


def conduction_loss(dset: DeviceSet, i: float, duty: float) -> tuple[float, float]:
    if not 0.0 <= duty <= 1.0:
        raise DomainError(f"duty must lie in [0, 1], got {duty}")
    if i < 0:
        raise DomainError(f"current must be non-negative, got {i}")
    return duty * i * i * dset.mosfet.r_ds_on, (1.0 - duty) * i * dset.sbd.v_f0


def sample_trace(result: TransientResult, dt: float) -> WaveformTrace:
    """Uniform samples from the first stage start; the last stage end is always included."""
    if not dt > 0:
        raise ResolutionError(f"dt must be positive, got {dt}")
    shortest = min(s.duration for s in result.stages if s.duration > 0)
    if dt >= shortest:
        raise ResolutionError(f"dt={dt:g} s not below the shortest stage ({shortest:g} s)")
    t0, t1 = result.t_start, result.t_end
    n = int(math.floor((t1 - t0) / dt + 1e-9))
    t = t0 + dt * np.arange(n + 1)
    if t1 - t[-1] > 1e-9 * dt:
        t = np.append(t, t1)
    else:
        t[-1] = t1
    ends = np.array([s.t_end for s in result.stages])
    idx = np.minimum(np.searchsorted(ends, t, side="right"), len(result.stages) - 1)
    cols = {sig: np.empty_like(t) for sig in SIGNALS}
    for k, stage in enumerate(result.stages):
        m = idx == k
        if m.any():
            vals = stage.evaluate(t[m])
            for sig in SIGNALS:
                cols[sig][m] = vals[sig]
    return WaveformTrace(t, cols["v_gs"], cols["v_ds"], cols["i_d"], cols["v_f"], cols["i_f"])
