"""Electro-thermal co-simulation with an adaptive loss/temperature exchange step.

The electrical side is evaluated once per exchange at the prevailing junction
temperature and load current; the thermal side advances both Foster ladders
exactly over the exchange interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

from .device import DeviceSet, ParameterError
from .thermal import FosterLadder, ThermalState, foster_advance
from .transient import OperatingPoint, conduction_loss, simulate_turn_off, simulate_turn_on


class OverlapError(ValueError):
    """Switching transients do not fit inside one switching period."""


@dataclass(frozen=True)
class CouplerState:
    dt_th: float
    last_dT: float = 0.0
    dt_min: float = 1e-5
    dt_max: float = 1e-2
    delta_T_threshold: float = 1.0
    xi: float = 1e-4
    direction: str = "rising"

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt_th <= self.dt_max):
            raise ParameterError(f"need 0 < dt_min <= dt_th <= dt_max, got {self.dt_min}, {self.dt_th}, {self.dt_max}")
        if self.delta_T_threshold <= 0 or self.xi <= 0:
            raise ParameterError("delta_T_threshold and xi must be positive")
        if self.direction not in ("rising", "falling"):
            raise ParameterError(f"direction must be rising or falling, got {self.direction!r}")


def coupler_next_step(state: CouplerState, dT_now: float) -> CouplerState:
    """Grow the exchange step by ``xi`` while successive temperature changes
    stay within the threshold; drop to ``dt_min`` when heating turns to cooling."""
    direction = "falling" if dT_now < 0 else "rising"
    if direction == "falling" and state.direction == "rising":
        dt = state.dt_min
    elif abs(dT_now - state.last_dT) <= state.delta_T_threshold:
        dt = min(state.dt_th + state.xi, state.dt_max)
    else:
        dt = state.dt_th
    return replace(state, dt_th=dt, last_dT=dT_now, direction=direction)


@lru_cache(maxsize=65536)
def switching_energies(dset: DeviceSet, v_dc: float, i_l: float, t_j: float) -> tuple[float, float, float, float, float]:
    """(E_on_mos, E_off_mos, E_on_sbd, E_off_sbd, duration) at one operating point."""
    op = OperatingPoint(v_dc, i_l, t_j)
    on = simulate_turn_on(dset, op)
    off = simulate_turn_off(dset, op)
    return on.e_on_mos, off.e_off_mos, on.e_on_sbd, off.e_off_sbd, (on.t_end - on.t_start) + (off.t_end - off.t_start)


def _energies(dset, v_dc, i_l, t_j, t_grid):
    if not t_grid:
        return switching_energies(dset, v_dc, i_l, t_j)
    # Linear interpolation between cached temperature nodes.
    lo_t, hi_t = dset.mosfet.t_valid
    k = math.floor((t_j - lo_t) / t_grid)
    t0 = lo_t + k * t_grid
    t1 = min(t0 + t_grid, hi_t)
    t0 = max(t0, lo_t)
    a = switching_energies(dset, v_dc, i_l, t0)
    if t1 <= t0:
        return a
    b = switching_energies(dset, v_dc, i_l, t1)
    w = (t_j - t0) / (t1 - t0)
    return tuple(x + w * (y - x) for x, y in zip(a, b))


def average_cycle_power(dset: DeviceSet, op: OperatingPoint | None, duty: float, f_sw: float,
                        *, t_grid: float | None = None) -> tuple[float, float]:
    """Switching plus conduction power of MOSFET and diode averaged over one period.

    ``op`` may be None (or carry no current) for an idle converter. The
    conduction terms use the temperature-corrected on-resistance.
    """
    if not f_sw > 0:
        raise ValueError(f"f_sw must be positive, got {f_sw}")
    if not 0.0 <= duty <= 1.0:
        raise ValueError(f"duty must lie in [0, 1], got {duty}")
    if op is None or duty == 0.0:
        return 0.0, 0.0
    hot = dset.at_temperature(op.t_j)
    p_mos, p_sbd = conduction_loss(hot, op.i_l, duty)
    if duty < 1.0:
        e_on, e_off, e_on_d, e_off_d, span = _energies(dset, op.v_dc, op.i_l, op.t_j, t_grid)
        if span > 1.0 / f_sw:
            raise OverlapError(f"transients last {span:.3g} s, longer than the {1.0 / f_sw:.3g} s period")
        p_mos += (e_on + e_off) * f_sw
        p_sbd += max(e_on_d + e_off_d, 0.0) * f_sw
    return p_mos, p_sbd


@dataclass(frozen=True)
class Scenario:
    dset: DeviceSet
    v_dc: float
    f_sw: float
    schedule: tuple[tuple[float, float, float], ...]
    r_l: float
    l_l: float = 0.0
    t_amb: float = 298.15
    horizon: float | None = None

    def __post_init__(self):
        sched = tuple((float(a), float(b), float(d)) for a, b, d in self.schedule)
        object.__setattr__(self, "schedule", sched)
        if not sched:
            raise ParameterError("duty schedule is empty")
        for (a, b, d), nxt in zip(sched, sched[1:] + (None,)):
            if not b > a:
                raise ParameterError(f"schedule window ({a}, {b}) is empty")
            if not 0.0 <= d <= 1.0:
                raise ParameterError(f"duty {d} outside [0, 1]")
            if nxt is not None and abs(nxt[0] - b) > 1e-12:
                raise ParameterError(f"schedule windows must be contiguous: {b} then {nxt[0]}")
        if self.v_dc <= 0 or self.f_sw <= 0 or self.r_l <= 0:
            raise ParameterError("v_dc, f_sw and r_l must be positive")
        if self.horizon is None:
            object.__setattr__(self, "horizon", sched[-1][1])

    def duty_at(self, t: float) -> float:
        for a, b, d in self.schedule:
            if a <= t < b:
                return d
        return self.schedule[-1][2]

    def boundaries(self) -> list[float]:
        return [b for _, b, _ in self.schedule]

    def load_current(self, duty: float) -> float:
        return duty * self.v_dc / self.r_l


@dataclass(frozen=True)
class CouplerConfig:
    adaptive: bool = True
    dt_min: float = 1e-5
    dt_max: float = 1e-2
    xi: float = 1e-4
    delta_T: float = 1.0
    dt_fixed: float | None = None
    t_grid: float | None = 0.1


@dataclass
class TemperatureTrajectory:
    samples: list[tuple[float, float, float, float, float, float, float]] = field(default_factory=list)

    COLUMNS = ("time_s", "tj_mos_K", "tj_sbd_K", "tc_K", "p_mos_W", "p_sbd_W", "dt_th_s")

    @property
    def exchange_count(self) -> int:
        return len(self.samples) - 1

    def column(self, name: str) -> list[float]:
        k = self.COLUMNS.index(name)
        return [s[k] for s in self.samples]


def _ladders(dset: DeviceSet) -> tuple[FosterLadder, FosterLadder]:
    if dset.thermal_mos is None or dset.thermal_sbd is None:
        raise ParameterError("device set has no thermal ladders")
    return dset.thermal_mos, dset.thermal_sbd


def run_electrothermal(scenario: Scenario, config: CouplerConfig = CouplerConfig()) -> TemperatureTrajectory:
    lad_m, lad_s = _ladders(scenario.dset)
    st_m = ThermalState.ambient(lad_m, scenario.t_amb)
    st_s = ThermalState.ambient(lad_s, scenario.t_amb)
    if config.adaptive:
        coupler = CouplerState(dt_th=config.dt_min, dt_min=config.dt_min, dt_max=config.dt_max,
                               delta_T_threshold=config.delta_T, xi=config.xi)
    else:
        coupler = None
    step_fixed = config.dt_fixed or config.dt_min
    edges = scenario.boundaries()
    traj = TemperatureTrajectory()
    traj.samples.append((0.0, st_m.t_j, st_s.t_j, st_m.t_c, 0.0, 0.0, 0.0))
    t = 0.0
    horizon = scenario.horizon
    while t < horizon * (1.0 - 1e-12):
        duty = scenario.duty_at(t)
        i_l = scenario.load_current(duty)
        op = OperatingPoint(scenario.v_dc, i_l, st_m.t_j) if i_l > 0 else None
        p_m, p_s = average_cycle_power(scenario.dset, op, duty, scenario.f_sw, t_grid=config.t_grid)
        dt = coupler.dt_th if coupler else step_fixed
        t_next = min(t + dt, horizon)
        for e in edges:
            if t < e < t_next:
                t_next = e
        # Land exactly on schedule edges and the horizon.
        if horizon - t_next < 1e-12 * horizon:
            t_next = horizon
        h = t_next - t
        tj_before = st_m.t_j
        st_m = foster_advance(st_m, lad_m, p_m, h)
        st_s = foster_advance(st_s, lad_s, p_s, h)
        t = t_next
        traj.samples.append((t, st_m.t_j, st_s.t_j, st_m.t_c, p_m, p_s, h))
        if coupler:
            coupler = coupler_next_step(coupler, st_m.t_j - tj_before)
    return traj


def duty_step_scenario(dset: DeviceSet, f_sw: float = 20e3, t_amb: float = 298.15) -> Scenario:
    """Five 2 s duty windows at 400 V into a 5 ohm / 1 mH load."""
    duties = (0.5, 0.4, 0.3, 0.4, 0.5)
    sched = tuple((2.0 * k, 2.0 * (k + 1), d) for k, d in enumerate(duties))
    return Scenario(dset=dset, v_dc=400.0, f_sw=f_sw, schedule=sched, r_l=5.0, l_l=1e-3, t_amb=t_amb)
