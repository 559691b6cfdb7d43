"""Device and circuit parameters of the SiC MOSFET / SBD switching pair.

All values are SI (V, A, F, H, ohm, K). Unit prefixes only appear at the
config surface (see :mod:`switchcell.config`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

# Tangent-fit constant of the square-law linearisation.
LAMBDA = math.sqrt(6.0)
GFS_FACTOR = 2.0 * (LAMBDA**2 + 3.0 * LAMBDA + 3.0) / (3.0 * LAMBDA * (1.0 + LAMBDA))

T_REF_DEFAULT = 298.15
T_VALID = (298.15, 423.15)


class ParameterError(ValueError):
    """A parameter violates a model invariant."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class PiecewiseCapacitance:
    """Piecewise-constant C(V).

    ``breakpoints`` are the interior segment boundaries; segment ``k`` spans
    ``[edges[k], edges[k+1]]`` with ``edges = (0, *breakpoints, v_max)``.
    """

    values: tuple[float, ...]
    breakpoints: tuple[float, ...]
    v_max: float = 1200.0

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        if len(self.values) != len(self.breakpoints) + 1:
            raise ParameterError(
                f"{len(self.values)} capacitance values need {len(self.values) - 1} breakpoints, "
                f"got {len(self.breakpoints)}"
            )
        edges = self.edges
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ParameterError(f"capacitance breakpoints must increase within (0, {self.v_max}): {edges}")
        if any(v <= 0 for v in self.values):
            raise ParameterError(f"capacitance values must be positive: {self.values}")
        if any(b > a for a, b in zip(self.values, self.values[1:])):
            raise ParameterError(f"capacitance must be non-increasing with voltage: {self.values}")

    @classmethod
    def constant(cls, value: float, v_max: float = 1200.0) -> PiecewiseCapacitance:
        return cls((value,), (), v_max)

    @property
    def edges(self) -> tuple[float, ...]:
        return (0.0, *self.breakpoints, self.v_max)

    @property
    def segments(self) -> list[tuple[float, float, float]]:
        e = self.edges
        return [(e[k], e[k + 1], c) for k, c in enumerate(self.values)]

    def at(self, v: float) -> float:
        return capacitance_at(self, v)

    def charge(self, v_a: float, v_b: float) -> float:
        """Charge moved when the voltage goes from ``v_a`` to ``v_b`` (signed)."""
        sign = 1.0
        if v_b < v_a:
            v_a, v_b, sign = v_b, v_a, -1.0
        q = 0.0
        for lo, hi, c in self.segments:
            a, b = max(lo, v_a), min(hi, v_b)
            if b > a:
                q += c * (b - a)
        return sign * q

    def shifted(self, delta: float) -> PiecewiseCapacitance:
        """Same breakpoints, every segment offset by ``delta`` farads."""
        return replace(self, values=tuple(v + delta for v in self.values))


def capacitance_at(cap: PiecewiseCapacitance, v: float) -> float:
    """Value of the segment containing ``v``; a boundary belongs to the lower segment."""
    if not (0.0 <= v <= cap.v_max) or math.isnan(v):
        raise DomainError(f"voltage {v!r} V outside capacitance range [0, {cap.v_max}] V")
    for k, b in enumerate(cap.breakpoints):
        if v <= b:
            return cap.values[k]
    return cap.values[-1]


@dataclass(frozen=True)
class TempCoeffs:
    """Linear V_th(T), k(T) slopes and the normalised R_ds(on)(T) quadratic."""

    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0
    e: float = 1.0

    def rdson_factor(self, t_j: float) -> float:
        return self.c * t_j * t_j + self.d * t_j + self.e


@dataclass(frozen=True)
class MosfetParams:
    v_th0: float
    k_fs: float
    r_ds_on: float
    c_gs: float
    c_gd: PiecewiseCapacitance
    c_ds: PiecewiseCapacitance
    l_d: float
    l_s: float
    temp_coeffs: TempCoeffs = field(default_factory=TempCoeffs)
    t_ref: float = T_REF_DEFAULT
    t_valid: tuple[float, float] = T_VALID

    def __post_init__(self):
        if self.k_fs <= 0:
            raise ParameterError(f"k_fs must be positive, got {self.k_fs}")
        if self.r_ds_on <= 0:
            raise ParameterError(f"r_ds_on must be positive, got {self.r_ds_on}")
        if self.c_gs <= 0:
            raise ParameterError(f"c_gs must be positive, got {self.c_gs}")
        if self.l_d < 0 or self.l_s < 0:
            raise ParameterError("l_d and l_s must be non-negative")
        norm = self.temp_coeffs.rdson_factor(self.t_ref)
        if abs(norm - 1.0) > 1e-9:
            raise ParameterError(
                f"R_ds(on) temperature polynomial must equal 1 at t_ref={self.t_ref} K, got {norm!r}"
            )

    @classmethod
    def from_linearized(cls, g_fs: float, v_th: float, i_ref: float, **kw) -> MosfetParams:
        """Build from a datasheet-style (g_fs, V_th) pair linearised at ``i_ref``."""
        k_fs, v_th0 = square_law_from_linearized(g_fs, v_th, i_ref)
        return cls(v_th0=v_th0, k_fs=k_fs, **kw)


@dataclass(frozen=True)
class SbdParams:
    v_f0: float
    c_f: PiecewiseCapacitance
    l_sd: float = 0.0

    def __post_init__(self):
        if self.v_f0 <= 0:
            raise ParameterError(f"v_f0 must be positive, got {self.v_f0}")
        if self.l_sd < 0:
            raise ParameterError("l_sd must be non-negative")


@dataclass(frozen=True)
class GateDrive:
    v_cc: float
    v_ee: float
    r_g_int: float
    r_g_ext: float
    c_gd_ext: float = 0.0

    def __post_init__(self):
        if self.v_cc <= self.v_ee:
            raise ParameterError(f"v_cc ({self.v_cc}) must exceed v_ee ({self.v_ee})")
        if self.r_g_int < 0 or self.r_g_ext < 0 or self.r_g_int + self.r_g_ext <= 0:
            raise ParameterError("gate resistances must be non-negative with a positive total")
        if self.c_gd_ext < 0:
            raise ParameterError("c_gd_ext must be non-negative")

    @property
    def r_g(self) -> float:
        return self.r_g_int + self.r_g_ext


@dataclass(frozen=True)
class CircuitParams:
    l_p: float
    c_l: float

    def __post_init__(self):
        if self.l_p < 0 or self.c_l < 0:
            raise ParameterError("l_p and c_l must be non-negative")


@dataclass(frozen=True)
class DeviceSet:
    mosfet: MosfetParams
    sbd: SbdParams
    drive: GateDrive
    circuit: CircuitParams
    thermal_mos: object = None
    thermal_sbd: object = None
    # Series resistance damping the turn-off ring; None means R_ds(on).
    r_damp_off: float | None = None

    def with_drive(self, **changes) -> DeviceSet:
        return replace(self, drive=replace(self.drive, **changes))

    def with_mosfet(self, **changes) -> DeviceSet:
        return replace(self, mosfet=replace(self.mosfet, **changes))

    def with_circuit(self, **changes) -> DeviceSet:
        return replace(self, circuit=replace(self.circuit, **changes))

    def at_temperature(self, t_j: float) -> DeviceSet:
        return replace(self, mosfet=apply_temperature(self.mosfet, t_j))


@dataclass(frozen=True)
class LinearizedChannel:
    g_fs: float
    v_th: float
    i_l: float
    lam: float = LAMBDA

    @property
    def v_miller(self) -> float:
        return self.i_l / self.g_fs + self.v_th

    @property
    def v_gs_t3(self) -> float:
        """Gate voltage when the drain current reaches half the load current."""
        return self.i_l / (2.0 * self.g_fs) + self.v_th

    def v_gs_for(self, i: float) -> float:
        return i / self.g_fs + self.v_th


@dataclass(frozen=True)
class EquivalentElements:
    c_iss: float
    c_oss: float
    c_f_eq: float
    l_stray: float
    r_g_total: float


def aggregate_equivalents(dset: DeviceSet, v_ds_regime: float) -> EquivalentElements:
    m, drv = dset.mosfet, dset.drive
    c_gd = capacitance_at(m.c_gd, v_ds_regime) + drv.c_gd_ext
    return EquivalentElements(
        c_iss=m.c_gs + c_gd,
        c_oss=c_gd + capacitance_at(m.c_ds, v_ds_regime),
        c_f_eq=capacitance_at(dset.sbd.c_f, v_ds_regime) + dset.circuit.c_l,
        l_stray=m.l_s + m.l_d + dset.circuit.l_p,
        r_g_total=drv.r_g,
    )


def apply_temperature(params: MosfetParams, t_j: float) -> MosfetParams:
    """Correct V_th, k_fs and R_ds(on) for junction temperature ``t_j`` (kelvin)."""
    lo, hi = params.t_valid
    if not (lo - 1e-9 <= t_j <= hi + 1e-9):
        raise DomainError(f"junction temperature {t_j} K outside validity window [{lo}, {hi}] K")
    tc = params.temp_coeffs
    dt = t_j - params.t_ref
    k_fs = params.k_fs + tc.b * dt
    r_on = params.r_ds_on * tc.rdson_factor(t_j)
    if k_fs <= 0 or r_on <= 0:
        raise ParameterError(f"temperature correction at {t_j} K gives k_fs={k_fs}, r_ds_on={r_on}")
    # Base values move; reference point and coefficients stay, so corrections
    # must always start from the t_ref parameter set, never be chained.
    return replace(params, v_th0=params.v_th0 + tc.a * dt, k_fs=k_fs, r_ds_on=r_on)


def linearize_channel(params: MosfetParams, i_l: float) -> LinearizedChannel:
    if not i_l > 0:
        raise DomainError(f"load current must be positive, got {i_l}")
    k = params.k_fs
    g_fs = GFS_FACTOR * math.sqrt(k * i_l)
    v_th = math.sqrt(i_l / k) / (1.0 + k) + params.v_th0
    return LinearizedChannel(g_fs=g_fs, v_th=v_th, i_l=i_l)


def square_law_from_linearized(g_fs: float, v_th: float, i_ref: float) -> tuple[float, float]:
    """Invert :func:`linearize_channel`: (g_fs, V_th) at ``i_ref`` -> (k_fs, v_th0)."""
    if g_fs <= 0 or i_ref <= 0:
        raise ParameterError("g_fs and i_ref must be positive")
    k = (g_fs / GFS_FACTOR) ** 2 / i_ref
    return k, v_th - math.sqrt(i_ref / k) / (1.0 + k)


def on_state_voltage(params: MosfetParams, i_l: float) -> float:
    return i_l * params.r_ds_on
