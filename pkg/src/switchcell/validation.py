"""Side-by-side runs of the segmented model and the reference solver."""

from __future__ import annotations

from dataclasses import dataclass

from .device import DeviceSet
from .oracle import OracleResult, energy_audit, integrate_dpt
from .trace import energies_from_trace
from .transient import OperatingPoint, TransientResult, simulate_turn_off, simulate_turn_on

LEAD = 10e-9  # quiescent time before the gate edge


@dataclass(frozen=True)
class EdgeComparison:
    edge: str
    engine: TransientResult
    oracle: OracleResult
    window: tuple[float, float]
    e_engine: float
    e_oracle: float
    e_oracle_sbd: float
    audit: dict

    @property
    def rel_error(self) -> float:
        return abs(self.e_engine - self.e_oracle) / abs(self.e_oracle)


def compare_edge(dset: DeviceSet, op: OperatingPoint, edge: str, dt: float = 5e-11) -> EdgeComparison:
    """Run one edge both ways and integrate the oracle over the engine's stage span.

    Turn-on starts from the freewheeling state, turn-off from the conducting
    state, so the comparison never depends on the phase of a previous ring.
    """
    hot = dset.at_temperature(op.t_j)
    d = hot.drive
    if edge == "on":
        eng = simulate_turn_on(dset, op, t0=LEAD)
        seq = [(0.0, d.v_ee), (LEAD, d.v_cc)]
        e_eng = eng.e_on_mos
    elif edge == "off":
        eng = simulate_turn_off(dset, op, t0=LEAD)
        seq = [(0.0, d.v_cc), (LEAD, d.v_ee)]
        e_eng = eng.e_off_mos
    else:
        raise ValueError(f"edge must be 'on' or 'off', got {edge!r}")
    window = (LEAD, eng.t_end)
    res = integrate_dpt(hot, op.v_dc, op.i_l, seq, dt, eng.t_end + 1e-9)
    e_mos, e_sbd = energies_from_trace(res.trace, window)
    l_loop = hot.mosfet.l_s + hot.mosfet.l_d + hot.circuit.l_p
    audit = energy_audit(res.trace, op.v_dc, op.i_l, l_loop, window)
    return EdgeComparison(edge, eng, res, window, e_eng, e_mos, e_sbd, audit)
