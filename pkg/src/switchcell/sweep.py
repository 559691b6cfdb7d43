"""Parameter sweeps over the segmented switching model."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .config import RunConfig
from .device import DeviceSet
from .transient import OperatingPoint, simulate_turn_off, simulate_turn_on

# Reference-table block for each sweep axis, and the factor from file units to SI.
REFERENCE_BLOCKS = {"r_g_ext": ("r_g", 1.0), "c_gd_ext": ("c_gd_ext", 1e-12)}


@dataclass(frozen=True)
class SweepRow:
    value: float
    e_on: float | None
    e_off: float | None
    error: str | None = None
    ref_on: float | None = None
    ref_off: float | None = None
    ref_total: float | None = None

    @property
    def e_total(self) -> float | None:
        return None if self.e_on is None else self.e_on + self.e_off

    def deviation(self, which: str) -> float | None:
        sim = {"on": self.e_on, "off": self.e_off, "total": self.e_total}[which]
        ref = {"on": self.ref_on, "off": self.ref_off, "total": self.ref_total}[which]
        if sim is None or ref is None:
            return None
        return abs(sim - ref) / ref


def reference_rows(path: str | Path | None = None, source: str = "simulation") -> list[dict]:
    if path is None or path == "bundled":
        text = resources.files("switchcell.data").joinpath("switching_energy_reference.csv").read_text()
    else:
        text = Path(path).read_text()
    return [r for r in csv.DictReader(text.splitlines()) if r["source"] == source]


def lookup_reference(rows: list[dict], axis: str, value: float):
    if axis not in REFERENCE_BLOCKS:
        return None
    block, scale = REFERENCE_BLOCKS[axis]
    for r in rows:
        if r["sweep"] == block and math.isclose(float(r["value"]) * scale, value, rel_tol=1e-9, abs_tol=1e-21):
            return tuple(1e-6 * float(r[k]) for k in ("e_on_uJ", "e_off_uJ", "e_total_uJ"))
    return None


def apply_axis(dset: DeviceSet, op: OperatingPoint, axis: str, value: float, r_g_meaning: str = "total"):
    """Device set and operating point with one swept quantity replaced."""
    if axis == "r_g_ext":
        ext = value - dset.drive.r_g_int if r_g_meaning == "total" else value
        if ext < 0:
            raise ValueError(f"total gate resistance {value} ohm below the internal {dset.drive.r_g_int} ohm")
        return dset.with_drive(r_g_ext=ext), op
    if axis == "c_gd_ext":
        return dset.with_drive(c_gd_ext=value), op
    if axis in ("t_j", "v_dc", "i_l"):
        kw = {"v_dc": op.v_dc, "i_l": op.i_l, "t_j": op.t_j, axis: value}
        return dset, OperatingPoint(**kw)
    raise ValueError(f"unknown sweep axis {axis!r}")


def switching_energies_at(dset: DeviceSet, op: OperatingPoint) -> tuple[float, float]:
    return simulate_turn_on(dset, op).e_on_mos, simulate_turn_off(dset, op).e_off_mos


def run_sweep(run: RunConfig, dset: DeviceSet, reference: str | Path | None = "bundled") -> list[SweepRow]:
    op = OperatingPoint(run.v_dc, run.i_l, run.t_j)
    ref = reference_rows(reference) if reference is not None else []

    def one(value):
        r = lookup_reference(ref, run.sweep_axis, value) or (None, None, None)
        try:
            ds, o = apply_axis(dset, op, run.sweep_axis, value, run.r_g_meaning)
            e_on, e_off = switching_energies_at(ds, o)
            return SweepRow(value, e_on, e_off, None, *r)
        except ValueError as exc:
            return SweepRow(value, None, None, str(exc), *r)

    with ThreadPoolExecutor() as pool:
        return list(pool.map(one, run.sweep_values))


# Display unit and scale from SI for the swept value column.
DISPLAY_UNITS = {"r_g_ext": ("ohm", 1.0), "c_gd_ext": ("pF", 1e12), "t_j": ("K", 1.0), "v_dc": ("V", 1.0),
                 "i_l": ("A", 1.0)}

SWEEP_HEADER = ("value", "e_on_uJ", "e_off_uJ", "e_total_uJ", "ref_on_uJ", "ref_off_uJ", "ref_total_uJ",
                "dev_on_pct", "dev_off_pct", "dev_total_pct", "status")


def sweep_header(axis: str | None = None) -> tuple[str, ...]:
    if axis not in DISPLAY_UNITS:
        return SWEEP_HEADER
    return (f"{axis}_{DISPLAY_UNITS[axis][0]}",) + SWEEP_HEADER[1:]


def sweep_table(rows: list[SweepRow], axis: str | None = None) -> list[tuple]:
    def uj(x):
        return "" if x is None else 1e6 * x

    def pct(x):
        return "" if x is None else 100.0 * x

    scale = DISPLAY_UNITS.get(axis, ("", 1.0))[1]
    out = []
    for r in rows:
        out.append((r.value * scale, uj(r.e_on), uj(r.e_off), uj(r.e_total), uj(r.ref_on), uj(r.ref_off), uj(r.ref_total),
                    pct(r.deviation("on")), pct(r.deviation("off")), pct(r.deviation("total")),
                    "ok" if r.error is None else f"failed: {r.error}"))
    return out
