"""Uniformly (or event-) sampled switching waveforms shared by engine and oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COLUMNS = ("time_s", "v_gs_V", "v_ds_V", "i_d_A", "v_F_V", "i_F_A", "p_mos_W", "p_sbd_W")


@dataclass(frozen=True)
class WaveformTrace:
    t: np.ndarray
    v_gs: np.ndarray
    v_ds: np.ndarray
    i_d: np.ndarray
    v_f: np.ndarray
    i_f: np.ndarray

    @property
    def p_mos(self) -> np.ndarray:
        return self.v_ds * self.i_d

    @property
    def p_sbd(self) -> np.ndarray:
        return self.v_f * self.i_f

    def __len__(self):
        return len(self.t)

    def columns(self) -> list[np.ndarray]:
        return [self.t, self.v_gs, self.v_ds, self.i_d, self.v_f, self.i_f, self.p_mos, self.p_sbd]

    @classmethod
    def empty(cls) -> WaveformTrace:
        z = np.zeros(0)
        return cls(z, z, z, z, z, z)

    @classmethod
    def concat(cls, traces: list[WaveformTrace]) -> WaveformTrace:
        if not traces:
            return cls.empty()
        return cls(*(np.concatenate([getattr(tr, f) for tr in traces])
                     for f in ("t", "v_gs", "v_ds", "i_d", "v_f", "i_f")))

    def window(self, t_a: float, t_b: float) -> WaveformTrace:
        m = (self.t >= t_a) & (self.t <= t_b)
        return WaveformTrace(self.t[m], self.v_gs[m], self.v_ds[m], self.i_d[m], self.v_f[m], self.i_f[m])


def energies_from_trace(trace: WaveformTrace, window: tuple[float, float]) -> tuple[float, float]:
    """Trapezoidal MOSFET and diode energies over ``window`` (seconds).

    Window ends falling between samples are handled by linear interpolation of
    the sampled signals, so the result does not depend on sample alignment.
    """
    t_a, t_b = window
    if not t_b > t_a:
        raise ValueError(f"empty energy window ({t_a}, {t_b})")
    t = trace.t
    if len(t) < 2 or t_a < t[0] - 1e-15 or t_b > t[-1] + 1e-15:
        raise ValueError(f"window ({t_a}, {t_b}) not inside trace span")
    inner = (t > t_a) & (t < t_b)
    tt = np.concatenate([[t_a], t[inner], [t_b]])

    def pts(y):
        return np.concatenate([[np.interp(t_a, t, y)], y[inner], [np.interp(t_b, t, y)]])

    e_mos = np.trapezoid(pts(trace.v_ds) * pts(trace.i_d), tt)
    e_sbd = np.trapezoid(pts(trace.v_f) * pts(trace.i_f), tt)
    return float(e_mos), float(e_sbd)
