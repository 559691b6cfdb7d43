"""Closed-form waveform pieces used inside a switching stage.

Every piece is a function of local stage time ``tau = t - t_start`` and can
report its value and first derivative, vectorised over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class Waveform:
    kind = "abstract"

    def value(self, tau):
        raise NotImplementedError

    def deriv(self, tau):
        raise NotImplementedError

    def __call__(self, tau):
        return self.value(tau)


@dataclass(frozen=True)
class Constant(Waveform):
    c: float
    kind = "constant"

    def value(self, tau):
        return np.full_like(np.asarray(tau, dtype=float), self.c)

    def deriv(self, tau):
        return np.zeros_like(np.asarray(tau, dtype=float))


@dataclass(frozen=True)
class Linear(Waveform):
    y0: float
    slope: float
    kind = "linear"

    def value(self, tau):
        return self.y0 + self.slope * np.asarray(tau, dtype=float)

    def deriv(self, tau):
        return np.full_like(np.asarray(tau, dtype=float), self.slope)


@dataclass(frozen=True)
class PiecewiseLinear(Waveform):
    """Linear between knots; used where a ramp crosses capacitance breakpoints."""

    taus: tuple[float, ...]
    ys: tuple[float, ...]
    kind = "piecewise-linear"

    def value(self, tau):
        return np.interp(np.asarray(tau, dtype=float), self.taus, self.ys)

    def deriv(self, tau):
        tau = np.asarray(tau, dtype=float)
        x, y = np.asarray(self.taus), np.asarray(self.ys)
        slopes = np.diff(y) / np.diff(x)
        k = np.clip(np.searchsorted(x, tau, side="right") - 1, 0, len(slopes) - 1)
        return slopes[k]


@dataclass(frozen=True)
class ExpApproach(Waveform):
    """y_inf + (y0 - y_inf) exp(-tau / time_const)."""

    y0: float
    y_inf: float
    time_const: float
    kind = "exponential-approach"

    def value(self, tau):
        return self.y_inf + (self.y0 - self.y_inf) * np.exp(-np.asarray(tau, dtype=float) / self.time_const)

    def deriv(self, tau):
        return -(self.y0 - self.y_inf) / self.time_const * np.exp(-np.asarray(tau, dtype=float) / self.time_const)


@dataclass(frozen=True)
class Cubic(Waveform):
    a: float
    b: float
    c: float
    d: float
    kind = "cubic"

    def value(self, tau):
        tau = np.asarray(tau, dtype=float)
        return ((self.a * tau + self.b) * tau + self.c) * tau + self.d

    def deriv(self, tau):
        tau = np.asarray(tau, dtype=float)
        return (3.0 * self.a * tau + 2.0 * self.b) * tau + self.c


@dataclass(frozen=True)
class DampedCosine(Waveform):
    """offset + amplitude * exp(-alpha tau) * cos(omega tau + phase)."""

    offset: float
    amplitude: float
    alpha: float
    omega: float
    phase: float = 0.0
    kind = "damped-cosine"

    def value(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self.offset + self.amplitude * np.exp(-self.alpha * tau) * np.cos(self.omega * tau + self.phase)

    def deriv(self, tau):
        tau = np.asarray(tau, dtype=float)
        arg = self.omega * tau + self.phase
        return -self.amplitude * np.exp(-self.alpha * tau) * (
            self.alpha * np.cos(arg) + self.omega * np.sin(arg))


@dataclass(frozen=True)
class KvlDerived(Waveform):
    """offset + a * f(tau) + b * g'(tau): loop voltages implied by Kirchhoff's law.

    Used for the diode voltage ``v_ds + L di_d/dt - V_DC`` and the drain
    voltage ``V_DC + v_F - L di_d/dt`` while the other quantity is prescribed.
    """

    offset: float
    a: float
    f: Waveform
    b: float
    g: Waveform
    kind = "kvl-derived"

    def value(self, tau):
        return self.offset + self.a * self.f.value(tau) + self.b * self.g.deriv(tau)

    def deriv(self, tau):
        raise NotImplementedError("second derivatives are not tracked")


def describe(w: Waveform) -> dict:
    """Plain-dict form for manifests and debugging."""
    out = {"kind": w.kind}
    for k, v in vars(w).items():
        out[k] = describe(v) if isinstance(v, Waveform) else v
    return out
