"""Parameter fitting from digitised datasheet curves."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .device import PiecewiseCapacitance, TempCoeffs

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class FitError(ValueError):
    def __init__(self, msg: str, residual: float | None = None):
        super().__init__(msg if residual is None else f"{msg} (residual {residual:.4g})")
        self.residual = residual


class SegmentationError(ValueError):
    pass


@dataclass(frozen=True)
class CurveSamples:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be 1-D arrays of equal length")
        if len(x) < 2:
            raise FitError(f"need at least 2 samples, got {len(x)}")
        if np.any(np.diff(x) <= 0):
            raise ValueError("sample x values must be strictly increasing")

    @classmethod
    def from_points(cls, points) -> CurveSamples:
        pts = list(points)
        return cls(np.array([p[0] for p in pts]), np.array([p[1] for p in pts]))

    def __len__(self):
        return len(self.x)


def read_columns(path: str | Path) -> dict[str, np.ndarray]:
    """Read a headed numeric CSV; lines starting with '#' are comments."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    try:
        float(header[0])
    except ValueError:
        pass
    else:
        raise ValueError(f"{path}: header row required")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    return {h: data[:, k] for k, h in enumerate(header)}


def read_curve(path: str | Path, y_column: str | None = None) -> CurveSamples:
    cols = read_columns(path)
    names = list(cols)
    y_name = y_column or names[1]
    return CurveSamples(cols[names[0]], cols[y_name])


# ---------------------------------------------------------------------------
# transfer characteristic


@dataclass(frozen=True)
class TransferFit:
    k_fs: float
    v_th0: float
    residual: float


def _monotone_prefix(s: CurveSamples) -> tuple[np.ndarray, np.ndarray]:
    drops = np.nonzero(np.diff(s.y) < 0)[0]
    # Allow zero-current samples below threshold; stop at the first decrease
    # after conduction starts.
    on = np.nonzero(s.y > 0)[0]
    stop = len(s.y)
    if len(on):
        later = drops[drops >= on[0]]
        if len(later):
            stop = later[0] + 1
    return s.x[:stop], s.y[:stop]


def _k_for(v, i, v_th0):
    u = np.clip(v - v_th0, 0.0, None) ** 2
    den = float(np.dot(u, u))
    if den == 0.0:
        return 0.0, float(np.sqrt(np.mean(i * i)))
    k = float(np.dot(u, i)) / den
    return k, float(np.sqrt(np.mean((k * u - i) ** 2)))


def fit_transfer_curve(samples: CurveSamples, tol: float = 1e-12) -> TransferFit:
    """Least-squares ``i = k (v - v_th0)^2`` fit above threshold."""
    if np.any(samples.y < 0):
        raise FitError("transfer-curve currents must be non-negative")
    v, i = _monotone_prefix(samples)
    on = i > 0
    if np.count_nonzero(on) < 3:
        raise FitError(f"need at least 3 conducting samples, got {int(np.count_nonzero(on))}")
    v_first = float(v[on][0])
    span = float(v[-1] - v[0]) or 1.0
    off = v[~on]
    lo = float(off.max()) if len(off) else v_first - span
    hi = v_first
    f = lambda x: _k_for(v, i, x)[1]  # noqa: E731
    a, b = lo, hi
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * max(1.0, abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    v_th0 = 0.5 * (a + b)
    k, res = _k_for(v, i, v_th0)
    if not k > 0:
        raise FitError(f"fit gave non-positive k_fs={k}", res)
    if not math.isfinite(res):
        raise FitError("fit did not converge", res)
    return TransferFit(k_fs=k, v_th0=v_th0, residual=res)


# ---------------------------------------------------------------------------
# capacitance


def segment_capacitance_curve(samples: CurveSamples, breakpoints, v_max: float | None = None) -> PiecewiseCapacitance:
    """Average the samples inside each segment; a breakpoint sample belongs to the lower segment."""
    bps = [float(b) for b in breakpoints]
    if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
        raise SegmentationError(f"breakpoints must increase strictly: {bps}")
    x, y = samples.x, samples.y
    top = float(v_max) if v_max is not None else max(1200.0, float(x[-1]))
    edges = [0.0, *bps, top]
    values = []
    for k in range(len(edges) - 1):
        lo, hi = edges[k], edges[k + 1]
        m = (x <= hi) & ((x > lo) if k else (x >= lo))
        if not m.any():
            raise SegmentationError(f"no samples in segment [{lo:g}, {hi:g}] V")
        seg = y[m]
        # A flat plateau keeps its exact value; a float mean can drift by an ulp.
        values.append(float(seg[0]) if np.ptp(seg) == 0 else float(np.mean(seg)))
    return PiecewiseCapacitance(tuple(values), tuple(bps), top)


# ---------------------------------------------------------------------------
# temperature coefficients


@dataclass(frozen=True)
class TemperatureFit:
    coeffs: TempCoeffs
    v_th0_ref: float
    k_ref: float
    r_ds_on_ref: float
    t_ref: float


def _check(s: CurveSamples, n: int, what: str, t_ref: float):
    if len(s) < n or np.ptp(s.x) == 0:
        raise FitError(f"{what}: need at least {n} distinct temperatures")
    if not (s.x[0] <= t_ref <= s.x[-1]):
        raise FitError(f"{what}: t_ref={t_ref} K outside sample range [{s.x[0]}, {s.x[-1]}] K")


def fit_temperature_coeffs(vth: CurveSamples, k: CurveSamples, rdson: CurveSamples, t_ref: float) -> TemperatureFit:
    _check(vth, 2, "threshold samples", t_ref)
    _check(k, 2, "transconductance samples", t_ref)
    _check(rdson, 3, "on-resistance samples", t_ref)
    a, v0 = np.polynomial.Polynomial.fit(vth.x - t_ref, vth.y, 1).convert().coef[[1, 0]]
    b, k0 = np.polynomial.Polynomial.fit(k.x - t_ref, k.y, 1).convert().coef[[1, 0]]
    # Quadratic in absolute temperature, scaled to 1 at t_ref.
    p = np.polynomial.Polynomial.fit(rdson.x, rdson.y, 2).convert().coef
    p = np.pad(p, (0, 3 - len(p)))
    r_ref = p[0] + p[1] * t_ref + p[2] * t_ref * t_ref
    if not r_ref > 0:
        raise FitError(f"fitted on-resistance at t_ref is {r_ref}")
    c, d = p[2] / r_ref, p[1] / r_ref
    # Close the normalisation exactly at t_ref.
    e = 1.0 - c * t_ref * t_ref - d * t_ref
    return TemperatureFit(TempCoeffs(float(a), float(b), float(c), float(d), float(e)),
                          float(v0), float(k0), float(r_ref), float(t_ref))


def read_temperature_samples(path: str | Path) -> tuple[CurveSamples, CurveSamples, CurveSamples]:
    """Four-column CSV: temperature, v_th0, k_fs, r_ds_on (header required)."""
    cols = read_columns(path)
    names = list(cols)
    if len(names) != 4:
        raise ValueError(f"{path}: expected 4 columns (t, v_th0, k_fs, r_ds_on), got {names}")
    t = cols[names[0]]
    return tuple(CurveSamples(t, cols[n]) for n in names[1:])

