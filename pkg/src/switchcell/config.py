"""Line-based ``key = value`` configuration with unit suffixes.

Sections: [mosfet], [sbd], [drive], [circuit], [thermal.mosfet],
[thermal.sbd], [run]. Values are normalised to SI at parse time. A ``[run]``
section may name a ``profile`` (bundled name or path) whose sections are
loaded first and then overridden key by key.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from .device import (
    CircuitParams,
    DeviceSet,
    GateDrive,
    MosfetParams,
    PiecewiseCapacitance,
    SbdParams,
    TempCoeffs,
)
from .thermal import FosterLadder

BUNDLED_PROFILES = {"cmf20120d": "cmf20120d.ini"}


class ConfigError(ValueError):
    pass


_PREFIX = {"p": 1e-12, "n": 1e-9, "u": 1e-6, "µ": 1e-6, "m": 1e-3, "": 1.0, "k": 1e3, "M": 1e6}


def _units() -> dict[str, tuple[str, float]]:
    table = {}
    for base, dim, prefixes in (
        ("V", "V", "mk"), ("A", "A", "m"), ("S", "S", "m"), ("ohm", "ohm", "mkM"),
        ("F", "F", "pnum"), ("H", "H", "pnum"), ("s", "s", "pnum"), ("Hz", "Hz", "kM"), ("W", "W", "mk"),
    ):
        table[base] = (dim, 1.0)
        for p in prefixes:
            table[p + base] = (dim, _PREFIX[p])
    table["Ω"] = ("ohm", 1.0)
    table["mΩ"] = ("ohm", 1e-3)
    for u in ("K/W", "J/K", "K", "V/K", "A/V2", "A/V^2", "A/V2/K", "A/V^2/K", "1/K", "1/K2"):
        table[u] = (u.replace("^", ""), 1.0)
    return table


UNITS = _units()

# Expected dimension per key: "" means a bare number, "str" free text,
# a trailing "[]" a comma-separated list. The third field is the sign rule.
SCHEMA: dict[str, dict[str, tuple[str, str]]] = {
    "mosfet": {
        "g_fs": ("S", "pos"), "v_th": ("V", ""), "i_ref": ("A", "pos"),
        "k_fs": ("A/V2", "pos"), "v_th0": ("V", ""),
        "r_ds_on": ("ohm", "pos"), "c_gs": ("F", "pos"),
        "c_gd": ("F[]", "pos"), "c_ds": ("F[]", "pos"), "breakpoints": ("V[]", "pos"), "v_max": ("V", "pos"),
        "l_d": ("H", "nonneg"), "l_s": ("H", "nonneg"), "t_ref": ("K", "pos"),
        "t_min": ("K", "pos"), "t_max": ("K", "pos"),
        "temp_a": ("V/K", ""), "temp_b": ("A/V2/K", ""), "temp_c": ("", ""), "temp_d": ("", ""), "temp_e": ("", ""),
    },
    "sbd": {"v_f0": ("V", "pos"), "c_f": ("F[]", "pos"), "breakpoints": ("V[]", "pos"),
            "v_max": ("V", "pos"), "l_sd": ("H", "nonneg")},
    "drive": {"v_cc": ("V", ""), "v_ee": ("V", ""), "r_g_int": ("ohm", "nonneg"),
              "r_g_ext": ("ohm", "nonneg"), "c_gd_ext": ("F", "nonneg")},
    "circuit": {"l_p": ("H", "nonneg"), "c_l": ("F", "nonneg"), "r_damp_off": ("ohm", "nonneg")},
    "thermal.mosfet": {"r_th": ("K/W[]", "pos"), "c_th": ("J/K[]", "pos"),
                       "case_r_th": ("K/W[]", "pos"), "case_c_th": ("J/K[]", "pos")},
    "run": {
        "profile": ("str", ""), "mode": ("str", ""), "v_dc": ("V", "pos"), "i_l": ("A", "pos"),
        "t_j": ("K", "pos"), "dt": ("s", "pos"), "out": ("str", ""),
        "sweep_axis": ("str", ""), "sweep_values": ("str", ""), "r_g_meaning": ("str", ""),
        "reference": ("str", ""), "oracle_dt": ("s", "pos"), "horizon": ("s", "pos"),
        "f_sw": ("Hz", "pos"), "schedule": ("str", ""), "r_l": ("ohm", "pos"), "l_l": ("H", "nonneg"),
        "t_amb": ("K", "pos"), "adaptive": ("str", ""), "xi": ("s", "pos"), "dt_min": ("s", "pos"),
        "dt_max": ("s", "pos"), "delta_t": ("K", "pos"), "dt_fixed": ("s", "pos"), "t_grid": ("K", "nonneg"),
    },
}
SCHEMA["thermal.sbd"] = SCHEMA["thermal.mosfet"]

SWEEP_UNITS = {"r_g_ext": "ohm", "c_gd_ext": "F", "t_j": "K", "v_dc": "V", "i_l": "A"}
MODES = ("dpt-on", "dpt-off", "dpt-both", "oracle", "sweep", "mission")

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


def parse_quantity(text: str, dim: str, where: str = "") -> float:
    m = _NUM.match(text)
    if not m:
        raise ConfigError(f"{where}: cannot parse number from {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    if unit in ("degC", "°C"):
        if dim != "K":
            raise ConfigError(f"{where}: unit {unit!r} does not fit a {dim or 'plain'} quantity")
        return value + 273.15
    if not unit:
        return value
    if unit not in UNITS:
        raise ConfigError(f"{where}: unknown unit {unit!r}")
    udim, factor = UNITS[unit]
    if udim != dim:
        raise ConfigError(f"{where}: unit {unit!r} does not fit a {dim or 'plain'} quantity")
    return value * factor


@dataclass
class RawConfig:
    """Section -> key -> (text, line number, source)."""

    sections: dict[str, dict[str, tuple[str, int, str]]] = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.sections.get(section, {}).get(key)


def tokenize(text: str, source: str = "<config>") -> RawConfig:
    raw = RawConfig()
    current = None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("["):
            if not s.endswith("]"):
                raise ConfigError(f"{source}:{n}: malformed section header {s!r}")
            current = s[1:-1].strip()
            if current not in SCHEMA:
                raise ConfigError(f"{source}:{n}: unknown section [{current}]")
            raw.sections.setdefault(current, {})
            continue
        if "=" not in s:
            raise ConfigError(f"{source}:{n}: expected 'key = value', got {s!r}")
        if current is None:
            raise ConfigError(f"{source}:{n}: key outside any section")
        key, value = (p.strip() for p in s.split("=", 1))
        if key not in SCHEMA[current]:
            raise ConfigError(f"{source}:{n}: unknown key [{current}].{key}")
        prev = raw.sections[current].get(key)
        if prev is not None:
            raise ConfigError(f"{source}: duplicate key [{current}].{key} on lines {prev[1]} and {n}")
        raw.sections[current][key] = (value, n, source)
    return raw


def _value(raw: RawConfig, section: str, key: str, required: bool = True, default=None):
    entry = raw.get(section, key)
    if entry is None:
        if required:
            raise ConfigError(f"missing key [{section}].{key}")
        return default
    text, line, source = entry
    where = f"{source}:{line}: [{section}].{key}"
    dim, sign = SCHEMA[section][key]
    if dim == "str":
        return text
    if dim.endswith("[]"):
        vals = [parse_quantity(p, dim[:-2], where) for p in text.split(",") if p.strip()]
        if not vals:
            raise ConfigError(f"{where}: empty list")
    else:
        vals = [parse_quantity(text, dim, where)]
    for v in vals:
        if sign == "pos" and not v > 0:
            raise ConfigError(f"{where}: must be positive, got {v:g}")
        if sign == "nonneg" and v < 0:
            raise ConfigError(f"{where}: must be non-negative, got {v:g}")
    return vals if dim.endswith("[]") else vals[0]


def _build(section: str, ctor, *args, **kw):
    try:
        return ctor(*args, **kw)
    except ValueError as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def _cap(raw, section, key, bps, v_max):
    vals = _value(raw, section, key)
    return _build(section, PiecewiseCapacitance, tuple(vals), tuple(bps), v_max)


def build_device_set(raw: RawConfig) -> DeviceSet:
    sec = "mosfet"
    bps = _value(raw, sec, "breakpoints", False, [])
    v_max = _value(raw, sec, "v_max", False, 1200.0)
    t_ref = _value(raw, sec, "t_ref", False, 298.15)
    coeffs = _build(sec, TempCoeffs, *(float(_value(raw, sec, f"temp_{x}", False, d))
                                       for x, d in zip("abcde", (0, 0, 0, 0, 1))))
    common = dict(
        r_ds_on=_value(raw, sec, "r_ds_on"), c_gs=_value(raw, sec, "c_gs"),
        c_gd=_cap(raw, sec, "c_gd", bps, v_max), c_ds=_cap(raw, sec, "c_ds", bps, v_max),
        l_d=_value(raw, sec, "l_d"), l_s=_value(raw, sec, "l_s"),
        temp_coeffs=coeffs, t_ref=t_ref,
        t_valid=(_value(raw, sec, "t_min", False, 298.15), _value(raw, sec, "t_max", False, 423.15)),
    )
    has_lin = raw.get(sec, "g_fs") is not None
    has_sq = raw.get(sec, "k_fs") is not None
    if has_lin == has_sq:
        raise ConfigError("[mosfet]: give either g_fs/v_th/i_ref or k_fs/v_th0")
    if has_lin:
        mos = _build(sec, MosfetParams.from_linearized, _value(raw, sec, "g_fs"), _value(raw, sec, "v_th"),
                     _value(raw, sec, "i_ref"), **common)
    else:
        mos = _build(sec, MosfetParams, v_th0=_value(raw, sec, "v_th0"), k_fs=_value(raw, sec, "k_fs"), **common)

    sec = "sbd"
    sbps = _value(raw, sec, "breakpoints", False, bps)
    sbd = _build(sec, SbdParams, _value(raw, sec, "v_f0"),
                 _cap(raw, sec, "c_f", sbps, _value(raw, sec, "v_max", False, v_max)),
                 _value(raw, sec, "l_sd", False, 0.0))
    sec = "drive"
    drive = _build(sec, GateDrive, _value(raw, sec, "v_cc"), _value(raw, sec, "v_ee"),
                   _value(raw, sec, "r_g_int"), _value(raw, sec, "r_g_ext"),
                   _value(raw, sec, "c_gd_ext", False, 0.0))
    sec = "circuit"
    circuit = _build(sec, CircuitParams, _value(raw, sec, "l_p"), _value(raw, sec, "c_l"))
    ladders = []
    for sec in ("thermal.mosfet", "thermal.sbd"):
        if sec not in raw.sections:
            ladders.append(None)
            continue
        r, c = _value(raw, sec, "r_th"), _value(raw, sec, "c_th")
        cr, cc = _value(raw, sec, "case_r_th", False, []), _value(raw, sec, "case_c_th", False, [])
        if len(r) != len(c) or len(cr) != len(cc):
            raise ConfigError(f"[{sec}]: r and c lists must have equal length")
        ladders.append(_build(sec, FosterLadder, tuple(zip(r, c)), tuple(zip(cr, cc))))
    return DeviceSet(mos, sbd, drive, circuit, ladders[0], ladders[1],
                     _value(raw, "circuit", "r_damp_off", False, None))


@dataclass(frozen=True)
class RunConfig:
    mode: str = "dpt-both"
    v_dc: float = 400.0
    i_l: float = 15.0
    t_j: float = 298.15
    dt: float = 1e-10
    out: str | None = None
    sweep_axis: str | None = None
    sweep_values: tuple[float, ...] = ()
    r_g_meaning: str = "total"
    reference: str | None = None
    oracle_dt: float = 5e-11
    horizon: float | None = None
    f_sw: float = 20e3
    schedule: tuple[tuple[float, float, float], ...] = ()
    r_l: float = 5.0
    l_l: float = 1e-3
    t_amb: float = 298.15
    adaptive: bool = True
    xi: float = 1e-4
    dt_min: float = 1e-5
    dt_max: float = 1e-2
    delta_t: float = 1.0
    dt_fixed: float | None = None
    t_grid: float = 0.1


def build_run(raw: RawConfig) -> RunConfig:
    sec = "run"
    kw = {}
    for f in fields(RunConfig):
        if f.name in ("sweep_values", "schedule", "adaptive") or raw.get(sec, f.name) is None:
            continue
        kw[f.name] = _value(raw, sec, f.name)
    mode = kw.get("mode", "dpt-both")
    if mode not in MODES:
        raise ConfigError(f"[run].mode must be one of {', '.join(MODES)}, got {mode!r}")
    if kw.get("r_g_meaning", "total") not in ("total", "external"):
        raise ConfigError("[run].r_g_meaning must be 'total' or 'external'")
    if raw.get(sec, "adaptive") is not None:
        text = raw.get(sec, "adaptive")[0].lower()
        if text not in ("true", "false", "yes", "no", "1", "0"):
            raise ConfigError(f"[run].adaptive must be a boolean, got {text!r}")
        kw["adaptive"] = text in ("true", "yes", "1")
    if raw.get(sec, "sweep_values") is not None:
        axis = kw.get("sweep_axis")
        if axis not in SWEEP_UNITS:
            raise ConfigError(f"[run].sweep_axis must be one of {', '.join(SWEEP_UNITS)}, got {axis!r}")
        text, line, source = raw.get(sec, "sweep_values")
        where = f"{source}:{line}: [run].sweep_values"
        kw["sweep_values"] = tuple(parse_quantity(p, SWEEP_UNITS[axis], where) for p in text.split(",") if p.strip())
    if mode == "sweep" and not kw.get("sweep_values"):
        raise ConfigError("[run]: sweep mode needs sweep_axis and a non-empty sweep_values list")
    if raw.get(sec, "schedule") is not None:
        text, line, source = raw.get(sec, "schedule")
        rows = []
        for part in text.split(";"):
            if not part.strip():
                continue
            bits = part.split()
            if len(bits) != 3:
                raise ConfigError(f"{source}:{line}: [run].schedule entries are 't_start t_end duty', got {part!r}")
            rows.append(tuple(float(b) for b in bits))
        kw["schedule"] = tuple(rows)
    if mode == "mission" and not kw.get("schedule"):
        raise ConfigError("[run]: mission mode needs a schedule")
    return RunConfig(**kw)


def bundled_profile_text(name: str) -> str:
    return resources.files("switchcell.data").joinpath(BUNDLED_PROFILES[name]).read_text()


def _merge(base: RawConfig, top: RawConfig) -> RawConfig:
    out = RawConfig({k: dict(v) for k, v in base.sections.items()})
    for sec, keys in top.sections.items():
        out.sections.setdefault(sec, {}).update(keys)
    return out


def parse_config(text: str, source: str = "<config>", base_dir: str | Path | None = None) -> tuple[RunConfig, DeviceSet]:
    raw = tokenize(text, source)
    prof = raw.get("run", "profile")
    if prof is not None:
        name = prof[0]
        if name in BUNDLED_PROFILES:
            base = tokenize(bundled_profile_text(name), name)
        else:
            path = Path(base_dir or ".") / name
            if not path.exists():
                raise ConfigError(f"{source}:{prof[1]}: profile {name!r} not found")
            base = tokenize(path.read_text(), str(path))
        raw = _merge(base, raw)
    return build_run(raw), build_device_set(raw)


def load_config(path: str | Path) -> tuple[RunConfig, DeviceSet]:
    p = Path(path)
    return parse_config(p.read_text(), str(p), p.parent)


def load_profile(name: str = "cmf20120d") -> DeviceSet:
    """Bundled device profile by name, or a profile file path."""
    if name in BUNDLED_PROFILES:
        return build_device_set(tokenize(bundled_profile_text(name), name))
    return build_device_set(tokenize(Path(name).read_text(), name))


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_device_set(dset: DeviceSet) -> str:
    """Normalised SI text; parsing it back gives an equal DeviceSet."""
    m, s, d, c = dset.mosfet, dset.sbd, dset.drive, dset.circuit
    tc = m.temp_coeffs
    lst = lambda xs: ", ".join(_fmt(x) for x in xs)  # noqa: E731
    lines = [
        "[mosfet]",
        f"k_fs = {_fmt(m.k_fs)}", f"v_th0 = {_fmt(m.v_th0)}", f"r_ds_on = {_fmt(m.r_ds_on)}",
        f"c_gs = {_fmt(m.c_gs)}", f"c_gd = {lst(m.c_gd.values)}", f"c_ds = {lst(m.c_ds.values)}",
    ]
    if m.c_gd.breakpoints != m.c_ds.breakpoints or m.c_gd.v_max != m.c_ds.v_max:
        raise ConfigError("MOSFET capacitances must share breakpoints to be written to one section")
    if m.c_gd.breakpoints:
        lines.append(f"breakpoints = {lst(m.c_gd.breakpoints)}")
    lines += [
        f"v_max = {_fmt(m.c_gd.v_max)}",
        f"l_d = {_fmt(m.l_d)}", f"l_s = {_fmt(m.l_s)}", f"t_ref = {_fmt(m.t_ref)}",
        f"t_min = {_fmt(m.t_valid[0])}", f"t_max = {_fmt(m.t_valid[1])}",
        f"temp_a = {_fmt(tc.a)}", f"temp_b = {_fmt(tc.b)}", f"temp_c = {_fmt(tc.c)}",
        f"temp_d = {_fmt(tc.d)}", f"temp_e = {_fmt(tc.e)}",
        "", "[sbd]", f"v_f0 = {_fmt(s.v_f0)}", f"c_f = {lst(s.c_f.values)}",
    ]
    if s.c_f.breakpoints:
        lines.append(f"breakpoints = {lst(s.c_f.breakpoints)}")
    lines += [
        f"v_max = {_fmt(s.c_f.v_max)}", f"l_sd = {_fmt(s.l_sd)}",
        "", "[drive]", f"v_cc = {_fmt(d.v_cc)}", f"v_ee = {_fmt(d.v_ee)}", f"r_g_int = {_fmt(d.r_g_int)}",
        f"r_g_ext = {_fmt(d.r_g_ext)}", f"c_gd_ext = {_fmt(d.c_gd_ext)}",
        "", "[circuit]", f"l_p = {_fmt(c.l_p)}", f"c_l = {_fmt(c.c_l)}",
    ]
    if dset.r_damp_off is not None:
        lines.append(f"r_damp_off = {_fmt(dset.r_damp_off)}")
    for sec, lad in (("thermal.mosfet", dset.thermal_mos), ("thermal.sbd", dset.thermal_sbd)):
        if lad is None:
            continue
        lines += ["", f"[{sec}]", f"r_th = {lst(r for r, _ in lad.stages)}", f"c_th = {lst(c for _, c in lad.stages)}"]
        if lad.case_to_ambient:
            lines += [f"case_r_th = {lst(r for r, _ in lad.case_to_ambient)}",
                      f"case_c_th = {lst(c for _, c in lad.case_to_ambient)}"]
    return "\n".join(lines) + "\n"


def profile_fragment_from_fit(section: str, values: dict) -> str:
    """Config text for fitted values, ready to paste into a profile."""
    lines = [f"[{section}]"]
    for k, v in values.items():
        lines.append(f"{k} = {', '.join(_fmt(x) for x in v) if isinstance(v, (list, tuple)) else _fmt(v)}")
    return "\n".join(lines) + "\n"
