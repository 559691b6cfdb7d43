"""Command-line entry point: ``switchcell run|sweep|mission|extract``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, load_config, profile_fragment_from_fit
from .device import DomainError, ParameterError
from .export import aligned_text, export_trace_csv, write_manifest, write_table
from .extraction import (
    FitError,
    SegmentationError,
    fit_temperature_coeffs,
    fit_transfer_curve,
    read_curve,
    read_temperature_samples,
    segment_capacitance_curve,
)
from .multirate import CouplerConfig, OverlapError, Scenario, run_electrothermal
from .oracle import SolverError
from .sweep import run_sweep, sweep_header, sweep_table
from .transient import (
    OperatingPoint,
    ResolutionError,
    StagePlanError,
    sample_trace,
    simulate_cycle,
    simulate_turn_off,
    simulate_turn_on,
)
from .validation import compare_edge

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2
NUMERIC_ERRORS = (StagePlanError, SolverError, OverlapError, ResolutionError, FloatingPointError)
INVALID_ERRORS = (ConfigError, ParameterError, DomainError, FitError, SegmentationError, OSError, ValueError)


def _out_dir(args, run) -> Path:
    out = Path(args.out or run.out or "switchcell-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _stage_rows(result):
    return [(s.label, s.t_start, s.t_end, s.e_mos, s.e_sbd) for s in result.stages]


def cmd_run(args) -> int:
    run, dset = load_config(args.config)
    if args.dt:
        run = replace(run, dt=args.dt)
    if run.mode == "sweep":
        return cmd_sweep(args)
    if run.mode == "mission":
        return cmd_mission(args)
    out = _out_dir(args, run)
    op = OperatingPoint(run.v_dc, run.i_l, run.t_j)
    text = Path(args.config).read_text()
    written = []
    if run.mode == "oracle":
        rows = []
        for edge in ("on", "off"):
            cmp = compare_edge(dset, op, edge, run.oracle_dt)
            export_trace_csv(cmp.oracle.trace, out / f"oracle_{edge}.csv")
            export_trace_csv(sample_trace(cmp.engine, run.dt), out / f"engine_{edge}.csv")
            written += [f"oracle_{edge}.csv", f"engine_{edge}.csv"]
            rows.append((edge, 1e6 * cmp.e_engine, 1e6 * cmp.e_oracle, 100.0 * cmp.rel_error,
                         cmp.audit["closure"], cmp.oracle.kcl_residual_max))
        header = ("edge", "engine_uJ", "oracle_uJ", "diff_pct", "audit_closure", "kcl_residual_A")
        write_table(out / "oracle_summary.csv", header, rows)
        written.append("oracle_summary.csv")
        print(aligned_text(header, rows, "{:.4g}"), end="")
    else:
        if run.mode == "dpt-on":
            res = simulate_turn_on(dset, op)
        elif run.mode == "dpt-off":
            res = simulate_turn_off(dset, op)
        else:
            res = simulate_cycle(dset, op)
        export_trace_csv(sample_trace(res, run.dt), out / "trace.csv")
        write_table(out / "stages.csv", ("label", "t_start_s", "t_end_s", "e_mos_J", "e_sbd_J"), _stage_rows(res))
        written += ["trace.csv", "stages.csv"]
        for w in res.metadata.get("warnings", []):
            print(f"warning: {w}", file=sys.stderr)
        print(f"E_on  = {1e6 * res.e_on_mos:.3f} uJ (diode {1e6 * res.e_on_sbd:.3f} uJ)")
        print(f"E_off = {1e6 * res.e_off_mos:.3f} uJ (diode {1e6 * res.e_off_sbd:.3f} uJ)")
    write_manifest(out, mode=run.mode, config_text=text, outputs=written)
    return EXIT_OK


def cmd_sweep(args) -> int:
    run, dset = load_config(args.config)
    if not run.sweep_values:
        raise ConfigError("[run]: sweep needs sweep_axis and sweep_values")
    out = _out_dir(args, run)
    rows = sweep_table(run_sweep(run, dset, run.reference or "bundled"), run.sweep_axis)
    header = sweep_header(run.sweep_axis)
    write_table(out / "sweep.csv", header, rows)
    txt = aligned_text(header, rows)
    (out / "sweep.txt").write_text(txt)
    print(txt, end="")
    write_manifest(out, mode="sweep", config_text=Path(args.config).read_text(), outputs=["sweep.csv", "sweep.txt"],
                   extra={"sweep_axis": run.sweep_axis, "r_g_meaning": run.r_g_meaning})
    failed = [r for r in rows if r[-1] != "ok"]
    return EXIT_NUMERIC if failed and len(failed) == len(rows) else EXIT_OK


def cmd_mission(args) -> int:
    run, dset = load_config(args.config)
    out = _out_dir(args, run)
    scen = Scenario(dset=dset, v_dc=run.v_dc, f_sw=run.f_sw, schedule=run.schedule, r_l=run.r_l,
                    l_l=run.l_l, t_amb=run.t_amb, horizon=run.horizon)
    cfg = CouplerConfig(adaptive=run.adaptive, dt_min=run.dt_min, dt_max=run.dt_max, xi=run.xi,
                        delta_T=run.delta_t, dt_fixed=run.dt_fixed, t_grid=run.t_grid)
    traj = run_electrothermal(scen, cfg)
    c = 273.15
    write_table(out / "trajectory.csv", ("time_s", "p_mos_W", "p_sbd_W", "tj_mos_C", "tj_sbd_C", "tc_C"),
                [(t, pm, ps, tm - c, ts - c, tc - c) for t, tm, ts, tc, pm, ps, _ in traj.samples])
    write_table(out / "coupler_steps.csv", ("time_s", "dt_th_s"), [(s[0], s[6]) for s in traj.samples[1:]])
    last = traj.samples[-1]
    print(f"{traj.exchange_count} exchanges; final T_j MOSFET {last[1] - c:.2f} C, SBD {last[2] - c:.2f} C")
    write_manifest(out, mode="mission", config_text=Path(args.config).read_text(),
                   outputs=["trajectory.csv", "coupler_steps.csv"], extra={"exchange_count": traj.exchange_count})
    return EXIT_OK


def cmd_extract(args) -> int:
    if args.kind == "transfer":
        fit = fit_transfer_curve(read_curve(args.csv))
        text = profile_fragment_from_fit("mosfet", {"k_fs": fit.k_fs, "v_th0": fit.v_th0})
        print(f"# rms residual {fit.residual:.6g} A")
    elif args.kind == "capacitance":
        if not args.breakpoints:
            raise ConfigError("--breakpoints is required for capacitance segmentation")
        bps = [float(b) for b in args.breakpoints.split(",")]
        cap = segment_capacitance_curve(read_curve(args.csv), bps)
        text = profile_fragment_from_fit(args.section, {args.key: list(cap.values), "breakpoints": bps})
    else:
        vth, k, r = read_temperature_samples(args.csv)
        fit = fit_temperature_coeffs(vth, k, r, args.t_ref)
        tc = fit.coeffs
        text = profile_fragment_from_fit("mosfet", {
            "temp_a": tc.a, "temp_b": tc.b, "temp_c": tc.c, "temp_d": tc.d, "temp_e": tc.e, "t_ref": fit.t_ref})
    print(text, end="")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / f"extract_{args.kind}.ini").write_text(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="switchcell", description="SiC MOSFET/SBD switching-loss and electro-thermal simulator")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (("run", cmd_run, "switching transient or oracle comparison"),
                               ("sweep", cmd_sweep, "parameter sweep with reference deviations"),
                               ("mission", cmd_mission, "electro-thermal mission profile")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config")
        sp.add_argument("--out")
        sp.add_argument("--dt", type=float, help="trace sampling step in seconds")
        sp.set_defaults(func=fn)
    ex = sub.add_parser("extract", help="fit parameters from a digitised curve")
    ex.add_argument("csv")
    ex.add_argument("--kind", choices=("transfer", "capacitance", "thermal-coeff"), required=True)
    ex.add_argument("--breakpoints", help="comma-separated volts (capacitance)")
    ex.add_argument("--section", default="mosfet")
    ex.add_argument("--key", default="c_gd")
    ex.add_argument("--t-ref", type=float, default=298.15)
    ex.add_argument("--out")
    ex.add_argument("--dt", type=float, help=argparse.SUPPRESS)
    ex.set_defaults(func=cmd_extract)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except INVALID_ERRORS as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
