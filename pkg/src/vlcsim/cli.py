"""Batch runner: receiver sweeps, illuminance reports, hologram design.

Every subcommand writes CSV files with a one-line header plus a
``manifest.json`` recording the fully resolved configuration, so a run can
be reproduced from its output directory alone.  Exit codes: 0 success,
2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .cgh import (
    AnnealSchedule, Hologram, beam_intensity_map, cell_target, far_field,
    optimize,
)
from .channel import (
    DEFAULT_DT, PLAIN_EMITTER, _pair_transfer, SECOND_ORDER_PITCH,
    FIRST_ORDER_PITCH, cgh_emitter, impulse_response,
)
from .metrics import compute_metrics, power_gain_db
from .photometry import (
    COMPLIANCE_LUX, DEFAULT_TARGET_MIN_LUX, Redirection, calibrate_flux,
    compliance_min,
)
from .sbls import probe_cycle, select_best
from .scene import ConfigError, Receiver, load_scene

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_PROBE_ORDER = 1   # reflections matter for selection behind occluders


def _parse_values(text: str) -> list[float]:
    """Comma list of numbers, e.g. "1,2,3"."""
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"cannot parse value list {text!r}")


def _parse_range(text: str, step: float) -> list[float]:
    """Inclusive "lo:hi" swept at `step`."""
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"range must look like lo:hi, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"cannot parse range {text!r}")
    if step <= 0:
        raise ConfigError(f"step must be > 0, got {step}")
    if hi < lo:
        raise ConfigError(f"empty range {text!r}")
    n = int(round((hi - lo) / step))
    return [lo + k * step for k in range(n + 1)]


def _write_manifest(out_dir: str, command: str, resolved: dict) -> None:
    resolved = dict(resolved, command=command, version=__version__)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_beam(args) -> tuple:
    """(beam_map or None for uniform, effective fraction)."""
    fraction = args.fraction
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"fraction must lie in [0, 1], got {fraction}")
    if getattr(args, "hologram", None):
        holo = Hologram.load(args.hologram)
        bmap = beam_intensity_map(holo)
        return bmap, fraction * bmap.efficiency
    return None, fraction


def _check_inside(scene, x, y, z) -> None:
    bx, by, bz = scene.bounds
    if not (0.0 <= x <= bx and 0.0 <= y <= by and 0.0 <= z <= bz):
        raise ConfigError(
            f"receiver position ({x}, {y}, {z}) lies outside the room")


def _probe_evaluator(scene, lum, receiver):
    return impulse_response(scene, lum, PLAIN_EMITTER, receiver,
                            max_order=_PROBE_ORDER)


def _sweep_position(scene, x, y, z, order, dt, cgh_on, beam_map, fraction):
    receiver = Receiver(position=np.array([x, y, z]))
    reports = probe_cycle(scene, receiver, _probe_evaluator)
    sel = select_best(reports)
    lum = scene.luminaire(sel)

    ir_plain = impulse_response(scene, lum, PLAIN_EMITTER, receiver,
                                max_order=order, dt=dt)
    rows = [(sel, 0, compute_metrics(ir_plain, lum.power_w), "")]
    if cgh_on:
        model = cgh_emitter(fraction, lum.cell(), beam_map)
        ir_cgh = impulse_response(scene, lum, model, receiver,
                                  max_order=order, dt=dt)
        m = compute_metrics(ir_cgh, lum.power_w)
        gain = power_gain_db(m.received_power_w,
                             rows[0][2].received_power_w)
        rows.append((sel, 1, m, f"{gain:.6f}"))
    return rows


_SWEEP_HEADER = ("x,y,z,selected_id,cgh,Pr_W,PL_dB,mu_s,D_s,"
                 "BW_Hz,BW_saturated,rate_bps,gain_dB\n")


def _format_row(x, y, z, sel, flag, m, gain) -> str:
    return (f"{x:.3f},{y:.3f},{z:.3f},{sel},{flag},"
            f"{m.received_power_w:.9e},{m.path_loss_db:.6f},"
            f"{m.mean_delay_s:.9e},{m.delay_spread_s:.9e},"
            f"{m.bandwidth_3db_hz:.6e},{int(m.bandwidth_saturated)},"
            f"{m.data_rate_bps:.6e},{gain}\n")


def cmd_sweep(args) -> int:
    scene = load_scene(args.scene)
    xs = _parse_values(args.x)
    ys = _parse_range(args.y_range, args.step)
    if args.order not in (0, 1, 2):
        raise ConfigError(f"order must be 0, 1 or 2, got {args.order}")
    if args.dt <= 0:
        raise ConfigError(f"dt must be > 0, got {args.dt}")
    beam_map, fraction = _load_beam(args)
    positions = [(x, y, args.z) for x in xs for y in ys]
    for x, y, z in positions:
        _check_inside(scene, x, y, z)

    # warm shared caches so worker threads only read them
    scene.elements(FIRST_ORDER_PITCH)
    if args.order >= 2:
        _pair_transfer(scene, SECOND_ORDER_PITCH)

    def job(pos):
        x, y, z = pos
        return _sweep_position(scene, x, y, z, args.order, args.dt,
                               args.cgh, beam_map, fraction)

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(job, positions))
    else:
        results = [job(p) for p in positions]

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "metrics.csv"), "w") as fh:
        fh.write(_SWEEP_HEADER)
        for (x, y, z), rows in zip(positions, results):
            for sel, flag, m, gain in rows:
                fh.write(_format_row(x, y, z, sel, flag, m, gain))
    _write_manifest(args.out, "sweep", {
        "scene": args.scene, "x": xs, "y": ys, "z": args.z,
        "step": args.step, "order": args.order, "dt": args.dt,
        "cgh": args.cgh, "fraction": args.fraction,
        "hologram": args.hologram, "workers": args.workers,
        "seed": args.seed,
    })
    return EXIT_OK


def cmd_illum(args) -> int:
    scene = load_scene(args.scene)
    fractions = _parse_values(args.fractions) if args.fractions else []
    for f in fractions:
        if not 0.0 <= f <= 1.0:
            raise ConfigError(f"fraction must lie in [0, 1], got {f}")
    scene.luminaire(args.lum_id)   # validates the id
    flux = calibrate_flux(scene, args.target_min)

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "compliance.csv"), "w") as fh:
        fh.write("fraction,min_lux,compliant\n")
        base, ok = compliance_min(scene)
        fh.write(f"0.000,{base:.4f},{int(ok)}\n")
        for f in fractions:
            mn, ok = compliance_min(
                scene, Redirection(lum_id=args.lum_id, fraction=f))
            fh.write(f"{f:.3f},{mn:.4f},{int(ok)}\n")
    _write_manifest(args.out, "illum", {
        "scene": args.scene, "fractions": fractions, "lum_id": args.lum_id,
        "target_min_lux": args.target_min, "calibrated_flux_lm": flux,
        "compliance_lux": COMPLIANCE_LUX,
    })
    return EXIT_OK


def cmd_cgh_design(args) -> int:
    if not 0.0 <= args.fraction <= 1.0:
        raise ConfigError(f"fraction must lie in [0, 1], got {args.fraction}")
    target = cell_target(fraction=args.fraction)
    schedule = AnnealSchedule(seed=args.seed, t0=args.t0, alpha=args.alpha,
                              moves_per_temp=args.moves)
    result = optimize(target, schedule)
    bmap = beam_intensity_map(result.hologram, target)

    os.makedirs(args.out, exist_ok=True)
    result.hologram.save(os.path.join(args.out, "hologram.csv"),
                         seed=args.seed, cf=result.best_cf)
    pattern = far_field(result.hologram)
    np.savetxt(os.path.join(args.out, "farfield.csv"), pattern.intensity,
               delimiter=",", header="far-field intensity (row = x index)",
               comments="# ")
    with open(os.path.join(args.out, "cf_trace.csv"), "w") as fh:
        fh.write("temperature_index,best_cf\n")
        for i, cf in enumerate(result.cf_trace):
            fh.write(f"{i},{cf:.12e}\n")
    _write_manifest(args.out, "cgh-design", {
        "fraction": args.fraction, "seed": args.seed,
        "alpha": schedule.alpha, "t0": args.t0,
        "moves_per_temp": args.moves, "best_cf": result.best_cf,
        "in_window_efficiency": bmap.efficiency,
    })
    return EXIT_OK


def cmd_ir(args) -> int:
    scene = load_scene(args.scene)
    if args.order not in (0, 1, 2):
        raise ConfigError(f"order must be 0, 1 or 2, got {args.order}")
    if args.dt <= 0:
        raise ConfigError(f"dt must be > 0, got {args.dt}")
    _check_inside(scene, args.x, args.y, args.z)
    lum = scene.luminaire(args.lum_id)
    receiver = Receiver(position=np.array([args.x, args.y, args.z]))
    beam_map, fraction = _load_beam(args)
    model = (cgh_emitter(fraction, lum.cell(), beam_map) if args.cgh
             else PLAIN_EMITTER)
    ir = impulse_response(scene, lum, model, receiver,
                          max_order=args.order, dt=args.dt)
    if ir.total_power() <= 0.0:
        raise ValueError("link carries no power (blocked or outside FOV)")
    os.makedirs(args.out, exist_ok=True)
    ir.to_csv(os.path.join(args.out, "ir.csv"))
    _write_manifest(args.out, "ir", {
        "scene": args.scene, "lum_id": args.lum_id,
        "x": args.x, "y": args.y, "z": args.z,
        "order": args.order, "dt": args.dt, "cgh": args.cgh,
        "fraction": args.fraction, "hologram": args.hologram,
    })
    return EXIT_OK


def _add_common(p, scene=True):
    if scene:
        p.add_argument("--scene", default="room_a",
                       help="scene config path or shipped name "
                            "(room_a, room_b_default)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=0)


def _add_beam(p):
    p.add_argument("--cgh", action="store_true",
                   help="add a shaped beam carrying --fraction of the power")
    p.add_argument("--fraction", type=float, default=0.3)
    p.add_argument("--hologram", default=None,
                   help="saved hologram CSV; omitted means an ideal "
                        "uniform beam")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vlcsim",
        description="indoor VLC channel simulator with hologram-shaped beams")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="receiver sweep with channel metrics")
    _add_common(p)
    p.add_argument("--x", default="1,2", help="comma list of x lines (m)")
    p.add_argument("--y-range", default="1:7", help="inclusive lo:hi (m)")
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--z", type=float, default=1.0)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--workers", type=int, default=1)
    _add_beam(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("illum", help="floor illuminance compliance report")
    _add_common(p)
    p.add_argument("--fractions", default="0.2,0.3,0.4",
                   help="comma list of redirected fractions; empty for "
                        "baseline only")
    p.add_argument("--lum-id", type=int, default=1)
    p.add_argument("--target-min", type=float,
                   default=DEFAULT_TARGET_MIN_LUX)
    p.set_defaults(func=cmd_illum)

    p = sub.add_parser("cgh-design", help="anneal a phase hologram")
    _add_common(p, scene=False)
    p.add_argument("--fraction", type=float, default=0.3)
    p.add_argument("--alpha", type=float, default=AnnealSchedule.alpha)
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--moves", type=int, default=None,
                   help="moves per temperature (default 2*M*N)")
    p.set_defaults(func=cmd_cgh_design)

    p = sub.add_parser("ir", help="dump one link's impulse response")
    _add_common(p)
    p.add_argument("--lum-id", type=int, default=1)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--z", type=float, default=1.0)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    _add_beam(p)
    p.set_defaults(func=cmd_ir)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, OSError, json.JSONDecodeError,
            KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
