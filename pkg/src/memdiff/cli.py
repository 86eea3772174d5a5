"""Command-line entry point: ``memdiff <group> <command> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .config import data_path, load_config
from .device import MemristorState, SweepSpec, iv_sweep, loop_metrics, x_from_resistance
from .errors import ConfigError, InvalidInput
from .evaluation import adaptation_level, amplification_ratio, overlap_rate, reference_time
from .synth import SyntheticVideoSpec, default_suite, generate
from .tactile import load_scenario, run_scenario, verify_scenario
from .vision import GridSpec, amplitude_spectrum, estimate_orientation, run_video

log = logging.getLogger("memdiff")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out: Path, cfg, command: str, inputs: dict, outputs: list, timings: dict):
    entries = {"command": command, "config_fingerprint": cfg.fingerprint,
               "outputs": ",".join(sorted(str(o) for o in outputs))}
    entries.update({f"input.{k}": v for k, v in inputs.items()})
    entries.update({f"time.{k}_s": v for k, v in timings.items()})
    io.write_manifest(out / "manifest.txt", entries)


# -- device ------------------------------------------------------------------

def cmd_device_sweep(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    spec = SweepSpec(args.pp, args.freq, args.rs, args.spp, args.periods)
    t0 = time.perf_counter()
    trace = iv_sweep(spec, cfg.device, MemristorState(float(x_from_resistance(args.r0, cfg.device))))
    elapsed = time.perf_counter() - t0
    m = loop_metrics(trace, spec.samples_per_period)
    io.write_csv(out / "sweep.csv", ["t_s", "applied_v", "device_v", "current_a", "x"], trace)
    lines = [f"pinch_current_a = {m['pinch_current']:.3e}",
             f"enclosed_area_va = {m['area']:.3e}",
             f"hysteretic = {m['hysteretic']}",
             f"pinched = {m['pinched']}",
             f"pinch_check = {'pass' if m['passed'] else 'fail'}"]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    _manifest(out, cfg, "device sweep",
              {"pp_v": args.pp, "freq_hz": args.freq, "rs_ohm": args.rs, "r0_ohm": args.r0},
              ["sweep.csv", "summary.txt"], {"sweep": elapsed})
    print("\n".join(lines))
    return 0


# -- tactile -----------------------------------------------------------------

def _scenario_path(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    shipped = data_path(f"scenarios/{name}.scn")
    if shipped.exists():
        return shipped
    raise InvalidInput(f"scenario {name!r} not found (path or shipped name)")


def cmd_tactile_run(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    path = _scenario_path(args.scenario)
    scenario = load_scenario(path)
    t0 = time.perf_counter()
    trace = run_scenario(scenario, cfg)
    elapsed = time.perf_counter() - t0
    baseline = run_scenario(scenario, cfg, unity_gain=True)
    failures = verify_scenario(trace, scenario)
    io.write_csv(out / "trace.csv", ["t_s", "piezo_r", "mem_r", "gain", "force_cmd", "event"],
                 zip(trace.t, trace.piezo_r, trace.mem_r, trace.gain, trace.force_cmd,
                     trace.event))
    lines = [f"scenario = {scenario.name}", f"steps = {len(trace)}",
             f"amplification_pct = {amplification_ratio(trace, baseline):.6g}",
             f"min_mem_r_ohm = {min(trace.mem_r):.6g}",
             f"final_mem_r_ohm = {trace.mem_r[-1]:.6g}"]
    if "adaptation_time" in scenario.checks:
        t_a = scenario.checks["adaptation_time"]
        lines.append(f"adaptation_pct_at_{t_a:g}s = {adaptation_level(trace, t_a):.6g}")
        x = x_from_resistance(np.asarray(trace.mem_r), cfg.device)
        x_ref, x_a = x[trace.index_at(reference_time(trace))], x[trace.index_at(t_a)]
        lines.append(f"state_adaptation_pct_at_{t_a:g}s = {100.0 * (1.0 - x_a / x_ref):.6g}")
    for marker in dict.fromkeys(m for _, m in scenario.expected_markers):
        t = trace.first(marker)
        lines.append(f"marker.{marker} = {'missing' if t is None else f'{t:.6g}'}")
    lines.append(f"result = {'pass' if not failures else 'fail'}")
    lines.extend(f"failure = {f}" for f in failures)
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    steps = np.asarray(trace.step_seconds)
    _manifest(out, cfg, "tactile run", {"scenario": path}, ["trace.csv", "report.txt"],
              {"run": elapsed, "step_p50": float(np.median(steps)),
               "step_p99": float(np.percentile(steps, 99))})
    print("\n".join(lines))
    if failures:
        print("unmatched expectations:\n  " + "\n  ".join(failures), file=sys.stderr)
        return 1
    return 0


# -- vision ------------------------------------------------------------------

def _grid_for(frame: np.ndarray, cfg) -> GridSpec:
    h, w = frame.shape
    cols, rows = cfg.vision.cols, cfg.vision.rows
    try:
        return GridSpec.for_frame(w, h, cols, rows)
    except InvalidInput:
        raise InvalidInput(
            f"frame {w}x{h} does not divide into a {cols}x{rows} grid: width must be a "
            f"multiple of {cols} and height a multiple of {rows} (e.g. 1920x900 -> 48x36 blocks)"
        ) from None


def _salient_from_pgm(img: np.ndarray) -> np.ndarray:
    return img == 0


def cmd_vision_run(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args)
    frames = list(io.iter_frames(args.frames))
    if len(frames) < 2:
        raise InvalidInput("vision run needs at least 2 frames")
    spec = _grid_for(frames[0], cfg)
    v = cfg.vision
    res = run_video(frames, spec, cfg.table, cfg.device, v.initial_resistance,
                    v.fast_threshold, v.binarize_threshold)
    maps_dir = out / "maps"
    maps_dir.mkdir(exist_ok=True)
    outputs = []
    orient_rows = []
    for i, m in enumerate(res.maps, start=1):
        io.write_pgm(maps_dir / f"saliency_{i:05d}.pgm", (m.binary * 255).astype(np.uint8))
        io.write_grid_csv(maps_dir / f"resistance_{i:05d}.csv", m.resistance)
        window = res.maps[max(0, i - v.orientation_window):i]
        o = estimate_orientation(window, cfg.table.high_min) if len(window) >= 2 else None
        d = o.direction if o is not None else None
        orient_rows.append([i, int(m.salient.sum()),
                            "" if d is None else d[0], "" if d is None else d[1]])
    outputs += ["maps/", "orientation.csv", "spectrum_compressed.csv", "spectrum_diff.csv"]
    io.write_csv(out / "orientation.csv", ["frame", "salient_cells", "dx", "dy"], orient_rows)
    io.write_grid_csv(out / "spectrum_compressed.csv", amplitude_spectrum(res.grids[-1]))
    io.write_grid_csv(out / "spectrum_diff.csv",
                      amplitude_spectrum(np.abs(res.grids[-1] - res.grids[-2])))
    fs = np.asarray(res.frame_seconds)
    summary = [f"frames = {len(frames)}", f"grid = {spec.cols}x{spec.rows}",
               f"block = {spec.block_w}x{spec.block_h}",
               f"frame_time_p50_ms = {np.median(fs) * 1e3:.4f}",
               f"frame_time_p99_ms = {np.percentile(fs, 99) * 1e3:.4f}"]
    if args.labels:
        labels = io.read_labels(args.labels)
        if len(labels) == len(frames):
            labels = labels[1:]
        rep = overlap_rate([m.salient for m in res.maps], labels)
        overlap_lines = [f"overlap_rate = {rep.value:.6f}",
                         f"jaccard = {rep.extra['jaccard']:.6f}",
                         f"labelled_cells = {rep.extra['labelled_cells']}"]
        overlap_lines += [f"flag = {f}" for f in rep.flags]
        (out / "overlap.txt").write_text("\n".join(overlap_lines) + "\n")
        outputs.append("overlap.txt")
        summary += overlap_lines[:2]
    _manifest(out, cfg, "vision run", {"frames": args.frames, "labels": args.labels or ""},
              outputs, {"frame_p50": float(np.median(fs)), "total": float(fs.sum())})
    print("\n".join(summary))
    return 0


# -- synth -------------------------------------------------------------------

def _write_video(out: Path, spec: SyntheticVideoSpec) -> None:
    frames, masks = generate(spec)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(exist_ok=True)
    for k, (f, m) in enumerate(zip(frames, masks)):
        io.write_pgm(out / "frames" / f"frame_{k:05d}.pgm", f)
        io.write_pgm(out / "labels" / f"label_{k:05d}.pgm", (m * 255).astype(np.uint8))
    fields = {k: getattr(spec, k) for k in spec.__dataclass_fields__}
    (out / "spec.txt").write_text("".join(f"{k} = {v}\n" for k, v in fields.items()))


def cmd_synth_gen(args) -> int:
    out = _out_dir(args)
    if args.suite:
        specs = default_suite(args.seed)
        for i, s in enumerate(specs):
            _write_video(out / f"video_{i:02d}", s)
        print(f"wrote {len(specs)} videos to {out}")
        return 0
    spec = SyntheticVideoSpec(
        frames=args.frames, size=tuple(args.size), velocity=tuple(args.velocity),
        start=tuple(args.start), background=args.background, intensity=args.intensity,
        noise=args.noise, seed=args.seed, start_frame=args.start_frame, wrap=args.wrap,
        cols=args.cols, rows=args.rows, block_w=args.block[0], block_h=args.block[1])
    _write_video(out, spec)
    print(f"wrote {spec.frames} frames ({spec.width}x{spec.height}) to {out}")
    return 0


# -- eval --------------------------------------------------------------------

def cmd_eval_overlap(args) -> int:
    out = _out_dir(args)
    maps = [_salient_from_pgm(io.read_pgm(p)) for p in
            sorted(Path(args.maps).glob("*.pgm"))]
    labels = io.read_labels(args.labels)
    if len(labels) == len(maps) + 1:
        labels = labels[1:]
    if len(labels) != len(maps):
        raise InvalidInput(f"{len(maps)} maps but {len(labels)} label grids")
    rep = overlap_rate(maps, labels)
    io.write_csv(out / "overlap_per_frame.csv", ["frame", "recall"],
                 enumerate(rep.per_frame, start=1))
    lines = [f"overlap_rate = {rep.value:.6f}", f"jaccard = {rep.extra['jaccard']:.6f}"]
    lines += [f"flag = {f}" for f in rep.flags]
    (out / "overlap.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="memdiff", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    groups = p.add_subparsers(dest="group", required=True)

    def command(group, name, func, help_):
        sp = group.add_parser(name, help=help_)
        sp.add_argument("--config", help="configuration file overlaid on the defaults")
        sp.add_argument("--out", default="out", help="output directory")
        sp.set_defaults(func=func)
        return sp

    dev = groups.add_parser("device", help="device characterisation").add_subparsers(
        dest="cmd", required=True)
    sp = command(dev, "sweep", cmd_device_sweep, "sine I-V sweep through a series resistor")
    sp.add_argument("--pp", type=float, default=0.5, help="peak-to-peak volts")
    sp.add_argument("--freq", type=float, default=10.0, help="hertz")
    sp.add_argument("--rs", type=float, default=10e3, help="series resistance, ohms")
    sp.add_argument("--spp", type=int, default=1000, help="samples per period")
    sp.add_argument("--periods", type=int, default=2)
    sp.add_argument("--r0", type=float, default=170e3, help="initial device resistance, ohms")

    tac = groups.add_parser("tactile", help="grasp scenarios").add_subparsers(
        dest="cmd", required=True)
    sp = command(tac, "run", cmd_tactile_run, "replay a grasp scenario")
    sp.add_argument("scenario", help="scenario file, or a shipped name such as task1")

    vis = groups.add_parser("vision", help="visual saliency").add_subparsers(
        dest="cmd", required=True)
    sp = command(vis, "run", cmd_vision_run, "process a frame sequence")
    sp.add_argument("frames", help="directory of PGM frames, or a raw file with .hdr sidecar")
    sp.add_argument("--labels", help="directory of label grids (PGM or CSV)")

    syn = groups.add_parser("synth", help="synthetic videos").add_subparsers(
        dest="cmd", required=True)
    sp = command(syn, "gen", cmd_synth_gen, "write a seeded synthetic video with labels")
    sp.add_argument("--suite", action="store_true", help="write the shipped evaluation suite")
    sp.add_argument("--frames", type=int, default=20)
    sp.add_argument("--size", type=int, nargs=2, default=(3, 3), metavar=("W", "H"))
    sp.add_argument("--velocity", type=int, nargs=2, default=(1, 0), metavar=("DX", "DY"))
    sp.add_argument("--start", type=int, nargs=2, default=(2, 11), metavar=("X", "Y"))
    sp.add_argument("--background", type=float, default=0.40)
    sp.add_argument("--intensity", type=float, default=2.00)
    sp.add_argument("--noise", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--start-frame", type=int, default=1)
    sp.add_argument("--wrap", action="store_true")
    sp.add_argument("--cols", type=int, default=40)
    sp.add_argument("--rows", type=int, default=25)
    sp.add_argument("--block", type=int, nargs=2, default=(10, 10), metavar=("BW", "BH"))

    ev = groups.add_parser("eval", help="metrics").add_subparsers(dest="cmd", required=True)
    sp = command(ev, "overlap", cmd_eval_overlap, "label recall of saliency maps")
    sp.add_argument("maps", help="directory of saliency PGMs (0 = salient)")
    sp.add_argument("labels", help="directory of label grids")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidInput, ConfigError, OSError) as exc:
        print(f"memdiff: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
