"""``tactileflow`` command line.

Exit codes: 0 success, 1 usage, 2 data validation, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import PipelineConfig
from .errors import DataValidationError, NumericalError
from .flow import aggregate, flow_sequence
from .geometry import fit_ellipsoid
from .pipeline import PipelineResult, Sensor, projection_for, render_indices, resolve_scale, run_pipeline, sequence_bounds, surface_values
from .segmentation import segment_pressure
from .smoothing import smooth
from .synth import Scenario, generate

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3

AGG_HEADER = "segment,label,start,end,anchor,projection,n_pairs,dir_x,dir_y,angle_deg,magnitude,coverage"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    if getattr(args, "projection", None):
        cfg = cfg.with_projection(args.projection)
    return cfg


def _layout(args):
    return io.read_layout(args.layout) if getattr(args, "layout", None) else None


def _require(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise DataValidationError(f"input not found: {p}")
    return p


def _agg_row(k, label, start, end, anchor, plane, n_pairs, agg) -> str:
    dx, dy = (float(v) for v in agg.direction)
    ang = float(np.degrees(agg.angle)) if agg.magnitude > 0 else 0.0
    vals = [io._fmt(v) for v in (dx, dy, ang, agg.magnitude, agg.coverage)]
    return ",".join([str(k), label, str(start), str(end), str(anchor), plane, str(n_pairs)] + vals)


# -- subcommands --------------------------------------------------------------


def cmd_synth(args) -> int:
    sc = io.dataclass_from_kv(Scenario, io.read_kv(_require(args.scenario)), prefix="") if args.scenario else Scenario()
    rec, gt = generate(sc, layout=_layout(args), seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_recording(out, rec)
    io.write_truth(out.with_suffix(".truth.csv"), gt)
    print(f"wrote {out} ({len(rec)} samples) and {out.with_suffix('.truth.csv')}")
    return 0


def cmd_smooth(args) -> int:
    rec = io.read_recording(_require(args.input))
    cfg = _config(args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_recording(out, smooth(rec, cfg.smoother))
    return 0


def cmd_fit(args) -> int:
    model = fit_ellipsoid(io.read_layout(_require(args.layout)))
    kv = io.model_to_kv(model)
    for k, v in kv.items():
        print(f"{k} = {v!r}")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        io.write_kv(out, kv)
    return 0


def cmd_frames(args) -> int:
    rec = io.read_recording(_require(args.input))
    cfg = _config(args)
    if cfg.segmentation.smooth:
        rec = smooth(rec, cfg.smoother)
    sensor = Sensor.prepare(_layout(args), cfg)
    values = surface_values(rec, cfg.surface.tare)
    scale = resolve_scale(values, sensor.model, cfg)
    max_disp = scale * float(np.max(np.abs(values)))
    out = io.ensure_dir(args.out)
    for plane in cfg.frames.projections:
        spec = projection_for(sensor, plane, cfg, max_disp)
        bounds = sequence_bounds(sensor, values, scale, spec)
        frames = render_indices(sensor, values, rec.timestamps, range(len(rec)), spec, scale, bounds, args.jobs)
        d = io.ensure_dir(out / plane) if len(cfg.frames.projections) > 1 else out
        for i in sorted(frames):
            io.write_frame(d, i, frames[i])
    return 0


def cmd_flow(args) -> int:
    paths = io.list_frames(_require(args.frames))
    if len(paths) < 2:
        raise DataValidationError("need >= 2 frames")
    cfg = _config(args)
    frames = [io.read_frame(p) for p in paths]
    flows = flow_sequence(frames, cfg.flow, jobs=args.jobs)
    out = io.ensure_dir(args.out)
    rows = [AGG_HEADER]
    for k, (fr, fl) in enumerate(zip(frames, flows)):
        idx = fr.meta.get("index", k)
        io.write_flow_csv(out / f"flow_{idx:06d}.csv", fl)
        io.write_ppm(out / f"quiver_{idx:06d}.ppm", io.quiver_image(fr, fl))
        try:
            agg = aggregate(fl, cfg.aggregate.tau)
        except DataValidationError:
            continue
        rows.append(_agg_row(k, "pair", idx, idx + 1, idx, fr.projection, 1, agg))
    (out / "aggregate.csv").write_text("\n".join(rows) + "\n")
    return 0


def cmd_segment(args) -> int:
    rec = io.read_recording(_require(args.input))
    cfg = _config(args)
    rec = smooth(rec, cfg.smoother) if cfg.segmentation.smooth else rec
    segs, _ = segment_pressure(rec.pressure, cfg.peaks, rec.sample_rate, cfg.segmentation.labels)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_segments(out, segs)
    return 0


def write_pipeline(res: PipelineResult, cfg: PipelineConfig, out: Path) -> None:
    io.ensure_dir(out)
    io.write_kv(out / "config.txt", cfg.to_kv())
    io.write_kv(out / "model.txt", io.model_to_kv(res.sensor.model) | {"scale": res.scale})
    io.write_recording(out / "smoothed.csv", res.smoothed)
    io.write_segments(out / "segments.csv", res.segments)
    with open(out / "peaks.csv", "w") as fh:
        fh.write("index,prominence\n")
        for i, p in res.peaks:
            fh.write(f"{i},{io._fmt(p)}\n")
    for plane, frames in res.frames.items():
        fdir = io.ensure_dir(out / "frames" / plane)
        for i in sorted(frames):
            io.write_frame(fdir, i, frames[i])
    rows = [AGG_HEADER]
    for r in res.results:
        s = r.segment
        fdir = io.ensure_dir(out / "flow" / r.projection)
        for i, fl in zip(r.pairs, r.flows):
            io.write_flow_csv(fdir / f"flow_{i:06d}.csv", fl)
            io.write_ppm(fdir / f"quiver_{i:06d}.ppm", io.quiver_image(res.frames[r.projection][i], fl))
        k = res.segments.index(s)
        rows.append(_agg_row(k, s.label, s.start, s.end, s.anchor, r.projection, len(r.pairs), r.summary))
    (out / "aggregate.csv").write_text("\n".join(rows) + "\n")


def cmd_pipeline(args) -> int:
    rec = io.read_recording(_require(args.input))
    cfg = _config(args)
    res = run_pipeline(rec, cfg, layout=_layout(args), jobs=args.jobs, whole_sequence=args.whole_sequence)
    write_pipeline(res, cfg, Path(args.out))
    if not res.results:
        print("no segment long enough for flow", file=sys.stderr)
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tactileflow", description="Tactile flow from taxel recordings.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        s = sub.add_parser(name, help=help_)
        s.set_defaults(fn=fn)
        return s

    def common(s, out_help, projection=False, jobs=False):
        s.add_argument("--config", help="key=value pipeline config")
        s.add_argument("--out", required=True, help=out_help)
        s.add_argument("--layout", help="taxel layout file (default: built-in reference layout)")
        if projection:
            s.add_argument("--projection", choices=["top", "left", "right"])
        if jobs:
            s.add_argument("--jobs", type=int, default=1)

    s = add("synth", cmd_synth, "generate a synthetic recording and its ground truth")
    s.add_argument("--scenario", help="key=value scenario file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="recording CSV path")
    s.add_argument("--layout")

    s = add("smooth", cmd_smooth, "RTS-smooth every channel")
    s.add_argument("input")
    common(s, "smoothed recording CSV")

    s = add("fit", cmd_fit, "fit the ellipsoid model to a layout file")
    s.add_argument("layout")
    s.add_argument("--out", help="model key=value file")

    s = add("frames", cmd_frames, "render tactile frames for every sample")
    s.add_argument("input")
    common(s, "frame directory", projection=True, jobs=True)

    s = add("flow", cmd_flow, "flow between consecutive frames of a directory")
    s.add_argument("frames")
    common(s, "flow directory", jobs=True)

    s = add("segment", cmd_segment, "pressure-peak segments")
    s.add_argument("input")
    common(s, "segment CSV")

    s = add("pipeline", cmd_pipeline, "smooth, fit, render and compute flow")
    s.add_argument("input")
    common(s, "output directory", projection=True, jobs=True)
    s.add_argument("--whole-sequence", action="store_true", help="compute flow on every pair, ignoring segments")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be >= 1")
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
