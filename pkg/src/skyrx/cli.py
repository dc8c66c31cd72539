"""Command-line entry points: synth | air | ground | run | eval | serve."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import datalink, evaluate, formats, pipeline, scene, service
from .georectify import save_raster_f32, save_raster_png


def _load_config(args) -> pipeline.PipelineConfig:
    sc = scene.demo_scene()
    fl = scene.demo_flight()
    if getattr(args, "scene", None):
        sc = scene.scene_from_dict(json.loads(Path(args.scene).read_text()))
    if getattr(args, "flight", None):
        fl = scene.flight_from_dict(json.loads(Path(args.flight).read_text()))
    channel = None
    if getattr(args, "channel", None):
        channel = datalink.parse_channel_spec(args.channel)
        if getattr(args, "seed", None) is not None:
            channel = datalink.ChannelModel(
                **{**channel.__dict__, "seed": args.seed}
            )
    return pipeline.PipelineConfig(
        scene=sc,
        flight=fl,
        seed=getattr(args, "seed", 0) or 0,
        bands=getattr(args, "bands", 300),
        samples=getattr(args, "samples", 900),
        channel=channel,
        bin_factor=getattr(args, "bin", 4),
        threshold=getattr(args, "threshold", pipeline.DEFAULT_THRESHOLD),
        gsd_m=getattr(args, "gsd", None),
        out_dir=Path(args.out) if getattr(args, "out", None) else None,
        port=getattr(args, "port", 8008),
    )


def cmd_synth(args) -> int:
    config = _load_config(args)
    data = pipeline.synthesize(config)
    out = Path(args.out)
    pipeline.write_flight_data(data, out)
    (out / "scene.json").write_text(json.dumps(scene.scene_to_dict(config.scene), indent=2))
    (out / "flight.json").write_text(json.dumps(scene.flight_to_dict(config.flight), indent=2))
    print(f"wrote {len(data.cubes)} cube(s) to {out}")
    return 0


def cmd_air(args) -> int:
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = pipeline.synthesize(config)
    for i, mask in enumerate(data.masks):
        formats.write_mask(out / f"mask_{i:04d}.hsm", mask)
    formats.write_track(out / "track.hst", data.track)
    result = pipeline.run_air(config, data)
    datalink.write_stream(out / "stream.fst", result.frames)
    report = evaluate.latency_report(result.timings)
    evaluate.timings_to_csv(report, out / "timings.csv")
    bw = datalink.bandwidth_summary(line_rate_hz=config.flight.line_rate_hz)
    print(f"stream: {len(result.frames)} frames -> {out / 'stream.fst'}")
    print(
        f"bandwidth: payload {bw.payload_mbit_s:.2f} Mbit/s, "
        f"frames {bw.data_frame_mbit_s:.2f} Mbit/s, total {bw.total_mbit_s:.2f} Mbit/s"
    )
    print(f"latency: {report.latency_s:.2f}s real_time={report.real_time}")
    for cube_id, reason in result.dropped:
        print(f"dropped cube {cube_id}: {reason}", file=sys.stderr)
    return 0


def _write_ground_outputs(state: pipeline.GroundState, out: Path, threshold: float) -> None:
    out.mkdir(parents=True, exist_ok=True)
    raster, cubes = state.snapshot()
    for rc in cubes.values():
        pipeline.save_received(out, rc)
    if raster is not None:
        save_raster_png(raster, out / "mosaic_rgb.png")
        save_raster_f32(raster, out / "raster")
        tile = service.score_tile(raster, raster.bounds(), raster.width, raster.height)
        from PIL import Image

        Image.fromarray(tile).save(out / "mosaic_score.png", format="PNG")
        mask = service.threshold_mask(tile, threshold)
        Image.fromarray(np.where(mask, 0, 255).astype(np.uint8), mode="L").save(
            out / "mask.png", format="PNG"
        )
    stats = evaluate.reception_stats(state.completion_list()) if cubes else None
    (out / "summary.txt").write_text(evaluate.summary_text(None, stats, None))


def cmd_ground(args) -> int:
    config = _load_config(args)
    out = Path(args.out)
    state = pipeline.run_ground(datalink.read_stream(args.replay), config)
    _write_ground_outputs(state, out, config.threshold)
    stats = evaluate.reception_stats(state.completion_list())
    print(
        f"cubes: {len(state.cubes)}, completion mean {stats.mean_pct:.2f}% "
        f"(skipped {state.stats.malformed} malformed frames)"
    )
    return 0


def cmd_eval(args) -> int:
    received_dir = Path(args.received)
    truth_dir = Path(args.truth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scores, masks, lost = [], [], []
    for path in sorted(received_dir.glob("received_*.npz")):
        rc = pipeline.load_received(path)
        mask = formats.read_mask(truth_dir / f"mask_{rc.cube_id:04d}.hsm")
        scores.append(rc.scores.ravel())
        masks.append(mask.values.ravel())
        lost.append(np.repeat(~rc.line_present, rc.samples))
    if not scores:
        print("no received cubes found", file=sys.stderr)
        return 1
    curve = evaluate.roc_curve(
        np.concatenate(scores), np.concatenate(masks), np.concatenate(lost)
    )
    evaluate.roc_to_csv(curve, out / "roc.csv")
    (out / "summary.txt").write_text(evaluate.summary_text(curve, None, None))
    print(f"auc {curve.auc:.6f} -> {out / 'roc.csv'}")
    return 0


def cmd_run(args) -> int:
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    data = pipeline.synthesize(config)
    for i, mask in enumerate(data.masks):
        formats.write_mask(out / f"mask_{i:04d}.hsm", mask)
    formats.write_track(out / "track.hst", data.track)

    air_out = pipeline.PipelineConfig(**{**config.__dict__, "out_dir": out / "raw"})
    result = pipeline.run_air(air_out, data)
    datalink.write_stream(out / "stream.fst", result.frames)
    state = pipeline.run_ground(iter(result.frames), config)
    ground_dir = out / "ground"
    _write_ground_outputs(state, ground_dir, config.threshold)

    scores, masks, lost = [], [], []
    for cube_id in sorted(state.cubes):
        rc = state.cubes[cube_id]
        scores.append(rc.scores.ravel())
        masks.append(data.masks[cube_id].values.ravel())
        lost.append(np.repeat(~rc.line_present, rc.samples))
    curve = evaluate.roc_curve(
        np.concatenate(scores), np.concatenate(masks), np.concatenate(lost)
    )
    evaluate.roc_to_csv(curve, out / "roc.csv")
    stats = evaluate.reception_stats(state.completion_list())
    report = evaluate.latency_report(result.timings)
    evaluate.timings_to_csv(report, out / "timings.csv")
    (out / "summary.txt").write_text(evaluate.summary_text(curve, stats, report))
    print(evaluate.summary_text(curve, stats, report), end="")
    print(f"total {time.perf_counter() - t0:.1f}s -> {out}")
    return 0


def cmd_serve(args) -> int:
    config = _load_config(args)
    state = pipeline.GroundState(threshold=config.threshold, gsd_m=config.gsd_m)
    hub = service.EventHub()
    static = Path(args.static) if args.static else None
    svc = service.serve(state, config.port, hub=hub, static_dir=static)
    print(f"serving on http://127.0.0.1:{svc.port} (ctrl-c to stop)")

    import threading

    def feed():
        pipeline.run_ground(
            datalink.read_stream(args.replay), config, state=state, on_event=hub.publish
        )
        print("replay complete")

    threading.Thread(target=feed, daemon=True).start()
    try:
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        svc.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skyrx", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--scene", help="scene spec JSON path")
        sp.add_argument("--flight", help="flight spec JSON path")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--bands", type=int, default=300)
        sp.add_argument("--samples", type=int, default=900)
        sp.add_argument("--bin", type=int, default=4, help="band binning factor")
        sp.add_argument("--threshold", type=float, default=pipeline.DEFAULT_THRESHOLD)
        sp.add_argument("--gsd", type=float, default=None, help="raster gsd (m)")
        sp.add_argument(
            "--channel",
            help="loss model: bernoulli:<p> or ge:<pgb>,<pbg>,<lg>,<lb>",
        )
        if out_required:
            sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("synth", help="generate cubes, track, masks, calibration")
    common(sp)
    sp.set_defaults(fn=cmd_synth)

    sp = sub.add_parser("air", help="run the air pipeline, write the frame stream")
    common(sp)
    sp.set_defaults(fn=cmd_air)

    sp = sub.add_parser("ground", help="replay a stream into cubes and a mosaic")
    common(sp)
    sp.add_argument("--replay", required=True, help=".fst stream to replay")
    sp.set_defaults(fn=cmd_ground)

    sp = sub.add_parser("run", help="synth + air + ground + eval in one go")
    common(sp)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("eval", help="score received cubes against truth masks")
    sp.add_argument("--received", required=True, help="dir with received_*.npz")
    sp.add_argument("--truth", required=True, help="dir with mask_*.hsm")
    sp.add_argument("--threshold", type=float, default=pipeline.DEFAULT_THRESHOLD)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("serve", help="replay a stream while serving the console API")
    common(sp, out_required=False)
    sp.add_argument("--replay", required=True)
    sp.add_argument("--port", type=int, default=8008)
    sp.add_argument("--static", help="static dir for the browser console")
    sp.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
