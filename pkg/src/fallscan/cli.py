"""fallscan command line: analyze frame pairs, sweep cutoffs, synthesize
benchmark scenes, ingest frame sources, and serve the HTTP API.

Exit codes: 0 ok, 2 usage, 3 data error, 4 analysis failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    FallscanError,
    PipelineError,
    ImageError,
    SceneError,
    StabilizationFailed,
)
from .image import Roi, write_png
from .pipeline import (
    AnalysisParams,
    FrameStore,
    analyze_pair,
    frame_filename,
    ingest_frames,
    run_sweep,
)
from .synth import SceneSpec, generate_pair

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_ANALYSIS = 4


def _parse_roi(text: str) -> Roi:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"roi must be X,Y,W,H, got {text!r}")
    x, y, w, h = (int(v) for v in parts)
    return Roi(x, y, w, h)


def _parse_grid(text: str) -> list[float]:
    """start:step:stop (inclusive stop) or comma-separated values."""
    if ":" in text:
        start, step, stop = (float(v) for v in text.split(":"))
        if step <= 0:
            raise argparse.ArgumentTypeError(f"grid step must be > 0, got {step}")
        out = []
        v = start
        k = 0
        while v <= stop + 1e-9:
            out.append(round(v, 9))
            k += 1
            v = start + k * step
        return out
    return [float(v) for v in text.split(",")]


def _load_params(args: argparse.Namespace) -> AnalysisParams:
    base = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
    params = AnalysisParams.from_json(base)
    updates = {}
    if getattr(args, "roi", None) is not None:
        updates["roi"] = args.roi
    if getattr(args, "ts", None) is not None:
        updates["ts"] = args.ts
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "scale", None) is not None:
        import dataclasses

        updates["arrow"] = dataclasses.replace(params.arrow, scale=args.scale)
    if updates:
        import dataclasses

        params = dataclasses.replace(params, **updates)
    return params


def _cmd_analyze(args: argparse.Namespace) -> int:
    store = FrameStore.open(args.frames, fps=args.fps)
    params = _load_params(args)
    result = analyze_pair(store, args.pair[0], args.pair[1], params, out_root=args.out)
    summary = {
        "run_dir": str(result.run_dir),
        "pair": [result.frame_a, result.frame_b],
        "tracked": result.n_tracked,
        "inliers": result.n_inliers,
        "surviving": len(result.filtered),
        "agreement": result.agreement,
        "duration_s": round(result.duration_s, 3),
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    store = FrameStore.open(args.frames, fps=args.fps)
    params = _load_params(args)
    out = run_sweep(store, args.pair[0], args.pair[1], params, args.ts_grid, out_root=args.out)
    summary = {
        "run_dir": str(out.run_dir),
        "counts": {f"{e.ts:g}": e.surviving_count for e in out.sweep.entries},
        "recommended": None if out.recommended is None else out.recommended.to_json(),
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = SceneSpec.from_json(json.loads(Path(args.spec).read_text()))
    frame_a, frame_b, truth = generate_pair(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_png(out / frame_filename(1), frame_a)
    write_png(out / frame_filename(2), frame_b)
    truth_doc = {
        "scene": spec.to_json(),
        "camera_h": truth.camera_h.to_json(),
        "block_deltas": [list(d) for d in truth.block_deltas],
    }
    (out / "truth.json").write_text(json.dumps(truth_doc, indent=2, sort_keys=True) + "\n")
    print(json.dumps({"out": str(out), "frames": 2, "blocks": len(spec.blocks)}, indent=2))
    return EXIT_OK


def _cmd_ingest(args: argparse.Namespace) -> int:
    store = ingest_frames(args.video, args.out, fps=args.fps)
    print(
        json.dumps(
            {
                "out": str(store.directory),
                "frame_count": store.frame_count,
                "width": store.width,
                "height": store.height,
            },
            indent=2,
        )
    )
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(runs_root=args.runs_root)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fallscan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--frames", required=True, help="FrameStore directory")
        p.add_argument("--pair", nargs=2, type=int, required=True, metavar=("I", "J"))
        p.add_argument("--roi", type=_parse_roi, default=None, help="X,Y,W,H crop")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--fps", type=float, default=29.97)
        p.add_argument("--config", default=None, help="JSON AnalysisParams file")
        p.add_argument("--out", required=True, help="runs output root")

    p_an = sub.add_parser("analyze", help="analyze one frame pair")
    add_common(p_an)
    p_an.add_argument("--ts", type=float, default=None, help="cutoff threshold (px)")
    p_an.add_argument("--scale", type=float, default=None, help="arrow length scale")
    p_an.set_defaults(func=_cmd_analyze)

    p_sw = sub.add_parser("sweep", help="sweep the cutoff threshold")
    add_common(p_sw)
    p_sw.add_argument("--ts-grid", type=_parse_grid, default=None, help="start:step:stop or comma list")
    p_sw.add_argument("--scale", type=float, default=None)
    p_sw.set_defaults(func=_cmd_sweep)

    p_sy = sub.add_parser("synth", help="generate a synthetic benchmark scene")
    p_sy.add_argument("--spec", required=True, help="SceneSpec JSON file")
    p_sy.add_argument("--out", required=True, help="output FrameStore directory")
    p_sy.set_defaults(func=_cmd_synth)

    p_in = sub.add_parser("ingest", help="normalize a frame source into a FrameStore")
    p_in.add_argument("--video", required=True, help="video file (via $VIDEO_DECODER) or PNG directory")
    p_in.add_argument("--out", required=True)
    p_in.add_argument("--fps", type=float, default=29.97)
    p_in.set_defaults(func=_cmd_ingest)

    p_se = sub.add_parser("serve", help="run the HTTP analysis service")
    p_se.add_argument("--host", default="127.0.0.1")
    p_se.add_argument("--port", type=int, default=8000)
    p_se.add_argument("--runs-root", default="runs")
    p_se.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StabilizationFailed as e:
        print(f"analysis failed: {e}", file=sys.stderr)
        return EXIT_ANALYSIS
    except (PipelineError, ImageError, SceneError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except FallscanError as e:
        print(f"analysis failed: {e}", file=sys.stderr)
        return EXIT_ANALYSIS
    except (json.JSONDecodeError, ValueError, KeyError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
