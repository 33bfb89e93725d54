"""Command-line front end: extract, eval, bench, and deltae subcommands.

Every run is reproducible from its own output: the effective merged
configuration (defaults, then config file, then explicit flags) is
embedded in each JSON artifact. Worker-thread settings are deliberately
not part of that echo because they never change results.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .deltae import ciede2000
from .detector import (
    DEFAULT_JND,
    DEFAULT_SIGMA_MULTIPLIER,
    build_delta_series,
    select_keyframes,
    write_delta_trace,
)
from .errors import PrismError
from .evaluation import (
    FIDELITY_MODES,
    color_histogram,
    compression,
    fidelity_from_histograms,
    measure_throughput,
    score_matching,
)
from .ingest import (
    load_frames_at,
    load_ground_truth_corpus,
    open_image_sequence,
    open_raw_rgb_pipe,
    write_ppm,
)
from .synthetic import synthetic_frames

REPORT_COLUMNS = [
    "source_id",
    "accuracy_pct",
    "fidelity",
    "compression_ratio",
    "compression_pct",
    "threshold_frames",
    "n_predicted",
    "n_actual",
]

_DEFAULTS = {
    "jnd": DEFAULT_JND,
    "sigma_mult": DEFAULT_SIGMA_MULTIPLIER,
    "include_first": False,
    "fps": None,
    "width": None,
    "height": None,
    "fidelity_mode": "default",
    "format": "json",
    "dump_format": "ppm",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prism",
        description="Keyframe extraction from perceptual color-difference statistics.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags given explicitly win")
        p.add_argument("--format", choices=["json", "csv"], default=None,
                       help="stdout payload format (default json)")

    p_extract = sub.add_parser("extract", help="detect keyframes in a frame stream")
    p_extract.add_argument("--input-dir", help="directory of PNG/PPM frames")
    p_extract.add_argument("--raw-pipe", help="packed RGB24 stream path, or - for stdin")
    p_extract.add_argument("--width", type=int, default=None, help="pipe frame width")
    p_extract.add_argument("--height", type=int, default=None, help="pipe frame height")
    p_extract.add_argument("--fps", type=float, default=None,
                           help="source frame rate, recorded in outputs")
    p_extract.add_argument("--jnd", type=float, default=None,
                           help="just-noticeable-difference floor (default 1.0)")
    p_extract.add_argument("--sigma-mult", type=float, default=None,
                           help="adaptive threshold width multiplier (default 1.0)")
    p_extract.add_argument("--include-first", action="store_true", default=None,
                           help="always report frame 0 as a keyframe")
    p_extract.add_argument("--trace-out", help="write the per-delta trace CSV here")
    p_extract.add_argument("--keyframes-out", help="write the keyframes JSON here")
    p_extract.add_argument("--dump-frames", help="directory for keyframe image dumps")
    p_extract.add_argument("--dump-format", choices=["ppm", "png"], default=None,
                           help="image format for dumps (default ppm)")
    common(p_extract)
    p_extract.set_defaults(func=cmd_extract)

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("--ground-truth", required=True,
                        help="ground-truth JSON (record or array of records)")
    p_eval.add_argument("--predictions", required=True,
                        help="predictions JSON {source_id, predicted_frames}")
    p_eval.add_argument("--input-dir",
                        help="frames for fidelity: a sequence directory, or a root "
                             "holding one subdirectory per source_id")
    p_eval.add_argument("--report-out", help="report path; writes <base>.csv and <base>.json")
    p_eval.add_argument("--fidelity-mode", choices=list(FIDELITY_MODES), default=None,
                        help="semi-Hausdorff distance scoring (default) or the "
                             "literal typeset formula (audit only)")
    common(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("bench", help="measure detector throughput")
    p_bench.add_argument("--synthetic", nargs=2, metavar=("N", "WxH"),
                         help="generate N frames of WxH synthetic video")
    p_bench.add_argument("--input-dir", help="pre-buffer a frame directory instead")
    p_bench.add_argument("--jnd", type=float, default=None)
    p_bench.add_argument("--sigma-mult", type=float, default=None)
    common(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_deltae = sub.add_parser("deltae", help="CIEDE2000 distance of two LAB triples")
    p_deltae.add_argument("lab", type=float, nargs=6, metavar="V",
                          help="L1 a1 b1 L2 a2 b2")
    p_deltae.set_defaults(func=cmd_deltae)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PrismError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise PrismError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PrismError(f"invalid JSON in config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise PrismError(f"config {path} must be a JSON object")
    unknown = set(cfg) - set(_DEFAULTS)
    if unknown:
        raise PrismError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return cfg


def _setting(args: argparse.Namespace, file_cfg: dict, name: str):
    """Resolve one option: explicit flag > config file > built-in default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in file_cfg:
        return file_cfg[name]
    return _DEFAULTS[name]


def _write_json(path: str | None, payload: dict, to_stdout: bool) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    elif to_stdout:
        sys.stdout.write(text)


# ---------------------------------------------------------------- extract

def cmd_extract(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    jnd = float(_setting(args, file_cfg, "jnd"))
    sigma_mult = float(_setting(args, file_cfg, "sigma_mult"))
    include_first = bool(_setting(args, file_cfg, "include_first"))
    fps = _setting(args, file_cfg, "fps")
    out_format = _setting(args, file_cfg, "format")
    dump_format = _setting(args, file_cfg, "dump_format")

    if (args.input_dir is None) == (args.raw_pipe is None):
        raise PrismError("exactly one of --input-dir or --raw-pipe is required")

    if args.input_dir is not None:
        source_id = Path(args.input_dir).name
        frames = open_image_sequence(args.input_dir)
        input_desc = {"kind": "image_sequence", "path": str(args.input_dir)}
        stream = None
    else:
        width = _setting(args, file_cfg, "width")
        height = _setting(args, file_cfg, "height")
        if width is None or height is None:
            raise PrismError("--raw-pipe requires --width and --height")
        width, height = int(width), int(height)
        if args.raw_pipe == "-":
            source_id = "stdin"
            stream = None
            frames = open_raw_rgb_pipe(sys.stdin.buffer, width, height)
        else:
            source_id = Path(args.raw_pipe).stem or "pipe"
            stream = open(args.raw_pipe, "rb")
            frames = open_raw_rgb_pipe(stream, width, height)
        input_desc = {"kind": "raw_pipe", "path": str(args.raw_pipe),
                      "width": width, "height": height}

    try:
        series = build_delta_series(frames, jnd_threshold=jnd)
    finally:
        if stream is not None:
            stream.close()
    result = select_keyframes(series, sigma_multiplier=sigma_mult,
                              include_first_frame=include_first)

    payload = {
        "source_id": source_id,
        "total_frames": result.total_frames,
        "mu": result.mu,
        "sigma": result.sigma,
        "threshold": result.threshold,
        "stable": result.stable,
        "keyframes": result.keyframes,
        "config": {
            "jnd_threshold": jnd,
            "sigma_multiplier": sigma_mult,
            "include_first_frame": include_first,
            "fps": fps,
            "input": input_desc,
            "format": out_format,
            "dump_format": dump_format,
        },
    }

    if args.trace_out is not None:
        write_delta_trace(args.trace_out, series, result)
    if args.dump_frames is not None:
        _dump_keyframes(args, result.keyframes, dump_format)

    _write_json(args.keyframes_out, payload, to_stdout=(out_format == "json"))
    if out_format == "csv" and args.trace_out is None:
        buf = io.StringIO()
        write_delta_trace(buf, series, result)
        sys.stdout.write(buf.getvalue())
    return 0


def _dump_keyframes(args: argparse.Namespace, keyframes: list[int], dump_format: str) -> None:
    if args.input_dir is None:
        raise PrismError("cannot dump frames from a pipe input; use --input-dir")
    out_dir = Path(args.dump_frames)
    out_dir.mkdir(parents=True, exist_ok=True)
    for index, frame in load_frames_at(args.input_dir, keyframes).items():
        if dump_format == "png":
            Image.fromarray(frame.pixels).save(out_dir / f"kf_{index}.png")
        else:
            write_ppm(out_dir / f"kf_{index}.ppm", frame.pixels)


# ------------------------------------------------------------------- eval

def _load_predictions(path: str) -> dict[str, list[int]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise PrismError(f"cannot read predictions {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PrismError(f"invalid JSON in predictions {path}: {exc}") from exc
    items = doc if isinstance(doc, list) else [doc]
    out: dict[str, list[int]] = {}
    for item in items:
        if not isinstance(item, dict) or "source_id" not in item or "predicted_frames" not in item:
            raise PrismError("each prediction record needs source_id and predicted_frames")
        sid = item["source_id"]
        frames = item["predicted_frames"]
        if not isinstance(frames, list) or any(
            isinstance(v, bool) or not isinstance(v, int) or v < 0 for v in frames
        ):
            raise PrismError(f"predicted_frames for '{sid}' must be non-negative integers")
        if sid in out:
            raise PrismError(f"duplicate predictions for source_id '{sid}'")
        out[sid] = frames
    return out


def _fidelity_for(source_id: str, n_sources: int, input_dir: str | None,
                  predicted: list[int], actual: list[int], mode: str) -> float | None:
    """Fidelity needs pixel data; without an input directory (or with an
    empty index set) the score is unavailable rather than an error."""
    if input_dir is None or not predicted or not actual:
        return None
    root = Path(input_dir)
    per_source = root / source_id
    frames_dir = per_source if per_source.is_dir() else (root if n_sources == 1 else None)
    if frames_dir is None:
        return None
    frames = load_frames_at(frames_dir, list(predicted) + list(actual))
    pred_hists = [color_histogram(frames[i]) for i in sorted(set(predicted))]
    truth_hists = [color_histogram(frames[i]) for i in sorted(set(actual))]
    return fidelity_from_histograms(pred_hists, truth_hists, mode)


def cmd_eval(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    mode = _setting(args, file_cfg, "fidelity_mode")
    out_format = _setting(args, file_cfg, "format")

    truths = load_ground_truth_corpus(args.ground_truth)
    predictions = _load_predictions(args.predictions)

    rows: list[dict] = []
    skipped: list[dict] = []
    for truth in sorted(truths, key=lambda t: t.meta.source_id):
        sid = truth.meta.source_id
        if sid not in predictions:
            skipped.append({"source_id": sid, "reason": "no predictions"})
            continue
        predicted = predictions[sid]
        report = score_matching(truth.meta.fps, truth.meta.frame_count,
                                truth.actual, predicted)
        comp = compression(truth.meta.frame_count, len(predicted))
        fid = _fidelity_for(sid, len(truths), args.input_dir,
                            predicted, truth.actual, mode)
        rows.append({
            "source_id": sid,
            "accuracy_pct": report.accuracy_pct,
            "fidelity": fid,
            "compression_ratio": comp.ratio,
            "compression_pct": comp.pct,
            "threshold_frames": report.threshold_frames,
            "n_predicted": len(predicted),
            "n_actual": len(truth.actual),
        })
    known = {t.meta.source_id for t in truths}
    for sid in sorted(set(predictions) - known):
        skipped.append({"source_id": sid, "reason": "no ground truth"})

    summary = {
        "videos": rows,
        "mean": _unweighted_means(rows),
        "skipped": skipped,
        "config": {
            "ground_truth": str(args.ground_truth),
            "predictions": str(args.predictions),
            "input_dir": str(args.input_dir) if args.input_dir else None,
            "fidelity_mode": mode,
            "format": out_format,
        },
    }

    if args.report_out is not None:
        base = Path(args.report_out)
        csv_path = base if base.suffix == ".csv" else base.with_name(base.name + ".csv")
        json_path = csv_path.with_suffix(".json")
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            _write_report_csv(fh, rows)
        _write_json(str(json_path), _jsonable(summary), to_stdout=False)
    elif out_format == "csv":
        _write_report_csv(sys.stdout, rows)
    else:
        _write_json(None, _jsonable(summary), to_stdout=True)

    return 0 if rows else 1


def _unweighted_means(rows: list[dict]) -> dict:
    def mean_of(key: str, finite_only: bool = False) -> float | None:
        values = [r[key] for r in rows if r[key] is not None]
        if finite_only:
            values = [v for v in values if np.isfinite(v)]
        return sum(values) / len(values) if values else None

    if not rows:
        return {"accuracy_pct": None, "fidelity": None,
                "compression_ratio": None, "compression_pct": None}
    return {
        "accuracy_pct": mean_of("accuracy_pct"),
        "fidelity": mean_of("fidelity"),
        "compression_ratio": mean_of("compression_ratio", finite_only=True),
        "compression_pct": mean_of("compression_pct"),
    }


def _write_report_csv(fh, rows: list[dict]) -> None:
    writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        out = dict(row)
        out["fidelity"] = "" if row["fidelity"] is None else repr(row["fidelity"])
        out["compression_ratio"] = (
            "inf" if not np.isfinite(row["compression_ratio"])
            else repr(row["compression_ratio"])
        )
        out["compression_pct"] = repr(row["compression_pct"])
        writer.writerow(out)


def _jsonable(obj):
    """Replace non-finite floats with None so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


# ------------------------------------------------------------------ bench

def cmd_bench(args: argparse.Namespace) -> int:
    file_cfg = _load_config_file(args.config)
    jnd = float(_setting(args, file_cfg, "jnd"))
    sigma_mult = float(_setting(args, file_cfg, "sigma_mult"))

    if (args.synthetic is None) == (args.input_dir is None):
        raise PrismError("exactly one of --synthetic or --input-dir is required")

    if args.synthetic is not None:
        n, width, height = _parse_synthetic(args.synthetic)
        if n < 2:
            raise PrismError(f"need ≥ 2 frames to benchmark, got {n}")
        frames = synthetic_frames(n, width, height)
        input_desc = {"kind": "synthetic", "frames": n, "width": width, "height": height}
    else:
        frames = list(open_image_sequence(args.input_dir))
        if len(frames) < 2:
            raise PrismError(f"need ≥ 2 frames to benchmark, got {len(frames)}")
        input_desc = {"kind": "image_sequence", "path": str(args.input_dir)}

    report = measure_throughput(frames, jnd_threshold=jnd, sigma_multiplier=sigma_mult)
    payload = {
        "frames": report.frames,
        "width": report.width,
        "height": report.height,
        "elapsed_s": report.elapsed_s,
        "fps": report.fps,
        "n_keyframes": report.n_keyframes,
        "config": {
            "jnd_threshold": jnd,
            "sigma_multiplier": sigma_mult,
            "input": input_desc,
        },
    }
    _write_json(None, payload, to_stdout=True)
    return 0


def _parse_synthetic(values: list[str]) -> tuple[int, int, int]:
    try:
        n = int(values[0])
    except ValueError:
        raise PrismError(f"--synthetic frame count must be an integer, got {values[0]!r}") from None
    m = re.fullmatch(r"(\d+)x(\d+)", values[1])
    if m is None:
        raise PrismError(f"--synthetic size must look like 320x240, got {values[1]!r}")
    return n, int(m.group(1)), int(m.group(2))


# ----------------------------------------------------------------- deltae

def cmd_deltae(args: argparse.Namespace) -> int:
    value = ciede2000(tuple(args.lab[:3]), tuple(args.lab[3:]))
    print(f"{value:.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
