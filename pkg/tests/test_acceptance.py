"""Acceptance gate: seven end-to-end criteria, one test and one printed
pass line each (a failed criterion fails its test instead of printing).

Run with `pytest tests/test_acceptance.py -v -s` to see the criterion
lines alongside the per-test verdicts.
"""
from __future__ import annotations

import json
import time
import weakref

import numpy as np
import pytest

from prism import (
    DEFAULT_PALETTE,
    ciede2000,
    color_histogram,
    compression,
    detect_keyframes,
    fidelity_from_histograms,
    match_count,
    measure_throughput,
    score_matching,
    synthetic_frames,
    transition_frames,
    write_ppm,
)
from prism.cli import main
from prism.color import Frame

from test_deltae import CONFORMANCE_PAIRS


def _passed(criterion: int, detail: str) -> None:
    print(f"ACCEPTANCE {criterion} PASS  {detail}")


def test_criterion_1_ciede2000_conformance():
    start = time.perf_counter()
    worst = 0.0
    for l1, a1, b1, l2, a2, b2, expected in CONFORMANCE_PAIRS:
        got = ciede2000((l1, a1, b1), (l2, a2, b2))
        worst = max(worst, abs(got - expected))
        assert abs(got - expected) <= 1e-4
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _passed(1, f"CIEDE2000 conformance: {len(CONFORMANCE_PAIRS)}/34 pairs "
               f"within 1e-4 (worst {worst:.2e}, {elapsed * 1000:.0f} ms)")


# Hand-traced frame-matching cases, frozen from an independent
# transcription of the accuracy procedure before this module was built.
# Columns: fps, frame_count, actual, predicted, window (None when the
# guard path returns early), accuracy.
MATCHING_TABLE = [
    (30, 10000, [200], [], None, 0.0),                 # empty predictions
    (0, 10000, [200], [100], None, 0.0),               # fps = 0 guard
    (30, 0, [200], [100], None, 0.0),                  # frame_count = 0 guard
    (30, 10000, [200], [100], 225, 100.0),             # plain match
    (30, 10000, [200], [100, 9000], 225, 50.0),        # partial match
    (30, 500, [100], [115], 15, 100.0),                # |pred-act| == window
    (30, 500, [100], [116], 15, 0.0),                  # one frame past it
    (60, 100000, [1000], [1514], 514, 100.0),          # trunc(514.29) = 514
    (60, 100000, [1000], [1515, 1514, 486], 514, 66.67),
    (25, 3000, [500], [410], 90, 100.0),               # cap 90 beats raw 178
    (12, 100000, [0], [65, 66], 65, 50.0),             # window 65, edge frames
    (1, 10000, [100], [70, 131], 30, 50.0),            # floor lifts 0 to 30
    (30, 1000, [35], [5], 30, 100.0),                  # floor meets cap at 30
    (30, 10000, [], [100], 225, 0.0),                  # no ground truth
    (24, 100000, [100],
     [100] + [50000 + 1000 * i for i in range(31)],
     169, 3.13),                                       # 3.125 rounds up
]


def test_criterion_2_matching_hand_traces():
    start = time.perf_counter()
    assert len(MATCHING_TABLE) >= 10
    crossed = 0
    for fps, frame_count, actual, predicted, window, accuracy in MATCHING_TABLE:
        report = score_matching(fps, frame_count, actual, predicted)
        assert report.accuracy_pct == accuracy, (fps, frame_count, predicted)
        if window is not None:
            assert report.threshold_frames == window, (fps, frame_count)
            if window < 30:
                crossed += 1
    assert crossed >= 1  # the crossed-clamp-bounds cases are represented
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _passed(2, f"matching accuracy: {len(MATCHING_TABLE)}/{len(MATCHING_TABLE)} "
               f"hand-traced cases exact ({elapsed * 1000:.1f} ms)")


def test_criterion_3_synthetic_detection_exact():
    start = time.perf_counter()
    for n_segments in (2, 5, 10):
        n_frames = 20 * n_segments
        result = detect_keyframes(synthetic_frames(n_frames, 48, 36))
        expected = transition_frames(n_frames)
        assert result.keyframes == expected, n_segments
        # Exact set equality doubles as precision = recall = 1.0.
        predicted, truth = set(result.keyframes), set(expected)
        assert len(predicted & truth) == len(predicted) == len(truth)
    elapsed = time.perf_counter() - start
    _passed(3, f"synthetic detection: K in (2, 5, 10) all exact, precision "
               f"= recall = 1.0 ({elapsed:.2f} s)")


def test_criterion_4_metric_properties_randomized():
    start = time.perf_counter()
    rng = np.random.default_rng(2026)
    cases = 0

    for _ in range(300):  # fidelity of a verbatim subset is exactly 1.0
        n_truth = int(rng.integers(1, 7))
        truth = [
            color_histogram(rng.integers(0, 256, size=(5, 5, 3), dtype=np.uint8))
            for _ in range(n_truth)
        ]
        take = int(rng.integers(1, n_truth + 1))
        picked = [truth[i] for i in rng.choice(n_truth, size=take, replace=False)]
        assert fidelity_from_histograms(picked, truth) == 1.0
        cases += 1

    for _ in range(300):  # compression identity
        total = int(rng.integers(1, 10**6))
        keyframes = int(rng.integers(1, total + 1))
        stats = compression(total, keyframes)
        assert stats.ratio * keyframes == pytest.approx(total, rel=1e-12)
        cases += 1

    for _ in range(300):  # histogram mass conservation
        h = int(rng.integers(1, 14))
        w = int(rng.integers(1, 14))
        hist = color_histogram(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))
        assert abs(hist.sum() - 1.0) <= 1e-9
        cases += 1

    for _ in range(300):  # accuracy monotone in the matching window
        actual = sorted(rng.integers(0, 3000, size=rng.integers(0, 8)).tolist())
        predicted = sorted(rng.integers(0, 3000, size=rng.integers(1, 8)).tolist())
        w1, w2 = sorted(rng.integers(0, 600, size=2).tolist())
        assert match_count(actual, predicted, w1) <= match_count(actual, predicted, w2)
        cases += 1

    elapsed = time.perf_counter() - start
    assert cases >= 1000
    assert elapsed < 30.0
    _passed(4, f"metric properties: {cases} randomized cases across 4 "
               f"properties ({elapsed:.2f} s)")


def _extract_artifacts(tmp_path, tag, argv_input, monkeypatch, threads):
    monkeypatch.setenv("PRISM_THREADS", str(threads))
    kf = tmp_path / f"kf_{tag}_{threads}.json"
    trace = tmp_path / f"trace_{tag}_{threads}.csv"
    code = main(argv_input + ["--keyframes-out", str(kf), "--trace-out", str(trace)])
    assert code == 0
    return kf.read_bytes(), trace.read_bytes()


def test_criterion_5_thread_count_determinism(tmp_path, monkeypatch):
    start = time.perf_counter()

    # 1000-frame synthetic stream through the raw-pipe input.
    raw = tmp_path / "stream.rgb"
    with open(raw, "wb") as fh:
        for frame in synthetic_frames(1000, 64, 48):
            fh.write(frame.pixels.tobytes())
    argv = ["extract", "--raw-pipe", str(raw), "--width", "64", "--height", "48"]
    kf_1, trace_1 = _extract_artifacts(tmp_path, "pipe", argv, monkeypatch, 1)
    kf_8, trace_8 = _extract_artifacts(tmp_path, "pipe", argv, monkeypatch, 8)
    assert kf_1 == kf_8
    assert trace_1 == trace_8
    n_rows = sum(1 for line in trace_1.splitlines() if not line.startswith(b"#")) - 1
    assert n_rows == 999
    assert json.loads(kf_1)["keyframes"] == transition_frames(1000)

    # Frames above the internal block size, so the worker pool actually
    # splits the pixel conversion at PRISM_THREADS=8.
    seq = tmp_path / "bigseq"
    seq.mkdir()
    for frame in synthetic_frames(40, 320, 240):
        write_ppm(seq / f"f_{frame.index:04d}.ppm", frame.pixels)
    argv = ["extract", "--input-dir", str(seq)]
    kf_1, trace_1 = _extract_artifacts(tmp_path, "dir", argv, monkeypatch, 1)
    kf_8, trace_8 = _extract_artifacts(tmp_path, "dir", argv, monkeypatch, 8)
    assert kf_1 == kf_8
    assert trace_1 == trace_8

    elapsed = time.perf_counter() - start
    _passed(5, f"determinism: keyframes JSON and trace CSV byte-identical "
               f"at PRISM_THREADS=1 and 8 ({elapsed:.2f} s)")


def test_criterion_6_throughput_floor_and_scaling():
    report = measure_throughput(synthetic_frames(1000, 320, 240), threads=1)
    assert report.frames == 1000
    assert report.fps >= 60.0, f"only {report.fps:.1f} fps"

    def per_pixel_cost(width, height):
        best = float("inf")
        for _ in range(2):
            r = measure_throughput(synthetic_frames(300, width, height), threads=1)
            best = min(best, r.elapsed_s / (r.frames * width * height))
        return best

    small = per_pixel_cost(160, 120)
    large = per_pixel_cost(640, 480)
    # At-most-linear total cost in pixel count means per-pixel cost must
    # not grow; allow jitter headroom.
    assert large <= small * 1.6, (small, large)
    _passed(6, f"throughput: {report.fps:.0f} fps at 320x240 (floor 60); "
               f"per-pixel cost 160x120 {small:.2e}s vs 640x480 {large:.2e}s")


def test_criterion_7_memory_contract():
    state = {"live": 0, "peak": 0}

    def release():
        state["live"] -= 1

    def stream(n_frames):
        template = np.empty((12, 16, 3), dtype=np.uint8)
        for index in range(n_frames):
            color = DEFAULT_PALETTE[(index // 20) % len(DEFAULT_PALETTE)]
            pixels = template.copy()
            pixels[:] = color
            frame = Frame(index, pixels)
            state["live"] += 1
            state["peak"] = max(state["peak"], state["live"])
            weakref.finalize(frame, release)
            yield frame

    result = detect_keyframes(stream(10_000), threads=1)
    assert result.total_frames == 10_000
    # Noise-free segments leave only transition deltas above the gate, so
    # anything selected must be a real transition.
    assert set(result.keyframes) <= set(transition_frames(10_000))
    assert result.keyframes  # and the biggest jumps do get selected
    assert state["peak"] <= 2, f"peak resident frames {state['peak']}"
    _passed(7, f"memory contract: peak resident decoded frames "
               f"{state['peak']} <= 2 over a 10000-frame stream")
