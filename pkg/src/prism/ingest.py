"""Frame streams from disk or a pipe, and ground-truth annotation loading.

All I/O lives here so the detector core never touches the filesystem.
Streams decode lazily, one frame at a time; nothing in this module holds
more than a single decoded frame.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterator, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .color import Frame
from .errors import PrismError

_IMAGE_SUFFIXES = {".png", ".ppm"}


def _natural_key(name: str) -> tuple:
    """Sort key treating digit runs as numbers, so frame_2 < frame_10."""
    parts = re.split(r"(\d+)", name)
    return tuple(int(p) if p.isdigit() else p for p in parts)


def _sequence_files(dir_path: str | Path, pattern: str | None = None) -> list[Path]:
    directory = Path(dir_path)
    if not directory.is_dir():
        raise PrismError(f"not a directory: {directory}")
    if pattern:
        candidates = directory.glob(pattern)
    else:
        candidates = directory.iterdir()
    files = [p for p in candidates if p.is_file() and p.suffix.lower() in _IMAGE_SUFFIXES]
    if not files:
        raise PrismError(f"no frames in {directory}")
    files.sort(key=lambda p: _natural_key(p.name))
    return files


def _decode_image(path: Path) -> np.ndarray:
    if path.suffix.lower() == ".ppm":
        return read_ppm(path)
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise PrismError(f"unreadable image file {path}: {exc}") from exc


def open_image_sequence(dir_path: str | Path, pattern: str | None = None) -> Iterator[Frame]:
    """Yield the PNG/PPM files of a directory as frames indexed 0..N-1.

    Files are ordered by name with digit runs compared numerically. All
    frames must share dimensions; a mismatch is reported with both file
    names. The first frame's dimensions set the contract.
    """
    files = _sequence_files(dir_path, pattern)
    shape: tuple[int, int] | None = None
    first_name = ""
    for index, path in enumerate(files):
        pixels = _decode_image(path)
        if shape is None:
            shape = pixels.shape[:2]
            first_name = path.name
        elif pixels.shape[:2] != shape:
            raise PrismError(
                f"dimension mismatch: {first_name} is {shape[1]}x{shape[0]} "
                f"but {path.name} is {pixels.shape[1]}x{pixels.shape[0]}"
            )
        yield Frame(index, pixels)


def load_frames_at(dir_path: str | Path, indices: Sequence[int],
                   pattern: str | None = None) -> dict[int, Frame]:
    """Decode only the sequence positions in indices (for dumps and
    fidelity scoring). Out-of-range positions are an error."""
    files = _sequence_files(dir_path, pattern)
    out: dict[int, Frame] = {}
    for index in sorted(set(int(i) for i in indices)):
        if index < 0 or index >= len(files):
            raise PrismError(f"frame index {index} outside sequence of {len(files)} files")
        out[index] = Frame(index, _decode_image(files[index]))
    return out


def read_ppm(path: str | Path) -> np.ndarray:
    """Read a binary PPM (P6, maxval 255) into an (h, w, 3) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        magic, width, height, maxval, offset = _parse_ppm_header(data)
    except (ValueError, IndexError) as exc:
        raise PrismError(f"unreadable image file {path}: {exc}") from exc
    if magic != b"P6":
        raise PrismError(f"unreadable image file {path}: not a binary PPM (P6)")
    if maxval != 255:
        raise PrismError(f"unreadable image file {path}: maxval {maxval} unsupported, need 255")
    need = width * height * 3
    body = data[offset : offset + need]
    if len(body) < need:
        raise PrismError(f"unreadable image file {path}: truncated pixel data")
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3).copy()


def _parse_ppm_header(data: bytes) -> tuple[bytes, int, int, int, int]:
    # Header tokens separated by whitespace; '#' starts a comment to EOL.
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated header")
        return data[start:pos]

    magic = token()
    width = int(token())
    height = int(token())
    maxval = int(token())
    pos += 1  # single whitespace byte after maxval
    if width <= 0 or height <= 0:
        raise ValueError(f"bad dimensions {width}x{height}")
    return magic, width, height, maxval, pos


def write_ppm(path: str | Path, pixels: np.ndarray) -> None:
    """Write an (h, w, 3) uint8 array as binary PPM (P6, maxval 255)."""
    arr = np.ascontiguousarray(pixels, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise PrismError(f"PPM pixels must have shape (h, w, 3), got {arr.shape}")
    h, w = arr.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(arr.tobytes())


def open_raw_rgb_pipe(byte_source: IO[bytes], width: int, height: int) -> Iterator[Frame]:
    """Yield frames from a packed RGB24 byte stream until EOF.

    Each frame is 3 * width * height bytes, frame-major, no headers. A
    trailing partial frame is an error naming the byte offset where the
    incomplete frame began. Zero bytes in means an empty stream out.
    """
    if width <= 0 or height <= 0:
        raise PrismError(f"pipe dimensions must be positive, got {width}x{height}")
    frame_bytes = 3 * width * height
    index = 0
    while True:
        chunk = _read_exact(byte_source, frame_bytes)
        if not chunk:
            return
        if len(chunk) < frame_bytes:
            raise PrismError(f"partial frame at byte {index * frame_bytes}")
        pixels = np.frombuffer(chunk, dtype=np.uint8).reshape(height, width, 3)
        yield Frame(index, pixels)
        index += 1


def _read_exact(stream: IO[bytes], n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        piece = stream.read(n - len(buf))
        if not piece:
            break
        buf.extend(piece)
    return bytes(buf)


@dataclass(frozen=True)
class VideoMeta:
    """Identification and timing facts for one source video."""

    source_id: str
    fps: float
    frame_count: int


@dataclass(frozen=True)
class GroundTruth:
    meta: VideoMeta
    actual: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "source_id": self.meta.source_id,
            "fps": self.meta.fps,
            "frame_count": self.meta.frame_count,
            "actual_frames": list(self.actual),
        }


def parse_ground_truth(obj: dict) -> GroundTruth:
    """Validate one annotation record.

    Required fields: source_id, fps, frame_count, actual_frames. Indices
    are sorted and deduplicated; anything outside [0, frame_count - 1]
    is rejected. fps may be 0 (the matching guard path handles it) but
    never negative.
    """
    if not isinstance(obj, dict):
        raise PrismError(f"ground truth record must be an object, got {type(obj).__name__}")
    for name in ("source_id", "fps", "frame_count", "actual_frames"):
        if name not in obj:
            raise PrismError(f"ground truth missing field '{name}'")

    source_id = obj["source_id"]
    if not isinstance(source_id, str) or not source_id:
        raise PrismError("ground truth field 'source_id' must be a non-empty string")

    fps = obj["fps"]
    if isinstance(fps, bool) or not isinstance(fps, (int, float)) or fps < 0:
        raise PrismError(f"ground truth field 'fps' must be a non-negative number, got {fps!r}")

    frame_count = obj["frame_count"]
    if isinstance(frame_count, bool) or not isinstance(frame_count, int) or frame_count < 0:
        raise PrismError(
            f"ground truth field 'frame_count' must be a non-negative integer, got {frame_count!r}"
        )

    raw = obj["actual_frames"]
    if not isinstance(raw, list) or any(isinstance(v, bool) or not isinstance(v, int) for v in raw):
        raise PrismError("ground truth field 'actual_frames' must be an array of integers")
    actual = sorted(set(raw))
    for idx in actual:
        if idx < 0 or idx >= frame_count:
            raise PrismError(
                f"ground truth index {idx} out of range [0, {frame_count - 1}] "
                f"for '{source_id}'"
            )
    return GroundTruth(VideoMeta(source_id, float(fps), frame_count), actual)


def load_ground_truth(path: str | Path) -> GroundTruth:
    """Load a single-record ground-truth JSON file."""
    records = load_ground_truth_corpus(path)
    if len(records) != 1:
        raise PrismError(f"expected one ground truth record in {path}, found {len(records)}")
    return records[0]


def load_ground_truth_corpus(path: str | Path) -> list[GroundTruth]:
    """Load a ground-truth file holding either one record or an array."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise PrismError(f"cannot read ground truth {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PrismError(f"invalid JSON in ground truth {path}: {exc}") from exc
    items = doc if isinstance(doc, list) else [doc]
    records = [parse_ground_truth(item) for item in items]
    seen: set[str] = set()
    for rec in records:
        if rec.meta.source_id in seen:
            raise PrismError(f"duplicate ground truth source_id '{rec.meta.source_id}'")
        seen.add(rec.meta.source_id)
    return records
