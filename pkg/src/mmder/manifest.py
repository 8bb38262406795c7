"""Dataset manifest (CSV) and clip loading from disk.

The manifest has a fixed header::

    clip_id,frames_path,audio_path,fps,label,subject_id

``frames_path`` is a directory of numbered image files (PNG or PGM, sorted
by the integer in the file name) and ``audio_path`` a 16-bit PCM WAV file.
Relative paths are resolved against the manifest's directory.
"""

import csv
import hashlib
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError
from .sampling import RawClip, to_luminance
from .signal import read_wav, resample_linear

COLUMNS = ("clip_id", "frames_path", "audio_path", "fps", "label", "subject_id")
IMAGE_SUFFIXES = {".png", ".pgm", ".ppm", ".pnm"}


@dataclass(frozen=True)
class ManifestRow:
    clip_id: str
    frames_path: Path
    audio_path: Path
    fps: float
    label: int
    subject_id: str


@dataclass
class Manifest:
    rows: list
    path: Path | None = None

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def subjects(self):
        return sorted({r.subject_id for r in self.rows})

    def by_id(self, clip_id):
        for r in self.rows:
            if r.clip_id == clip_id:
                return r
        raise DataError(f"clip {clip_id!r} not in manifest")


def read_manifest(path, num_classes=None, check_paths=True):
    path = Path(path)
    root = path.parent
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            records = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    if header is None:
        return Manifest([], path)
    if tuple(h.strip() for h in header) != COLUMNS:
        raise DataError(f"{path}: header must be {','.join(COLUMNS)}, got {','.join(header)}")
    rows, seen = [], set()
    for lineno, rec in enumerate(records, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(COLUMNS):
            raise DataError(f"{path}:{lineno}: expected {len(COLUMNS)} columns, got {len(rec)}")
        clip_id, frames, audio, fps, label, subject = (c.strip() for c in rec)
        if clip_id in seen:
            raise DataError(f"{path}:{lineno}: duplicate clip_id", clip_id)
        seen.add(clip_id)
        try:
            fps_v, label_v = float(fps), int(label)
        except ValueError:
            raise DataError(f"{path}:{lineno}: fps/label not numeric ({fps!r}, {label!r})", clip_id) from None
        if fps_v <= 0:
            raise DataError(f"{path}:{lineno}: fps must be positive", clip_id)
        if label_v < 0 or (num_classes is not None and label_v >= num_classes):
            raise DataError(f"{path}:{lineno}: label {label_v} outside [0, {num_classes})", clip_id)
        row = ManifestRow(clip_id, root / frames, root / audio, fps_v, label_v, subject)
        if check_paths:
            for p in (row.frames_path, row.audio_path):
                if not p.exists():
                    raise DataError(f"{path}:{lineno}: missing {p}", clip_id)
        rows.append(row)
    return Manifest(rows, path)


def write_manifest(path, rows):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in rows:
            writer.writerow([
                r.clip_id, _relative(r.frames_path, path.parent), _relative(r.audio_path, path.parent),
                _format_fps(r.fps), r.label, r.subject_id,
            ])


def _relative(p, root):
    p = Path(p)
    try:
        return p.relative_to(root).as_posix()
    except ValueError:
        return str(p)


def _format_fps(fps):
    return str(int(fps)) if float(fps).is_integer() else repr(float(fps))


def frame_files(directory):
    directory = Path(directory)
    files = [p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES]
    numbered = []
    for p in files:
        digits = re.findall(r"\d+", p.stem)
        if not digits:
            raise DataError(f"frame file {p} has no frame number")
        numbered.append((int(digits[-1]), p))
    return [p for _, p in sorted(numbered)]


def load_frames(directory):
    """Stack numbered frames as grayscale ``(n, h, w)`` float64 in [0, 1]."""
    files = frame_files(directory)
    if not files:
        raise DataError(f"no frame images in {directory}")
    frames = []
    for p in files:
        with Image.open(p) as img:
            arr = np.asarray(img)
        if arr.dtype == np.uint16:
            arr = arr / 65535.0
        else:
            arr = arr.astype(np.float64) / 255.0
        if arr.ndim == 3:
            arr = to_luminance(arr[..., :3])
        frames.append(arr)
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise DataError(f"frames in {directory} have differing sizes {sorted(shapes)}")
    return np.stack(frames)


def load_clip(row, sample_rate=16000):
    try:
        frames = load_frames(row.frames_path)
        audio = resample_linear(read_wav(row.audio_path), sample_rate)
    except DataError as exc:
        raise DataError(str(exc), row.clip_id) from exc
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot load clip: {exc}", row.clip_id) from exc
    return RawClip(frames, row.fps, audio, row.label, row.subject_id, row.clip_id)


def input_hash(row):
    """SHA-256 over the clip's frame and audio bytes plus its fps."""
    h = hashlib.sha256()
    h.update(repr(float(row.fps)).encode())
    for p in frame_files(row.frames_path):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    h.update(Path(row.audio_path).read_bytes())
    return h.hexdigest()
