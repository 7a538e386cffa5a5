"""Skeleton sequence ingestion, canonical storage and train/test splits.

Two on-disk forms are supported: the MSR DailyActivity3D skeleton text
layout (one file per recorded action performance) and a canonical JSON
document that round-trips :class:`PoseSequence` losslessly. A
:class:`DatasetIndex` lists the available recordings and is the unit that
splits operate on.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ParseError
from .skeleton import (
    PoseSequence,
    SkeletonPose,
    barycenter,
    get_layout,
    skeletal_distance,
)

SCREEN = "screen"
WORLD = "world"
COORDINATE_STREAMS = (SCREEN, WORLD)

CANONICAL_VERSION = 1

# aNN_sNN_eNN_skeleton.txt -> (action, subject, repetition)
_MSRDA_NAME = re.compile(r"a(\d+)_s(\d+)_e(\d+)_skeleton\.txt$")

__all__ = [
    "IndexEntry",
    "DatasetIndex",
    "SplitSpec",
    "parse_msrda_skeleton",
    "parse_msrda_filename",
    "load_msrda_file",
    "save_canonical",
    "load_canonical",
    "index_msrda_dir",
    "index_canonical_dir",
    "load_index",
    "save_index",
    "make_split",
    "load_entry",
    "normalize_sequence",
    "SCREEN",
    "WORLD",
    "COORDINATE_STREAMS",
]


@dataclass(frozen=True)
class IndexEntry:
    """One recording on disk: file path plus its label coordinates."""

    path: str
    action: int
    subject: int
    repetition: int


@dataclass(frozen=True)
class DatasetIndex:
    """All recordings of a dataset, each uniquely keyed by (action, subject, repetition)."""

    entries: tuple[IndexEntry, ...]
    layout_name: str = "kinect20"
    data_format: str = "canonical"

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        keys = [(e.action, e.subject, e.repetition) for e in self.entries]
        if len(set(keys)) != len(keys):
            raise DataError("duplicate (action, subject, repetition) in dataset index")

    def __len__(self) -> int:
        return len(self.entries)

    def subjects(self) -> tuple[int, ...]:
        return tuple(sorted({e.subject for e in self.entries}))

    def actions(self) -> tuple[int, ...]:
        return tuple(sorted({e.action for e in self.entries}))


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split rule: by subject membership or seeded random fraction."""

    mode: str
    train_subjects: frozenset[int] = frozenset()
    fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("cross_subject", "random"):
            raise ValueError(f"unknown split mode {self.mode!r}")
        if self.mode == "random" and not (0.0 < self.fraction < 1.0):
            raise ValueError("random split fraction must lie in (0, 1)")

    @classmethod
    def cross_subject(cls, train_subjects) -> "SplitSpec":
        return cls(mode="cross_subject", train_subjects=frozenset(int(s) for s in train_subjects))

    @classmethod
    def random(cls, fraction: float, seed: int = 0) -> "SplitSpec":
        return cls(mode="random", fraction=float(fraction), seed=int(seed))


def parse_msrda_filename(name: str) -> tuple[int, int, int]:
    """(action, subject, repetition) from an aNN_sNN_eNN_skeleton.txt name."""
    match = _MSRDA_NAME.search(Path(name).name)
    if match is None:
        raise DataError(f"file name {name!r} does not follow aNN_sNN_eNN_skeleton.txt")
    return int(match.group(1)), int(match.group(2)), int(match.group(3))


def parse_msrda_skeleton(
    data,
    coordinate_stream: str = SCREEN,
    action_label: int | None = None,
    subject_id: int = 0,
    repetition: int = 0,
) -> tuple[PoseSequence, int]:
    """Parse one MSR DailyActivity3D skeleton text file.

    Layout: a header line with the frame count (and optionally the joint
    count, default 20); then per frame one row-count line followed by that
    many rows of four reals, two rows per joint: world x/y/z/confidence
    first, then screen u/v/depth/confidence. Frames with no skeleton (row
    count 0) or with rows that do not decode are dropped; the second return
    value counts them. Structural damage (bad counts, truncation, trailing
    garbage) raises :class:`ParseError` with the offending line number.

    ``coordinate_stream`` picks which pair becomes the pose's (x, y); the
    third value of each row is discarded either way. When a frame holds
    several skeletons only the first is kept.
    """
    if coordinate_stream not in COORDINATE_STREAMS:
        raise ValueError(f"unknown coordinate stream {coordinate_stream!r}")
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    lines = data.splitlines()
    layout = get_layout("kinect20")

    cursor = 0

    def next_line() -> tuple[str, int]:
        nonlocal cursor
        if cursor >= len(lines):
            raise ParseError("unexpected end of file", line_number=len(lines) + 1)
        cursor += 1
        return lines[cursor - 1], cursor

    header, header_no = next_line()
    header_fields = header.split()
    if not header_fields:
        raise ParseError("empty header line", line_number=header_no)
    try:
        frame_count = int(header_fields[0])
        n_joints = int(header_fields[1]) if len(header_fields) > 1 else layout.n_joints
    except ValueError:
        raise ParseError(f"malformed header {header!r}", line_number=header_no) from None
    if frame_count <= 0:
        raise ParseError(f"invalid frame count {frame_count}", line_number=header_no)
    if n_joints != layout.n_joints:
        raise ParseError(
            f"expected {layout.n_joints} joints, header declares {n_joints}",
            line_number=header_no,
        )
    rows_per_skeleton = 2 * n_joints

    frames: list[SkeletonPose] = []
    dropped = 0
    for frame_idx in range(frame_count):
        count_line, count_no = next_line()
        try:
            row_count = int(count_line.split()[0])
        except (ValueError, IndexError):
            raise ParseError(
                f"malformed row-count line {count_line!r}", line_number=count_no
            ) from None
        if row_count < 0:
            raise ParseError(f"negative row count {row_count}", line_number=count_no)
        rows = [next_line()[0] for _ in range(row_count)]
        if row_count == 0 or row_count % rows_per_skeleton != 0:
            dropped += 1
            continue
        parsed = _decode_skeleton_rows(rows[:rows_per_skeleton], coordinate_stream)
        if parsed is None:
            dropped += 1
            continue
        positions, confidence = parsed
        frames.append(
            SkeletonPose(
                layout=layout,
                positions=positions,
                confidence=confidence,
                frame_index=frame_idx,
                subject_id=subject_id,
                action_label=action_label,
            )
        )
    while cursor < len(lines):
        trailing, trailing_no = next_line()
        if trailing.strip():
            raise ParseError(
                f"trailing content after {frame_count} frames", line_number=trailing_no
            )
    sequence = PoseSequence(
        layout=layout,
        frames=tuple(frames),
        action_label=action_label,
        subject_id=subject_id,
        repetition=repetition,
    )
    return sequence, dropped


def _decode_skeleton_rows(rows, coordinate_stream):
    n_joints = len(rows) // 2
    positions = np.empty((n_joints, 2))
    confidence = np.empty(n_joints)
    selected = 1 if coordinate_stream == SCREEN else 0
    for j in range(n_joints):
        fields = rows[2 * j + selected].split()
        if len(fields) != 4:
            return None
        try:
            x, y, _, conf = (float(v) for v in fields)
        except ValueError:
            return None
        if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(conf)):
            return None
        positions[j] = (x, y)
        confidence[j] = min(max(conf, 0.0), 1.0)
    return positions, confidence


def load_msrda_file(path, coordinate_stream: str = SCREEN) -> tuple[PoseSequence, int]:
    """Parse one MSRDA file, taking labels from its file name."""
    action, subject, repetition = parse_msrda_filename(str(path))
    text = Path(path).read_text(encoding="utf-8", errors="replace")
    return parse_msrda_skeleton(
        text,
        coordinate_stream=coordinate_stream,
        action_label=action,
        subject_id=subject,
        repetition=repetition - 1,
    )


def save_canonical(sequence: PoseSequence) -> str:
    """Serialize a sequence to the canonical JSON document (lossless floats)."""
    document = {
        "version": CANONICAL_VERSION,
        "layout": sequence.layout.name,
        "subject": sequence.subject_id,
        "action": sequence.action_label,
        "repetition": sequence.repetition,
        "frames": [
            {
                "index": frame.frame_index,
                "joints": [
                    {
                        "x": float(frame.positions[j, 0]),
                        "y": float(frame.positions[j, 1]),
                        "confidence": float(frame.confidence[j]),
                    }
                    for j in range(sequence.layout.n_joints)
                ],
            }
            for frame in sequence.frames
        ],
    }
    return json.dumps(document, indent=1)


def load_canonical(data) -> PoseSequence:
    """Parse a canonical JSON document back into a sequence."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        document = json.loads(data)
    except json.JSONDecodeError as exc:
        raise DataError(f"canonical document is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise DataError("canonical document must be a JSON object")
    if document.get("version") != CANONICAL_VERSION:
        raise DataError(f"unsupported canonical version {document.get('version')!r}")
    if "layout" not in document:
        raise DataError("canonical document is missing the layout name")
    layout = get_layout(document["layout"])
    if "frames" not in document:
        raise DataError("canonical document is missing the frames array")
    frames = []
    action = document.get("action")
    subject = int(document.get("subject", 0))
    try:
        for frame_doc in document["frames"]:
            joints = frame_doc["joints"]
            if len(joints) != layout.n_joints:
                raise DataError(
                    f"frame {frame_doc.get('index')} has {len(joints)} joints, "
                    f"layout needs {layout.n_joints}"
                )
            positions = np.array([[j["x"], j["y"]] for j in joints], dtype=np.float64)
            confidence = np.array([j["confidence"] for j in joints], dtype=np.float64)
            frames.append(
                SkeletonPose(
                    layout=layout,
                    positions=positions,
                    confidence=confidence,
                    frame_index=int(frame_doc["index"]),
                    subject_id=subject,
                    action_label=action,
                )
            )
        return PoseSequence(
            layout=layout,
            frames=tuple(frames),
            action_label=action,
            subject_id=subject,
            repetition=int(document.get("repetition", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"malformed canonical document: {exc}") from exc


def index_msrda_dir(directory) -> DatasetIndex:
    """Index every aNN_sNN_eNN_skeleton.txt file under a directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"not a directory: {directory}")
    entries = []
    for path in sorted(directory.glob("*_skeleton.txt")):
        action, subject, repetition = parse_msrda_filename(path.name)
        entries.append(
            IndexEntry(path=str(path), action=action, subject=subject, repetition=repetition)
        )
    if not entries:
        raise DataError(f"no MSRDA skeleton files under {directory}")
    return DatasetIndex(entries=tuple(entries), data_format="msrda")


def index_canonical_dir(directory) -> DatasetIndex:
    """Index every canonical .json sequence under a directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"not a directory: {directory}")
    entries = []
    layout_name = None
    for path in sorted(directory.glob("*.json")):
        if path.name == "index.json":
            continue
        document = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(document, dict) or "frames" not in document:
            continue
        layout_name = document.get("layout", layout_name)
        entries.append(
            IndexEntry(
                path=str(path),
                action=int(document["action"]),
                subject=int(document.get("subject", 0)),
                repetition=int(document.get("repetition", 0)) + 1,
            )
        )
    if not entries:
        raise DataError(f"no canonical sequence files under {directory}")
    return DatasetIndex(entries=tuple(entries), layout_name=layout_name or "kinect20")


def save_index(index: DatasetIndex, path) -> None:
    document = {
        "layout": index.layout_name,
        "format": index.data_format,
        "entries": [
            {
                "path": e.path,
                "action": e.action,
                "subject": e.subject,
                "repetition": e.repetition,
            }
            for e in index.entries
        ],
    }
    Path(path).write_text(json.dumps(document, indent=1), encoding="utf-8")


def load_index(path) -> DatasetIndex:
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
        entries = tuple(
            IndexEntry(
                path=e["path"],
                action=int(e["action"]),
                subject=int(e["subject"]),
                repetition=int(e["repetition"]),
            )
            for e in document["entries"]
        )
        return DatasetIndex(
            entries=entries,
            layout_name=document.get("layout", "kinect20"),
            data_format=document.get("format", "canonical"),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"malformed index file {path}: {exc}") from exc


def make_split(
    index: DatasetIndex, spec: SplitSpec
) -> tuple[list[IndexEntry], list[IndexEntry]]:
    """Deterministic train/test partition of the index entries.

    Cross-subject splits partition by subject membership; random splits
    shuffle with the given seed and cut each class at the configured
    fraction. Either side coming out empty is an error.
    """
    if spec.mode == "cross_subject":
        train = [e for e in index.entries if e.subject in spec.train_subjects]
        test = [e for e in index.entries if e.subject not in spec.train_subjects]
    else:
        rng = np.random.default_rng(spec.seed)
        train, test = [], []
        by_class: dict[int, list[IndexEntry]] = {}
        for entry in index.entries:
            by_class.setdefault(entry.action, []).append(entry)
        for action in sorted(by_class):
            group = sorted(by_class[action], key=lambda e: (e.subject, e.repetition))
            order = rng.permutation(len(group))
            n_train = int(round(spec.fraction * len(group)))
            for pos, idx in enumerate(order):
                (train if pos < n_train else test).append(group[idx])
    if not train or not test:
        raise DataError("split produced an empty train or test side")
    return train, test


def load_entry(
    entry: IndexEntry, data_format: str = "canonical", coordinate_stream: str = SCREEN
) -> PoseSequence:
    """Load one indexed recording in the given on-disk format."""
    if data_format == "msrda":
        sequence, _ = load_msrda_file(entry.path, coordinate_stream=coordinate_stream)
        return sequence
    if data_format == "canonical":
        return load_canonical(Path(entry.path).read_text(encoding="utf-8"))
    raise DataError(f"unknown data format {data_format!r}")


def normalize_sequence(
    sequence: PoseSequence, scale_from: str = "head", scale_to: str = "hip_center"
) -> PoseSequence:
    """Translate frames to barycenter origin and rescale to unit body size.

    The scale is the median over frames of the skeletal distance between the
    two named joints, which tolerates a few corrupted frames; a degenerate
    zero scale falls back to leaving sizes untouched.
    """
    if not sequence.frames:
        return sequence
    layout = sequence.layout
    a = layout.index_of(scale_from)
    b = layout.index_of(scale_to)
    spans = [skeletal_distance(frame, a, b) for frame in sequence.frames]
    scale = float(np.median(spans))
    if scale <= 0.0:
        scale = 1.0
    frames = tuple(
        frame.replace_positions((frame.positions - barycenter(frame)) / scale)
        for frame in sequence.frames
    )
    return PoseSequence(
        layout=layout,
        frames=frames,
        action_label=sequence.action_label,
        subject_id=sequence.subject_id,
        repetition=sequence.repetition,
    )
