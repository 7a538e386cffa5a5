"""Skeleton domain types and 2-D pose geometry.

A :class:`SkeletonLayout` fixes joint naming, the bone tree, the upper/lower
body partition and the left/right joint correspondence. Poses are arrays of
2-D joint positions tied to a layout. Everything here is immutable after
construction and all operations are pure functions, so poses and layouts can
be shared freely across threads.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

UPPER = "upper"
LOWER = "lower"
FULL = "full"
BODY_PARTS = (UPPER, LOWER, FULL)

__all__ = [
    "JointId",
    "SkeletonLayout",
    "SkeletonPose",
    "PoseSequence",
    "barycenter",
    "to_polar",
    "from_polar",
    "normalize_angle",
    "skeletal_distance",
    "mirror_pose",
    "kinect20_layout",
    "get_layout",
    "register_layout",
    "UPPER",
    "LOWER",
    "FULL",
    "BODY_PARTS",
]


@dataclass(frozen=True)
class JointId:
    """A joint slot in a layout: positional index plus canonical name."""

    index: int
    canonical_name: str


def normalize_angle(phi: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(phi, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped = math.pi
    return wrapped


@dataclass(frozen=True)
class SkeletonLayout:
    """Joint naming, bone tree and body partition shared by poses.

    ``bones`` must form a tree spanning all joints (connected, acyclic).
    ``lower_body`` lists lower-body joint indices; the upper body is the
    complement, so the two halves always partition the skeleton.
    ``mirror_pairs`` is the left/right joint correspondence used when
    reflecting detectors; joints not listed are their own mirror image.
    ``reference_joint`` names the joint used as reference point instead of
    the barycenter, or is None for the barycenter of all joints.
    """

    name: str
    joint_names: tuple[str, ...]
    bones: tuple[tuple[int, int], ...]
    lower_body: frozenset[int]
    mirror_pairs: tuple[tuple[int, int], ...] = ()
    reference_joint: str | None = None

    def __post_init__(self):
        n = len(self.joint_names)
        if n == 0:
            raise ValueError("layout needs at least one joint")
        if len(set(self.joint_names)) != n:
            raise ValueError("joint names must be unique")
        seen = set()
        for a, b in self.bones:
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"bone ({a}, {b}) references unknown joint")
            if a == b:
                raise ValueError(f"bone ({a}, {b}) is a self loop")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate bone ({a}, {b})")
            seen.add(key)
        if len(self.bones) != n - 1:
            raise ValueError(
                f"{len(self.bones)} bones cannot form a tree over {n} joints"
            )
        adjacency = tuple(
            tuple(sorted({b for a, b in _directed(self.bones) if a == i}))
            for i in range(n)
        )
        if n > 1 and not _is_connected(adjacency):
            raise ValueError("bones do not connect all joints")
        if not all(0 <= i < n for i in self.lower_body):
            raise ValueError("lower_body references unknown joint")
        mirror = list(range(n))
        paired = set()
        for a, b in self.mirror_pairs:
            if not (0 <= a < n and 0 <= b < n) or a == b:
                raise ValueError(f"invalid mirror pair ({a}, {b})")
            if a in paired or b in paired:
                raise ValueError(f"joint in more than one mirror pair: ({a}, {b})")
            paired.update((a, b))
            mirror[a], mirror[b] = b, a
        if self.reference_joint is not None and self.reference_joint not in self.joint_names:
            raise ValueError(f"unknown reference joint {self.reference_joint!r}")
        object.__setattr__(self, "_adjacency", adjacency)
        object.__setattr__(self, "_mirror_map", tuple(mirror))
        object.__setattr__(self, "_path_cache", {})

    @property
    def n_joints(self) -> int:
        return len(self.joint_names)

    @property
    def upper_body(self) -> frozenset[int]:
        return frozenset(range(self.n_joints)) - self.lower_body

    @property
    def mirror_map(self) -> tuple[int, ...]:
        """Index permutation mapping each joint to its left/right partner."""
        return self._mirror_map

    def index_of(self, name: str) -> int:
        try:
            return self.joint_names.index(name)
        except ValueError:
            raise KeyError(f"no joint named {name!r} in layout {self.name!r}") from None

    def joint(self, name: str) -> JointId:
        return JointId(self.index_of(name), name)

    def joints(self) -> tuple[JointId, ...]:
        return tuple(JointId(i, name) for i, name in enumerate(self.joint_names))

    def body_part_indices(self, part: str) -> frozenset[int]:
        if part == LOWER:
            return self.lower_body
        if part == UPPER:
            return self.upper_body
        if part == FULL:
            return frozenset(range(self.n_joints))
        raise ValueError(f"unknown body part {part!r}")

    def tree_path(self, a: int, b: int) -> tuple[int, ...]:
        """Unique joint-index path from a to b along the bone tree."""
        key = (a, b)
        cached = self._path_cache.get(key)
        if cached is not None:
            return cached
        n = self.n_joints
        if not (0 <= a < n and 0 <= b < n):
            raise ValueError(f"joint index out of range: {key}")
        parent = {a: None}
        queue = deque([a])
        while queue:
            node = queue.popleft()
            if node == b:
                break
            for nxt in self._adjacency[node]:
                if nxt not in parent:
                    parent[nxt] = node
                    queue.append(nxt)
        path = [b]
        while path[-1] != a:
            path.append(parent[path[-1]])
        path = tuple(reversed(path))
        self._path_cache[key] = path
        return path


def _directed(bones):
    for a, b in bones:
        yield a, b
        yield b, a


def _is_connected(adjacency) -> bool:
    seen = {0}
    queue = deque([0])
    while queue:
        for nxt in adjacency[queue.popleft()]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return len(seen) == len(adjacency)


def _joint_index(joint) -> int:
    return joint.index if isinstance(joint, JointId) else int(joint)


@dataclass(frozen=True, eq=False)
class SkeletonPose:
    """One frame's joint positions on a layout.

    ``positions`` is an (n_joints, 2) float array of image-plane or projected
    coordinates; ``confidence`` holds one value in [0, 1] per joint. Arrays
    are copied and frozen at construction.
    """

    layout: SkeletonLayout
    positions: np.ndarray
    confidence: np.ndarray | None = None
    frame_index: int = 0
    subject_id: int = 0
    action_label: int | None = None

    def __post_init__(self):
        n = self.layout.n_joints
        pos = np.array(self.positions, dtype=np.float64)
        if pos.shape != (n, 2):
            raise ValueError(f"positions must have shape ({n}, 2), got {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if self.confidence is None:
            conf = np.ones(n, dtype=np.float64)
        else:
            conf = np.array(self.confidence, dtype=np.float64)
            if conf.shape != (n,):
                raise ValueError(f"confidence must have shape ({n},), got {conf.shape}")
            if not np.all((conf >= 0.0) & (conf <= 1.0)):
                raise ValueError("confidence values must lie in [0, 1]")
        pos.setflags(write=False)
        conf.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "confidence", conf)

    def replace_positions(self, positions: np.ndarray) -> "SkeletonPose":
        """Copy of this pose with new coordinates, metadata unchanged."""
        return SkeletonPose(
            layout=self.layout,
            positions=positions,
            confidence=self.confidence,
            frame_index=self.frame_index,
            subject_id=self.subject_id,
            action_label=self.action_label,
        )


@dataclass(frozen=True, eq=False)
class PoseSequence:
    """Ordered frames of one recorded action performance."""

    layout: SkeletonLayout
    frames: tuple[SkeletonPose, ...]
    action_label: int | None = None
    subject_id: int = 0
    repetition: int = 0

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        for frame in self.frames:
            if frame.layout != self.layout:
                raise ValueError("all frames must share the sequence layout")
        indices = [frame.frame_index for frame in self.frames]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("frame_index must be strictly increasing")

    def __len__(self) -> int:
        return len(self.frames)


def barycenter(pose: SkeletonPose) -> np.ndarray:
    """Reference point of a pose.

    The unweighted mean of all joint positions, or the configured reference
    joint's position when the layout names one.
    """
    if pose.layout.reference_joint is not None:
        return pose.positions[pose.layout.index_of(pose.layout.reference_joint)].copy()
    return pose.positions.mean(axis=0)


def to_polar(point, reference) -> tuple[float, float]:
    """Polar coordinates (rho, phi) of ``point`` about ``reference``.

    phi is the full-quadrant angle in (-pi, pi]; the degenerate point at the
    reference maps to (0, 0).
    """
    dx = float(point[0]) - float(reference[0])
    dy = float(point[1]) - float(reference[1])
    rho = math.hypot(dx, dy)
    if rho == 0.0:
        return 0.0, 0.0
    phi = math.atan2(dy, dx)
    if phi == -math.pi:
        phi = math.pi
    return rho, phi


def from_polar(rho: float, phi: float, reference) -> np.ndarray:
    """Cartesian point at polar offset (rho, phi) from ``reference``."""
    return np.array(
        [reference[0] + rho * math.cos(phi), reference[1] + rho * math.sin(phi)],
        dtype=np.float64,
    )


def skeletal_distance(pose: SkeletonPose, a, b) -> float:
    """Sum of bone-segment lengths along the tree path between two joints.

    Measured on the given pose's coordinates; zero when ``a == b``.
    """
    path = pose.layout.tree_path(_joint_index(a), _joint_index(b))
    if len(path) < 2:
        return 0.0
    points = pose.positions[list(path)]
    return float(np.linalg.norm(np.diff(points, axis=0), axis=1).sum())


def mirror_pose(pose: SkeletonPose, axis_x: float) -> SkeletonPose:
    """Pose with every x coordinate reflected about the vertical line x = axis_x.

    Joint labels are untouched; this is a coordinate-only mirror, mainly
    useful for exercising reflection behaviour in tests.
    """
    positions = pose.positions.copy()
    positions[:, 0] = 2.0 * axis_x - positions[:, 0]
    return pose.replace_positions(positions)


_KINECT20_JOINTS = (
    "hip_center",
    "spine",
    "shoulder_center",
    "head",
    "shoulder_left",
    "elbow_left",
    "wrist_left",
    "hand_left",
    "shoulder_right",
    "elbow_right",
    "wrist_right",
    "hand_right",
    "hip_left",
    "knee_left",
    "ankle_left",
    "foot_left",
    "hip_right",
    "knee_right",
    "ankle_right",
    "foot_right",
)

_KINECT20_BONES = (
    (0, 1), (1, 2), (2, 3),
    (2, 4), (4, 5), (5, 6), (6, 7),
    (2, 8), (8, 9), (9, 10), (10, 11),
    (0, 12), (12, 13), (13, 14), (14, 15),
    (0, 16), (16, 17), (17, 18), (18, 19),
)

_KINECT20_LOWER = frozenset({0, 12, 13, 14, 15, 16, 17, 18, 19})

_KINECT20_MIRROR = (
    (4, 8), (5, 9), (6, 10), (7, 11),
    (12, 16), (13, 17), (14, 18), (15, 19),
)


def kinect20_layout() -> SkeletonLayout:
    """The 20-joint first-generation Kinect skeleton."""
    return SkeletonLayout(
        name="kinect20",
        joint_names=_KINECT20_JOINTS,
        bones=_KINECT20_BONES,
        lower_body=_KINECT20_LOWER,
        mirror_pairs=_KINECT20_MIRROR,
    )


_LAYOUTS: dict[str, SkeletonLayout] = {"kinect20": kinect20_layout()}


def get_layout(name: str) -> SkeletonLayout:
    """Look up a registered layout by name."""
    try:
        return _LAYOUTS[name]
    except KeyError:
        raise DataError(f"unknown layout name {name!r}") from None


def register_layout(layout: SkeletonLayout) -> None:
    """Make a layout resolvable by name in serialized files."""
    _LAYOUTS[layout.name] = layout
