"""Synthetic action data on the 20-joint layout.

Each synthetic class is defined by two canonical poses; sequences alternate
between them in short blocks with per-joint Gaussian jitter, mimicking a
subject holding and switching poses. Useful for demos and for exercising the
whole pipeline without any real recordings.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dataset import save_canonical
from .skeleton import PoseSequence, SkeletonPose, kinect20_layout

__all__ = ["canonical_pose_pairs", "synthetic_sequences", "write_synthetic_dataset"]

_BASE = {
    "hip_center": (0.00, 1.00),
    "spine": (0.00, 1.25),
    "shoulder_center": (0.00, 1.50),
    "head": (0.00, 1.80),
    "shoulder_left": (-0.22, 1.45),
    "elbow_left": (-0.30, 1.18),
    "wrist_left": (-0.34, 0.95),
    "hand_left": (-0.36, 0.85),
    "shoulder_right": (0.22, 1.45),
    "elbow_right": (0.30, 1.18),
    "wrist_right": (0.34, 0.95),
    "hand_right": (0.36, 0.85),
    "hip_left": (-0.12, 0.95),
    "knee_left": (-0.14, 0.52),
    "ankle_left": (-0.15, 0.08),
    "foot_left": (-0.22, 0.00),
    "hip_right": (0.12, 0.95),
    "knee_right": (0.14, 0.52),
    "ankle_right": (0.15, 0.08),
    "foot_right": (0.22, 0.00),
}

_HANDS_UP = {
    "elbow_left": (-0.30, 1.72),
    "wrist_left": (-0.33, 1.98),
    "hand_left": (-0.34, 2.08),
    "elbow_right": (0.30, 1.72),
    "wrist_right": (0.33, 1.98),
    "hand_right": (0.34, 2.08),
}

_RIGHT_ARM_OUT = {
    "elbow_right": (0.52, 1.45),
    "wrist_right": (0.78, 1.45),
    "hand_right": (0.88, 1.45),
}

_T_POSE = {
    "elbow_left": (-0.52, 1.45),
    "wrist_left": (-0.78, 1.45),
    "hand_left": (-0.88, 1.45),
    "elbow_right": (0.52, 1.45),
    "wrist_right": (0.78, 1.45),
    "hand_right": (0.88, 1.45),
}

_SQUAT = {
    "hip_center": (0.00, 0.72),
    "spine": (0.00, 0.97),
    "shoulder_center": (0.00, 1.22),
    "head": (0.00, 1.52),
    "shoulder_left": (-0.22, 1.17),
    "elbow_left": (-0.30, 0.92),
    "wrist_left": (-0.34, 0.70),
    "hand_left": (-0.36, 0.60),
    "shoulder_right": (0.22, 1.17),
    "elbow_right": (0.30, 0.92),
    "wrist_right": (0.34, 0.70),
    "hand_right": (0.36, 0.60),
    "hip_left": (-0.12, 0.68),
    "knee_left": (-0.30, 0.40),
    "ankle_left": (-0.15, 0.08),
    "hip_right": (0.12, 0.68),
    "knee_right": (0.30, 0.40),
    "ankle_right": (0.15, 0.08),
}

_LEAN_FORWARD = {
    "spine": (0.10, 1.22),
    "shoulder_center": (0.22, 1.40),
    "head": (0.38, 1.62),
    "shoulder_left": (0.02, 1.34),
    "elbow_left": (0.06, 1.06),
    "wrist_left": (0.10, 0.82),
    "hand_left": (0.12, 0.72),
    "shoulder_right": (0.42, 1.34),
    "elbow_right": (0.46, 1.06),
    "wrist_right": (0.50, 0.82),
    "hand_right": (0.52, 0.72),
}


def _pose_array(overrides: dict) -> np.ndarray:
    layout = kinect20_layout()
    merged = {**_BASE, **overrides}
    return np.array([merged[name] for name in layout.joint_names], dtype=np.float64)


def canonical_pose_pairs(n_classes: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Two canonical joint arrays per class, for up to four classes."""
    pairs = [
        (_pose_array({}), _pose_array(_HANDS_UP)),
        (_pose_array(_RIGHT_ARM_OUT), _pose_array(_T_POSE)),
        (_pose_array(_SQUAT), _pose_array(_LEAN_FORWARD)),
        (_pose_array({**_SQUAT, **_T_POSE}), _pose_array({**_HANDS_UP, **_RIGHT_ARM_OUT})),
    ]
    if not 1 <= n_classes <= len(pairs):
        raise ValueError(f"n_classes must be in 1..{len(pairs)}")
    return pairs[:n_classes]


def synthetic_sequences(
    n_classes: int = 3,
    per_class: int = 20,
    n_frames: int = 30,
    jitter: float = 0.03,
    seed: int = 0,
    block: int = 5,
) -> list[PoseSequence]:
    """Labeled jittered sequences; ``jitter`` is a fraction of body height.

    Sequence i of a class belongs to subject (i mod 10) + 1 with repetition
    i div 10, so cross-subject splits behave like on real recordings.
    """
    layout = kinect20_layout()
    pairs = canonical_pose_pairs(n_classes)
    heights = [
        max(a[:, 1].max() - a[:, 1].min(), b[:, 1].max() - b[:, 1].min()) for a, b in pairs
    ]
    rng = np.random.default_rng(seed)
    sequences = []
    for class_idx, (pose_a, pose_b) in enumerate(pairs):
        label = class_idx + 1
        sigma = jitter * heights[class_idx]
        for i in range(per_class):
            subject = (i % 10) + 1
            repetition = i // 10
            frames = []
            for t in range(n_frames):
                canonical = pose_a if (t // block) % 2 == 0 else pose_b
                positions = canonical + rng.normal(0.0, sigma, size=canonical.shape)
                frames.append(
                    SkeletonPose(
                        layout=layout,
                        positions=positions,
                        frame_index=t,
                        subject_id=subject,
                        action_label=label,
                    )
                )
            sequences.append(
                PoseSequence(
                    layout=layout,
                    frames=tuple(frames),
                    action_label=label,
                    subject_id=subject,
                    repetition=repetition,
                )
            )
    return sequences


def write_synthetic_dataset(
    out_dir,
    n_classes: int = 3,
    per_class: int = 20,
    n_frames: int = 30,
    jitter: float = 0.03,
    seed: int = 0,
) -> Path:
    """Write canonical sequence files plus a ready-to-run pipeline config.

    Returns the path of the generated config file.
    """
    out_dir = Path(out_dir)
    data_dir = out_dir / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    for seq in synthetic_sequences(n_classes, per_class, n_frames, jitter, seed):
        name = f"a{seq.action_label:02d}_s{seq.subject_id:02d}_e{seq.repetition + 1:02d}.json"
        (data_dir / name).write_text(save_canonical(seq), encoding="utf-8")
    config = {
        "data_dir": str(data_dir),
        "data_format": "canonical",
        "split": "cross_subject:1,3,5,7,9",
        "n_per_class": 3,
        "seed": seed,
        "out_dir": str(out_dir / "run"),
    }
    config_path = out_dir / "config.json"
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return config_path
