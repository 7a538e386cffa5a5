"""Shared fixtures and helpers."""

from __future__ import annotations

import numpy as np
import pytest

from skelact.skeleton import PoseSequence, SkeletonLayout, SkeletonPose, kinect20_layout


@pytest.fixture(scope="session")
def kinect20():
    return kinect20_layout()


def chain_layout(n: int, name: str = "chain", lower=()) -> SkeletonLayout:
    """Straight-chain layout without mirror pairs (its mirror map is identity)."""
    return SkeletonLayout(
        name=f"{name}{n}",
        joint_names=tuple(f"j{i}" for i in range(n)),
        bones=tuple((i, i + 1) for i in range(n - 1)),
        lower_body=frozenset(lower),
    )


def single_joint_layout() -> SkeletonLayout:
    return SkeletonLayout(
        name="single", joint_names=("only",), bones=(), lower_body=frozenset()
    )


def rooted_layout(n_leaves: int) -> SkeletonLayout:
    """Star layout whose root joint is the reference point (pinned, not the mean)."""
    return SkeletonLayout(
        name=f"star{n_leaves}",
        joint_names=("root",) + tuple(f"leaf{i}" for i in range(n_leaves)),
        bones=tuple((0, i + 1) for i in range(n_leaves)),
        lower_body=frozenset(),
        reference_joint="root",
    )


def random_pose(layout: SkeletonLayout, rng, spread: float = 1.0, **kwargs) -> SkeletonPose:
    return SkeletonPose(
        layout=layout,
        positions=rng.normal(0.0, spread, size=(layout.n_joints, 2)),
        **kwargs,
    )


def physical_mirror(pose: SkeletonPose, axis_x: float) -> SkeletonPose:
    """Mirror coordinates about x = axis_x and swap left/right joint labels.

    This is what a pose estimator would output for a subject performing the
    mirrored action: anatomical labels stay correct while geometry flips.
    """
    from skelact.skeleton import mirror_pose

    mirrored = mirror_pose(pose, axis_x)
    permuted = mirrored.positions[list(pose.layout.mirror_map)]
    return mirrored.replace_positions(permuted)


def sequence_of(layout, frames_positions, **kwargs) -> PoseSequence:
    frames = tuple(
        SkeletonPose(
            layout=layout,
            positions=positions,
            frame_index=i,
            subject_id=kwargs.get("subject_id", 0),
            action_label=kwargs.get("action_label"),
        )
        for i, positions in enumerate(frames_positions)
    )
    return PoseSequence(layout=layout, frames=frames, **kwargs)
