"""Geometry and domain-type tests for the skeleton module."""

from __future__ import annotations

import itertools
import math

import numpy as np
import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skelact.skeleton import (
    PoseSequence,
    SkeletonLayout,
    SkeletonPose,
    barycenter,
    from_polar,
    get_layout,
    kinect20_layout,
    mirror_pose,
    normalize_angle,
    skeletal_distance,
    to_polar,
)
from skelact.errors import DataError

from conftest import chain_layout, random_pose, single_joint_layout

finite_coord = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


class TestLayoutValidation:
    def test_kinect20_partition(self, kinect20):
        assert kinect20.n_joints == 20
        assert kinect20.upper_body | kinect20.lower_body == set(range(20))
        assert not kinect20.upper_body & kinect20.lower_body
        assert kinect20.index_of("hip_center") in kinect20.lower_body

    def test_mirror_map_is_involution(self, kinect20):
        m = kinect20.mirror_map
        assert all(m[m[i]] == i for i in range(20))
        assert m[kinect20.index_of("hand_left")] == kinect20.index_of("hand_right")

    def test_cycle_rejected(self):
        with pytest.raises(ValueError, match="tree"):
            SkeletonLayout(
                name="bad",
                joint_names=("a", "b", "c"),
                bones=((0, 1), (1, 2), (2, 0)),
                lower_body=frozenset(),
            )

    def test_disconnected_rejected(self):
        # n-1 distinct edges but one isolated joint (cycle elsewhere)
        with pytest.raises(ValueError, match="connect"):
            SkeletonLayout(
                name="bad",
                joint_names=("a", "b", "c", "d"),
                bones=((0, 1), (1, 2), (2, 0)),
                lower_body=frozenset(),
            )

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError, match="unique"):
            SkeletonLayout(
                name="bad", joint_names=("a", "a"), bones=((0, 1),), lower_body=frozenset()
            )

    def test_bad_mirror_pair_rejected(self):
        with pytest.raises(ValueError, match="mirror"):
            chain = chain_layout(3)
            SkeletonLayout(
                name="bad",
                joint_names=chain.joint_names,
                bones=chain.bones,
                lower_body=frozenset(),
                mirror_pairs=((0, 0),),
            )

    def test_unknown_reference_joint_rejected(self):
        with pytest.raises(ValueError, match="reference"):
            SkeletonLayout(
                name="bad",
                joint_names=("a", "b"),
                bones=((0, 1),),
                lower_body=frozenset(),
                reference_joint="missing",
            )

    def test_registry(self, kinect20):
        assert get_layout("kinect20") == kinect20
        with pytest.raises(DataError, match="unknown layout"):
            get_layout("nope")


class TestPoseValidation:
    def test_shape_checked(self, kinect20):
        with pytest.raises(ValueError, match="shape"):
            SkeletonPose(layout=kinect20, positions=np.zeros((3, 2)))

    def test_nonfinite_rejected(self, kinect20):
        positions = np.zeros((20, 2))
        positions[4, 0] = np.inf
        with pytest.raises(ValueError, match="finite"):
            SkeletonPose(layout=kinect20, positions=positions)

    def test_confidence_range_checked(self, kinect20):
        with pytest.raises(ValueError, match="confidence"):
            SkeletonPose(
                layout=kinect20,
                positions=np.zeros((20, 2)),
                confidence=np.full(20, 1.5),
            )

    def test_positions_frozen(self, kinect20):
        pose = SkeletonPose(layout=kinect20, positions=np.zeros((20, 2)))
        with pytest.raises(ValueError):
            pose.positions[0, 0] = 1.0

    def test_sequence_requires_increasing_frames(self, kinect20):
        frames = [
            SkeletonPose(layout=kinect20, positions=np.zeros((20, 2)), frame_index=i)
            for i in (0, 0)
        ]
        with pytest.raises(ValueError, match="increasing"):
            PoseSequence(layout=kinect20, frames=tuple(frames))

    def test_sequence_requires_shared_layout(self, kinect20):
        other = chain_layout(20)
        frames = (
            SkeletonPose(layout=kinect20, positions=np.zeros((20, 2)), frame_index=0),
            SkeletonPose(layout=other, positions=np.zeros((20, 2)), frame_index=1),
        )
        with pytest.raises(ValueError, match="layout"):
            PoseSequence(layout=kinect20, frames=frames)


class TestBarycenter:
    def test_single_joint(self):
        pose = SkeletonPose(layout=single_joint_layout(), positions=[[3.0, 4.0]])
        assert barycenter(pose).tolist() == [3.0, 4.0]

    def test_two_joints_symmetry(self):
        pose = SkeletonPose(layout=chain_layout(2), positions=[[0, 0], [2, 0]])
        assert barycenter(pose).tolist() == [1.0, 0.0]

    def test_three_joints_mean(self):
        # brute-force summation oracle
        points = [[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]]
        expected_x = sum(p[0] for p in points) / 3
        expected_y = sum(p[1] for p in points) / 3
        pose = SkeletonPose(layout=chain_layout(3), positions=points)
        assert barycenter(pose) == pytest.approx([expected_x, expected_y], abs=0)
        assert barycenter(pose).tolist() == [1.0, 1.0]

    def test_named_reference_joint(self):
        layout = SkeletonLayout(
            name="named",
            joint_names=("root", "tip"),
            bones=((0, 1),),
            lower_body=frozenset(),
            reference_joint="root",
        )
        pose = SkeletonPose(layout=layout, positions=[[5.0, 6.0], [100.0, 100.0]])
        assert barycenter(pose).tolist() == [5.0, 6.0]

    @given(tx=finite_coord, ty=finite_coord)
    @settings(max_examples=50, deadline=None)
    def test_translation_equivariance(self, tx, ty):
        layout = chain_layout(4)
        rng = np.random.default_rng(7)
        pose = random_pose(layout, rng)
        moved = pose.replace_positions(pose.positions + np.array([tx, ty]))
        expected = barycenter(pose) + np.array([tx, ty])
        assert barycenter(moved) == pytest.approx(expected, rel=1e-12, abs=1e-6)


class TestPolar:
    @pytest.mark.parametrize(
        "point,reference,expected",
        [
            ((1, 0), (0, 0), (1.0, 0.0)),
            ((0, 2), (0, 0), (2.0, math.pi / 2)),
            ((0, 0), (0, 0), (0.0, 0.0)),
        ],
    )
    def test_examples(self, point, reference, expected):
        assert to_polar(point, reference) == pytest.approx(expected, abs=1e-15)

    @given(px=finite_coord, py=finite_coord, rx=finite_coord, ry=finite_coord)
    @settings(max_examples=200, deadline=None)
    def test_round_trip(self, px, py, rx, ry):
        rho, phi = to_polar((px, py), (rx, ry))
        assert -math.pi < phi <= math.pi
        back = from_polar(rho, phi, (rx, ry))
        scale = max(1.0, abs(px), abs(py), abs(rx), abs(ry))
        assert back == pytest.approx([px, py], abs=1e-9 * scale)

    def test_negative_x_axis_angle_is_positive_pi(self):
        assert to_polar((-1, 0), (0, 0))[1] == math.pi
        assert to_polar((-1, -0.0), (0, 0))[1] == math.pi

    def test_normalize_angle_range(self):
        for phi in (-9.5, -math.pi, 0.0, math.pi, 9.5, 100.0):
            wrapped = normalize_angle(phi)
            assert -math.pi < wrapped <= math.pi
            assert math.cos(wrapped) == pytest.approx(math.cos(phi), abs=1e-12)
            assert math.sin(wrapped) == pytest.approx(math.sin(phi), abs=1e-12)


class TestSkeletalDistance:
    def test_same_joint_zero(self, kinect20):
        pose = random_pose(kinect20, np.random.default_rng(0))
        assert skeletal_distance(pose, 5, 5) == 0.0

    def test_chain_path_sums(self):
        layout = chain_layout(3)
        pose = SkeletonPose(layout=layout, positions=[[0, 0], [0, 1], [0, 3]])
        assert skeletal_distance(pose, 0, 2) == pytest.approx(3.0, abs=1e-12)
        assert skeletal_distance(pose, 1, 2) == pytest.approx(2.0, abs=1e-12)

    def test_matches_networkx_oracle(self, kinect20):
        rng = np.random.default_rng(3)
        pose = random_pose(kinect20, rng)
        graph = nx.Graph()
        for a, b in kinect20.bones:
            graph.add_edge(a, b, weight=float(np.linalg.norm(pose.positions[a] - pose.positions[b])))
        for a in range(0, 20, 3):
            for b in range(0, 20, 4):
                expected = nx.shortest_path_length(graph, a, b, weight="weight")
                assert skeletal_distance(pose, a, b) == pytest.approx(expected, rel=1e-12)

    def test_metric_properties_exhaustive(self):
        layout = chain_layout(5)
        rng = np.random.default_rng(11)
        pose = random_pose(layout, rng)
        n = layout.n_joints
        d = [[skeletal_distance(pose, a, b) for b in range(n)] for a in range(n)]
        for a, b in itertools.product(range(n), repeat=2):
            assert d[a][b] == pytest.approx(d[b][a], abs=1e-12)
            if a != b:
                assert d[a][b] > 0.0
        for a, b, c in itertools.product(range(n), repeat=3):
            assert d[a][c] <= d[a][b] + d[b][c] + 1e-9

    def test_accepts_joint_ids(self, kinect20):
        pose = random_pose(kinect20, np.random.default_rng(1))
        by_index = skeletal_distance(pose, 3, 7)
        by_id = skeletal_distance(pose, kinect20.joint("head"), kinect20.joint("hand_left"))
        assert by_index == by_id


class TestMirrorPose:
    def test_point_reflection(self):
        pose = SkeletonPose(layout=chain_layout(2), positions=[[1, 5], [0, 1]])
        mirrored = mirror_pose(pose, 0.0)
        assert mirrored.positions[0].tolist() == [-1.0, 5.0]

    def test_point_on_axis_unchanged(self):
        pose = SkeletonPose(layout=single_joint_layout(), positions=[[2.0, 3.0]])
        assert mirror_pose(pose, 2.0).positions[0].tolist() == [2.0, 3.0]

    def test_involution_exact_about_origin(self, kinect20):
        pose = random_pose(kinect20, np.random.default_rng(5))
        twice = mirror_pose(mirror_pose(pose, 0.0), 0.0)
        assert np.array_equal(twice.positions, pose.positions)

    def test_involution_within_one_ulp_any_axis(self, kinect20):
        pose = random_pose(kinect20, np.random.default_rng(5))
        twice = mirror_pose(mirror_pose(pose, 1.25), 1.25)
        np.testing.assert_allclose(twice.positions, pose.positions, rtol=1e-15, atol=1e-15)
