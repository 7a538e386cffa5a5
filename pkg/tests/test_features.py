"""Bank construction, prototype sampling and feature extraction tests."""

from __future__ import annotations

import numpy as np
import pytest

from skelact.detector import (
    ToleranceParams,
    VariantPolicy,
    apply_detector_variants,
    configure_detector,
)
from skelact.errors import DataError
from skelact.features import (
    KMEDOIDS_RESPONSE,
    DetectorBank,
    FeatureVector,
    bank_from_json,
    bank_to_json,
    build_bank,
    extract_features,
    sample_prototypes,
)
from skelact.skeleton import SkeletonPose, kinect20_layout
from skelact.synthetic import canonical_pose_pairs, synthetic_sequences

from conftest import rooted_layout, sequence_of


def class_sequences(label, n_frames, rng, layout=None, jitter=0.0, subject_id=0):
    layout = layout or kinect20_layout()
    base = canonical_pose_pairs(3)[label - 1][0]
    positions = [base + rng.normal(0.0, jitter, base.shape) for _ in range(n_frames)]
    return sequence_of(layout, positions, action_label=label, subject_id=subject_id)


class TestSamplePrototypes:
    def test_all_frames_when_n_equals_total(self):
        rng = np.random.default_rng(0)
        seq = class_sequences(1, 10, rng)
        chosen = sample_prototypes([seq], 10)
        assert [p.frame_index for p in chosen] == list(range(10))

    def test_uniform_stride_rule(self):
        # enumeration oracle for k * floor((T-1)/(n-1))
        rng = np.random.default_rng(1)
        seq = class_sequences(1, 100, rng)
        chosen = sample_prototypes([seq], 4)
        stride = (100 - 1) // (4 - 1)
        assert [p.frame_index for p in chosen] == [k * stride for k in range(4)]
        assert [p.frame_index for p in chosen] == [0, 33, 66, 99]

    def test_single_prototype_is_middle_frame(self):
        rng = np.random.default_rng(2)
        seq = class_sequences(1, 11, rng)
        assert sample_prototypes([seq], 1)[0].frame_index == 5

    def test_spans_sequences_in_order(self):
        rng = np.random.default_rng(3)
        seqs = [class_sequences(1, 5, rng, subject_id=s) for s in (1, 2)]
        chosen = sample_prototypes(seqs, 10)
        assert [p.subject_id for p in chosen] == [1] * 5 + [2] * 5

    def test_too_few_frames_rejected(self):
        rng = np.random.default_rng(4)
        seq = class_sequences(1, 3, rng)
        with pytest.raises(ValueError, match="at least"):
            sample_prototypes([seq], 4)

    def test_unknown_strategy_rejected(self):
        rng = np.random.default_rng(5)
        seq = class_sequences(1, 5, rng)
        with pytest.raises(ValueError, match="strategy"):
            sample_prototypes([seq], 2, strategy="magic")

    def test_kmedoids_recovers_cluster_representatives(self):
        layout = kinect20_layout()
        rng = np.random.default_rng(6)
        pairs = canonical_pose_pairs(3)
        positions = []
        for a, _ in pairs:
            positions.extend(a + rng.normal(0, 0.005, a.shape) for _ in range(6))
        seq = sequence_of(layout, positions, action_label=1)
        chosen = sample_prototypes(
            [seq], 3, strategy=KMEDOIDS_RESPONSE, tolerance=ToleranceParams(0.15)
        )
        clusters = sorted(p.frame_index // 6 for p in chosen)
        assert clusters == [0, 1, 2]

    def test_kmedoids_deterministic(self):
        rng = np.random.default_rng(7)
        seq = class_sequences(2, 20, rng, jitter=0.05)
        first = sample_prototypes([seq], 4, strategy=KMEDOIDS_RESPONSE,
                                  tolerance=ToleranceParams(0.15))
        second = sample_prototypes([seq], 4, strategy=KMEDOIDS_RESPONSE,
                                   tolerance=ToleranceParams(0.15))
        assert [p.frame_index for p in first] == [p.frame_index for p in second]


class TestBuildBank:
    def test_counting_contract(self):
        rng = np.random.default_rng(8)
        seqs = [class_sequences(label, 12, rng, jitter=0.02) for label in (2, 1)]
        bank = build_bank(seqs, n_per_class=3)
        assert len(bank) == 6
        assert bank.classes == (1, 2)
        assert bank.labels() == (1, 1, 1, 2, 2, 2)
        assert [d.provenance.class_label for d in bank.detectors] == [1, 1, 1, 2, 2, 2]

    def test_identical_frames_give_identical_detectors(self):
        rng = np.random.default_rng(9)
        seqs = [
            class_sequences(1, 10, rng),
            class_sequences(2, 10, rng, jitter=0.02),
        ]
        bank = build_bank(seqs, n_per_class=4)
        first = bank.detectors[0]
        for det in bank.detectors[1:4]:
            assert det.tuples == first.tuples

    def test_self_responses_are_one(self):
        rng = np.random.default_rng(10)
        seqs = [class_sequences(label, 9, rng, jitter=0.02) for label in (1, 2, 3)]
        bank = build_bank(seqs, n_per_class=3)
        for k, det in enumerate(bank.detectors):
            proto_frame_index = det.provenance.frame_index
            seq = seqs[k // 3]
            frame = seq.frames[proto_frame_index]
            assert extract_features(bank, frame).values[k] == 1.0

    def test_unlabeled_sequence_rejected(self):
        rng = np.random.default_rng(11)
        seq = class_sequences(1, 5, rng)
        unlabeled = sequence_of(seq.layout, [f.positions for f in seq.frames])
        with pytest.raises(ValueError, match="label"):
            build_bank([unlabeled], n_per_class=2)

    def test_per_class_body_part_mapping(self):
        rng = np.random.default_rng(12)
        seqs = [class_sequences(label, 6, rng, jitter=0.01) for label in (1, 2)]
        bank = build_bank(seqs, n_per_class=2, body_part={1: "upper"})
        assert all(d.body_part == "upper" for d in bank.detectors[:2])
        assert all(d.body_part == "full" for d in bank.detectors[2:])


class TestExtractFeatures:
    def test_matches_per_detector_oracle_bitwise(self):
        rng = np.random.default_rng(13)
        seqs = [class_sequences(label, 8, rng, jitter=0.03) for label in (1, 2)]
        bank = build_bank(seqs, n_per_class=2)
        frame = class_sequences(1, 1, rng, jitter=0.1).frames[0]
        values = extract_features(bank, frame).values
        oracle = np.array(
            [apply_detector_variants(d, frame, bank.variant_policy) for d in bank.detectors]
        )
        assert np.array_equal(values, oracle)

    def test_deterministic(self):
        rng = np.random.default_rng(14)
        seqs = [class_sequences(label, 8, rng, jitter=0.02) for label in (1, 3)]
        bank = build_bank(seqs, n_per_class=2)
        frame = seqs[0].frames[3]
        a = extract_features(bank, frame).values
        b = extract_features(bank, frame).values
        assert np.array_equal(a, b)

    def test_degenerate_frame_stays_in_range(self):
        rng = np.random.default_rng(15)
        seqs = [class_sequences(label, 8, rng, jitter=0.02) for label in (1, 2)]
        bank = build_bank(seqs, n_per_class=2)
        degenerate = SkeletonPose(layout=bank.layout, positions=np.zeros((20, 2)))
        fv = extract_features(bank, degenerate)
        assert np.all(fv.values > 0.0) and np.all(fv.values <= 1.0)

    def test_layout_mismatch_rejected(self):
        rng = np.random.default_rng(16)
        seqs = [class_sequences(label, 8, rng) for label in (1, 2)]
        bank = build_bank(seqs, n_per_class=2)
        other = rooted_layout(19)
        frame = SkeletonPose(layout=other, positions=np.zeros((20, 2)))
        with pytest.raises(ValueError, match="layout"):
            extract_features(bank, frame)

    def test_carries_frame_metadata(self):
        rng = np.random.default_rng(17)
        seqs = [class_sequences(label, 8, rng) for label in (1, 2)]
        bank = build_bank(seqs, n_per_class=2)
        fv = extract_features(bank, seqs[0].frames[5])
        assert fv.frame_index == 5
        assert fv.true_label == 1


class TestFeatureVectorValidation:
    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match=r"\(0, 1\]"):
            FeatureVector(values=np.array([0.5, 1.5]))
        with pytest.raises(ValueError, match=r"\(0, 1\]"):
            FeatureVector(values=np.array([0.0, 0.5]))

    def test_values_frozen(self):
        fv = FeatureVector(values=np.array([0.5, 1.0]))
        with pytest.raises(ValueError):
            fv.values[0] = 0.9


class TestBankSerialization:
    def build(self, seed=18):
        rng = np.random.default_rng(seed)
        seqs = [class_sequences(label, 10, rng, jitter=0.02) for label in (1, 2, 3)]
        return build_bank(
            seqs,
            n_per_class=2,
            body_part={2: "upper"},
            variant_policy=VariantPolicy(enable_reflection=True, scale_factors=(0.8, 1.2)),
        ), seqs

    def test_round_trip_features_bitwise_equal(self):
        bank, seqs = self.build()
        restored = bank_from_json(bank_to_json(bank))
        rng = np.random.default_rng(19)
        frames = [seq.frames[i] for seq in seqs for i in (0, 4, 9)]
        frames.append(
            SkeletonPose(layout=bank.layout, positions=rng.normal(0, 1, (20, 2)))
        )
        for frame in frames:
            a = extract_features(bank, frame).values
            b = extract_features(restored, frame).values
            assert np.array_equal(a, b)

    def test_round_trip_structure(self):
        bank, _ = self.build()
        restored = bank_from_json(bank_to_json(bank))
        assert restored.classes == bank.classes
        assert restored.per_class_count == bank.per_class_count
        assert restored.variant_policy == bank.variant_policy
        for a, b in zip(restored.detectors, bank.detectors):
            assert a.tuples == b.tuples

    def test_bad_documents_rejected(self):
        with pytest.raises(DataError, match="JSON"):
            bank_from_json("{not json")
        with pytest.raises(DataError, match="format"):
            bank_from_json('{"format": "other", "version": 1}')
        bank, _ = self.build()
        text = bank_to_json(bank).replace('"kinect20"', '"martian5"')
        with pytest.raises(DataError, match="unknown layout"):
            bank_from_json(text)


class TestBankValidation:
    def test_wrong_ordering_rejected(self):
        rng = np.random.default_rng(20)
        seqs = [class_sequences(label, 6, rng) for label in (1, 2)]
        bank = build_bank(seqs, n_per_class=2)
        with pytest.raises(ValueError, match="labeled"):
            DetectorBank(
                detectors=tuple(reversed(bank.detectors)),
                classes=bank.classes,
                per_class_count=2,
                variant_policy=bank.variant_policy,
            )

    def test_size_mismatch_rejected(self):
        rng = np.random.default_rng(21)
        seqs = [class_sequences(label, 6, rng) for label in (1, 2)]
        bank = build_bank(seqs, n_per_class=2)
        with pytest.raises(ValueError, match="size"):
            DetectorBank(
                detectors=bank.detectors[:-1],
                classes=bank.classes,
                per_class_count=2,
                variant_policy=bank.variant_policy,
            )


def test_synthetic_sequences_shapes():
    seqs = synthetic_sequences(n_classes=2, per_class=4, n_frames=6, seed=1)
    assert len(seqs) == 8
    assert all(len(s) == 6 for s in seqs)
    labels = sorted({s.action_label for s in seqs})
    assert labels == [1, 2]
