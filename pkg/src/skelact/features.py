"""Detector banks and response feature vectors.

A bank holds N detectors per action class, configured on prototype frames
sampled from the training sequences. Applying the bank to one frame yields
an M*N response vector that downstream classifiers consume. Banks are
immutable after construction and serialize to a versioned JSON document.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detector import (
    LOG_RESPONSE_FLOOR,
    PoseDetector,
    ToleranceParams,
    VariantPolicy,
    _pose_polar,
    apply_detector,
    configure_detector,
    detector_from_dict,
    detector_to_dict,
    expand_variants,
)
from .errors import DataError
from .skeleton import FULL, PoseSequence, SkeletonPose, get_layout

UNIFORM_STRIDE = "uniform_stride"
KMEDOIDS_RESPONSE = "kmedoids_response"
SAMPLING_STRATEGIES = (UNIFORM_STRIDE, KMEDOIDS_RESPONSE)

BANK_FORMAT = "skelact-bank"
BANK_VERSION = 1

__all__ = [
    "DetectorBank",
    "FeatureVector",
    "sample_prototypes",
    "build_bank",
    "extract_features",
    "extract_sequence_features",
    "bank_to_json",
    "bank_from_json",
    "save_bank",
    "load_bank",
    "UNIFORM_STRIDE",
    "KMEDOIDS_RESPONSE",
    "SAMPLING_STRATEGIES",
]


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Bank responses for one frame, all in (0, 1]."""

    values: np.ndarray
    frame_index: int = 0
    true_label: int | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("feature values must be a 1-D array")
        if not np.all((values > 0.0) & (values <= 1.0)):
            raise ValueError("feature values must lie in (0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class DetectorBank:
    """Ordered detectors for M classes, N per class.

    Detector order is (class ascending, prototype ascending) and defines the
    feature vector layout. Every detector carries its class label in its
    provenance.
    """

    detectors: tuple[PoseDetector, ...]
    classes: tuple[int, ...]
    per_class_count: int
    variant_policy: VariantPolicy = field(default_factory=VariantPolicy)

    def __post_init__(self):
        object.__setattr__(self, "detectors", tuple(self.detectors))
        object.__setattr__(self, "classes", tuple(self.classes))
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("duplicate class labels in bank")
        if list(self.classes) != sorted(self.classes):
            raise ValueError("bank classes must be sorted ascending")
        expected = len(self.classes) * self.per_class_count
        if len(self.detectors) != expected:
            raise ValueError(
                f"bank size {len(self.detectors)} does not match "
                f"{len(self.classes)} classes x {self.per_class_count}"
            )
        for k, det in enumerate(self.detectors):
            wanted = self.classes[k // self.per_class_count]
            if det.provenance.class_label != wanted:
                raise ValueError(
                    f"detector {k} labeled {det.provenance.class_label}, expected {wanted}"
                )
            if det.layout != self.detectors[0].layout:
                raise ValueError("all bank detectors must share one layout")
        object.__setattr__(self, "_stacked", None)

    @property
    def layout(self):
        return self.detectors[0].layout

    def __len__(self) -> int:
        return len(self.detectors)

    def labels(self) -> tuple[int, ...]:
        """Class label per feature dimension, in bank order."""
        return tuple(
            self.classes[k // self.per_class_count] for k in range(len(self.detectors))
        )

    def _variant_arrays(self):
        # Variant tuples stacked once so extraction is a handful of array ops
        # per frame; rows reproduce apply_detector on each variant bit for bit.
        if self._stacked is None:
            rows_rho, rows_phi, rows_tss, rows_w, rows_wsum, rows_sq = [], [], [], [], [], []
            group_of_row = []
            for k, det in enumerate(self.detectors):
                for variant in expand_variants(det, self.variant_policy):
                    rows_rho.append(variant._rho)
                    rows_phi.append(variant._phi)
                    rows_tss.append(variant._two_sigma_sq)
                    rows_w.append(variant._weights)
                    rows_wsum.append(variant._weight_sum)
                    rows_sq.append(variant.squared_exponent)
                    group_of_row.append(k)
            stacked = {
                "rho": np.array(rows_rho),
                "phi": np.array(rows_phi),
                "two_sigma_sq": np.array(rows_tss),
                "weights": np.array(rows_w),
                "weight_sum": np.array(rows_wsum),
                "squared": np.array(rows_sq, dtype=bool),
                "group": np.array(group_of_row),
            }
            object.__setattr__(self, "_stacked", stacked)
        return self._stacked


def _concat_frames(sequences) -> list[SkeletonPose]:
    frames: list[SkeletonPose] = []
    for seq in sequences:
        frames.extend(seq.frames)
    return frames


def _stride_indices(total: int, n: int) -> list[int]:
    """Equally spaced frame indices: k * floor((T-1)/(n-1)), middle frame for n=1."""
    if n == 1:
        return [(total - 1) // 2]
    stride = (total - 1) // (n - 1)
    return [k * stride for k in range(n)]


def sample_prototypes(
    sequences,
    n: int,
    strategy: str = UNIFORM_STRIDE,
    body_part: str = FULL,
    tolerance: ToleranceParams | None = None,
    candidate_cap: int = 200,
) -> list[SkeletonPose]:
    """Pick ``n`` prototype frames from one class's training sequences.

    ``uniform_stride`` concatenates the sequences' frames and takes n frames
    at equal temporal stride. ``kmedoids_response`` clusters frames under the
    dissimilarity 1 - mean mutual detector response and returns the medoids;
    frames are first thinned to ``candidate_cap`` candidates to bound the
    pairwise response matrix.
    """
    if strategy not in SAMPLING_STRATEGIES:
        raise ValueError(f"unknown sampling strategy {strategy!r}")
    frames = _concat_frames(sequences)
    if len(frames) < n:
        raise ValueError(f"need at least {n} frames, got {len(frames)}")
    if strategy == UNIFORM_STRIDE:
        return [frames[i] for i in _stride_indices(len(frames), n)]
    candidates = frames
    if len(candidates) > candidate_cap:
        candidates = [candidates[i] for i in _stride_indices(len(candidates), candidate_cap)]
    return _kmedoids_frames(candidates, n, body_part, tolerance)


def _kmedoids_frames(frames, n, body_part, tolerance) -> list[SkeletonPose]:
    detectors = [
        configure_detector(f, body_part=body_part, tolerance=tolerance) for f in frames
    ]
    count = len(frames)
    responses = np.empty((count, count))
    for i, det in enumerate(detectors):
        for j, frame in enumerate(frames):
            responses[i, j] = apply_detector(det, frame)
    distance = 1.0 - 0.5 * (responses + responses.T)

    medoids = _stride_indices(count, n)
    for _ in range(100):
        assignment = np.argmin(distance[:, medoids], axis=1)
        updated = list(medoids)
        for c in range(n):
            members = np.nonzero(assignment == c)[0]
            if members.size == 0:
                continue
            within = distance[np.ix_(members, members)].sum(axis=1)
            updated[c] = int(members[int(np.argmin(within))])
        if updated == medoids:
            break
        medoids = updated
    return [frames[i] for i in sorted(medoids)]


def build_bank(
    sequences,
    n_per_class: int,
    body_part=FULL,
    tolerance: ToleranceParams | None = None,
    variant_policy: VariantPolicy | None = None,
    strategy: str = UNIFORM_STRIDE,
    squared_exponent: bool = False,
) -> DetectorBank:
    """Configure N detectors per class from labeled training sequences.

    ``body_part`` is either one part name for every class or a mapping from
    class label to part name (missing classes default to the full body).
    Ordering is deterministic: classes ascending, prototypes in sampling
    order.
    """
    by_class: dict[int, list[PoseSequence]] = {}
    for seq in sequences:
        if seq.action_label is None:
            raise ValueError("training sequences must carry an action label")
        by_class.setdefault(seq.action_label, []).append(seq)
    if not by_class:
        raise ValueError("no training sequences given")

    def part_for(label: int) -> str:
        if isinstance(body_part, str):
            return body_part
        return body_part.get(label, FULL)

    detectors: list[PoseDetector] = []
    classes = sorted(by_class)
    for label in classes:
        prototypes = sample_prototypes(
            by_class[label],
            n_per_class,
            strategy=strategy,
            body_part=part_for(label),
            tolerance=tolerance,
        )
        for proto in prototypes:
            detectors.append(
                configure_detector(
                    proto,
                    body_part=part_for(label),
                    tolerance=tolerance,
                    squared_exponent=squared_exponent,
                    source_id=f"subject{proto.subject_id}",
                )
            )
    return DetectorBank(
        detectors=tuple(detectors),
        classes=tuple(classes),
        per_class_count=n_per_class,
        variant_policy=variant_policy if variant_policy is not None else VariantPolicy(),
    )


def extract_features(bank: DetectorBank, frame: SkeletonPose) -> FeatureVector:
    """Response of every bank detector (max over its variants) to one frame."""
    if frame.layout != bank.layout:
        raise ValueError("frame layout does not match bank layout")
    stacked = bank._variant_arrays()
    test_rho, test_phi = _pose_polar(frame)
    rho, phi = stacked["rho"], stacked["phi"]
    d_sq = test_rho * test_rho + rho * rho - 2.0 * test_rho * rho * np.cos(test_phi - phi)
    d_lin = np.sqrt(np.maximum(d_sq, 0.0))
    d = np.where(stacked["squared"][:, None], d_sq, d_lin)
    log_scores = -d / stacked["two_sigma_sq"]
    weights = stacked["weights"]
    mean_log = np.array(
        [np.dot(weights[r], log_scores[r]) for r in range(weights.shape[0])]
    ) / stacked["weight_sum"]

    n_detectors = len(bank.detectors)
    best = np.full(n_detectors, LOG_RESPONSE_FLOOR)
    np.maximum.at(best, stacked["group"], mean_log)
    values = np.array([math.exp(m) for m in best])
    return FeatureVector(
        values=values, frame_index=frame.frame_index, true_label=frame.action_label
    )


def extract_sequence_features(
    bank: DetectorBank, sequence: PoseSequence, frame_stride: int = 1
) -> list[FeatureVector]:
    """Feature vector per frame, optionally thinned by a temporal stride."""
    if frame_stride < 1:
        raise ValueError("frame_stride must be >= 1")
    return [extract_features(bank, f) for f in sequence.frames[::frame_stride]]


def bank_to_json(bank: DetectorBank) -> str:
    document = {
        "format": BANK_FORMAT,
        "version": BANK_VERSION,
        "layout": bank.layout.name,
        "classes": list(bank.classes),
        "per_class_count": bank.per_class_count,
        "variant_policy": {
            "enable_reflection": bank.variant_policy.enable_reflection,
            "scale_factors": list(bank.variant_policy.scale_factors),
            "combine": bank.variant_policy.combine,
        },
        "detectors": [
            {"class_label": det.provenance.class_label, **detector_to_dict(det)}
            for det in bank.detectors
        ],
    }
    return json.dumps(document, indent=2)


def bank_from_json(text: str | bytes) -> DetectorBank:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"bank document is not valid JSON: {exc}") from exc
    if document.get("format") != BANK_FORMAT:
        raise DataError(f"not a detector bank document: format={document.get('format')!r}")
    if document.get("version") != BANK_VERSION:
        raise DataError(f"unsupported bank version {document.get('version')!r}")
    layout = get_layout(document["layout"])
    policy_doc = document.get("variant_policy", {})
    policy = VariantPolicy(
        enable_reflection=bool(policy_doc.get("enable_reflection", True)),
        scale_factors=tuple(policy_doc.get("scale_factors", (0.8, 1.2))),
        combine=policy_doc.get("combine", "max"),
    )
    try:
        detectors = tuple(
            detector_from_dict(entry, layout) for entry in document["detectors"]
        )
        return DetectorBank(
            detectors=detectors,
            classes=tuple(document["classes"]),
            per_class_count=int(document["per_class_count"]),
            variant_policy=policy,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed bank document: {exc}") from exc


def save_bank(bank: DetectorBank, path) -> None:
    Path(path).write_text(bank_to_json(bank), encoding="utf-8")


def load_bank(path) -> DetectorBank:
    return bank_from_json(Path(path).read_text(encoding="utf-8"))
