"""Trainable pose detectors.

A detector is configured from a single prototype pose: for every joint it
records the polar position about the reference point together with a
tolerance width and an importance weight. Applying a detector to a test pose
scores each joint with a Gaussian-style function of the distance between the
recorded position and the homologous test joint, then fuses the joint scores
into one response with a weighted geometric mean. Reflected and rescaled
copies of a detector provide tolerance to mirrored and nearer/farther
performances of the same pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .skeleton import (
    BODY_PARTS,
    FULL,
    LOWER,
    UPPER,
    SkeletonLayout,
    SkeletonPose,
    barycenter,
    normalize_angle,
    skeletal_distance,
    to_polar,
)

# Responses are floored at the smallest normal float so they stay strictly
# positive even for pathologically distant poses.
LOG_RESPONSE_FLOOR = float(np.log(np.finfo(np.float64).tiny))

__all__ = [
    "JointTuple",
    "ToleranceParams",
    "DetectorProvenance",
    "VariantPolicy",
    "PoseDetector",
    "sigma_for_joint",
    "default_tolerance",
    "configure_detector",
    "joint_score",
    "apply_detector",
    "reflect_detector",
    "scale_detector",
    "expand_variants",
    "apply_detector_variants",
    "detector_to_dict",
    "detector_from_dict",
]


@dataclass(frozen=True)
class JointTuple:
    """Per-joint model entry: joint index, polar position, tolerance, weight."""

    joint: int
    rho: float
    phi: float
    sigma: float
    weight: float

    def __post_init__(self):
        if self.rho < 0.0:
            raise ValueError("rho must be >= 0")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be > 0")
        if self.weight < 0.0:
            raise ValueError("weight must be >= 0")


@dataclass(frozen=True)
class ToleranceParams:
    """Linear tolerance profile sigma(d) = sigma0 + alpha * d.

    ``d`` is the skeletal distance of a joint from the reference joint, so
    joints farther out along the limbs get wider position tolerance.
    """

    sigma0: float
    alpha: float = 0.05

    def __post_init__(self):
        if self.sigma0 <= 0.0:
            raise ValueError("sigma0 must be > 0")
        if self.alpha < 0.0:
            raise ValueError("alpha must be >= 0")


@dataclass(frozen=True)
class DetectorProvenance:
    """Where a detector's prototype came from."""

    source_id: str = ""
    frame_index: int = 0
    class_label: int | None = None


@dataclass(frozen=True)
class VariantPolicy:
    """Which modified detector copies to evaluate alongside the original.

    ``scale_factors`` lists radial scale factors applied to every rho (the
    original scale 1 is always evaluated); ``enable_reflection`` adds the
    mirrored copy of each scale. Variant responses are combined by maximum.
    """

    enable_reflection: bool = True
    scale_factors: tuple[float, ...] = (0.8, 1.2)
    combine: str = "max"

    def __post_init__(self):
        object.__setattr__(self, "scale_factors", tuple(float(s) for s in self.scale_factors))
        if any(s <= 0.0 for s in self.scale_factors):
            raise ValueError("scale factors must be > 0")
        if self.combine != "max":
            raise ValueError(f"unsupported combine rule {self.combine!r}")


@dataclass(frozen=True)
class PoseDetector:
    """Configured model of one prototype pose.

    Holds exactly one :class:`JointTuple` per layout joint, ordered by joint
    index. ``body_part`` records which half of the skeleton carries weight;
    tuples outside it have weight zero and never influence the response.
    ``squared_exponent`` switches the joint score from exp(-D / 2*sigma^2)
    to exp(-D^2 / 2*sigma^2).
    """

    layout: SkeletonLayout
    tuples: tuple[JointTuple, ...]
    tolerance: ToleranceParams
    body_part: str = FULL
    squared_exponent: bool = False
    provenance: DetectorProvenance = field(default_factory=DetectorProvenance)

    def __post_init__(self):
        n = self.layout.n_joints
        object.__setattr__(self, "tuples", tuple(self.tuples))
        if len(self.tuples) != n:
            raise ValueError(f"need exactly one tuple per joint ({n}), got {len(self.tuples)}")
        for i, tup in enumerate(self.tuples):
            if tup.joint != i:
                raise ValueError("tuples must be ordered by joint index, one per joint")
        if self.body_part not in BODY_PARTS:
            raise ValueError(f"unknown body part {self.body_part!r}")
        weights = np.array([t.weight for t in self.tuples], dtype=np.float64)
        if not np.any(weights > 0.0):
            raise ValueError("detector needs at least one positive joint weight")
        if self.body_part != FULL:
            inactive = (
                self.layout.lower_body if self.body_part == UPPER else self.layout.upper_body
            )
            if any(weights[i] != 0.0 for i in inactive):
                raise ValueError(f"{self.body_part} detector has weight outside its body part")
        for arr_name, values in (
            ("_rho", [t.rho for t in self.tuples]),
            ("_phi", [t.phi for t in self.tuples]),
            ("_weights", weights),
            ("_two_sigma_sq", [2.0 * t.sigma * t.sigma for t in self.tuples]),
        ):
            arr = np.array(values, dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, arr_name, arr)
        object.__setattr__(self, "_weight_sum", float(weights.sum()))


def sigma_for_joint(tolerance: ToleranceParams, dbar: float) -> float:
    """Tolerance width for a joint at skeletal distance ``dbar`` from the reference."""
    if dbar < 0.0:
        raise ValueError("skeletal distance must be >= 0")
    return tolerance.sigma0 + tolerance.alpha * dbar


def _reference_joint_index(pose: SkeletonPose) -> int:
    """Layout joint nearest the reference point (ties to the lowest index)."""
    deltas = pose.positions - barycenter(pose)
    return int(np.argmin(np.hypot(deltas[:, 0], deltas[:, 1])))


def default_tolerance(prototype: SkeletonPose, alpha: float = 0.05) -> ToleranceParams:
    """Tolerance tied to body size: sigma0 is 10% of the reference-to-head reach.

    Reach is the skeletal distance from the joint nearest the reference point
    to the head joint, falling back on the farthest joint for layouts without
    a named head.
    """
    ref = _reference_joint_index(prototype)
    names = prototype.layout.joint_names
    reach = 0.0
    if "head" in names:
        reach = skeletal_distance(prototype, ref, names.index("head"))
    if reach <= 0.0:
        reach = max(
            skeletal_distance(prototype, ref, j) for j in range(prototype.layout.n_joints)
        )
    if reach <= 0.0:
        raise ValueError("degenerate prototype: zero skeletal reach, pass explicit tolerance")
    return ToleranceParams(sigma0=0.1 * reach, alpha=alpha)


def configure_detector(
    prototype: SkeletonPose,
    body_part: str = FULL,
    tolerance: ToleranceParams | None = None,
    weights=None,
    squared_exponent: bool = False,
    source_id: str = "",
) -> PoseDetector:
    """Learn a detector from one prototype pose.

    Each joint's polar position is taken about the prototype's reference
    point; its tolerance width grows linearly with the skeletal distance
    from the joint nearest that reference point. ``weights`` default to one
    per joint; joints outside ``body_part`` are forced to weight zero so the
    detector ignores the inactive half of the body.
    """
    layout = prototype.layout
    n = layout.n_joints
    if tolerance is None:
        tolerance = default_tolerance(prototype)
    if weights is None:
        weights = np.ones(n, dtype=np.float64)
    else:
        weights = np.array(weights, dtype=np.float64)
        if weights.shape != (n,):
            raise ValueError(f"weights must have shape ({n},)")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0.0):
            raise ValueError("weights must be finite and >= 0")
    active = layout.body_part_indices(body_part)
    weights = np.where([i in active for i in range(n)], weights, 0.0)
    if not np.any(weights > 0.0):
        raise ValueError("all effective joint weights are zero")

    reference = barycenter(prototype)
    deltas = prototype.positions - reference
    rho = np.hypot(deltas[:, 0], deltas[:, 1])
    phi = np.arctan2(deltas[:, 1], deltas[:, 0])
    phi = np.where(rho == 0.0, 0.0, phi)
    ref_joint = _reference_joint_index(prototype)
    tuples = tuple(
        JointTuple(
            joint=i,
            rho=float(rho[i]),
            phi=float(phi[i]),
            sigma=sigma_for_joint(tolerance, skeletal_distance(prototype, i, ref_joint)),
            weight=float(weights[i]),
        )
        for i in range(n)
    )
    return PoseDetector(
        layout=layout,
        tuples=tuples,
        tolerance=tolerance,
        body_part=body_part,
        squared_exponent=squared_exponent,
        provenance=DetectorProvenance(
            source_id=source_id,
            frame_index=prototype.frame_index,
            class_label=prototype.action_label,
        ),
    )


def _pose_polar(pose: SkeletonPose) -> tuple[np.ndarray, np.ndarray]:
    reference = barycenter(pose)
    deltas = pose.positions - reference
    rho = np.hypot(deltas[:, 0], deltas[:, 1])
    phi = np.arctan2(deltas[:, 1], deltas[:, 0])
    return rho, np.where(rho == 0.0, 0.0, phi)


def _distance_exponents(test_rho, test_phi, model_rho, model_phi, squared: bool):
    """Per-joint distance term fed to the exponential score.

    The squared distance between the model position and the test joint,
    both expressed in polar form about their reference points, is
    (t - m)^2 + 4 t m sin^2((phi_t - phi_m) / 2): the chord form of the law
    of cosines, which stays accurate for nearly coincident points. It also
    makes the evaluation a pure function of the stored tuple values, so a
    deserialized detector reproduces responses exactly and a detector
    applied to its own prototype scores a distance of exactly zero.
    """
    radial = test_rho - model_rho
    half_sin = np.sin(0.5 * (test_phi - model_phi))
    d_sq = radial * radial + 4.0 * test_rho * model_rho * half_sin * half_sin
    if squared:
        return d_sq
    return np.sqrt(d_sq)


def joint_score(
    detector_tuple: JointTuple,
    test_position,
    test_reference,
    squared: bool = False,
) -> float:
    """Similarity in (0, 1] of one test joint to its model position.

    The model position is reconstructed from the tuple's polar coordinates
    about ``test_reference``; the score is exp(-D / 2*sigma^2) of the
    Euclidean distance D to ``test_position`` (or of D^2 when ``squared``).
    """
    test_rho, test_phi = to_polar(test_position, test_reference)
    d = _distance_exponents(
        test_rho, test_phi, detector_tuple.rho, detector_tuple.phi, squared
    )
    return float(np.exp(-d / (2.0 * detector_tuple.sigma * detector_tuple.sigma)))


def apply_detector(detector: PoseDetector, test: SkeletonPose) -> float:
    """Response in (0, 1] of a detector to a test pose.

    The weighted geometric mean of the per-joint scores, evaluated in log
    space: exponents are averaged with the joint weights before a single
    exponential, so very small joint scores cannot underflow the product.
    Zero-weight joints contribute nothing.
    """
    if test.layout != detector.layout:
        raise ValueError(
            f"layout mismatch: detector on {detector.layout.name!r}, pose on {test.layout.name!r}"
        )
    test_rho, test_phi = _pose_polar(test)
    d = _distance_exponents(
        test_rho, test_phi, detector._rho, detector._phi, detector.squared_exponent
    )
    log_scores = -d / detector._two_sigma_sq
    mean_log = float(np.dot(detector._weights, log_scores)) / detector._weight_sum
    return float(math.exp(max(mean_log, LOG_RESPONSE_FLOOR)))


def reflect_detector(detector: PoseDetector) -> PoseDetector:
    """Mirror image of a detector about the vertical axis through the reference.

    Every angle phi becomes pi - phi and every tuple moves to its left/right
    partner joint, so a pose performed with the opposite side of the body
    matches the reflected model. Radii, tolerances and weights are kept.
    """
    mirror = detector.layout.mirror_map
    reordered: list[JointTuple | None] = [None] * len(detector.tuples)
    for tup in detector.tuples:
        target = mirror[tup.joint]
        reordered[target] = JointTuple(
            joint=target,
            rho=tup.rho,
            phi=normalize_angle(math.pi - tup.phi),
            sigma=tup.sigma,
            weight=tup.weight,
        )
    return replace(detector, tuples=tuple(reordered))


def scale_detector(detector: PoseDetector, eta: float) -> PoseDetector:
    """Detector with every radius multiplied by ``eta``; tolerances unchanged."""
    eta = float(eta)
    if eta <= 0.0:
        raise ValueError("scale factor must be > 0")
    if eta == 1.0:
        return detector
    scaled = tuple(replace(t, rho=eta * t.rho) for t in detector.tuples)
    return replace(detector, tuples=scaled)


def expand_variants(detector: PoseDetector, policy: VariantPolicy) -> tuple[PoseDetector, ...]:
    """All detector copies a policy asks for, the unmodified original first."""
    scales = (1.0,) + tuple(s for s in policy.scale_factors if s != 1.0)
    bases = [detector]
    if policy.enable_reflection:
        bases.append(reflect_detector(detector))
    return tuple(scale_detector(base, s) for base in bases for s in scales)


def apply_detector_variants(
    detector: PoseDetector, test: SkeletonPose, policy: VariantPolicy
) -> float:
    """Largest response over the original detector and its policy variants."""
    return max(apply_detector(v, test) for v in expand_variants(detector, policy))


def detector_to_dict(detector: PoseDetector) -> dict:
    """JSON-ready representation; float fields keep full precision."""
    return {
        "body_part": detector.body_part,
        "squared_exponent": detector.squared_exponent,
        "tolerance": {
            "sigma0": detector.tolerance.sigma0,
            "alpha": detector.tolerance.alpha,
        },
        "provenance": {
            "source_id": detector.provenance.source_id,
            "frame_index": detector.provenance.frame_index,
            "class_label": detector.provenance.class_label,
        },
        "tuples": [
            {
                "joint": detector.layout.joint_names[t.joint],
                "rho": t.rho,
                "phi": t.phi,
                "sigma": t.sigma,
                "weight": t.weight,
            }
            for t in detector.tuples
        ],
    }


def detector_from_dict(data: dict, layout: SkeletonLayout) -> PoseDetector:
    tuples = [None] * layout.n_joints
    for entry in data["tuples"]:
        index = layout.index_of(entry["joint"])
        tuples[index] = JointTuple(
            joint=index,
            rho=float(entry["rho"]),
            phi=float(entry["phi"]),
            sigma=float(entry["sigma"]),
            weight=float(entry["weight"]),
        )
    if any(t is None for t in tuples):
        raise ValueError("detector document does not cover every layout joint")
    provenance = data.get("provenance", {})
    return PoseDetector(
        layout=layout,
        tuples=tuple(tuples),
        tolerance=ToleranceParams(
            sigma0=float(data["tolerance"]["sigma0"]),
            alpha=float(data["tolerance"]["alpha"]),
        ),
        body_part=data.get("body_part", FULL),
        squared_exponent=bool(data.get("squared_exponent", False)),
        provenance=DetectorProvenance(
            source_id=provenance.get("source_id", ""),
            frame_index=int(provenance.get("frame_index", 0)),
            class_label=provenance.get("class_label"),
        ),
    )
