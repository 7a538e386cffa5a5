"""One-vs-all linear classification with background rejection.

Each class gets a binary linear scorer trained on the regularized hinge loss
by seeded stochastic subgradient descent. A frame is assigned to the class
with the highest score when that score is positive, otherwise it is rejected
to the background class. Action-level labels come from majority voting over
the frame decisions.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .features import FeatureVector

BACKGROUND = -1

MODEL_FORMAT = "skelact-ova"
MODEL_VERSION = 1

__all__ = [
    "BACKGROUND",
    "LinearOvaModel",
    "FrameDecision",
    "ActionDecision",
    "train_ova",
    "classify_frame",
    "classify_action",
    "model_to_json",
    "model_from_json",
    "save_model",
    "load_model",
]


@dataclass(frozen=True, eq=False)
class LinearOvaModel:
    """M linear scoring functions, one per class, plus the training record."""

    classes: tuple[int, ...]
    weights: np.ndarray
    biases: np.ndarray
    lam: float
    epochs: int
    seed: int

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        biases = np.array(self.biases, dtype=np.float64)
        if weights.ndim != 2 or biases.shape != (weights.shape[0],):
            raise ValueError("weights must be (M, dim) with one bias per class")
        if len(self.classes) != weights.shape[0]:
            raise ValueError("one weight vector per class required")
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(biases))):
            raise ValueError("model parameters must be finite")
        weights.setflags(write=False)
        biases.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True, eq=False)
class FrameDecision:
    """Per-frame outcome: winning class or BACKGROUND, plus all class scores."""

    label: int
    scores: np.ndarray


@dataclass(frozen=True, eq=False)
class ActionDecision:
    """Sequence-level outcome of majority voting over frame decisions."""

    label: int
    vote_counts: dict[int, int]
    n_frames: int


def _fit_binary(x_aug: np.ndarray, y: np.ndarray, lam: float, epochs: int, rng) -> np.ndarray:
    """Subgradient descent on the L2-regularized hinge loss.

    The bias rides along as a constant input feature, so it shares the
    regularizer; step size decays as 1 / (lam * t). Deterministic for a
    given generator state.
    """
    n, dim = x_aug.shape
    w = np.zeros(dim)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            step = 1.0 / (lam * t)
            if y[i] * float(np.dot(w, x_aug[i])) < 1.0:
                w *= 1.0 - 1.0 / t
                w += (step * y[i]) * x_aug[i]
            else:
                w *= 1.0 - 1.0 / t
    return w


def train_ova(
    features,
    lam: float = 1e-4,
    epochs: int = 50,
    seed: int = 0,
) -> LinearOvaModel:
    """Train one hinge-loss linear classifier per class, class vs the rest.

    ``features`` are labeled :class:`FeatureVector` instances; class labels
    must be non-negative integers (-1 is reserved for the background).
    Training is deterministic for a given seed: each binary problem gets its
    own generator derived from (seed, class position).
    """
    features = list(features)
    if not features:
        raise ValueError("no training features given")
    labels = []
    for fv in features:
        if fv.true_label is None:
            raise ValueError("training features must carry true labels")
        if fv.true_label < 0:
            raise ValueError("class labels must be >= 0 (negative labels are reserved)")
        labels.append(fv.true_label)
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValueError("training requires at least two classes")
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")

    x = np.stack([fv.values for fv in features])
    x_aug = np.hstack([x, np.ones((x.shape[0], 1))])
    label_arr = np.array(labels)

    weights = np.empty((len(classes), x.shape[1]))
    biases = np.empty(len(classes))
    for k, cls in enumerate(classes):
        y = np.where(label_arr == cls, 1.0, -1.0)
        rng = np.random.default_rng([seed, k])
        w_aug = _fit_binary(x_aug, y, lam, epochs, rng)
        weights[k] = w_aug[:-1]
        biases[k] = w_aug[-1]
    return LinearOvaModel(
        classes=classes, weights=weights, biases=biases, lam=lam, epochs=epochs, seed=seed
    )


def classify_frame(model: LinearOvaModel, fv: FeatureVector) -> FrameDecision:
    """Highest-scoring class if its score is positive, otherwise BACKGROUND.

    Score ties go to the lowest class index.
    """
    if len(fv) != model.dim:
        raise ValueError(f"feature dimension {len(fv)} does not match model {model.dim}")
    scores = model.weights @ fv.values + model.biases
    best = int(np.argmax(scores))
    label = model.classes[best] if scores[best] > 0.0 else BACKGROUND
    return FrameDecision(label=label, scores=scores)


def classify_action(model: LinearOvaModel, frames) -> ActionDecision:
    """Plurality vote over per-frame decisions, background frames abstaining.

    If every frame is rejected the action is BACKGROUND. Plurality ties are
    broken by the higher mean frame score of the tied classes, then by the
    lower class index.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("classify_action needs at least one frame")
    decisions = [classify_frame(model, fv) for fv in frames]
    votes = Counter(d.label for d in decisions)
    counts = {cls: votes.get(cls, 0) for cls in model.classes}
    counts[BACKGROUND] = votes.get(BACKGROUND, 0)

    candidates = [cls for cls in model.classes if counts[cls] > 0]
    if not candidates:
        return ActionDecision(label=BACKGROUND, vote_counts=counts, n_frames=len(frames))
    top = max(counts[cls] for cls in candidates)
    tied = [cls for cls in candidates if counts[cls] == top]
    if len(tied) > 1:
        mean_scores = np.stack([d.scores for d in decisions]).mean(axis=0)
        by_class = {cls: mean_scores[model.classes.index(cls)] for cls in tied}
        best_mean = max(by_class.values())
        tied = [cls for cls in tied if by_class[cls] == best_mean]
    return ActionDecision(label=min(tied), vote_counts=counts, n_frames=len(frames))


def model_to_json(model: LinearOvaModel) -> str:
    document = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "classes": list(model.classes),
        "lambda": model.lam,
        "epochs": model.epochs,
        "seed": model.seed,
        "weights": [[float(v) for v in row] for row in model.weights],
        "biases": [float(b) for b in model.biases],
    }
    return json.dumps(document, indent=2)


def model_from_json(text: str | bytes) -> LinearOvaModel:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"model document is not valid JSON: {exc}") from exc
    if document.get("format") != MODEL_FORMAT:
        raise DataError(f"not a classifier model document: format={document.get('format')!r}")
    if document.get("version") != MODEL_VERSION:
        raise DataError(f"unsupported model version {document.get('version')!r}")
    try:
        return LinearOvaModel(
            classes=tuple(document["classes"]),
            weights=np.array(document["weights"], dtype=np.float64),
            biases=np.array(document["biases"], dtype=np.float64),
            lam=float(document["lambda"]),
            epochs=int(document["epochs"]),
            seed=int(document["seed"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model document: {exc}") from exc


def save_model(model: LinearOvaModel, path) -> None:
    Path(path).write_text(model_to_json(model), encoding="utf-8")


def load_model(path) -> LinearOvaModel:
    return model_from_json(Path(path).read_text(encoding="utf-8"))
