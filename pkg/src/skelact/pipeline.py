"""End-to-end pipeline: ingest, configure, extract, train, evaluate.

A run is fully described by a :class:`PipelineConfig` (usually a JSON file)
plus its seed; rerunning the same config writes byte-identical report
bodies. Every stage failure is re-raised with a stage tag so the command
line can report where a run died.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .classifier import LinearOvaModel, classify_action, save_model, train_ova
from .dataset import (
    COORDINATE_STREAMS,
    SplitSpec,
    index_canonical_dir,
    index_msrda_dir,
    load_entry,
    make_split,
    normalize_sequence,
)
from .detector import ToleranceParams, VariantPolicy
from .errors import ConfigError, DataError
from .features import (
    SAMPLING_STRATEGIES,
    FeatureVector,
    build_bank,
    extract_sequence_features,
    save_bank,
)
from .metrics import (
    EvalReport,
    compute_metrics,
    confusion_tsv,
    format_report_table,
    metrics_tsv,
    report_to_json,
)
from .render import save_confusion_figure, save_rates_figure
from .skeleton import BODY_PARTS, FULL, PoseSequence

__all__ = [
    "PipelineConfig",
    "parse_split",
    "run_pipeline",
    "write_features_tsv",
    "read_features_tsv",
]


@dataclass
class PipelineConfig:
    """Everything a run needs; see README for the JSON field reference."""

    data_dir: str
    data_format: str = "canonical"
    coordinate_stream: str = "screen"
    split: str = "cross_subject:1,3,5,7,9"
    n_per_class: int = 5
    sigma0: float | None = None
    alpha: float = 0.05
    eta: tuple[float, ...] = (0.8, 1.2)
    reflection: bool = True
    lam: float = 1e-4
    epochs: int = 50
    seed: int = 0
    squared_exponent: bool = False
    normalize: bool = True
    body_part: dict = field(default_factory=dict)
    sampling: str = "uniform_stride"
    train_frame_stride: int = 1
    eval_frame_stride: int = 1
    out_dir: str = "runs/latest"

    def __post_init__(self):
        if not self.data_dir:
            raise ConfigError("[config] data_dir is required")
        if self.data_format not in ("canonical", "msrda"):
            raise ConfigError(f"[config] unknown data_format {self.data_format!r}")
        if self.coordinate_stream not in COORDINATE_STREAMS:
            raise ConfigError(f"[config] unknown coordinate_stream {self.coordinate_stream!r}")
        if self.sampling not in SAMPLING_STRATEGIES:
            raise ConfigError(f"[config] unknown sampling strategy {self.sampling!r}")
        if self.n_per_class < 1:
            raise ConfigError("[config] n_per_class must be >= 1")
        if self.sigma0 is not None and self.sigma0 <= 0:
            raise ConfigError("[config] sigma0 must be > 0 when given")
        if self.alpha < 0:
            raise ConfigError("[config] alpha must be >= 0")
        if any(s <= 0 for s in self.eta):
            raise ConfigError("[config] eta factors must be > 0")
        if self.lam <= 0:
            raise ConfigError("[config] lambda must be > 0")
        if self.epochs < 1:
            raise ConfigError("[config] epochs must be >= 1")
        if self.train_frame_stride < 1 or self.eval_frame_stride < 1:
            raise ConfigError("[config] frame strides must be >= 1")
        self.eta = tuple(float(s) for s in self.eta)
        parsed = {}
        for key, value in self.body_part.items():
            if value not in BODY_PARTS:
                raise ConfigError(f"[config] unknown body part {value!r} for class {key}")
            parsed[int(key)] = value
        self.body_part = parsed
        parse_split(self.split, seed=self.seed)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"[config] unknown config keys: {sorted(unknown)}")
        if "data_dir" not in data:
            raise ConfigError("[config] data_dir is required")
        try:
            return cls(**data)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[config] invalid config: {exc}") from exc

    @classmethod
    def from_json_file(cls, path) -> "PipelineConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"[config] cannot read config file {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"[config] config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("[config] config file must hold a JSON object")
        return cls.from_dict(data)

    def record(self) -> dict:
        """JSON-ready snapshot of the run parameters for report metadata."""
        data = asdict(self)
        data["eta"] = list(self.eta)
        data["body_part"] = {str(k): v for k, v in self.body_part.items()}
        return data


def parse_split(text: str, seed: int = 0) -> SplitSpec:
    """Parse 'cross_subject:1,3,5' or 'random:0.5' into a split spec."""
    try:
        mode, _, arg = text.partition(":")
        if mode == "cross_subject":
            subjects = [int(s) for s in arg.split(",") if s.strip()]
            if not subjects:
                raise ValueError("no train subjects listed")
            return SplitSpec.cross_subject(subjects)
        if mode == "random":
            return SplitSpec.random(float(arg), seed=seed)
        raise ValueError(f"unknown split mode {mode!r}")
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[config] bad split spec {text!r}: {exc}") from exc


@contextmanager
def _stage(name: str):
    """Re-raise any stage failure with a [stage] tag on the message."""
    try:
        yield
    except Exception as exc:
        if str(exc).startswith("["):
            raise
        raise type(exc)(f"[{name}] {exc}").with_traceback(exc.__traceback__) from exc


def _load_side(entries, config: PipelineConfig) -> list[PoseSequence]:
    sequences = []
    for entry in entries:
        seq = load_entry(
            entry, data_format=config.data_format, coordinate_stream=config.coordinate_stream
        )
        if len(seq) == 0:
            continue
        if config.normalize:
            seq = normalize_sequence(seq)
        sequences.append(seq)
    if not sequences:
        raise DataError("no usable sequences on one split side")
    return sequences


def _sequence_key(seq: PoseSequence) -> str:
    return f"a{seq.action_label:02d}_s{seq.subject_id:02d}_e{seq.repetition + 1:02d}"


def write_features_tsv(path, per_sequence: list[tuple[PoseSequence, list[FeatureVector]]]) -> None:
    """Delimited feature dump: one row per frame, full float precision."""
    rows = []
    width = None
    for seq, vectors in per_sequence:
        for fv in vectors:
            if width is None:
                width = len(fv)
                header = ["sequence", "subject", "repetition", "action", "frame_index"]
                header += [f"f{k:04d}" for k in range(width)]
                rows.append("\t".join(header))
            cells = [
                _sequence_key(seq),
                str(seq.subject_id),
                str(seq.repetition),
                str(seq.action_label),
                str(fv.frame_index),
            ]
            cells += [repr(float(v)) for v in fv.values]
            rows.append("\t".join(cells))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def read_features_tsv(path) -> list[tuple[str, FeatureVector]]:
    """Inverse of :func:`write_features_tsv`, keyed by sequence id."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataError(f"empty features file {path}")
    header = lines[0].split("\t")
    if header[:5] != ["sequence", "subject", "repetition", "action", "frame_index"]:
        raise DataError(f"unrecognized features header in {path}")
    out = []
    for line_no, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != len(header):
            raise DataError(f"bad column count in {path} at line {line_no}")
        action = cells[3]
        out.append(
            (
                cells[0],
                FeatureVector(
                    values=np.array([float(v) for v in cells[5:]]),
                    frame_index=int(cells[4]),
                    true_label=None if action == "None" else int(action),
                ),
            )
        )
    return out


def run_pipeline(config: PipelineConfig, progress=None) -> EvalReport:
    """Execute ingest, configure, extract, train and evaluate; write artifacts.

    Returns the evaluation report. Artifacts land under ``config.out_dir``:
    the bank and model documents, train/test feature tables, the report in
    JSON/text/TSV forms, the confusion matrix and the report figures.
    """

    def say(message: str) -> None:
        if progress is not None:
            progress(message)

    with _stage("config"):
        data_dir = Path(config.data_dir)
        if not data_dir.is_dir():
            raise ConfigError(f"dataset path {data_dir} is not a directory")
        split_spec = parse_split(config.split, seed=config.seed)
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "figures").mkdir(exist_ok=True)

    with _stage("ingest"):
        if config.data_format == "msrda":
            index = index_msrda_dir(data_dir)
        else:
            index = index_canonical_dir(data_dir)
        train_entries, test_entries = make_split(index, split_spec)
        say(f"ingest: {len(train_entries)} train / {len(test_entries)} test recordings")

        train_seqs = _load_side(train_entries, config)
        test_seqs = _load_side(test_entries, config)

    with _stage("configure"):
        tolerance = (
            ToleranceParams(sigma0=config.sigma0, alpha=config.alpha)
            if config.sigma0 is not None
            else None
        )
        policy = VariantPolicy(
            enable_reflection=config.reflection, scale_factors=config.eta
        )
        bank = build_bank(
            train_seqs,
            n_per_class=config.n_per_class,
            body_part=config.body_part if config.body_part else FULL,
            tolerance=tolerance,
            variant_policy=policy,
            strategy=config.sampling,
            squared_exponent=config.squared_exponent,
        )
        save_bank(bank, out_dir / "bank.json")
        say(f"configure: bank of {len(bank)} detectors ({len(bank.classes)} classes)")

    with _stage("extract"):
        train_feats = [
            (seq, extract_sequence_features(bank, seq, config.train_frame_stride))
            for seq in train_seqs
        ]
        test_feats = [
            (seq, extract_sequence_features(bank, seq, config.eval_frame_stride))
            for seq in test_seqs
        ]
        write_features_tsv(out_dir / "features_train.tsv", train_feats)
        write_features_tsv(out_dir / "features_test.tsv", test_feats)
        n_frames = sum(len(v) for _, v in train_feats) + sum(len(v) for _, v in test_feats)
        say(f"extract: {n_frames} feature vectors of length {len(bank)}")

    with _stage("train"):
        flat_train = [fv for _, vectors in train_feats for fv in vectors]
        model = train_ova(flat_train, lam=config.lam, epochs=config.epochs, seed=config.seed)
        save_model(model, out_dir / "model.json")
        say(f"train: {len(model.classes)} one-vs-all classifiers on {len(flat_train)} frames")

    with _stage("evaluate"):
        report = evaluate_model(model, test_feats, config)
        write_report_files(report, out_dir)
        say(
            f"evaluate: avg recognition {report.avg_recognition:.4f}, "
            f"error {report.avg_error:.4f}, miss {report.avg_miss:.4f}"
        )
    return report


def evaluate_model(
    model: LinearOvaModel,
    test_feats: list[tuple[PoseSequence, list[FeatureVector]]],
    config: PipelineConfig,
) -> EvalReport:
    """Action-level decisions for every test sequence, scored as a report."""
    decisions = []
    for seq, vectors in test_feats:
        if seq.action_label is None:
            raise DataError(f"test sequence {_sequence_key(seq)} has no action label")
        decisions.append((seq.action_label, classify_action(model, vectors)))
    classes = sorted(set(model.classes) | {true for true, _ in decisions})
    return compute_metrics(decisions, classes=classes, metadata={"run": config.record()})


def write_report_files(report: EvalReport, out_dir) -> None:
    out_dir = Path(out_dir)
    (out_dir / "report.json").write_text(report_to_json(report), encoding="utf-8")
    (out_dir / "report.txt").write_text(format_report_table(report), encoding="utf-8")
    (out_dir / "metrics.tsv").write_text(metrics_tsv(report), encoding="utf-8")
    (out_dir / "confusion.tsv").write_text(confusion_tsv(report), encoding="utf-8")
    figures = out_dir / "figures"
    figures.mkdir(exist_ok=True)
    save_confusion_figure(report, figures / "confusion.png")
    save_rates_figure(report, figures / "rates.png")
