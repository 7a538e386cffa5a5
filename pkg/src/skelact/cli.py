"""Command line driver.

Subcommands mirror the pipeline stages (ingest, configure, extract, train,
evaluate, run) plus render for static SVG drawings and synth for generating
a demo dataset. Exit codes: 0 success, 2 configuration error, 3 data error,
4 internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .classifier import load_model, save_model, train_ova
from .dataset import (
    index_canonical_dir,
    index_msrda_dir,
    load_canonical,
    load_msrda_file,
    save_canonical,
    save_index,
)
from .errors import ConfigError, DataError, SkelactError
from .features import load_bank
from .pipeline import (
    PipelineConfig,
    read_features_tsv,
    run_pipeline,
    write_features_tsv,
)
from .render import render_skeleton_svg
from .synthetic import write_synthetic_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="random seed for the whole run")
    parser.add_argument("--split", help="cross_subject:1,3,5,7,9 or random:0.5")
    parser.add_argument("--n-per-class", type=int, dest="n_per_class",
                        help="detectors configured per action class")
    parser.add_argument("--sigma0", type=float,
                        help="base tolerance width (default: 10%% of body reach)")
    parser.add_argument("--alpha", type=float,
                        help="tolerance growth per unit skeletal distance")
    parser.add_argument("--eta", type=float, nargs="+",
                        help="radial scale factors for detector variants")
    parser.add_argument("--lambda", type=float, dest="lam",
                        help="hinge-loss regularization strength")
    parser.add_argument("--epochs", type=int, help="training epochs")
    parser.add_argument("--squared-exponent", action="store_true", default=None,
                        dest="squared_exponent",
                        help="score joints with exp(-D^2/2s^2) instead of exp(-D/2s^2)")
    normalize = parser.add_mutually_exclusive_group()
    normalize.add_argument("--normalize", action="store_true", default=None,
                           dest="normalize", help="normalize sequences to unit body size")
    normalize.add_argument("--no-normalize", action="store_false", default=None,
                           dest="normalize")
    parser.add_argument("--out", help="output directory override")


def _load_config(args, out_is_dir: bool = True) -> PipelineConfig:
    if args.config:
        config = PipelineConfig.from_json_file(args.config)
    elif getattr(args, "data_dir", None):
        config = PipelineConfig(data_dir=args.data_dir)
    else:
        raise ConfigError("[config] --config (or --data-dir) is required")
    overrides = {
        "seed": args.seed,
        "split": args.split,
        "n_per_class": args.n_per_class,
        "sigma0": args.sigma0,
        "alpha": args.alpha,
        "eta": tuple(args.eta) if args.eta else None,
        "lam": args.lam,
        "epochs": args.epochs,
        "squared_exponent": args.squared_exponent,
        "normalize": args.normalize,
        "out_dir": args.out if out_is_dir else None,
    }
    data = config.record()
    data.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig.from_dict(data)


def _cmd_run(args) -> int:
    config = _load_config(args)
    run_pipeline(config, progress=print)
    print(f"artifacts written to {config.out_dir}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = index_msrda_dir(args.data_dir)
    total_dropped = 0
    for entry in index.entries:
        sequence, dropped = load_msrda_file(entry.path, coordinate_stream=args.stream)
        total_dropped += dropped
        name = f"a{entry.action:02d}_s{entry.subject:02d}_e{entry.repetition:02d}.json"
        (out_dir / name).write_text(save_canonical(sequence), encoding="utf-8")
        if dropped:
            print(f"{Path(entry.path).name}: dropped {dropped} frames")
    canonical_index = index_canonical_dir(out_dir)
    save_index(canonical_index, out_dir / "index.json")
    print(
        f"ingested {len(index)} recordings to {out_dir} "
        f"({total_dropped} frames dropped)"
    )
    return EXIT_OK


def _cmd_configure(args) -> int:
    config = _load_config(args, out_is_dir=False)
    from .dataset import make_split
    from .detector import ToleranceParams, VariantPolicy
    from .features import build_bank, save_bank
    from .pipeline import _load_side, parse_split

    if args.out is None:
        raise ConfigError("[config] configure needs --out for the bank file")
    if config.data_format == "msrda":
        index = index_msrda_dir(config.data_dir)
    else:
        index = index_canonical_dir(config.data_dir)
    train_entries, _ = make_split(index, parse_split(config.split, seed=config.seed))
    train_seqs = _load_side(train_entries, config)
    tolerance = (
        ToleranceParams(sigma0=config.sigma0, alpha=config.alpha)
        if config.sigma0 is not None
        else None
    )
    bank = build_bank(
        train_seqs,
        n_per_class=config.n_per_class,
        body_part=config.body_part if config.body_part else "full",
        tolerance=tolerance,
        variant_policy=VariantPolicy(
            enable_reflection=config.reflection, scale_factors=config.eta
        ),
        strategy=config.sampling,
        squared_exponent=config.squared_exponent,
    )
    save_bank(bank, args.out)
    print(f"bank of {len(bank)} detectors written to {args.out}")
    return EXIT_OK


def _cmd_extract(args) -> int:
    from .dataset import normalize_sequence
    from .features import extract_sequence_features

    bank = load_bank(args.bank)
    sequences = []
    for path in sorted(Path(args.data_dir).glob("*.json")):
        if path.name == "index.json":
            continue
        seq = load_canonical(path.read_text(encoding="utf-8"))
        if args.normalize:
            seq = normalize_sequence(seq)
        sequences.append(seq)
    if not sequences:
        raise DataError(f"no canonical sequences under {args.data_dir}")
    rows = [
        (seq, extract_sequence_features(bank, seq, args.frame_stride)) for seq in sequences
    ]
    write_features_tsv(args.out, rows)
    print(f"features for {len(sequences)} sequences written to {args.out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    rows = read_features_tsv(args.features)
    model = train_ova(
        [fv for _, fv in rows], lam=args.lam, epochs=args.epochs, seed=args.seed
    )
    save_model(model, args.out)
    print(f"model for classes {list(model.classes)} written to {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    from .features import extract_sequence_features
    from .pipeline import evaluate_model, write_report_files, parse_split, _load_side
    from .dataset import make_split

    config = _load_config(args)
    bank = load_bank(args.bank)
    model = load_model(args.model)
    if config.data_format == "msrda":
        index = index_msrda_dir(config.data_dir)
    else:
        index = index_canonical_dir(config.data_dir)
    _, test_entries = make_split(index, parse_split(config.split, seed=config.seed))
    test_seqs = _load_side(test_entries, config)
    test_feats = [
        (seq, extract_sequence_features(bank, seq, config.eval_frame_stride))
        for seq in test_seqs
    ]
    report = evaluate_model(model, test_feats, config)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report_files(report, out_dir)
    print(
        f"avg recognition {report.avg_recognition:.4f}, error {report.avg_error:.4f}, "
        f"miss {report.avg_miss:.4f}; report under {out_dir}"
    )
    return EXIT_OK


def _cmd_render(args) -> int:
    if (args.pose is None) == (args.bank is None):
        raise ConfigError("[config] render needs exactly one of --pose or --bank")
    if args.pose is not None:
        sequence = load_canonical(Path(args.pose).read_text(encoding="utf-8"))
        if not 0 <= args.frame < len(sequence):
            raise DataError(
                f"frame {args.frame} out of range for {len(sequence)}-frame sequence"
            )
        subject = sequence.frames[args.frame]
    else:
        bank = load_bank(args.bank)
        if not 0 <= args.detector < len(bank):
            raise DataError(f"detector {args.detector} out of range for bank of {len(bank)}")
        subject = bank.detectors[args.detector]
    render_skeleton_svg(subject, args.out, flip_y=args.flip_y)
    print(f"svg written to {args.out}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    config_path = write_synthetic_dataset(
        args.out,
        n_classes=args.classes,
        per_class=args.sequences,
        n_frames=args.frames,
        jitter=args.jitter,
        seed=args.seed,
    )
    print(f"synthetic dataset ready; run: skelact run --config {config_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skelact",
        description="Trainable skeleton-pose detectors for action recognition.",
    )
    parser.add_argument("--version", action="version", version=f"skelact {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="full pipeline from a config file")
    run.add_argument("--config", help="pipeline config JSON")
    run.add_argument("--data-dir", help="dataset directory (alternative to --config)")
    _add_override_flags(run)
    run.set_defaults(func=_cmd_run)

    ingest = commands.add_parser("ingest", help="convert MSRDA files to canonical JSON")
    ingest.add_argument("--data-dir", required=True, help="directory of *_skeleton.txt files")
    ingest.add_argument("--out", required=True, help="output directory for canonical files")
    ingest.add_argument("--stream", choices=("screen", "world"), default="screen",
                        help="which coordinate pair becomes (x, y)")
    ingest.set_defaults(func=_cmd_ingest)

    configure = commands.add_parser("configure", help="build a detector bank")
    configure.add_argument("--config", help="pipeline config JSON")
    configure.add_argument("--data-dir", help="dataset directory (alternative to --config)")
    _add_override_flags(configure)
    configure.set_defaults(func=_cmd_configure)

    extract = commands.add_parser("extract", help="feature vectors for canonical sequences")
    extract.add_argument("--bank", required=True, help="detector bank JSON")
    extract.add_argument("--data-dir", required=True, help="directory of canonical sequences")
    extract.add_argument("--out", required=True, help="output TSV path")
    extract.add_argument("--frame-stride", type=int, default=1)
    extract.add_argument("--normalize", action="store_true",
                         help="normalize sequences to unit body size first")
    extract.set_defaults(func=_cmd_extract)

    train = commands.add_parser("train", help="train one-vs-all classifiers on features")
    train.add_argument("--features", required=True, help="features TSV from extract")
    train.add_argument("--out", required=True, help="output model JSON")
    train.add_argument("--lambda", type=float, dest="lam", default=1e-4)
    train.add_argument("--epochs", type=int, default=50)
    train.add_argument("--seed", type=int, default=0)
    train.set_defaults(func=_cmd_train)

    evaluate = commands.add_parser("evaluate", help="score a model on the test split")
    evaluate.add_argument("--config", help="pipeline config JSON")
    evaluate.add_argument("--data-dir", help="dataset directory (alternative to --config)")
    evaluate.add_argument("--bank", required=True, help="detector bank JSON")
    evaluate.add_argument("--model", required=True, help="classifier model JSON")
    _add_override_flags(evaluate)
    evaluate.set_defaults(func=_cmd_evaluate)

    render = commands.add_parser("render", help="draw a pose or detector as SVG")
    render.add_argument("--pose", help="canonical sequence JSON to draw a frame of")
    render.add_argument("--frame", type=int, default=0, help="frame index within --pose")
    render.add_argument("--bank", help="bank JSON to draw a detector of")
    render.add_argument("--detector", type=int, default=0, help="detector index within --bank")
    render.add_argument("--out", required=True, help="output SVG path")
    flip = render.add_mutually_exclusive_group()
    flip.add_argument("--flip-y", action="store_true", default=True, dest="flip_y",
                      help="treat input as y-up (default)")
    flip.add_argument("--no-flip-y", action="store_false", dest="flip_y",
                      help="input is already y-down screen coordinates")
    render.set_defaults(func=_cmd_render)

    synth = commands.add_parser("synth", help="generate a synthetic demo dataset")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--classes", type=int, default=3)
    synth.add_argument("--sequences", type=int, default=20, help="sequences per class")
    synth.add_argument("--frames", type=int, default=30, help="frames per sequence")
    synth.add_argument("--jitter", type=float, default=0.03,
                       help="per-joint noise as a fraction of body height")
    synth.add_argument("--seed", type=int, default=0)
    synth.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SkelactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - map anything unexpected to exit 4
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
