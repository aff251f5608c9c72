"""
posecast command line: gen, train, eval, gradcheck, sweep and env.

Exit codes: 0 success, 2 configuration or missing input, 3 runtime or
numerical failure.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from ..core import PosecastError
from ..decode import DECODERS
from ..gradcheck import DEFAULT_TOLERANCE, GRADCHECK_OPS, gradcheck_frame, run_gradcheck
from ..synth import (
    TAG_2D,
    TAG_3D,
    SynthDataset,
    generate,
    load_dataset,
    resolution_sweep,
    save_dataset,
    sweep_decode_errors,
)
from ..train import evaluate, load_checkpoint, save_checkpoint, train, write_trace
from ..utils.config import ConfigError, get_sample_env, load_settings
from ..utils.logger import get_logger, setup_logger
from .experiment import ExperimentConfig, load_experiment, parse_sizes

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

CSV_FLOAT_FORMAT = "%.9g"


def _out_dir(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    return Path(args.out) if args.out else Path(config.output.dir)


def cmd_gen(config: ExperimentConfig, out_dir: Path, n: Optional[int] = None) -> Path:
    """
    Generate a synthetic dataset.

    Args:
        config: Experiment configuration (synth section and n_samples)
        out_dir: Dataset directory
        n: Sample count overriding ``config.n_samples``

    Returns:
        Path of the written manifest
    """
    n = config.n_samples if n is None else n
    print(f"🎲 Generating {n} samples on a {config.synth.grid.D}x{config.synth.grid.H}x{config.synth.grid.W} grid")
    dataset = SynthDataset(generate(config.synth, n), config.synth)
    manifest = save_dataset(dataset, out_dir)
    print(f"✅ Dataset written: {manifest} ({dataset.count(TAG_2D)} 2D, {dataset.count(TAG_3D)} 3D)")
    return manifest


def cmd_train(config: ExperimentConfig, data: Path, out_dir: Path) -> Path:
    """
    Train on a dataset and write ``checkpoint.ihpm`` and ``trace.csv``.

    Returns:
        Path of the checkpoint
    """
    dataset = load_dataset(data)
    train_config = config.train
    print(f"🏋️  Training {train_config.head} model: {train_config.steps} steps, schedule {train_config.schedule}")
    result = train(train_config, dataset)

    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint = out_dir / "checkpoint.ihpm"
    save_checkpoint(result.model, checkpoint)
    trace_path = write_trace(result.trace, out_dir / "trace.csv")
    if len(result.trace):
        print(f"📉 Loss {result.trace['total'].iloc[0]:.6g} -> {result.trace['total'].iloc[-1]:.6g}")
    print(f"✅ Checkpoint: {checkpoint}")
    print(f"✅ Trace: {trace_path}")
    return checkpoint


def cmd_eval(config: ExperimentConfig, checkpoint: Path, data: Path, decoder: str, out_dir: Path) -> List[Path]:
    """
    Evaluate a checkpoint and write ``report_<decoder>.json`` / ``.csv``.

    Returns:
        Paths of the report files
    """
    model = load_checkpoint(checkpoint)
    dataset = load_dataset(data)
    print(f"📏 Evaluating {model.kind} model on {len(dataset)} samples with {decoder} decoding")
    report = evaluate(model, dataset, decoder, config.metrics)
    paths = report.write(out_dir, f"report_{report.decoder}")
    print(f"   Mean error: {report.mean_error:.4f} cells")
    for alpha, value in report.pckh.items():
        print(f"   PCKh@{alpha}: {value:.4f}")
    print(f"   AUC: {report.auc:.4f}   AP: {report.ap:.4f}")
    if report.mpjpe is not None:
        pa = "n/a" if report.pa_mpjpe is None else f"{report.pa_mpjpe:.4f}"
        print(f"   MPJPE: {report.mpjpe:.4f}   PA-MPJPE: {pa}")
    print(f"✅ Report: {paths[0]}")
    return list(paths)


def cmd_gradcheck(
    seed: int,
    cases: int,
    out_dir: Path,
    tolerance: float = DEFAULT_TOLERANCE,
    inject_sign_error: Optional[str] = None,
) -> bool:
    """
    Run the finite-difference suite and write ``gradcheck.csv``.

    Returns:
        True when every op passes
    """
    rows = run_gradcheck(seed, cases, tolerance, inject_sign_error)
    frame = gradcheck_frame(rows)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "gradcheck.csv"
    path.write_text(frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n"), encoding="utf-8")
    if rows:
        print(frame.to_string(index=False))
    else:
        print("(no cases)")
    failed = [row.op for row in rows if not row.passed]
    if failed:
        print(f"❌ Gradient check failed for: {', '.join(failed)}")
        return False
    print(f"✅ Gradient check passed ({len(rows)} ops)")
    return True


def cmd_sweep(config: ExperimentConfig, sizes: Sequence[Sequence[int]], out_dir: Path) -> Path:
    """
    Decode-error sweep over grid sizes; writes ``sweep.csv``.

    Returns:
        Path of the CSV
    """
    synth = config.synth
    if config.sweep.clean:
        synth = synth.replace(distractor_count=0, noise_std=0.0)
    print(f"🔬 Sweeping {len(sizes)} grid sizes with {config.sweep.n_samples} samples each")
    levels = resolution_sweep(synth, sizes, config.sweep.n_samples)
    frame = sweep_decode_errors(levels)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "sweep.csv"
    path.write_text(frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n"), encoding="utf-8")
    print(frame.to_string(index=False))
    print(f"✅ Sweep: {path}")
    return path


def cmd_env(path: Optional[Path] = None) -> None:
    """Print the sample ``.env``, or write it to ``path`` when no such file exists yet."""
    text = get_sample_env()
    if path is None:
        print(text, end="")
        return
    if path.exists():
        raise ConfigError(f"{path} already exists")
    path.write_text(text, encoding="utf-8")
    print(f"✅ Environment template: {path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posecast",
        description="posecast - integral pose regression experiments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Generate training and evaluation data
  posecast gen --config config/experiment.example.json --out runs/data
  posecast gen --config config/experiment.example.json --set synth.seed=99 --out runs/eval

  # Train, then evaluate with both decoders
  posecast train --config config/experiment.example.json --data runs/data --out runs/model
  posecast eval --checkpoint runs/model/checkpoint.ihpm --data runs/eval --decoder integral
  posecast eval --checkpoint runs/model/checkpoint.ihpm --data runs/eval --decoder argmax

  # Gradient suite and resolution sweep
  posecast gradcheck --cases 100
  posecast sweep --sizes 64,32,16,8

  # Environment template
  posecast env --write .env
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="Experiment JSON file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="Override a config value (dotted path, JSON value); repeatable")
        p.add_argument("--out", help="Output directory (default: output.dir from the config)")

    p = sub.add_parser("gen", help="Generate a synthetic dataset")
    common(p)
    p.add_argument("--n", type=int, help="Number of samples (default: n_samples from the config)")

    p = sub.add_parser("train", help="Train a model on a dataset")
    common(p)
    p.add_argument("--data", required=True, help="Dataset directory")

    p = sub.add_parser("eval", help="Evaluate a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True, help="Checkpoint file (.ihpm)")
    p.add_argument("--data", required=True, help="Dataset directory")
    p.add_argument("--decoder", choices=DECODERS, default="integral", help="Heatmap decoder")

    p = sub.add_parser("gradcheck", help="Finite-difference gradient suite")
    common(p)
    p.add_argument("--seed", type=int, default=0, help="Seed of the random cases")
    p.add_argument("--cases", type=int, default=100, help="Cases per op")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE, help="Max relative error")
    p.add_argument("--inject-sign-error", choices=list(GRADCHECK_OPS), help=argparse.SUPPRESS)

    p = sub.add_parser("sweep", help="Decode error versus grid size")
    common(p)
    p.add_argument("--sizes", help="Comma-separated sizes, e.g. 64,32,16,8 or 64x64x8 (default: sweep.sizes)")

    p = sub.add_parser("env", help="Print the sample .env settings")
    p.add_argument("--write", metavar="PATH", help="Write the template to PATH instead (refuses to overwrite)")

    return parser


def _run(args: argparse.Namespace) -> int:
    if args.command == "env":
        cmd_env(Path(args.write) if args.write else None)
        return EXIT_OK

    config = load_experiment(args.config, args.overrides)
    out_dir = _out_dir(args, config)

    if args.command == "gen":
        if args.n is not None and args.n < 1:
            raise ConfigError(f"--n must be >= 1, got {args.n}")
        cmd_gen(config, out_dir, args.n)
    elif args.command == "train":
        cmd_train(config, Path(args.data), out_dir)
    elif args.command == "eval":
        cmd_eval(config, Path(args.checkpoint), Path(args.data), args.decoder, out_dir)
    elif args.command == "gradcheck":
        if args.cases < 0:
            raise ConfigError(f"--cases must be >= 0, got {args.cases}")
        if not cmd_gradcheck(args.seed, args.cases, out_dir, args.tolerance, args.inject_sign_error):
            return EXIT_RUNTIME
    elif args.command == "sweep":
        sizes = parse_sizes(args.sizes) if args.sizes else list(config.sweep.sizes)
        cmd_sweep(config, sizes, out_dir)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    CLI entry point.

    Args:
        argv: Arguments (defaults to ``sys.argv[1:]``)

    Returns:
        Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG

    try:
        settings = load_settings()
        setup_logger(level=settings["log_level"], log_file=settings["log_file"])
        return _run(args)
    except ConfigError as exc:
        print(f"❌ Configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"❌ Missing input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PosecastError, OSError) as exc:
        print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
