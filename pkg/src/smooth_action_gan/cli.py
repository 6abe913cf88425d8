"""Command-line interface for Smooth Action GAN."""

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import (
    ABLATIONS,
    PENALTY_MODES,
    PRECISIONS,
    REAL_LABEL_SOURCES,
    RunConfig,
    TrainingConfig,
    apply_ablation,
    load_config,
)
from .data import (
    ActionSequence,
    Dataset,
    LabelDistribution,
    Record,
    default_class_specs,
    denormalize,
    load_dataset,
    normalize,
    save_dataset,
    split_dataset,
    synthesize_dataset,
)
from .errors import ConfigError, ShapeError, TrainingDivergedError
from .evaluation import build_report, class_sets, generate_class_sets
from .models import generate_batch, mix_labels
from .render import load_topology, render_dataset
from .training import (
    CheckpointManager,
    TrainingLog,
    init_model_state,
    load_checkpoint,
    pretrain_decoder,
    save_checkpoint,
    train_baseline_classifier,
)
from .training.bigan import BiGanTrainer

logger = logging.getLogger(__name__)

DEFAULTS = TrainingConfig()

# CLI flag destination -> TrainingConfig field.
TRAINING_FLAGS = {
    "batch_size": "batch_size",
    "disc_steps": "disc_steps",
    "length": "sequence_length",
    "lr": "lr_main",
    "gamma": "gamma",
    "sigma1": "sigma1",
    "sigma2": "sigma2",
    "seed": "seed",
    "noise_dim": "noise_dim",
    "latent_dim": "latent_dim",
    "lstm_hidden": "lstm_hidden",
    "decoder_hidden": "decoder_hidden",
    "encoder_hidden": "encoder_hidden",
    "dense_width": "dense_width",
    "precision": "precision",
    "real_label_source": "real_label_source",
    "checkpoint_interval": "checkpoint_interval",
    "log_interval": "log_interval",
    "pretrain_lr": "lr_pretrain",
    "gp_weight": "gp_weight",
    "penalty_mode": "penalty_mode",
    "critic_steps": "pretrain_critic_steps",
    "pretrain_batch_size": "pretrain_batch_size",
}


def setup_logging(verbose: bool = False) -> None:
    """Configure logging."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model")
    group.add_argument("--noise-dim", type=int, help=f"Noise width per step (default: {DEFAULTS.noise_dim})")
    group.add_argument("--latent-dim", type=int, help=f"Latent width (default: {DEFAULTS.latent_dim})")
    group.add_argument("--lstm-hidden", type=int, help=f"Generator LSTM hidden size (default: {DEFAULTS.lstm_hidden})")
    group.add_argument("--decoder-hidden", type=int, help=f"Decoder hidden width (default: {DEFAULTS.decoder_hidden})")
    group.add_argument("--encoder-hidden", type=int,
                       help=f"Classifier/discriminator LSTM hidden size (default: {DEFAULTS.encoder_hidden})")
    group.add_argument("--dense-width", type=int,
                       help=f"Classifier/discriminator dense width (default: {DEFAULTS.dense_width})")
    group.add_argument("--precision", choices=sorted(PRECISIONS), help=f"Float precision (default: {DEFAULTS.precision})")
    group.add_argument("--ablation", action="append", choices=ABLATIONS, default=[],
                       help="Ablation preset; may be repeated (default: full)")


def _add_run_flags(parser: argparse.ArgumentParser, default_iters: int) -> None:
    parser.add_argument("--dataset", metavar="FILE", help="Training dataset (JSONL)")
    parser.add_argument("--checkpoint", metavar="FILE", help="Checkpoint to write")
    parser.add_argument("--iters", type=int, metavar="N", help=f"Iterations to run (default: {default_iters})")
    parser.add_argument("--seed", type=int, help=f"Random seed (default: {DEFAULTS.seed})")
    parser.add_argument("--log-interval", type=int, help=f"Iterations between log lines (default: {DEFAULTS.log_interval})")


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="smooth-action-gan",
        description="Smooth Action GAN - stochastic skeleton action generation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s synth-data --classes 3 --per-class 100 --T 16 --dim 8 --seed 7 -o train.jsonl
  %(prog)s pretrain --dataset train.jsonl --checkpoint runs/pretrain.npz
  %(prog)s train --dataset train.jsonl --init runs/pretrain.npz --checkpoint runs/model.npz
  %(prog)s generate --checkpoint runs/model.npz --mix 0.5,0.5,0 --count 5 -o mixed.jsonl
  %(prog)s evaluate --checkpoint runs/model.npz --test test.jsonl -o report.json
  %(prog)s render mixed.jsonl --topology bones.json -o renders/
""",
    )
    parser.add_argument("-c", "--config", metavar="FILE", help="Path to YAML/JSON configuration file")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth-data", help="Write a synthetic harmonic skeleton corpus")
    synth.add_argument("--classes", type=int, default=3, help="Number of classes (default: 3)")
    synth.add_argument("--per-class", type=int, default=100, help="Sequences per class (default: 100)")
    synth.add_argument("--T", dest="length", type=int, default=16, help="Frames per sequence (default: 16)")
    synth.add_argument("--dim", type=int, default=8, help="Pose dimension, even (default: 8)")
    synth.add_argument("--noise", type=float, default=0.05, help="Jitter standard deviation (default: 0.05)")
    synth.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")
    synth.add_argument("-o", "--output", required=True, metavar="FILE", help="Dataset file to write")
    synth.add_argument("--test-output", metavar="FILE", help="Also write a stratified held-out split here")
    synth.add_argument("--train-fraction", type=float, default=0.8,
                       help="Training share when --test-output is given (default: 0.8)")

    pretrain = sub.add_parser("pretrain", help="Pretrain the shared decoder with WGAN-GP")
    _add_run_flags(pretrain, DEFAULTS.pretrain_iterations)
    _add_model_flags(pretrain)
    pretrain.add_argument("--batch-size", dest="pretrain_batch_size", type=int,
                          help=f"Frames per step (default: {DEFAULTS.pretrain_batch_size})")
    pretrain.add_argument("--lr", dest="pretrain_lr", type=float,
                          help=f"Adam learning rate (default: {DEFAULTS.lr_pretrain})")
    pretrain.add_argument("--gp-weight", type=float, help=f"Gradient penalty weight (default: {DEFAULTS.gp_weight})")
    pretrain.add_argument("--penalty-mode", choices=PENALTY_MODES,
                          help=f"Where the penalty is evaluated (default: {DEFAULTS.penalty_mode})")
    pretrain.add_argument("--critic-steps", type=int,
                          help=f"Critic updates per decoder update (default: {DEFAULTS.pretrain_critic_steps})")

    train = sub.add_parser("train", help="Run bi-GAN training")
    _add_run_flags(train, DEFAULTS.iterations)
    _add_model_flags(train)
    train.add_argument("--init", metavar="FILE", help="Start from this checkpoint (pretrained decoder or resume)")
    train.add_argument("--log", metavar="FILE", help="Training log CSV (default: next to the checkpoint)")
    train.add_argument("--batch-size", type=int, help=f"Minibatch size m (default: {DEFAULTS.batch_size})")
    train.add_argument("--disc-steps", type=int, help=f"Discriminator steps K (default: {DEFAULTS.disc_steps})")
    train.add_argument("--T", dest="length", type=int, help=f"Sequence length (default: {DEFAULTS.sequence_length})")
    train.add_argument("--lr", type=float, help=f"Adam learning rate (default: {DEFAULTS.lr_main})")
    train.add_argument("--gamma", type=float, help=f"Cross-entropy weight (default: {DEFAULTS.gamma})")
    train.add_argument("--sigma1", type=float, help=f"Latent smoothness weight (default: {DEFAULTS.sigma1})")
    train.add_argument("--sigma2", type=float, help=f"Pose smoothness weight (default: {DEFAULTS.sigma2})")
    train.add_argument("--real-label-source", choices=REAL_LABEL_SOURCES,
                       help=f"Label of real pairs for the discriminator (default: {DEFAULTS.real_label_source})")
    train.add_argument("--checkpoint-interval", type=int,
                       help=f"Iterations between checkpoints, 0 for final only (default: {DEFAULTS.checkpoint_interval})")

    generate = sub.add_parser("generate", help="Sample sequences from a checkpoint")
    generate.add_argument("--checkpoint", required=True, metavar="FILE", help="Trained checkpoint")
    label_group = generate.add_mutually_exclusive_group(required=True)
    label_group.add_argument("--label", type=int, help="Class index to condition on")
    label_group.add_argument("--mix", metavar="W,W,...", help="Per-class mixing weights")
    generate.add_argument("--T", dest="length", type=int, default=16, help="Frames per sequence (default: 16)")
    generate.add_argument("--count", type=int, default=1, help="Number of sequences (default: 1)")
    generate.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")
    generate.add_argument("-o", "--output", required=True, metavar="FILE", help="Dataset file to write")
    generate.add_argument("--latents", metavar="FILE", help="Also write latent trajectories as CSV")

    evaluate = sub.add_parser("evaluate", help="Score a model against a real test set")
    evaluate.add_argument("--checkpoint", metavar="FILE", help="Trained checkpoint")
    evaluate.add_argument("--test", metavar="FILE", help="Real held-out dataset (default: paths.test_dataset)")
    evaluate.add_argument("--generated", metavar="FILE", help="Score this dataset instead of sampling the model")
    evaluate.add_argument("--samples-per-class", type=int, default=100,
                          help="Generated sequences per class (default: 100)")
    evaluate.add_argument("--baseline-train", metavar="FILE",
                          help="Train a real-data-only classifier on this dataset and score generated data with it")
    evaluate.add_argument("--baseline-iters", type=int, default=500, help="Baseline classifier steps (default: 500)")
    evaluate.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")
    evaluate.add_argument("-o", "--output", required=True, metavar="FILE", help="Report JSON to write")

    render = sub.add_parser("render", help="Draw stick-figure strips of a dataset")
    render.add_argument("dataset", metavar="FILE", help="Dataset to render")
    render.add_argument("--topology", required=True, metavar="FILE", help="JSON list of [i, j] bones")
    render.add_argument("-o", "--output", required=True, metavar="DIR", help="Output directory")
    render.add_argument("--limit", type=int, help="Render at most this many sequences")

    return parser.parse_args(argv)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Load the config file (if any) and let command-line flags win."""
    run = load_config(args.config) if args.config else RunConfig()
    overrides = {
        field_name: getattr(args, flag)
        for flag, field_name in TRAINING_FLAGS.items()
        if getattr(args, flag, None) is not None
    }
    training = run.training
    iters = getattr(args, "iters", None)
    if iters is not None:
        overrides["pretrain_iterations" if args.command == "pretrain" else "iterations"] = iters
    if overrides:
        training = replace(training, **overrides)
    training = apply_ablation(training, *getattr(args, "ablation", []))

    paths = {}
    for name in ("dataset", "checkpoint", "log"):
        value = getattr(args, name, None)
        if value is not None:
            paths[name] = value
    return replace(run, training=training, **paths)


def _training_data(run: RunConfig) -> Dataset:
    if not run.dataset:
        raise ConfigError("No training dataset given (use --dataset or paths.dataset)")
    dataset = load_dataset(run.dataset)
    if dataset.stats is None:
        dataset, _ = normalize(dataset)
    return dataset


def _checkpoint_path(run: RunConfig, default_name: str) -> Path:
    return Path(run.checkpoint) if run.checkpoint else run.get_output_path() / default_name


def cmd_synth_data(args: argparse.Namespace) -> int:
    dataset = synthesize_dataset(
        default_class_specs(args.classes), args.per_class, args.length, args.dim, args.noise, args.seed
    )
    if args.test_output:
        train, test = split_dataset(dataset, args.train_fraction, args.seed)
        save_dataset(train, args.output)
        save_dataset(test, args.test_output)
    else:
        save_dataset(dataset, args.output)
    return 0


def cmd_pretrain(args: argparse.Namespace) -> int:
    run = resolve_config(args)
    config = run.training
    dataset = _training_data(run)
    decoder = pretrain_decoder(dataset, config)
    state = init_model_state(
        config, dataset.num_classes, dataset.dim, decoder=decoder, stats=dataset.stats, class_names=dataset.names
    )
    save_checkpoint(state, _checkpoint_path(run, "pretrain.npz"))
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    run = resolve_config(args)
    config = run.training
    dataset = _training_data(run)
    checkpoint = _checkpoint_path(run, "model.npz")
    log_path = Path(run.log) if run.log else checkpoint.with_suffix(".csv")

    if args.init:
        state = load_checkpoint(args.init)
        if state.stats is not None and state.stats != dataset.stats:
            dataset, _ = normalize(load_dataset(run.dataset), state.stats)
        state = replace(
            state,
            generator=replace(state.generator, residual=config.residual),
            config=config,
            generator_opt=replace(state.generator_opt, lr=config.lr_main),
            classifier_opt=replace(state.classifier_opt, lr=config.lr_main),
            discriminator_opt=replace(state.discriminator_opt, lr=config.lr_main),
        )
    else:
        logger.warning("No --init checkpoint; training without a pretrained decoder")
        state = init_model_state(
            config, dataset.num_classes, dataset.dim, stats=dataset.stats, class_names=dataset.names
        )

    log = TrainingLog()
    if state.iteration > 0 and log_path.exists():
        log = TrainingLog.read_csv(log_path)
        log.entries = [e for e in log.entries if e.iteration <= state.iteration]

    manager = CheckpointManager(checkpoint, config.checkpoint_interval)
    try:
        state, new_entries = BiGanTrainer(dataset, config, manager).run(state)
    except TrainingDivergedError as e:
        logger.error(f"{e}; last checkpoint at {checkpoint} kept")
        return 1
    for entry in new_entries.entries:
        log.append(entry)
    manager.save(state)
    log.write_csv(log_path)
    logger.info(f"Wrote training log to {log_path}")
    return 0


def _conditioning_label(args: argparse.Namespace, num_classes: int) -> LabelDistribution:
    if args.mix is not None:
        try:
            weights = [float(w) for w in args.mix.split(",")]
        except ValueError:
            raise ConfigError(f"--mix must be comma-separated numbers, got {args.mix!r}") from None
        if len(weights) != num_classes:
            raise ConfigError(f"--mix has {len(weights)} weights but the model has {num_classes} classes")
        return mix_labels(weights)
    if not 0 <= args.label < num_classes:
        raise ConfigError(f"--label {args.label} out of range for {num_classes} classes")
    return LabelDistribution.one_hot(args.label, num_classes)


def write_latent_csv(latents: np.ndarray, path: str | Path) -> None:
    """Write (n, T, L) latents with columns sequence, t, h_1..h_L."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["sequence", "t"] + [f"h_{i + 1}" for i in range(latents.shape[2])])
        for n, trajectory in enumerate(latents):
            for t, h in enumerate(trajectory):
                writer.writerow([n, t] + [repr(float(v)) for v in h])


def cmd_generate(args: argparse.Namespace) -> int:
    state = load_checkpoint(args.checkpoint)
    label = _conditioning_label(args, state.num_classes)
    if args.count < 1:
        raise ConfigError(f"--count must be >= 1, got {args.count}")
    labels = np.repeat(label.as_array()[None], args.count, axis=0)
    poses, latents = generate_batch(state.generator, labels, args.length, args.seed)
    poses = poses.astype(np.float64)
    if state.stats is not None:
        poses = denormalize(poses, state.stats)

    dataset = Dataset(
        records=tuple(Record(ActionSequence(p), label) for p in poses),
        num_classes=state.num_classes,
        dim=state.pose_dim,
        names=state.class_names,
    )
    save_dataset(dataset, args.output)
    if args.latents:
        write_latent_csv(latents, args.latents)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    test_path = args.test or (load_config(args.config).test_dataset if args.config else None)
    if not test_path:
        raise ConfigError("No test dataset given (use --test or paths.test_dataset)")
    state = load_checkpoint(args.checkpoint) if args.checkpoint else None
    if state is None and not args.generated:
        raise ConfigError("evaluate needs --checkpoint, --generated, or both")
    test = load_dataset(test_path)
    if state is not None and state.num_classes != test.num_classes:
        raise ShapeError(f"Checkpoint has {state.num_classes} classes, test set has {test.num_classes}")

    stats = state.stats if state is not None else None
    if stats is not None and test.stats is None:
        test, _ = normalize(test, stats)

    latents = None
    if args.generated:
        generated_ds = load_dataset(args.generated)
        if generated_ds.num_classes != test.num_classes:
            raise ShapeError(f"Generated set has {generated_ds.num_classes} classes, test set has {test.num_classes}")
        if stats is not None and generated_ds.stats is None:
            generated_ds, _ = normalize(generated_ds, stats)
        generated = class_sets(generated_ds)
    else:
        length = max(r.sequence.length for r in test.records)
        generated, latents = generate_class_sets(
            state.generator, test.num_classes, args.samples_per_class, length, args.seed
        )

    baseline = None
    if args.baseline_train:
        baseline_data = load_dataset(args.baseline_train)
        if stats is not None and baseline_data.stats is None:
            baseline_data, _ = normalize(baseline_data, stats)
        base_config = state.config if state is not None else TrainingConfig()
        baseline = train_baseline_classifier(baseline_data, base_config, args.baseline_iters, args.seed)

    report = build_report(
        generated,
        test,
        classifier=state.classifier if state is not None else None,
        baseline=baseline,
        latents=latents,
        seed=args.seed,
        metadata={
            "seed": args.seed,
            "checkpoint": args.checkpoint,
            "generated_file": args.generated,
            "iteration": state.iteration if state is not None else None,
        },
    )
    report.write(args.output)
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    joints, bones = load_topology(args.topology)
    render_dataset(dataset, bones, args.output, joints=joints, limit=args.limit)
    return 0


COMMANDS = {
    "synth-data": cmd_synth_data,
    "pretrain": cmd_pretrain,
    "train": cmd_train,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "render": cmd_render,
}


def main(argv: list[str] | None = None) -> int:
    """Main entry point."""
    args = parse_args(argv)
    setup_logging(args.verbose)

    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as e:
        logger.error(str(e))
        return 1
    except (ValueError, FloatingPointError, TrainingDivergedError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
