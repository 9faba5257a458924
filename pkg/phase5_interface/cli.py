"""Command-line entry point: eegvit <subcommand> [flags].

Subcommands: gen-data, train, eval, bench, ablate, gradcheck, inspect.

Every subcommand accepts ``--config FILE``, a file of KEY=VALUE lines whose
keys are flag names (dashes or underscores, without the leading ``--``).
File values are applied first, so flags given on the command line win.
Boolean flags take true/false, yes/no, 1/0 in the file.

Exit codes: 0 success, 1 usage error, 2 data or configuration error,
3 numeric failure (a seed aborted on a non-finite loss, or a failed
gradient check), 4 internal error (an unexpected exception, printed with
its traceback).
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from dotenv import dotenv_values
from rich.console import Console
from rich.table import Table

from autodiff.rng import RngStream
from config.errors import ConfigError, DataError, EEGViTError, NumericFailure, UsageError
from config.model_profile import DEFAULT_SWEEP, EEG_CHANNELS, FULL_SWEEP, SCALE_PRESETS
from config.settings import CACHE_DIR, DATASETS_DIR, deterministic_mode
from phase1_synthetic_data.generators.eeg_generator import SyntheticEEGGenerator, SyntheticSpec
from phase2_dataset_store.binary import atomic_write
from phase2_dataset_store.eegds_format import read_dataset, write_dataset
from phase2_dataset_store.ingest import ingest_matrix_export
from phase2_dataset_store.quality_checks import run_quality_checks
from phase2_dataset_store.records import Dataset
from phase2_dataset_store.splitting import split_by_subject
from phase3_model.checkpoint import export_weights, import_weights, load_checkpoint, save_checkpoint
from phase3_model.config import ModelConfig, preset
from phase3_model.network import build_model
from phase4_training.baselines import run_baselines
from phase4_training.losses import rmse_mm
from phase4_training.trainer import Standardizer, TrainConfig, predict_mm, train
from phase5_interface.ablation import VARIANTS, apply_variant, run_grid
from phase5_interface.benchmark import patch_sweep
from phase5_interface.gradcheck_suite import run_gradcheck_suite

console = Console()

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_INTERNAL = 0, 1, 2, 3, 4
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off", ""}


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that raises UsageError instead of exiting."""

    def error(self, message: str) -> None:
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# --- argument types -------------------------------------------------------------

def seed_list(value: str) -> tuple[int, ...]:
    """'1..5' -> (1, 2, 3, 4, 5); '1,3,7' -> (1, 3, 7); '4' -> (4,)."""
    try:
        if ".." in value:
            low, high = (int(v) for v in value.split("..", 1))
            if high < low:
                raise ValueError
            return tuple(range(low, high + 1))
        return tuple(int(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed range {value!r}; use 1..5 or 1,2,3")


def geometry_list(value: str) -> list[tuple[int, int]]:
    """'default', 'full' or 'k:s,k:s'."""
    if value == "default":
        return list(DEFAULT_SWEEP)
    if value == "full":
        return list(FULL_SWEEP)
    try:
        pairs = [tuple(int(p) for p in item.split(":")) for item in value.split(",")]
    except ValueError:
        pairs = []
    if not pairs or any(len(p) != 2 for p in pairs):
        raise argparse.ArgumentTypeError(f"invalid sweep {value!r}; use default, full or 1:1,2:2")
    return pairs


def variant_list(value: str) -> list[str]:
    names = [v.strip() for v in value.split(",") if v.strip()]
    unknown = [n for n in names if n not in VARIANTS]
    if not names or unknown:
        raise argparse.ArgumentTypeError(f"unknown variant(s) {unknown}; choose from {list(VARIANTS)}")
    return names


# --- parser -----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="KEY=VALUE file with default flag values")
    p.add_argument("--quiet", action="store_true", help="print only the resolved config and errors")


def _model_flags(p: argparse.ArgumentParser, default_scale: str = "desk") -> None:
    p.add_argument("--scale", choices=sorted(SCALE_PRESETS), default=default_scale,
                   help=f"architecture preset (default {default_scale})")
    p.add_argument("--patch-kernel", type=int, help="patch-projection kernel (default from preset)")
    p.add_argument("--patch-stride", type=int, help="patch-projection stride (default from preset)")


def _split_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train-fraction", type=float, default=0.7, help="share of subjects used for training")
    p.add_argument("--split-seed", type=int, default=0, help="seed of the subject split")


def _train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=seed_list, default=(1, 2, 3, 4, 5),
                   help="training seeds: range 1..5 or list 1,2,3 (default 1..5)")
    p.add_argument("--lr", type=float, default=1e-4, help="Adam learning rate")
    p.add_argument("--batch-size", type=int, default=64, help="minibatch size")
    p.add_argument("--max-epochs", type=int, default=100, help="epoch limit")
    p.add_argument("--patience", type=int, default=10, help="early-stopping patience in epochs")
    p.add_argument("--warm-start", type=Path, help="NTAR checkpoint whose vit.* tensors initialise the encoder")
    _split_flags(p)


def build_parser() -> tuple[ArgumentParser, dict[str, ArgumentParser]]:
    parser = ArgumentParser(prog="eegvit", description="EEGViT-TCNet gaze regression toolkit")
    sub = parser.add_subparsers(dest="command", metavar="<command>")
    sub.required = True
    commands: dict[str, ArgumentParser] = {}

    p = sub.add_parser("gen-data", help="generate a synthetic dataset or ingest a matrix export")
    p.add_argument("--subjects", type=int, default=10, help="number of subjects")
    p.add_argument("--trials", type=int, default=50, help="trials per subject")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--noise", type=float, default=0.0, help="noise standard deviation (microvolts)")
    p.add_argument("--channels", type=int, default=EEG_CHANNELS, help="electrode count")
    p.add_argument("--timepoints", type=int, default=SCALE_PRESETS["desk"]["timepoints"],
                   help="samples per trial")
    p.add_argument("--ingest-signals", type=Path, help="matrix export of signals (N x C x T)")
    p.add_argument("--ingest-labels", type=Path, help="matrix export of labels (N x 3: subject, x, y)")
    p.add_argument("--out", type=Path, default=DATASETS_DIR / "synthetic_eeg.eegd", help="output EEGDS file")
    _common(p)
    commands["gen-data"] = p

    p = sub.add_parser("train", help="train over several seeds and report validation RMSE")
    p.add_argument("--data", type=Path, required=True, help="EEGDS dataset")
    _model_flags(p)
    _train_flags(p)
    p.add_argument("--variant", choices=list(VARIANTS), default="full", help="ablation variant to train")
    p.add_argument("--save-model", type=Path, help="write the first successful seed's best weights (NTAR)")
    p.add_argument("--out", type=Path, help="structured report file")
    _common(p)
    commands["train"] = p

    p = sub.add_parser("eval", help="validation RMSE of a checkpoint and/or classical baselines")
    p.add_argument("--data", type=Path, required=True, help="EEGDS dataset")
    p.add_argument("--model", type=Path, help="NTAR checkpoint to evaluate")
    p.add_argument("--baselines", action="store_true", help="also run naive, ridge and KNN baselines")
    _model_flags(p)
    _split_flags(p)
    p.add_argument("--out", type=Path, help="structured report file")
    _common(p)
    commands["eval"] = p

    p = sub.add_parser("bench", help="latency and FLOPs across patch-projection geometries")
    p.add_argument("--sweep", type=geometry_list, default="default",
                   help="default, full or explicit kernel:stride pairs (1:1,2:2)")
    _model_flags(p, default_scale="bench")
    p.add_argument("--batch-size", type=int, default=32, help="batch size of the timed forward pass")
    p.add_argument("--repetitions", type=int, default=30, help="timed passes per geometry (>= 10)")
    p.add_argument("--warmup", type=int, default=3, help="untimed passes per geometry (>= 3)")
    p.add_argument("--data", type=Path, help="EEGDS dataset used as benchmark input")
    p.add_argument("--checkpoint-dir", type=Path,
                   help="directory of patch_k<k>_s<s>.ntar checkpoints for the RMSE column")
    _split_flags(p)
    p.add_argument("--out", type=Path, help="structured report file")
    _common(p)
    commands["bench"] = p

    p = sub.add_parser("ablate", help="train the ablation grid")
    p.add_argument("--data", type=Path, required=True, help="EEGDS dataset")
    p.add_argument("--variants", type=variant_list, default=list(VARIANTS),
                   help="comma-separated variants (default all eight)")
    _model_flags(p)
    _train_flags(p)
    p.add_argument("--cache-dir", type=Path, default=CACHE_DIR, help="cell cache directory")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (ignored in deterministic mode)")
    p.add_argument("--out", type=Path, help="structured report file")
    _common(p)
    commands["ablate"] = p

    p = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p.add_argument("--scale", choices=sorted(SCALE_PRESETS), default="desk",
                   help="preset of the end-to-end model check")
    p.add_argument("--cases", type=int, default=5, help="random cases per op")
    p.add_argument("--skip-model", action="store_true", help="check ops only")
    _common(p)
    commands["gradcheck"] = p

    p = sub.add_parser("inspect", help="describe a checkpoint or a dataset")
    p.add_argument("--model", type=Path, help="NTAR checkpoint")
    p.add_argument("--data", type=Path, help="EEGDS dataset")
    _common(p)
    commands["inspect"] = p

    return parser, commands


# --- config file ---------------------------------------------------------------

def _file_tokens(sub: argparse.ArgumentParser, path: Path) -> list[str]:
    """Translate a KEY=VALUE file into command-line tokens for `sub`."""
    if not Path(path).exists():
        raise UsageError(f"config file {path} does not exist")
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    tokens: list[str] = []
    for key, value in dotenv_values(path).items():
        dest = key.strip().lower().replace("-", "_")
        if dest in ("config", "help") or dest not in actions:
            raise UsageError(f"{path}: unknown key {key!r}")
        action, value = actions[dest], (value or "").strip()
        flag = max(action.option_strings, key=len)
        if action.nargs == 0:
            if value.lower() not in _TRUE | _FALSE:
                raise UsageError(f"{path}: {key} expects true or false, got {value!r}")
            if value.lower() in _TRUE:
                tokens.append(flag)
        else:
            tokens.extend([flag, value])
    return tokens


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser, commands = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(list(argv))
    argv = list(argv)
    if known.config is not None and known.command in commands:
        position = argv.index(known.command) + 1
        argv[position:position] = _file_tokens(commands[known.command], known.config)
    return parser.parse_args(argv)


def print_resolved(args: argparse.Namespace) -> None:
    table = Table(title=f"eegvit {args.command}: resolved configuration")
    table.add_column("Key", style="cyan")
    table.add_column("Value", style="green")
    for key, value in sorted(vars(args).items()):
        if key != "command":
            table.add_row(key, str(value))
    table.add_row("deterministic", str(deterministic_mode()))
    console.print(table)


# --- helpers -----------------------------------------------------------------------

def model_config(args: argparse.Namespace) -> ModelConfig:
    overrides = {}
    if args.patch_kernel is not None:
        overrides["patch_projection_kernel"] = args.patch_kernel
    if args.patch_stride is not None:
        overrides["patch_projection_stride"] = args.patch_stride
    config = preset(args.scale, **overrides)
    if getattr(args, "warm_start", None) is not None:
        config = config.replace(ablation={"warm_start": str(args.warm_start)})
    return config


def train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        train_fraction=args.train_fraction,
        seeds=args.seed,
        split_seed=args.split_seed,
    )


def check_geometry(config: ModelConfig, dataset: Dataset) -> None:
    if (dataset.channels, dataset.timepoints) != (config.in_channels, config.timepoints):
        raise ConfigError(
            f"dataset is {dataset.channels} x {dataset.timepoints} but the model expects "
            f"{config.in_channels} x {config.timepoints}; pick a matching --scale"
        )


def write_report(path: Optional[Path], payload: Any) -> None:
    if path is None:
        return
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, sort_keys=True)
    atomic_write(Path(path), (text.rstrip("\n") + "\n").encode("utf-8"))
    console.print(f"[dim]report written to {path}[/dim]")


# --- subcommands -----------------------------------------------------------------

def cmd_gen_data(args: argparse.Namespace) -> int:
    verbose = not args.quiet
    if (args.ingest_signals is None) != (args.ingest_labels is None):
        raise UsageError("--ingest-signals and --ingest-labels must be given together")
    if args.ingest_signals is not None:
        dataset = ingest_matrix_export(args.ingest_signals, args.ingest_labels, args.channels)
        _, failed = run_quality_checks(dataset, args.channels, verbose=verbose)
        if failed:
            raise DataError(f"{failed} quality check(s) failed for the ingested data")
        write_dataset(dataset, args.out)
        console.print(f"[green]ingested {len(dataset)} samples -> {args.out}[/green]")
        return EXIT_OK

    spec = SyntheticSpec(
        n_subjects=args.subjects,
        trials_per_subject=args.trials,
        noise_std=args.noise,
        channels=args.channels,
        timepoints=args.timepoints,
        seed=args.seed,
    )
    generator = SyntheticEEGGenerator(spec, out_path=args.out, verbose=verbose)
    if not generator.run():
        raise DataError("generated dataset failed its quality checks")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    dataset = read_dataset(args.data)
    config = apply_variant(model_config(args), args.variant)
    check_geometry(config, dataset)
    models: Optional[dict] = {} if args.save_model else None
    report = train(config, dataset, train_config(args), verbose=not args.quiet,
                   label=f"EEGViT-TCNet ({args.variant})", keep_models=models)
    if args.quiet:
        report.print_summary()
    write_report(args.out, report.to_text())
    if args.save_model and models:
        seed = next(r.seed for r in report.seeds if r.ok)
        save_checkpoint(export_weights(models[seed]), args.save_model)
        console.print(f"[dim]seed {seed} weights written to {args.save_model}[/dim]")
    return EXIT_NUMERIC if report.failed else EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    if args.model is None and not args.baselines:
        raise UsageError("eval needs --model, --baselines or both")
    dataset = read_dataset(args.data)
    train_ds, val_ds = split_by_subject(dataset, args.train_fraction, args.split_seed)
    results: dict[str, Any] = {"samples": {"train": len(train_ds), "val": len(val_ds)}}
    if args.model is not None:
        config = model_config(args)
        check_geometry(config, dataset)
        model = build_model(config, RngStream(0))
        import_weights(model, load_checkpoint(args.model), strict=True)
        scaler = Standardizer.fit(train_ds)
        x_val = scaler.signals(val_ds, model.head.fc2.weight.dtype)
        results["val_rmse"] = rmse_mm(predict_mm(model, x_val, scaler, 64), val_ds.labels)
        console.print(f"[bold]validation RMSE: {results['val_rmse']:.2f} mm[/bold]")
    if args.baselines:
        results["baselines"] = run_baselines(train_ds, val_ds, verbose=True)
    write_report(args.out, results)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    base = model_config(args)
    sample = None
    if args.data is not None:
        sample = read_dataset(args.data)
        check_geometry(base, sample)
    table = patch_sweep(base, args.sweep, sample, batch_size=args.batch_size,
                        repetitions=args.repetitions, warmup=args.warmup,
                        checkpoint_dir=args.checkpoint_dir, train_fraction=args.train_fraction,
                        split_seed=args.split_seed, verbose=not args.quiet)
    if args.quiet:
        table.print_table()
    write_report(args.out, table.to_structured())
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    dataset = read_dataset(args.data)
    base = model_config(args)
    check_geometry(base, dataset)
    table = run_grid(base, dataset, train_config(args), args.variants, cache_dir=args.cache_dir,
                     jobs=args.jobs, verbose=not args.quiet)
    if args.quiet:
        table.print_table()
    console.print(f"[dim]{table.cache_hits} cell(s) from cache {args.cache_dir}[/dim]")
    write_report(args.out, table.to_text())
    return EXIT_NUMERIC if table.failures else EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    if args.cases < 1:
        raise UsageError("--cases must be >= 1")
    _, passed = run_gradcheck_suite(args.scale, args.cases, include_model=not args.skip_model,
                                    verbose=True)
    console.print("[green]all gradients match[/green]" if passed
                  else "[red]gradient check failed[/red]")
    return EXIT_OK if passed else EXIT_NUMERIC


def cmd_inspect(args: argparse.Namespace) -> int:
    if args.model is None and args.data is None:
        raise UsageError("inspect needs --model and/or --data")
    if args.model is not None:
        ckpt = load_checkpoint(args.model)
        table = Table(title=f"Checkpoint {args.model}")
        table.add_column("Tensor", style="cyan")
        table.add_column("Shape", justify="right")
        table.add_column("Elements", justify="right", style="green")
        for name in ckpt.names():
            table.add_row(name, str(tuple(ckpt[name].shape)), f"{ckpt[name].size:,}")
        console.print(table)
        console.print(f"[bold]{len(ckpt)} tensors, {ckpt.total_elements():,} elements[/bold]")
    if args.data is not None:
        dataset = read_dataset(args.data)
        meta = dataset.metadata
        table = Table(title=f"Dataset {args.data}")
        table.add_column("Field", style="cyan")
        table.add_column("Value", justify="right", style="green")
        table.add_row("Samples", str(len(dataset)))
        table.add_row("Subjects", str(len(dataset.subjects)))
        table.add_row("Channels x T", f"{meta.channels} x {meta.timepoints}")
        table.add_row("Units", f"{meta.signal_unit} / {meta.label_unit}")
        table.add_row("Digest", dataset.digest()[:16])
        console.print(table)
        run_quality_checks(dataset, dataset.channels, verbose=True)
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "ablate": cmd_ablate,
    "gradcheck": cmd_gradcheck,
    "inspect": cmd_inspect,
}


def dispatch(argv: Sequence[str]) -> int:
    """Run one command; returns the process exit code."""
    try:
        args = parse_args(argv)
        print_resolved(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        console.print(str(exc), style="red", markup=False)
        return EXIT_USAGE
    except NumericFailure as exc:
        console.print(f"numeric failure: {exc}", style="red", markup=False)
        return EXIT_NUMERIC
    except (ConfigError, DataError) as exc:
        console.print(f"{type(exc).__name__}: {exc}", style="red", markup=False)
        return EXIT_DATA
    except EEGViTError as exc:
        console.print(f"{type(exc).__name__}: {exc}", style="red", markup=False)
        return EXIT_DATA
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception:
        console.print("[bold red]internal error[/bold red]")
        console.print_exception(show_locals=False)
        return EXIT_INTERNAL


def main(argv: Optional[Sequence[str]] = None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
