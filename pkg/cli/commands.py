"""
Command-line interface.

Subcommands:
  gen-data        write the synthetic toy dataset to a directory
  train           cross-entropy or self-critical training
  eval            score a checkpoint on a split (BLEU-4 and CE)
  infer           caption examples of a split
  dump-attention  write the per-step attention trace of one example
  ablate          train the ablation grid and tabulate CE and BLEU-4

Exit status: 0 on success, 2 for usage errors and invalid configuration,
1 for failures while running (bad files, broken preconditions, I/O).
"""
import functools
import logging
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional

import click
from marshmallow import ValidationError

from autograd import ContractError, DimensionError, no_grad
from data_service import (
    CaptionExample,
    FileFormatError,
    ToyTaskSpec,
    Vocabulary,
    build_vocab,
    dump_attention,
    format_validation_report,
    gen_toy_dataset,
    load_checkpoint,
    load_dataset,
    save_dataset,
    validate_dataset,
)
from inference import beam_search, greedy_decode
from model import CaptionModel
from training import (
    PHASE_CE,
    PHASE_SCST,
    RunSession,
    TrainingRun,
    evaluate,
    format_run_report,
    get_session_events,
    log_config_event,
    log_io_event,
    model_from_checkpoint,
    run_ablation,
    write_history_csv,
)
from .config import PRESETS, resolve_settings


CHECKPOINT_NAME = "checkpoint.xlck"
LOG_NAME = "train_log.csv"


# ============================================================================
# Shared plumbing
# ============================================================================

def handle_errors(command):
    """Map library errors to exit status 1 and configuration errors to 2."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ValidationError as exc:
            raise click.UsageError(f"invalid configuration: {exc.messages}")
        except (ContractError, DimensionError, FileFormatError, OSError) as exc:
            raise click.ClickException(str(exc))

    return wrapper


def config_options(command):
    """--preset and --config, shared by every subcommand."""
    command = click.option(
        "--config", "config_file", type=click.Path(dir_okay=False),
        help="key=value config file layered over the preset.",
    )(command)
    command = click.option(
        "--preset", type=click.Choice(sorted(PRESETS)), default="desk", show_default=True,
        help="Base settings.",
    )(command)
    return command


def _load_splits(data: Optional[str], toy: ToyTaskSpec) -> Dict[str, List[CaptionExample]]:
    if data is None:
        return gen_toy_dataset(toy)._asdict()
    splits = load_dataset(data)
    if "train" not in splits:
        raise FileFormatError("dataset directory has no train split", data, expected="train_manifest.txt")
    return splits


def _checked(examples: List[CaptionExample], feature_dim: int, vocab: Vocabulary = None, max_len: int = None):
    result = validate_dataset(examples, feature_dim, vocab, max_len)
    if not result.is_valid:
        click.echo(format_validation_report(result), err=True)
        raise ContractError(f"dataset has {result.error_count} blocking error(s)")
    return result


def _feature_dim(examples: List[CaptionExample]) -> int:
    return int(examples[0].regions.shape[-1])


def _model_and_vocab(checkpoint: str):
    ckpt = load_checkpoint(checkpoint)
    return model_from_checkpoint(ckpt, checkpoint), Vocabulary(ckpt.vocab)


# ============================================================================
# Commands
# ============================================================================

@click.command("gen-data")
@config_options
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--seed", "toy_seed", type=int, help="Generator seed of the toy task.")
@handle_errors
def gen_data(preset, config_file, out, toy_seed):
    """Generate the synthetic toy dataset."""
    settings = resolve_settings(preset, config_file, {"toy_seed": toy_seed})
    splits = gen_toy_dataset(settings.toy)
    save_dataset(out, splits._asdict())
    click.echo(f"✅ Wrote {len(splits.train)}/{len(splits.val)}/{len(splits.test)} examples to {out}")


@click.command("train")
@config_options
@click.option("--data", type=click.Path(file_okay=False), help="Dataset directory (default: generated toy task).")
@click.option("--out", type=click.Path(file_okay=False), help="Run directory for log and checkpoint.")
@click.option("--phase", type=click.Choice([PHASE_CE, PHASE_SCST]), default=PHASE_CE, show_default=True)
@click.option("--encoder-blocks", type=click.IntRange(0, 4), help="Encoder X-Linear blocks (0 = none).")
@click.option("--attention", type=click.Choice(["xlinear", "conventional"]), help="Decoder attention module.")
@click.option("--elu", type=click.Choice(["on", "off"]), help="ELU-based activation in X-Linear blocks.")
@click.option("--seed", type=int, help="Training seed.")
@click.option("--steps", type=click.IntRange(min=0), help="Stop after this many steps.")
@click.option("--init", "init_path", type=click.Path(dir_okay=False, exists=True),
              help="Start from this checkpoint's weights (e.g. CE weights for SCST).")
@click.option("--resume", is_flag=True, help="Continue from the run directory's checkpoint.")
@handle_errors
def train(preset, config_file, data, out, phase, encoder_blocks, attention, elu, seed, steps, init_path, resume):
    """Train the captioning model."""
    settings = resolve_settings(preset, config_file, {
        "encoder_blocks": encoder_blocks,
        "decoder_attention": attention,
        "elu": elu,
        "seed": seed,
    })
    out = Path(out or PRESETS[preset].OUTPUT_DIR)
    checkpoint_path = out / CHECKPOINT_NAME
    log_path = out / LOG_NAME
    session = RunSession(str(out))

    splits = _load_splits(data, settings.toy)
    train_set, val_set = splits["train"], splits.get("val")

    if resume:
        if not checkpoint_path.exists():
            raise click.UsageError(f"--resume needs an existing checkpoint at {checkpoint_path}")
        run = TrainingRun.from_checkpoint(load_checkpoint(checkpoint_path), session=session)
        click.echo(f"🔁 Resuming {run.phase} at step {run.step}")
    elif init_path:
        run = TrainingRun.from_checkpoint(load_checkpoint(init_path), config=settings.train, session=session)
        run.start_phase(phase)
        click.echo(f"📦 Initialised from {init_path}")
    else:
        if phase == PHASE_SCST:
            raise click.UsageError("--phase scst needs --init (CE weights) or --resume")
        vocab = build_vocab([ex.caption for ex in train_set], settings.min_count)
        model_config = replace(settings.model, vocab_size=len(vocab), raw_feature_dim=_feature_dim(train_set))
        run = TrainingRun(CaptionModel.create(model_config, settings.train.seed), vocab, settings.train, phase, session)

    _checked(train_set, run.model.config.raw_feature_dim, run.vocab, run.model.config.max_caption_len)
    log_config_event(session, "model config", run.model.config.to_dict())
    log_config_event(session, "train config", run.config.to_dict())

    click.echo(f"🚀 Training ({run.phase}) on {len(train_set)} examples")
    history = run.run(train_set, val_set, steps, checkpoint_path)
    write_history_csv(history, log_path, append=resume)
    log_io_event(session, "training log written", log_path)

    if history:
        last = history[-1]
        click.echo(f"📊 step {last.step}: loss {last.loss:.4f}")
        click.echo(f"💾 Checkpoint: {checkpoint_path}")
    else:
        click.echo("ℹ️  No steps taken")
    click.echo(format_run_report(get_session_events(session), str(session.session_id)))


@click.command("eval")
@config_options
@click.option("--checkpoint", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--data", type=click.Path(file_okay=False), help="Dataset directory (default: generated toy task).")
@click.option("--split", type=click.Choice(["train", "val", "test"]), default="test", show_default=True)
@click.option("--beam", type=click.IntRange(min=1), default=1, show_default=True)
@handle_errors
def eval_command(preset, config_file, checkpoint, data, split, beam):
    """Report BLEU-4 and cross-entropy of a checkpoint."""
    settings = resolve_settings(preset, config_file)
    model, vocab = _model_and_vocab(checkpoint)
    examples = _load_splits(data, settings.toy).get(split) or []
    if not examples:
        raise ContractError(f"split {split!r} is empty")
    _checked(examples, model.config.raw_feature_dim)
    report = evaluate(model, examples, vocab, beam=beam, batch_size=settings.train.batch_size)
    click.echo(f"📊 {split}: BLEU-4 {report.bleu:.4f}  CE {report.cross_entropy:.4f}  ({report.count} examples)")


@click.command("infer")
@config_options
@click.option("--checkpoint", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--data", type=click.Path(file_okay=False), help="Dataset directory (default: generated toy task).")
@click.option("--split", type=click.Choice(["train", "val", "test"]), default="test", show_default=True)
@click.option("--beam", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--limit", type=click.IntRange(min=1), default=5, show_default=True)
@handle_errors
def infer(preset, config_file, checkpoint, data, split, beam, limit):
    """Caption the first examples of a split."""
    settings = resolve_settings(preset, config_file)
    model, vocab = _model_and_vocab(checkpoint)
    examples = (_load_splits(data, settings.toy).get(split) or [])[:limit]
    _checked(examples, model.config.raw_feature_dim)
    max_len = model.config.max_caption_len
    for ex in examples:
        with no_grad():
            enc = model.encode(ex.regions)
        best = beam_search(model, enc, beam, max_len)[0] if beam > 1 else greedy_decode(model, enc, max_len)
        click.echo(f"{ex.example_id}\t{' '.join(vocab.decode(best.tokens))}\t{best.score:.4f}")


@click.command("dump-attention")
@config_options
@click.option("--checkpoint", required=True, type=click.Path(dir_okay=False, exists=True))
@click.option("--data", type=click.Path(file_okay=False), help="Dataset directory (default: generated toy task).")
@click.option("--split", type=click.Choice(["train", "val", "test"]), default="test", show_default=True)
@click.option("--example-id", help="Example to trace (default: first of the split).")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Output file (.json or .txt).")
@handle_errors
def dump_attention_command(preset, config_file, checkpoint, data, split, example_id, out):
    """Write the per-step attention trace of one example."""
    settings = resolve_settings(preset, config_file)
    model, vocab = _model_and_vocab(checkpoint)
    examples = _load_splits(data, settings.toy).get(split) or []
    chosen = [ex for ex in examples if example_id is None or ex.example_id == example_id][:1]
    if not chosen:
        raise ContractError(f"no example {example_id!r} in split {split!r}")
    _checked(chosen, model.config.raw_feature_dim)
    doc = dump_attention(model, chosen[0], out, vocab)
    click.echo(f"🔍 {doc['example_id']}: {' '.join(doc['caption'])}")
    click.echo(f"💾 Trace of {len(doc['steps'])} steps written to {out}")


@click.command("ablate")
@config_options
@click.option("--data", type=click.Path(file_okay=False), help="Dataset directory (default: generated toy task).")
@click.option("--steps", type=click.IntRange(min=0), help="Step cap per variant.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write the table as CSV.")
@handle_errors
def ablate(preset, config_file, data, steps, out):
    """Train the ablation grid and print the comparison table."""
    settings = resolve_settings(preset, config_file)
    splits = _load_splits(data, settings.toy)
    train_set, val_set = splits["train"], splits.get("val") or splits["train"]
    vocab = build_vocab([ex.caption for ex in train_set], settings.min_count)
    _checked(train_set, _feature_dim(train_set), vocab, settings.model.max_caption_len)
    base = replace(settings.model, vocab_size=len(vocab), raw_feature_dim=_feature_dim(train_set))
    session = RunSession("ablation")

    def progress(variant, row):
        click.echo(f"  ✓ {row['attention']:<12s} elu={row['elu']:<3s} blocks={row['encoder_blocks']}  "
                   f"CE {row['final_ce']:.4f}  BLEU-4 {row['toy_bleu']:.4f}")

    click.echo("🧪 Running ablation grid")
    table = run_ablation(base, settings.train, train_set, val_set, vocab, steps, session=session, on_variant=progress)
    click.echo(table.to_string(index=False))
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(out, index=False)
        click.echo(f"💾 Table written to {out}")


# ============================================================================
# Group
# ============================================================================

def create_cli() -> click.Group:
    """
    Build the command group.

    Returns:
        click.Group with every subcommand registered
    """

    @click.group(context_settings={"help_option_names": ["-h", "--help"]})
    @click.option("--verbose", is_flag=True, help="Log progress events.")
    def cli(verbose):
        """X-Linear attention captioning on the desk."""
        logging.basicConfig(
            level=logging.DEBUG if verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        logging.getLogger("xlan").setLevel(logging.DEBUG if verbose else logging.WARNING)

    for command in (gen_data, train, eval_command, infer, dump_attention_command, ablate):
        cli.add_command(command)
    return cli
