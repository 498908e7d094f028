"""Operator command line: dataset generation, search, benchmarks, training, serving."""

from __future__ import annotations

import functools
import json
from pathlib import Path

import click

from . import _kernels
from .encoders import EncoderStack, encode_dataset, load_checkpoint, save_checkpoint
from .evaluation import (
    GRIDS,
    ProtocolParams,
    ablation_table,
    run_ablation,
    run_protocol,
)
from .oracle import MODES, OracleConfig
from .ranker import Feedback, RankerParams, score_no_feedback, score_with_feedback, top_k
from .selector import SelectorConfig
from .store import (
    Dataset,
    SynthConfig,
    dataset_checksum,
    encode_query,
    generate_synthetic,
    ingest,
    load_bundle,
    save_bundle,
)
from .trainer import (
    LOSS_KINDS,
    TrainerConfig,
    TrainingDiverged,
    gradient_check,
    train as train_adapters,
)


def friendly_errors(fn):
    """Turn validation and IO failures into clean nonzero exits."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, OSError, TrainingDiverged) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _load_dataset(bundle: str) -> Dataset:
    return load_bundle(bundle)


def _load_stack(checkpoint: str | None, dim: int) -> EncoderStack | None:
    if checkpoint is None:
        return None
    stack = load_checkpoint(checkpoint)
    if stack.dim != dim:
        raise ValueError(f"checkpoint dim {stack.dim} does not match dataset dim {dim}")
    return stack


def _parse_ids(raw: str | None) -> tuple[int, ...]:
    if not raw:
        return ()
    try:
        return tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError as exc:
        raise ValueError(f"expected comma-separated integers, got {raw!r}") from exc


def _metrics_table(report) -> str:
    ks = report.params["recall_ks"]
    header = ["stage"] + [f"R@{k}" for k in ks] + ["MedR", "MeanR"]
    rows = []
    for name, block in (("baseline", report.baseline), ("feedback", report.feedback)):
        rows.append(
            [name]
            + [f"{block['r_at'][str(k)] * 100:.1f}" for k in ks]
            + [str(block["medr"]), f"{block['meanr']:.1f}"]
        )
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths)))
             for row in ([header] + rows)]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


@click.group()
@click.version_option(package_name="clickrank")
def main():
    """Click-feedback retrieval: search, re-rank, train, serve."""


@main.command("gen-synthetic")
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Bundle directory to write.")
@click.option("--n-items", default=SynthConfig.n_items, show_default=True, type=int)
@click.option("--n-attributes", default=SynthConfig.n_attributes, show_default=True, type=int)
@click.option("--attrs-per-item", default=SynthConfig.attrs_per_item, show_default=True, type=int)
@click.option("--dim", default=SynthConfig.dim, show_default=True, type=int)
@click.option("--noise-sigma", default=SynthConfig.noise_sigma, show_default=True, type=float)
@click.option("--seed", default=SynthConfig.seed, show_default=True, type=int)
@friendly_errors
def gen_synthetic(out, n_items, n_attributes, attrs_per_item, dim, noise_sigma, seed):
    """Generate a synthetic dataset bundle."""
    cfg = SynthConfig(
        n_items=n_items,
        n_attributes=n_attributes,
        attrs_per_item=attrs_per_item,
        dim=dim,
        noise_sigma=noise_sigma,
        seed=seed,
    )
    dataset = generate_synthetic(cfg)
    path = save_bundle(dataset, out)
    click.echo(f"wrote {dataset.n_items} items (dim {dataset.dim}) to {path}")
    click.echo(f"checksum {dataset_checksum(dataset)}")


@main.command("ingest-check")
@click.option("--bundle", type=click.Path(exists=True, file_okay=False), help="Validate a saved bundle directory.")
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), help="Retrieval embedding file.")
@click.option("--metadata", type=click.Path(exists=True, dir_okay=False), help="Item metadata JSONL.")
@click.option("--preference", type=click.Path(exists=True, dir_okay=False), help="Preference embedding file (defaults to retrieval).")
@click.option("--vocab", type=click.Path(exists=True, dir_okay=False), help="Vocab embedding file.")
@click.option("--vocab-tokens", type=click.Path(exists=True, dir_okay=False), help="Vocab token list, one per line.")
@click.option("--splits", type=click.Path(exists=True, dir_okay=False), help="Train/test split JSON.")
@friendly_errors
def ingest_check(bundle, embeddings, metadata, preference, vocab, vocab_tokens, splits):
    """Validate dataset files and print a summary."""
    if bundle is not None:
        dataset = load_bundle(bundle)
    elif embeddings is not None and metadata is not None:
        dataset = ingest(
            embeddings,
            metadata,
            preference_path=preference,
            vocab_path=vocab,
            vocab_tokens_path=vocab_tokens,
            splits_path=splits,
        )
    else:
        raise ValueError("pass --bundle, or both --embeddings and --metadata")
    click.echo(
        f"ok: {dataset.n_items} items, dim {dataset.dim}, "
        f"{len(dataset.vocab.tokens)} vocab tokens, "
        f"{len(dataset.splits.train)} train / {len(dataset.splits.test)} test"
    )
    click.echo(f"checksum {dataset_checksum(dataset)}")


@main.command()
@click.option("--bundle", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--query", required=True, help="Free-text query.")
@click.option("--k", default=10, show_default=True, type=int)
@click.option("--likes", default=None, help="Comma-separated item ids to like.")
@click.option("--dislikes", default=None, help="Comma-separated item ids to dislike.")
@click.option("--lambda-p", default=1.0, show_default=True, type=float)
@click.option("--lambda-n", default=0.5, show_default=True, type=float)
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), help="Adapter checkpoint.")
@friendly_errors
def search(bundle, query, k, likes, dislikes, lambda_p, lambda_n, checkpoint):
    """Run one query, optionally with a round of feedback."""
    dataset = _load_dataset(bundle)
    stack = _load_stack(checkpoint, dataset.dim)
    index = encode_dataset(dataset, stack)
    raw = encode_query(query, dataset.vocab)
    query_vec = stack.encode_text_vec(raw) if stack is not None else raw
    scores = score_no_feedback(query_vec, index)

    feedback = Feedback(_parse_ids(likes), _parse_ids(dislikes))
    if not feedback.is_empty:
        scores = score_with_feedback(
            query_vec, feedback, RankerParams(lambda_p, lambda_n), index
        )
    click.echo(f"{'rank':>4}  {'id':>6}  {'score':>9}  text")
    for position, item_id in enumerate(top_k(scores, k), start=1):
        item = dataset.items[item_id]
        click.echo(f"{position:>4}  {item.id:>6}  {scores[item_id]:>9.5f}  {item.text}")


def _protocol_params(lambda_p, lambda_n, n_like, n_dislike, oracle_mode, k, lambda_diversity):
    return ProtocolParams(
        ranker=RankerParams(lambda_p=lambda_p, lambda_n=lambda_n),
        oracle=OracleConfig(n_like=n_like, n_dislike=n_dislike, mode=oracle_mode),
        selector=SelectorConfig(k=k, lambda_diversity=lambda_diversity),
    )


@main.command()
@click.option("--bundle", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", default="report.json", show_default=True, type=click.Path(dir_okay=False))
@click.option("--lambda-p", default=1.0, show_default=True, type=float)
@click.option("--lambda-n", default=0.5, show_default=True, type=float)
@click.option("--n-like", default=1, show_default=True, type=int)
@click.option("--n-dislike", default=1, show_default=True, type=int)
@click.option("--oracle-mode", default="preference_embedding", show_default=True,
              type=click.Choice(MODES))
@click.option("--k", default=10, show_default=True, type=int)
@click.option("--lambda-diversity", default=0.0, show_default=True, type=float)
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
@friendly_errors
def benchmark(bundle, out, lambda_p, lambda_n, n_like, n_dislike, oracle_mode, k,
              lambda_diversity, checkpoint, seed):
    """Run the three-step protocol over the test split and write a report."""
    dataset = _load_dataset(bundle)
    stack = _load_stack(checkpoint, dataset.dim)
    params = _protocol_params(lambda_p, lambda_n, n_like, n_dislike, oracle_mode, k, lambda_diversity)
    report = run_protocol(dataset, dataset.splits.test, params, seed=seed, stack=stack)
    Path(out).write_text(report.to_json() + "\n")
    click.echo(_metrics_table(report))
    click.echo(f"report -> {out}")
    click.echo(f"checksum {report.checksum()}")


@main.command()
@click.option("--bundle", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--grid", "grid_name", required=True, type=click.Choice(sorted(GRIDS)))
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Report JSON path [default: ablation-<grid>.json].")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
@friendly_errors
def ablate(bundle, grid_name, out, checkpoint, seed):
    """Sweep one parameter grid and print the comparison table."""
    dataset = _load_dataset(bundle)
    stack = _load_stack(checkpoint, dataset.dim)
    grid = GRIDS[grid_name]()
    reports = run_ablation(dataset, grid, seed=seed, stack=stack)
    out = out or f"ablation-{grid_name}.json"
    Path(out).write_text(json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n")
    click.echo(ablation_table(reports, grid_name))
    click.echo(f"reports -> {out}")


@main.command("train")
@click.option("--bundle", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", default="adapter.cfa", show_default=True, type=click.Path(dir_okay=False))
@click.option("--curve-out", default="loss-curve.json", show_default=True, type=click.Path(dir_okay=False))
@click.option("--loss", "loss_kind", default="ranking", show_default=True, type=click.Choice(LOSS_KINDS))
@click.option("--margin", default=0.2, show_default=True, type=float)
@click.option("--temperature", default=0.07, show_default=True, type=float)
@click.option("--batch-size", default=32, show_default=True, type=int)
@click.option("--epochs", default=30, show_default=True, type=int)
@click.option("--learning-rate", default=1e-2, show_default=True, type=float)
@click.option("--sep-enc/--no-sep-enc", default=False, show_default=True,
              help="Train separate cross-modal and unimodal image adapters.")
@click.option("--init", "init_checkpoint", type=click.Path(exists=True, dir_okay=False),
              help="Start from an existing checkpoint instead of identity.")
@click.option("--seed", default=0, show_default=True, type=int)
@friendly_errors
def train_cmd(bundle, out, curve_out, loss_kind, margin, temperature, batch_size, epochs,
              learning_rate, sep_enc, init_checkpoint, seed):
    """Train embedding adapters on simulated click feedback."""
    dataset = _load_dataset(bundle)
    if init_checkpoint is not None:
        stack = _load_stack(init_checkpoint, dataset.dim)
    else:
        stack = EncoderStack.identity(dataset.dim, sep_enc=sep_enc)
    cfg = TrainerConfig(
        loss_kind=loss_kind,
        margin=margin,
        temperature=temperature,
        batch_size=batch_size,
        epochs=epochs,
        learning_rate=learning_rate,
        seed=seed,
    )
    trained, curve = train_adapters(dataset, cfg, stack)
    save_checkpoint(out, trained)
    Path(curve_out).write_text(json.dumps(curve, indent=2) + "\n")
    if curve:
        click.echo(f"final mean loss {curve[-1]['mean_loss']:.6f} after {len(curve)} epochs")
    click.echo(f"checkpoint -> {out}")
    click.echo(f"loss curve -> {curve_out}")


@main.command()
@click.option("--trials", default=100, show_default=True, type=int)
@click.option("--loss", "loss_kind", default="both", show_default=True,
              type=click.Choice(("both",) + LOSS_KINDS))
@click.option("--tolerance", default=1e-4, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@friendly_errors
def gradcheck(trials, loss_kind, tolerance, seed):
    """Verify analytic loss gradients against finite differences."""
    kinds = LOSS_KINDS if loss_kind == "both" else (loss_kind,)
    all_passed = True
    for kind in kinds:
        cfg = TrainerConfig(loss_kind=kind, seed=seed)
        report = gradient_check(cfg, n_trials=trials, tolerance=tolerance)
        status = "ok" if report.passed else "FAIL"
        click.echo(
            f"{kind}: {status}  max rel err {report.max_rel_err:.3e} "
            f"over {report.n_trials} trials (tolerance {tolerance:g})"
        )
        all_passed = all_passed and report.passed
    if not all_passed:
        raise click.ClickException("gradient check failed")


@main.command()
@click.option("--bundle", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--lambda-p", default=1.0, show_default=True, type=float)
@click.option("--lambda-n", default=0.5, show_default=True, type=float)
@click.option("--k", default=10, show_default=True, type=int)
@click.option("--session-ttl", default=1800.0, show_default=True, type=float, help="Session lifetime in seconds, measured from creation.")
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False), help="Static UI directory to serve at /.")
@friendly_errors
def serve(bundle, checkpoint, host, port, lambda_p, lambda_n, k, session_ttl, ui_dir):
    """Start the HTTP session service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    dataset = _load_dataset(bundle)
    stack = _load_stack(checkpoint, dataset.dim)
    config = ServiceConfig(
        lambda_p=lambda_p, lambda_n=lambda_n, default_k=k, session_ttl_s=session_ttl
    )
    app = create_app(dataset, stack=stack, config=config, ui_dir=ui_dir)
    click.echo(f"serving {dataset.n_items} items on http://{host}:{port} "
               f"(kernel backend: {_kernels.backend_name()})")
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
