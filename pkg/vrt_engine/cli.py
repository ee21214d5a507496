"""Command-line interface: embed, index, search, rerank, localize, compose, train, evaluate."""

import functools
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import click
from click.core import ParameterSource
from rich.console import Console

from .config import EngineSettings, configure_logging, load_json_config
from .core.models import ComposedOrder, CorpusItem, ItemKind, QueryKind, QuerySpec
from .errors import InvalidConfig, VrtError
from .evaluation.ground_truth import (
    dumps_jsonl,
    load_moment_gt,
    load_moment_predictions,
    load_rankings,
    load_retrieval_gt,
    read_jsonl,
    write_jsonl,
)
from .evaluation.metrics import moment_metrics, retrieval_metrics
from .evaluation.report import FORMATS, emit_report
from .localization.moments import MomentConfig, localize, windows_to_dict
from .providers.base import EmbeddingProvider, EmbedRequest
from .providers.file_provider import FileProvider
from .providers.prompts import default_prompt_for
from .providers.remote import RemoteEmbeddingProvider, RemoteScorer
from .providers.synthetic import COMPOSITIONS, SyntheticProvider, SyntheticWorld
from .retrieval.composed import build_composed_spec, composed_retrieve
from .retrieval.pipeline import EmbeddingScorer, PipelineConfig, rerank_head, retrieve_batch
from .storage.dense_index import build_index, load_index, save_index
from .storage.embedding_store import read_store, write_store
from .training.mining import MinerConfig
from .training.objectives import JointLossWeights
from .training.toy_trainer import (
    LinearAdapter,
    ToyScorer,
    TrainConfig,
    embed_concepts,
    load_model,
    ordering_accuracy,
    save_model,
    split_concepts,
    train_embedder,
    train_reranker,
    write_history,
)

logger = logging.getLogger(__name__)
console = Console(stderr=True)

KIND_TO_ITEM = {
    QueryKind.TEXT: ItemKind.TEXT,
    QueryKind.VIDEO: ItemKind.VIDEO,
    QueryKind.FRAME: ItemKind.FRAME,
    QueryKind.COMPOSED: ItemKind.VIDEO,
}


CONFIG_SECTIONS = frozenset({"world", "train", "reranker_train", "miner", "weights"})
MOMENT_DEFAULTS = MomentConfig()


def _cast_config_value(ctx: click.Context, name: str, value: Any) -> Any:
    param = next(p for p in ctx.command.params if p.name == name)
    try:
        return param.type_cast_value(ctx, value)
    except click.BadParameter as e:
        raise InvalidConfig(f"Config key {name!r}: {e.format_message()}") from None


def with_config(f: Optional[Callable[..., Any]] = None, *, sections: bool = False) -> Any:
    """Add --config; keys of the JSON object fill options not given on the command line.

    Values are converted by the option's click type. With `sections`, the
    known config sections are passed to the command as `extras`; any other
    key that names no option is rejected.
    """

    def decorate(command: Callable[..., Any]) -> Callable[..., Any]:
        @functools.wraps(command)
        def wrapper(*args: Any, config_path: Optional[str] = None, **params: Any) -> Any:
            ctx = click.get_current_context()
            extras: Dict[str, Any] = {}
            if config_path:
                for key, value in load_json_config(config_path).items():
                    name = key.replace("-", "_")
                    if name in params:
                        if ctx.get_parameter_source(name) in (ParameterSource.DEFAULT, None):
                            params[name] = _cast_config_value(ctx, name, value)
                    elif sections and name in CONFIG_SECTIONS:
                        extras[name] = value
                    else:
                        raise InvalidConfig(f"Unknown key {key!r} in {config_path}")
            return command(*args, extras=extras, **params)

        return click.option(
            "--config",
            "config_path",
            type=click.Path(dir_okay=False),
            default=None,
            help="JSON file whose keys fill options not set on the command line",
        )(wrapper)

    return decorate(f) if f is not None else decorate


def seed_option(f: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "--seed",
        type=int,
        default=lambda: int(os.getenv("VRT_SEED", "0")),
        show_default="VRT_SEED or 0",
        help="Seed for every randomized step",
    )(f)


def provider_options(f: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option(
            "--provider",
            type=click.Choice(["synthetic", "file", "remote"]),
            default="synthetic",
            help="Where embeddings come from",
        ),
        click.option("--endpoint", default=None, help="Embedding service URL (remote provider)"),
        click.option("--jobs", type=int, default=None, help="Max in-flight remote requests"),
        click.option(
            "--store",
            "stores",
            multiple=True,
            type=click.Path(dir_okay=False),
            help="VRTEMB01 store(s) backing the file provider",
        ),
        click.option("--adapter", type=click.Path(dir_okay=False), default=None,
                     help="Trained LinearAdapter JSON applied by the synthetic provider"),
        click.option("--latent-dim", type=int, default=16),
        click.option("--raw-dim", type=int, default=32),
        click.option("--noise", type=float, default=0.1, help="Synthetic noise sigma"),
        click.option("--concepts", type=int, default=256, help="Synthetic concept count"),
        click.option("--view-shift", type=float, default=0.5),
        click.option("--composition", type=click.Choice(COMPOSITIONS), default="follow"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def build_provider(params: Dict[str, Any], extras: Dict[str, Any]) -> EmbeddingProvider:
    kind = params["provider"]
    if kind == "file":
        if not params["stores"]:
            raise click.UsageError("--provider file needs at least one --store")
        return FileProvider.from_paths(*params["stores"])

    if kind == "remote":
        settings = EngineSettings.from_env()
        return RemoteEmbeddingProvider(
            params["endpoint"] or settings.endpoint,
            timeout_s=settings.timeout_s,
            retries=settings.retries,
            backoff_s=settings.backoff_s,
            max_in_flight=params["jobs"] or settings.max_in_flight,
        )

    if "world" in extras:
        world = SyntheticWorld.from_dict(extras["world"])
    else:
        world = SyntheticWorld(
            seed=params["seed"],
            latent_dim=params["latent_dim"],
            raw_dim=params["raw_dim"],
            noise_sigma=params["noise"],
            num_concepts=params["concepts"],
            view_shift=params["view_shift"],
        )
    adapter = load_model(params["adapter"]) if params["adapter"] else None
    if adapter is not None and not isinstance(adapter, LinearAdapter):
        raise InvalidConfig(f"{params['adapter']} does not hold a LinearAdapter")
    return SyntheticProvider(world, adapter=adapter, composition=params["composition"])


def read_manifest(path: str) -> List[Tuple[str, QuerySpec]]:
    """Rows: {"id", "kind", "text"?, "frame_paths"?, "modification"?, "order"?}."""
    entries = []
    for row in read_jsonl(path):
        row = dict(row)
        item_id = row.pop("id")
        if "frame_paths" in row:
            row["frame_refs"] = row.pop("frame_paths")
        entries.append((item_id, QuerySpec.from_dict(row)))
    return entries


def embed_entries(
    provider: EmbeddingProvider, entries: Sequence[Tuple[str, QuerySpec]], prompt: Optional[str]
) -> List[CorpusItem]:
    """Embed with one request per kind and keep manifest order."""
    items: List[Optional[CorpusItem]] = [None] * len(entries)
    for kind in QueryKind:
        positions = [i for i, (_, spec) in enumerate(entries) if spec.kind == kind]
        if not positions:
            continue
        request = EmbedRequest([entries[i][1] for i in positions], prompt or default_prompt_for(kind))
        for i, vector in zip(positions, provider.embed(request)):
            items[i] = CorpusItem(entries[i][0], KIND_TO_ITEM[kind], vector)
    return items


def emit_lines(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@click.group()
@click.option(
    "--log-level",
    default=lambda: os.getenv("VRT_LOG_LEVEL", "INFO"),
    show_default="VRT_LOG_LEVEL or INFO",
    help="Logging level (logs go to standard error)",
)
def cli(log_level: str) -> None:
    """Video retrieval, reranking and moment localization engine."""
    configure_logging(log_level)


@cli.command()
@click.option("--manifest", type=click.Path(dir_okay=False), required=True,
              help="JSONL of items to embed")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Output VRTEMB01 store")
@click.option("--prompt", default=None, help="Prompt id (default: per item kind)")
@provider_options
@seed_option
@with_config(sections=True)
def embed(
    manifest: str, out: str, prompt: Optional[str], extras: Dict[str, Any], **params: Any
) -> None:
    """Embed a manifest of items into a VRTEMB01 store."""
    provider = build_provider(params, extras)
    items = embed_entries(provider, read_manifest(manifest), prompt)
    size = write_store(out, items)
    console.print(f"[green]Embedded {len(items)} items into {out} ({size} bytes)[/green]")


@cli.command("build-index")
@click.option("--store", "store_path", type=click.Path(dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@with_config
def build_index_cmd(store_path: str, out: str, extras: Dict[str, Any]) -> None:
    """Normalize a store into a search index file."""
    index = build_index(read_store(store_path))
    save_index(out, index)
    console.print(f"[green]Indexed {len(index)} items of dim {index.dim} into {out}[/green]")


def _query_entries(query_texts: Sequence[str], queries: Optional[str]) -> List[Tuple[str, QuerySpec]]:
    entries = [(text, QuerySpec.text_query(text)) for text in query_texts]
    if queries:
        entries.extend(read_manifest(queries))
    if not entries:
        raise click.UsageError("Give --query-text or --queries")
    return entries


@cli.command()
@click.option("--index", "index_path", type=click.Path(dir_okay=False), required=True)
@click.option("--query-text", multiple=True, help="Text query (repeatable)")
@click.option("--queries", type=click.Path(dir_okay=False), default=None, help="Query manifest JSONL")
@click.option("--k", type=int, default=50, show_default=True)
@click.option("--dual-softmax/--no-dual-softmax", default=False, show_default=True,
              help="Re-order each query's candidates with the batch dual-softmax prior")
@click.option("--ds-temperature", type=float, default=100.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output JSONL (default stdout)")
@provider_options
@seed_option
@with_config(sections=True)
def search(
    index_path: str,
    query_text: Tuple[str, ...],
    queries: Optional[str],
    k: int,
    dual_softmax: bool,
    ds_temperature: float,
    out: Optional[str],
    extras: Dict[str, Any],
    **params: Any,
) -> None:
    """Top-k cosine search; one JSONL ranking per query."""
    index = load_index(index_path)
    provider = build_provider(params, extras)
    cfg = PipelineConfig(k_candidates=k, use_dual_softmax=dual_softmax, ds_temperature=ds_temperature)
    rankings = retrieve_batch(index, _query_entries(query_text, queries), provider, cfg, jobs=params["jobs"] or 1)
    emit_lines(dumps_jsonl(r.to_dict() for r in rankings), out)


@cli.command("rerank")
@click.option("--index", "index_path", type=click.Path(dir_okay=False), required=True)
@click.option("--rankings", type=click.Path(dir_okay=False), required=True,
              help="JSONL rankings from `search`")
@click.option("--queries", type=click.Path(dir_okay=False), default=None,
              help="Query manifest; without it query ids are read as query texts")
@click.option("--scorer", type=click.Choice(["toy", "remote"]), default="toy")
@click.option("--scorer-model", type=click.Path(dir_okay=False), default=None, help="ToyScorer JSON")
@click.option("--k-rerank", type=int, default=None, help="Candidates sent to the scorer; the rest keep their order below them")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@provider_options
@seed_option
@with_config(sections=True)
def rerank_cmd(
    index_path: str,
    rankings: str,
    queries: Optional[str],
    scorer: str,
    scorer_model: Optional[str],
    k_rerank: Optional[int],
    out: Optional[str],
    extras: Dict[str, Any],
    **params: Any,
) -> None:
    """Reorder candidate lists by scorer confidence."""
    index = load_index(index_path)
    specs = dict(read_manifest(queries)) if queries else {}

    if scorer == "remote":
        settings = EngineSettings.from_env()
        active = RemoteScorer(
            params["endpoint"] or settings.endpoint,
            timeout_s=settings.timeout_s,
            retries=settings.retries,
            backoff_s=settings.backoff_s,
            max_in_flight=params["jobs"] or settings.max_in_flight,
        )
    else:
        if not scorer_model:
            raise click.UsageError("--scorer toy needs --scorer-model")
        head = load_model(scorer_model)
        if not isinstance(head, ToyScorer):
            raise InvalidConfig(f"{scorer_model} does not hold a ToyScorer")
        active = EmbeddingScorer(head, index, build_provider(params, extras))

    results = []
    for ranking in load_rankings(rankings):
        spec = specs.get(ranking.query_id) or QuerySpec.text_query(ranking.query_id)
        depth = k_rerank or len(ranking)
        results.append(rerank_head(ranking, spec, active, depth))
    emit_lines(dumps_jsonl(r.to_dict() for r in results), out)


@cli.command("localize")
@click.option("--queries", "query_store", type=click.Path(dir_okay=False), required=True,
              help="VRTEMB01 store of query embeddings")
@click.option("--frames-dir", type=click.Path(file_okay=False), required=True,
              help="Directory with one frames-<query_id>.bin store per query")
@click.option("--hop", type=float, default=None, help="Seconds between frames (default 1)")
@click.option("--sigma", "smooth_sigma", type=float, default=MOMENT_DEFAULTS.smooth_sigma, show_default=True)
@click.option("--beta", type=float, default=MOMENT_DEFAULTS.beta, show_default=True)
@click.option("--alpha", type=float, default=MOMENT_DEFAULTS.alpha, show_default=True)
@click.option("--nms-iou", type=float, default=MOMENT_DEFAULTS.nms_iou, show_default=True)
@click.option("--max-windows", type=int, default=MOMENT_DEFAULTS.max_windows, show_default=True)
@click.option("--min-window-frames", type=int, default=MOMENT_DEFAULTS.min_window_frames, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@with_config
def localize_cmd(
    query_store: str,
    frames_dir: str,
    hop: Optional[float],
    out: Optional[str],
    extras: Dict[str, Any],
    **moment: Any,
) -> None:
    """Predict moment windows for each query over its frame embeddings."""
    cfg = MomentConfig(**moment)
    rows = []
    for query in read_store(query_store, kind=ItemKind.TEXT):
        frames = read_store(Path(frames_dir) / f"frames-{query.id}.bin", kind=ItemKind.FRAME)
        windows = localize(query.embedding, [f.embedding for f in frames], hop, None, cfg)
        rows.append(windows_to_dict(query.id, windows))
    logger.info(f"Localized {len(rows)} queries")
    emit_lines(dumps_jsonl(rows), out)


@cli.command()
@click.option("--index", "index_path", type=click.Path(dir_okay=False), required=True)
@click.option("--frame", "frames", multiple=True, help="Source video frame ref (repeatable, in order)")
@click.option("--modification", default=None, help="Modification text")
@click.option("--order", type=click.Choice([o.value for o in ComposedOrder]),
              default=ComposedOrder.VIDEO_FIRST.value, show_default=True)
@click.option("--queries", type=click.Path(dir_okay=False), default=None,
              help="Manifest of composed queries")
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@provider_options
@seed_option
@with_config(sections=True)
def compose(
    index_path: str,
    frames: Tuple[str, ...],
    modification: Optional[str],
    order: str,
    queries: Optional[str],
    k: int,
    out: Optional[str],
    extras: Dict[str, Any],
    **params: Any,
) -> None:
    """Composed (video + modification) retrieval."""
    index = load_index(index_path)
    provider = build_provider(params, extras)
    entries = read_manifest(queries) if queries else []
    if frames or modification:
        spec = build_composed_spec(frames, modification or "", ComposedOrder(order))
        entries.append((spec.key, spec))
    if not entries:
        raise click.UsageError("Give --frame/--modification or --queries")
    rankings = [composed_retrieve(index, spec, provider, k, query_id=qid) for qid, spec in entries]
    emit_lines(dumps_jsonl(r.to_dict() for r in rankings), out)


@cli.command("train-toy")
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--reranker/--no-reranker", default=True, show_default=True)
@seed_option
@with_config(sections=True)
def train_toy(out_dir: str, reranker: bool, seed: int, extras: Dict[str, Any]) -> None:
    """Train the linear adapter (and scorer head) on a synthetic world.

    Config sections: world, train, reranker_train, miner, weights. An
    explicit --seed overrides the training and mining seeds.
    """
    ctx = click.get_current_context()
    seed_given = ctx.get_parameter_source("seed") == ParameterSource.COMMANDLINE
    world_cfg = extras.get("world") or {
        "seed": 1, "latent_dim": 16, "raw_dim": 32, "noise_sigma": 0.1, "num_concepts": 256
    }
    train_cfg = dict(extras.get("train", {}))
    rerank_cfg = dict(extras.get("reranker_train", {"step_size": 5.0}))
    miner_cfg = dict(extras.get("miner", {}))
    if seed_given:
        train_cfg["seed"] = rerank_cfg["seed"] = miner_cfg["seed"] = seed

    world = SyntheticWorld.from_dict(world_cfg)
    cfg = TrainConfig.from_dict(train_cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    adapter, history = train_embedder(world, cfg)
    save_model(out / "adapter.json", adapter)
    write_history(out / "history.jsonl", history)
    final = history[-1]
    console.print(
        f"[green]Embedder: loss {history[0].loss:.4f} -> {final.loss:.4f}"
        + (f", held-out R@1 {final.r_at_1:.3f}" if final.r_at_1 is not None else "")
        + "[/green]"
    )

    if reranker:
        miner = MinerConfig.from_dict(miner_cfg)
        weights = JointLossWeights.from_dict(extras.get("weights", {}))
        train_idx, hold_idx = split_concepts(world.num_concepts, cfg.holdout_fraction)
        train_index = build_index(embed_concepts(adapter, world, "c", train_idx))
        train_queries = embed_concepts(adapter, world, "q", train_idx)
        scorer, rerank_history = train_reranker(
            [q.embedding for q in train_queries],
            [q.id.replace("/view:q", "/view:c") for q in train_queries],
            train_index,
            miner,
            weights,
            TrainConfig.from_dict(rerank_cfg),
        )
        save_model(out / "scorer.json", scorer)
        write_history(out / "reranker_history.jsonl", rerank_history)

        if len(hold_idx) >= miner.high_rank:
            hold_index = build_index(embed_concepts(adapter, world, "c", hold_idx))
            hold_queries = embed_concepts(adapter, world, "q", hold_idx)
            accuracy = ordering_accuracy(
                scorer,
                [q.embedding for q in hold_queries],
                [q.id.replace("/view:q", "/view:c") for q in hold_queries],
                hold_index,
                miner,
                seed=miner.seed,
            )
            console.print(f"[green]Scorer: held-out ordering accuracy {accuracy:.3f}[/green]")


@cli.command("eval")
@click.option("--task", type=click.Choice(["retrieval", "moment"]), required=True)
@click.option("--rankings", type=click.Path(dir_okay=False), default=None, help="Retrieval rankings JSONL")
@click.option("--predictions", type=click.Path(dir_okay=False), default=None, help="Moment windows JSONL")
@click.option("--gt", type=click.Path(dir_okay=False), required=True, help="Ground-truth JSONL")
@click.option("--label", default="t2v", show_default=True, help="Task label written in the report")
@click.option("--ks", type=int, multiple=True, help="Recall cutoffs (default 1 5 10 for retrieval, 1 5 for moments)")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="json", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@with_config
def eval_cmd(
    task: str,
    rankings: Optional[str],
    predictions: Optional[str],
    gt: str,
    label: str,
    ks: Tuple[int, ...],
    fmt: str,
    out: Optional[str],
    extras: Dict[str, Any],
) -> None:
    """Compute metrics and emit a JSON or CSV report."""
    if task == "retrieval":
        if not rankings:
            raise click.UsageError("--task retrieval needs --rankings")
        records = retrieval_metrics(load_rankings(rankings), load_retrieval_gt(gt), label, ks or (1, 5, 10))
    else:
        if not predictions:
            raise click.UsageError("--task moment needs --predictions")
        records = moment_metrics(load_moment_predictions(predictions), load_moment_gt(gt), ks=ks or (1, 5))

    report = emit_report(records, fmt)
    if out:
        Path(out).write_bytes(report)
    else:
        click.echo(report.decode("utf-8"), nl=False)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and map failures to exit codes (1 usage, 2 runtime)."""
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name="vrt",
                          standalone_mode=False)
    except click.UsageError as e:
        console.print(f"[bold red]Usage error:[/bold red] {e.format_message()}")
        return 1
    except click.Abort:
        console.print("[bold red]Aborted[/bold red]")
        return 1
    except click.ClickException as e:
        console.print(f"[bold red]Error:[/bold red] {e.format_message()}")
        return 2
    except (VrtError, OSError, ValueError, KeyError) as e:
        logger.debug("Command failed", exc_info=True)
        console.print(f"[bold red]Error:[/bold red] {e}")
        return 2
    return result if isinstance(result, int) else 0


def main() -> None:
    sys.exit(run())
