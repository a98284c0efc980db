#!/usr/bin/env python3
"""
RPTM CLI
Command-line interface for the relation preserving triplet mining pipeline.
"""

import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import click
import numpy as np
from rich.console import Console
from rich.table import Table

from . import __version__
from .config import (
    EvalConfig, MiningConfig, RunConfig, TauPolicy, resolve_threads, validate_section,
)
from .errors import HashMismatchError, RPTMError
from .evalrank import (
    RERANK_PRESETS, evaluate, k_reciprocal_rerank, load_embeddings, pairwise_distances,
    read_split, save_embeddings, write_metrics, write_split,
)
from .experiments import run_lambda_sweep, run_policy_ablation, summarize, write_results
from .learn import (
    embed, epoch_triplets, image_inputs, load_checkpoint, save_checkpoint, train, write_history,
)
from .log import setup_logging
from .mining import positive_choices, write_positive_dump, write_triplets
from .relational import DatasetManifest, build_relational_matrix, load_matrix, save_matrix
from .synth import SynthSpec, generate_dataset

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class RPTMPipeline:
    """Pipeline stages shared by the subcommands"""

    def __init__(self, config: Optional[RunConfig] = None, threads: Optional[int] = None):
        self.config = config or RunConfig()
        self.threads = resolve_threads(threads, self.config)
        self.console = Console()

    def log(self, message: str) -> None:
        logger.info(message)

    def summary(self, title: str, rows: Dict[str, object]) -> None:
        table = Table(title=title, show_header=False)
        table.add_column("key", style="bold")
        table.add_column("value")
        for key, value in rows.items():
            table.add_row(key, f"{value:.4f}" if isinstance(value, float) else str(value))
        self.console.print(table)

    def metrics(
        self,
        vectors: np.ndarray,
        ids: Sequence[str],
        splits: Sequence[str],
        eval_cfg: EvalConfig,
    ) -> Dict[str, float]:
        """Query/gallery metrics, optionally after k-reciprocal re-ranking"""
        splits = np.asarray(splits)
        labels = np.asarray(ids)
        if len(splits) != len(vectors):
            raise RPTMError(f"split lists {len(splits)} images, embeddings have {len(vectors)}")
        queries = splits == "query"
        gallery = splits == "gallery"
        q, g = vectors[queries], vectors[gallery]
        if eval_cfg.rerank:
            self.log(f"re-ranking k1={eval_cfg.k1} k2={eval_cfg.k2} eta={eval_cfg.eta}")
            stacked = np.vstack([q, g])
            dists = k_reciprocal_rerank(pairwise_distances(stacked, stacked), len(q),
                                        eval_cfg.k1, eval_cfg.k2, eval_cfg.eta)
        else:
            dists = pairwise_distances(q, g)
        return evaluate(dists, labels[queries], labels[gallery], eval_cfg.cmc_ranks)


def _load_config(path: Optional[str]) -> RunConfig:
    return RunConfig.load(path) if path else RunConfig()


def _eval_config(base: EvalConfig, rerank: bool, preset: Optional[str],
                 k1: Optional[int], k2: Optional[int], eta: Optional[float]) -> EvalConfig:
    values = base.model_dump()
    if preset:
        values.update(RERANK_PRESETS[preset], rerank=True)
    if rerank:
        values["rerank"] = True
    for key, value in (("k1", k1), ("k2", k2), ("eta", eta)):
        if value is not None:
            values[key] = value
    return validate_section(EvalConfig, values)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="rptm")
@click.option("-v", "--verbose", count=True, help="Debug log output.")
@click.option("-q", "--quiet", is_flag=True, help="Only warnings and errors.")
@click.option("--threads", type=click.IntRange(min=1), default=None,
              help="Worker threads (default: RPTM_THREADS, then config, then all cores).")
@click.pass_context
def cli(ctx: click.Context, verbose: int, quiet: bool, threads: Optional[int]) -> None:
    """Relation preserving triplet mining for object re-identification."""
    setup_logging(-1 if quiet else verbose)
    ctx.obj = {"threads": threads}


@cli.command()
@click.option("--spec", "spec_path", type=click.Path(dir_okay=False), required=True,
              help="SynthSpec document (JSON or YAML).")
@click.option("--out", type=click.Path(file_okay=False), required=True,
              help="Output directory for images, manifest.csv, poses.csv and split.csv.")
@click.pass_obj
def synth(obj, spec_path: str, out: str) -> None:
    """Generate a pose-grouped synthetic dataset."""
    pipeline = RPTMPipeline(threads=obj["threads"])
    spec = SynthSpec.load(spec_path)
    dataset = generate_dataset(spec, out, pipeline.threads)
    pipeline.summary("synth", {"images": len(dataset.manifest), "ids": spec.n_ids,
                               "poses per id": spec.poses_per_id, "output": out})


@cli.command()
@click.option("--manifest", type=click.Path(dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(dir_okay=False))
@click.pass_obj
def matrix(obj, manifest: str, out: str, config_path: Optional[str]) -> None:
    """Build the relational matrix of verified match counts."""
    pipeline = RPTMPipeline(_load_config(config_path), obj["threads"])
    data = DatasetManifest.load(manifest)
    data.validate(min_per_id=1)
    pipeline.log(f"building relational matrix for {len(data)} images "
                 f"with {pipeline.threads} thread(s)")
    mx = build_relational_matrix(data, pipeline.config.feature, pipeline.config.gms,
                                 pipeline.threads)
    save_matrix(mx, out)
    nonzero = int(np.count_nonzero(mx.counts)) // 2
    pipeline.summary("matrix", {"images": mx.m, "related pairs": nonzero, "output": out})


@cli.command()
@click.option("--manifest", type=click.Path(dir_okay=False), required=True)
@click.option("--matrix", "matrix_path", type=click.Path(dir_okay=False),
              required=True)
@click.option("--policy", type=click.Choice([p.value for p in TauPolicy]), default="mean",
              show_default=True)
@click.option("--tau-min", type=float, default=10.0, show_default=True,
              help="Constant threshold of the min policy.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--triplets-out", type=click.Path(dir_okay=False), default=None,
              help="Also write the triplets of the first training epoch.")
@click.option("--checkpoint", type=click.Path(dir_okay=False), default=None,
              help="Mine negatives on this model's embeddings instead of the raw inputs.")
@click.option("--config", "config_path", type=click.Path(dir_okay=False))
def mine(manifest: str, matrix_path: str, policy: str, tau_min: float, out: str,
         triplets_out: Optional[str], checkpoint: Optional[str],
         config_path: Optional[str]) -> None:
    """Dump the positive chosen for every anchor."""
    pipeline = RPTMPipeline(_load_config(config_path))
    data = DatasetManifest.load(manifest)
    mx = load_matrix(matrix_path)
    _check_hash(data, mx.manifest_hash, "relational matrix")
    choices = positive_choices(mx, policy, tau_min)
    write_positive_dump(choices, out)
    found = sum(c.positive is not None for c in choices)
    rows = {"anchors": len(choices), "with positive": found, "policy": policy, "output": out}
    if triplets_out:
        vectors = image_inputs(data, tuple(pipeline.config.feature.match_size))
        if checkpoint:
            model, _ = load_checkpoint(checkpoint)
            vectors = embed(model, vectors)
        mining_cfg = MiningConfig(policy=policy, tau_min=tau_min)
        triplets = epoch_triplets(data, mx, vectors, pipeline.config.train, mining_cfg)
        write_triplets(triplets, triplets_out)
        rows.update({"triplets": len(triplets), "triplets output": triplets_out})
    pipeline.summary("mine", rows)


@cli.command("train")
@click.option("--manifest", type=click.Path(dir_okay=False), required=True)
@click.option("--matrix", "matrix_path", type=click.Path(dir_okay=False),
              required=True)
@click.option("--config", "config_path", type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Checkpoint file.")
@click.option("--history", type=click.Path(dir_okay=False), required=True,
              help="Loss history CSV.")
@click.option("--seed", type=int, default=None, help="Override train.seed.")
@click.pass_obj
def train_cmd(obj, manifest: str, matrix_path: str, config_path: Optional[str], out: str,
              history: str, seed: Optional[int]) -> None:
    """Train the embedding model with relation preserving triplets."""
    pipeline = RPTMPipeline(_load_config(config_path), obj["threads"])
    cfg = pipeline.config.train
    if seed is not None:
        cfg = cfg.model_copy(update={"seed": seed})
    data = DatasetManifest.load(manifest)
    mx = load_matrix(matrix_path)
    pipeline.log(f"training {cfg.epochs} epochs, batch {cfg.batch_p}x{cfg.batch_k}")
    size = tuple(pipeline.config.feature.match_size)
    model, records = train(data, mx, cfg, pipeline.config.mining, inputs=image_inputs(data, size))
    save_checkpoint(model, out, data.content_hash())
    write_history(records, history)
    pipeline.summary("train", {"epochs": len(records), "first total": records[0].total,
                               "final total": records[-1].total, "checkpoint": out})


@cli.command("eval")
@click.option("--checkpoint", type=click.Path(dir_okay=False), required=True)
@click.option("--manifest", type=click.Path(dir_okay=False), required=True)
@click.option("--split", "split_path", type=click.Path(dir_okay=False),
              required=True, help="CSV 'index,id,split'.")
@click.option("--config", "config_path", type=click.Path(dir_okay=False))
@click.option("--rerank", is_flag=True, help="Apply k-reciprocal re-ranking.")
@click.option("--preset", type=click.Choice(sorted(RERANK_PRESETS)), default=None,
              help="Re-ranking coefficients preset (implies --rerank).")
@click.option("--k1", type=int, default=None)
@click.option("--k2", type=int, default=None)
@click.option("--eta", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Metrics CSV.")
@click.option("--embeddings-out", type=click.Path(dir_okay=False), default=None,
              help="Also write the embeddings and their 'index,id,split' sidecar.")
def eval_cmd(checkpoint: str, manifest: str, split_path: str, config_path: Optional[str],
             rerank: bool, preset: Optional[str], k1: Optional[int], k2: Optional[int],
             eta: Optional[float], out: str, embeddings_out: Optional[str]) -> None:
    """Evaluate a checkpoint on a query/gallery split."""
    pipeline = RPTMPipeline(_load_config(config_path))
    eval_cfg = _eval_config(pipeline.config.eval, rerank, preset, k1, k2, eta)
    model, manifest_hash = load_checkpoint(checkpoint)
    data = DatasetManifest.load(manifest)
    if manifest_hash != data.content_hash():
        logger.warning("checkpoint was trained on a different manifest")
    ids, splits = read_split(split_path)
    if ids != data.ids:
        raise RPTMError(f"{split_path}: ids do not follow the manifest")

    size = tuple(pipeline.config.feature.match_size)
    vectors = embed(model, image_inputs(data, size))
    if embeddings_out:
        save_embeddings(vectors, embeddings_out)
        write_split(ids, splits, Path(embeddings_out).with_suffix(".csv"))
    metrics = pipeline.metrics(vectors, ids, splits, eval_cfg)
    write_metrics(metrics, out)
    pipeline.summary("eval", metrics)


@cli.command()
@click.option("--embeddings", type=click.Path(dir_okay=False), required=True)
@click.option("--ids", "ids_path", type=click.Path(dir_okay=False), required=True,
              help="Sidecar CSV 'index,id,split'.")
@click.option("--preset", type=click.Choice(sorted(RERANK_PRESETS)), default=None)
@click.option("--k1", type=int, default=None)
@click.option("--k2", type=int, default=None)
@click.option("--eta", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def rerank(embeddings: str, ids_path: str, preset: Optional[str], k1: Optional[int],
           k2: Optional[int], eta: Optional[float], out: str) -> None:
    """Re-ranked metrics from a saved embedding file."""
    pipeline = RPTMPipeline()
    eval_cfg = _eval_config(pipeline.config.eval, True, preset, k1, k2, eta)
    vectors = load_embeddings(embeddings)
    ids, splits = read_split(ids_path)
    metrics = pipeline.metrics(vectors, ids, splits, eval_cfg)
    write_metrics(metrics, out)
    pipeline.summary("rerank", metrics)


@cli.command("config")
@click.option("--config", "config_path", type=click.Path(dir_okay=False),
              help="Validate and print this document instead of the defaults.")
def config_cmd(config_path: Optional[str]) -> None:
    """Print the run configuration as JSON."""
    click.echo(_load_config(config_path).dump(), nl=False)


@cli.command()
@click.argument("kind", type=click.Choice(["ablation", "lambda-sweep"]))
@click.option("--epochs", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--seeds", type=click.IntRange(min=1), default=5, show_default=True,
              help="Number of seeds, starting at 0.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def experiment(kind: str, epochs: int, seeds: int, out: str) -> None:
    """Run the embedding-level policy ablation or lambda_tri sweep."""
    seed_list = range(seeds)
    if kind == "ablation":
        results = run_policy_ablation(seed_list, epochs=epochs)
    else:
        results = run_lambda_sweep(seeds=seed_list, epochs=epochs)
    write_results(results, out)
    pipeline = RPTMPipeline()
    for arm, values in summarize(results).items():
        pipeline.summary(arm, values)


def _check_hash(data: DatasetManifest, found: int, what: str) -> None:
    if found != data.content_hash():
        raise HashMismatchError(data.content_hash(), found, what)


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point"""
    try:
        rv = cli.main(args=argv, prog_name="rptm", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted", err=True)
        return EXIT_USAGE
    except click.UsageError as e:
        click.echo(f"Error: {e.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        click.echo(f"Error: {e.format_message()}", err=True)
        return EXIT_DATA
    except RPTMError as e:
        click.echo(f"Error: {e}", err=True)
        return EXIT_DATA
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
