"""Command line entry points: serve the HTTP API, build a handbook for one
interface, and run the offline evaluation harness."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .config import load_config
from .dom_model import extract_interactables, parse_snapshot
from .errors import InsituError
from .evalkit import load_dataset, prepare_engine, run_eval
from .handbook import HandbookIndex, generate_handbook
from .knowledge import acquire_knowledge, interface_id_for
from .recommender import METHODS
from .service import Engine, create_app

log = logging.getLogger(__name__)

# Short method names accepted on the command line.
_METHOD_ALIASES = {"generate": "generate_only", "handbook": "handbook_only",
                   "hybrid": "hybrid"}


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Config file (TOML or JSON); defaults to INSITU_CONFIG.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8321, show_default=True, type=int)
def serve(config_path: str | None, host: str, port: int):
    """Run the assistance engine's HTTP API."""
    import uvicorn

    cfg = load_config(config_path)
    engine = Engine(cfg)
    app = create_app(engine)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.group()
def handbook():
    """Handbook maintenance commands."""


@handbook.command("build")
@click.option("--interface", "url", required=True, help="Interface URL.")
@click.option("--snapshot", "snapshot_path", required=True,
              type=click.Path(exists=True), help="Snapshot JSON file.")
@click.option("-n", "n_cases", default=120, show_default=True, type=int,
              help="Number of candidate cases to request.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--title", default="", help="Page title (defaults to the snapshot's).")
def handbook_build(url: str, snapshot_path: str, n_cases: int,
                   config_path: str | None, title: str):
    """Build knowledge and a handbook for one interface and persist them."""
    cfg = load_config(config_path)
    engine = Engine(cfg)
    snapshot = parse_snapshot(Path(snapshot_path).read_text(encoding="utf-8"))
    title = title or snapshot.title
    interface_id = interface_id_for(url)
    try:
        knowledge = acquire_knowledge(url, title, snapshot, engine.providers, cfg)
        elements = extract_interactables(snapshot)
        build = generate_handbook(knowledge, elements, n_cases, engine.providers)
        index = HandbookIndex.build(build.cases, engine.providers.embedder)
        engine.knowledge_store.store(knowledge)
        engine.handbook_store.save(interface_id, index)
    except InsituError as e:
        click.echo(f"build failed: {e}", err=True)
        sys.exit(1)
    click.echo(
        f"interface {interface_id}: {len(index)} cases kept, "
        f"{len(build.rejections)} candidates rejected"
        + (" (degraded knowledge)" if knowledge.degraded else "")
    )
    for rejection in build.rejections:
        click.echo(f"  rejected #{rejection.index}: {rejection.reason} "
                   f"({rejection.detail})")


@main.command("eval")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True),
              help="JSONL evaluation dataset.")
@click.option("--method", type=click.Choice(sorted(set(_METHOD_ALIASES) | set(METHODS))),
              default="hybrid", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--judge", type=click.Choice(["on", "off"]), default="off",
              show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the full JSON report here.")
@click.option("--handbooks", "handbook_dir", type=click.Path(exists=True), default=None,
              help="Directory of handbook fixtures (default: <dataset dir>/handbooks).")
@click.option("--data-dir", type=click.Path(), default=None,
              help="Engine data directory (default: a temporary directory).")
@click.option("--gen-latency-ms", default=0.0, show_default=True, type=float,
              help="Injected mock generation latency.")
@click.option("--embed-latency-ms", default=0.0, show_default=True, type=float,
              help="Injected mock embedding latency.")
def eval_cmd(dataset_path: str, method: str, seed: int, judge: str,
             out_path: str | None, handbook_dir: str | None, data_dir: str | None,
             gen_latency_ms: float, embed_latency_ms: float):
    """Evaluate one recommendation method over an annotated dataset."""
    import tempfile

    method = _METHOD_ALIASES.get(method, method)
    records = load_dataset(dataset_path)
    handbook_dir = handbook_dir or str(Path(dataset_path).parent / "handbooks")
    if data_dir is None:
        data_dir = tempfile.mkdtemp(prefix="insitu-eval-")
    engine = prepare_engine(
        records, handbook_dir, data_dir,
        gen_latency_ms=gen_latency_ms, embed_latency_ms=embed_latency_ms,
    )
    report = run_eval(records, method, engine, judge=(judge == "on"), seed=seed)
    click.echo(f"method={report.method} n={report.n_records} "
               f"success_rate={report.success_rate:.3f}")
    click.echo(f"latency_ms mean={report.latency_ms['mean']:.1f} "
               f"p50={report.latency_ms['p50']:.1f} p95={report.latency_ms['p95']:.1f}")
    if report.fallback_rate is not None:
        click.echo(f"fallback_rate={report.fallback_rate:.3f}")
    if report.resolution and report.resolution["mean"] is not None:
        click.echo(f"resolution mean={report.resolution['mean']:.2f}")
    click.echo(f"provider_calls={json.dumps(report.provider_calls)} "
               f"retrieval_calls={report.retrieval_calls}")
    if out_path:
        Path(out_path).write_text(report.to_json(), encoding="utf-8")
        click.echo(f"report written to {out_path}")


if __name__ == "__main__":
    main()
