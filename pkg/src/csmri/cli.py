"""Thin command-line client for the benchmark service.

Every verb posts a JSON request to the FastAPI service.  By default the
app runs in-process (no server needed); pass --server to talk to a
running instance, or use `csmri serve` to start one.
"""

from __future__ import annotations

import json
import sys

import click
import httpx


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # no server given: run the app in-process
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _post(server, path, payload) -> dict:
    with _client(server) as client:
        resp = client.post(path, json=payload)
        if resp.status_code != 200:
            click.echo(f"error {resp.status_code}: {resp.text}", err=True)
            sys.exit(1)
        return resp.json()


@click.group()
@click.option("--server", default=None, help="URL of a running service; default runs in-process")
@click.pass_context
def main(ctx, server):
    ctx.obj = server


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, type=int)
@click.pass_obj
def simulate(server, config_path, out_dir, seed):
    """Generate a phantom corpus from a declarative config."""
    result = _post(server, "/simulate", {
        "config_path": config_path, "out_dir": out_dir, "seed": seed,
    })
    click.echo(f"wrote {len(result['volumes'])} volumes to {out_dir}")


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--kind", default="random", type=click.Choice(["random", "equispaced"]))
@click.option("--acceleration", default=4, type=int)
@click.option("--seed", default=0, type=int)
@click.pass_obj
def mask(server, corpus_dir, out_dir, kind, acceleration, seed):
    """Write masked test-style copies of a corpus."""
    result = _post(server, "/mask", {
        "corpus_dir": corpus_dir, "out_dir": out_dir, "kind": kind,
        "acceleration": acceleration, "seed": seed,
    })
    click.echo(f"masked {len(result['volumes'])} volumes")
    for vid, r in sorted(result["achieved_accelerations"].items()):
        click.echo(f"  {vid}: achieved {r:.3f}x")


@main.command()
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True))
@click.pass_obj
def reconstruct(server, plan_path):
    """Run the reconstruction sweep described by a plan file."""
    result = _post(server, "/reconstruct", {"plan_path": plan_path})
    click.echo(
        f"{result['cell_count']} cells, {result['n_rows']} result rows, "
        f"{result['n_failures']} failures"
    )
    for kind, path in sorted(result["report_paths"].items()):
        click.echo(f"  {kind}: {path}")
    if result["n_failures"]:
        sys.exit(2)


@main.command()
@click.option("--recon", "recon_dir", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--crop", nargs=2, type=int, default=None)
@click.pass_obj
def evaluate(server, recon_dir, corpus_dir, out_dir, crop):
    """Score external reconstructions against corpus ground truths."""
    payload = {"recon_dir": recon_dir, "corpus_dir": corpus_dir, "out_dir": out_dir}
    if crop:
        payload["crop"] = list(crop)
    result = _post(server, "/evaluate", payload)
    click.echo(f"{result['n_rows']} rows, {result['n_failures']} failures")
    for kind, path in sorted(result["report_paths"].items()):
        click.echo(f"  {kind}: {path}")
    if result["n_failures"]:
        sys.exit(2)


@main.command()
@click.option("--results", "results_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--stem", default="results")
@click.pass_obj
def report(server, results_path, out_dir, stem):
    """Re-emit a stored structured result table in all formats."""
    result = _post(server, "/report", {
        "results_path": results_path, "out_dir": out_dir, "stem": stem,
    })
    for kind, path in sorted(result["report_paths"].items()):
        click.echo(f"  {kind}: {path}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host, port):
    """Run the benchmark service."""
    import uvicorn

    uvicorn.run("csmri.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
