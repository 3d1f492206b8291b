"""Command-line client for the dyncm service.

Every subcommand is a request against the HTTP API.  Without ``--server`` the
app runs in-process, so no server needs to be started.
"""
from __future__ import annotations

import json
import logging
import math
import sys
import warnings
from pathlib import Path

import click

from .experiments import ResultRow, load_config, parse_model_spec, write_svg
from .halfedge import read_degrees


class Client:
    def __init__(self, server: str | None):
        if server:
            import httpx
            self._http = httpx.Client(base_url=server, timeout=None)
        else:
            with warnings.catch_warnings():
                warnings.filterwarnings("ignore", message="Using `httpx` with `starlette.testclient`")
                from fastapi.testclient import TestClient

            from .service.app import app
            self._http = TestClient(app)

    def call(self, method: str, path: str, payload=None):
        resp = self._http.request(method, path, json=payload)
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail")
            except ValueError:
                detail = resp.text
            raise click.ClickException(f"{path}: {detail}")
        return resp.json()


def _graph_payload(source: str, mode: str | None, seed: int) -> dict:
    if Path(source).is_file():
        payload = {"degrees": read_degrees(source)}
    else:
        try:
            cfg = parse_model_spec(source, seed)
        except ValueError as exc:
            raise click.BadParameter(f"{source!r} is neither a degrees file nor a model spec: {exc}")
        payload = {k: getattr(cfg, k) for k in ("model", "n", "d", "d1", "d2", "frac1", "gamma")
                   if getattr(cfg, k) is not None}
    payload["seed"] = seed
    if mode:
        payload["mode"] = mode
    return payload


@click.group()
@click.option("--server", default=None, help="Base URL of a running service (default: in-process).")
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
@click.pass_context
def main(ctx, server, verbose):
    """Non-backtracking walks on dynamically rewired configuration models."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    ctx.obj = {"server": server}


def _client(ctx) -> Client:
    return Client(ctx.obj["server"])


@main.command()
@click.argument("source")
@click.option("--mode", type=click.Choice(["R", "R*"]), default=None)
@click.option("--seed", type=int, default=0, help="Seed for generated degree models.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def check(ctx, source, mode, seed, as_json):
    """Degree statistics and regularity diagnostics.

    SOURCE is a degrees file (one integer per line) or a model spec such as
    ``bivalued:n=10000,d1=3,d2=4,frac1=0.5``.
    """
    body = _client(ctx).call("POST", "/check", _graph_payload(source, mode, seed))
    if as_json:
        click.echo(json.dumps({k: v for k, v in body.items() if k != "text"}, indent=2))
    else:
        click.echo(body["text"])
    if any(c["status"] == "fail" for c in body["checks"]):
        sys.exit(1)


@main.command()
@click.argument("source")
@click.option("-t", "--steps", "t", type=int, required=True)
@click.option("-k", type=int, default=None, help="Edges rewired per step (0: static graph).")
@click.option("--alpha", type=float, default=None, help="Rewiring fraction; k = round(alpha m).")
@click.option("-x", "--start", "x", type=int, default=None, help="Start half-edge (default: uniform).")
@click.option("--seed", type=int, default=0)
@click.option("--mode", type=click.Choice(["R", "R*"]), default=None)
@click.option("--trace", is_flag=True, help="Also print the rewired set of every step.")
@click.option("--dump", type=click.Path(dir_okay=False), default=None,
              help="Write the initial configuration to this file.")
@click.pass_context
def simulate(ctx, source, t, k, alpha, x, seed, mode, trace, dump):
    """One replica of the joint chain; prints the trajectory."""
    payload = {"graph": _graph_payload(source, mode, seed), "t": t, "k": k, "alpha": alpha,
               "x": x, "seed": seed, "record_trace": trace}
    body = _client(ctx).call("POST", "/simulate", payload)
    if dump:
        Path(dump).write_text(body["configuration"])
    click.echo(f"# ell={body['ell']} k={body['k']} tau={body['tau']} self_avoiding={body['self_avoiding']}")
    click.echo(body["text"], nl=False)
    if trace:
        click.echo(body["trace"], nl=False)


def _row(d: dict) -> ResultRow:
    return ResultRow(**{k: (math.nan if v is None else v) for k, v in d.items()})


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--fixed-start/--fresh-start", default=True, show_default=True,
              help="One typical (eta, x) for every replica, or a fresh start per replica.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Override the config's out.")
@click.option("--svg", type=click.Path(dir_okay=False), default=None, help="Also write a line chart.")
@click.pass_context
def profile(ctx, config_path, workers, fixed_start, out, svg):
    """Mixing profile over the config's c grid, written as CSV."""
    cfg = load_config(config_path)
    payload = {k: v for k, v in cfg.__dict__.items() if v is not None}
    if out:
        payload["out"] = out
    if payload.get("out"):
        payload["out"] = str(Path(payload["out"]).resolve())
    payload.update(workers=workers, fresh=not fixed_start)
    body = _client(ctx).call("POST", "/profile", payload)
    if not payload.get("out"):
        click.echo(body["csv"], nl=False)
    else:
        click.echo(f"wrote {len(body['rows'])} rows to {payload['out']}", err=True)
    if svg:
        write_svg([_row(r) for r in body["rows"]], svg)


@main.command()
@click.pass_context
def exact(ctx):
    """Run the exact-oracle verification suite; nonzero exit on failure."""
    body = _client(ctx).call("POST", "/exact")
    click.echo(body["text"])
    if not body["ok"]:
        sys.exit(1)


@main.command("reset-law")
@click.option("--degrees", default="3,3,2", show_default=True, help="Comma-separated degrees.")
@click.option("-k", type=int, default=2, show_default=True)
@click.option("-t", "--steps", "t", type=int, default=2, show_default=True)
@click.option("--path", "path", default=None, help="Comma-separated half-edges x_0..x_t.")
@click.option("--configuration", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Configuration file (ell=... header, then pairs).")
@click.pass_context
def reset_law(ctx, degrees, k, t, path, configuration):
    """Exact law of the rewiring pattern T along a path on a tiny instance."""
    payload = {"degrees": [int(v) for v in degrees.split(",")], "k": k, "t": t}
    if path:
        payload["path"] = [int(v) for v in path.split(",")]
    if configuration:
        payload["configuration"] = Path(configuration).read_text()
    body = _client(ctx).call("POST", "/reset-law", payload)
    click.echo(f"# ell={body['ell']} k={body['k']} t={body['t']} path={','.join(map(str, body['path']))}")
    for e in body["law"]:
        T = "{" + ",".join(map(str, e["T"])) + "}"
        click.echo(f"{T:<12} {e['p']:.15g}")
    click.echo(f"# total {body['total']:.15g}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn
    uvicorn.run("dyncm.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
