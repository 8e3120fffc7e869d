"""Thin command-line client for the tracing service.

Every subcommand builds a request payload (scene files are read client-side
and inlined) and posts it to the service: a remote one when --server is
given, otherwise the app mounted in-process.  All computation and output
formatting happens on the service side.
"""
from __future__ import annotations

import asyncio
import sys
from pathlib import Path

import click
import httpx


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            return client.post(path, json=payload)

    from .service.app import create_app

    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://raybvh.local",
                                     timeout=None) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _scene_spec(spec: str) -> dict:
    """`file.obj` or `synth:kind[:seed[:budget]]`."""
    if spec.startswith("synth:"):
        parts = spec.split(":")
        if len(parts) < 2 or not parts[1]:
            raise click.UsageError("synth scene needs a kind: synth:kind[:seed[:budget]]")
        synth = {"kind": parts[1]}
        if len(parts) > 2:
            synth["seed"] = int(parts[2])
        if len(parts) > 3:
            synth["facet_budget"] = int(parts[3])
        return {"synth": synth}
    path = Path(spec)
    if not path.is_file():
        raise click.UsageError(f"scene file not found: {spec}")
    return {"mesh_text": path.read_text(), "name": path.stem}


def _vec(value: str | None) -> list[float] | None:
    if value is None:
        return None
    parts = value.strip().strip("()").replace(",", " ").split()
    if len(parts) != 3:
        raise click.UsageError(f"expected 3 components, got {value!r}")
    return [float(p) for p in parts]


def _levels(value: str) -> list[int]:
    value = value.strip()
    for sep in (":", "-"):
        if sep in value and "," not in value:
            lo, _, hi = value.partition(sep)
            return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in value.split(",")]


_CONFIG_FLAGS = [
    ("--tx", "tx", str, "transmitter position x,y,z (m)"),
    ("--rx", "rx", str, "receiver position x,y,z (m)"),
    ("--alpha", "alpha", float, "hybrid cost weight in [0,1]"),
    ("--leaf-threshold", "leaf_threshold", int, "max facets per leaf"),
    ("--tessellation-level", "tessellation_level", int, "launch subdivision level"),
    ("--max-reflections", "max_reflections", int, "reflection order"),
    ("--frequency-ghz", "frequency_ghz", float, "carrier frequency (metadata)"),
    ("--seed", "seed", int, "synthetic-scene seed"),
    ("--bins", "bins", int, "split-candidate bins"),
    ("--t-i", "t_i", float, "intersection cost unit"),
    ("--t-trav", "t_trav", float, "traversal cost unit"),
    ("--normalize-distance", "normalize_distance", click.BOOL,
     "divide source distance by the scene diagonal"),
    ("--path-length-limit", "path_length_limit", float, "energy-proxy cutoff (m)"),
]


def config_options(fn):
    fn = click.option("--config", "config_path",
                      type=click.Path(exists=True, dir_okay=False),
                      default=None, help="key = value config file")(fn)
    for flag, name, kind, help_text in reversed(_CONFIG_FLAGS):
        fn = click.option(flag, name, type=kind, default=None, help=help_text)(fn)
    return fn


def _config_payload(config_path: str | None, options: dict) -> dict:
    payload: dict = {}
    if config_path:
        payload["config_text"] = Path(config_path).read_text()
    config = {}
    for key, value in options.items():
        if value is None:
            continue
        config[key] = _vec(value) if key in ("tx", "rx") else value
    if config:
        payload["config"] = config
    return payload


def _emit(ctx: click.Context, path: str, payload: dict, output: str | None) -> None:
    try:
        resp = _post(ctx.obj, path, payload)
    except httpx.HTTPError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        click.echo(f"error: {detail}", err=True)
        sys.exit(1)
    text = resp.text
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="running service URL; default mounts the app in-process")
@click.version_option()
@click.pass_context
def main(ctx, server):
    """BVH-accelerated ray tracing benchmark client."""
    ctx.obj = server


@main.command()
@click.option("--scene", required=True, help="mesh file or synth:kind[:seed[:budget]]")
@click.option("--strategy", type=click.Choice(["brute", "median", "sah", "hybrid"]),
              default=None, help="override the config strategy")
@click.option("--out", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("-o", "--output", default=None, help="write to file instead of stdout")
@config_options
@click.pass_context
def run(ctx, scene, strategy, fmt, output, config_path, **options):
    """Trace one scene under one strategy; print paths and counters."""
    payload = {"scene": _scene_spec(scene), "format": fmt,
               **_config_payload(config_path, options)}
    if strategy:
        payload["strategy"] = strategy
    _emit(ctx, "/run", payload, output)


@main.command()
@click.option("--scene", required=True, help="mesh file or synth:kind[:seed[:budget]]")
@click.option("--strategies", default="brute,hybrid", show_default=True,
              help="comma-separated; first is the baseline")
@click.option("--repeats", type=int, default=3, show_default=True,
              help="timing repeats (median reported)")
@click.option("--out", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("-o", "--output", default=None)
@config_options
@click.pass_context
def compare(ctx, scene, strategies, repeats, fmt, output, config_path, **options):
    """Run several strategies, diff their path sets and report speedups."""
    payload = {"scene": _scene_spec(scene),
               "strategies": [s.strip() for s in strategies.split(",") if s.strip()],
               "repeats": repeats, "format": fmt,
               **_config_payload(config_path, options)}
    _emit(ctx, "/compare", payload, output)


@main.command()
@click.option("--scene", required=True, help="mesh file or synth:kind[:seed[:budget]]")
@click.option("--levels", required=True, help="tessellation levels, e.g. 1:4 or 1,2,3")
@click.option("--strategies", default="brute,hybrid", show_default=True)
@click.option("--repeats", type=int, default=1, show_default=True)
@click.option("--out", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("-o", "--output", default=None)
@config_options
@click.pass_context
def sweep(ctx, scene, levels, strategies, repeats, fmt, output, config_path, **options):
    """Trace at several launch densities; one table row per strategy and level."""
    payload = {"scene": _scene_spec(scene), "levels": _levels(levels),
               "strategies": [s.strip() for s in strategies.split(",") if s.strip()],
               "repeats": repeats, "format": fmt,
               **_config_payload(config_path, options)}
    _emit(ctx, "/sweep", payload, output)


@main.command(name="dump-tree")
@click.option("--scene", required=True, help="mesh file or synth:kind[:seed[:budget]]")
@click.option("--strategy", type=click.Choice(["median", "sah", "hybrid"]),
              default="sah", show_default=True)
@click.option("-o", "--output", default=None)
@config_options
@click.pass_context
def dump_tree(ctx, scene, strategy, output, config_path, **options):
    """Print the built tree, one node per line."""
    payload = {"scene": _scene_spec(scene), "strategy": strategy,
               **_config_payload(config_path, options)}
    _emit(ctx, "/dump-tree", payload, output)


@main.command(name="dump-paths")
@click.option("--scene", required=True, help="mesh file or synth:kind[:seed[:budget]]")
@click.option("--strategy", type=click.Choice(["brute", "median", "sah", "hybrid"]),
              default=None, help="override the config strategy")
@click.option("-o", "--output", default=None)
@config_options
@click.pass_context
def dump_paths(ctx, scene, strategy, output, config_path, **options):
    """Print deduplicated path records, one per line."""
    payload = {"scene": _scene_spec(scene), **_config_payload(config_path, options)}
    if strategy:
        payload["strategy"] = strategy
    _emit(ctx, "/dump-paths", payload, output)


@main.command()
@click.option("--kind", required=True,
              type=click.Choice(["random_boxes", "two_clusters", "corridor", "skewed_city"]))
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--budget", type=int, default=500, show_default=True,
              help="minimum facet count")
@click.option("-o", "--output", default=None, help="write the mesh to a file")
@click.pass_context
def synth(ctx, kind, seed, budget, output):
    """Generate a synthetic scene and print/save its mesh text."""
    payload = {"synth": {"kind": kind, "seed": seed, "facet_budget": budget}}
    try:
        resp = _post(ctx.obj, "/synth", payload)
    except httpx.HTTPError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if resp.status_code != 200:
        click.echo(f"error: {resp.json().get('detail', resp.text)}", err=True)
        sys.exit(1)
    body = resp.json()
    if output:
        Path(output).write_text(body["mesh_text"])
        click.echo(f"{body['name']}: {body['facet_count']} facets -> {output}")
    else:
        click.echo(body["mesh_text"], nl=False)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the service with uvicorn."""
    import uvicorn

    uvicorn.run("raybvh.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
