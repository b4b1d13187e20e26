"""Command-line front end.

A thin client of the HTTP API: every subcommand builds a request, sends it
to the service (in-process by default, or a remote server via ``--url``),
and writes the response artifacts to disk. Trace references in configs are
ingested client-side before the request is sent, so the service stays
purely computational.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click
import httpx

from . import __version__
from .config import ExperimentConfig, load_config
from .errors import OdlcError
from .jsonio import format_float, write_json

OUTPUT_DIR_ENV = "ODLC_OUTPUT_DIR"

EXIT_CODES = {"config": 2, "data": 3, "solver": 4, "internal": 5}


def _fail(category: str, message: str) -> None:
    click.echo(f"error [{category}]: {message}", err=True)
    sys.exit(EXIT_CODES.get(category, EXIT_CODES["internal"]))


class ServiceClient:
    """HTTP client for the service; in-process unless a URL is given."""

    def __init__(self, url: str | None):
        self._url = url
        self._app = None
        if url is None:
            from .service import create_app
            self._app = create_app()

    def _request(self, path: str, payload: dict) -> httpx.Response:
        if self._url:
            with httpx.Client(base_url=self._url, timeout=600.0) as client:
                return client.post(path, json=payload)

        async def in_process() -> httpx.Response:
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(transport=transport,
                                         base_url="http://odlc.local",
                                         timeout=600.0) as client:
                return await client.post(path, json=payload)

        import asyncio
        return asyncio.run(in_process())

    def post(self, path: str, payload: dict) -> dict:
        try:
            response = self._request(path, payload)
        except httpx.HTTPError as err:
            _fail("internal", f"service unreachable: {err}")
        if response.status_code == 422:
            _fail("config", response.text)
        if response.status_code >= 400:
            try:
                body = response.json()
                _fail(body.get("category", "internal"),
                      body.get("message", response.text))
            except ValueError:
                _fail("internal", response.text)
        return response.json()


def _load_and_resolve(config_path: str,
                      penetration: float | None = None) -> ExperimentConfig:
    try:
        config = load_config(config_path)
        if penetration is not None:
            if config.baseload.trace is None:
                _fail("config", "--penetration requires a trace baseload")
            payload = config.model_dump()
            payload["penetration"] = penetration
            config = ExperimentConfig.model_validate(payload)
        return config.resolve(base_dir=Path(config_path).parent)
    except OdlcError as err:
        _fail(err.category, str(err))


def _output_dir(flag_value: str | None, config: ExperimentConfig) -> Path:
    if flag_value:
        out = Path(flag_value)
    elif os.environ.get(OUTPUT_DIR_ENV):
        out = Path(os.environ[OUTPUT_DIR_ENV])
    elif config.output_dir:
        out = Path(config.output_dir)
    else:
        out = Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_report(out_dir: Path, report: dict) -> Path:
    path = out_dir / "report.json"
    write_json(path, report)
    return path


def _write_cdf(out_dir: Path, rows, config_digest: str, seed: int) -> Path:
    path = out_dir / "cdf.csv"
    lines = [f"# config_digest={config_digest} base_seed={seed}", "v,prob"]
    lines += [f"{format_float(v)},{format_float(p)}" for v, p in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


penetration_option = click.option("--penetration", default=None, type=float,
                                  help="Override the config's renewable "
                                       "penetration (trace baseloads only).")
url_option = click.option("--url", default=None,
                          help="Remote service URL (default: in-process).")
config_option = click.option("--config", "config_path", required=True,
                             type=click.Path(exists=True, dir_okay=False),
                             help="Experiment config JSON.")
output_option = click.option("--output-dir", default=None,
                             help=f"Artifact directory (overridden by "
                                  f"${OUTPUT_DIR_ENV}; defaults to the "
                                  f"config's output_dir or '.').")


@click.group()
@click.version_option(version=__version__, prog_name="odlc")
def main() -> None:
    """Deferrable load control: simulate, bound, and validate."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(), host=host, port=port)


@main.command()
@config_option
@penetration_option
@url_option
@output_option
def bounds(config_path: str, penetration: float | None, url: str | None,
           output_dir: str | None) -> None:
    """Closed-form bounds only; writes report.json."""
    config = _load_and_resolve(config_path, penetration)
    client = ServiceClient(url)
    body = client.post("/bounds", {"config": config.model_dump()})
    path = _write_report(_output_dir(output_dir, config), body["report"])
    click.echo(f"wrote {path}")


@main.command()
@config_option
@click.option("--seed", default=None, type=int, help="Override config seed.")
@click.option("--engine", default=None, type=click.Choice(["valley", "qp"]),
              help="Override config engine.")
@click.option("--trajectories", is_flag=True,
              help="Include per-slot trajectories in the report.")
@penetration_option
@url_option
@output_option
def simulate(config_path: str, seed: int | None, engine: str | None,
             trajectories: bool, penetration: float | None, url: str | None,
             output_dir: str | None) -> None:
    """Single seeded run; writes report.json."""
    config = _load_and_resolve(config_path, penetration)
    client = ServiceClient(url)
    body = client.post("/simulate", {
        "config": config.model_dump(), "seed": seed, "engine": engine,
        "include_trajectory": trajectories,
    })
    path = _write_report(_output_dir(output_dir, config), body["report"])
    click.echo(f"wrote {path}")


@main.command()
@config_option
@click.option("--runs", default=None, type=int, help="Override config runs.")
@click.option("--seed", default=None, type=int, help="Override config seed.")
@click.option("--engine", default=None, type=click.Choice(["valley", "qp"]),
              help="Override config engine.")
@penetration_option
@url_option
@output_option
def mc(config_path: str, runs: int | None, seed: int | None,
       engine: str | None, penetration: float | None, url: str | None,
       output_dir: str | None) -> None:
    """Seeded ensemble; writes report.json and cdf.csv."""
    config = _load_and_resolve(config_path, penetration)
    client = ServiceClient(url)
    body = client.post("/mc", {
        "config": config.model_dump(), "runs": runs, "seed": seed,
        "engine": engine,
    })
    out = _output_dir(output_dir, config)
    report = body["report"]
    report_path = _write_report(out, report)
    cdf_path = _write_cdf(out, body["cdf"], report["config_digest"],
                          report["ensemble"]["base_seed"])
    click.echo(f"wrote {report_path}")
    click.echo(f"wrote {cdf_path}")


@main.command("worst-case")
@config_option
@click.option("--trajectories", is_flag=True,
              help="Include the adversarial trajectory in the report.")
@penetration_option
@url_option
@output_option
def worst_case(config_path: str, trajectories: bool,
               penetration: float | None, url: str | None,
               output_dir: str | None) -> None:
    """Adversarial run vs the closed-form worst case; writes report.json."""
    config = _load_and_resolve(config_path, penetration)
    client = ServiceClient(url)
    body = client.post("/worst-case", {
        "config": config.model_dump(), "include_trajectory": trajectories,
    })
    report = body["report"]
    path = _write_report(_output_dir(output_dir, config), report)
    block = report["worst_case"]
    click.echo(f"wrote {path}")
    click.echo(f"closed form {block['closed_form']:.6g}, adversarial "
               f"(decomposed) {block['adversarial_decomposed_v']:.6g}, "
               f"match={block['matches_closed_form']}")


@main.command()
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Take trace path, slots, and penetration from a config.")
@click.option("--trace", "trace_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Trace CSV (slot,baseload_kw,renewable_kw).")
@click.option("--slots", default=None, type=int, help="Control slots.")
@click.option("--penetration", default=None, type=float,
              help="Target renewable penetration in [0, 1].")
@click.option("--write-profile", "profile_path", default=None,
              type=click.Path(dir_okay=False),
              help="Write the resampled net profile as CSV.")
@url_option
def ingest(config_path: str | None, trace_path: str | None,
           slots: int | None, penetration: float | None, url: str | None,
           profile_path: str | None) -> None:
    """Validate and resample a trace; prints a preview."""
    if config_path is not None:
        try:
            config = load_config(config_path)
        except OdlcError as err:
            _fail(err.category, str(err))
        if config.baseload.trace is None:
            _fail("config", "config does not reference a trace")
        trace_file = Path(config_path).parent / config.baseload.trace
        slots = config.horizon.slots
        penetration = config.penetration
    elif trace_path is not None and slots is not None:
        trace_file = Path(trace_path)
    else:
        _fail("config", "provide --config, or --trace together with --slots")
    try:
        text = trace_file.read_text(encoding="utf-8")
    except OSError as err:
        _fail("data", f"cannot read trace {trace_file}: {err}")
    client = ServiceClient(url)
    body = client.post("/ingest", {"trace_csv": text, "slots": slots,
                                   "penetration": penetration})
    click.echo(f"rows={body['rows']} block={body['block']} "
               f"mean_baseload={body['mean_baseload']:.6g} "
               f"mean_renewable={body['mean_renewable']:.6g}")
    profile = body["profile"]
    head = ", ".join(f"{v:.6g}" for v in profile[:6])
    suffix = ", ..." if len(profile) > 6 else ""
    click.echo(f"profile[{len(profile)}] = [{head}{suffix}]")
    if profile_path:
        lines = ["slot,net_kw"] + [f"{i + 1},{format_float(v)}"
                                   for i, v in enumerate(profile)]
        Path(profile_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        click.echo(f"wrote {profile_path}")


if __name__ == "__main__":
    main()
