"""Command-line entry points: repl, serve, bench."""

from __future__ import annotations

import sys
from pathlib import Path

import click

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import bench as bench_mod
from . import orchestrator
from .geodesy import GeoPoint
from .llm import EndpointConfig


def load_config(path) -> orchestrator.AppConfig:
    """Build an AppConfig from a TOML file; missing keys keep defaults."""
    data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    endpoint = EndpointConfig(
        url=data.get("endpoint_url", EndpointConfig.url),
        model=data.get("model", EndpointConfig.model),
        timeout_s=float(data.get("timeout_s", EndpointConfig.timeout_s)),
        max_attempts=int(data.get("max_attempts", EndpointConfig.max_attempts)),
    )
    home = data.get("home", {})
    config = orchestrator.AppConfig(
        endpoint=endpoint,
        max_attempts=endpoint.max_attempts,
        sim_speed_factor=float(data.get("sim_speed_factor", 0.0)),
        offline_geocoding=bool(data.get("offline_geocoding", True)),
    )
    if home:
        config.home = GeoPoint(float(home["lat"]), float(home["lon"]), 0.0)
    return config


def _config_from(config_path) -> orchestrator.AppConfig:
    if config_path:
        return load_config(config_path)
    return orchestrator.AppConfig(sim_speed_factor=1.0)


@click.group()
def main():
    """Natural-language UAV mission control."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="TOML config file.")
@click.option("--fixture", "fixture_path", type=click.Path(exists=True), default=None,
              help="Replay a recorded transcript instead of calling the model.")
def repl(config_path, fixture_path):
    """Interactive mission console."""
    config = _config_from(config_path)
    backend = None
    if fixture_path:
        from .llm import ReplayBackend
        backend = ReplayBackend(fixture_path)
        config.sim_speed_factor = 0.0
    orchestrator.repl(config, backend=backend)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(config_path, host, port):
    """Run the HTTP/SSE service for the operator console."""
    from .service import serve as run_service
    run_service(_config_from(config_path), host=host, port=port)


@main.group()
def bench():
    """Benchmark runner and reports."""


@bench.command("run")
@click.option("--scenario", "scenario_ids", multiple=True, required=True,
              type=click.Choice(sorted(bench_mod.SCENARIOS)),
              help="Scenario id; repeat for several.")
@click.option("--model", default="replay", show_default=True)
@click.option("--reps", default=10, show_default=True, type=int)
@click.option("--fixtures", "fixtures_dir", type=click.Path(exists=True), required=True,
              help="Directory of replay transcripts (scenarioN.json, supply.json).")
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Report path; .csv or .json decides the format.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def bench_run(scenario_ids, model, reps, fixtures_dir, out_path, config_path):
    """Run scenarios against recorded fixtures and write a report."""
    config = load_config(config_path) if config_path else orchestrator.AppConfig()
    config.sim_speed_factor = 0.0
    records = []
    for scenario_id in scenario_ids:
        records.extend(bench_mod.run_scenario(
            scenario_id, repetitions=reps, fixtures_dir=fixtures_dir,
            model_id=model, config=config))
        labels = [r.label for r in records if r.scenario == scenario_id]
        click.echo(f"scenario {scenario_id}: {bench_mod.classification_counts(labels)} "
                   f"(S / P / U over {len(labels)} runs)")
    fmt = "json" if str(out_path).endswith(".json") else "csv"
    bench_mod.write_report(records, out_path, fmt)
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    sys.exit(main())
