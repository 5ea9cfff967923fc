import dataclasses
from pathlib import Path

import click

from rssloc.commands import reports_errors
from rssloc.ingest import log_schema, save_schema, write_log_csv
from rssloc.synth import Jitter, default_scenario, load_scenario, save_scenario, synth_log


@click.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True, dir_okay=False), help="Scenario JSON; defaults to a 3x3 test grid.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--td", type=float, help="Override the scanning duration per grid point (s).")
@click.option("--shadowing", type=click.FloatRange(min=0), help="Override the shadowing std (dB).")
@click.option("--drop-rate", type=click.FloatRange(0, 1, max_open=True), help="Override the advertisement drop rate.")
@click.option("--hand-jitter", is_flag=True, help="Apply the hand-held jitter profile.")
@click.option("--session", default="", help="Session tag written on every record.")
@click.option("--out", required=True, type=click.Path(dir_okay=False, writable=True), help="Scan log (CSV).")
@click.option("--schema-out", type=click.Path(dir_okay=False, writable=True), help="Schema JSON for the log.")
@click.option("--save-scenario", "scenario_out", type=click.Path(dir_okay=False, writable=True))
@reports_errors
def synth(scenario_path, seed, td, shadowing, drop_rate, hand_jitter, session, out, schema_out, scenario_out):
    """Generate a synthetic scan log from a path-loss scenario."""
    scenario = load_scenario(scenario_path) if scenario_path else default_scenario()
    overrides = {"t_d": td, "shadowing_db": shadowing, "drop_rate": drop_rate}
    overrides = {name: value for name, value in overrides.items() if value is not None}
    if hand_jitter:
        overrides["jitter"] = Jitter.hand_held()
    scenario = dataclasses.replace(scenario, **overrides)

    log = synth_log(scenario, seed=seed, session=session)
    write_log_csv(log, out)
    save_schema(log_schema(device="synthetic"), schema_out or Path(out).with_suffix(".schema.json"))
    if scenario_out:
        save_scenario(scenario, scenario_out)
    click.echo(f"{len(log)} records at {len(scenario.grid_points)} grid points")
