import click

from rssloc.commands import read_log, reports_errors, workers_of
from rssloc.model import Timing
from rssloc.preprocess import build_database
from rssloc.store import save_database


@click.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Survey scan log (CSV).")
@click.option("--schema", "schema_path", type=click.Path(exists=True, dir_okay=False), help="Column schema (JSON).")
@click.option("--window", default=10, show_default=True, type=click.IntRange(min=1), help="Moving-average window (samples).")
@click.option("--ta", default=0.1, show_default=True, type=float, help="Advertising interval (s).")
@click.option("--td", default=30.0, show_default=True, type=float, help="Survey scanning duration (s).")
@click.option("--unique-check/--no-unique-check", default=True, show_default=True)
@click.option("--workers", type=click.IntRange(min=1))
@click.option("--out", required=True, type=click.Path(dir_okay=False, writable=True))
@reports_errors
def build_db(input_path, schema_path, window, ta, td, unique_check, workers, out):
    """Build the fingerprint database from a survey log."""
    log = read_log(input_path, schema_path)
    db = build_database(
        log, window=window, timing=Timing(t_a=ta, t_d=td), workers=workers_of(workers), check_unique=unique_check
    )
    save_database(db, out)
    click.echo(f"{len(db)} fingerprints, {db.n_beacons} beacons")
