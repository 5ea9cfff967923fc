import click

from rssloc.commands import reports_errors
from rssloc.selection import SelectionConfig, gamma, select_database
from rssloc.store import load_database, save_database


@click.command()
@click.option("--db", "db_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--s", "s", required=True, type=click.IntRange(min=1), help="Beacons kept per grid point.")
@click.option("--eta", default=0.2, show_default=True, type=click.FloatRange(0, 1, max_open=True), help="Tolerated signal-loss fraction.")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), help="Write here instead of updating --db in place.")
@reports_errors
def select(db_path, s, eta, out):
    """Attach per-grid-point beacon selection sets to a database."""
    db = load_database(db_path)
    config = SelectionConfig(s=s, eta=eta, timing=db.timing)
    selected = select_database(db, config)
    save_database(selected, out or db_path)
    click.echo(f"selected {s} beacons at {len(selected)} grid points (gamma={gamma(config):g})")
