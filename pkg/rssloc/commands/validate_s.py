import json

import click
import pandas as pd

from rssloc.commands import build_metric, metric_options, read_log, reports_errors, workers_of
from rssloc.errors import InputError
from rssloc.estimator import SCHEMES, TRAIN_MODES, training_samples, validate_s as sweep_s
from rssloc.store import load_database

COLUMNS = ["s", "feasible", "cost", "mean_error_cm", "n"]


@click.command()
@click.option("--db", "db_path", required=True, type=click.Path(exists=True, dir_okay=False))
@metric_options()
@click.option("--k", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--weights", default="uniform", show_default=True, type=click.Choice(SCHEMES))
@click.option("--eta", default=0.2, show_default=True, type=click.FloatRange(0, 1, max_open=True))
@click.option("--s-min", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--s-max", type=click.IntRange(min=1), help="Defaults to the number of beacons.")
@click.option("--train-mode", default="fingerprints", show_default=True, type=click.Choice(TRAIN_MODES))
@click.option("--survey", type=click.Path(exists=True, dir_okay=False), help="Survey log for --train-mode raw.")
@click.option("--schema", "schema_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--workers", type=click.IntRange(min=1))
@click.option("--out", required=True, type=click.Path(dir_okay=False, writable=True), help="Sweep table (CSV).")
@click.option("--json", "json_out", type=click.Path(dir_okay=False, writable=True), help="Also write the sweep as JSON.")
@reports_errors
def validate_s(db_path, metric, sigma, gamma_k, minkowski_p, base, impute_floor, k, weights, eta, s_min, s_max,
               train_mode, survey, schema_path, workers, out, json_out):
    """Training cost of every number of selected beacons."""
    db = load_database(db_path)
    s_max = s_max or db.n_beacons
    if s_min > s_max:
        raise InputError(f"empty s range {s_min}..{s_max}")
    kind = build_metric(metric, sigma if sigma is not None else db.sigma, gamma_k, minkowski_p, base)
    log = read_log(survey, schema_path) if survey else None
    samples = training_samples(train_mode, db=db, log=log)

    rows = sweep_s(samples, db, kind, k=k, s_range=range(s_min, s_max + 1), eta=eta, scheme=weights,
                   impute_floor=impute_floor, workers=workers_of(workers), leave_one_out=train_mode == "fingerprints")
    pd.DataFrame(rows, columns=COLUMNS).to_csv(out, index=False, float_format="%.6f")
    if json_out:
        with open(json_out, "w", encoding="utf-8") as handle:
            json.dump(rows, handle, indent=2, sort_keys=True)
            handle.write("\n")

    scored = [row for row in rows if row["cost"] is not None]
    if scored:
        best = min(scored, key=lambda row: (row["cost"], row["s"]))
        click.echo(f"best s={best['s']} (cost {best['cost']:.2f} cm^2, mean error {best['mean_error_cm']:.2f} cm)")
    else:
        click.echo("no feasible s in range")
