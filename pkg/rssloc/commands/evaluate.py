import logging
from pathlib import Path

import click
import pandas as pd

from rssloc.bench import error_cdf, run_k_sweep, run_metric_comparison, write_errors_jsonl, write_summary, write_table
from rssloc.commands import build_metric, metric_options, read_log, read_observations, reports_errors, workers_of
from rssloc.errors import InputError
from rssloc.estimator import SCHEMES, TRAIN_MODES, training_samples, tune_sigma
from rssloc.similarity import Metric, parse_metric
from rssloc.store import load_database

logger = logging.getLogger(__name__)

DEFAULT_SIGMA = 8.0


def _resolve_sigma(sigma, name, db, train_mode, survey, schema_path, k, weights, selection, impute_floor):
    """Return (sigma, search rows); rows are empty unless sigma is 'auto'."""
    if sigma != "auto":
        return (sigma if sigma is not None else db.sigma or DEFAULT_SIGMA), []
    if name != "all" and parse_metric(name).metric is not Metric.GAUSSIAN:
        raise InputError("--sigma auto only applies to the kernel metric")
    log = read_log(survey, schema_path) if survey else None
    samples = training_samples(train_mode, db=db, log=log)
    return tune_sigma(db, samples, parse_metric("kernel"), k=k, scheme=weights, selection=selection, impute_floor=impute_floor,
                      leave_one_out=train_mode == "fingerprints")


@click.command()
@click.option("--db", "db_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Online scan log (CSV).")
@click.option("--schema", "schema_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--protocol", default=2, show_default=True, type=click.IntRange(1, 2))
@click.option("--window-s", default=1.0, show_default=True, type=float, help="Protocol-2 window length (s).")
@metric_options(allow_all=True, allow_auto=True)
@click.option("--k", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--k-max", type=click.IntRange(min=1), help="Sweep k from 1 to this value.")
@click.option("--weights", default="uniform", show_default=True, type=click.Choice(SCHEMES))
@click.option("--selection", "selection_mode", default="on", show_default=True, type=click.Choice(["on", "off", "both"]))
@click.option("--train-mode", default="fingerprints", show_default=True, type=click.Choice(TRAIN_MODES))
@click.option("--survey", type=click.Path(exists=True, dir_okay=False), help="Survey log for --train-mode raw.")
@click.option("--workers", type=click.IntRange(min=1))
@click.option("--report", required=True, type=click.Path(file_okay=False), help="Report directory.")
@reports_errors
def evaluate(db_path, test_path, schema_path, protocol, window_s, metric, sigma, gamma_k, minkowski_p, base, impute_floor,
             k, k_max, weights, selection_mode, train_mode, survey, workers, report):
    """Localize a test log against a database and write error reports."""
    if k_max is not None and k > k_max:
        raise InputError(f"--k {k} lies outside the sweep 1..{k_max}")
    db = load_database(db_path)
    if selection_mode != "off" and db.selection is None:
        raise InputError("database carries no selection sets; run select first")
    _, observations = read_observations(test_path, schema_path, protocol, window_s, db, workers_of(workers))
    primary = selection_mode != "off"
    tuning_selection = db.selection if primary else None

    sigma, sigma_rows = _resolve_sigma(
        sigma, metric, db, train_mode, survey, schema_path, k, weights, tuning_selection, impute_floor
    )
    out = Path(report)
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "protocol": protocol,
        "metric": metric,
        "sigma": sigma,
        "k": k,
        "weights": weights,
        "selection": selection_mode,
        "impute_floor": impute_floor,
        "n_observations": len(observations),
    }
    if sigma_rows:
        summary["sigma_search"] = sigma_rows

    tags = {"on": [True], "off": [False], "both": [True, False]}[selection_mode]
    if metric == "all":
        kinds = [build_metric(m.value, sigma, gamma_k, minkowski_p, base) for m in Metric]
        tables = []
        for selection_on in tags:
            selection = db.selection if selection_on else None
            table = run_metric_comparison(db, observations, kinds, protocol, k, weights, selection, impute_floor)
            table.insert(2, "selection", "on" if selection_on else "off")
            tables.append(table)
        table = pd.concat(tables, ignore_index=True)
        write_table(table, out / "metric_comparison.csv")
        summary["metrics"] = table.to_dict(orient="records")
        write_summary(summary, out / "summary.json")
        click.echo(table.to_string(index=False))
        return

    kind = build_metric(metric, sigma, gamma_k, minkowski_p, base)
    ks = range(1, k_max + 1) if k_max else [k]
    tables, samples = [], []
    for selection_on in tags:
        table, rows = run_k_sweep(db, observations, kind, ks, weights, selection_on, impute_floor)
        tables.append(table)
        samples.append(rows)
    table = pd.concat(tables, ignore_index=True)
    samples = pd.concat(samples, ignore_index=True)
    write_table(table, out / "k_sweep.csv")
    write_errors_jsonl(samples, out / "errors.jsonl")

    chosen = samples[(samples["k"] == k) & (samples["selection"] == ("on" if primary else "off"))]
    write_table(error_cdf(chosen["error_cm"]), out / "cdf.csv")
    summary["n_scored"] = int(len(chosen))
    summary["mean_error_cm"] = float(chosen["error_cm"].mean()) if len(chosen) else None
    summary["median_error_cm"] = float(chosen["error_cm"].median()) if len(chosen) else None
    write_summary(summary, out / "summary.json")
    click.echo(f"{kind.name}, k={k}, selection {'on' if primary else 'off'}: mean error {summary['mean_error_cm']} cm")
