"""Shared plumbing for the click commands."""
import functools
import logging

import click

from rssloc.errors import InputError, RsslocError
from rssloc.ingest import consolidate, load_schema, log_schema, parse_csv
from rssloc.similarity import ALIASES, Metric, parse_metric

logger = logging.getLogger(__name__)

METRIC_NAMES = [m.value for m in Metric] + sorted(ALIASES)


def reports_errors(command):
    """Turn library errors into a message on stderr and the error's exit code."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except RsslocError as exc:
            click.echo(f"error: {exc}", err=True)
            click.get_current_context().exit(exc.exit_code)

    return wrapper


def workers_of(workers):
    if workers is not None:
        return workers
    return click.get_current_context().find_root().obj.workers


def sigma_value(ctx, param, value):
    if value is None:
        return None
    if str(value).lower() == "auto":
        return "auto"
    try:
        sigma = float(value)
    except ValueError:
        raise click.BadParameter("expected a positive number or 'auto'") from None
    if not sigma > 0:
        raise click.BadParameter("sigma must be positive")
    return sigma


def metric_options(allow_all=False, allow_auto=False):
    names = METRIC_NAMES + (["all"] if allow_all else [])

    def decorate(command):
        options = [
            click.option("--metric", default="kernel", show_default=True, type=click.Choice(names, case_sensitive=False)),
            click.option("--sigma", callback=sigma_value, help="Gaussian kernel width" + (" or 'auto'." if allow_auto else ".")),
            click.option("--gamma-k", type=float, help="Rate of the exponential kernel."),
            click.option("--p", "minkowski_p", type=float, help="Minkowski order."),
            click.option("--base", type=click.Choice(["euclidean", "cityblock", "chebyshev", "minkowski"]), help="Base distance of the distance kernels."),
            click.option("--impute-floor", type=float, help="Align on the union of beacons, filling gaps with this RSS."),
        ]
        for option in reversed(options):
            command = option(command)
        return command

    return decorate


def build_metric(name, sigma=None, gamma_k=None, minkowski_p=None, base=None):
    if sigma == "auto":
        raise InputError("sigma 'auto' must be resolved before building the metric")
    return parse_metric(name, sigma=sigma, gamma_k=gamma_k, p=minkowski_p, base=base)


def read_log(path, schema_path=None):
    schema = load_schema(schema_path) if schema_path else log_schema()
    return parse_csv(path, schema)


def read_observations(path, schema_path, protocol, window_s, db, workers):
    log = read_log(path, schema_path)
    observations = consolidate(log, protocol, universe=db.beacons, window_s=window_s, workers=workers)
    unknown = sorted({o.grid_label for o in observations if o.grid_label not in set(db.labels)})
    if unknown:
        raise InputError(f"test grid point(s) missing from the database: {', '.join(unknown[:5])}")
    return log, observations
