import click

from rssloc.bench import MAX_STEP_CM, ReplayConfig, fixed_path, random_walk, replay_path, track_frame, write_table
from rssloc.commands import build_metric, metric_options, read_observations, reports_errors, workers_of
from rssloc.errors import InputError
from rssloc.estimator import SCHEMES
from rssloc.store import load_database


@click.command()
@click.option("--db", "db_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--schema", "schema_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--protocol", default=2, show_default=True, type=click.IntRange(1, 2))
@click.option("--window-s", default=1.0, show_default=True, type=float)
@metric_options()
@click.option("--k", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--weights", default="uniform", show_default=True, type=click.Choice(SCHEMES))
@click.option("--selection", "selection_mode", default="on", show_default=True, type=click.Choice(["on", "off"]))
@click.option("--mode", default="fixed", show_default=True, type=click.Choice(["fixed", "walk"]))
@click.option("--path", "path_labels", help="Comma-separated grid labels; defaults to database order.")
@click.option("--start", help="Start grid label of the random walk.")
@click.option("--steps", default=50, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--max-step", default=MAX_STEP_CM, show_default=True, type=click.FloatRange(min=0), help="Longest walk step (cm).")
@click.option("--workers", type=click.IntRange(min=1))
@click.option("--out", required=True, type=click.Path(dir_okay=False, writable=True), help="Track CSV.")
@reports_errors
def replay(db_path, test_path, schema_path, protocol, window_s, metric, sigma, gamma_k, minkowski_p, base, impute_floor,
           k, weights, selection_mode, mode, path_labels, start, steps, seed, max_step, workers, out):
    """Replay a fixed path or a corridor random walk and export the track."""
    db = load_database(db_path)
    _, observations = read_observations(test_path, schema_path, protocol, window_s, db, workers_of(workers))
    if mode == "fixed":
        order = [label.strip() for label in path_labels.split(",")] if path_labels else list(db.labels)
        path = fixed_path(observations, order)
    else:
        if not start:
            raise InputError("--mode walk needs --start")
        path = random_walk(db, observations, start, steps, seed=seed, max_step_cm=max_step)

    kind = build_metric(metric, sigma if sigma is not None else db.sigma, gamma_k, minkowski_p, base)
    config = ReplayConfig(k=k, scheme=weights, selection_on=selection_mode == "on", impute_floor=impute_floor)
    track = track_frame(db, path, replay_path(db, path, kind, config))
    write_table(track, out)
    click.echo(f"{len(track)} steps, mean error {track['error_cm'].mean():.2f} cm")
