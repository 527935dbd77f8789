"""Command-line entry point.

Subcommands mirror the engine's surfaces: ``simulate`` and ``analyze`` are
pipe-composable (simulate emits the JSONL scan-log format analyze reads),
``recommend`` sizes a beacon installation, ``sus``/``tasks`` score
evaluation data, ``validate-catalog`` checks content files, and ``serve``
runs the HTTP service. Machine-readable output goes to stdout, diagnostics
to stderr; exit status is 0 on success, 1 on a domain error, 2 on usage
errors.
"""

from __future__ import annotations

import functools
import json
import math
import os
import sys
from pathlib import Path

import click

from .beacon import BeaconId, BeaconKind
from .catalog import load_catalog_file
from .errors import EmptyWindow, MargeError
from .evaluation import (
    format_sus_table,
    format_task_table,
    read_sus_csv,
    read_task_csv,
    sus_report,
    task_report,
)
from .proximity import broadcast_stats, read_scan_log, write_scan_log
from .simulator import (
    BeaconSpec,
    DEFAULT_PROXIMITY_RATE_PER_MIN,
    DEFAULT_STICKER_RATE_PER_MIN,
    TripConfig,
    detection_probability,
    recommend_installation,
    simulate_trip,
    trip_config_from_dict,
)

DEFAULT_UUID = "b9407f30f5f8466eaff925556b57fe6d"


def domain_errors_to_exit_1(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except MargeError as exc:
            click.echo(f"error [{exc.code}]: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
@click.version_option(package_name="marge")
def main():
    """Gamified public-transport engine tools."""


def _default_beacons(proximity: int, proximity_rate: float, stickers: int, sticker_rate: float):
    beacons = []
    for i in range(proximity):
        beacons.append(
            BeaconSpec(
                BeaconId.from_hex(DEFAULT_UUID, 100, i + 1),
                BeaconKind.PROXIMITY,
                base_rate_per_min=proximity_rate,
            )
        )
    for i in range(stickers):
        beacons.append(
            BeaconSpec(
                BeaconId.from_hex(DEFAULT_UUID, 200, i + 1),
                BeaconKind.STICKER,
                base_rate_per_min=sticker_rate,
            )
        )
    return beacons


@main.command()
@click.option("--duration-min", type=float, default=24.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--proximity-beacons", type=int, default=1, show_default=True)
@click.option("--proximity-rate", type=float, default=DEFAULT_PROXIMITY_RATE_PER_MIN, show_default=True)
@click.option("--stickers", type=int, default=0, show_default=True)
@click.option("--sticker-rate", type=float, default=DEFAULT_STICKER_RATE_PER_MIN, show_default=True)
@click.option("--occupancy", type=float, default=1.0, show_default=True)
@click.option("--force-duration", is_flag=True, help="allow durations outside the 20-40 min window")
@click.option("--config", "config_path", type=click.Path(exists=True), help="trip config JSON (overrides beacon flags)")
@click.option("--out", type=click.Path(allow_dash=True), default="-", show_default=True)
@domain_errors_to_exit_1
def simulate(duration_min, seed, proximity_beacons, proximity_rate, stickers, sticker_rate,
             occupancy, force_duration, config_path, out):
    """Generate a seeded in-bus broadcast scan log (JSONL)."""
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            config = trip_config_from_dict(json.load(fh))
    else:
        config = TripConfig(
            duration_min=duration_min,
            beacons=tuple(_default_beacons(proximity_beacons, proximity_rate, stickers, sticker_rate)),
            seed=seed,
            occupancy_factor=occupancy,
            allow_any_duration=force_duration,
        )
    events = simulate_trip(config)
    if out == "-":
        write_scan_log(events, sys.stdout)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            n = write_scan_log(events, fh)
        click.echo(f"wrote {n} events to {out}", err=True)


@main.command()
@click.argument("logfile", type=click.Path(allow_dash=True))
@click.option("--duration-min", type=float, default=None,
              help="window length; defaults to the last event time rounded up to a whole minute")
@domain_errors_to_exit_1
def analyze(logfile, duration_min):
    """Per-beacon broadcast counts and rates for a scan log."""
    source = sys.stdin if logfile == "-" else open(logfile, encoding="utf-8")
    try:
        events = read_scan_log(source)
    finally:
        if source is not sys.stdin:
            source.close()
    if duration_min is None:
        if not events:
            raise EmptyWindow("empty log and no --duration-min given")
        duration_min = max(1.0, math.ceil(events[-1].t_ms / 60_000.0))
    report = broadcast_stats(events, (0, int(duration_min * 60_000)))
    click.echo(
        json.dumps(
            {
                "duration_min": duration_min,
                "total_events": report.total_events,
                "beacons": [
                    {
                        "uuid": row.beacon.uuid_hex,
                        "major": row.beacon.major,
                        "minor": row.beacon.minor,
                        "broadcast_count": row.broadcast_count,
                        "rate_per_min": round(row.rate_per_min, 4),
                    }
                    for row in report.beacons
                ],
            },
            indent=2,
        )
    )


@main.command()
@click.option("--target-prob", type=float, default=0.99, show_default=True)
@click.option("--window-s", type=float, default=300.0, show_default=True)
@click.option("--proximity-beacons", type=int, default=0, show_default=True)
@click.option("--proximity-rate", type=float, default=DEFAULT_PROXIMITY_RATE_PER_MIN, show_default=True)
@click.option("--stickers", type=int, default=0, show_default=True)
@click.option("--sticker-rate", type=float, default=DEFAULT_STICKER_RATE_PER_MIN, show_default=True)
@click.option("--monte-carlo-trials", type=int, default=0,
              help="also estimate each beacon's probability by simulation")
@click.option("--seed", type=int, default=0, show_default=True)
@domain_errors_to_exit_1
def recommend(target_prob, window_s, proximity_beacons, proximity_rate, stickers, sticker_rate,
              monte_carlo_trials, seed):
    """Judge whether a beacon installation detects riders reliably enough."""
    beacons = _default_beacons(proximity_beacons, proximity_rate, stickers, sticker_rate)
    report = recommend_installation(beacons, target_prob, window_s)
    doc = report.to_dict()
    if monte_carlo_trials:
        for row in doc["per_beacon"]:
            row["monte_carlo_probability"] = detection_probability(
                row["rate_per_min"], window_s, monte_carlo_trials, seed
            )
    doc["verdict"] = "sufficient" if report.sufficient else "insufficient"
    click.echo(json.dumps(doc, indent=2))


@main.command()
@click.argument("csvfile", type=click.Path(exists=True, allow_dash=False))
@click.option("--table", is_flag=True, help="print a human-readable table instead of JSON")
@domain_errors_to_exit_1
def sus(csvfile, table):
    """Score usability questionnaire responses (one respondent per CSV row)."""
    with open(csvfile, encoding="utf-8") as fh:
        responses = read_sus_csv(fh)
    report = sus_report(responses)
    click.echo(format_sus_table(report) if table else json.dumps(report, indent=2))


@main.command()
@click.argument("csvfile", type=click.Path(exists=True))
@click.option("--table", is_flag=True, help="print a human-readable table instead of JSON")
@domain_errors_to_exit_1
def tasks(csvfile, table):
    """Time/error statistics for task sessions (task_id,duration_s,errors rows)."""
    with open(csvfile, encoding="utf-8") as fh:
        grouped = read_task_csv(fh)
    report = task_report(grouped)
    click.echo(format_task_table(report) if table else json.dumps(report, indent=2))


@main.command(name="validate-catalog")
@click.argument("catalog_file", type=click.Path(exists=True))
@domain_errors_to_exit_1
def validate_catalog(catalog_file):
    """Validate a catalog JSON document; lists every offending field path."""
    catalog = load_catalog_file(catalog_file)
    click.echo(
        json.dumps(
            {
                "ok": True,
                "languages": list(catalog.languages),
                "adventures": len(catalog.adventures),
                "badges": len(catalog.badges),
                "easter_eggs": len(catalog.easter_eggs),
            },
            indent=2,
        )
    )


@main.command()
@click.option("--port", type=int, default=8080, show_default=True, help="overridden by MARGE_PORT")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None,
              help="catalog JSON; defaults to the packaged example")
@click.option("--data-dir", type=click.Path(), default="marge-data", show_default=True,
              help="overridden by MARGE_DATA_DIR")
@click.option("--ui-dir", type=click.Path(), default=None, help="static web client to mount at /ui")
@click.option("--check", is_flag=True, help="validate configuration and exit without binding")
@domain_errors_to_exit_1
def serve(port, host, catalog_path, data_dir, ui_dir, check):
    """Run the HTTP service."""
    from .api import create_app
    from .catalog import load_example_catalog
    from .store import DocumentStore

    port = int(os.environ.get("MARGE_PORT", port))
    data_dir = os.environ.get("MARGE_DATA_DIR", data_dir)
    catalog = load_catalog_file(catalog_path) if catalog_path else load_example_catalog()
    if check:
        click.echo(
            json.dumps(
                {
                    "ok": True,
                    "host": host,
                    "port": port,
                    "data_dir": str(Path(data_dir)),
                    "adventures": len(catalog.adventures),
                    "ui": bool(ui_dir),
                }
            )
        )
        return
    import uvicorn

    app = create_app(catalog, DocumentStore(data_dir), ui_dir=ui_dir)
    click.echo(f"serving on http://{host}:{port} (data: {data_dir})", err=True)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
