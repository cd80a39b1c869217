"""File outputs for simulation runs.

Three files per run: an ordered event log (one JSON object per line), a
per-interval per-volume time series (CSV), and a run summary (JSON).
Event log and time series are deterministic byte for byte for a given
scenario and seed; the summary carries wall-clock measurements and is
not.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable

from .model import LayoutKind, format_layout
from .scenario import Scenario
from .sim import SimEvent, SimResult, TimeSeriesPoint, run_scenario

EVENTS_FILE = "events.jsonl"
TIMESERIES_FILE = "timeseries.csv"
SUMMARY_FILE = "summary.json"

TIMESERIES_HEADER = ("time_s", "volume_id", "demand_iops", "achieved_iops", "cap_iops")


def write_events_jsonl(events: Iterable[SimEvent], path: str | Path) -> None:
    with open(path, "w") as fh:
        for event in events:
            record = {
                "time_s": event.time_s,
                "seq": event.seq,
                "kind": event.kind,
                "payload": event.payload,
            }
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def write_timeseries_csv(points: Iterable[TimeSeriesPoint], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TIMESERIES_HEADER)
        for p in points:
            cap = "" if p.cap_iops is None else str(p.cap_iops)
            writer.writerow(
                (
                    "%.6f" % p.time_s,
                    p.volume_id,
                    "%.6f" % p.demand_iops,
                    "%.6f" % p.achieved_iops,
                    cap,
                )
            )


def write_summary_json(summary: dict, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_to_directory(
    scenario: Scenario,
    out_dir: str | Path,
    seed: int = 0,
    static_layout: LayoutKind | None = None,
) -> SimResult:
    """Run one scenario and write all three output files under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = run_scenario(scenario, seed=seed, static_layout=static_layout)
    write_events_jsonl(result.events, out / EVENTS_FILE)
    write_timeseries_csv(result.timeseries, out / TIMESERIES_FILE)
    write_summary_json(result.summary, out / SUMMARY_FILE)
    return result


def compare_static_to_directory(
    scenario: Scenario, layout: LayoutKind, out_dir: str | Path, seed: int = 0
) -> dict:
    """Run a scenario twice, late-bound and fixed-layout, and compare.

    Writes the usual run outputs under dynamic/ and static/, plus a
    comparison.json holding both sides' storage-overhead multipliers.
    """
    out = Path(out_dir)
    dynamic = run_to_directory(scenario, out / "dynamic", seed=seed)
    static = run_to_directory(scenario, out / "static", seed=seed, static_layout=layout)
    comparison = {
        "scenario": scenario.name,
        "seed": seed,
        "static_layout": format_layout(layout),
        "dynamic": {
            "overhead_by_class": dynamic.summary["overhead_by_class"],
            "overhead_total": dynamic.summary["overhead_total"],
        },
        "static": {
            "overhead_by_class": static.summary["overhead_by_class"],
            "overhead_total": static.summary["overhead_total"],
        },
    }
    write_summary_json(comparison, out / "comparison.json")
    return comparison
