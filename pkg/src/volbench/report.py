"""JSON reports, schema validation and CSV exports."""

from __future__ import annotations

import csv
import io
import json
from importlib import resources

import jsonschema

from . import __version__
from .estimates import TAU_D, TAU_S

TIMING_KEYS = ("wall_clock_s",)


def load_schema() -> dict:
    text = resources.files("volbench").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)


def build_report(
    benchmark: str, config: dict, n_max: int, score: int, levels: list[dict], timing: bool = True
) -> dict:
    report = {
        "tool": "volbench",
        "version": __version__,
        "benchmark": benchmark,
        "seed": config["seed"],
        "n_max": n_max,
        "config": config,
        "thresholds": {"tau_s": TAU_S, "tau_d": TAU_D},
        "levels": levels,
        "score": score,
    }
    return report if timing else strip_timing(report)


def strip_timing(obj):
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def validate_report(report: dict) -> None:
    jsonschema.validate(report, load_schema())
    probed = sorted(level["n"] for level in report["levels"])
    passed = {level["n"]: level["pass"] for level in report["levels"]}
    expected = 0
    for n in probed:
        if n != expected + 1 or not passed[n]:
            break
        expected = n
    if report["score"] != expected:
        raise ValueError(
            f"score {report['score']} disagrees with recorded levels (expected {expected})"
        )


def levels_csv(levels: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "pass"])
    for level in sorted(levels, key=lambda r: r["n"]):
        w.writerow([level["n"], int(level["pass"])])
    return buf.getvalue()


def sweep_csv(p2q_values, pm_values, scores) -> str:
    """Heatmap with p2q across the columns and pm down the rows, largest pm
    first so the text reads like a plot with pm increasing upwards.
    ``scores[a][b]`` is the score at ``pm_values[a]``, ``p2q_values[b]``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pm\\p2q", *[repr(float(v)) for v in p2q_values]])
    for a in reversed(range(len(pm_values))):
        w.writerow([repr(float(pm_values[a])), *[int(s) for s in scores[a]]])
    return buf.getvalue()


def parse_sweep_csv(text: str) -> tuple[list[float], list[float], list[list[int]]]:
    rows = list(csv.reader(io.StringIO(text)))
    p2q = [float(v) for v in rows[0][1:]]
    body = rows[1:][::-1]
    pm = [float(r[0]) for r in body]
    scores = [[int(v) for v in r[1:]] for r in body]
    return p2q, pm, scores


METRICS_COLUMNS = ("n", "two_qubit_depth", "two_qubit_count", "total_depth", "total_count")


def metrics_csv(rows: list[dict], extra: tuple[str, ...] = ()) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["name", *METRICS_COLUMNS, *extra], lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()
