"""Usability-evaluation kit: questionnaire scoring and task-session statistics.

Scores the standard 10-item usability questionnaire (alternating
positively/negatively worded items on a 1-5 scale) and interprets the mean
against a banding table of letter grades, percentile ranges, acceptability
thresholds, net-promoter cutoffs and adjective anchors. The default table
ships with the package (data/sus_bands.json) and can be replaced per
deployment.

A raw mean score and its percentile band are different things and are
reported as separate, labeled fields; nothing here conflates the two.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable

from .errors import EmptyInput, InvalidResponse, OutOfRange

ITEM_COUNT = 10
SCALE_MIN = 1
SCALE_MAX = 5


@dataclass(frozen=True)
class SusResponse:
    """One respondent's answers, in questionnaire order."""

    items: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if len(self.items) != ITEM_COUNT:
            raise InvalidResponse(f"expected {ITEM_COUNT} items, got {len(self.items)}")
        for i, value in enumerate(self.items):
            if not isinstance(value, int) or not SCALE_MIN <= value <= SCALE_MAX:
                raise InvalidResponse(
                    f"item {i + 1} must be an integer in [{SCALE_MIN}, {SCALE_MAX}], got {value!r}"
                )


def sus_score(response: SusResponse) -> float:
    """Score one response on the 0-100 scale.

    Odd-position items (1-indexed) contribute ``value - 1``, even-position
    items ``5 - value``; the contribution sum is scaled by 2.5, so every
    score is a multiple of 2.5.
    """
    contribution = 0
    for index, value in enumerate(response.items):
        if index % 2 == 0:  # positions 1, 3, 5, 7, 9
            contribution += value - 1
        else:
            contribution += SCALE_MAX - value
    return contribution * 2.5


@dataclass(frozen=True)
class SusInterpretation:
    mean_score: float
    letter_grade: str
    percentile_range: tuple[int, int]
    relative_to_average: str  # "above average" | "average" | "below average"
    acceptability: str
    nps_category: str
    adjective: str

    def to_dict(self) -> dict:
        return {
            "mean_score": self.mean_score,
            "letter_grade": self.letter_grade,
            "percentile_range": list(self.percentile_range),
            "relative_to_average": self.relative_to_average,
            "acceptability": self.acceptability,
            "nps_category": self.nps_category,
            "adjective": self.adjective,
        }


def load_default_bands() -> dict:
    with resources.files("marge.data").joinpath("sus_bands.json").open("r") as fh:
        return json.load(fh)


def _lookup_min_table(rows: list[dict], key: str, score: float) -> dict:
    for row in sorted(rows, key=lambda r: r["min"], reverse=True):
        if score >= row["min"]:
            return row
    return min(rows, key=lambda r: r["min"])


def sus_interpret(mean_score: float, bands: dict | None = None) -> SusInterpretation:
    """Map a mean score onto the banding table."""
    if not 0 <= mean_score <= 100:
        raise OutOfRange(f"mean score must be in [0, 100], got {mean_score}")
    bands = bands or load_default_bands()
    grade_row = _lookup_min_table(bands["grades"], "grade", mean_score)
    acceptability = _lookup_min_table(bands["acceptability"], "label", mean_score)["label"]
    nps = _lookup_min_table(bands["nps"], "label", mean_score)["label"]
    average = bands["average_score"]
    if mean_score > average:
        relative = "above average"
    elif mean_score < average:
        relative = "below average"
    else:
        relative = "average"
    return SusInterpretation(
        mean_score=mean_score,
        letter_grade=grade_row["grade"],
        percentile_range=tuple(grade_row["percentile_range"]),
        relative_to_average=relative,
        acceptability=acceptability,
        nps_category=nps,
        adjective=_adjective(mean_score, bands["adjectives"]),
    )


def _adjective(score: float, anchors: list[dict]) -> str:
    """Nearest adjective, or the border label when strictly between anchors."""
    ordered = sorted(anchors, key=lambda a: a["anchor"])
    if score <= ordered[0]["anchor"]:
        return ordered[0]["label"]
    if score >= ordered[-1]["anchor"]:
        return ordered[-1]["label"]
    for low, high in zip(ordered, ordered[1:]):
        if low["anchor"] <= score <= high["anchor"]:
            if score == low["anchor"]:
                return low["label"]
            if score == high["anchor"]:
                return high["label"]
            return f"between {low['label']} and {high['label']}"
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class TaskSample:
    task_id: str
    duration_s: float
    errors: int

    def __post_init__(self):
        if self.duration_s < 0 or self.duration_s != self.duration_s:
            raise InvalidResponse(f"duration_s must be finite and non-negative, got {self.duration_s}")
        if self.errors < 0:
            raise InvalidResponse(f"errors must be non-negative, got {self.errors}")


@dataclass(frozen=True)
class TaskMetrics:
    task_id: str
    n: int
    mean_s: float
    sd_s: float
    min_s: float
    max_s: float
    mean_errors: float
    sd_errors: float

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "n": self.n,
            "mean_s": self.mean_s,
            "sd_s": self.sd_s,
            "min_s": self.min_s,
            "max_s": self.max_s,
            "mean_errors": self.mean_errors,
            "sd_errors": self.sd_errors,
        }


def _sd(values: list[float]) -> float:
    # sample standard deviation; a singleton has no spread
    if len(values) < 2:
        return 0.0
    return statistics.stdev(values)


def task_metrics(samples: list[TaskSample]) -> TaskMetrics:
    """Duration and error statistics for one task's observed sessions."""
    if not samples:
        raise EmptyInput("no task samples")
    task_ids = {s.task_id for s in samples}
    if len(task_ids) != 1:
        raise InvalidResponse(f"samples span multiple tasks: {sorted(task_ids)}")
    durations = [float(s.duration_s) for s in samples]
    errors = [float(s.errors) for s in samples]
    return TaskMetrics(
        task_id=samples[0].task_id,
        n=len(samples),
        mean_s=statistics.fmean(durations),
        sd_s=_sd(durations),
        min_s=min(durations),
        max_s=max(durations),
        mean_errors=statistics.fmean(errors),
        sd_errors=_sd(errors),
    )


# --- CSV input -----------------------------------------------------------------

def _looks_like_header(row: list[str]) -> bool:
    for cell in row:
        try:
            float(cell)
            return False
        except ValueError:
            continue
    return True


def read_sus_csv(src: IO[str]) -> list[SusResponse]:
    """One respondent per row, ten item columns; a header row is skipped."""
    rows = [row for row in csv.reader(src) if row]
    if not rows:
        raise EmptyInput("empty questionnaire file")
    if _looks_like_header(rows[0]):
        rows = rows[1:]
    responses = []
    for lineno, row in enumerate(rows, start=1):
        try:
            items = tuple(int(cell) for cell in row)
        except ValueError as exc:
            raise InvalidResponse(f"row {lineno}: non-integer item: {exc}") from exc
        responses.append(SusResponse(items))
    if not responses:
        raise EmptyInput("no responses in file")
    return responses


def read_task_csv(src: IO[str]) -> dict[str, list[TaskSample]]:
    """Rows of task_id,duration_s,errors grouped by task."""
    rows = [row for row in csv.reader(src) if row]
    if not rows:
        raise EmptyInput("empty task file")
    if _looks_like_header(rows[0]):
        rows = rows[1:]
    grouped: dict[str, list[TaskSample]] = {}
    for lineno, row in enumerate(rows, start=1):
        if len(row) != 3:
            raise InvalidResponse(f"row {lineno}: expected task_id,duration_s,errors")
        task_id, duration, errors = row
        try:
            sample = TaskSample(task_id.strip(), float(duration), int(errors))
        except ValueError as exc:
            raise InvalidResponse(f"row {lineno}: {exc}") from exc
        grouped.setdefault(sample.task_id, []).append(sample)
    if not grouped:
        raise EmptyInput("no samples in file")
    return grouped


# --- reports -------------------------------------------------------------------

def sus_report(responses: Iterable[SusResponse], bands: dict | None = None) -> dict:
    scores = [sus_score(r) for r in responses]
    if not scores:
        raise EmptyInput("no responses")
    mean = statistics.fmean(scores)
    return {
        "n": len(scores),
        "scores": scores,
        "mean_score": mean,
        "interpretation": sus_interpret(mean, bands).to_dict(),
    }


def task_report(grouped: dict[str, list[TaskSample]]) -> dict:
    return {task_id: task_metrics(samples).to_dict() for task_id, samples in sorted(grouped.items())}


def format_sus_table(report: dict) -> str:
    lines = ["respondent  score", "----------  -----"]
    for i, score in enumerate(report["scores"], start=1):
        lines.append(f"{i:>10}  {score:>5.1f}")
    interp = report["interpretation"]
    lines.append("")
    lines.append(f"mean score (raw 0-100): {report['mean_score']:.2f}")
    lines.append(
        f"grade {interp['letter_grade']}"
        f" | percentile band {interp['percentile_range'][0]}-{interp['percentile_range'][1]}"
        f" ({interp['relative_to_average']})"
    )
    lines.append(
        f"{interp['acceptability']} | {interp['nps_category']} | {interp['adjective']}"
    )
    return "\n".join(lines)


def format_task_table(report: dict) -> str:
    header = f"{'task':<12} {'n':>3} {'mean_s':>8} {'sd_s':>8} {'min_s':>7} {'max_s':>7} {'mean_err':>8} {'sd_err':>7}"
    lines = [header, "-" * len(header)]
    for task_id, m in report.items():
        lines.append(
            f"{task_id:<12} {m['n']:>3} {m['mean_s']:>8.2f} {m['sd_s']:>8.2f}"
            f" {m['min_s']:>7.1f} {m['max_s']:>7.1f} {m['mean_errors']:>8.2f} {m['sd_errors']:>7.2f}"
        )
    return "\n".join(lines)
