"""Adventure catalog: content types, validation, and localized listing.

A catalog is one JSON document with top-level keys ``languages`` (exactly
four codes), ``badges``, ``easter_eggs`` and ``adventures``. Each adventure
is an ordered list of stages of four interchangeable kinds: info,
beacon_gate, quiz and numbered_steps. All user-visible text is localized
per configured language. Structural validation is delegated to the shipped
JSON schema; cross-reference and localization checks are done here, and all
problems are reported together with the path of each offending field.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Union

import jsonschema

from .beacon import BeaconId
from .errors import CatalogValidationError, InvalidFrame, UnknownAdventure, UnknownLanguage

LANGUAGE_COUNT = 4
DEFAULT_LEVEL_POINTS = 500
DEFAULT_QUIZ_POINTS = 10
DEFAULT_COMPLETION_POINTS = 100
DEFAULT_EGG_POINTS = 25
DEFAULT_GATE_MIN_RSSI = -90


class BadgeKind(enum.Enum):
    ADVENTURE = "adventure"
    PERFECT_QUIZ = "perfect_quiz"
    EASTER_EGG = "easter_egg"
    USAGE = "usage"


@dataclass(frozen=True)
class Badge:
    id: str
    kind: BadgeKind
    name: dict[str, str]
    hint: dict[str, str]
    #: usage badges may carry {"completions": n}: granted at the n-th finished adventure
    rule: dict | None = None


@dataclass(frozen=True)
class EasterEgg:
    id: str
    badge_id: str
    points: int = DEFAULT_EGG_POINTS


@dataclass(frozen=True)
class QuizQuestion:
    text: dict[str, str]
    choices: tuple[dict[str, str], ...]
    correct_index: int
    points: int = DEFAULT_QUIZ_POINTS


@dataclass(frozen=True)
class InfoStage:
    text: dict[str, str]
    images: tuple[str, ...] = ()
    kind: str = "info"


@dataclass(frozen=True)
class BeaconGateStage:
    beacon: BeaconId
    min_rssi: int = DEFAULT_GATE_MIN_RSSI
    text: dict[str, str] | None = None
    kind: str = "beacon_gate"


@dataclass(frozen=True)
class QuizStage:
    questions: tuple[QuizQuestion, ...]
    kind: str = "quiz"


@dataclass(frozen=True)
class NumberedStepsStage:
    steps: tuple[dict[str, str], ...]
    kind: str = "numbered_steps"


Stage = Union[InfoStage, BeaconGateStage, QuizStage, NumberedStepsStage]


@dataclass(frozen=True)
class Adventure:
    id: str
    available: bool
    award_id: str
    bus_lines: tuple[str, ...]
    image: str
    name: dict[str, str]
    short_description: dict[str, str]
    distance_km: float
    stages: tuple[Stage, ...]
    completion_points: int = DEFAULT_COMPLETION_POINTS


@dataclass(frozen=True)
class Catalog:
    languages: tuple[str, ...]
    badges: dict[str, Badge]
    easter_eggs: dict[str, EasterEgg]
    adventures: dict[str, Adventure] = field(default_factory=dict)
    level_points: int = DEFAULT_LEVEL_POINTS

    def adventure(self, adventure_id: str) -> Adventure:
        try:
            return self.adventures[adventure_id]
        except KeyError:
            raise UnknownAdventure(f"no adventure with id {adventure_id!r}") from None

    def require_language(self, language: str) -> str:
        if language not in self.languages:
            raise UnknownLanguage(
                f"language {language!r} is not configured (choose from {', '.join(self.languages)})"
            )
        return language

    def text(self, localized: dict[str, str], language: str) -> str:
        return localized[self.require_language(language)]

    @property
    def perfect_quiz_badge(self) -> Badge | None:
        for badge in self.badges.values():
            if badge.kind is BadgeKind.PERFECT_QUIZ:
                return badge
        return None

    def usage_badges(self) -> list[Badge]:
        return [b for b in self.badges.values() if b.kind is BadgeKind.USAGE]


def load_schema() -> dict:
    with resources.files("marge.data").joinpath("catalog.schema.json").open("r") as fh:
        return json.load(fh)


def _json_pointer(error: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in error.absolute_path) or "(root)"


class _Issues:
    def __init__(self):
        self.items: list[tuple[str, str]] = []

    def add(self, path: str, message: str) -> None:
        self.items.append((path, message))

    def raise_if_any(self) -> None:
        if self.items:
            raise CatalogValidationError(self.items)


def _check_localized(issues: _Issues, node, languages: tuple[str, ...], path: str) -> None:
    if not isinstance(node, dict):
        issues.add(path, "localized text must be an object of language -> string")
        return
    for lang in languages:
        if lang not in node:
            issues.add(f"{path}.{lang}", f"missing translation for configured language {lang!r}")
    for lang in node:
        if lang not in languages:
            issues.add(f"{path}.{lang}", f"unknown language key {lang!r}")


def _parse_stage(issues: _Issues, obj: dict, languages, path: str) -> Stage | None:
    kind = obj.get("kind")
    if kind == "info":
        _check_localized(issues, obj.get("text"), languages, f"{path}.text")
        return InfoStage(text=obj.get("text", {}), images=tuple(obj.get("images", [])))
    if kind == "beacon_gate":
        beacon = None
        try:
            beacon = BeaconId.from_hex(obj.get("uuid", ""), int(obj.get("major", -1)), int(obj.get("minor", -1)))
        except (InvalidFrame, ValueError):
            issues.add(path, "beacon gate needs a valid uuid/major/minor identity")
        min_rssi = obj.get("min_rssi", DEFAULT_GATE_MIN_RSSI)
        if not -127 <= min_rssi <= 0:
            issues.add(f"{path}.min_rssi", f"min_rssi must be in [-127, 0], got {min_rssi}")
        if obj.get("text") is not None:
            _check_localized(issues, obj["text"], languages, f"{path}.text")
        if beacon is None:
            return None
        return BeaconGateStage(beacon=beacon, min_rssi=min_rssi, text=obj.get("text"))
    if kind == "quiz":
        questions = []
        raw = obj.get("questions", [])
        if not raw:
            issues.add(f"{path}.questions", "quiz needs at least one question")
        for qi, q in enumerate(raw):
            qpath = f"{path}.questions[{qi}]"
            _check_localized(issues, q.get("text"), languages, f"{qpath}.text")
            choices = q.get("choices", [])
            if len(choices) < 2:
                issues.add(f"{qpath}.choices", "a question needs at least two choices")
            for ci, choice in enumerate(choices):
                _check_localized(issues, choice, languages, f"{qpath}.choices[{ci}]")
            correct = q.get("correct_index", -1)
            if not 0 <= correct < len(choices):
                issues.add(f"{qpath}.correct_index", f"correct_index {correct} out of range")
            points = q.get("points", DEFAULT_QUIZ_POINTS)
            if points <= 0:
                issues.add(f"{qpath}.points", f"points must be positive, got {points}")
            questions.append(
                QuizQuestion(q.get("text", {}), tuple(choices), correct, points)
            )
        return QuizStage(tuple(questions))
    if kind == "numbered_steps":
        steps = obj.get("steps", [])
        if not steps:
            issues.add(f"{path}.steps", "numbered_steps needs at least one step")
        for si, step in enumerate(steps):
            _check_localized(issues, step, languages, f"{path}.steps[{si}]")
        return NumberedStepsStage(tuple(steps))
    issues.add(f"{path}.kind", f"unknown stage kind {kind!r}")
    return None


def load_catalog(document: dict) -> Catalog:
    """Validate a parsed catalog document and build the immutable Catalog."""
    issues = _Issues()
    try:
        jsonschema.validate(document, load_schema())
    except jsonschema.ValidationError:
        validator = jsonschema.Draft202012Validator(load_schema())
        for error in validator.iter_errors(document):
            issues.add(_json_pointer(error), error.message)
        issues.raise_if_any()

    languages = tuple(document["languages"])
    if len(set(languages)) != LANGUAGE_COUNT:
        issues.add("languages", f"exactly {LANGUAGE_COUNT} distinct languages required, got {languages}")

    badges: dict[str, Badge] = {}
    for bi, raw in enumerate(document["badges"]):
        path = f"badges[{bi}]"
        if raw["id"] in badges:
            issues.add(f"{path}.id", f"duplicate badge id {raw['id']!r}")
        _check_localized(issues, raw.get("name"), languages, f"{path}.name")
        _check_localized(issues, raw.get("hint"), languages, f"{path}.hint")
        kind = BadgeKind(raw["kind"])
        rule = raw.get("rule")
        if rule is not None and kind is not BadgeKind.USAGE:
            issues.add(f"{path}.rule", "only usage badges may carry a rule")
        if kind is BadgeKind.USAGE and rule is not None:
            if not isinstance(rule.get("completions"), int) or rule["completions"] < 1:
                issues.add(f"{path}.rule.completions", "completions must be a positive integer")
        badges[raw["id"]] = Badge(raw["id"], kind, raw.get("name", {}), raw.get("hint", {}), rule)

    if sum(1 for b in badges.values() if b.kind is BadgeKind.PERFECT_QUIZ) > 1:
        issues.add("badges", "at most one perfect_quiz badge is supported")

    eggs: dict[str, EasterEgg] = {}
    for ei, raw in enumerate(document.get("easter_eggs", [])):
        path = f"easter_eggs[{ei}]"
        if raw["id"] in eggs:
            issues.add(f"{path}.id", f"duplicate easter egg id {raw['id']!r}")
        badge = badges.get(raw["badge_id"])
        if badge is None:
            issues.add(f"{path}.badge_id", f"unknown badge {raw['badge_id']!r}")
        elif badge.kind is not BadgeKind.EASTER_EGG:
            issues.add(f"{path}.badge_id", f"badge {badge.id!r} must have kind easter_egg")
        points = raw.get("points", DEFAULT_EGG_POINTS)
        if points <= 0:
            issues.add(f"{path}.points", f"points must be positive, got {points}")
        eggs[raw["id"]] = EasterEgg(raw["id"], raw["badge_id"], points)

    adventures: dict[str, Adventure] = {}
    for ai, raw in enumerate(document["adventures"]):
        path = f"adventures[{ai}]"
        if raw["id"] in adventures:
            issues.add(f"{path}.id", f"duplicate adventure id {raw['id']!r}")
        award = badges.get(raw["award_id"])
        if award is None:
            issues.add(f"{path}.award_id", f"unknown badge {raw['award_id']!r}")
        elif award.kind is not BadgeKind.ADVENTURE:
            issues.add(f"{path}.award_id", f"badge {award.id!r} must have kind adventure")
        _check_localized(issues, raw.get("name"), languages, f"{path}.name")
        _check_localized(issues, raw.get("short_description"), languages, f"{path}.short_description")
        if raw.get("distance_km", 0) < 0:
            issues.add(f"{path}.distance_km", "distance must be non-negative")
        completion_points = raw.get("completion_points", DEFAULT_COMPLETION_POINTS)
        if completion_points < 0:
            issues.add(f"{path}.completion_points", "completion_points must be non-negative")
        raw_stages = raw.get("stages", [])
        if not raw_stages:
            issues.add(f"{path}.stages", "an adventure needs at least one stage")
        stages = []
        for si, stage_obj in enumerate(raw_stages):
            stage = _parse_stage(issues, stage_obj, languages, f"{path}.stages[{si}]")
            if stage is not None:
                stages.append(stage)
        adventures[raw["id"]] = Adventure(
            id=raw["id"],
            available=bool(raw.get("available", True)),
            award_id=raw["award_id"],
            bus_lines=tuple(raw.get("bus_lines", [])),
            image=raw.get("image", ""),
            name=raw.get("name", {}),
            short_description=raw.get("short_description", {}),
            distance_km=float(raw.get("distance_km", 0.0)),
            stages=tuple(stages),
            completion_points=completion_points,
        )

    level_points = document.get("level_points", DEFAULT_LEVEL_POINTS)
    if level_points <= 0:
        issues.add("level_points", "level_points must be positive")

    issues.raise_if_any()
    return Catalog(
        languages=languages,
        badges=badges,
        easter_eggs=eggs,
        adventures=adventures,
        level_points=level_points,
    )


def load_catalog_file(path: str | Path) -> Catalog:
    with open(path, encoding="utf-8") as fh:
        return load_catalog(json.load(fh))


def load_example_catalog() -> Catalog:
    """The catalog seeded with the package (two adventures, all stage kinds)."""
    with resources.files("marge.data").joinpath("catalog_example.json").open("r") as fh:
        return load_catalog(json.load(fh))


def stage_public_view(catalog: Catalog, stage: Stage, language: str) -> dict:
    """Client-facing view of a stage; quiz answers are not disclosed."""
    if isinstance(stage, InfoStage):
        return {"kind": "info", "text": catalog.text(stage.text, language), "images": list(stage.images)}
    if isinstance(stage, BeaconGateStage):
        return {
            "kind": "beacon_gate",
            "uuid": stage.beacon.uuid_hex,
            "major": stage.beacon.major,
            "minor": stage.beacon.minor,
            "min_rssi": stage.min_rssi,
            "text": catalog.text(stage.text, language) if stage.text else None,
        }
    if isinstance(stage, QuizStage):
        return {
            "kind": "quiz",
            "questions": [
                {
                    "text": catalog.text(q.text, language),
                    "choices": [catalog.text(c, language) for c in q.choices],
                    "points": q.points,
                }
                for q in stage.questions
            ],
        }
    if isinstance(stage, NumberedStepsStage):
        return {"kind": "numbered_steps", "steps": [catalog.text(s, language) for s in stage.steps]}
    raise AssertionError(f"unknown stage type {stage!r}")


def list_adventures(catalog: Catalog, language: str) -> list[dict]:
    """Localized selector cards, in catalog order; unavailable ones carry an alert."""
    catalog.require_language(language)
    cards = []
    for adventure in catalog.adventures.values():
        award = catalog.badges[adventure.award_id]
        cards.append(
            {
                "id": adventure.id,
                "name": catalog.text(adventure.name, language),
                "short_description": catalog.text(adventure.short_description, language),
                "award": {"id": award.id, "name": catalog.text(award.name, language)},
                "image": adventure.image,
                "distance_km": adventure.distance_km,
                "bus_lines": list(adventure.bus_lines),
                "available": adventure.available,
                "alert": not adventure.available,
                "stage_count": len(adventure.stages),
            }
        )
    return cards
