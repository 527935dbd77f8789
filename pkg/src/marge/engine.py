"""Gamification core: staged adventure sessions, scoring, awards, leaderboard.

An adventure session is one-way: the stage index only advances (an explicit
restart resets it). Beacon-gate stages unlock from the session's scan-event
stream; quiz answers add points when right and subtract when wrong, with the
running score floored at zero so a bad streak is never demotivational.
Completion grants the adventure's badge and points exactly once per user,
however many times the adventure is replayed.

Every state change is applied through the document store, so a service
restart against the same data directory loses nothing. Mutating operations
return the events they produced (stage transitions, score changes, badge
grants) for the live client stream.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable

from .catalog import (
    Badge,
    BadgeKind,
    BeaconGateStage,
    Catalog,
    InfoStage,
    NumberedStepsStage,
    QuizStage,
    stage_public_view,
)
from .errors import (
    AlreadyAnswered,
    EmptyFeedback,
    GateLocked,
    IncompleteQuiz,
    IndexOutOfRange,
    NotAQuizStage,
    NotFound,
    OutOfOrderEvent,
    SessionComplete,
    TooLong,
    UnavailableAdventure,
    UnknownEgg,
    UnknownSession,
    UnknownUser,
    WrongInputKind,
)
from .proximity import RegionTracker, ScanEvent
from .store import DocumentStore

MAX_FEEDBACK_CHARS = 4000

STATUS_ACTIVE = "active"
STATUS_COMPLETE = "complete"

_STAGE_INPUT = {
    InfoStage: "ack",
    NumberedStepsStage: "ack",
    BeaconGateStage: "gate",
    QuizStage: "quiz",
}


@dataclass(frozen=True)
class EngineEvent:
    type: str
    session_id: str | None
    data: dict

    def to_dict(self) -> dict:
        return {"type": self.type, "session_id": self.session_id, **self.data}


@dataclass
class Session:
    session_id: str
    user_id: str
    adventure_id: str
    stage_index: int = 0
    score: int = 0
    status: str = STATUS_ACTIVE
    quiz_answers: dict[str, dict] = field(default_factory=dict)
    started_at_ms: int = 0
    updated_at_ms: int = 0

    @property
    def active(self) -> bool:
        return self.status == STATUS_ACTIVE

    def to_doc(self) -> dict:
        return {
            "session_id": self.session_id,
            "user_id": self.user_id,
            "adventure_id": self.adventure_id,
            "stage_index": self.stage_index,
            "score": self.score,
            "status": self.status,
            "quiz_answers": self.quiz_answers,
            "started_at_ms": self.started_at_ms,
            "updated_at_ms": self.updated_at_ms,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Session":
        return cls(
            session_id=doc["session_id"],
            user_id=doc["user_id"],
            adventure_id=doc["adventure_id"],
            stage_index=doc["stage_index"],
            score=doc["score"],
            status=doc["status"],
            quiz_answers=doc.get("quiz_answers", {}),
            started_at_ms=doc.get("started_at_ms", 0),
            updated_at_ms=doc.get("updated_at_ms", 0),
        )


@dataclass(frozen=True)
class StartOutcome:
    kind: str  # "new" | "resume_prompt" | "completed_prompt"
    session: Session | None


@dataclass(frozen=True)
class AnswerOutcome:
    correct: bool
    correct_index: int | None  # revealed only on a wrong answer
    score_delta: int
    new_score: int


@dataclass(frozen=True)
class LeaderboardEntry:
    user_id: str
    total_points: int
    last_award_at_ms: int | None


class AdventureService:
    """Catalog + store orchestration; one instance serves many users."""

    def __init__(self, catalog: Catalog, store: DocumentStore, clock=None):
        self.catalog = catalog
        self.store = store
        self._clock = clock or (lambda: int(time.time() * 1000))
        self._locks_guard = threading.Lock()
        self._session_locks: dict[str, threading.Lock] = {}
        self._trackers: dict[str, RegionTracker] = {}

    def _now(self) -> int:
        return self._clock()

    def _session_lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._session_locks.setdefault(session_id, threading.Lock())

    # -- users -------------------------------------------------------------

    def _profile_path(self, user_id: str) -> str:
        return f"users/{user_id}/profile"

    def _profile(self, user_id: str) -> dict:
        try:
            return self.store.get_document(self._profile_path(user_id))
        except NotFound:
            raise UnknownUser(f"unknown user {user_id!r}") from None

    def create_user(self, user_id: str | None = None) -> str:
        """Profile bootstrap for non-registered flows (tests, imports)."""
        user_id = user_id or ("u" + secrets.token_hex(8))
        self.store.put_document(
            self._profile_path(user_id), {"user_id": user_id, "created_at_ms": self._now()}
        )
        return user_id

    def set_language(self, user_id: str, language: str) -> None:
        self.catalog.require_language(language)
        self._profile(user_id)
        self.store.update_atomic(
            self._profile_path(user_id), lambda p: {**p, "language": language}
        )

    def user_language(self, user_id: str) -> str:
        return self._profile(user_id).get("language") or self.catalog.languages[0]

    # -- sessions ------------------------------------------------------------

    def _session_path(self, session_id: str) -> str:
        return f"sessions/{session_id}"

    def _active_index_path(self, user_id: str, adventure_id: str) -> str:
        return f"users/{user_id}/active_sessions/{adventure_id}"

    def load_session(self, session_id: str) -> Session:
        try:
            return Session.from_doc(self.store.get_document(self._session_path(session_id)))
        except NotFound:
            raise UnknownSession(f"unknown session {session_id!r}") from None

    def _save_session(self, session: Session) -> None:
        session.updated_at_ms = self._now()
        self.store.put_document(self._session_path(session.session_id), session.to_doc())

    def _tracker(self, session_id: str) -> RegionTracker:
        tracker = self._trackers.get(session_id)
        if tracker is None:
            tracker = RegionTracker()
            snapshot = self.store.get_or(f"sessions/{session_id}/region")
            if snapshot:
                tracker.restore(snapshot)
            self._trackers[session_id] = tracker
        return tracker

    def _save_tracker(self, session_id: str) -> None:
        tracker = self._trackers.get(session_id)
        if tracker is not None:
            self.store.put_document(f"sessions/{session_id}/region", tracker.snapshot())

    def start_session(self, user_id: str, adventure_id: str, confirm_replay: bool = False) -> StartOutcome:
        self._profile(user_id)
        adventure = self.catalog.adventure(adventure_id)
        if not adventure.available:
            raise UnavailableAdventure(f"adventure {adventure_id!r} is currently unavailable")
        existing_id = self.store.get_or(self._active_index_path(user_id, adventure_id))
        if existing_id:
            return StartOutcome("resume_prompt", self.load_session(existing_id))
        completed = self._profile(user_id).get("completed_adventures", {})
        if adventure_id in completed and not confirm_replay:
            return StartOutcome("completed_prompt", None)
        session = Session(
            session_id="s" + secrets.token_hex(8),
            user_id=user_id,
            adventure_id=adventure_id,
            started_at_ms=self._now(),
        )
        self._save_session(session)
        self.store.put_document(self._active_index_path(user_id, adventure_id), session.session_id)
        return StartOutcome("new", session)

    def resume_or_restart(self, session_id: str, choice: str) -> Session:
        with self._session_lock(session_id):
            session = self.load_session(session_id)
            if not session.active:
                raise SessionComplete(f"session {session_id} is already complete")
            if choice == "resume":
                return session
            if choice == "restart":
                session.stage_index = 0
                session.score = 0
                session.quiz_answers = {}
                self._save_session(session)
                return session
            raise WrongInputKind(f"choice must be 'resume' or 'restart', got {choice!r}")

    # -- scan ingestion --------------------------------------------------------

    def ingest_scan_events(self, session_id: str, events: Iterable[ScanEvent]) -> tuple[int, list[EngineEvent]]:
        """Feed a batch in order; rejected atomically if any timestamp regresses."""
        events = list(events)
        with self._session_lock(session_id):
            session = self.load_session(session_id)
            if not session.active:
                raise SessionComplete(f"session {session_id} is already complete")
            tracker = self._tracker(session_id)
            gate = self._current_gate(session)
            before = self._gate_state(tracker, gate)
            checkpoint = tracker.snapshot()
            try:
                for event in events:
                    tracker.ingest(event)
            except OutOfOrderEvent:
                tracker.restore(checkpoint)
                raise
            self._save_tracker(session_id)
            emitted: list[EngineEvent] = []
            after = self._gate_state(tracker, gate)
            if gate is not None and before != after:
                emitted.append(
                    EngineEvent(
                        "gate_status",
                        session_id,
                        {
                            "unlocked": after,
                            "uuid": gate.beacon.uuid_hex,
                            "major": gate.beacon.major,
                            "minor": gate.beacon.minor,
                        },
                    )
                )
            return len(events), emitted

    def _current_gate(self, session: Session) -> BeaconGateStage | None:
        adventure = self.catalog.adventure(session.adventure_id)
        if session.active and session.stage_index < len(adventure.stages):
            stage = adventure.stages[session.stage_index]
            if isinstance(stage, BeaconGateStage):
                return stage
        return None

    def _gate_state(self, tracker: RegionTracker, gate: BeaconGateStage | None) -> bool:
        if gate is None:
            return False
        now_ms = tracker.latest_t_ms
        if now_ms is None:
            return False
        return tracker.gate_unlocked(gate.beacon, now_ms, gate.min_rssi)

    def gate_status(self, session_id: str) -> bool:
        with self._session_lock(session_id):
            session = self.load_session(session_id)
            return self._gate_state(self._tracker(session_id), self._current_gate(session))

    # -- progression -----------------------------------------------------------

    def advance_stage(self, session_id: str, input_kind: str) -> tuple[Session, list[EngineEvent]]:
        with self._session_lock(session_id):
            session = self.load_session(session_id)
            if not session.active:
                raise SessionComplete(f"session {session_id} is already complete")
            adventure = self.catalog.adventure(session.adventure_id)
            stage = adventure.stages[session.stage_index]
            expected = _STAGE_INPUT[type(stage)]
            if input_kind != expected:
                raise WrongInputKind(
                    f"stage {session.stage_index} is {stage.kind}; expected input {expected!r}, got {input_kind!r}"
                )
            if isinstance(stage, BeaconGateStage):
                if not self._gate_state(self._tracker(session_id), stage):
                    raise GateLocked(
                        f"beacon {stage.beacon.uuid_hex}/{stage.beacon.major}/{stage.beacon.minor} not in range"
                    )
            if isinstance(stage, QuizStage):
                answered = {
                    int(key.split(":")[1])
                    for key in session.quiz_answers
                    if int(key.split(":")[0]) == session.stage_index
                }
                missing = [i for i in range(len(stage.questions)) if i not in answered]
                if missing:
                    raise IncompleteQuiz(f"unanswered questions: {missing}")

            session.stage_index += 1
            events: list[EngineEvent] = []
            if session.stage_index >= len(adventure.stages):
                session.status = STATUS_COMPLETE
                events.extend(self._complete(session, adventure))
            else:
                next_stage = adventure.stages[session.stage_index]
                events.append(
                    EngineEvent(
                        "stage_changed",
                        session_id,
                        {"stage_index": session.stage_index, "stage_kind": next_stage.kind},
                    )
                )
            self._save_session(session)
            return session, events

    def _grant_badge(self, profile: dict, badge: Badge, now: int) -> bool:
        badges = profile.setdefault("badges", {})
        if badge.id in badges:
            return False
        badges[badge.id] = {"granted_at_ms": now, "kind": badge.kind.value}
        profile["last_award_at_ms"] = now
        return True

    def _complete(self, session: Session, adventure) -> list[EngineEvent]:
        now = self._now()
        events: list[EngineEvent] = []
        granted: list[Badge] = []
        awarded_points = 0

        quiz_answers = list(session.quiz_answers.values())
        perfect = bool(quiz_answers) and all(a["correct"] for a in quiz_answers)

        def apply(profile: dict) -> dict:
            nonlocal awarded_points
            granted.clear()
            awarded_points = 0
            completed = profile.setdefault("completed_adventures", {})
            first_completion = adventure.id not in completed
            if first_completion:
                completed[adventure.id] = now
                awarded_points = adventure.completion_points
                profile["total_points"] = profile.get("total_points", 0) + awarded_points
                profile["last_award_at_ms"] = now
                award = self.catalog.badges[adventure.award_id]
                if self._grant_badge(profile, award, now):
                    granted.append(award)
            if perfect:
                badge = self.catalog.perfect_quiz_badge
                if badge is not None and self._grant_badge(profile, badge, now):
                    granted.append(badge)
            for badge in self.catalog.usage_badges():
                needed = (badge.rule or {}).get("completions")
                if needed is not None and len(completed) >= needed:
                    if self._grant_badge(profile, badge, now):
                        granted.append(badge)
            profile["level"] = profile.get("total_points", 0) // self.catalog.level_points
            return profile

        profile = self.store.update_atomic(self._profile_path(session.user_id), apply)
        self.store.put_document(self._active_index_path(session.user_id, session.adventure_id), None)

        if awarded_points:
            events.append(
                EngineEvent(
                    "score_changed",
                    session.session_id,
                    {
                        "delta": awarded_points,
                        "session_score": session.score,
                        "total_points": profile["total_points"],
                        "reason": "adventure_completed",
                    },
                )
            )
        for badge in granted:
            events.append(
                EngineEvent(
                    "badge_granted",
                    session.session_id,
                    {"badge_id": badge.id, "kind": badge.kind.value},
                )
            )
        events.append(
            EngineEvent(
                "session_completed",
                session.session_id,
                {
                    "adventure_id": adventure.id,
                    "score": session.score,
                    "total_points": profile["total_points"],
                    "perfect_quiz": perfect,
                },
            )
        )
        return events

    def answer_quiz(
        self, session_id: str, question_index: int, choice_index: int
    ) -> tuple[AnswerOutcome, list[EngineEvent]]:
        with self._session_lock(session_id):
            session = self.load_session(session_id)
            if not session.active:
                raise SessionComplete(f"session {session_id} is already complete")
            adventure = self.catalog.adventure(session.adventure_id)
            stage = adventure.stages[session.stage_index]
            if not isinstance(stage, QuizStage):
                raise NotAQuizStage(f"stage {session.stage_index} is {stage.kind}")
            if not 0 <= question_index < len(stage.questions):
                raise IndexOutOfRange(f"question_index {question_index} out of range")
            question = stage.questions[question_index]
            if not 0 <= choice_index < len(question.choices):
                raise IndexOutOfRange(f"choice_index {choice_index} out of range")
            key = f"{session.stage_index}:{question_index}"
            if key in session.quiz_answers:
                raise AlreadyAnswered(f"question {question_index} was already answered")

            correct = choice_index == question.correct_index
            old_score = session.score
            if correct:
                session.score = old_score + question.points
            else:
                session.score = max(0, old_score - question.points)
            delta = session.score - old_score
            session.quiz_answers[key] = {"choice": choice_index, "correct": correct}
            self._save_session(session)

            now = self._now()

            def apply(profile: dict) -> dict:
                profile["total_points"] = profile.get("total_points", 0) + delta
                if delta > 0:
                    profile["last_award_at_ms"] = now
                profile["level"] = profile["total_points"] // self.catalog.level_points
                return profile

            profile = self.store.update_atomic(self._profile_path(session.user_id), apply)
            outcome = AnswerOutcome(
                correct=correct,
                correct_index=None if correct else question.correct_index,
                score_delta=delta,
                new_score=session.score,
            )
            events = [
                EngineEvent(
                    "score_changed",
                    session_id,
                    {
                        "delta": delta,
                        "session_score": session.score,
                        "total_points": profile["total_points"],
                        "reason": "quiz_answer",
                        "correct": correct,
                    },
                )
            ]
            return outcome, events

    # -- progress, leaderboard, eggs, feedback ---------------------------------

    def user_progress(self, user_id: str, language: str | None = None) -> dict:
        profile = self._profile(user_id)
        language = self.catalog.require_language(language or self.user_language(user_id))
        available = [a for a in self.catalog.adventures.values() if a.available]
        completed = profile.get("completed_adventures", {})
        done = sum(1 for a in available if a.id in completed)
        if available:
            # round-half-up on integers: floor((100 * done + n/2) / n)
            n = len(available)
            percentage = (200 * done + n) // (2 * n)
        else:
            percentage = 0
        earned = []
        unearned = []
        owned = profile.get("badges", {})
        for badge in self.catalog.badges.values():
            if badge.id in owned:
                earned.append(
                    {
                        "id": badge.id,
                        "kind": badge.kind.value,
                        "name": self.catalog.text(badge.name, language),
                        "granted_at_ms": owned[badge.id]["granted_at_ms"],
                    }
                )
            else:
                unearned.append(
                    {
                        "id": badge.id,
                        "kind": badge.kind.value,
                        "name": self.catalog.text(badge.name, language),
                        "hint": self.catalog.text(badge.hint, language),
                    }
                )
        return {
            "user_id": user_id,
            "percentage": percentage,
            "total_points": profile.get("total_points", 0),
            "level": profile.get("total_points", 0) // self.catalog.level_points,
            "completed_adventures": sorted(completed),
            "badges": earned,
            "badge_hints": unearned,
        }

    def leaderboard_top(self, n: int) -> list[LeaderboardEntry]:
        if n < 1:
            raise IndexOutOfRange(f"n must be at least 1, got {n}")
        users = self.store.get_or("users", {})
        entries = []
        for user_id, docs in users.items():
            profile = docs.get("profile")
            if not profile:
                continue
            entries.append(
                LeaderboardEntry(
                    user_id=user_id,
                    total_points=profile.get("total_points", 0),
                    last_award_at_ms=profile.get("last_award_at_ms"),
                )
            )
        entries.sort(
            key=lambda e: (
                -e.total_points,
                e.last_award_at_ms if e.last_award_at_ms is not None else float("inf"),
                e.user_id,
            )
        )
        return entries[:n]

    def trigger_easter_egg(self, user_id: str, egg_id: str) -> tuple[str, list[EngineEvent]]:
        """First discovery grants the egg's badge and points; repeats are no-ops."""
        egg = self.catalog.easter_eggs.get(egg_id)
        if egg is None:
            raise UnknownEgg(f"unknown easter egg {egg_id!r}")
        self._profile(user_id)
        now = self._now()
        result = {"outcome": "already_found"}

        def apply(profile: dict) -> dict:
            found = profile.setdefault("found_eggs", {})
            if egg.id in found:
                result["outcome"] = "already_found"
                return profile
            found[egg.id] = now
            result["outcome"] = "granted"
            profile["total_points"] = profile.get("total_points", 0) + egg.points
            profile["last_award_at_ms"] = now
            profile["level"] = profile["total_points"] // self.catalog.level_points
            self._grant_badge(profile, self.catalog.badges[egg.badge_id], now)
            return profile

        profile = self.store.update_atomic(self._profile_path(user_id), apply)
        events: list[EngineEvent] = []
        if result["outcome"] == "granted":
            events.append(
                EngineEvent(
                    "score_changed",
                    None,
                    {
                        "delta": egg.points,
                        "total_points": profile["total_points"],
                        "reason": "easter_egg",
                        "user_id": user_id,
                    },
                )
            )
            events.append(
                EngineEvent("badge_granted", None, {"badge_id": egg.badge_id, "kind": "easter_egg"})
            )
        return result["outcome"], events

    def record_feedback(self, user_id: str, text: str) -> dict:
        self._profile(user_id)
        trimmed = text.strip()
        if not trimmed:
            raise EmptyFeedback("feedback text is empty")
        if len(trimmed) > MAX_FEEDBACK_CHARS:
            raise TooLong(f"feedback exceeds {MAX_FEEDBACK_CHARS} characters")
        entry = {"text": trimmed, "at_ms": self._now()}
        self.store.update_atomic(
            f"users/{user_id}/feedback", lambda entries: (entries or []) + [entry]
        )
        return entry

    def feedback_entries(self, user_id: str) -> list[dict]:
        self._profile(user_id)
        return self.store.get_or(f"users/{user_id}/feedback", [])

    # -- views -------------------------------------------------------------

    def session_view(self, session_id: str, language: str | None = None) -> dict:
        session = self.load_session(session_id)
        language = self.catalog.require_language(language or self.user_language(session.user_id))
        adventure = self.catalog.adventure(session.adventure_id)
        doc = session.to_doc()
        doc["stage_count"] = len(adventure.stages)
        if session.active:
            stage = adventure.stages[session.stage_index]
            view = stage_public_view(self.catalog, stage, language)
            if isinstance(stage, QuizStage):
                for qi, q in enumerate(view["questions"]):
                    answer = session.quiz_answers.get(f"{session.stage_index}:{qi}")
                    q["answered"] = answer is not None
                    if answer is not None:
                        q["chosen_index"] = answer["choice"]
                        q["correct"] = answer["correct"]
                        if not answer["correct"]:
                            q["correct_index"] = stage.questions[qi].correct_index
            if isinstance(stage, BeaconGateStage):
                view["unlocked"] = self._gate_state(self._tracker(session_id), stage)
            doc["stage"] = view
        else:
            doc["stage"] = None
        return doc
