"""UserId-keyed hierarchical JSON document store with change subscriptions.

A single JSON tree addressed by slash-separated paths ("users/u1/profile").
Writes are linearized under one lock; every commit is appended to a JSONL
journal ({path, value, commit_index}) and can be folded into snapshot.json
by compaction, so reopening a directory after a crash replays everything
acknowledged. Writing null deletes the path. Subscribers receive exactly one
notification, in commit order, for every write at or under their path.

Also hosts the local account table: secrets are stored only as salted
PBKDF2 hashes under an internal path; nothing can read one back.
"""

from __future__ import annotations

import copy
import hashlib
import hmac
import json
import os
import queue
import secrets
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .errors import (
    DuplicateLogin,
    InvalidPath,
    NotFound,
    TransformFailed,
)

JOURNAL_NAME = "journal.jsonl"
SNAPSHOT_NAME = "snapshot.json"

_CREDENTIALS_PREFIX = ("auth", "credentials")
_PBKDF2_ITERATIONS = 50_000
_MISSING = object()


def parse_path(path: str | tuple[str, ...] | list[str]) -> tuple[str, ...]:
    if isinstance(path, str):
        segments = tuple(path.strip("/").split("/"))
    else:
        segments = tuple(path)
    if not segments or any(not s or "/" in s for s in segments):
        raise InvalidPath(f"bad document path: {path!r}")
    return segments


def join_path(segments: tuple[str, ...]) -> str:
    return "/".join(segments)


@dataclass(frozen=True)
class Notification:
    path: str
    value: Any
    commit_index: int


class Subscription:
    """Ordered change feed for one path subtree."""

    def __init__(self, store: "DocumentStore", segments: tuple[str, ...]):
        self._store = store
        self._segments = segments
        self._queue: queue.Queue[Notification] = queue.Queue()
        self._closed = False

    def _matches(self, segments: tuple[str, ...]) -> bool:
        return segments[: len(self._segments)] == self._segments

    def _deliver(self, notification: Notification) -> None:
        self._queue.put(notification)

    def get(self, timeout: float | None = None) -> Notification | None:
        """Next notification, or None when the timeout elapses."""
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            return None

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._store._remove_subscription(self)

    def __enter__(self) -> "Subscription":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class DocumentStore:
    """Thread-safe JSON tree; pass ``data_dir=None`` for a purely in-memory store."""

    def __init__(self, data_dir: str | Path | None = None, fsync: bool = False):
        self._lock = threading.RLock()
        self._tree: dict = {}
        self._commit_index = 0
        self._subscriptions: list[Subscription] = []
        self._fsync = fsync
        self._dir = Path(data_dir) if data_dir is not None else None
        self._journal = None
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
            self._load()
            self._journal = open(self._dir / JOURNAL_NAME, "a", encoding="utf-8")

    # -- persistence ------------------------------------------------------

    def _load(self) -> None:
        snapshot_path = self._dir / SNAPSHOT_NAME
        if snapshot_path.exists():
            with open(snapshot_path, encoding="utf-8") as fh:
                snap = json.load(fh)
            self._tree = snap["tree"]
            self._commit_index = snap["commit_index"]
        journal_path = self._dir / JOURNAL_NAME
        if journal_path.exists():
            with open(journal_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    entry = json.loads(line)
                    if entry["commit_index"] <= self._commit_index:
                        continue  # already folded into the snapshot
                    self._apply(parse_path(entry["path"]), entry["value"])
                    self._commit_index = entry["commit_index"]

    def compact(self) -> None:
        """Fold the journal into snapshot.json and truncate it."""
        if self._dir is None:
            return
        with self._lock:
            tmp = self._dir / (SNAPSHOT_NAME + ".tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump({"tree": self._tree, "commit_index": self._commit_index}, fh)
                fh.flush()
            tmp.replace(self._dir / SNAPSHOT_NAME)
            self._journal.truncate(0)
            self._journal.seek(0)

    def close(self) -> None:
        if self._journal is not None:
            with self._lock:
                self.compact()
                self._journal.close()
                self._journal = None

    def __enter__(self) -> "DocumentStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- tree plumbing ----------------------------------------------------

    def _node_at(self, segments: tuple[str, ...]):
        node = self._tree
        for segment in segments:
            if not isinstance(node, dict) or segment not in node:
                return _MISSING
            node = node[segment]
        return node

    def _apply(self, segments: tuple[str, ...], value) -> None:
        parents = self._tree
        for segment in segments[:-1]:
            child = parents.get(segment)
            if not isinstance(child, dict):
                if value is None:
                    return  # deleting under a leaf: nothing to do
                child = {}
                parents[segment] = child
            parents = child
        leaf = segments[-1]
        if value is None:
            parents.pop(leaf, None)
        else:
            parents[leaf] = value

    def _commit(self, segments: tuple[str, ...], value) -> int:
        """Caller holds the lock. Returns the commit index."""
        # normalize through JSON so in-memory semantics match the journal
        value = json.loads(json.dumps(value))
        self._commit_index += 1
        index = self._commit_index
        if self._journal is not None:
            self._journal.write(
                json.dumps(
                    {"path": join_path(segments), "value": value, "commit_index": index},
                    separators=(",", ":"),
                )
                + "\n"
            )
            self._journal.flush()
            if self._fsync:
                os.fsync(self._journal.fileno())
        self._apply(segments, copy.deepcopy(value))
        notification = Notification(join_path(segments), value, index)
        for sub in self._subscriptions:
            if sub._matches(segments):
                sub._deliver(notification)
        return index

    # -- public document API ------------------------------------------------

    def put_document(self, path, value) -> Any:
        """Write (or delete, when value is None); returns the previous value."""
        segments = parse_path(path)
        with self._lock:
            previous = self._node_at(segments)
            self._commit(segments, value)
            return None if previous is _MISSING else copy.deepcopy(previous)

    def get_document(self, path) -> Any:
        segments = parse_path(path)
        with self._lock:
            node = self._node_at(segments)
            if node is _MISSING:
                raise NotFound(f"no document at {join_path(segments)}")
            return copy.deepcopy(node)

    def get_or(self, path, default=None) -> Any:
        try:
            return self.get_document(path)
        except NotFound:
            return default

    def update_atomic(self, path, transform: Callable[[Any], Any]) -> Any:
        """Apply ``transform`` to the current value (None when missing) atomically."""
        segments = parse_path(path)
        with self._lock:
            current = self._node_at(segments)
            current = None if current is _MISSING else copy.deepcopy(current)
            try:
                new_value = transform(current)
            except Exception as exc:
                raise TransformFailed(f"transform raised: {exc!r}") from exc
            self._commit(segments, new_value)
            return copy.deepcopy(new_value)

    def subscribe(self, path) -> Subscription:
        segments = parse_path(path)
        sub = Subscription(self, segments)
        with self._lock:
            self._subscriptions.append(sub)
        return sub

    def _remove_subscription(self, sub: Subscription) -> None:
        with self._lock:
            if sub in self._subscriptions:
                self._subscriptions.remove(sub)

    def tree(self) -> dict:
        """Deep copy of the whole tree, for diagnostics and tests."""
        with self._lock:
            return copy.deepcopy(self._tree)

    @property
    def commit_index(self) -> int:
        with self._lock:
            return self._commit_index

    # -- local accounts ------------------------------------------------------

    def register_user(
        self, login_id: str, secret: str, iterations: int = _PBKDF2_ITERATIONS
    ) -> str:
        """Create an account; the secret is persisted only as a salted hash."""
        if not login_id or "/" in login_id:
            raise InvalidPath(f"bad login id: {login_id!r}")
        if not secret:
            raise InvalidPath("secret must be non-empty")
        cred_path = _CREDENTIALS_PREFIX + (login_id,)
        with self._lock:
            if self._node_at(cred_path) is not _MISSING:
                raise DuplicateLogin(f"login id already registered: {login_id}")
            salt = secrets.token_bytes(16)
            digest = hashlib.pbkdf2_hmac("sha256", secret.encode(), salt, iterations)
            user_id = "u" + secrets.token_hex(8)
            self._commit(
                cred_path,
                {
                    "user_id": user_id,
                    "salt": salt.hex(),
                    "hash": digest.hex(),
                    "iterations": iterations,
                },
            )
            self._commit(
                ("users", user_id, "profile"),
                {"user_id": user_id, "created_at_ms": int(time.time() * 1000)},
            )
            return user_id

    def verify_user(self, login_id: str, secret: str) -> bool:
        with self._lock:
            record = self._node_at(_CREDENTIALS_PREFIX + (login_id,))
        if record is _MISSING:
            return False
        digest = hashlib.pbkdf2_hmac(
            "sha256", secret.encode(), bytes.fromhex(record["salt"]), record["iterations"]
        )
        return hmac.compare_digest(digest.hex(), record["hash"])

    def user_id_for(self, login_id: str) -> str:
        with self._lock:
            record = self._node_at(_CREDENTIALS_PREFIX + (login_id,))
        if record is _MISSING:
            raise NotFound(f"unknown login id: {login_id}")
        return record["user_id"]
