"""Shared test utilities for driving the HTTP service."""

import json
import threading
import time


def parse_sse(text: str) -> list[dict]:
    messages = []
    for line in text.splitlines():
        if line.startswith("data: "):
            messages.append(json.loads(line[len("data: "):]))
    return messages


def wait_for(predicate, timeout_s: float = 5.0, interval_s: float = 0.01):
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(interval_s)
    return False


class StreamCollector:
    """Reads a session event stream in the background.

    The test client buffers responses, so the GET only returns once the
    stream generator finishes (bounded by max_events/timeout_s).
    """

    def __init__(self, client, session_id: str, headers: dict, max_events: int, timeout_s: float):
        self.messages: list[dict] = []
        self._client = client
        self._url = f"/sessions/{session_id}/events"
        self._params = {"max_events": max_events, "timeout_s": timeout_s}
        self._headers = headers
        self._session_id = session_id
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        res = self._client.get(self._url, params=self._params, headers=self._headers)
        self.messages.extend(parse_sse(res.text))

    def __enter__(self):
        self._thread.start()
        bus = self._client.app.state.bus
        assert wait_for(lambda: bus._subscribers.get(self._session_id)), "stream never subscribed"
        return self

    def __exit__(self, *exc):
        self._thread.join(timeout=30)
        assert not self._thread.is_alive(), "event stream did not terminate"
