"""Sampling kernels for the broadcast simulator.

The hot loops (Poisson arrival generation, Monte-Carlo detection trials) are
compiled with numba when available; setting MARGE_NO_NUMBA=1 selects the
pure-Python twins instead. Both paths implement the identical algorithm over
the same bit stream and produce identical output arrays, so simulated logs
are reproducible regardless of backend (see benchmarks/bench_kernels.py for
the speed comparison).

RNG specification (fixed so logs reproduce across implementations):

* Bit stream: splitmix64. State advances by 0x9E3779B97F4A7C15 per draw; the
  output is the advanced state passed through the finalizer
  ``z ^= z>>30; z *= 0xBF58476D1CE4E5B9; z ^= z>>27; z *= 0x94D049BB133111EB;
  z ^= z>>31`` (all mod 2^64).
* Unit draw in (0, 1]: ``((out >> 11) + 1) * 2**-53``.
* Exponential inter-arrival: ``-ln(u) / rate``.
* Normal: Marsaglia polar, two unit draws per attempt, rejecting s outside
  (0, 1), returning only ``v1 * sqrt(-2 ln(s) / s)`` (the second root is
  discarded to keep the draw count deterministic).
* Beacon stream seed: ``mix64(seed + (index + 1) * 0x9E3779B97F4A7C15)``.
* Detection trial seed: ``seed + trial_index`` (mod 2^64).
"""

from __future__ import annotations

import math
import os

import numpy as np

U64_MASK = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_UNIT = 2.0**-53


def mix64(z: int) -> int:
    """splitmix64 output finalizer."""
    z &= U64_MASK
    z = ((z ^ (z >> 30)) * _MIX_A) & U64_MASK
    z = ((z ^ (z >> 27)) * _MIX_B) & U64_MASK
    return z ^ (z >> 31)


def beacon_stream_seed(seed: int, index: int) -> int:
    """Seed of the independent stream for beacon number ``index`` of a trip."""
    return mix64((seed + (index + 1) * GOLDEN_GAMMA) & U64_MASK)


class SplitMix64:
    """Reference generator; the kernels inline the same recurrence."""

    def __init__(self, seed: int):
        self._state = seed & U64_MASK

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN_GAMMA) & U64_MASK
        return mix64(self._state)

    def next_unit(self) -> float:
        return ((self.next_u64() >> 11) + 1) * _UNIT


# --- pure-Python kernels -------------------------------------------------------

def _beacon_events_py(
    stream_seed: int,
    rate_per_ms: float,
    duration_ms: float,
    rssi_mean: float,
    rssi_std: float,
) -> tuple[np.ndarray, np.ndarray]:
    state = stream_seed & U64_MASK
    t = 0.0
    t_out: list[int] = []
    rssi_out: list[int] = []
    while True:
        state = (state + GOLDEN_GAMMA) & U64_MASK
        u = ((mix64(state) >> 11) + 1) * _UNIT
        t += -math.log(u) / rate_per_ms
        if t > duration_ms:
            break
        while True:
            state = (state + GOLDEN_GAMMA) & U64_MASK
            ua = ((mix64(state) >> 11) + 1) * _UNIT
            state = (state + GOLDEN_GAMMA) & U64_MASK
            ub = ((mix64(state) >> 11) + 1) * _UNIT
            v1 = 2.0 * ua - 1.0
            v2 = 2.0 * ub - 1.0
            s = v1 * v1 + v2 * v2
            if 0.0 < s < 1.0:
                break
        g = v1 * math.sqrt(-2.0 * math.log(s) / s)
        level = math.floor(rssi_mean + rssi_std * g + 0.5)
        if level > 0:
            level = 0
        if level < -127:
            level = -127
        t_out.append(int(t))
        rssi_out.append(int(level))
    return np.asarray(t_out, np.int64), np.asarray(rssi_out, np.int64)


def _detection_hits_py(seed: int, rate_per_s: float, window_s: float, trials: int) -> int:
    hits = 0
    for i in range(trials):
        state = ((seed + i) + GOLDEN_GAMMA) & U64_MASK
        u = ((mix64(state) >> 11) + 1) * _UNIT
        if -math.log(u) / rate_per_s <= window_s:
            hits += 1
    return hits


# --- numba kernels -------------------------------------------------------------

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is an install-time dependency
    njit = None

if njit is not None:

    @njit(cache=True)
    def _mix64_nb(z):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    @njit(cache=True)
    def _next_unit_nb(state):
        state = state + np.uint64(0x9E3779B97F4A7C15)
        z = _mix64_nb(state)
        u = np.float64((z >> np.uint64(11)) + np.uint64(1)) * 2.0**-53
        return state, u

    @njit(cache=True)
    def _beacon_events_fill_nb(stream_seed, rate_per_ms, duration_ms, rssi_mean, rssi_std, t_out, rssi_out):
        state = stream_seed
        t = 0.0
        n = 0
        cap = t_out.shape[0]
        while True:
            state, u = _next_unit_nb(state)
            t += -math.log(u) / rate_per_ms
            if t > duration_ms:
                return n
            if n >= cap:
                return -1  # caller retries with a larger buffer
            while True:
                state, ua = _next_unit_nb(state)
                state, ub = _next_unit_nb(state)
                v1 = 2.0 * ua - 1.0
                v2 = 2.0 * ub - 1.0
                s = v1 * v1 + v2 * v2
                if 0.0 < s < 1.0:
                    break
            g = v1 * math.sqrt(-2.0 * math.log(s) / s)
            level = math.floor(rssi_mean + rssi_std * g + 0.5)
            if level > 0.0:
                level = 0.0
            if level < -127.0:
                level = -127.0
            t_out[n] = int(t)
            rssi_out[n] = int(level)
            n += 1

    @njit(cache=True)
    def _detection_hits_nb(seed, rate_per_s, window_s, trials):
        hits = 0
        for i in range(trials):
            state = seed + np.uint64(i)
            _, u = _next_unit_nb(state)
            if -math.log(u) / rate_per_s <= window_s:
                hits += 1
        return hits

    def _beacon_events_numba(stream_seed, rate_per_ms, duration_ms, rssi_mean, rssi_std):
        expected = rate_per_ms * duration_ms
        cap = int(expected + 12.0 * math.sqrt(expected + 1.0)) + 64
        while True:
            t_out = np.empty(cap, np.int64)
            rssi_out = np.empty(cap, np.int64)
            n = _beacon_events_fill_nb(
                np.uint64(stream_seed), rate_per_ms, duration_ms, rssi_mean, rssi_std, t_out, rssi_out
            )
            if n >= 0:
                return t_out[:n], rssi_out[:n]
            cap *= 2

    def _detection_hits_numba(seed, rate_per_s, window_s, trials):
        return int(_detection_hits_nb(np.uint64(seed), rate_per_s, window_s, trials))


def _numba_enabled() -> bool:
    if njit is None:
        return False
    return os.environ.get("MARGE_NO_NUMBA", "").lower() not in ("1", "true", "yes")


#: name -> (beacon_events, detection_hits); both entries present when numba is
#: importable, so the benchmark can time the two paths side by side.
IMPLEMENTATIONS: dict[str, tuple] = {"python": (_beacon_events_py, _detection_hits_py)}
if njit is not None:
    IMPLEMENTATIONS["numba"] = (_beacon_events_numba, _detection_hits_numba)

ACTIVE_BACKEND = "numba" if _numba_enabled() else "python"
beacon_events, detection_hits = IMPLEMENTATIONS[ACTIVE_BACKEND]


def warmup() -> None:
    """Trigger JIT compilation (no-op on the Python backend)."""
    beacon_events(1, 1.0 / 60_000.0, 60_000.0, -75.0, 6.0)
    detection_hits(1, 0.125, 1.0, 8)
