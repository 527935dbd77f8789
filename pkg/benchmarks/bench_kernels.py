"""Benchmark the simulator's sampling kernels: numba JIT vs pure Python.

Both backends implement the identical algorithm over the same bit stream
(outputs are asserted equal before timing). Run:

    python3 benchmarks/bench_kernels.py [--trips N] [--mc-trials N]
"""

import argparse
import time

import numpy as np

from marge import _kernels

RATE_PER_MS = 8.33 / 60_000.0
DURATION_MS = 24 * 60_000.0


def time_trips(beacon_events, n_trips):
    started = time.perf_counter()
    total = 0
    for seed in range(n_trips):
        t, _ = beacon_events(_kernels.beacon_stream_seed(seed, 0), RATE_PER_MS, DURATION_MS, -75.0, 6.0)
        total += len(t)
    return time.perf_counter() - started, total


def time_detection(detection_hits, trials):
    started = time.perf_counter()
    hits = detection_hits(0, 7.5 / 60.0, 60.0, trials)
    return time.perf_counter() - started, hits


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trips", type=int, default=2000)
    parser.add_argument("--mc-trials", type=int, default=2_000_000)
    args = parser.parse_args()

    backends = dict(_kernels.IMPLEMENTATIONS)
    if "numba" in backends:
        # warm the JIT outside the timed region
        backends["numba"][0](1, RATE_PER_MS, 60_000.0, -75.0, 6.0)
        backends["numba"][1](1, 0.125, 1.0, 8)

    # cross-check: identical outputs before timing
    if len(backends) == 2:
        seed = _kernels.beacon_stream_seed(42, 0)
        py = backends["python"][0](seed, RATE_PER_MS, DURATION_MS, -75.0, 6.0)
        nb = backends["numba"][0](seed, RATE_PER_MS, DURATION_MS, -75.0, 6.0)
        assert np.array_equal(py[0], nb[0]) and np.array_equal(py[1], nb[1]), "backend outputs differ"
        print("backend parity check: identical output streams\n")

    rows = []
    for name, (beacon_events, detection_hits) in backends.items():
        trip_s, events = time_trips(beacon_events, args.trips)
        mc_s, hits = time_detection(detection_hits, args.mc_trials)
        rows.append((name, trip_s, events / trip_s, mc_s, args.mc_trials / mc_s))

    print(f"{'backend':<8} {'trips(s)':>9} {'events/s':>12} {'mc(s)':>8} {'trials/s':>12}")
    for name, trip_s, eps, mc_s, tps in rows:
        print(f"{name:<8} {trip_s:>9.3f} {eps:>12,.0f} {mc_s:>8.3f} {tps:>12,.0f}")
    if len(rows) == 2:
        by_name = {r[0]: r for r in rows}
        speedup_trips = by_name["python"][1] / by_name["numba"][1]
        speedup_mc = by_name["python"][3] / by_name["numba"][3]
        print(f"\nnumba speedup: {speedup_trips:.1f}x (trip generation), {speedup_mc:.1f}x (detection trials)")


if __name__ == "__main__":
    main()
