// Simulated bus ride: a client-side beacon feed standing in for physical
// movement. Emits batches of scan events at a Poisson-ish rate for the
// current gate's beacon, with monotonically increasing timestamps.

import type { ScanEventWire } from "./types.js";

export interface RideBeacon {
  uuid: string;
  major: number;
  minor: number;
}

// mulberry32: tiny seeded generator so demo rides are reproducible.
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let z = state;
    z = Math.imul(z ^ (z >>> 15), z | 1);
    z ^= z + Math.imul(z ^ (z >>> 7), z | 61);
    return ((z ^ (z >>> 14)) >>> 0) / 4294967296;
  };
}

export class RideGenerator {
  private nextArrivalMs: number;

  constructor(
    private readonly rng: () => number,
    public readonly beacon: RideBeacon,
    private readonly ratePerMin: number,
    private readonly rssiMean = -70,
    private readonly rssiJitter = 8,
  ) {
    this.nextArrivalMs = this.drawGap(0);
  }

  private drawGap(fromMs: number): number {
    const ratePerMs = this.ratePerMin / 60_000;
    const u = Math.max(this.rng(), 1e-12);
    return fromMs + -Math.log(u) / ratePerMs;
  }

  // All broadcasts that land in [fromMs, toMs), timestamps strictly increasing.
  batch(fromMs: number, toMs: number): ScanEventWire[] {
    const events: ScanEventWire[] = [];
    while (this.nextArrivalMs < toMs) {
      if (this.nextArrivalMs >= fromMs) {
        const jitter = Math.round((this.rng() * 2 - 1) * this.rssiJitter);
        const rssi = Math.max(-127, Math.min(0, this.rssiMean + jitter));
        events.push({
          t_ms: Math.floor(this.nextArrivalMs),
          uuid: this.beacon.uuid,
          major: this.beacon.major,
          minor: this.beacon.minor,
          rssi,
        });
      }
      this.nextArrivalMs = this.drawGap(this.nextArrivalMs);
    }
    return events;
  }
}
