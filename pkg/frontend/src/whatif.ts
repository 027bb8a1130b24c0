import type { DirectionDeltas, WhatIfResponse } from "./types.js";

export interface DeltaRow {
  direction: string;
  baseline: number;
  hub: number;
  change: number;
}

/** Side-by-side direction rows, stable NE/NW/SW/SE order first. */
export function deltaRows(response: WhatIfResponse): DeltaRow[] {
  const order = ["NE", "NW", "SW", "SE"];
  const directions = [
    ...order.filter((d) => d in response.baseline_deltas),
    ...Object.keys(response.baseline_deltas)
      .filter((d) => !order.includes(d))
      .sort(),
  ];
  return directions.map((direction) => {
    const baseline = response.baseline_deltas[direction] ?? 0;
    const hub = response.hub_deltas[direction] ?? 0;
    return { direction, baseline, hub, change: hub - baseline };
  });
}

/** True when two delta panels agree to within float-display noise. */
export function panelsEqual(
  a: DirectionDeltas,
  b: DirectionDeltas,
  tolerance = 1e-9,
): boolean {
  const keys = new Set([...Object.keys(a), ...Object.keys(b)]);
  for (const key of keys) {
    const va = a[key];
    const vb = b[key];
    if (va === undefined || vb === undefined) return false;
    if (Math.abs(va - vb) > tolerance) return false;
  }
  return true;
}

export interface ProximityGauge {
  label: string;
  /** 0..1, how close the best achieved slot came to the recommended set */
  closeness: number;
  includedShare: number | null;
}

export function proximityGauge(response: WhatIfResponse, nFc: number): ProximityGauge {
  const prox = response.proximity;
  if (prox.best_positions.length === 0) {
    return {
      label: `initialized from ${prox.copied_from} (no episodes run)`,
      closeness: 0,
      includedShare: prox.inclusion_frequency,
    };
  }
  const best = Math.min(...prox.best_positions);
  const closeness = 1 - Math.min(best / Math.max(nFc - 1, 1), 1);
  return {
    label: `best slot ${best + 1} of ${nFc} (posterior copied from ${prox.copied_from})`,
    closeness,
    includedShare: prox.inclusion_frequency,
  };
}
