import { describe, expect, it } from "vitest";

import {
  buildSeries,
  polylinePoints,
  renderTrajectorySvg,
  roundsShown,
} from "../src/trajectory.js";
import type { History } from "../src/types.js";

const HISTORY: History = {
  dest_id: "D_0",
  rounds: [
    { t: 0, seed: 1, k: 3, bootstrap: true, recommended: ["FC_0"], selected: ["FC_0"] },
    { t: 1, seed: 2, k: 3, bootstrap: false, recommended: ["FC_0", "FC_1"], selected: [] },
  ],
  series: {
    FC_1: [
      { t: 1, rankpct: 0.5, posterior_mean: 0.1, theta_tilde: 0.05 },
      { t: 0, rankpct: 0.5, posterior_mean: 0.09, theta_tilde: 0.5 },
    ],
    FC_0: [
      { t: 0, rankpct: 0.9, posterior_mean: 0.5, theta_tilde: 0.9 },
      { t: 1, rankpct: 0.9, posterior_mean: 0.66, theta_tilde: 0.7 },
    ],
  },
};

describe("buildSeries", () => {
  it("orders origins and sorts points by round", () => {
    const series = buildSeries(HISTORY);
    expect(series.map((s) => s.originId)).toEqual(["FC_0", "FC_1"]);
    expect(series[1]?.points.map((p) => p.t)).toEqual([0, 1]);
  });

  it("restricts to requested origins", () => {
    const series = buildSeries(HISTORY, ["FC_1"]);
    expect(series).toHaveLength(1);
    expect(series[0]?.originId).toBe("FC_1");
  });

  it("reports the applied rounds", () => {
    expect(roundsShown(HISTORY)).toEqual([0, 1]);
  });
});

describe("polylinePoints", () => {
  const layout = { width: 100, height: 100, padding: 10 };

  it("maps the value range onto the inner viewport", () => {
    const points = [
      { t: 0, rankpct: 0.0, posterior_mean: 0, theta_tilde: 0 },
      { t: 1, rankpct: 1.0, posterior_mean: 0, theta_tilde: 0 },
    ];
    const path = polylinePoints(points, (p) => p.rankpct, layout);
    expect(path).toBe("10.00,90.00 90.00,10.00");
  });

  it("collapses a single point to the horizontal centre", () => {
    const points = [{ t: 4, rankpct: 0.5, posterior_mean: 0, theta_tilde: 0 }];
    const path = polylinePoints(points, (p) => p.rankpct, layout);
    expect(path).toBe("50.00,50.00");
  });

  it("is empty with no points", () => {
    expect(polylinePoints([], (p) => p.rankpct, layout)).toBe("");
  });
});

describe("renderTrajectorySvg", () => {
  it("draws a solid and a dashed polyline per arc", () => {
    const svg = renderTrajectorySvg(buildSeries(HISTORY));
    expect(svg).toContain('data-series="FC_0:rankpct"');
    expect(svg).toContain('data-series="FC_0:probability"');
    expect(svg).toContain('data-series="FC_1:rankpct"');
    expect(svg.match(/stroke-dasharray/g)).toHaveLength(2);
  });

  it("every plotted value is traceable to an input point", () => {
    // the dashed probability line is posterior_mean * rankpct, nothing else
    const series = buildSeries(HISTORY, ["FC_0"]);
    const svg = renderTrajectorySvg(series, { width: 100, height: 100, padding: 0 });
    const dashed = /stroke-dasharray="5 3" points="([^"]+)"/.exec(svg);
    const ys = dashed![1]!.split(" ").map((pair) => Number(pair.split(",")[1]));
    const expected = HISTORY.series.FC_0!.map(
      (p) => (1 - p.posterior_mean * p.rankpct) * 100,
    );
    ys.forEach((y, i) => expect(y).toBeCloseTo(expected[i]!, 1));
  });
});
