import { describe, expect, it } from "vitest";

import { projector, renderMapSvg, type MapNode } from "../src/map.js";

const NODES: MapNode[] = [
  { id: "FC_0", lat: 30.0, lon: -120.0, kind: "origin" },
  { id: "FC_1", lat: 40.0, lon: -100.0, kind: "origin" },
  { id: "D_0", lat: 35.0, lon: -80.0, kind: "destination" },
];

describe("projector", () => {
  it("maps extremes onto the padded viewport with north up", () => {
    const project = projector(NODES, { width: 200, height: 100, padding: 10 });
    const sw = project(30.0, -120.0);
    const ne = project(40.0, -80.0);
    expect(sw.x).toBeCloseTo(10);
    expect(sw.y).toBeCloseTo(90); // lowest latitude renders at the bottom
    expect(ne.x).toBeCloseTo(190);
    expect(ne.y).toBeCloseTo(10);
  });
});

describe("renderMapSvg", () => {
  it("draws one dot per node and one line per arc", () => {
    const svg = renderMapSvg(NODES, [
      { from: "FC_0", to: "D_0", selected: true },
      { from: "FC_1", to: "D_0", selected: false },
    ]);
    expect(svg.match(/<circle/g)).toHaveLength(3);
    expect(svg).toContain('data-arc="FC_0->D_0"');
    expect(svg).toContain('data-arc="FC_1->D_0"');
    expect(svg).toContain('stroke="#059669"'); // selected arc highlighted
  });

  it("skips arcs whose endpoints are unknown", () => {
    const svg = renderMapSvg(NODES, [{ from: "FC_9", to: "D_0", selected: false }]);
    expect(svg).not.toContain("data-arc");
  });

  it("renders an empty frame with no nodes", () => {
    const svg = renderMapSvg([], []);
    expect(svg.startsWith("<svg")).toBe(true);
  });
});
