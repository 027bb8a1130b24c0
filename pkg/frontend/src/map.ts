// Geographic panel: nodes by lat/lon with the recommended arcs drawn as
// lines. Purely presentational; all numbers come from the API.

export interface MapNode {
  id: string;
  lat: number;
  lon: number;
  kind: "origin" | "destination";
}

export interface MapViewport {
  width: number;
  height: number;
  padding: number;
}

export const DEFAULT_VIEWPORT: MapViewport = { width: 480, height: 300, padding: 20 };

export interface Projected {
  x: number;
  y: number;
}

export function projector(
  nodes: MapNode[],
  viewport: MapViewport = DEFAULT_VIEWPORT,
): (lat: number, lon: number) => Projected {
  const lats = nodes.map((n) => n.lat);
  const lons = nodes.map((n) => n.lon);
  const latMin = Math.min(...lats);
  const latMax = Math.max(...lats);
  const lonMin = Math.min(...lons);
  const lonMax = Math.max(...lons);
  const latSpan = Math.max(latMax - latMin, 1e-9);
  const lonSpan = Math.max(lonMax - lonMin, 1e-9);
  const innerW = viewport.width - 2 * viewport.padding;
  const innerH = viewport.height - 2 * viewport.padding;
  return (lat, lon) => ({
    x: viewport.padding + ((lon - lonMin) / lonSpan) * innerW,
    // north up
    y: viewport.padding + (1 - (lat - latMin) / latSpan) * innerH,
  });
}

export function renderMapSvg(
  nodes: MapNode[],
  arcs: { from: string; to: string; selected: boolean }[],
  viewport: MapViewport = DEFAULT_VIEWPORT,
): string {
  if (nodes.length === 0) {
    return `<svg viewBox="0 0 ${viewport.width} ${viewport.height}" xmlns="http://www.w3.org/2000/svg"></svg>`;
  }
  const project = projector(nodes, viewport);
  const byId = new Map(nodes.map((n) => [n.id, n]));
  const lines = arcs
    .map((arc) => {
      const from = byId.get(arc.from);
      const to = byId.get(arc.to);
      if (!from || !to) return "";
      const a = project(from.lat, from.lon);
      const b = project(to.lat, to.lon);
      const stroke = arc.selected ? "#059669" : "#9ca3af";
      return `<line x1="${a.x.toFixed(1)}" y1="${a.y.toFixed(1)}" x2="${b.x.toFixed(1)}" y2="${b.y.toFixed(1)}" stroke="${stroke}" stroke-width="${arc.selected ? 2 : 1}" data-arc="${arc.from}->${arc.to}"/>`;
    })
    .join("");
  const dots = nodes
    .map((n) => {
      const p = project(n.lat, n.lon);
      const fill = n.kind === "origin" ? "#2563eb" : "#dc2626";
      const r = n.kind === "origin" ? 4 : 5;
      return `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="${r}" fill="${fill}" data-node="${n.id}"><title>${n.id}</title></circle>`;
    })
    .join("");
  return (
    `<svg viewBox="0 0 ${viewport.width} ${viewport.height}" xmlns="http://www.w3.org/2000/svg">` +
    `<rect x="0" y="0" width="${viewport.width}" height="${viewport.height}" fill="#f8fafc"/>` +
    lines +
    dots +
    "</svg>"
  );
}
