import type { History, HistoryPoint } from "./types.js";

export interface TrajectorySeries {
  originId: string;
  points: HistoryPoint[];
}

/** Per-arc series in a stable order, optionally restricted to some origins. */
export function buildSeries(history: History, origins?: string[]): TrajectorySeries[] {
  const wanted = origins ?? Object.keys(history.series).sort();
  return wanted
    .filter((id) => id in history.series)
    .map((originId) => ({
      originId,
      points: [...(history.series[originId] ?? [])].sort((a, b) => a.t - b.t),
    }));
}

export function roundsShown(history: History): number[] {
  return history.rounds.map((r) => r.t);
}

export interface ChartLayout {
  width: number;
  height: number;
  padding: number;
}

export const DEFAULT_LAYOUT: ChartLayout = { width: 480, height: 200, padding: 24 };

/**
 * Map a series of (t, value in [0, 1]) onto SVG polyline coordinates.
 * The t axis spans [tMin, tMax]; a single point collapses to the centre.
 */
export function polylinePoints(
  points: HistoryPoint[],
  accessor: (p: HistoryPoint) => number,
  layout: ChartLayout = DEFAULT_LAYOUT,
  tDomain?: [number, number],
): string {
  if (points.length === 0) return "";
  const ts = points.map((p) => p.t);
  const [tMin, tMax] = tDomain ?? [Math.min(...ts), Math.max(...ts)];
  const span = Math.max(tMax - tMin, 1e-9);
  const innerW = layout.width - 2 * layout.padding;
  const innerH = layout.height - 2 * layout.padding;
  return points
    .map((p) => {
      const x =
        points.length === 1 && tMax === tMin
          ? layout.width / 2
          : layout.padding + ((p.t - tMin) / span) * innerW;
      const value = Math.min(Math.max(accessor(p), 0), 1);
      const y = layout.padding + (1 - value) * innerH;
      return `${x.toFixed(2)},${y.toFixed(2)}`;
    })
    .join(" ");
}

const PALETTE = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed", "#0891b2"];

export function seriesColor(index: number): string {
  return PALETTE[index % PALETTE.length] ?? "#2563eb";
}

/**
 * Chart markup: rank percentile as a solid line, the adjusted connection
 * value as a dashed line, one color per arc. Pure string SVG so it renders
 * identically in tests and the browser.
 */
export function renderTrajectorySvg(
  series: TrajectorySeries[],
  layout: ChartLayout = DEFAULT_LAYOUT,
): string {
  const ts = series.flatMap((s) => s.points.map((p) => p.t));
  const domain: [number, number] =
    ts.length > 0 ? [Math.min(...ts), Math.max(...ts)] : [0, 1];
  const lines = series
    .map((s, i) => {
      const color = seriesColor(i);
      const solid = polylinePoints(s.points, (p) => p.rankpct, layout, domain);
      const dashed = polylinePoints(
        s.points,
        (p) => p.posterior_mean * p.rankpct,
        layout,
        domain,
      );
      return (
        `<polyline fill="none" stroke="${color}" stroke-width="1.5" points="${solid}" data-series="${s.originId}:rankpct"/>` +
        `<polyline fill="none" stroke="${color}" stroke-width="1.5" stroke-dasharray="5 3" points="${dashed}" data-series="${s.originId}:probability"/>`
      );
    })
    .join("");
  return (
    `<svg viewBox="0 0 ${layout.width} ${layout.height}" xmlns="http://www.w3.org/2000/svg">` +
    `<rect x="0" y="0" width="${layout.width}" height="${layout.height}" fill="#fafafa"/>` +
    lines +
    "</svg>"
  );
}
