import type { Crumb, LayerTile } from "./types.js";

/** One rectangle of the map overlay, in both geo and viewport coordinates. */
export interface RectSpec {
  x: number;
  y: number;
  width: number;
  height: number;
  fill: string;
  stroke: string;
  title: string;
}

export interface Viewport {
  width: number;
  height: number;
}

/** Equirectangular projection: lon/lat straight to pixels. */
export function project(
  lat: number,
  lon: number,
  view: Viewport,
): { x: number; y: number } {
  return {
    x: ((lon + 180) / 360) * view.width,
    y: ((90 - lat) / 180) * view.height,
  };
}

/** Linear colour ramp from the layer's own score range; anchors get a ring. */
export function scoreColor(score: number, min: number, max: number): string {
  const t = max > min ? (score - min) / (max - min) : 1;
  const hue = Math.round(220 - 180 * t); // cold blue -> hot red
  return `hsl(${hue}, 85%, 50%)`;
}

export function layerRects(layer: LayerTile[], view: Viewport): RectSpec[] {
  if (layer.length === 0) return [];
  const scores = layer.map((t) => t.score);
  const min = Math.min(...scores);
  const max = Math.max(...scores);
  return layer.map((tile) => {
    const nw = project(tile.bounds.lat1, tile.bounds.lon0, view);
    const se = project(tile.bounds.lat0, tile.bounds.lon1, view);
    return {
      x: nw.x,
      y: nw.y,
      width: Math.max(se.x - nw.x, 2),
      height: Math.max(se.y - nw.y, 2),
      fill: scoreColor(tile.score, min, max),
      stroke: tile.isAnchor ? "#ffffff" : "none",
      title: `(${tile.col},${tile.row},${tile.season}) ${tile.score.toFixed(4)}`,
    };
  });
}

export interface PanelEntry {
  label: string;
  score: number;
  isAnchor: boolean;
}

/** List panel rows, in exactly the layer's (i.e. the response's) order. */
export function panelEntries(layer: LayerTile[]): PanelEntry[] {
  return layer.map((tile) => ({
    label: `(${tile.col}, ${tile.row}, ${tile.season})`,
    score: tile.score,
    isAnchor: tile.isAnchor,
  }));
}

export function breadcrumbLabels(breadcrumb: Crumb[]): string[] {
  return breadcrumb.map((c) => c.label);
}
