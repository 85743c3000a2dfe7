/** Render-primitive builders for the editing canvas.
 *
 * Pure functions returning drawable primitives keep the canvas glue thin
 * and the visual rules testable: the optimistic local polyline and the
 * authoritative server overlay are styled distinctly so a user always sees
 * which curve the server has actually computed.
 */

import type { Keypoint } from "./api.js";

export interface Polyline {
  kind: "polyline";
  points: [number, number][];
  color: string;
  width: number;
  dashed: boolean;
}

export interface Disc {
  kind: "disc";
  x: number;
  y: number;
  radius: number;
  color: string;
  label?: string;
}

export type Primitive = Polyline | Disc;

export const LOCAL_STYLE = { color: "#f2a93b", width: 1.5, dashed: true };
export const SERVER_STYLE = { color: "#3bd6c6", width: 2.5, dashed: false };
export const SKELETON_STYLE = { color: "#e8e8e8", width: 1, dashed: false };

export function localPolyline(keypoints: readonly Keypoint[]): Primitive[] {
  const prims: Primitive[] = [];
  if (keypoints.length >= 2) {
    prims.push({
      kind: "polyline",
      points: keypoints.map((k) => [k.u, k.v]),
      ...LOCAL_STYLE,
    });
  }
  for (const k of keypoints) {
    prims.push({
      kind: "disc",
      x: k.u,
      y: k.v,
      radius: 4,
      color: LOCAL_STYLE.color,
      label: k.frame != null ? `f${k.frame}` : undefined,
    });
  }
  return prims;
}

export function serverOverlay(points2d: readonly [number, number][]): Primitive[] {
  if (points2d.length < 2) return [];
  return [
    {
      kind: "polyline",
      points: points2d.map((p) => [p[0], p[1]]),
      ...SERVER_STYLE,
    },
  ];
}

export function skeletonOverlay(segments: readonly [number, number][][]): Primitive[] {
  return segments.map((seg) => ({
    kind: "polyline",
    points: seg.map((p) => [p[0], p[1]]),
    ...SKELETON_STYLE,
  }));
}

/** Scale image-space primitives into canvas coordinates. */
export function scalePrimitives(prims: Primitive[], sx: number, sy: number): Primitive[] {
  return prims.map((p) =>
    p.kind === "polyline"
      ? { ...p, points: p.points.map(([x, y]) => [x * sx, y * sy] as [number, number]) }
      : { ...p, x: p.x * sx, y: p.y * sy },
  );
}
