/** Editor keypoint state: optimistic local edits over a history of
 * server-confirmed snapshots. Undo/redo restore confirmed states only, so
 * the canvas can never drift from what the server actually accepted. */

import type { Keypoint } from "./api.js";

export const HIT_RADIUS_PX = 8;

function clone(kps: readonly Keypoint[]): Keypoint[] {
  return kps.map((k) => ({ ...k }));
}

export class EditorState {
  /** Local, optimistic keypoints (what the user sees while dragging). */
  local: Keypoint[] = [];
  /** Stack of server-confirmed snapshots; the last entry is current. */
  private confirmed: Keypoint[][] = [];
  private redoStack: Keypoint[][] = [];

  get confirmedCurrent(): Keypoint[] | null {
    return this.confirmed.length ? clone(this.confirmed[this.confirmed.length - 1]) : null;
  }

  get canUndo(): boolean {
    return this.confirmed.length > 1;
  }

  get canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  addKeypoint(u: number, v: number, frame?: number | null): void {
    this.local.push({ u, v, frame: frame ?? null });
  }

  moveKeypoint(index: number, u: number, v: number): void {
    const kp = this.local[index];
    if (!kp) throw new RangeError(`no keypoint at index ${index}`);
    kp.u = u;
    kp.v = v;
  }

  deleteKeypoint(index: number): void {
    if (index < 0 || index >= this.local.length) {
      throw new RangeError(`no keypoint at index ${index}`);
    }
    this.local.splice(index, 1);
  }

  /** Index of the keypoint within HIT_RADIUS_PX of (u, v), or -1. */
  hitTest(u: number, v: number, radius = HIT_RADIUS_PX): number {
    let best = -1;
    let bestDist = radius;
    this.local.forEach((kp, i) => {
      const d = Math.hypot(kp.u - u, kp.v - v);
      if (d <= bestDist) {
        best = i;
        bestDist = d;
      }
    });
    return best;
  }

  /** Record a server acknowledgement of the given keypoints. */
  confirm(kps: readonly Keypoint[]): void {
    const snap = clone(kps);
    const top = this.confirmed[this.confirmed.length - 1];
    if (top && JSON.stringify(top) === JSON.stringify(snap)) return; // no-op ack
    this.confirmed.push(snap);
    this.redoStack = [];
  }

  /** Revert to the previous confirmed state; returns it for re-submission. */
  undo(): Keypoint[] | null {
    if (!this.canUndo) return null;
    this.redoStack.push(this.confirmed.pop()!);
    const prev = this.confirmedCurrent!;
    this.local = clone(prev);
    return prev;
  }

  /** Reapply an undone confirmed state; returns it for re-submission. */
  redo(): Keypoint[] | null {
    const next = this.redoStack.pop();
    if (!next) return null;
    this.confirmed.push(next);
    this.local = clone(next);
    return clone(next);
  }
}
