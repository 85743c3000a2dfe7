/** Timeline scrubber model: fetch preview frames on demand and cache them
 * per (session version, frame, map type). Scrubbing to an already-seen
 * frame never refetches; any session mutation invalidates the cache. */

import type { PreviewItem, PreviewResponse } from "./api.js";

/** The slice of the service client the timeline needs (structural). */
export interface PreviewApi {
  preview(
    id: string, frames: number[], resolution: [number, number], maps: string[],
  ): Promise<PreviewResponse>;
  imageUrl(path: string): string;
}

export interface FramePreview {
  frame: number;
  url: string;
  hash: string;
  polylines: [number, number][][];
}

export class Timeline {
  current = 0;
  mapType = "semantic";
  private cache = new Map<string, FramePreview>();
  private cachedVersion = -1;
  private pending = new Map<string, Promise<FramePreview>>();

  constructor(
    private api: PreviewApi,
    private sessionId: string,
    public frameCount: number,
    public resolution: [number, number] = [256, 256],
  ) {}

  private key(version: number, frame: number, map: string): string {
    return `${version}:${frame}:${map}`;
  }

  /** Drop cached previews when the session state changes. */
  invalidate(version: number): void {
    if (version !== this.cachedVersion) {
      this.cache.clear();
      this.pending.clear();
      this.cachedVersion = version;
    }
  }

  get cacheSize(): number {
    return this.cache.size;
  }

  scrubTo(frame: number): number {
    this.current = Math.max(0, Math.min(this.frameCount - 1, Math.round(frame)));
    return this.current;
  }

  /** Preview for one frame at the session's current version. */
  async preview(version: number, frame: number): Promise<FramePreview> {
    this.invalidate(version);
    const key = this.key(version, frame, this.mapType);
    const hit = this.cache.get(key);
    if (hit) return hit;
    const inflight = this.pending.get(key);
    if (inflight) return inflight;

    const task = this.api
      .preview(this.sessionId, [frame], this.resolution, [this.mapType])
      .then((resp) => {
        const item: PreviewItem | undefined = resp.items.find(
          (i) => i.frame === frame && i.map === this.mapType,
        );
        if (!item) throw new Error(`server returned no ${this.mapType} preview for frame ${frame}`);
        const out: FramePreview = {
          frame,
          url: this.api.imageUrl(item.url),
          hash: item.hash,
          polylines: resp.polylines[String(frame)] ?? [],
        };
        this.cache.set(key, out);
        this.pending.delete(key);
        return out;
      })
      .catch((err) => {
        this.pending.delete(key);
        throw err;
      });
    this.pending.set(key, task);
    return task;
  }
}
