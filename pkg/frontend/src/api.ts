/** Typed client for the edit-service HTTP API. All geometry math happens
 * server-side; this client only moves JSON and image URLs around. */

export interface Keypoint {
  u: number;
  v: number;
  frame?: number | null;
}

export interface SessionSummary {
  id: string;
  version: number;
  frame_count: number;
  fps: number;
  camera: { width: number; height: number; [k: string]: unknown };
  first_frame_image: string;
}

export interface TrajectoryResponse {
  version: number;
  points2d: [number, number][];
  path3d: [number, number, number][];
  headings: number[];
  rescale_factor: number;
  degenerate_frames: number[];
  warnings: string[];
}

export interface ClipInfo {
  id: string;
  tags: string[];
  frame_count: number;
  fps: number;
  loopable: boolean;
}

export interface ClipResponse {
  version: number;
  clip: {
    id: string;
    tags: string[];
    source_frames: number;
    target_frames: number;
    blend_window: number;
  };
}

export interface PreviewItem {
  frame: number;
  map: string;
  hash: string;
  url: string;
}

export interface PreviewResponse {
  version: number;
  items: PreviewItem[];
  polylines: Record<string, [number, number][][]>;
}

export interface ExportResponse {
  version: number;
  sequence_file: string;
  render_dir: string;
  manifest: { frame_count: number; hashes: Record<string, string>; [k: string]: unknown };
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class EditServiceClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const doc = (await resp.json()) as { detail?: unknown };
        if (doc.detail !== undefined) detail = JSON.stringify(doc.detail);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  createSession(bundlePath: string, assetPath: string): Promise<SessionSummary> {
    return this.request("POST", "/sessions", {
      bundle_path: bundlePath,
      asset_path: assetPath,
    });
  }

  getSession(id: string): Promise<{ id: string; version: number; frame_count: number }> {
    return this.request("GET", `/sessions/${id}`);
  }

  putTrajectory(id: string, version: number, keypoints: Keypoint[]): Promise<TrajectoryResponse> {
    return this.request("PUT", `/sessions/${id}/trajectory`, { version, keypoints });
  }

  putClip(
    id: string,
    version: number,
    clipId: string,
    nFrames: number | null,
    blendWindow: number,
  ): Promise<ClipResponse> {
    return this.request("PUT", `/sessions/${id}/clip`, {
      version,
      clip_id: clipId,
      n_frames: nFrames,
      blend_window: blendWindow,
    });
  }

  listClips(id: string): Promise<{ clips: ClipInfo[] }> {
    return this.request("GET", `/sessions/${id}/clips`);
  }

  preview(id: string, frames: number[], resolution: [number, number], maps: string[]): Promise<PreviewResponse> {
    return this.request("POST", `/sessions/${id}/preview`, { frames, resolution, maps });
  }

  exportSession(id: string, outDir: string, resolution: [number, number]): Promise<ExportResponse> {
    return this.request("POST", `/sessions/${id}/export`, {
      out_dir: outDir,
      resolution,
    });
  }

  imageUrl(path: string): string {
    return this.baseUrl + path;
  }
}
