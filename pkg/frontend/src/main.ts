/** DOM glue for the trajectory studio. All logic lives in the tested
 * modules (state, sync, timeline, overlay); this file only wires events. */

import { EditServiceClient, type SessionSummary, type TrajectoryResponse } from "./api.js";
import { EditorState } from "./state.js";
import { TrajectorySync } from "./sync.js";
import { Timeline } from "./timeline.js";
import {
  localPolyline,
  scalePrimitives,
  serverOverlay,
  skeletonOverlay,
  type Primitive,
} from "./overlay.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class StudioApp {
  private api!: EditServiceClient;
  private session!: SessionSummary;
  private state = new EditorState();
  private sync!: TrajectorySync;
  private timeline!: Timeline;
  private serverPath: [number, number][] = [];
  private background: HTMLImageElement | null = null;
  private previewImage: HTMLImageElement | null = null;
  private skeleton: [number, number][][] = [];
  private dragIndex = -1;

  private canvas = el<HTMLCanvasElement>("editor-canvas");
  private ctx = this.canvas.getContext("2d")!;

  async connect(): Promise<void> {
    const base = el<HTMLInputElement>("server-url").value.replace(/\/$/, "");
    this.api = new EditServiceClient(base);
    this.session = await this.api.createSession(
      el<HTMLInputElement>("bundle-path").value,
      el<HTMLInputElement>("asset-path").value,
    );
    this.sync = new TrajectorySync(this.api, this.session.id, this.session.version, {
      onAuthoritative: (resp, sent) => this.onAuthoritative(resp, sent),
      onDiscarded: () => undefined,
      onError: (err) => this.setStatus(`error: ${String(err)}`),
    });
    this.timeline = new Timeline(this.api, this.session.id, this.session.frame_count);

    const slider = el<HTMLInputElement>("timeline");
    slider.max = String(this.session.frame_count - 1);
    slider.value = "0";
    el<HTMLSpanElement>("frame-label").textContent = `0 / ${this.session.frame_count - 1}`;

    this.canvas.width = this.session.camera.width;
    this.canvas.height = this.session.camera.height;

    this.background = new Image();
    this.background.onload = () => this.draw();
    this.background.src = this.api.imageUrl(this.session.first_frame_image);

    await this.loadClips();
    this.setStatus(`session ${this.session.id}: ${this.session.frame_count} frames`);
    el<HTMLDivElement>("workspace").style.display = "grid";
  }

  private async loadClips(): Promise<void> {
    const { clips } = await this.api.listClips(this.session.id);
    const select = el<HTMLSelectElement>("clip-select");
    select.innerHTML = '<option value="">(scene motion)</option>';
    for (const clip of clips) {
      const opt = document.createElement("option");
      opt.value = clip.id;
      opt.textContent = `${clip.id} (${clip.frame_count}f, ${clip.tags.join("/")})`;
      select.appendChild(opt);
    }
  }

  private onAuthoritative(resp: TrajectoryResponse, sent: { u: number; v: number }[]): void {
    this.state.confirm(sent);
    this.serverPath = resp.points2d;
    this.timeline.invalidate(resp.version);
    const warn = el<HTMLUListElement>("warnings");
    warn.innerHTML = "";
    const lines = [
      `rescale factor ${resp.rescale_factor.toFixed(3)}`,
      ...resp.warnings,
    ];
    for (const text of lines) {
      const li = document.createElement("li");
      li.textContent = text;
      warn.appendChild(li);
    }
    void this.refreshPreview();
    this.draw();
  }

  private submit(immediate = false): void {
    const kps = this.state.local.map((k) => ({ ...k }));
    if (kps.length < 2) return;
    if (immediate) void this.sync.proposeImmediate(kps);
    else this.sync.propose(kps);
  }

  // ---- canvas interaction ------------------------------------------------

  private canvasPoint(ev: MouseEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    const sx = this.canvas.width / rect.width;
    const sy = this.canvas.height / rect.height;
    return [(ev.clientX - rect.left) * sx, (ev.clientY - rect.top) * sy];
  }

  onPointerDown(ev: MouseEvent): void {
    const [u, v] = this.canvasPoint(ev);
    const hit = this.state.hitTest(u, v);
    if (ev.shiftKey && hit >= 0) {
      this.state.deleteKeypoint(hit);
      this.submit();
      this.draw();
      return;
    }
    if (hit >= 0) {
      this.dragIndex = hit;
      return;
    }
    const pin = el<HTMLInputElement>("pin-frames").checked;
    const frame = pin ? this.timeline.current : null;
    this.state.addKeypoint(u, v, frame);
    this.submit();
    this.draw();
  }

  onPointerMove(ev: MouseEvent): void {
    if (this.dragIndex < 0) return;
    const [u, v] = this.canvasPoint(ev);
    this.state.moveKeypoint(this.dragIndex, u, v);
    this.submit();
    this.draw();
  }

  onPointerUp(): void {
    this.dragIndex = -1;
  }

  undo(): void {
    const restored = this.state.undo();
    if (restored) {
      void this.sync.proposeImmediate(restored);
      this.draw();
    }
  }

  redo(): void {
    const restored = this.state.redo();
    if (restored) {
      void this.sync.proposeImmediate(restored);
      this.draw();
    }
  }

  // ---- clip picker ---------------------------------------------------------

  async applyClip(): Promise<void> {
    const clipId = el<HTMLSelectElement>("clip-select").value;
    if (!clipId) return;
    const frames = parseInt(el<HTMLInputElement>("clip-frames").value, 10) || null;
    const blend = parseInt(el<HTMLInputElement>("clip-blend").value, 10) || 0;
    try {
      const resp = await this.api.putClip(
        this.session.id, this.sync.currentVersion, clipId, frames, blend,
      );
      this.sync.adoptVersion(resp.version);
      this.timeline.invalidate(resp.version);
      this.setStatus(
        `clip ${resp.clip.id}: ${resp.clip.source_frames}f looped to ${resp.clip.target_frames}f`,
      );
      this.submit(true);
    } catch (err) {
      this.setStatus(`clip error: ${String(err)}`);
    }
  }

  // ---- timeline ------------------------------------------------------------

  async refreshPreview(): Promise<void> {
    try {
      const p = await this.timeline.preview(this.sync.currentVersion, this.timeline.current);
      this.skeleton = p.polylines;
      const img = new Image();
      img.onload = () => {
        this.previewImage = img;
        this.drawPreview();
      };
      img.src = p.url;
    } catch (err) {
      this.setStatus(`preview error: ${String(err)}`);
    }
  }

  onScrub(value: number): void {
    const frame = this.timeline.scrubTo(value);
    el<HTMLSpanElement>("frame-label").textContent =
      `${frame} / ${this.session.frame_count - 1}`;
    void this.refreshPreview();
  }

  onMapTypeChange(value: string): void {
    this.timeline.mapType = value;
    void this.refreshPreview();
  }

  // ---- export ----------------------------------------------------------------

  async doExport(): Promise<void> {
    const outDir = el<HTMLInputElement>("export-dir").value;
    this.setStatus("exporting...");
    try {
      const resp = await this.api.exportSession(this.session.id, outDir, [512, 512]);
      const n = Object.keys(resp.manifest.hashes).length;
      this.setStatus(
        `exported ${resp.manifest.frame_count} frames (${n} files) -> ${resp.render_dir}`,
      );
    } catch (err) {
      this.setStatus(`export error: ${String(err)}`);
    }
  }

  // ---- drawing -----------------------------------------------------------------

  private drawPrimitives(ctx: CanvasRenderingContext2D, prims: Primitive[]): void {
    for (const p of prims) {
      if (p.kind === "polyline") {
        ctx.strokeStyle = p.color;
        ctx.lineWidth = p.width;
        ctx.setLineDash(p.dashed ? [6, 4] : []);
        ctx.beginPath();
        p.points.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
        ctx.stroke();
      } else {
        ctx.setLineDash([]);
        ctx.fillStyle = p.color;
        ctx.beginPath();
        ctx.arc(p.x, p.y, p.radius, 0, 2 * Math.PI);
        ctx.fill();
        if (p.label) {
          ctx.font = "10px sans-serif";
          ctx.fillText(p.label, p.x + 6, p.y - 6);
        }
      }
    }
  }

  draw(): void {
    const ctx = this.ctx;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.background) ctx.drawImage(this.background, 0, 0, this.canvas.width, this.canvas.height);
    this.drawPrimitives(ctx, serverOverlay(this.serverPath));
    this.drawPrimitives(ctx, localPolyline(this.state.local));
  }

  drawPreview(): void {
    const canvas = el<HTMLCanvasElement>("preview-canvas");
    const ctx = canvas.getContext("2d")!;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (!this.previewImage) return;
    ctx.drawImage(this.previewImage, 0, 0, canvas.width, canvas.height);
    const sx = canvas.width / this.session.camera.width;
    const sy = canvas.height / this.session.camera.height;
    this.drawPrimitives(ctx, scalePrimitives(skeletonOverlay(this.skeleton), sx, sy));
  }

  private setStatus(text: string): void {
    el<HTMLParagraphElement>("status").textContent = text;
  }
}

const app = new StudioApp();

el<HTMLButtonElement>("connect").addEventListener("click", () => {
  void app.connect().catch((err) => {
    el<HTMLParagraphElement>("status").textContent = `connect failed: ${String(err)}`;
  });
});
el<HTMLCanvasElement>("editor-canvas").addEventListener("mousedown", (e) => app.onPointerDown(e));
el<HTMLCanvasElement>("editor-canvas").addEventListener("mousemove", (e) => app.onPointerMove(e));
window.addEventListener("mouseup", () => app.onPointerUp());
el<HTMLButtonElement>("undo").addEventListener("click", () => app.undo());
el<HTMLButtonElement>("redo").addEventListener("click", () => app.redo());
window.addEventListener("keydown", (e) => {
  if ((e.ctrlKey || e.metaKey) && e.key === "z") {
    e.preventDefault();
    if (e.shiftKey) app.redo();
    else app.undo();
  }
});
el<HTMLButtonElement>("apply-clip").addEventListener("click", () => void app.applyClip());
el<HTMLInputElement>("timeline").addEventListener("input", (e) => {
  app.onScrub(parseInt((e.target as HTMLInputElement).value, 10));
});
el<HTMLSelectElement>("map-type").addEventListener("change", (e) => {
  app.onMapTypeChange((e.target as HTMLSelectElement).value);
});
el<HTMLButtonElement>("export").addEventListener("click", () => void app.doExport());
