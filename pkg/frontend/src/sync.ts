/** Debounced trajectory synchronization with the edit service.
 *
 * Guarantees:
 *  - at most one trajectory PUT is in flight per session;
 *  - rapid edits within the debounce window collapse into one PUT;
 *  - responses that no longer correspond to the latest proposal are
 *    discarded (never rendered), though the server version they carry is
 *    still adopted;
 *  - a 409 (stale version token) refreshes the token and retries the
 *    latest proposal.
 */

import { ApiError, type Keypoint, type TrajectoryResponse } from "./api.js";

/** The slice of the service client the synchronizer needs (structural). */
export interface TrajectoryApi {
  putTrajectory(id: string, version: number, keypoints: Keypoint[]): Promise<TrajectoryResponse>;
  getSession(id: string): Promise<{ id: string; version: number; frame_count: number }>;
}

export interface SyncEvents {
  onAuthoritative: (resp: TrajectoryResponse, keypoints: Keypoint[]) => void;
  onDiscarded?: (resp: TrajectoryResponse) => void;
  onError?: (err: unknown) => void;
}

type Scheduler = (fn: () => void, ms: number) => unknown;
type Canceller = (handle: unknown) => void;

export class TrajectorySync {
  private version: number;
  private proposalSeq = 0;
  private latestProposal: Keypoint[] | null = null;
  private inFlight = false;
  private timer: unknown = null;

  constructor(
    private api: TrajectoryApi,
    private sessionId: string,
    initialVersion: number,
    private events: SyncEvents,
    private debounceMs = 150,
    private schedule: Scheduler = (fn, ms) => setTimeout(fn, ms),
    private cancel: Canceller = (h) => clearTimeout(h as ReturnType<typeof setTimeout>),
  ) {
    this.version = initialVersion;
  }

  get currentVersion(): number {
    return this.version;
  }

  get hasPendingWork(): boolean {
    return this.inFlight || this.latestProposal !== null;
  }

  /** Adopt a version produced by some other mutation (e.g. a clip PUT). */
  adoptVersion(version: number): void {
    this.version = Math.max(this.version, version);
  }

  /** Propose new keypoints; the PUT fires after the debounce window. */
  propose(keypoints: Keypoint[]): void {
    this.latestProposal = keypoints.map((k) => ({ ...k }));
    this.proposalSeq += 1;
    if (this.timer !== null) this.cancel(this.timer);
    this.timer = this.schedule(() => {
      this.timer = null;
      void this.flush();
    }, this.debounceMs);
  }

  /** Send immediately (undo/redo paths skip the debounce). */
  proposeImmediate(keypoints: Keypoint[]): Promise<void> {
    this.latestProposal = keypoints.map((k) => ({ ...k }));
    this.proposalSeq += 1;
    if (this.timer !== null) {
      this.cancel(this.timer);
      this.timer = null;
    }
    return this.flush();
  }

  private async flush(): Promise<void> {
    if (this.inFlight || this.latestProposal === null) return;
    const sent = this.latestProposal;
    const sentSeq = this.proposalSeq;
    this.latestProposal = null;
    this.inFlight = true;
    try {
      const resp = await this.api.putTrajectory(this.sessionId, this.version, sent);
      this.version = resp.version;
      if (sentSeq === this.proposalSeq) {
        this.events.onAuthoritative(resp, sent);
      } else {
        // a newer proposal superseded this one while it was in flight
        this.events.onDiscarded?.(resp);
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // stale token: refresh and retry the newest state we have
        try {
          const info = await this.api.getSession(this.sessionId);
          this.version = info.version;
          if (this.latestProposal === null) this.latestProposal = sent;
        } catch (refreshErr) {
          this.events.onError?.(refreshErr);
        }
      } else {
        this.events.onError?.(err);
      }
    } finally {
      this.inFlight = false;
    }
    if (this.latestProposal !== null) {
      await this.flush();
    }
  }
}
