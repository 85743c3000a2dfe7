import { describe, expect, it } from "vitest";

import { ApiError, type Keypoint, type TrajectoryResponse } from "../src/api.js";
import { TrajectorySync, type TrajectoryApi } from "../src/sync.js";

/** Deterministic manual clock for the debounce timer. */
class ManualClock {
  private now = 0;
  private seq = 0;
  private tasks = new Map<number, { at: number; fn: () => void }>();

  schedule = (fn: () => void, ms: number): unknown => {
    const id = ++this.seq;
    this.tasks.set(id, { at: this.now + ms, fn });
    return id;
  };

  cancel = (handle: unknown): void => {
    this.tasks.delete(handle as number);
  };

  async advance(ms: number): Promise<void> {
    this.now += ms;
    const due = [...this.tasks.entries()]
      .filter(([, t]) => t.at <= this.now)
      .sort((x, y) => x[1].at - y[1].at);
    for (const [id, t] of due) {
      this.tasks.delete(id);
      t.fn();
    }
    await flushMicrotasks();
  }
}

async function flushMicrotasks(): Promise<void> {
  for (let i = 0; i < 20; i++) await Promise.resolve();
}

interface PendingCall {
  version: number;
  keypoints: Keypoint[];
  resolve: (resp: TrajectoryResponse) => void;
  reject: (err: unknown) => void;
}

/** Fake service whose responses resolve only when the test says so. */
class FakeApi implements TrajectoryApi {
  calls: PendingCall[] = [];
  serverVersion = 0;

  putTrajectory(_id: string, version: number, keypoints: Keypoint[]): Promise<TrajectoryResponse> {
    return new Promise((resolve, reject) => {
      this.calls.push({ version, keypoints, resolve, reject });
    });
  }

  getSession(): Promise<{ id: string; version: number; frame_count: number }> {
    return Promise.resolve({ id: "s", version: this.serverVersion, frame_count: 10 });
  }

  respond(index: number, pointsTag: number): void {
    const call = this.calls[index];
    this.serverVersion = call.version + 1;
    call.resolve({
      version: this.serverVersion,
      points2d: [[pointsTag, pointsTag]],
      path3d: [[pointsTag, 0, 0]],
      headings: [0],
      rescale_factor: 1.0,
      degenerate_frames: [],
      warnings: [],
    });
  }

  rejectWith(index: number, status: number): void {
    this.calls[index].reject(new ApiError(status, "conflict"));
  }
}

function kp(x: number): Keypoint[] {
  return [
    { u: x, v: 0, frame: null },
    { u: x + 10, v: 10, frame: null },
  ];
}

function harness(debounceMs = 150) {
  const clock = new ManualClock();
  const api = new FakeApi();
  const seen: { authoritative: number[]; discarded: number[] } = { authoritative: [], discarded: [] };
  const sync = new TrajectorySync(
    api,
    "s",
    0,
    {
      onAuthoritative: (resp) => seen.authoritative.push(resp.points2d[0][0]),
      onDiscarded: (resp) => seen.discarded.push(resp.points2d[0][0]),
    },
    debounceMs,
    clock.schedule,
    clock.cancel,
  );
  return { clock, api, sync, seen };
}

describe("debounced trajectory sync", () => {
  it("collapses rapid edits into a single PUT", async () => {
    const { clock, api, sync } = harness();
    sync.propose(kp(1));
    await clock.advance(50);
    sync.propose(kp(2));
    await clock.advance(50);
    sync.propose(kp(3));
    expect(api.calls.length).toBe(0); // still inside the debounce window
    await clock.advance(150);
    expect(api.calls.length).toBe(1);
    expect(api.calls[0].keypoints[0].u).toBe(3); // only the newest state is sent
  });

  it("keeps at most one PUT in flight", async () => {
    const { clock, api, sync } = harness();
    sync.propose(kp(1));
    await clock.advance(150);
    expect(api.calls.length).toBe(1);
    sync.propose(kp(2));
    await clock.advance(150);
    expect(api.calls.length).toBe(1); // queued behind the in-flight PUT
    api.respond(0, 1);
    await flushMicrotasks();
    expect(api.calls.length).toBe(2); // queued proposal sent after the ack
    expect(api.calls[1].keypoints[0].u).toBe(2);
    expect(api.calls[1].version).toBe(1); // with the refreshed version token
  });

  it("discards stale responses under simulated latency", async () => {
    const { clock, api, sync, seen } = harness();
    sync.propose(kp(1));
    await clock.advance(150); // PUT #1 in flight
    sync.propose(kp(2)); // newer local edit while #1 is still pending
    api.respond(0, 1); // slow response for #1 arrives afterwards
    await flushMicrotasks();
    expect(seen.discarded).toEqual([1]); // #1's overlay is never rendered
    expect(seen.authoritative).toEqual([]);
    await clock.advance(150);
    api.respond(1, 2);
    await flushMicrotasks();
    expect(seen.authoritative).toEqual([2]); // only the newest overlay lands
    expect(sync.currentVersion).toBe(2);
  });

  it("adopts the server version even from a discarded response", async () => {
    const { clock, api, sync } = harness();
    sync.propose(kp(1));
    await clock.advance(150);
    sync.propose(kp(2));
    api.respond(0, 1);
    await flushMicrotasks();
    await clock.advance(150);
    expect(api.calls[1].version).toBe(1); // discarded ack still advanced the token
  });

  it("recovers from a 409 by refreshing the token and retrying", async () => {
    const { clock, api, sync, seen } = harness();
    api.serverVersion = 5; // some other client moved the session forward
    sync.propose(kp(7));
    await clock.advance(150);
    expect(api.calls[0].version).toBe(0);
    api.rejectWith(0, 409);
    await flushMicrotasks();
    expect(api.calls.length).toBe(2); // retried automatically
    expect(api.calls[1].version).toBe(5); // with the refreshed token
    api.respond(1, 7);
    await flushMicrotasks();
    expect(seen.authoritative).toEqual([7]);
  });

  it("surfaces non-conflict errors", async () => {
    const clock = new ManualClock();
    const api = new FakeApi();
    const errors: unknown[] = [];
    const sync = new TrajectorySync(
      api, "s", 0,
      { onAuthoritative: () => undefined, onError: (e) => errors.push(e) },
      150, clock.schedule, clock.cancel,
    );
    sync.propose(kp(1));
    await clock.advance(150);
    api.rejectWith(0, 422);
    await flushMicrotasks();
    expect(errors.length).toBe(1);
    expect((errors[0] as ApiError).status).toBe(422);
  });

  it("proposeImmediate skips the debounce window", async () => {
    const { api, sync } = harness();
    void sync.proposeImmediate(kp(4));
    await flushMicrotasks();
    expect(api.calls.length).toBe(1);
  });
});
