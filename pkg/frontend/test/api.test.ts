import { describe, expect, it } from "vitest";

import { ApiError, EditServiceClient } from "../src/api.js";

interface Recorded {
  url: string;
  method?: string;
  body?: string;
}

function fakeFetch(status: number, payload: unknown) {
  const calls: Recorded[] = [];
  const impl = (url: string, init?: RequestInit) => {
    calls.push({ url, method: init?.method, body: init?.body as string | undefined });
    return Promise.resolve(
      new Response(JSON.stringify(payload), {
        status,
        headers: { "Content-Type": "application/json" },
      }),
    );
  };
  return { calls, impl };
}

describe("edit-service client", () => {
  it("shapes the session-creation request", async () => {
    const { calls, impl } = fakeFetch(200, { id: "abc", version: 0, frame_count: 10 });
    const client = new EditServiceClient("http://svc", impl);
    const s = await client.createSession("/data/bundle", "/data/asset.bin");
    expect(s.id).toBe("abc");
    expect(calls[0].url).toBe("http://svc/sessions");
    expect(calls[0].method).toBe("POST");
    expect(JSON.parse(calls[0].body!)).toEqual({
      bundle_path: "/data/bundle",
      asset_path: "/data/asset.bin",
    });
  });

  it("sends the version token with mutations", async () => {
    const { calls, impl } = fakeFetch(200, { version: 3 });
    const client = new EditServiceClient("http://svc", impl);
    await client.putTrajectory("abc", 2, [{ u: 1, v: 2, frame: 0 }, { u: 3, v: 4 }]);
    const body = JSON.parse(calls[0].body!);
    expect(calls[0].url).toBe("http://svc/sessions/abc/trajectory");
    expect(body.version).toBe(2);
    expect(body.keypoints.length).toBe(2);
  });

  it("maps HTTP errors to ApiError with the status and detail", async () => {
    const { impl } = fakeFetch(409, { detail: "version 1 does not match current 4" });
    const client = new EditServiceClient("http://svc", impl);
    await expect(client.putTrajectory("abc", 1, [])).rejects.toMatchObject({
      status: 409,
    });
    try {
      await client.putTrajectory("abc", 1, []);
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect(String((err as ApiError).message)).toContain("does not match");
    }
  });

  it("builds absolute image URLs from server-relative paths", () => {
    const client = new EditServiceClient("http://svc:8900");
    expect(client.imageUrl("/sessions/x/images/k.png")).toBe(
      "http://svc:8900/sessions/x/images/k.png",
    );
  });
});
