import { describe, expect, it } from "vitest";

import type { Keypoint } from "../src/api.js";
import { EditorState } from "../src/state.js";

describe("editor state machine", () => {
  it("adds, moves and deletes keypoints locally", () => {
    const s = new EditorState();
    s.addKeypoint(10, 20, 0);
    s.addKeypoint(30, 40);
    expect(s.local).toEqual([
      { u: 10, v: 20, frame: 0 },
      { u: 30, v: 40, frame: null },
    ]);
    s.moveKeypoint(1, 35, 45);
    expect(s.local[1]).toEqual({ u: 35, v: 45, frame: null });
    s.deleteKeypoint(0);
    expect(s.local).toEqual([{ u: 35, v: 45, frame: null }]);
    expect(() => s.deleteKeypoint(5)).toThrow(RangeError);
    expect(() => s.moveKeypoint(9, 0, 0)).toThrow(RangeError);
  });

  it("hit-tests within the radius and picks the closest", () => {
    const s = new EditorState();
    s.addKeypoint(100, 100);
    s.addKeypoint(104, 100);
    expect(s.hitTest(105, 100)).toBe(1);
    expect(s.hitTest(99, 100)).toBe(0);
    expect(s.hitTest(200, 200)).toBe(-1);
  });

  it("undo restores the previous server-confirmed state (replay oracle)", () => {
    // replay a scripted session, tracking the expected confirmed states by hand
    const s = new EditorState();
    const a: Keypoint[] = [
      { u: 1, v: 1, frame: null },
      { u: 2, v: 2, frame: null },
    ];
    const b: Keypoint[] = [...a, { u: 3, v: 3, frame: null }];
    const c: Keypoint[] = [b[0], { u: 2.5, v: 2.5, frame: null }, b[2]];

    s.local = a.map((k) => ({ ...k }));
    s.confirm(a); // server ack #1
    expect(s.canUndo).toBe(false); // nothing before the first confirmed state

    s.addKeypoint(3, 3);
    s.confirm(b); // server ack #2
    s.moveKeypoint(1, 2.5, 2.5);
    s.confirm(c); // server ack #3
    expect(s.canUndo).toBe(true);

    // undo pops to b, then to a; each returns the state for re-submission
    expect(s.undo()).toEqual(b);
    expect(s.local).toEqual(b);
    expect(s.undo()).toEqual(a);
    expect(s.local).toEqual(a);
    expect(s.undo()).toBeNull(); // the first confirmed state is the floor

    // redo replays the undone confirmations in order
    expect(s.redo()).toEqual(b);
    expect(s.redo()).toEqual(c);
    expect(s.redo()).toBeNull();
  });

  it("a new confirmation clears the redo branch", () => {
    const s = new EditorState();
    const a = [{ u: 0, v: 0, frame: null }, { u: 1, v: 1, frame: null }];
    const b = [...a, { u: 2, v: 2, frame: null }];
    s.confirm(a);
    s.confirm(b);
    s.undo();
    expect(s.canRedo).toBe(true);
    s.confirm([...a, { u: 9, v: 9, frame: null }]);
    expect(s.canRedo).toBe(false);
  });

  it("duplicate acks do not grow the history", () => {
    const s = new EditorState();
    const a = [{ u: 0, v: 0, frame: null }, { u: 1, v: 1, frame: null }];
    s.confirm(a);
    s.confirm(a.map((k) => ({ ...k })));
    expect(s.canUndo).toBe(false);
  });
});
