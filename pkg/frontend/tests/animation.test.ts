import { describe, expect, it } from "vitest";

import { jointIndex, loopTime, sampleClip } from "../src/animation.js";
import type { ClipDoc } from "../src/types.js";

const CLIP: ClipDoc = {
  name: "test",
  duration: 1.02,
  direction_signs: [1, 1, -1, 1, 1, 1],
  tracks: [
    {
      joint_path: "Robot/z-up/root/__base/__shoulder/__elbow",
      keys: [
        [0.0, 0.0],
        [1.02, -0.472],
      ],
    },
    { joint_path: "Robot/z-up/root/__base", keys: [[0.0, -1.571]] },
  ],
};

describe("clip sampling", () => {
  it("lerps between keys", () => {
    const q = sampleClip(CLIP, 0.51);
    expect(q[2]).toBeCloseTo(-0.236, 9);
    expect(q[0]).toBeCloseTo(-1.571, 9); // single key: constant
    expect(q[5]).toBe(0); // untracked joint
  });

  it("extrapolates as constants", () => {
    expect(sampleClip(CLIP, -1)[2]).toBe(0);
    expect(sampleClip(CLIP, 99)[2]).toBeCloseTo(-0.472, 12);
  });

  it("maps hierarchy paths and leaf spellings", () => {
    expect(jointIndex("Robot/z-up/root/__base")).toBe(0);
    expect(jointIndex("__wrist-3")).toBe(5);
    expect(jointIndex("__wrist3")).toBe(5);
    expect(jointIndex("nonsense")).toBe(-1);
  });

  it("loops playback time", () => {
    expect(loopTime(2.5, 1.0)).toBeCloseTo(0.5, 12);
    expect(loopTime(0.3, 0)).toBe(0);
  });
});
