// The page's fk must agree with the service's chain geometry; the home
// pose value is frozen from the service implementation.

import { describe, expect, it } from "vitest";

import { fkFrames, fkTip } from "../src/kinematics.js";
import type { JointDoc } from "../src/types.js";

const HALF_PI = Math.PI / 2;
const TAU = Math.PI * 2;

const CHAIN: JointDoc[] = [
  { name: "base", dh_a: 0, dh_d: 0.3, dh_alpha: HALF_PI, limit_lo: -TAU, limit_hi: TAU },
  { name: "shoulder", dh_a: 0.55, dh_d: 0, dh_alpha: 0, limit_lo: -TAU, limit_hi: TAU },
  { name: "elbow", dh_a: 0.45, dh_d: 0, dh_alpha: 0, limit_lo: -TAU, limit_hi: TAU },
  { name: "wrist1", dh_a: 0, dh_d: 0, dh_alpha: HALF_PI, limit_lo: -TAU, limit_hi: TAU },
  { name: "wrist2", dh_a: 0, dh_d: 0, dh_alpha: -HALF_PI, limit_lo: -TAU, limit_hi: TAU },
  { name: "wrist3", dh_a: 0, dh_d: 0.15, dh_alpha: 0, limit_lo: -TAU, limit_hi: TAU },
];

describe("fk", () => {
  it("reproduces the service's home pose", () => {
    const tip = fkTip(CHAIN, [0, 0, 0, 0, 0, 0]);
    expect(tip[0]).toBeCloseTo(1.0, 9);
    expect(tip[1]).toBeCloseTo(-0.15, 9);
    expect(tip[2]).toBeCloseTo(0.3, 9);
  });

  it("gives one frame per joint plus the base", () => {
    const frames = fkFrames(CHAIN, [0.3, -0.5, 0.8, 0.1, -0.2, 0.4]);
    expect(frames).toHaveLength(7);
    expect(frames[0]).toEqual([0, 0, 0]);
    expect(frames[1][2]).toBeCloseTo(0.3, 12); // base riser height
  });

  it("base joint spins the tip around z", () => {
    const q = [0.7, -0.4, 0.9, 0.2, -0.3, 0.5];
    const a = fkTip(CHAIN, q);
    const b = fkTip(CHAIN, [q[0] + Math.PI, ...q.slice(1)]);
    const ra = Math.hypot(a[0], a[1]);
    const rb = Math.hypot(b[0], b[1]);
    expect(ra).toBeCloseTo(rb, 9);
    expect(a[2]).toBeCloseTo(b[2], 9);
  });
});
