// Forward kinematics over the chain document, for posing the rendered arm.
// Standard DH: each joint contributes Rz(theta) * Tz(d) * Tx(a) * Rx(alpha).

import type { JointDoc, Vec3Tuple } from "./types.js";

type Mat4 = number[]; // row-major 16

const IDENTITY: Mat4 = [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1];

function matMul(a: Mat4, b: Mat4): Mat4 {
  const out = new Array(16).fill(0);
  for (let r = 0; r < 4; r++) {
    for (let c = 0; c < 4; c++) {
      let acc = 0;
      for (let k = 0; k < 4; k++) acc += a[r * 4 + k] * b[k * 4 + c];
      out[r * 4 + c] = acc;
    }
  }
  return out;
}

function dhMatrix(joint: JointDoc, theta: number): Mat4 {
  const ct = Math.cos(theta);
  const st = Math.sin(theta);
  const ca = Math.cos(joint.dh_alpha);
  const sa = Math.sin(joint.dh_alpha);
  const a = joint.dh_a;
  const d = joint.dh_d;
  return [
    ct, -st * ca, st * sa, a * ct,
    st, ct * ca, -ct * sa, a * st,
    0, sa, ca, d,
    0, 0, 0, 1,
  ];
}

/** Positions of the base and each joint frame origin (7 points). */
export function fkFrames(chain: JointDoc[], q: number[]): Vec3Tuple[] {
  let t: Mat4 = IDENTITY;
  const points: Vec3Tuple[] = [[0, 0, 0]];
  chain.forEach((joint, i) => {
    t = matMul(t, dhMatrix(joint, q[i] ?? 0));
    points.push([t[3], t[7], t[11]]);
  });
  return points;
}

/** End-effector position only. */
export function fkTip(chain: JointDoc[], q: number[]): Vec3Tuple {
  const frames = fkFrames(chain, q);
  return frames[frames.length - 1];
}
