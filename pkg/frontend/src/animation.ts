// Clip playback for the preview: linear interpolation between keys,
// constant outside the keyed range, matching the service's sampler.

import type { ClipDoc, ClipTrackDoc } from "./types.js";

const JOINT_ORDER = ["base", "shoulder", "elbow", "wrist1", "wrist2", "wrist3"];

export function jointIndex(path: string): number {
  const leaf = path.split("/").pop() ?? "";
  const key = leaf.toLowerCase().replace(/[^a-z0-9]/g, "");
  return JOINT_ORDER.indexOf(key);
}

function trackValue(track: ClipTrackDoc, t: number): number {
  const keys = track.keys;
  if (keys.length === 0) return 0;
  if (t <= keys[0][0]) return keys[0][1];
  const last = keys[keys.length - 1];
  if (t >= last[0]) return last[1];
  for (let i = 0; i + 1 < keys.length; i++) {
    const [t0, v0] = keys[i];
    const [t1, v1] = keys[i + 1];
    if (t0 <= t && t <= t1) {
      return v0 + ((v1 - v0) * (t - t0)) / (t1 - t0);
    }
  }
  return last[1];
}

/** Six joint angles at time t. */
export function sampleClip(clip: ClipDoc, t: number): number[] {
  const q = [0, 0, 0, 0, 0, 0];
  for (const track of clip.tracks) {
    const idx = jointIndex(track.joint_path);
    if (idx >= 0) q[idx] = trackValue(track, t);
  }
  return q;
}

/** Loop time helper: wraps wall-clock seconds into the clip duration. */
export function loopTime(elapsed: number, duration: number): number {
  if (duration <= 0) return 0;
  return elapsed % duration;
}
