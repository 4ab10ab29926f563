// Drag mapping: screen-pixel deltas onto the camera-parallel plane through
// the grabbed waypoint. Pure math so it can be unit-tested without a canvas.

import type { Vec3Tuple } from "./types.js";

export interface CameraBasis {
  /** world-space unit vector of screen +x */
  right: Vec3Tuple;
  /** world-space unit vector of screen +y (up on screen) */
  up: Vec3Tuple;
  /** camera position */
  eye: Vec3Tuple;
  /** vertical field of view, radians */
  fovY: number;
  /** viewport height in pixels */
  viewportHeight: number;
}

function sub(a: Vec3Tuple, b: Vec3Tuple): Vec3Tuple {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function dot(a: Vec3Tuple, b: Vec3Tuple): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

function norm(a: Vec3Tuple): number {
  return Math.hypot(a[0], a[1], a[2]);
}

/**
 * World-units-per-pixel on the plane through `point` parallel to the image
 * plane, for a perspective camera.
 */
export function worldPerPixel(point: Vec3Tuple, camera: CameraBasis): number {
  const forwardDist = norm(sub(point, camera.eye));
  const planeHeight = 2 * forwardDist * Math.tan(camera.fovY / 2);
  return planeHeight / camera.viewportHeight;
}

/**
 * New world position after dragging by (dxPx, dyPx) screen pixels; dyPx is
 * positive downward as in pointer events.
 */
export function dragOnCameraPlane(
  point: Vec3Tuple,
  camera: CameraBasis,
  dxPx: number,
  dyPx: number,
): Vec3Tuple {
  const scale = worldPerPixel(point, camera);
  const dx = dxPx * scale;
  const dy = -dyPx * scale; // screen down = world-up negative
  return [
    point[0] + camera.right[0] * dx + camera.up[0] * dy,
    point[1] + camera.right[1] * dx + camera.up[1] * dy,
    point[2] + camera.right[2] * dx + camera.up[2] * dy,
  ];
}

/**
 * Project a world point back to pixel offsets relative to another world
 * point on the same camera plane (inverse of dragOnCameraPlane, used to
 * verify the round trip stays under a pixel).
 */
export function pixelOffsetOnPlane(
  from: Vec3Tuple,
  to: Vec3Tuple,
  camera: CameraBasis,
): { dxPx: number; dyPx: number } {
  const scale = worldPerPixel(from, camera);
  const delta = sub(to, from);
  return {
    dxPx: dot(delta, camera.right) / scale,
    dyPx: -dot(delta, camera.up) / scale,
  };
}
