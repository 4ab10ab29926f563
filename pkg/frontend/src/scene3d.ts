// three.js scene graph for the preview: object boxes, the translucent
// reach sphere, red waypoint spheres, and the arm as a posed segment chain.
// Pure graph construction (no renderer needed), so tests can count meshes.

import * as THREE from "three";

import { fkFrames } from "./kinematics.js";
import type { JointDoc, SceneDoc, TrajectoryDoc, Vec3Tuple } from "./types.js";

export const WAYPOINT_DISPLAY_SCALE = 0.1;

const ROLE_COLORS: Record<string, number> = {
  obstacle: 0x8d8d8d,
  "target-surface": 0x4caf50,
  robot: 0x3f51b5,
  marker: 0xffc107,
};

export class PreviewScene {
  readonly root = new THREE.Scene();
  private sceneGroup = new THREE.Group();
  private waypointGroup = new THREE.Group();
  private robotGroup = new THREE.Group();
  private pathLine: THREE.Line | null = null;

  constructor() {
    this.root.add(this.sceneGroup, this.waypointGroup, this.robotGroup);
    const ambient = new THREE.AmbientLight(0xffffff, 0.7);
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(2, -3, 4);
    this.root.add(ambient, sun);
  }

  setScene(doc: SceneDoc): void {
    this.sceneGroup.clear();
    for (const obj of doc.objects) {
      const geometry = new THREE.BoxGeometry(
        Math.max(obj.extents[0] * 2, 1e-3),
        Math.max(obj.extents[1] * 2, 1e-3),
        Math.max(obj.extents[2] * 2, 1e-3),
      );
      const material = new THREE.MeshLambertMaterial({
        color: ROLE_COLORS[obj.role] ?? 0xcccccc,
        transparent: obj.role === "obstacle",
        opacity: obj.role === "obstacle" ? 0.8 : 1.0,
      });
      const mesh = new THREE.Mesh(geometry, material);
      mesh.position.set(...obj.center);
      mesh.name = `object:${obj.name}`;
      this.sceneGroup.add(mesh);
    }
    const sphereDoc = doc.reachability_sphere;
    const sphere = new THREE.Mesh(
      new THREE.SphereGeometry(sphereDoc.radius, 32, 24),
      new THREE.MeshBasicMaterial({
        color: 0x2196f3,
        transparent: true,
        opacity: 0.08,
        depthWrite: false,
      }),
    );
    sphere.position.set(...sphereDoc.center);
    sphere.name = "reach-sphere";
    this.sceneGroup.add(sphere);
    const floor = new THREE.GridHelper(4, 16, 0x555555, 0x333333);
    floor.rotation.x = Math.PI / 2; // grid is XZ by default; our floor is XY
    floor.name = "floor";
    this.sceneGroup.add(floor);
  }

  /** One red sphere per waypoint; returns the meshes for picking. */
  setTrajectory(traj: TrajectoryDoc | null, badWaypoints: Set<string> = new Set()): THREE.Mesh[] {
    this.waypointGroup.clear();
    if (this.pathLine) {
      this.root.remove(this.pathLine);
      this.pathLine = null;
    }
    if (!traj) return [];
    const meshes: THREE.Mesh[] = [];
    traj.waypoints.forEach((wp, index) => {
      const mesh = new THREE.Mesh(
        new THREE.SphereGeometry(0.5, 20, 14),
        new THREE.MeshLambertMaterial({
          color: badWaypoints.has(wp.name) ? 0xff9800 : 0xd32f2f,
        }),
      );
      // unit sphere shrunk to display scale, like a 0.1-scaled prefab
      mesh.scale.setScalar(WAYPOINT_DISPLAY_SCALE);
      mesh.position.set(...wp.position);
      mesh.name = `waypoint:${index}`;
      mesh.userData = { index, waypointName: wp.name };
      this.waypointGroup.add(mesh);
      meshes.push(mesh);
    });
    const points = traj.waypoints.map((wp) => new THREE.Vector3(...wp.position));
    this.pathLine = new THREE.Line(
      new THREE.BufferGeometry().setFromPoints(points),
      new THREE.LineBasicMaterial({ color: 0xef5350 }),
    );
    this.pathLine.name = "path";
    this.root.add(this.pathLine);
    return meshes;
  }

  get waypointMeshes(): THREE.Mesh[] {
    return this.waypointGroup.children as THREE.Mesh[];
  }

  /** Pose the six-segment arm through the joint frame positions. */
  setRobotPose(chain: JointDoc[], q: number[]): void {
    this.robotGroup.clear();
    const frames = fkFrames(chain, q);
    for (let i = 0; i + 1 < frames.length; i++) {
      const segment = makeSegment(frames[i], frames[i + 1], 0.035, 0x3f51b5);
      if (segment) this.robotGroup.add(segment);
    }
    const tip = new THREE.Mesh(
      new THREE.SphereGeometry(0.03, 12, 8),
      new THREE.MeshLambertMaterial({ color: 0x00e5ff }),
    );
    tip.position.set(...frames[frames.length - 1]);
    tip.name = "end-effector";
    this.robotGroup.add(tip);
  }
}

function makeSegment(
  a: Vec3Tuple,
  b: Vec3Tuple,
  radius: number,
  color: number,
): THREE.Mesh | null {
  const from = new THREE.Vector3(...a);
  const to = new THREE.Vector3(...b);
  const length = from.distanceTo(to);
  if (length < 1e-6) return null;
  const mesh = new THREE.Mesh(
    new THREE.CylinderGeometry(radius, radius, length, 10),
    new THREE.MeshLambertMaterial({ color }),
  );
  mesh.position.copy(from.clone().add(to).multiplyScalar(0.5));
  mesh.quaternion.setFromUnitVectors(
    new THREE.Vector3(0, 1, 0),
    to.clone().sub(from).normalize(),
  );
  mesh.name = "arm-segment";
  return mesh;
}
