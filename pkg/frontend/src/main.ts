// Browser entry: wires the store, the three.js preview, and the DOM panel.

import * as THREE from "three";

import { sampleClip, loopTime } from "./animation.js";
import { ArmloopClient } from "./api.js";
import { dragOnCameraPlane, type CameraBasis } from "./drag.js";
import { PreviewScene } from "./scene3d.js";
import { SessionStore } from "./state.js";
import type { ClipDoc, JointDoc, Vec3Tuple } from "./types.js";

const API_BASE = (window as any).ARMLOOP_API ?? "";

const client = new ArmloopClient(API_BASE.length ? API_BASE : window.location.origin);
const store = new SessionStore(client);
const preview = new PreviewScene();

let chain: JointDoc[] = [];
let playingClip: ClipDoc | null = null;
let clipStartedAt = 0;
let loopClip = true;

// --- renderer --------------------------------------------------------------

const canvas = document.getElementById("viewport") as HTMLCanvasElement;
const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
const camera = new THREE.PerspectiveCamera(50, 1, 0.01, 50);
camera.up.set(0, 0, 1); // z-up world
let orbit = { azimuth: -1.1, polar: 1.15, distance: 3.2, target: new THREE.Vector3(0, 0, 0.5) };

function applyOrbit(): void {
  const sp = Math.sin(orbit.polar);
  camera.position.set(
    orbit.target.x + orbit.distance * sp * Math.cos(orbit.azimuth),
    orbit.target.y + orbit.distance * sp * Math.sin(orbit.azimuth),
    orbit.target.z + orbit.distance * Math.cos(orbit.polar),
  );
  camera.lookAt(orbit.target);
}

function resize(): void {
  const w = canvas.clientWidth || canvas.parentElement!.clientWidth;
  const h = canvas.clientHeight || 480;
  renderer.setSize(w, h, false);
  camera.aspect = w / h;
  camera.updateProjectionMatrix();
}

window.addEventListener("resize", resize);

function cameraBasis(): CameraBasis {
  const right = new THREE.Vector3();
  const up = new THREE.Vector3();
  const back = new THREE.Vector3();
  camera.matrixWorld.extractBasis(right, up, back);
  return {
    right: right.toArray() as Vec3Tuple,
    up: up.toArray() as Vec3Tuple,
    eye: camera.position.toArray() as Vec3Tuple,
    fovY: (camera.fov * Math.PI) / 180,
    viewportHeight: renderer.domElement.height,
  };
}

// --- waypoint dragging -------------------------------------------------------

const raycaster = new THREE.Raycaster();
let drag: { index: number; lastX: number; lastY: number; world: Vec3Tuple } | null = null;

function pointerRay(event: PointerEvent): THREE.Raycaster {
  const rect = canvas.getBoundingClientRect();
  const ndc = new THREE.Vector2(
    ((event.clientX - rect.left) / rect.width) * 2 - 1,
    -((event.clientY - rect.top) / rect.height) * 2 + 1,
  );
  raycaster.setFromCamera(ndc, camera);
  return raycaster;
}

canvas.addEventListener("pointerdown", (event) => {
  if (!store.canEdit) return; // interaction disabled outside edit phase
  const hits = pointerRay(event).intersectObjects(preview.waypointMeshes);
  if (hits.length > 0) {
    const mesh = hits[0].object as THREE.Mesh;
    const index = mesh.userData.index as number;
    drag = {
      index,
      lastX: event.clientX,
      lastY: event.clientY,
      world: mesh.position.toArray() as Vec3Tuple,
    };
    store.selectWaypoint(index);
    canvas.setPointerCapture(event.pointerId);
    event.preventDefault();
  }
});

canvas.addEventListener("pointermove", (event) => {
  if (!drag) return;
  const next = dragOnCameraPlane(
    drag.world,
    cameraBasis(),
    event.clientX - drag.lastX,
    event.clientY - drag.lastY,
  );
  drag.world = next;
  drag.lastX = event.clientX;
  drag.lastY = event.clientY;
  // purely visual while dragging; the authoritative position lands on drop
  const mesh = preview.waypointMeshes[drag.index];
  if (mesh) mesh.position.set(...next);
});

canvas.addEventListener("pointerup", async (event) => {
  if (!drag) return;
  const { index, world } = drag;
  drag = null;
  canvas.releasePointerCapture(event.pointerId);
  try {
    await store.moveWaypoint(index, [
      round3(world[0]),
      round3(world[1]),
      round3(world[2]),
    ]);
  } catch {
    render(); // rejected: snap back to the server's version
  }
});

function round3(v: number): number {
  return Math.round(v * 1000) / 1000;
}

// simple orbit on right-drag / wheel zoom
let orbiting: { x: number; y: number } | null = null;
canvas.addEventListener("contextmenu", (e) => e.preventDefault());
canvas.addEventListener("pointerdown", (e) => {
  if (e.button === 2) orbiting = { x: e.clientX, y: e.clientY };
});
canvas.addEventListener("pointermove", (e) => {
  if (!orbiting) return;
  orbit.azimuth -= (e.clientX - orbiting.x) * 0.008;
  orbit.polar = Math.min(2.9, Math.max(0.2, orbit.polar - (e.clientY - orbiting.y) * 0.008));
  orbiting = { x: e.clientX, y: e.clientY };
  applyOrbit();
});
canvas.addEventListener("pointerup", () => (orbiting = null));
canvas.addEventListener("wheel", (e) => {
  orbit.distance = Math.min(10, Math.max(0.5, orbit.distance * (1 + e.deltaY * 0.001)));
  applyOrbit();
});

// --- DOM panel ----------------------------------------------------------------

const el = {
  sceneFile: document.getElementById("scene-file") as HTMLInputElement,
  loadDemo: document.getElementById("load-demo") as HTMLButtonElement,
  instruction: document.getElementById("instruction") as HTMLInputElement,
  mode: document.getElementById("mode") as HTMLSelectElement,
  submit: document.getElementById("submit") as HTMLButtonElement,
  approve: document.getElementById("approve") as HTMLButtonElement,
  execute: document.getElementById("execute") as HTMLButtonElement,
  status: document.getElementById("status") as HTMLSpanElement,
  banner: document.getElementById("banner") as HTMLDivElement,
  report: document.getElementById("report") as HTMLDivElement,
  history: document.getElementById("history") as HTMLUListElement,
  clips: document.getElementById("clips") as HTMLSelectElement,
  playClip: document.getElementById("play-clip") as HTMLButtonElement,
  loopClip: document.getElementById("loop-clip") as HTMLInputElement,
};

el.loadDemo.addEventListener("click", async () => {
  const demo = await fetch("./demo_scene.json").then((r) => r.text());
  await store.loadScene(demo);
});

el.sceneFile.addEventListener("change", async () => {
  const file = el.sceneFile.files?.[0];
  if (file) await store.loadScene(await file.text());
});

el.submit.addEventListener("click", async () => {
  const text = el.instruction.value.trim();
  if (!text) return;
  playingClip = null;
  await store.submitInstruction(text, el.mode.value as "reference" | "llm");
});

el.approve.addEventListener("click", () => void store.approve());
el.execute.addEventListener("click", () => void store.execute());

el.playClip.addEventListener("click", async () => {
  const name = el.clips.value;
  if (!name) return;
  playingClip = await client.getAnimation(name);
  clipStartedAt = performance.now() / 1000;
  loopClip = el.loopClip.checked;
});

async function fillClipList(): Promise<void> {
  try {
    for (const name of await client.listAnimations()) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      el.clips.appendChild(option);
    }
  } catch {
    // service without clips is fine
  }
}

// --- render loop -----------------------------------------------------------

function render(): void {
  const view = store.view;
  el.status.textContent = view.status ?? "-";
  el.status.dataset.status = view.status ?? "";
  el.banner.textContent = view.banner ?? "";
  el.banner.style.display = view.banner ? "block" : "none";
  el.approve.disabled = !store.canApprove;
  el.approve.title = store.canApprove
    ? "send to the robot queue"
    : "needs an awaiting-approval session with a clean report";
  el.execute.disabled = !store.canExecute;

  if (view.scene) preview.setScene(view.scene);
  const bad = new Set<string>();
  if (view.session?.report) {
    for (const check of view.session.report.waypoints) {
      if (!check.in_sphere || check.collides_with.length > 0 || !check.reachable_ik) {
        bad.add(check.name);
      }
    }
  }
  preview.setTrajectory(view.session?.candidate ?? null, bad);

  if (view.session?.report) {
    const r = view.session.report;
    el.report.innerHTML = r.waypoints
      .map((c) => {
        const flags = [
          !c.in_sphere ? "outside sphere" : "",
          c.collides_with.length ? `hits ${c.collides_with.join(", ")}` : "",
          !c.reachable_ik ? "unreachable" : "",
        ]
          .filter(Boolean)
          .join("; ");
        return `<div class="${flags ? "bad" : "ok"}">${c.name}: ${flags || "ok"}</div>`;
      })
      .join("") +
      `<div class="${r.arc_ok ? "ok" : "bad"}">arc: ${r.arc_ok ? "ok" : "flat"}</div>` +
      `<div class="${r.endpoints_ok ? "ok" : "bad"}">endpoints: ${r.endpoints_ok ? "ok" : "off target"}</div>` +
      `<div class="${r.overall ? "ok" : "bad"}"><b>overall: ${r.overall ? "pass" : "fail"}</b></div>`;
  } else {
    el.report.textContent = "";
  }

  el.history.innerHTML = (view.session?.history ?? [])
    .map((h) => `<li>${h.event}</li>`)
    .join("");
}

store.subscribe(render);

function frame(): void {
  requestAnimationFrame(frame);
  const view = store.view;
  if (chain.length === 6) {
    if (playingClip) {
      const now = performance.now() / 1000;
      let t = now - clipStartedAt;
      if (loopClip) t = loopTime(t, playingClip.duration);
      else t = Math.min(t, playingClip.duration);
      preview.setRobotPose(chain, sampleClip(playingClip, t));
    } else if (view.robot) {
      preview.setRobotPose(chain, view.robot.q);
    } else {
      preview.setRobotPose(chain, [0, 0, 0, 0, 0, 0]);
    }
  }
  renderer.render(preview.root, camera);
}

async function boot(): Promise<void> {
  resize();
  applyOrbit();
  chain = await client.getChain();
  await fillClipList();
  frame();
}

void boot();
