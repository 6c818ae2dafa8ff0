/**
 * Preview viewport controller: an orbit camera mapped to server renders.
 *
 * The camera convention matches the service exactly (+x right, +y down,
 * +z forward, world up +z): azimuth spins around +z, elevation tilts above
 * the ground plane, distance backs away from the target.  Frames for a
 * camera already seen are served from a local cache, so an unchanged pose
 * costs no request and displays byte-identical pixels.
 */

import { CameraJson, WorkshopService } from "./types.js";

export interface OrbitState {
  azimuth: number; // radians around +z
  elevation: number; // radians above the ground plane
  distance: number;
  target: [number, number, number];
}

export interface Intrinsics {
  fx: number;
  width: number;
  height: number;
}

export const ELEVATION_LIMIT = 1.45; // keep clear of the poles
export const MIN_DISTANCE = 0.2;

export function defaultOrbit(): OrbitState {
  return { azimuth: 0.6, elevation: 0.35, distance: 8, target: [0, 0, 1] };
}

export function orbitEye(orbit: OrbitState): [number, number, number] {
  const { azimuth, elevation, distance, target } = orbit;
  const horizontal = Math.cos(elevation) * distance;
  return [
    target[0] + horizontal * Math.cos(azimuth),
    target[1] + horizontal * Math.sin(azimuth),
    target[2] + Math.sin(elevation) * distance,
  ];
}

function subtract(a: readonly number[], b: readonly number[]): [number, number, number] {
  return [(a[0] as number) - (b[0] as number), (a[1] as number) - (b[1] as number), (a[2] as number) - (b[2] as number)];
}

function cross(a: readonly number[], b: readonly number[]): [number, number, number] {
  return [
    (a[1] as number) * (b[2] as number) - (a[2] as number) * (b[1] as number),
    (a[2] as number) * (b[0] as number) - (a[0] as number) * (b[2] as number),
    (a[0] as number) * (b[1] as number) - (a[1] as number) * (b[0] as number),
  ];
}

function normalize(v: [number, number, number]): [number, number, number] {
  const n = Math.hypot(v[0], v[1], v[2]);
  if (n < 1e-12) {
    throw new Error("degenerate camera direction");
  }
  return [v[0] / n, v[1] / n, v[2] / n];
}

/** Row-major 4x4 world-to-camera for an eye looking at a target, up +z. */
export function lookAtMatrix(
  eye: readonly [number, number, number],
  target: readonly [number, number, number]
): number[] {
  const forward = normalize(subtract(target, eye));
  const right = normalize(cross(forward, [0, 0, 1]));
  const down = cross(forward, right);
  const rows = [right, down, forward];
  const matrix = new Array<number>(16).fill(0);
  for (let r = 0; r < 3; r += 1) {
    const row = rows[r] as [number, number, number];
    matrix[r * 4 + 0] = row[0];
    matrix[r * 4 + 1] = row[1];
    matrix[r * 4 + 2] = row[2];
    matrix[r * 4 + 3] = -(row[0] * eye[0] + row[1] * eye[1] + row[2] * eye[2]);
  }
  matrix[15] = 1;
  return matrix;
}

export function orbitCamera(orbit: OrbitState, intrinsics: Intrinsics): CameraJson {
  const { fx, width, height } = intrinsics;
  return {
    world_to_camera: lookAtMatrix(orbitEye(orbit), orbit.target),
    fx,
    fy: fx,
    cx: width / 2,
    cy: height / 2,
    width,
    height,
  };
}

/** Canonical cache key: two cameras share a key iff their JSON is identical. */
export function cameraKey(camera: CameraJson): string {
  return JSON.stringify([
    camera.world_to_camera,
    camera.fx,
    camera.fy,
    camera.cx,
    camera.cy,
    camera.width,
    camera.height,
  ]);
}

const FRAGMENT_FIELDS = ["az", "el", "d", "tx", "ty", "tz"] as const;

/** Serialize the orbit pose as a shareable URL fragment. */
export function encodeFragment(orbit: OrbitState): string {
  const values = [
    orbit.azimuth,
    orbit.elevation,
    orbit.distance,
    orbit.target[0],
    orbit.target[1],
    orbit.target[2],
  ];
  return "#" + FRAGMENT_FIELDS.map((field, i) => `${field}=${values[i]}`).join("&");
}

export function decodeFragment(fragment: string): OrbitState | null {
  const params = new URLSearchParams(fragment.replace(/^#/, ""));
  const values: number[] = [];
  for (const field of FRAGMENT_FIELDS) {
    const raw = params.get(field);
    if (raw === null) {
      return null;
    }
    const value = Number(raw);
    if (!Number.isFinite(value)) {
      return null;
    }
    values.push(value);
  }
  return {
    azimuth: values[0] as number,
    elevation: values[1] as number,
    distance: values[2] as number,
    target: [values[3] as number, values[4] as number, values[5] as number],
  };
}

export interface ViewportOptions {
  service: WorkshopService;
  intrinsics: Intrinsics;
  orbit?: OrbitState;
  /** Called with the fresh frame bytes after every successful refresh. */
  onFrame?: (png: Uint8Array, camera: CameraJson) => void;
  onError?: (message: string) => void;
}

export interface Viewport {
  readonly orbit: OrbitState;
  readonly frame: Uint8Array | null;
  setScene(sceneId: string): void;
  rotate(dAzimuth: number, dElevation: number): void;
  dolly(factor: number): void;
  /** Render the current pose; resolves with the frame (cached or fetched),
   * or null when no scene is set or the request lost to a newer one. */
  refresh(): Promise<Uint8Array | null>;
  dispose(): void;
}

export function createViewport(options: ViewportOptions): Viewport {
  const { service, intrinsics, onFrame, onError } = options;
  const orbit = options.orbit ?? defaultOrbit();
  const cache = new Map<string, Uint8Array>();

  let sceneId: string | null = null;
  let frame: Uint8Array | null = null;
  let inFlight: AbortController | null = null;

  return {
    orbit,

    get frame(): Uint8Array | null {
      return frame;
    },

    setScene(next: string): void {
      if (next !== sceneId) {
        sceneId = next;
        cache.clear(); // frames are per scene
      }
    },

    rotate(dAzimuth: number, dElevation: number): void {
      orbit.azimuth = (orbit.azimuth + dAzimuth) % (Math.PI * 2);
      orbit.elevation = Math.min(
        ELEVATION_LIMIT,
        Math.max(-ELEVATION_LIMIT, orbit.elevation + dElevation)
      );
    },

    dolly(factor: number): void {
      orbit.distance = Math.max(MIN_DISTANCE, orbit.distance * factor);
    },

    async refresh(): Promise<Uint8Array | null> {
      if (sceneId === null) {
        return null;
      }
      const camera = orbitCamera(orbit, intrinsics);
      const key = cameraKey(camera);
      const cached = cache.get(key);
      if (cached) {
        frame = cached;
        onFrame?.(cached, camera);
        return cached;
      }
      inFlight?.abort(); // a newer pose supersedes the one on the wire
      const controller = new AbortController();
      inFlight = controller;
      try {
        const png = await service.render(sceneId, camera, controller.signal);
        if (controller.signal.aborted) {
          return null;
        }
        cache.set(key, png);
        frame = png;
        onFrame?.(png, camera);
        return png;
      } catch (err) {
        if (!controller.signal.aborted) {
          onError?.(err instanceof Error ? err.message : String(err));
        }
        return null;
      } finally {
        if (inFlight === controller) {
          inFlight = null;
        }
      }
    },

    dispose(): void {
      inFlight?.abort();
      inFlight = null;
    },
  };
}
