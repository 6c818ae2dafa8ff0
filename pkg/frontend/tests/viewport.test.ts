import { describe, expect, it } from "vitest";

import { CameraJson } from "../src/types.js";
import {
  ELEVATION_LIMIT,
  createViewport,
  decodeFragment,
  encodeFragment,
  orbitCamera,
  orbitEye,
} from "../src/viewport.js";
import { stubService } from "./helpers.js";

// Reference poses rendered through the service's own camera builder;
// world_to_camera rows are laid out row-major.
const REFERENCE_POSES = [
  {
    orbit: { azimuth: 0.7, elevation: 0.4, distance: 6.5, target: [1.5, 0.5, 1.0] as [number, number, number] },
    intrinsics: { fx: 140, width: 256, height: 192 },
    eye: [6.079030984291347, 4.356864591849018, 3.5312192250062284],
    world_to_camera: [
      -0.6442176872376909, 0.7648421872844885, 0.0, 0.5839054372142921,
      0.2978435767000479, 0.2508701838500143, -0.9210609940028849, 0.34886053702780556,
      -0.7044663052755917, -0.5933637833613873, -0.3894183423086505, 8.24279969190273,
      0.0, 0.0, 0.0, 1.0,
    ],
  },
  {
    orbit: { azimuth: 0.0, elevation: 0.0, distance: 4.0, target: [0, 0, 0] as [number, number, number] },
    intrinsics: { fx: 100, width: 128, height: 128 },
    eye: [4.0, 0.0, 0.0],
    world_to_camera: [
      0.0, 1.0, 0.0, 0.0,
      0.0, 0.0, -1.0, 0.0,
      -1.0, 0.0, 0.0, 4.0,
      0.0, 0.0, 0.0, 1.0,
    ],
  },
];

describe("orbit camera", () => {
  it("matches the service camera convention on reference poses", () => {
    for (const pose of REFERENCE_POSES) {
      const eye = orbitEye(pose.orbit);
      for (let i = 0; i < 3; i += 1) {
        expect(eye[i]).toBeCloseTo(pose.eye[i]!, 12);
      }
      const camera = orbitCamera(pose.orbit, pose.intrinsics);
      expect(camera.world_to_camera).toHaveLength(16);
      for (let i = 0; i < 16; i += 1) {
        expect(camera.world_to_camera[i]).toBeCloseTo(pose.world_to_camera[i]!, 12);
      }
      expect(camera.fx).toBe(pose.intrinsics.fx);
      expect(camera.fy).toBe(pose.intrinsics.fx);
      expect(camera.cx).toBe(pose.intrinsics.width / 2);
      expect(camera.cy).toBe(pose.intrinsics.height / 2);
      expect(camera.width).toBe(pose.intrinsics.width);
      expect(camera.height).toBe(pose.intrinsics.height);
    }
  });

  it("clamps elevation away from the poles", () => {
    const viewport = createViewport({
      service: stubService(),
      intrinsics: { fx: 100, width: 128, height: 128 },
    });
    viewport.rotate(0, 10);
    expect(viewport.orbit.elevation).toBe(ELEVATION_LIMIT);
    viewport.rotate(0, -20);
    expect(viewport.orbit.elevation).toBe(-ELEVATION_LIMIT);
    viewport.dispose();
  });
});

describe("frame fetching", () => {
  it("serves an unchanged pose from cache with byte-identical pixels", async () => {
    let calls = 0;
    const bytes = new Uint8Array([137, 80, 78, 71, 13, 10, 26, 10, 42]);
    const service = stubService({
      render: () => {
        calls += 1;
        return Promise.resolve(bytes);
      },
    });
    const viewport = createViewport({
      service,
      intrinsics: { fx: 100, width: 128, height: 128 },
    });

    viewport.setScene("scene-000001");
    const first = await viewport.refresh();
    const again = await viewport.refresh();
    expect(calls).toBe(1);
    expect(again).toBe(first); // cache hit: the very same bytes

    viewport.rotate(0.2, 0);
    await viewport.refresh();
    expect(calls).toBe(2);
    viewport.dispose();
  });

  it("re-fetches after the scene changes even at the same pose", async () => {
    const served: string[] = [];
    const service = stubService({
      render: (sceneId) => {
        served.push(sceneId);
        return Promise.resolve(new Uint8Array([1]));
      },
    });
    const viewport = createViewport({
      service,
      intrinsics: { fx: 100, width: 128, height: 128 },
    });

    viewport.setScene("scene-a");
    await viewport.refresh();
    viewport.setScene("scene-b");
    await viewport.refresh();
    expect(served).toEqual(["scene-a", "scene-b"]);
    viewport.dispose();
  });

  it("a newer pose aborts the render still on the wire", async () => {
    const signals: AbortSignal[] = [];
    let call = 0;
    const service = stubService({
      render: (_sceneId: string, _camera: CameraJson, signal?: AbortSignal) => {
        call += 1;
        signals.push(signal!);
        if (call === 1) {
          return new Promise((_resolve, reject) => {
            signal!.addEventListener("abort", () =>
              reject(new DOMException("aborted", "AbortError"))
            );
          });
        }
        return Promise.resolve(new Uint8Array([7]));
      },
    });
    const viewport = createViewport({
      service,
      intrinsics: { fx: 100, width: 128, height: 128 },
    });

    viewport.setScene("scene-000001");
    const first = viewport.refresh();
    viewport.rotate(0.3, 0.1);
    const second = viewport.refresh();
    expect(await first).toBeNull();
    expect(await second).toEqual(new Uint8Array([7]));
    expect(signals[0]!.aborted).toBe(true);
    expect(signals[1]!.aborted).toBe(false);
    viewport.dispose();
  });
});

describe("shareable pose fragment", () => {
  it("round-trips the orbit state", () => {
    const orbit = {
      azimuth: 1.25,
      elevation: -0.4,
      distance: 12.5,
      target: [3, -2, 1.5] as [number, number, number],
    };
    expect(decodeFragment(encodeFragment(orbit))).toEqual(orbit);
  });

  it("rejects fragments that do not carry a full pose", () => {
    expect(decodeFragment("")).toBeNull();
    expect(decodeFragment("#az=1&el=2")).toBeNull();
    expect(decodeFragment("#az=nope&el=0&d=1&tx=0&ty=0&tz=0")).toBeNull();
    expect(decodeFragment("#section-2")).toBeNull();
  });
});
