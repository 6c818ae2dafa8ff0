/** Shared test scaffolding: a workshop-service stub and canned responses. */

import { AssembleResponse, LayoutResponse, WorkshopService } from "../src/types.js";

const unstubbed = (name: string) => () => Promise.reject(new Error(`${name} is not stubbed`));

/** A service where every route fails loudly unless the test overrides it. */
export function stubService(overrides: Partial<WorkshopService> = {}): WorkshopService {
  return {
    assets: unstubbed("assets"),
    code: unstubbed("code"),
    assemble: unstubbed("assemble"),
    render: unstubbed("render"),
    layout: unstubbed("layout"),
    city: unstubbed("city"),
    job: unstubbed("job"),
    ...overrides,
  };
}

export function assembleResponse(sceneId: string, nInstances = 84): AssembleResponse {
  return {
    scene_id: sceneId,
    job_id: `job-${sceneId}`,
    stats: {
      n_gaussians: 2688,
      n_instances: nInstances,
      gaussians_per_asset: { C_E: 768, P1: 960, W1: 960 },
      bbox: { min: [0, 0, 0], max: [8, 6, 9] },
    },
  };
}

export function layoutResponse(seed = 0): LayoutResponse {
  return {
    boundary: [
      [0, 0],
      [90, 0],
      [90, 90],
      [0, 90],
    ],
    primary_roads: [{ a: [45, 0], b: [45, 90], width: 7 }],
    blocks: [
      {
        exterior: [
          [0, 0],
          [41.5, 0],
          [41.5, 90],
          [0, 90],
          [0, 0],
        ],
        holes: [],
      },
      {
        exterior: [
          [48.5, 0],
          [90, 0],
          [90, 90],
          [48.5, 90],
          [48.5, 0],
        ],
        holes: [
          [
            [60, 30],
            [70, 30],
            [70, 40],
            [60, 40],
            [60, 30],
          ],
        ],
      },
    ],
    secondary_roads: [{ a: [41.5, 22], b: [0, 22], width: 3.5 }],
    placements: [
      {
        center: [20 + seed, 45],
        size: [9, 6],
        angle: 0,
        height: 9,
        block_index: 0,
        seed: 17 + seed,
        var_seed: 3,
        code_id: "demo",
      },
    ],
    decorations: [{ kind: "lamp", position: [10, 20.5], rotation: 1.25 }],
    profile_names: ["default", "default"],
  };
}
