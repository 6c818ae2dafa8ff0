/**
 * Layout panel controller: a boundary-and-roads sketch on the way in, the
 * service's city layout on the way out.
 *
 * The overlay holds the /layout response verbatim — the canvas draws the
 * blocks, roads and footprints exactly as returned, never geometry computed
 * locally.
 */

import { LayoutResponse, RoadJson, ServiceError, WorkshopService } from "./types.js";

export const DEFAULT_ROAD_WIDTH = 7;
export const MIN_BOUNDARY_VERTICES = 3;

export interface LayoutSketch {
  boundary: [number, number][];
  roads: RoadJson[];
  seed: number;
}

export interface LayoutPanelOptions {
  service: WorkshopService;
  seed?: number;
  roadWidth?: number;
  onState?: (panel: LayoutPanel) => void;
}

export interface LayoutPanel {
  readonly sketch: LayoutSketch;
  readonly overlay: LayoutResponse | null;
  readonly draftRoad: { a: [number, number]; b: [number, number] } | null;
  readonly busy: boolean;
  readonly lastError: string | null;
  roadWidth: number;
  addVertex(x: number, y: number): void;
  undoVertex(): void;
  clearSketch(): void;
  beginRoad(x: number, y: number): void;
  dragRoad(x: number, y: number): void;
  commitRoad(): void;
  cancelRoad(): void;
  /** Submission is enabled once the boundary closes with three vertices. */
  canSubmit(): boolean;
  submit(): Promise<void>;
  /** Re-run the same sketch under a fresh seed for what-if exploration. */
  reseed(): Promise<void>;
  dispose(): void;
}

export function createLayoutPanel(options: LayoutPanelOptions): LayoutPanel {
  const { service, onState } = options;

  const sketch: LayoutSketch = {
    boundary: [],
    roads: [],
    seed: options.seed ?? 0,
  };

  let overlay: LayoutResponse | null = null;
  let draftRoad: { a: [number, number]; b: [number, number] } | null = null;
  let busy = false;
  let lastError: string | null = null;
  let inFlight: AbortController | null = null;

  const panel: LayoutPanel = {
    sketch,
    roadWidth: options.roadWidth ?? DEFAULT_ROAD_WIDTH,

    get overlay(): LayoutResponse | null {
      return overlay;
    },

    get draftRoad(): { a: [number, number]; b: [number, number] } | null {
      return draftRoad;
    },

    get busy(): boolean {
      return busy;
    },

    get lastError(): string | null {
      return lastError;
    },

    addVertex(x: number, y: number): void {
      sketch.boundary.push([x, y]);
      notify();
    },

    undoVertex(): void {
      sketch.boundary.pop();
      notify();
    },

    clearSketch(): void {
      sketch.boundary = [];
      sketch.roads = [];
      draftRoad = null;
      overlay = null;
      lastError = null;
      notify();
    },

    beginRoad(x: number, y: number): void {
      draftRoad = { a: [x, y], b: [x, y] };
      notify();
    },

    dragRoad(x: number, y: number): void {
      if (draftRoad) {
        draftRoad.b = [x, y];
        notify();
      }
    },

    commitRoad(): void {
      if (!draftRoad) {
        return;
      }
      const { a, b } = draftRoad;
      draftRoad = null;
      if (Math.hypot(b[0] - a[0], b[1] - a[1]) > 1e-9) {
        sketch.roads.push({ a, b, width: panel.roadWidth });
      }
      notify();
    },

    cancelRoad(): void {
      draftRoad = null;
      notify();
    },

    canSubmit(): boolean {
      return sketch.boundary.length >= MIN_BOUNDARY_VERTICES;
    },

    async submit(): Promise<void> {
      if (!panel.canSubmit()) {
        return;
      }
      inFlight?.abort(); // a resubmission supersedes the one on the wire
      const controller = new AbortController();
      inFlight = controller;
      busy = true;
      lastError = null;
      notify();
      try {
        const response = await service.layout(
          {
            boundary: sketch.boundary.map((v) => [...v] as [number, number]),
            primary_roads: sketch.roads.map((r) => ({ ...r })),
            seed: sketch.seed,
          },
          controller.signal
        );
        if (!controller.signal.aborted) {
          overlay = response;
        }
      } catch (err) {
        if (!controller.signal.aborted) {
          lastError = err instanceof ServiceError ? err.message : "service unreachable";
        }
      } finally {
        if (inFlight === controller) {
          inFlight = null;
          busy = false;
        }
        notify();
      }
    },

    reseed(): Promise<void> {
      sketch.seed += 1;
      return panel.submit();
    },

    dispose(): void {
      inFlight?.abort();
      inFlight = null;
    },
  };

  const notify = () => {
    onState?.(panel);
  };

  return panel;
}

/** What the canvas paints, in draw order. */
export type DrawRole =
  | "block"
  | "boundary"
  | "primary-road"
  | "secondary-road"
  | "footprint"
  | "decoration"
  | "draft-road";

export interface DrawItem {
  role: DrawRole;
  /** Polygon ring or polyline vertices in world (meter) coordinates. */
  points: [number, number][];
  closed: boolean;
  width?: number;
}

function rectangleCorners(
  center: [number, number],
  size: [number, number],
  angle: number
): [number, number][] {
  const [cx, cy] = center;
  const [sx, sy] = size;
  const ca = Math.cos(angle);
  const sa = Math.sin(angle);
  const corners: [number, number][] = [];
  for (const [ux, uy] of [
    [-0.5, -0.5],
    [0.5, -0.5],
    [0.5, 0.5],
    [-0.5, 0.5],
  ] as [number, number][]) {
    const dx = ux * sx;
    const dy = uy * sy;
    corners.push([cx + dx * ca - dy * sa, cy + dx * sa + dy * ca]);
  }
  return corners;
}

/**
 * Flatten sketch + overlay into primitives for the canvas.  Overlay shapes
 * are passed through coordinate for coordinate: one "block" item per block
 * exterior (holes drawn as their own rings), one "footprint" per placement.
 */
export function buildDrawList(
  sketch: LayoutSketch,
  overlay: LayoutResponse | null,
  draftRoad: { a: [number, number]; b: [number, number] } | null
): DrawItem[] {
  const items: DrawItem[] = [];
  if (overlay) {
    for (const block of overlay.blocks) {
      items.push({ role: "block", points: block.exterior, closed: true });
      for (const hole of block.holes) {
        items.push({ role: "block", points: hole, closed: true });
      }
    }
    for (const road of overlay.secondary_roads) {
      items.push({
        role: "secondary-road",
        points: [road.a, road.b],
        closed: false,
        width: road.width,
      });
    }
    for (const placement of overlay.placements) {
      items.push({
        role: "footprint",
        points: rectangleCorners(placement.center, placement.size, placement.angle),
        closed: true,
      });
    }
    for (const decoration of overlay.decorations) {
      items.push({ role: "decoration", points: [decoration.position], closed: false });
    }
  }
  if (sketch.boundary.length > 0) {
    items.push({
      role: "boundary",
      points: sketch.boundary,
      closed: sketch.boundary.length >= MIN_BOUNDARY_VERTICES,
    });
  }
  for (const road of sketch.roads) {
    items.push({ role: "primary-road", points: [road.a, road.b], closed: false, width: road.width });
  }
  if (draftRoad) {
    items.push({ role: "draft-road", points: [draftRoad.a, draftRoad.b], closed: false });
  }
  return items;
}
