/** JSON payload shapes of the workshop service, mirrored field for field. */

export interface Span {
  line: number;
  col: number;
  end_line: number;
  end_col: number;
}

/** Body of a 400 response for a code error: an error tag, a message, a span. */
export type ServiceDiagnostic = Span & {
  error: string;
  message: string;
};

export interface AssembleStats {
  n_gaussians: number;
  n_instances: number;
  gaussians_per_asset: Record<string, number>;
  bbox: { min: number[]; max: number[] };
}

export interface AssembleResponse {
  scene_id: string;
  job_id: string;
  stats: AssembleStats;
}

export interface RoadJson {
  a: [number, number];
  b: [number, number];
  width: number;
}

export interface BlockJson {
  exterior: [number, number][];
  holes: [number, number][][];
}

export interface PlacementJson {
  center: [number, number];
  size: [number, number];
  angle: number;
  height: number;
  block_index: number;
  seed: number;
  var_seed: number;
  code_id: string | null;
}

export interface DecorationJson {
  kind: string;
  position: [number, number];
  rotation: number;
}

export interface LayoutResponse {
  boundary: [number, number][];
  primary_roads: RoadJson[];
  blocks: BlockJson[];
  secondary_roads: RoadJson[];
  placements: PlacementJson[];
  decorations: DecorationJson[];
  profile_names: string[];
}

export interface CityResponse {
  scene_id: string;
  job_id: string;
  stats: AssembleStats;
  layout: LayoutResponse;
}

export interface CameraJson {
  world_to_camera: number[];
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
}

export interface AssetInfo {
  id: string;
  extent: number[];
  pivot: number[];
}

export interface AssetsResponse {
  assets: AssetInfo[];
  variance_pools: Record<string, number>;
  codes: string[];
}

export interface JobJson {
  id: string;
  kind: string;
  status: string;
  progress: number;
  artifacts: Record<string, string>;
  error: string | null;
}

export interface AssembleRequest {
  code: string;
  dims?: [number, number, number];
  seed?: number;
}

export interface LayoutRequest {
  boundary: [number, number][];
  primary_roads: RoadJson[];
  seed?: number;
}

/** Non-2xx response, with the parsed `detail` body when there was one. */
export class ServiceError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    const message =
      detail !== null &&
      typeof detail === "object" &&
      "message" in detail &&
      typeof (detail as { message: unknown }).message === "string"
        ? (detail as { message: string }).message
        : typeof detail === "string"
          ? detail
          : `service responded with status ${status}`;
    super(message);
    this.name = "ServiceError";
    this.status = status;
    this.detail = detail;
  }
}

/**
 * Pull a code diagnostic out of a 400 `detail` body.  Returns null when the
 * body is not the code-error shape (e.g. a plain bad-request message), so the
 * caller can fall back to a banner instead of a squiggle.
 */
export function diagnosticFromDetail(detail: unknown): ServiceDiagnostic | null {
  if (detail === null || typeof detail !== "object") {
    return null;
  }
  const d = detail as Record<string, unknown>;
  const numeric = ["line", "col", "end_line", "end_col"].every(
    (key) => typeof d[key] === "number" && Number.isFinite(d[key] as number)
  );
  if (!numeric || typeof d.error !== "string" || typeof d.message !== "string") {
    return null;
  }
  return {
    error: d.error,
    message: d.message,
    line: d.line as number,
    col: d.col as number,
    end_line: d.end_line as number,
    end_col: d.end_col as number,
  };
}

/** The full service surface the panels talk to; mocked wholesale in tests. */
export interface WorkshopService {
  assets(): Promise<AssetsResponse>;
  code(building: string): Promise<{ building: string; code: string }>;
  assemble(request: AssembleRequest, signal?: AbortSignal): Promise<AssembleResponse>;
  render(sceneId: string, camera: CameraJson, signal?: AbortSignal): Promise<Uint8Array>;
  layout(request: LayoutRequest, signal?: AbortSignal): Promise<LayoutResponse>;
  city(layout: LayoutRequest | LayoutResponse, seed: number, signal?: AbortSignal): Promise<CityResponse>;
  job(jobId: string): Promise<JobJson>;
}
