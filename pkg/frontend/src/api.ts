/** HTTP client for the workshop service.  One thin fetch wrapper per route. */

import {
  AssembleRequest,
  AssembleResponse,
  AssetsResponse,
  CameraJson,
  CityResponse,
  JobJson,
  LayoutRequest,
  LayoutResponse,
  ServiceError,
  WorkshopService,
} from "./types.js";

export const DEFAULT_SERVICE_URL = "http://127.0.0.1:8731";

async function throwForStatus(response: Response): Promise<void> {
  if (response.ok) {
    return;
  }
  let detail: unknown = null;
  try {
    const body = (await response.json()) as { detail?: unknown };
    detail = body.detail ?? body;
  } catch {
    detail = response.statusText;
  }
  throw new ServiceError(response.status, detail);
}

async function getJson<T>(url: string): Promise<T> {
  const response = await fetch(url);
  await throwForStatus(response);
  return (await response.json()) as T;
}

async function postJson<T>(url: string, body: unknown, signal?: AbortSignal): Promise<T> {
  const response = await fetch(url, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
    signal,
  });
  await throwForStatus(response);
  return (await response.json()) as T;
}

export function createHttpService(baseUrl: string = DEFAULT_SERVICE_URL): WorkshopService {
  const base = baseUrl.replace(/\/+$/, "");
  return {
    assets(): Promise<AssetsResponse> {
      return getJson(`${base}/assets`);
    },

    code(building: string): Promise<{ building: string; code: string }> {
      return getJson(`${base}/code/${encodeURIComponent(building)}`);
    },

    assemble(request: AssembleRequest, signal?: AbortSignal): Promise<AssembleResponse> {
      return postJson(`${base}/assemble`, request, signal);
    },

    async render(sceneId: string, camera: CameraJson, signal?: AbortSignal): Promise<Uint8Array> {
      const response = await fetch(`${base}/render`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ scene_id: sceneId, camera }),
        signal,
      });
      await throwForStatus(response);
      return new Uint8Array(await response.arrayBuffer());
    },

    layout(request: LayoutRequest, signal?: AbortSignal): Promise<LayoutResponse> {
      return postJson(`${base}/layout`, request, signal);
    },

    city(
      layout: LayoutRequest | LayoutResponse,
      seed: number,
      signal?: AbortSignal
    ): Promise<CityResponse> {
      return postJson(`${base}/city`, { layout, seed }, signal);
    },

    job(jobId: string): Promise<JobJson> {
      return getJson(`${base}/jobs/${encodeURIComponent(jobId)}`);
    },
  };
}
