/**
 * Editor session controller: owns the code text and its assemble lifecycle.
 *
 * Edits are debounced, and at most one assemble request is ever in flight —
 * an edit that lands mid-request is queued and flushed with the latest text
 * once the current request settles.  Every number the panel displays comes
 * straight out of a service response.
 */

import {
  AssembleStats,
  ServiceDiagnostic,
  ServiceError,
  WorkshopService,
  diagnosticFromDetail,
} from "./types.js";
import { OrbitState, defaultOrbit } from "./viewport.js";

export const ASSEMBLE_DEBOUNCE_MS = 400;

export interface EditorSession {
  code: string;
  dims: [number, number, number] | null;
  seed: number;
  dirty: boolean;
  diagnostics: ServiceDiagnostic[];
  camera: OrbitState;
  sceneId: string | null;
  stats: AssembleStats | null;
  /** Banner text when the service is unreachable or misbehaving; editing
   * keeps working while it is shown. */
  banner: string | null;
}

export interface EditorOptions {
  service: WorkshopService;
  initialCode?: string;
  dims?: [number, number, number] | null;
  seed?: number;
  debounceMs?: number;
  /** Called after every session change so the view can repaint. */
  onState?: (session: EditorSession) => void;
  /** Called when an assemble succeeds, with the fresh scene id. */
  onAssembled?: (sceneId: string) => void;
}

export interface Editor {
  readonly session: EditorSession;
  /** Record a text edit and (re)arm the debounce timer. */
  edit(text: string): void;
  setDims(dims: [number, number, number] | null): void;
  setSeed(seed: number): void;
  /** True while an edit is waiting on the timer or on a queued flush. */
  assemblePending(): boolean;
  /** True while an assemble request is on the wire. */
  assembleInFlight(): boolean;
  /** Skip the debounce and assemble now; resolves when the text that was
   * current at call time has been assembled (or failed). */
  flushNow(): Promise<void>;
  dispose(): void;
}

export function createEditor(options: EditorOptions): Editor {
  const { service, onState, onAssembled } = options;
  const debounceMs = options.debounceMs ?? ASSEMBLE_DEBOUNCE_MS;

  const session: EditorSession = {
    code: options.initialCode ?? "",
    dims: options.dims ?? null,
    seed: options.seed ?? 0,
    dirty: false,
    diagnostics: [],
    camera: defaultOrbit(),
    sceneId: null,
    stats: null,
    banner: null,
  };

  let timer: ReturnType<typeof setTimeout> | null = null;
  let inFlight = false;
  let queued = false;
  let settled: (() => void)[] = [];

  const notify = () => {
    onState?.(session);
  };

  const armTimer = () => {
    if (timer !== null) {
      clearTimeout(timer);
    }
    timer = setTimeout(() => {
      timer = null;
      void flush();
    }, debounceMs);
  };

  async function assembleOnce(): Promise<void> {
    const request = {
      code: session.code,
      ...(session.dims ? { dims: session.dims } : {}),
      seed: session.seed,
    };
    try {
      const response = await service.assemble(request);
      session.diagnostics = [];
      session.banner = null;
      session.dirty = false;
      session.sceneId = response.scene_id;
      session.stats = response.stats;
      notify();
      onAssembled?.(response.scene_id);
    } catch (err) {
      if (err instanceof ServiceError) {
        const diagnostic = err.status === 400 ? diagnosticFromDetail(err.detail) : null;
        if (diagnostic) {
          session.diagnostics = [diagnostic];
          session.banner = null;
        } else {
          session.banner = err.message;
        }
      } else {
        session.banner = "service unreachable - edits are kept locally";
      }
      notify();
    }
  }

  async function flush(): Promise<void> {
    if (inFlight) {
      queued = true;
      return;
    }
    inFlight = true;
    try {
      await assembleOnce();
    } finally {
      inFlight = false;
      if (queued) {
        queued = false;
        void flush(); // waiters resolve once the queue fully drains
      } else {
        const done = settled;
        settled = [];
        for (const resolve of done) {
          resolve();
        }
      }
    }
  }

  return {
    session,

    edit(text: string): void {
      session.code = text;
      session.dirty = true;
      notify();
      armTimer();
    },

    setDims(dims: [number, number, number] | null): void {
      session.dims = dims;
      session.dirty = true;
      notify();
      armTimer();
    },

    setSeed(seed: number): void {
      session.seed = seed;
      session.dirty = true;
      notify();
      armTimer();
    },

    assemblePending(): boolean {
      return timer !== null || queued;
    },

    assembleInFlight(): boolean {
      return inFlight;
    },

    flushNow(): Promise<void> {
      if (timer !== null) {
        clearTimeout(timer);
        timer = null;
      }
      const waited = new Promise<void>((resolve) => {
        settled.push(resolve);
      });
      void flush();
      return waited;
    },

    dispose(): void {
      if (timer !== null) {
        clearTimeout(timer);
        timer = null;
      }
    },
  };
}
