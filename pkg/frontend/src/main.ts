/** Browser entry point: wires the three panels to the DOM. */

import { createHttpService, DEFAULT_SERVICE_URL } from "./api.js";
import { createEditor, Editor, EditorSession } from "./editor.js";
import { highlightHtml, squiggleHtml } from "./highlight.js";
import { buildDrawList, createLayoutPanel, DrawItem, LayoutPanel } from "./layout.js";
import { CameraJson } from "./types.js";
import { createViewport, decodeFragment, encodeFragment, Viewport } from "./viewport.js";

const FALLBACK_CODE = `building demo {
  dims 8 6 9
  level base { C_E (P1 W1)* C_E }
  level mid x 2 { C_E (W1 P1)* C_E }
}`;

const ROLE_STYLE: Record<DrawItem["role"], { stroke: string; fill: string | null; width: number }> = {
  block: { stroke: "#64748b", fill: "rgba(100, 116, 139, 0.18)", width: 1.5 },
  boundary: { stroke: "#a855f7", fill: null, width: 2.5 },
  "primary-road": { stroke: "#22c55e", fill: null, width: 3 },
  "secondary-road": { stroke: "#86efac", fill: null, width: 1.5 },
  footprint: { stroke: "#f59e0b", fill: "rgba(245, 158, 11, 0.25)", width: 1 },
  decoration: { stroke: "#38bdf8", fill: "#38bdf8", width: 1 },
  "draft-road": { stroke: "#22c55e", fill: null, width: 1.5 },
};

function element<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function serviceUrl(): string {
  return new URLSearchParams(window.location.search).get("service") ?? DEFAULT_SERVICE_URL;
}

function main(): void {
  const service = createHttpService(serviceUrl());

  // --- editor panel ------------------------------------------------------
  const codeInput = element<HTMLTextAreaElement>("code-input");
  const highlightLayer = element<HTMLElement>("code-highlight");
  const squiggleLayer = element<HTMLElement>("code-squiggles");
  const diagnosticLine = element<HTMLElement>("diagnostic-line");
  const statsReadout = element<HTMLElement>("stats-readout");
  const banner = element<HTMLElement>("banner");

  const paintEditor = (session: EditorSession): void => {
    highlightLayer.innerHTML = highlightHtml(session.code);
    squiggleLayer.innerHTML = squiggleHtml(session.code, session.diagnostics);
    const diagnostic = session.diagnostics[0];
    diagnosticLine.textContent = diagnostic
      ? `line ${diagnostic.line}, col ${diagnostic.col}: ${diagnostic.message}`
      : "";
    statsReadout.textContent = session.stats
      ? `${session.stats.n_instances} instances, ${session.stats.n_gaussians} gaussians`
      : "";
    banner.textContent = session.banner ?? "";
    banner.hidden = session.banner === null;
  };

  const editor: Editor = createEditor({
    service,
    initialCode: FALLBACK_CODE,
    onState: paintEditor,
    onAssembled: (sceneId) => {
      viewport.setScene(sceneId);
      void viewport.refresh();
    },
  });

  codeInput.value = editor.session.code;
  paintEditor(editor.session);
  codeInput.addEventListener("input", () => {
    editor.edit(codeInput.value);
  });
  const syncScroll = () => {
    highlightLayer.scrollTop = codeInput.scrollTop;
    highlightLayer.scrollLeft = codeInput.scrollLeft;
    squiggleLayer.scrollTop = codeInput.scrollTop;
    squiggleLayer.scrollLeft = codeInput.scrollLeft;
  };
  codeInput.addEventListener("scroll", syncScroll);
  codeInput.addEventListener("input", syncScroll);

  const dimInputs = (["dim-x", "dim-y", "dim-z"] as const).map((id) =>
    element<HTMLInputElement>(id)
  );
  const readDims = (): [number, number, number] | null => {
    const values = dimInputs.map((input) => Number(input.value));
    return values.every((v) => Number.isFinite(v) && v > 0)
      ? (values as [number, number, number])
      : null;
  };
  for (const input of dimInputs) {
    input.addEventListener("change", () => {
      editor.setDims(readDims());
    });
  }
  element<HTMLInputElement>("seed-input").addEventListener("change", (event) => {
    editor.setSeed(Number((event.target as HTMLInputElement).value) || 0);
  });

  // Replace the fallback with the library's first building, when there is one.
  void (async () => {
    try {
      const assets = await service.assets();
      const first = assets.codes[0];
      if (first) {
        const { code } = await service.code(first);
        codeInput.value = code;
        editor.edit(code);
      } else {
        editor.edit(codeInput.value);
      }
    } catch {
      editor.edit(codeInput.value); // offline: assemble will raise the banner
    }
  })();

  // --- preview viewport ---------------------------------------------------
  const previewImage = element<HTMLImageElement>("preview-image");
  let previewUrl: string | null = null;

  const viewport: Viewport = createViewport({
    service,
    intrinsics: { fx: 360, width: 480, height: 360 },
    orbit: decodeFragment(window.location.hash) ?? undefined,
    onFrame: (png: Uint8Array, _camera: CameraJson) => {
      if (previewUrl) {
        URL.revokeObjectURL(previewUrl);
      }
      const buffer = png.slice().buffer as ArrayBuffer;
      previewUrl = URL.createObjectURL(new Blob([buffer], { type: "image/png" }));
      previewImage.src = previewUrl;
    },
    onError: (message: string) => {
      banner.textContent = message;
      banner.hidden = false;
    },
  });

  const shareOrbit = () => {
    history.replaceState(null, "", encodeFragment(viewport.orbit));
  };
  let dragFrom: { x: number; y: number } | null = null;
  previewImage.addEventListener("pointerdown", (event) => {
    dragFrom = { x: event.clientX, y: event.clientY };
    previewImage.setPointerCapture(event.pointerId);
  });
  previewImage.addEventListener("pointermove", (event) => {
    if (!dragFrom) {
      return;
    }
    viewport.rotate((event.clientX - dragFrom.x) * 0.01, (event.clientY - dragFrom.y) * 0.01);
    dragFrom = { x: event.clientX, y: event.clientY };
    shareOrbit();
    void viewport.refresh();
  });
  previewImage.addEventListener("pointerup", () => {
    dragFrom = null;
  });
  previewImage.addEventListener(
    "wheel",
    (event) => {
      event.preventDefault();
      viewport.dolly(Math.exp(event.deltaY * 0.001));
      shareOrbit();
      void viewport.refresh();
    },
    { passive: false }
  );

  // --- layout panel -------------------------------------------------------
  const canvas = element<HTMLCanvasElement>("layout-canvas");
  const context = canvas.getContext("2d");
  if (!context) {
    throw new Error("canvas 2d context unavailable");
  }
  const layoutStatus = element<HTMLElement>("layout-status");
  const submitButton = element<HTMLButtonElement>("layout-submit");
  const reseedButton = element<HTMLButtonElement>("layout-reseed");
  const cityButton = element<HTMLButtonElement>("layout-city");

  const paintLayout = (panel: LayoutPanel): void => {
    const items = buildDrawList(panel.sketch, panel.overlay, panel.draftRoad);
    context.clearRect(0, 0, canvas.width, canvas.height);
    context.fillStyle = "#0f172a";
    context.fillRect(0, 0, canvas.width, canvas.height);
    const toScreen = fitTransform(items, canvas.width, canvas.height);
    for (const item of items) {
      const style = ROLE_STYLE[item.role];
      context.strokeStyle = style.stroke;
      context.lineWidth = style.width;
      if (item.role === "decoration") {
        const [p] = item.points;
        if (p) {
          const [x, y] = toScreen(p);
          context.fillStyle = style.fill ?? style.stroke;
          context.beginPath();
          context.arc(x, y, 2.5, 0, Math.PI * 2);
          context.fill();
        }
        continue;
      }
      context.beginPath();
      item.points.forEach((point, index) => {
        const [x, y] = toScreen(point);
        if (index === 0) {
          context.moveTo(x, y);
        } else {
          context.lineTo(x, y);
        }
      });
      if (item.closed) {
        context.closePath();
      }
      if (style.fill && item.closed) {
        context.fillStyle = style.fill;
        context.fill();
      }
      context.stroke();
    }
    for (const vertex of panel.sketch.boundary) {
      const [x, y] = toScreen(vertex);
      context.fillStyle = "#a855f7";
      context.beginPath();
      context.arc(x, y, 3.5, 0, Math.PI * 2);
      context.fill();
    }
    submitButton.disabled = !panel.canSubmit() || panel.busy;
    reseedButton.disabled = panel.overlay === null || panel.busy;
    cityButton.disabled = panel.overlay === null || panel.busy;
    layoutStatus.textContent = panel.lastError ?? (panel.busy ? "planning..." : "");
  };

  const layoutPanel = createLayoutPanel({ service, onState: paintLayout });
  paintLayout(layoutPanel);

  // World <-> canvas mapping; pure presentation, padded fit around content.
  let worldFromScreen: (x: number, y: number) => [number, number] = (x, y) => [x, y];
  function fitTransform(
    items: DrawItem[],
    width: number,
    height: number
  ): (p: [number, number]) => [number, number] {
    let minX = Infinity;
    let minY = Infinity;
    let maxX = -Infinity;
    let maxY = -Infinity;
    for (const item of items) {
      for (const [x, y] of item.points) {
        minX = Math.min(minX, x);
        minY = Math.min(minY, y);
        maxX = Math.max(maxX, x);
        maxY = Math.max(maxY, y);
      }
    }
    if (!Number.isFinite(minX) || maxX - minX < 1e-9 || maxY - minY < 1e-9) {
      minX = -60;
      minY = -60;
      maxX = 60;
      maxY = 60;
    }
    const pad = 20;
    const scale = Math.min((width - 2 * pad) / (maxX - minX), (height - 2 * pad) / (maxY - minY));
    const offsetX = (width - scale * (maxX - minX)) / 2;
    const offsetY = (height - scale * (maxY - minY)) / 2;
    worldFromScreen = (sx, sy) => [
      minX + (sx - offsetX) / scale,
      maxY - (sy - offsetY) / scale,
    ];
    return ([x, y]) => [offsetX + scale * (x - minX), offsetY + scale * (maxY - y)];
  }

  const canvasPoint = (event: PointerEvent): [number, number] => {
    const rect = canvas.getBoundingClientRect();
    const sx = ((event.clientX - rect.left) / rect.width) * canvas.width;
    const sy = ((event.clientY - rect.top) / rect.height) * canvas.height;
    return worldFromScreen(sx, sy);
  };

  const modeBoundary = element<HTMLInputElement>("mode-boundary");
  let roadDrag = false;
  canvas.addEventListener("pointerdown", (event) => {
    const [x, y] = canvasPoint(event);
    if (modeBoundary.checked) {
      layoutPanel.addVertex(x, y);
    } else {
      roadDrag = true;
      canvas.setPointerCapture(event.pointerId);
      layoutPanel.beginRoad(x, y);
    }
  });
  canvas.addEventListener("pointermove", (event) => {
    if (roadDrag) {
      const [x, y] = canvasPoint(event);
      layoutPanel.dragRoad(x, y);
    }
  });
  canvas.addEventListener("pointerup", () => {
    if (roadDrag) {
      roadDrag = false;
      layoutPanel.commitRoad();
    }
  });

  element<HTMLButtonElement>("layout-undo").addEventListener("click", () => {
    layoutPanel.undoVertex();
  });
  element<HTMLButtonElement>("layout-clear").addEventListener("click", () => {
    layoutPanel.clearSketch();
  });
  submitButton.addEventListener("click", () => {
    void layoutPanel.submit();
  });
  reseedButton.addEventListener("click", () => {
    void layoutPanel.reseed();
  });
  cityButton.addEventListener("click", () => {
    const overlay = layoutPanel.overlay;
    if (!overlay) {
      return;
    }
    void (async () => {
      try {
        const response = await service.city(overlay, layoutPanel.sketch.seed);
        viewport.setScene(response.scene_id);
        await viewport.refresh();
      } catch (err) {
        layoutStatus.textContent = err instanceof Error ? err.message : String(err);
      }
    })();
  });
}

main();
