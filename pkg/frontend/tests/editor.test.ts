import { afterEach, describe, expect, it, vi } from "vitest";

import { ASSEMBLE_DEBOUNCE_MS, createEditor } from "../src/editor.js";
import { spanToOffsets, squiggleHtml } from "../src/highlight.js";
import { AssembleRequest, ServiceError } from "../src/types.js";
import { assembleResponse, stubService } from "./helpers.js";

afterEach(() => {
  vi.useRealTimers();
});

describe("editor diagnostics", () => {
  it("shows the exact span reported by a 400 response", async () => {
    const detail = {
      error: "ParseError",
      message: "expected '}' to close the level body",
      line: 2,
      col: 11,
      end_line: 2,
      end_col: 12,
    };
    const service = stubService({
      assemble: () => Promise.reject(new ServiceError(400, detail)),
    });
    const editor = createEditor({ service });

    const text = "building B {\n  level L ( C_E\n}";
    editor.edit(text);
    await editor.flushNow();

    // The session holds the diagnostic verbatim, field for field.
    expect(editor.session.diagnostics).toEqual([detail]);
    expect(editor.session.banner).toBeNull();

    // The squiggle layer marks exactly the reported characters: the span
    // (line 2, col 11) .. (line 2, col 12) covers the lone "(".
    expect(spanToOffsets(text, detail)).toEqual({ start: 23, end: 24 });
    expect(text.slice(23, 24)).toBe("(");
    const html = squiggleHtml(text, editor.session.diagnostics);
    expect(html).toContain(
      `<span class="squiggle" data-message="expected '}' to close the level body">(</span>`
    );
    editor.dispose();
  });

  it("clears diagnostics on the next successful assemble", async () => {
    const detail = {
      error: "ParseError",
      message: "unexpected token",
      line: 1,
      col: 1,
      end_line: 1,
      end_col: 2,
    };
    let failNext = true;
    const assembled: string[] = [];
    const service = stubService({
      assemble: () =>
        failNext
          ? Promise.reject(new ServiceError(400, detail))
          : Promise.resolve(assembleResponse("scene-000007")),
    });
    const editor = createEditor({
      service,
      onAssembled: (sceneId) => assembled.push(sceneId),
    });

    editor.edit("}");
    await editor.flushNow();
    expect(editor.session.diagnostics).toHaveLength(1);

    failNext = false;
    editor.edit("building B { level L { C_E } }");
    await editor.flushNow();
    expect(editor.session.diagnostics).toEqual([]);
    expect(editor.session.dirty).toBe(false);
    expect(editor.session.sceneId).toBe("scene-000007");
    expect(assembled).toEqual(["scene-000007"]);
    editor.dispose();
  });

  it("keeps editing through a banner when the service is unreachable", async () => {
    let reachable = false;
    const service = stubService({
      assemble: () =>
        reachable
          ? Promise.resolve(assembleResponse("scene-000001"))
          : Promise.reject(new TypeError("fetch failed")),
    });
    const editor = createEditor({ service });

    editor.edit("building B { level L { C_E } }");
    await editor.flushNow();
    expect(editor.session.banner).toMatch(/unreachable/);

    // Editing continues offline; the session keeps tracking the text.
    editor.edit("building B { level L { W1 } }");
    expect(editor.session.code).toBe("building B { level L { W1 } }");
    expect(editor.session.dirty).toBe(true);

    reachable = true;
    await editor.flushNow();
    expect(editor.session.banner).toBeNull();
    expect(editor.session.sceneId).toBe("scene-000001");
    editor.dispose();
  });

  it("surfaces the instance count straight from the assemble stats", async () => {
    const requests: AssembleRequest[] = [];
    const service = stubService({
      assemble: (request) => {
        requests.push(request);
        return Promise.resolve(assembleResponse("scene-000002", 84));
      },
    });
    const editor = createEditor({ service, initialCode: "building B { level L { C_E } }" });

    editor.setDims([8, 6, 9]);
    await editor.flushNow();
    expect(requests[0]?.dims).toEqual([8, 6, 9]);
    expect(editor.session.stats?.n_instances).toBe(84);
    editor.dispose();
  });
});

describe("assemble debounce", () => {
  it("yields at most one in-flight assemble under 10-edit bursts", async () => {
    vi.useFakeTimers();
    let inFlightNow = 0;
    let maxInFlight = 0;
    const assembledCodes: string[] = [];
    const service = stubService({
      assemble: (request) =>
        new Promise((resolve) => {
          inFlightNow += 1;
          maxInFlight = Math.max(maxInFlight, inFlightNow);
          assembledCodes.push(request.code);
          setTimeout(() => {
            inFlightNow -= 1;
            resolve(assembleResponse(`scene-${assembledCodes.length}`));
          }, 900);
        }),
    });
    const editor = createEditor({ service });

    // Burst one: 10 rapid edits while idle.
    for (let i = 0; i < 10; i += 1) {
      editor.edit(`edit ${i}`);
      await vi.advanceTimersByTimeAsync(50);
    }
    await vi.advanceTimersByTimeAsync(ASSEMBLE_DEBOUNCE_MS);
    expect(editor.assembleInFlight()).toBe(true);

    // Burst two: 10 more edits while the first request is on the wire.
    for (let i = 10; i < 20; i += 1) {
      editor.edit(`edit ${i}`);
      await vi.advanceTimersByTimeAsync(50);
    }
    await vi.runAllTimersAsync();

    expect(maxInFlight).toBe(1);
    expect(assembledCodes).toEqual(["edit 9", "edit 19"]);
    expect(editor.session.sceneId).toBe("scene-2");
    expect(editor.assemblePending()).toBe(false);
    editor.dispose();
  });

  it("does not assemble before the debounce interval elapses", async () => {
    vi.useFakeTimers();
    let calls = 0;
    const service = stubService({
      assemble: () => {
        calls += 1;
        return Promise.resolve(assembleResponse("scene-1"));
      },
    });
    const editor = createEditor({ service });

    editor.edit("building B { level L { C_E } }");
    await vi.advanceTimersByTimeAsync(ASSEMBLE_DEBOUNCE_MS - 1);
    expect(calls).toBe(0);
    expect(editor.assemblePending()).toBe(true);
    await vi.advanceTimersByTimeAsync(1);
    expect(calls).toBe(1);
    editor.dispose();
  });
});
