import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { ApiClient, ApiError } from "../src/api.js";
import { UpdateScheduler } from "../src/scheduler.js";
import { bandRequests, createEditorState, setComponent } from "../src/state.js";

const havePython =
  spawnSync("python3", ["-c", "import specmesh"], { timeout: 30_000 }).status === 0;

function waitUntil(check: () => boolean, timeoutMs: number): Promise<void> {
  return new Promise((resolve, reject) => {
    const start = Date.now();
    const poll = setInterval(() => {
      if (check()) {
        clearInterval(poll);
        resolve();
      } else if (Date.now() - start > timeoutMs) {
        clearInterval(poll);
        reject(new Error("timed out waiting for condition"));
      }
    }, 10);
  });
}

describe.skipIf(!havePython)("against a local service", () => {
  let workDir: string;
  let server: ChildProcess | undefined;
  let api: ApiClient;
  let dLow = 0;
  let dHigh = 0;

  beforeAll(async () => {
    workDir = mkdtempSync(join(tmpdir(), "specmesh-editor-"));
    const setup = spawnSync(
      "python3",
      [
        "-c",
        [
          "import sys",
          "from specmesh.synthetic import write_dataset",
          "from specmesh.cli import main",
          `manifest = write_dataset(sys.argv[1] + "/ds", n_shapes=8, subdivisions=1, seed=3)`,
          `raise SystemExit(main(["fit", "--dataset", str(manifest), "--out", sys.argv[1] + "/model.dsmm", "--d-low", "6", "--d-high", "6", "--seed", "7"]))`,
        ].join("\n"),
        workDir,
      ],
      { timeout: 120_000 },
    );
    expect(setup.status, String(setup.stderr)).toBe(0);

    server = spawn("python3", [
      "-m",
      "specmesh.cli",
      "serve",
      "--model",
      join(workDir, "model.dsmm"),
      "--port",
      "0",
    ]);
    let stderr = "";
    server.stderr!.on("data", (chunk: Buffer) => {
      stderr += chunk.toString();
    });
    await waitUntil(() => /http:\/\/127\.0\.0\.1:\d+/.test(stderr), 30_000);
    const port = Number(/http:\/\/127\.0\.0\.1:(\d+)/.exec(stderr)![1]);
    api = new ApiClient(`http://127.0.0.1:${port}`);
    const info = await api.model();
    dLow = info.d_low;
    dHigh = info.d_high;
  }, 180_000);

  afterAll(() => {
    server?.kill("SIGINT");
    setTimeout(() => server?.kill("SIGKILL"), 2000).unref();
    if (workDir) rmSync(workDir, { recursive: true, force: true });
  });

  it("reports the fitted model's shape", async () => {
    const info = await api.model();
    expect(info.n_vertices).toBe(42);
    expect(info.d_low).toBeGreaterThan(0);
    expect(info.d_high).toBeGreaterThan(0);
    const faces = await api.faces();
    expect(faces.faces.length % 3).toBe(0);
    expect(Math.max(...faces.faces)).toBe(info.n_vertices - 1);
  });

  it("renders a slider change end to end within 500 ms", async () => {
    const state = createEditorState(dLow, dHigh, 1.0);
    const applied: Float32Array[] = [];
    const scheduler = new UpdateScheduler<Float32Array>(
      () => api.decode({ z_low: [...state.current.z_low], z_high: [...state.current.z_high] }),
      (vertices) => applied.push(vertices),
    );

    setComponent(state, "low", 0, 1.25);
    const start = Date.now();
    scheduler.schedule();
    await waitUntil(() => applied.length === 1, 2000);
    const elapsed = Date.now() - start;

    expect(elapsed).toBeLessThan(500);
    expect(applied[0].length).toBe(42 * 3);
    expect(Array.from(applied[0]).every(Number.isFinite)).toBe(true);
  });

  it("applies the latest value of a slider drag, dropping intermediates", async () => {
    const state = createEditorState(dLow, dHigh, 1.0);
    const applied: Float32Array[] = [];
    const scheduler = new UpdateScheduler<Float32Array>(
      () => api.decode({ z_low: [...state.current.z_low], z_high: [...state.current.z_high] }),
      (vertices) => applied.push(vertices),
    );

    for (let step = 0; step <= 20; step++) {
      setComponent(state, "high", 0, -2 + step * 0.2);
      scheduler.schedule();
      await new Promise((r) => setTimeout(r, 5));
    }
    await waitUntil(() => !scheduler.inFlight && applied.length > 0, 3000);

    expect(scheduler.stats.issued).toBeLessThan(21);
    const expected = await api.decode({
      z_low: [...state.current.z_low],
      z_high: [...state.current.z_high],
    });
    expect(applied[applied.length - 1]).toEqual(expected);
  });

  it("keeps the low pane static while a high slider moves at gamma 0", async () => {
    const state = createEditorState(dLow, dHigh, 1.0);
    const before = await api.decode(bandRequests(state).low, 0);
    setComponent(state, "high", 0, 2.5);
    setComponent(state, "high", dHigh - 1, -1.5);
    const after = await api.decode(bandRequests(state).low, 0);
    let worst = 0;
    for (let i = 0; i < before.length; i++) {
      worst = Math.max(worst, Math.abs(before[i] - after[i]));
    }
    expect(worst).toBeLessThanOrEqual(1e-5);
  });

  it("surfaces dimension mismatches as 409 responses", async () => {
    const failure = await api
      .decode({ z_low: [1, 2], z_high: new Array(dHigh).fill(0) })
      .catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.status).toBe(409);
  });
});
