import { ApiClient, type LatentCode, type ModelInfo } from "./api.js";
import {
  applyPad,
  bandRequests,
  cloneCode,
  createEditorState,
  loadSubject,
  setBlend,
  setComponent,
  type Band,
  type EditorState,
  COMPONENT_MAX,
  COMPONENT_MIN,
} from "./state.js";
import { UpdateScheduler } from "./scheduler.js";
import { MeshViewer } from "./viewer.js";
import { showToast } from "./toast.js";
import { downloadObj, meshToObj } from "./obj.js";

interface RefreshResult {
  main?: Float32Array;
  low?: Float32Array;
  high?: Float32Array;
  startedAt: number;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function maxDelta(a: Float32Array | null, b: Float32Array): number {
  if (!a || a.length !== b.length) return Infinity;
  let worst = 0;
  for (let i = 0; i < a.length; i++) {
    const d = Math.abs(a[i] - b[i]);
    if (d > worst) worst = d;
  }
  return worst;
}

class EditorApp {
  private readonly scheduler: UpdateScheduler<RefreshResult>;
  private viewMain!: MeshViewer;
  private viewLow!: MeshViewer;
  private viewHigh!: MeshViewer;
  private lastBuffers: { main: Float32Array | null; low: Float32Array | null; high: Float32Array | null } = {
    main: null,
    low: null,
    high: null,
  };
  private state!: EditorState;
  private subjects: string[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly info: ModelInfo,
    private readonly faces: Uint32Array,
  ) {
    this.scheduler = new UpdateScheduler(
      () => this.refresh(),
      (result, token) => this.applyResult(result, token),
      (error) => this.surfaceError(error),
    );
  }

  async start(): Promise<void> {
    this.state = createEditorState(this.info.d_low, this.info.d_high, this.info.gamma);
    this.subjects = await this.api.subjects();
    this.buildViewers();
    this.buildControls();
    if (this.subjects.length > 0) {
      const a = await this.api.subjectLatent(this.subjects[0]);
      const b = await this.api.subjectLatent(this.subjects[Math.min(1, this.subjects.length - 1)]);
      loadSubject(this.state, "A", a);
      loadSubject(this.state, "B", b);
      applyPad(this.state);
      this.syncSliders();
    }
    this.scheduler.scheduleNow();
  }

  private refresh(): Promise<RefreshResult> {
    const startedAt = performance.now();
    const gamma = this.state.gamma;
    if (this.state.mode === "shaded") {
      const code = cloneCode(this.state.current);
      return this.api.decode(code, gamma).then((main) => ({ main, startedAt }));
    }
    const bands = bandRequests(this.state);
    return Promise.all([
      this.api.decode(bands.low, gamma),
      this.api.decode(bands.high, gamma),
    ]).then(([low, high]) => ({ low, high, startedAt }));
  }

  private applyResult(result: RefreshResult, token: number): void {
    const ms = performance.now() - result.startedAt;
    const lines = [`response #${token} applied (${ms.toFixed(0)} ms)`];
    if (result.main) {
      const delta = maxDelta(this.lastBuffers.main, result.main);
      this.viewMain.updateVertices(result.main);
      this.lastBuffers.main = result.main;
      lines.push(`mesh max delta ${Number.isFinite(delta) ? delta.toExponential(2) : "n/a"}`);
    }
    if (result.low && result.high) {
      const deltaLow = maxDelta(this.lastBuffers.low, result.low);
      const deltaHigh = maxDelta(this.lastBuffers.high, result.high);
      this.viewLow.updateVertices(result.low);
      this.viewHigh.updateVertices(result.high);
      this.lastBuffers.low = result.low;
      this.lastBuffers.high = result.high;
      lines.push(
        `low pane max delta ${Number.isFinite(deltaLow) ? deltaLow.toExponential(2) : "n/a"}`,
        `high pane max delta ${Number.isFinite(deltaHigh) ? deltaHigh.toExponential(2) : "n/a"}`,
      );
      this.setActivity(deltaLow, deltaHigh);
    }
    el<HTMLPreElement>("debug").textContent = lines.join("\n");
  }

  private setActivity(deltaLow: number, deltaHigh: number): void {
    const threshold = 1e-5;
    el("chip-low").classList.toggle("active", deltaLow > threshold);
    el("chip-high").classList.toggle("active", deltaHigh > threshold);
  }

  private surfaceError(error: unknown): void {
    const message = error instanceof Error ? error.message : String(error);
    showToast(el("toasts"), message, { retry: () => this.scheduler.scheduleNow() });
  }

  private buildViewers(): void {
    this.viewMain = new MeshViewer(el<HTMLCanvasElement>("view-main"));
    this.viewLow = new MeshViewer(el<HTMLCanvasElement>("view-low"));
    this.viewHigh = new MeshViewer(el<HTMLCanvasElement>("view-high"));
    this.viewMain.setFaces(this.faces, this.info.n_vertices);
    this.viewLow.setFaces(this.faces, this.info.n_vertices);
    this.viewHigh.setFaces(this.faces, this.info.n_vertices);
    this.viewLow.setColor(0.62, 0.72, 0.9);
    this.viewHigh.setColor(0.9, 0.74, 0.58);
  }

  private buildControls(): void {
    this.buildSliderBank("sliders-low", "low", this.info.d_low);
    this.buildSliderBank("sliders-high", "high", this.info.d_high);
    this.buildSubjectSelects();
    this.buildPad();
    this.buildGamma();
    this.buildModeToggle();
    el<HTMLButtonElement>("download").addEventListener("click", () => {
      void this.downloadCurrent();
    });
  }

  private buildSliderBank(containerId: string, band: Band, count: number): void {
    const container = el(containerId);
    for (let i = 0; i < count; i++) {
      const row = document.createElement("label");
      row.className = "slider-row";
      const caption = document.createElement("span");
      caption.textContent = `${band[0]}${i}`;
      const input = document.createElement("input");
      input.type = "range";
      input.min = String(COMPONENT_MIN);
      input.max = String(COMPONENT_MAX);
      input.step = "0.01";
      input.value = "0";
      input.dataset.band = band;
      input.dataset.index = String(i);
      input.addEventListener("input", () => {
        if (setComponent(this.state, band, i, Number(input.value))) {
          this.scheduler.schedule();
        }
      });
      row.append(caption, input);
      container.appendChild(row);
    }
  }

  private syncSliders(): void {
    document.querySelectorAll<HTMLInputElement>("input[data-band]").forEach((input) => {
      const band = input.dataset.band as Band;
      const index = Number(input.dataset.index);
      const values = band === "low" ? this.state.current.z_low : this.state.current.z_high;
      input.value = String(values[index] ?? 0);
    });
  }

  private buildSubjectSelects(): void {
    for (const slot of ["A", "B"] as const) {
      const select = el<HTMLSelectElement>(`subject-${slot.toLowerCase()}`);
      for (const name of this.subjects) {
        const option = document.createElement("option");
        option.value = name;
        option.textContent = name;
        select.appendChild(option);
      }
      select.selectedIndex = slot === "A" ? 0 : Math.min(1, this.subjects.length - 1);
      select.addEventListener("change", () => {
        void this.switchSubject(slot, select.value);
      });
    }
  }

  private async switchSubject(slot: "A" | "B", name: string): Promise<void> {
    // a decode for the old subject must never render over the new one
    this.scheduler.invalidate();
    try {
      const code = await this.api.subjectLatent(name);
      loadSubject(this.state, slot, code);
      applyPad(this.state);
      this.syncSliders();
      this.scheduler.scheduleNow();
    } catch (error) {
      this.surfaceError(error);
    }
  }

  private buildPad(): void {
    const pad = el("pad");
    const knob = el("pad-knob");
    const readout = el("pad-readout");
    const update = (clientX: number, clientY: number) => {
      const rect = pad.getBoundingClientRect();
      const alpha = (clientX - rect.left) / rect.width;
      const beta = 1 - (clientY - rect.top) / rect.height;
      setBlend(this.state, "alpha", alpha);
      setBlend(this.state, "beta", beta);
      knob.style.left = `${this.state.alpha * 100}%`;
      knob.style.bottom = `${this.state.beta * 100}%`;
      readout.textContent = `alpha ${this.state.alpha.toFixed(2)}  beta ${this.state.beta.toFixed(2)}`;
      if (applyPad(this.state)) {
        this.syncSliders();
        this.scheduler.schedule();
      }
    };
    let dragging = false;
    pad.addEventListener("pointerdown", (e) => {
      dragging = true;
      pad.setPointerCapture(e.pointerId);
      update(e.clientX, e.clientY);
    });
    pad.addEventListener("pointermove", (e) => {
      if (dragging) update(e.clientX, e.clientY);
    });
    pad.addEventListener("pointerup", () => {
      dragging = false;
    });
  }

  private buildGamma(): void {
    const slider = el<HTMLInputElement>("gamma");
    const readout = el("gamma-readout");
    slider.value = String(this.state.gamma);
    readout.textContent = this.state.gamma.toFixed(2);
    slider.addEventListener("input", () => {
      if (setBlend(this.state, "gamma", Number(slider.value))) {
        readout.textContent = this.state.gamma.toFixed(2);
        this.scheduler.schedule();
      }
    });
  }

  private buildModeToggle(): void {
    document.querySelectorAll<HTMLInputElement>("input[name=mode]").forEach((radio) => {
      radio.addEventListener("change", () => {
        if (!radio.checked) return;
        this.state.mode = radio.value as EditorState["mode"];
        document.body.classList.toggle("split", this.state.mode === "band-split");
        this.scheduler.scheduleNow();
      });
    });
  }

  private async downloadCurrent(): Promise<void> {
    try {
      const vertices = await this.api.decode(cloneCode(this.state.current), this.state.gamma);
      downloadObj("edited.obj", meshToObj(vertices, this.faces));
    } catch (error) {
      this.surfaceError(error);
    }
  }
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("service") ?? "http://127.0.0.1:8765";
  const api = new ApiClient(base);
  try {
    const info = await api.model();
    const faces = await api.faces();
    const app = new EditorApp(api, info, faces.faces);
    await app.start();
  } catch (error) {
    const message = error instanceof Error ? error.message : String(error);
    showToast(el("toasts"), `service unreachable at ${base}: ${message}`, {
      retry: () => void boot(),
      durationMs: 10000,
    });
  }
}

void boot();
