import { decodeVertices, encodeVertices } from "./codec.js";

export interface ModelInfo {
  n_vertices: number;
  k: number;
  d_low: number;
  d_high: number;
  gamma: number;
}

export interface LatentCode {
  z_low: number[];
  z_high: number[];
}

export interface FacesPayload {
  nVertices: number;
  faces: Uint32Array;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
    public readonly body: unknown = undefined,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

function assertFinite(values: number[], label: string): void {
  for (const v of values) {
    if (typeof v !== "number" || !Number.isFinite(v)) {
      throw new TypeError(`${label} contains a non-finite value`);
    }
  }
}

function assertFiniteScalar(value: number, label: string): void {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new TypeError(`${label} is not finite`);
  }
}

function assertCode(code: LatentCode, label: string): void {
  assertFinite(code.z_low, `${label}.z_low`);
  assertFinite(code.z_high, `${label}.z_high`);
}

export class ApiClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    public readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request(path: string, payload?: unknown): Promise<unknown> {
    const init: RequestInit =
      payload === undefined
        ? { method: "GET" }
        : {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(payload),
          };
    const response = await this.fetchImpl(this.baseUrl + path, init);
    let body: unknown;
    try {
      body = await response.json();
    } catch {
      body = undefined;
    }
    if (!response.ok) {
      const detail =
        body && typeof body === "object" && "error" in body
          ? String((body as { error: unknown }).error)
          : response.statusText;
      throw new ApiError(response.status, `${path}: ${detail}`, body);
    }
    return body;
  }

  async model(): Promise<ModelInfo> {
    return (await this.request("/v1/model")) as ModelInfo;
  }

  async faces(): Promise<FacesPayload> {
    const body = (await this.request("/v1/mesh/faces")) as {
      n_vertices: number;
      faces: number[][];
    };
    const flat = new Uint32Array(body.faces.length * 3);
    body.faces.forEach((tri, i) => flat.set(tri, i * 3));
    return { nVertices: body.n_vertices, faces: flat };
  }

  async subjects(): Promise<string[]> {
    const body = (await this.request("/v1/subjects")) as { subjects: string[] };
    return body.subjects;
  }

  async subjectLatent(name: string): Promise<LatentCode> {
    const path = `/v1/subjects/${encodeURIComponent(name)}/latent`;
    return (await this.request(path)) as LatentCode;
  }

  async decode(code: LatentCode, gamma?: number): Promise<Float32Array> {
    assertCode(code, "code");
    const payload: Record<string, unknown> = {
      z_low: code.z_low,
      z_high: code.z_high,
    };
    if (gamma !== undefined) {
      assertFiniteScalar(gamma, "gamma");
      payload.gamma = gamma;
    }
    const body = (await this.request("/v1/decode", payload)) as {
      vertices_b64: string;
    };
    return decodeVertices(body.vertices_b64);
  }

  async interpolate(
    a: LatentCode,
    b: LatentCode,
    alpha: number,
    beta: number,
    gamma?: number,
  ): Promise<Float32Array> {
    assertCode(a, "z_a");
    assertCode(b, "z_b");
    assertFiniteScalar(alpha, "alpha");
    assertFiniteScalar(beta, "beta");
    const payload: Record<string, unknown> = { z_a: a, z_b: b, alpha, beta };
    if (gamma !== undefined) {
      assertFiniteScalar(gamma, "gamma");
      payload.gamma = gamma;
    }
    const body = (await this.request("/v1/interpolate", payload)) as {
      vertices_b64: string;
    };
    return decodeVertices(body.vertices_b64);
  }

  async encode(vertices: Float32Array): Promise<LatentCode> {
    const body = (await this.request("/v1/encode", {
      vertices_b64: encodeVertices(vertices),
    })) as LatentCode;
    return body;
  }
}
