import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, type FetchLike } from "../src/api.js";
import { encodeVertices } from "../src/codec.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function mockFetch(handler: (url: string, init?: RequestInit) => Response): {
  fetch: FetchLike;
  calls: Array<{ url: string; init?: RequestInit }>;
} {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const fetch: FetchLike = (url, init) => {
    calls.push({ url, init });
    return Promise.resolve(handler(url, init));
  };
  return { fetch, calls };
}

describe("ApiClient", () => {
  it("decodes vertices from a decode response", async () => {
    const vertices = new Float32Array([1, 2, 3, 4, 5, 6]);
    const { fetch, calls } = mockFetch(() => jsonResponse({ vertices_b64: encodeVertices(vertices) }));
    const api = new ApiClient("http://svc", fetch);
    const got = await api.decode({ z_low: [0.5, -1], z_high: [2] }, 0.25);
    expect(got).toEqual(vertices);
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://svc/v1/decode");
    const payload = JSON.parse(String(calls[0].init?.body));
    expect(payload).toEqual({ z_low: [0.5, -1], z_high: [2], gamma: 0.25 });
  });

  it("omits gamma from the payload when not overridden", async () => {
    const { fetch, calls } = mockFetch(() => jsonResponse({ vertices_b64: encodeVertices(new Float32Array(3)) }));
    await new ApiClient("http://svc", fetch).decode({ z_low: [0], z_high: [0] });
    expect(JSON.parse(String(calls[0].init?.body))).not.toHaveProperty("gamma");
  });

  it("never sends non-finite latent values", async () => {
    const handler = vi.fn(() => jsonResponse({}));
    const { fetch, calls } = mockFetch(handler);
    const api = new ApiClient("http://svc", fetch);
    await expect(api.decode({ z_low: [Number.NaN], z_high: [0] })).rejects.toThrow(/non-finite/);
    await expect(api.decode({ z_low: [0], z_high: [Infinity] })).rejects.toThrow(/non-finite/);
    await expect(api.decode({ z_low: [0], z_high: [0] }, Number.NaN)).rejects.toThrow(/finite/);
    await expect(
      api.interpolate({ z_low: [0], z_high: [0] }, { z_low: [0], z_high: [0] }, Number.NaN, 0),
    ).rejects.toThrow(/finite/);
    expect(calls).toHaveLength(0);
  });

  it("raises ApiError with status and server message", async () => {
    const { fetch } = mockFetch(() =>
      jsonResponse({ error: "latent dimensions do not match", expected: { d_low: 8, d_high: 8 } }, 409),
    );
    const api = new ApiClient("http://svc", fetch);
    const failure = await api.decode({ z_low: [1], z_high: [1] }).catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.status).toBe(409);
    expect(failure.message).toContain("latent dimensions");
    expect(failure.body.expected).toEqual({ d_low: 8, d_high: 8 });
  });

  it("flattens the faces payload", async () => {
    const { fetch } = mockFetch(() =>
      jsonResponse({ n_vertices: 4, faces: [[0, 1, 2], [2, 1, 3]] }),
    );
    const got = await new ApiClient("http://svc", fetch).faces();
    expect(got.nVertices).toBe(4);
    expect(got.faces).toEqual(new Uint32Array([0, 1, 2, 2, 1, 3]));
  });

  it("fetches subject latents by name", async () => {
    const { fetch, calls } = mockFetch(() => jsonResponse({ z_low: [1, 2], z_high: [3] }));
    const got = await new ApiClient("http://svc", fetch).subjectLatent("s004");
    expect(got).toEqual({ z_low: [1, 2], z_high: [3] });
    expect(calls[0].url).toBe("http://svc/v1/subjects/s004/latent");
    expect(calls[0].init?.method).toBe("GET");
  });

  it("sends encode requests as base64 vertices", async () => {
    const { fetch, calls } = mockFetch(() => jsonResponse({ z_low: [0], z_high: [0] }));
    const vertices = new Float32Array([1, 2, 3]);
    await new ApiClient("http://svc", fetch).encode(vertices);
    const payload = JSON.parse(String(calls[0].init?.body));
    expect(payload.vertices_b64).toBe(encodeVertices(vertices));
  });
});
