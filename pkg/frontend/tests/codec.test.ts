import { describe, expect, it } from "vitest";

import { base64ToBytes, bytesToBase64, decodeVertices, encodeVertices } from "../src/codec.js";

describe("codec", () => {
  it("round-trips bytes through base64", () => {
    const bytes = new Uint8Array([0, 1, 127, 128, 255, 42]);
    expect(base64ToBytes(bytesToBase64(bytes))).toEqual(bytes);
  });

  it("round-trips float32 vertex buffers exactly", () => {
    const vertices = new Float32Array([0, -1.5, 3.25, 1e-7, 12345.678, -0.001]);
    const back = decodeVertices(encodeVertices(vertices));
    expect(back).toEqual(vertices);
  });

  it("handles buffers larger than one base64 chunk", () => {
    const vertices = new Float32Array(100_000);
    for (let i = 0; i < vertices.length; i++) vertices[i] = Math.sin(i * 0.37) * i;
    const back = decodeVertices(encodeVertices(vertices));
    expect(back).toEqual(vertices);
  });

  it("matches a known little-endian encoding", () => {
    // 1.0f little-endian is 00 00 80 3f
    expect(encodeVertices(new Float32Array([1]))).toBe(bytesToBase64(new Uint8Array([0, 0, 0x80, 0x3f])));
  });

  it("rejects buffers that are not float32-sized", () => {
    expect(() => decodeVertices(bytesToBase64(new Uint8Array([1, 2, 3])))).toThrow(/float32/);
  });
});
