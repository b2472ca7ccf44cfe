// Vertex buffers travel as base64 little-endian float32 (service contract).

const CHUNK = 0x8000;

export function bytesToBase64(bytes: Uint8Array): string {
  let binary = "";
  for (let i = 0; i < bytes.length; i += CHUNK) {
    binary += String.fromCharCode(...bytes.subarray(i, i + CHUNK));
  }
  return btoa(binary);
}

export function base64ToBytes(b64: string): Uint8Array {
  const binary = atob(b64);
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) {
    bytes[i] = binary.charCodeAt(i);
  }
  return bytes;
}

export function encodeVertices(vertices: Float32Array): string {
  const buf = new ArrayBuffer(vertices.length * 4);
  const view = new DataView(buf);
  for (let i = 0; i < vertices.length; i++) {
    view.setFloat32(i * 4, vertices[i], true);
  }
  return bytesToBase64(new Uint8Array(buf));
}

export function decodeVertices(b64: string): Float32Array {
  const bytes = base64ToBytes(b64);
  if (bytes.length % 4 !== 0) {
    throw new Error(`vertex buffer of ${bytes.length} bytes is not float32`);
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const out = new Float32Array(bytes.length / 4);
  for (let i = 0; i < out.length; i++) {
    out[i] = view.getFloat32(i * 4, true);
  }
  return out;
}
