// Minimal WebGL1 mesh viewer: one vertex buffer streamed per decode,
// faces uploaded once, CPU vertex normals, orbit camera.

const VERTEX_SHADER = `
attribute vec3 aPosition;
attribute vec3 aNormal;
uniform mat4 uModelView;
uniform mat4 uProjection;
varying vec3 vNormal;
void main() {
  vNormal = mat3(uModelView[0].xyz, uModelView[1].xyz, uModelView[2].xyz) * aNormal;
  gl_Position = uProjection * uModelView * vec4(aPosition, 1.0);
}
`;

const FRAGMENT_SHADER = `
precision mediump float;
uniform vec3 uColor;
varying vec3 vNormal;
void main() {
  vec3 n = normalize(vNormal);
  float key = max(dot(n, normalize(vec3(0.4, 0.6, 1.0))), 0.0);
  float fill = max(dot(n, normalize(vec3(-0.6, -0.2, 0.4))), 0.0);
  vec3 shade = uColor * (0.15 + 0.7 * key + 0.25 * fill);
  gl_FragColor = vec4(shade, 1.0);
}
`;

function compile(gl: WebGLRenderingContext, type: number, source: string): WebGLShader {
  const shader = gl.createShader(type);
  if (!shader) throw new Error("shader allocation failed");
  gl.shaderSource(shader, source);
  gl.compileShader(shader);
  if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
    throw new Error(`shader compile failed: ${gl.getShaderInfoLog(shader)}`);
  }
  return shader;
}

function perspective(fovY: number, aspect: number, near: number, far: number): Float32Array {
  const f = 1 / Math.tan(fovY / 2);
  const out = new Float32Array(16);
  out[0] = f / aspect;
  out[5] = f;
  out[10] = (far + near) / (near - far);
  out[11] = -1;
  out[14] = (2 * far * near) / (near - far);
  return out;
}

export function computeNormals(vertices: Float32Array, faces: Uint32Array): Float32Array {
  const normals = new Float32Array(vertices.length);
  for (let f = 0; f < faces.length; f += 3) {
    const a = faces[f] * 3;
    const b = faces[f + 1] * 3;
    const c = faces[f + 2] * 3;
    const e1x = vertices[b] - vertices[a];
    const e1y = vertices[b + 1] - vertices[a + 1];
    const e1z = vertices[b + 2] - vertices[a + 2];
    const e2x = vertices[c] - vertices[a];
    const e2y = vertices[c + 1] - vertices[a + 1];
    const e2z = vertices[c + 2] - vertices[a + 2];
    const nx = e1y * e2z - e1z * e2y;
    const ny = e1z * e2x - e1x * e2z;
    const nz = e1x * e2y - e1y * e2x;
    for (const idx of [a, b, c]) {
      normals[idx] += nx;
      normals[idx + 1] += ny;
      normals[idx + 2] += nz;
    }
  }
  for (let i = 0; i < normals.length; i += 3) {
    const len = Math.hypot(normals[i], normals[i + 1], normals[i + 2]);
    if (len > 0) {
      normals[i] /= len;
      normals[i + 1] /= len;
      normals[i + 2] /= len;
    }
  }
  return normals;
}

export class MeshViewer {
  private readonly gl: WebGLRenderingContext;
  private readonly program: WebGLProgram;
  private readonly positionBuffer: WebGLBuffer;
  private readonly normalBuffer: WebGLBuffer;
  private readonly indexBuffer: WebGLBuffer;
  private readonly uModelView: WebGLUniformLocation;
  private readonly uProjection: WebGLUniformLocation;
  private readonly uColor: WebGLUniformLocation;
  private indexCount = 0;
  private indexType = 0;
  private faces: Uint32Array | null = null;
  private vertices: Float32Array | null = null;
  private yaw = 0.6;
  private pitch = 0.25;
  private distance = 3.2;
  private color: [number, number, number] = [0.78, 0.8, 0.85];

  constructor(private readonly canvas: HTMLCanvasElement) {
    const gl = canvas.getContext("webgl", { antialias: true });
    if (!gl) throw new Error("WebGL is not available");
    this.gl = gl;

    const program = gl.createProgram();
    if (!program) throw new Error("program allocation failed");
    gl.attachShader(program, compile(gl, gl.VERTEX_SHADER, VERTEX_SHADER));
    gl.attachShader(program, compile(gl, gl.FRAGMENT_SHADER, FRAGMENT_SHADER));
    gl.linkProgram(program);
    if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
      throw new Error(`program link failed: ${gl.getProgramInfoLog(program)}`);
    }
    this.program = program;
    this.positionBuffer = gl.createBuffer()!;
    this.normalBuffer = gl.createBuffer()!;
    this.indexBuffer = gl.createBuffer()!;
    this.uModelView = gl.getUniformLocation(program, "uModelView")!;
    this.uProjection = gl.getUniformLocation(program, "uProjection")!;
    this.uColor = gl.getUniformLocation(program, "uColor")!;
    gl.enable(gl.DEPTH_TEST);
    this.attachOrbit();
  }

  setColor(r: number, g: number, b: number): void {
    this.color = [r, g, b];
  }

  setFaces(faces: Uint32Array, nVertices: number): void {
    const gl = this.gl;
    this.faces = faces;
    gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.indexBuffer);
    if (nVertices <= 0xffff) {
      gl.bufferData(gl.ELEMENT_ARRAY_BUFFER, new Uint16Array(faces), gl.STATIC_DRAW);
      this.indexType = gl.UNSIGNED_SHORT;
    } else {
      if (!gl.getExtension("OES_element_index_uint")) {
        throw new Error("mesh too large for this WebGL context");
      }
      gl.bufferData(gl.ELEMENT_ARRAY_BUFFER, faces, gl.STATIC_DRAW);
      this.indexType = gl.UNSIGNED_INT;
    }
    this.indexCount = faces.length;
  }

  updateVertices(vertices: Float32Array): void {
    if (!this.faces) throw new Error("setFaces must run before updateVertices");
    const gl = this.gl;
    this.vertices = vertices;
    gl.bindBuffer(gl.ARRAY_BUFFER, this.positionBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, vertices, gl.DYNAMIC_DRAW);
    gl.bindBuffer(gl.ARRAY_BUFFER, this.normalBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, computeNormals(vertices, this.faces), gl.DYNAMIC_DRAW);
    this.draw();
  }

  draw(): void {
    const gl = this.gl;
    if (this.indexCount === 0 || !this.vertices) return;
    const width = this.canvas.clientWidth || this.canvas.width;
    const height = this.canvas.clientHeight || this.canvas.height;
    if (this.canvas.width !== width || this.canvas.height !== height) {
      this.canvas.width = width;
      this.canvas.height = height;
    }
    gl.viewport(0, 0, width, height);
    gl.clearColor(0.1, 0.11, 0.13, 1);
    gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);
    gl.useProgram(this.program);

    const cy = Math.cos(this.yaw);
    const sy = Math.sin(this.yaw);
    const cp = Math.cos(this.pitch);
    const sp = Math.sin(this.pitch);
    // rotate-then-translate modelview, column major
    const mv = new Float32Array([
      cy, sp * sy, -cp * sy, 0,
      0, cp, sp, 0,
      sy, -sp * cy, cp * cy, 0,
      0, 0, -this.distance, 1,
    ]);
    gl.uniformMatrix4fv(this.uModelView, false, mv);
    gl.uniformMatrix4fv(
      this.uProjection,
      false,
      perspective(0.7, width / Math.max(height, 1), 0.05, 50),
    );
    gl.uniform3f(this.uColor, this.color[0], this.color[1], this.color[2]);

    const position = gl.getAttribLocation(this.program, "aPosition");
    gl.bindBuffer(gl.ARRAY_BUFFER, this.positionBuffer);
    gl.enableVertexAttribArray(position);
    gl.vertexAttribPointer(position, 3, gl.FLOAT, false, 0, 0);
    const normal = gl.getAttribLocation(this.program, "aNormal");
    gl.bindBuffer(gl.ARRAY_BUFFER, this.normalBuffer);
    gl.enableVertexAttribArray(normal);
    gl.vertexAttribPointer(normal, 3, gl.FLOAT, false, 0, 0);

    gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.indexBuffer);
    gl.drawElements(gl.TRIANGLES, this.indexCount, this.indexType, 0);
  }

  private attachOrbit(): void {
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    this.canvas.addEventListener("pointerdown", (e) => {
      dragging = true;
      lastX = e.clientX;
      lastY = e.clientY;
      this.canvas.setPointerCapture(e.pointerId);
    });
    this.canvas.addEventListener("pointermove", (e) => {
      if (!dragging) return;
      this.yaw += (e.clientX - lastX) * 0.01;
      this.pitch = Math.min(1.5, Math.max(-1.5, this.pitch + (e.clientY - lastY) * 0.01));
      lastX = e.clientX;
      lastY = e.clientY;
      this.draw();
    });
    this.canvas.addEventListener("pointerup", () => {
      dragging = false;
    });
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.distance = Math.min(12, Math.max(1.2, this.distance * (1 + e.deltaY * 0.001)));
      this.draw();
    });
  }
}
