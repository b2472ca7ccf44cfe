"""HTTP service exposing a fitted model to interactive clients.

Runs on the standard library threading HTTP server: six JSON routes, CORS
enabled, the model shared read-only. Vertex payloads travel as base64
little-endian float32 blobs to keep interactive decodes small; faces are
fetched once as plain JSON.

Status codes: 400 malformed payload, 409 dimension mismatch (the body
names the expected dimensions), 422 non-finite latent values.
"""

import base64
import binascii
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .mesh import TriangleMesh
from .model import LatentCode, blend_codes, decode, encode


class _RequestError(Exception):
    def __init__(self, status, message, **extra):
        super().__init__(message)
        self.status = status
        self.body = {"error": message, **extra}


def _vertices_to_b64(vertices):
    return base64.b64encode(
        np.ascontiguousarray(vertices, dtype="<f4").tobytes()
    ).decode("ascii")


def _expected_dims(model):
    return {"d_low": model.d_low, "d_high": model.d_high}


def _parse_code(model, payload, low_key="z_low", high_key="z_high"):
    if low_key not in payload or high_key not in payload:
        raise _RequestError(400, f"payload needs {low_key} and {high_key}")
    try:
        z_low = np.asarray(payload[low_key], dtype=np.float64).ravel()
        z_high = np.asarray(payload[high_key], dtype=np.float64).ravel()
    except (TypeError, ValueError):
        raise _RequestError(400, "latent vectors must be numeric arrays") from None
    if len(z_low) != model.d_low or len(z_high) != model.d_high:
        raise _RequestError(
            409,
            f"latent dimensions ({len(z_low)}, {len(z_high)}) do not match the model",
            expected=_expected_dims(model),
        )
    if not (np.all(np.isfinite(z_low)) and np.all(np.isfinite(z_high))):
        raise _RequestError(422, "latent values must be finite")
    return LatentCode(z_low=z_low, z_high=z_high)


def _parse_gamma(payload):
    gamma = payload.get("gamma")
    if gamma is None:
        return None
    if not isinstance(gamma, (int, float)) or isinstance(gamma, bool):
        raise _RequestError(400, "gamma must be a number")
    if not np.isfinite(gamma):
        raise _RequestError(422, "gamma must be finite")
    return float(gamma)


def _parse_blend(payload, key):
    value = payload.get(key)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise _RequestError(400, f"{key} must be a number")
    if not np.isfinite(value):
        raise _RequestError(422, f"{key} must be finite")
    return float(value)


def create_server(model, host="127.0.0.1", port=8765):
    """Build (but do not start) the HTTP server for a model."""
    # the sparse decode factorization is shared, serialize numeric work
    lock = threading.Lock()
    faces_payload = {
        "n_vertices": model.n_vertices,
        "faces": model.faces.astype(int).tolist(),
    }

    class Handler(BaseHTTPRequestHandler):
        server_version = "specmesh"
        protocol_version = "HTTP/1.1"

        def log_message(self, format, *args):
            pass

        def _send(self, status, obj):
            body = json.dumps(obj).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            try:
                self._send(200, self._route_get(self.path.rstrip("/")))
            except _RequestError as exc:
                self._send(exc.status, exc.body)

        def _route_get(self, path):
            if path == "/v1/model":
                return {
                    "n_vertices": model.n_vertices,
                    "k": model.basis.k,
                    "d_low": model.d_low,
                    "d_high": model.d_high,
                    "gamma": model.gamma,
                }
            if path == "/v1/mesh/faces":
                return faces_payload
            if path == "/v1/subjects":
                return {"subjects": list(model.subjects)}
            if path.startswith("/v1/subjects/") and path.endswith("/latent"):
                name = path[len("/v1/subjects/"):-len("/latent")]
                if name not in model.subjects:
                    raise _RequestError(404, f"unknown subject {name!r}")
                code = model.subject_code(name)
                return {"z_low": code.z_low.tolist(), "z_high": code.z_high.tolist()}
            raise _RequestError(404, f"no route {path!r}")

        def do_POST(self):
            try:
                length = int(self.headers.get("Content-Length") or 0)
                raw = self.rfile.read(length)
                try:
                    payload = json.loads(raw.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError):
                    raise _RequestError(400, "body is not valid JSON") from None
                if not isinstance(payload, dict):
                    raise _RequestError(400, "body must be a JSON object")
                self._send(200, self._route_post(self.path.rstrip("/"), payload))
            except _RequestError as exc:
                self._send(exc.status, exc.body)

        def _route_post(self, path, payload):
            if path == "/v1/encode":
                return self._encode(payload)
            if path == "/v1/decode":
                code = _parse_code(model, payload)
                gamma = _parse_gamma(payload)
                with lock:
                    mesh = decode(model, code, gamma_override=gamma)
                return {"vertices_b64": _vertices_to_b64(mesh.vertices)}
            if path == "/v1/interpolate":
                if "z_a" not in payload or "z_b" not in payload:
                    raise _RequestError(400, "payload needs z_a and z_b")
                if not isinstance(payload["z_a"], dict) or not isinstance(payload["z_b"], dict):
                    raise _RequestError(400, "z_a and z_b must be code objects")
                code_a = _parse_code(model, payload["z_a"])
                code_b = _parse_code(model, payload["z_b"])
                alpha = _parse_blend(payload, "alpha")
                beta = _parse_blend(payload, "beta")
                gamma = _parse_gamma(payload)
                blended = blend_codes(code_a, code_b, alpha, beta)
                with lock:
                    mesh = decode(model, blended, gamma_override=gamma)
                return {"vertices_b64": _vertices_to_b64(mesh.vertices)}
            raise _RequestError(404, f"no route {path!r}")

        def _encode(self, payload):
            blob = payload.get("vertices_b64")
            if not isinstance(blob, str):
                raise _RequestError(400, "payload needs vertices_b64")
            try:
                raw = base64.b64decode(blob, validate=True)
            except (binascii.Error, ValueError):
                raise _RequestError(400, "vertices_b64 is not valid base64") from None
            if len(raw) % 12 != 0:
                raise _RequestError(400, "vertex blob length is not a multiple of 12")
            vertices = np.frombuffer(raw, dtype="<f4").reshape(-1, 3).astype(np.float64)
            if len(vertices) != model.n_vertices:
                raise _RequestError(
                    409,
                    f"got {len(vertices)} vertices, model has {model.n_vertices}",
                    expected={"n_vertices": model.n_vertices},
                )
            if not np.all(np.isfinite(vertices)):
                raise _RequestError(422, "vertices must be finite")
            with lock:
                code = encode(model, TriangleMesh(vertices, model.faces))
            return {"z_low": code.z_low.tolist(), "z_high": code.z_high.tolist()}

    return ThreadingHTTPServer((host, port), Handler)


def serve(model, host="127.0.0.1", port=8765):
    """Run the service until interrupted."""
    server = create_server(model, host, port)
    try:
        server.serve_forever()
    finally:
        server.server_close()
