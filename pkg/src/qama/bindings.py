"""Line-oriented stdio endpoint exposing forward/backward/export to host runtimes.

Foreign-language bindings talk to the core through this process boundary:
one JSON request per line on stdin, one JSON response per line on stdout.
Tensor payloads are base64-encoded C-contiguous little-endian float64
buffers; byte counts are validated against the declared shape, so nothing
narrower than 64-bit floats is ever accepted or silently cast.

Forward solves return an opaque cache token.  Backward consumes the token;
release is idempotent, and any use after release is a lifecycle error.

Run with:  python -m qama.bindings
"""

from __future__ import annotations

import base64
import json
import sys

import numpy as np

from . import __version__
from .experiments import build_problem, export_problem
from .operator import backward, forward, forward_given_masks
from .solvers import CapacityError
from .types import (
    AttentionInput,
    CoefficientConfig,
    Shape,
    ShapeError,
    ValidationError,
)

__all__ = ["LifecycleError", "serve", "main"]


class LifecycleError(RuntimeError):
    """A cache token was used after release (or never existed)."""


def _decode_array(payload: dict, field: str, shape: tuple[int, ...]) -> np.ndarray:
    if field not in payload:
        raise ValidationError(f"missing tensor field {field!r}")
    try:
        raw = base64.b64decode(payload[field], validate=True)
    except Exception as exc:
        raise ValidationError(f"field {field!r} is not valid base64") from exc
    count = int(np.prod(shape))
    if len(raw) != 8 * count:
        raise ValidationError(
            f"field {field!r} has {len(raw)} bytes, expected {8 * count} "
            f"(float64 x {count}); only 64-bit float buffers are accepted"
        )
    arr = np.frombuffer(raw, dtype="<f8").reshape(shape)
    return arr.astype(np.float64, copy=True)


def _encode_array(arr: np.ndarray) -> str:
    data = np.ascontiguousarray(arr, dtype="<f8")
    return base64.b64encode(data.tobytes()).decode("ascii")


def _shape_from(payload: dict) -> Shape:
    dims = payload.get("shape")
    if not isinstance(dims, list) or len(dims) != 4:
        raise ValidationError("shape must be a list [batch, heads, seq_len, dim]")
    return Shape(batch=int(dims[0]), heads=int(dims[1]), seq_len=int(dims[2]), dim=int(dims[3]))


def _inputs_from(payload: dict) -> tuple[AttentionInput, Shape]:
    shape = _shape_from(payload)
    dims = (shape.batch, shape.heads, shape.seq_len, shape.dim)
    q = _decode_array(payload, "q", dims)
    k = _decode_array(payload, "k", dims)
    v = _decode_array(payload, "v", dims)
    w_eps = _decode_array(payload, "w_eps", (shape.dim, 1))
    return AttentionInput(q=q, k=k, v=v, w_eps=w_eps), shape


def _coefficients_from(payload: dict) -> CoefficientConfig:
    return CoefficientConfig(
        rho0=float(payload.get("rho0", 0.16)), lambda0=float(payload.get("lambda0", 0.8))
    )


def _solver_config_from(payload: dict) -> dict:
    config = payload.get("solver", {})
    if not isinstance(config, dict):
        raise ValidationError("solver config must be an object")
    return config


class _Server:
    def __init__(self) -> None:
        self._caches: dict[str, object] = {}
        self._next_token = 0

    def _op_version(self, payload: dict) -> dict:
        return {"version": __version__}

    def _op_forward(self, payload: dict) -> dict:
        inputs, _ = _inputs_from(payload)
        output, cache = forward(
            inputs,
            _coefficients_from(payload),
            backend=str(payload.get("backend", "sa")),
            seed=int(payload.get("seed", 0)),
            solver_config=_solver_config_from(payload),
        )
        self._next_token += 1
        token = f"cache-{self._next_token}"
        self._caches[token] = cache
        return {
            "cache": token,
            "e_dist": _encode_array(output.e_dist),
            "e_token": _encode_array(output.e_token),
            "e_out": _encode_array(output.e_out),
            "masks": [int(b) for b in cache.masks.reshape(-1)],
        }

    def _op_forward_fixed_mask(self, payload: dict) -> dict:
        # evaluation at a caller-supplied mask, used by host-side gradient oracles
        inputs, shape = _inputs_from(payload)
        masks = np.array(payload.get("masks"), dtype=np.int64).reshape(
            shape.batch, shape.heads, shape.seq_len
        )
        rho = float(payload["rho"])
        output = forward_given_masks(inputs, masks, rho)
        return {
            "e_dist": _encode_array(output.e_dist),
            "e_token": _encode_array(output.e_token),
            "e_out": _encode_array(output.e_out),
        }

    def _op_backward(self, payload: dict) -> dict:
        token = payload.get("cache")
        if not isinstance(token, str) or token not in self._caches:
            raise LifecycleError(f"cache token {token!r} is unknown or already released")
        cache = self._caches[token]
        shape = cache.inputs.shape
        grad = _decode_array(
            payload, "grad", (shape.batch, shape.heads, shape.seq_len, shape.dim)
        )
        bundle = backward(grad, cache)
        return {
            "dq": _encode_array(bundle.dq),
            "dk": _encode_array(bundle.dk),
            "dv": _encode_array(bundle.dv),
            "dw_eps": _encode_array(bundle.dw_eps),
        }

    def _op_release(self, payload: dict) -> dict:
        token = payload.get("cache")
        self._caches.pop(token, None)  # idempotent by design
        return {"released": True}

    def _op_export_qubo(self, payload: dict) -> dict:
        inputs, shape = _inputs_from(payload)
        if shape.batch != 1:
            raise ValidationError("export_qubo requires a single batch element")
        path = payload.get("path")
        if not isinstance(path, str) or not path:
            raise ValidationError("export_qubo requires a 'path' string")
        qubo, _, _, _ = build_problem(inputs, _coefficients_from(payload))
        export_problem(qubo, path)
        return {"path": path}

    def handle(self, payload: dict) -> dict:
        op = payload.get("op")
        handler = getattr(self, f"_op_{op}", None) if isinstance(op, str) else None
        if handler is None:
            raise ValidationError(f"unknown op {op!r}")
        return handler(payload)


_ERROR_CODES = {
    ValidationError: "validation",
    ShapeError: "validation",
    LifecycleError: "lifecycle",
    CapacityError: "capacity",
}


def _error_code(exc: Exception) -> str:
    for cls, code in _ERROR_CODES.items():
        if isinstance(exc, cls):
            return code
    return "internal"


def serve(stdin=None, stdout=None) -> None:
    """Serve requests until EOF; one request and one response per line."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    server = _Server()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        payload: dict | None = None
        try:
            try:
                decoded = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"request is not valid JSON: {exc}") from exc
            if not isinstance(decoded, dict):
                raise ValidationError("request must be a JSON object")
            payload = decoded
            result = server.handle(payload)
            response = {"ok": True, **result}
        except Exception as exc:  # noqa: BLE001 - protocol boundary
            response = {
                "ok": False,
                "error": {"code": _error_code(exc), "message": str(exc)},
            }
        if payload is not None and "id" in payload:
            response["id"] = payload["id"]
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()


def main() -> int:
    serve()
    return 0


if __name__ == "__main__":
    sys.exit(main())
