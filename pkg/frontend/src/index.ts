/**
 * Typed client for the energy-based attention endpoint.
 *
 * Tensors cross the process boundary as base64 little-endian float64
 * buffers. Anything that is not a Float64Array of exactly the declared
 * element count is rejected before it reaches the wire; the endpoint
 * enforces the same rule on its side, so nothing is ever cast.
 *
 * Forward solves hand back an opaque cache token. Backward consumes the
 * token, release is idempotent, and any use after release rejects with a
 * LifecycleError.
 */

import { Endpoint, type EndpointOptions } from "./client.js";
import { decodeFloat64, encodeFloat64 } from "./codec.js";
import { ValidationError } from "./errors.js";

export { Endpoint } from "./client.js";
export type { EndpointOptions } from "./client.js";
export { decodeFloat64, encodeFloat64 } from "./codec.js";
export {
  BindingError,
  CapacityError,
  InternalError,
  LifecycleError,
  ValidationError,
} from "./errors.js";

export interface Shape {
  batch: number;
  heads: number;
  seq_len: number;
  dim: number;
}

/** Field names follow the wire protocol. All tensors are row-major. */
export interface AttentionTensors {
  shape: Shape;
  /** (batch, heads, seq_len, dim) */
  q: Float64Array;
  k: Float64Array;
  v: Float64Array;
  /** (dim, 1) mixing column, so exactly `dim` elements */
  w_eps: Float64Array;
}

export interface ForwardOptions {
  rho0?: number;
  lambda0?: number;
  backend?: string;
  seed?: number;
  solver?: Record<string, unknown>;
}

export interface ForwardResult {
  cache: string;
  /** (batch, heads, seq_len, dim) */
  e_dist: Float64Array;
  /** (batch, heads, seq_len) */
  e_token: Float64Array;
  /** (batch,) */
  e_out: Float64Array;
  /** flat (batch, heads, seq_len) selection, zeros and ones */
  masks: number[];
}

export interface FixedMaskResult {
  e_dist: Float64Array;
  e_token: Float64Array;
  e_out: Float64Array;
}

export interface GradientBundle {
  dq: Float64Array;
  dk: Float64Array;
  dv: Float64Array;
  /** exactly `dim` elements, the (dim, 1) column flattened */
  dw_eps: Float64Array;
}

function checkShape(shape: Shape): void {
  for (const key of ["batch", "heads", "seq_len", "dim"] as const) {
    const value = shape[key];
    if (!Number.isInteger(value) || value <= 0) {
      throw new ValidationError(
        `shape.${key} must be a positive integer, got ${String(value)}`,
      );
    }
  }
}

function tensorElements(shape: Shape): number {
  return shape.batch * shape.heads * shape.seq_len * shape.dim;
}

function packTensor(name: string, value: Float64Array, length: number): string {
  if (!(value instanceof Float64Array)) {
    throw new ValidationError(`${name} must be a Float64Array; refusing to cast`);
  }
  if (value.length !== length) {
    throw new ValidationError(
      `${name} has ${value.length} elements, expected ${length}`,
    );
  }
  return encodeFloat64(value);
}

function packInputs(inputs: AttentionTensors): Record<string, unknown> {
  checkShape(inputs.shape);
  const count = tensorElements(inputs.shape);
  return {
    shape: [
      inputs.shape.batch,
      inputs.shape.heads,
      inputs.shape.seq_len,
      inputs.shape.dim,
    ],
    q: packTensor("q", inputs.q, count),
    k: packTensor("k", inputs.k, count),
    v: packTensor("v", inputs.v, count),
    w_eps: packTensor("w_eps", inputs.w_eps, inputs.shape.dim),
  };
}

function packOptions(options: ForwardOptions): Record<string, unknown> {
  const payload: Record<string, unknown> = {};
  if (options.rho0 !== undefined) payload.rho0 = options.rho0;
  if (options.lambda0 !== undefined) payload.lambda0 = options.lambda0;
  if (options.backend !== undefined) payload.backend = options.backend;
  if (options.seed !== undefined) payload.seed = options.seed;
  if (options.solver !== undefined) payload.solver = options.solver;
  return payload;
}

export async function version(endpoint: Endpoint): Promise<string> {
  const response = await endpoint.request({ op: "version" });
  return String(response.version);
}

export async function qama_forward(
  endpoint: Endpoint,
  inputs: AttentionTensors,
  options: ForwardOptions = {},
): Promise<ForwardResult> {
  const response = await endpoint.request({
    op: "forward",
    ...packInputs(inputs),
    ...packOptions(options),
  });
  const { batch, heads, seq_len, dim } = inputs.shape;
  return {
    cache: String(response.cache),
    e_dist: decodeFloat64(response.e_dist as string, batch * heads * seq_len * dim),
    e_token: decodeFloat64(response.e_token as string, batch * heads * seq_len),
    e_out: decodeFloat64(response.e_out as string, batch),
    masks: (response.masks as number[]).map(Number),
  };
}

/** Evaluate the energies at a caller-supplied selection, no solve involved. */
export async function qama_forward_fixed_mask(
  endpoint: Endpoint,
  inputs: AttentionTensors,
  masks: readonly number[],
  rho: number,
): Promise<FixedMaskResult> {
  const { batch, heads, seq_len, dim } = inputs.shape;
  if (masks.length !== batch * heads * seq_len) {
    throw new ValidationError(
      `masks has ${masks.length} entries, expected ${batch * heads * seq_len}`,
    );
  }
  const response = await endpoint.request({
    op: "forward_fixed_mask",
    ...packInputs(inputs),
    masks: Array.from(masks),
    rho,
  });
  return {
    e_dist: decodeFloat64(response.e_dist as string, batch * heads * seq_len * dim),
    e_token: decodeFloat64(response.e_token as string, batch * heads * seq_len),
    e_out: decodeFloat64(response.e_out as string, batch),
  };
}

export async function qama_backward(
  endpoint: Endpoint,
  cache: string,
  shape: Shape,
  grad_e_dist: Float64Array,
): Promise<GradientBundle> {
  checkShape(shape);
  const count = tensorElements(shape);
  const response = await endpoint.request({
    op: "backward",
    cache,
    grad: packTensor("grad", grad_e_dist, count),
  });
  return {
    dq: decodeFloat64(response.dq as string, count),
    dk: decodeFloat64(response.dk as string, count),
    dv: decodeFloat64(response.dv as string, count),
    dw_eps: decodeFloat64(response.dw_eps as string, shape.dim),
  };
}

/** Idempotent: releasing an already-released token succeeds. */
export async function qama_release(endpoint: Endpoint, cache: string): Promise<void> {
  await endpoint.request({ op: "release", cache });
}

/** Write the instance's binary problem file on the endpoint's filesystem. */
export async function export_qubo(
  endpoint: Endpoint,
  inputs: AttentionTensors,
  path: string,
  options: ForwardOptions = {},
): Promise<string> {
  const response = await endpoint.request({
    op: "export_qubo",
    ...packInputs(inputs),
    ...packOptions(options),
    path,
  });
  return String(response.path);
}

/** Convenience wrapper owning one endpoint process. */
export class QamaClient {
  private readonly endpoint: Endpoint;

  constructor(options: EndpointOptions = {}) {
    this.endpoint = new Endpoint(options);
  }

  version(): Promise<string> {
    return version(this.endpoint);
  }

  forward(inputs: AttentionTensors, options?: ForwardOptions): Promise<ForwardResult> {
    return qama_forward(this.endpoint, inputs, options);
  }

  forwardFixedMask(
    inputs: AttentionTensors,
    masks: readonly number[],
    rho: number,
  ): Promise<FixedMaskResult> {
    return qama_forward_fixed_mask(this.endpoint, inputs, masks, rho);
  }

  backward(cache: string, shape: Shape, grad: Float64Array): Promise<GradientBundle> {
    return qama_backward(this.endpoint, cache, shape, grad);
  }

  release(cache: string): Promise<void> {
    return qama_release(this.endpoint, cache);
  }

  exportQubo(
    inputs: AttentionTensors,
    path: string,
    options?: ForwardOptions,
  ): Promise<string> {
    return export_qubo(this.endpoint, inputs, path, options);
  }

  /** Raw protocol access, mainly for probing error behavior. */
  request(payload: Record<string, unknown>): Promise<Record<string, unknown>> {
    return this.endpoint.request(payload);
  }

  close(): Promise<void> {
    return this.endpoint.close();
  }
}
