import { readFileSync } from "node:fs";

import { decodeFloat64 } from "../src/codec.js";
import type { AttentionTensors, Shape } from "../src/index.js";

export interface FixtureCase {
  shape: [number, number, number, number];
  seed: number;
  rho0: number;
  lambda0: number;
  backend: string;
  solver: Record<string, unknown>;
  rho: number;
  q: string;
  k: string;
  v: string;
  w_eps: string;
  expected: {
    e_dist: string;
    e_token: string;
    e_out: string;
    masks: number[];
    grad: string;
    dq: string;
    dk: string;
    dv: string;
    dw_eps: string;
  };
}

export interface Fixtures {
  version: string;
  instances: FixtureCase[];
  gradient_cases: FixtureCase[];
  export_case: {
    shape: [number, number, number, number];
    seed: number;
    rho0: number;
    lambda0: number;
    q: string;
    k: string;
    v: string;
    w_eps: string;
    file_text: string;
  };
}

export function loadFixtures(): Fixtures {
  const url = new URL("./fixtures.json", import.meta.url);
  return JSON.parse(readFileSync(url, "utf8")) as Fixtures;
}

export function toShape(dims: readonly number[]): Shape {
  return { batch: dims[0], heads: dims[1], seq_len: dims[2], dim: dims[3] };
}

export function caseTensors(fixture: {
  shape: [number, number, number, number];
  q: string;
  k: string;
  v: string;
  w_eps: string;
}): AttentionTensors {
  const shape = toShape(fixture.shape);
  const count = shape.batch * shape.heads * shape.seq_len * shape.dim;
  return {
    shape,
    q: decodeFloat64(fixture.q, count),
    k: decodeFloat64(fixture.k, count),
    v: decodeFloat64(fixture.v, count),
    w_eps: decodeFloat64(fixture.w_eps, shape.dim),
  };
}
