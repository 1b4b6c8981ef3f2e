import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  decodeFloat64,
  QamaClient,
  type AttentionTensors,
  type FixedMaskResult,
} from "../src/index.js";
import { caseTensors, loadFixtures, toShape, type FixtureCase } from "./helpers.js";

// Host-side gradient oracle: with the selection mask frozen, the loss
// sum(grad * e_dist) must match central finite differences of the fixed-mask
// forward within a relative 1e-4 (absolute 1e-8 where both sides vanish).
const STEP = 1e-5;
const REL_TOL = 1e-4;
const ABS_TOL = 1e-8;
const NEAR_ZERO = 1e-6;

const fixtures = loadFixtures();

let client: QamaClient;

beforeAll(() => {
  client = new QamaClient();
});

afterAll(async () => {
  await client.close();
});

function dot(a: Float64Array, b: Float64Array): number {
  let total = 0;
  for (let i = 0; i < a.length; i++) {
    total += a[i] * b[i];
  }
  return total;
}

async function loss(
  inputs: AttentionTensors,
  masks: readonly number[],
  rho: number,
  grad: Float64Array,
): Promise<number> {
  const out: FixedMaskResult = await client.forwardFixedMask(inputs, masks, rho);
  return dot(grad, out.e_dist);
}

async function checkCase(fixture: FixtureCase): Promise<void> {
  const inputs = caseTensors(fixture);
  const shape = toShape(fixture.shape);
  const count = shape.batch * shape.heads * shape.seq_len * shape.dim;
  const grad = decodeFloat64(fixture.expected.grad, count);

  const solved = await client.forward(inputs, {
    rho0: fixture.rho0,
    lambda0: fixture.lambda0,
    backend: fixture.backend,
    seed: fixture.seed,
    solver: fixture.solver,
  });
  const analytic = await client.backward(solved.cache, shape, grad);
  await client.release(solved.cache);

  const analyticByName = {
    q: analytic.dq,
    k: analytic.dk,
    v: analytic.dv,
    w_eps: analytic.dw_eps,
  };
  const tensors: Array<[keyof typeof analyticByName, Float64Array]> = [
    ["q", inputs.q],
    ["k", inputs.k],
    ["v", inputs.v],
    ["w_eps", inputs.w_eps],
  ];

  for (const [name, tensor] of tensors) {
    const expected = analyticByName[name];
    for (let i = 0; i < tensor.length; i++) {
      const original = tensor[i];
      tensor[i] = original + STEP;
      const hi = await loss(inputs, solved.masks, fixture.rho, grad);
      tensor[i] = original - STEP;
      const lo = await loss(inputs, solved.masks, fixture.rho, grad);
      tensor[i] = original;
      const fd = (hi - lo) / (2 * STEP);
      const a = expected[i];
      const scale = Math.max(Math.abs(a), Math.abs(fd));
      if (scale < NEAR_ZERO) {
        expect(Math.abs(a - fd), `${name}[${i}]`).toBeLessThan(ABS_TOL);
      } else {
        expect(Math.abs(a - fd) / scale, `${name}[${i}]`).toBeLessThan(REL_TOL);
      }
    }
  }
}

describe("backward agrees with finite differences over the endpoint", () => {
  for (const [index, fixture] of fixtures.gradient_cases.entries()) {
    it(`case ${index} shape [${fixture.shape.join(",")}]`, async () => {
      await checkCase(fixture);
    });
  }
});
