import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    globalSetup: ["./tests/global-setup.ts"],
    // every test file talks to a live endpoint process; the gradient sweep
    // alone makes a few hundred round trips
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
