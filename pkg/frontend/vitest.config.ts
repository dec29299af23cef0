import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // training tests run a real optimizer on the pure-JS backend
    testTimeout: 1_200_000,
    hookTimeout: 1_200_000,
    // keep tf variable registries of heavyweight suites apart
    fileParallelism: false,
  },
});
