import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // integration tests spawn `rehab serve` and wait for real sessions
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
