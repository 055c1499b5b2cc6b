import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the live round-trip test drives a real serve run
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
