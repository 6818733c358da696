import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    environment: "node",
    // The round-trip test shells out to the Python toolkit.
    testTimeout: 30000,
  },
});
