import { defineConfig } from "vitest/config";

export default defineConfig({
    test: {
        environment: "happy-dom",
        include: ["tests/**/*.test.ts"],
        // the e2e test generates a dataset and boots the real service
        testTimeout: 120_000,
        hookTimeout: 120_000,
    },
});
