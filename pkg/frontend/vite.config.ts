import { defineConfig } from "vite";

// Relative base so the bundle works wherever the static mount lives.
export default defineConfig({
    base: "./",
});
