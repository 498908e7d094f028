import { describe, expect, it } from "vitest";

import { fnv1a, tileBackground, tileColors } from "../src/tiles";

describe("fnv1a", () => {
    it("matches the published 32-bit test vectors", () => {
        expect(fnv1a("")).toBe(0x811c9dc5);
        expect(fnv1a("a")).toBe(0xe40c292c);
        expect(fnv1a("foobar")).toBe(0xbf9cf968);
    });

    it("stays inside unsigned 32-bit range", () => {
        for (const s of ["red", "satin red wool", "style047", "x".repeat(500)]) {
            const h = fnv1a(s);
            expect(Number.isInteger(h)).toBe(true);
            expect(h).toBeGreaterThanOrEqual(0);
            expect(h).toBeLessThanOrEqual(0xffffffff);
        }
    });
});

describe("tileColors", () => {
    it("is deterministic", () => {
        const a = tileColors(["red", "satin", "wool"]);
        const b = tileColors(["red", "satin", "wool"]);
        expect(a).toEqual(b);
    });

    it("ignores attribute order", () => {
        expect(tileColors(["red", "satin", "wool"])).toEqual(tileColors(["wool", "red", "satin"]));
    });

    it("separates items that differ in one attribute", () => {
        const a = tileColors(["red", "satin", "wool"]);
        const b = tileColors(["red", "satin", "silk"]);
        expect(a.base).not.toBe(b.base);
    });

    it("emits hsl colors with hue in [0, 360)", () => {
        const { base, accent } = tileColors(["blue", "linen"]);
        for (const color of [base, accent]) {
            const m = color.match(/^hsl\((\d+), \d+%, \d+%\)$/);
            expect(m).not.toBeNull();
            expect(Number(m![1])).toBeLessThan(360);
        }
    });
});

describe("tileBackground", () => {
    it("builds a gradient from both colors", () => {
        const attrs = ["green", "hooded"];
        const { base, accent } = tileColors(attrs);
        const bg = tileBackground(attrs);
        expect(bg).toContain("linear-gradient");
        expect(bg).toContain(base);
        expect(bg).toContain(accent);
    });
});
