// Placeholder artwork for items without an image: two hues hashed from
// the attribute set, rendered as a diagonal gradient. Deterministic so a
// given item looks the same in every session and every browser.

export function fnv1a(text: string): number {
    let h = 0x811c9dc5;
    for (let i = 0; i < text.length; i++) {
        h ^= text.charCodeAt(i);
        h = Math.imul(h, 0x01000193);
    }
    return h >>> 0;
}

export interface TileColors {
    base: string;
    accent: string;
}

export function tileColors(attributes: string[]): TileColors {
    const key = [...attributes].sort().join("|");
    const h = fnv1a(key);
    const baseHue = h % 360;
    const accentHue = (baseHue + 60 + ((h >>> 9) % 120)) % 360;
    return {
        base: `hsl(${baseHue}, 45%, 36%)`,
        accent: `hsl(${accentHue}, 55%, 52%)`,
    };
}

export function tileBackground(attributes: string[]): string {
    const { base, accent } = tileColors(attributes);
    return `linear-gradient(135deg, ${base} 0%, ${base} 55%, ${accent} 55%, ${accent} 100%)`;
}
