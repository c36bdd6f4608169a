/** Deterministic SVG line charts: fixed geometry, fixed number formatting,
 *  no timestamps or randomness, so equal inputs give equal bytes. */

import { VariantCurve } from "./aggregate.js";

export interface LineStyle {
    stroke: string;
    dasharray: string | null;
}

const STYLES: Record<string, LineStyle> = {
    genotype: { stroke: "gray", dasharray: null },
    t0: { stroke: "black", dasharray: "6 4" },
    "t2.5": { stroke: "green", dasharray: null },
    t5: { stroke: "red", dasharray: null },
    t10: { stroke: "blue", dasharray: null },
    t20: { stroke: "black", dasharray: null },
};

const FALLBACK_STYLE: LineStyle = { stroke: "orange", dasharray: null };

export function styleFor(variant: string): LineStyle {
    return STYLES[variant] ?? FALLBACK_STYLE;
}

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { left: 62, right: 16, top: 34, bottom: 44 };

function fmt(value: number): string {
    if (!Number.isFinite(value)) {
        throw new Error(`cannot plot non-finite value ${value}`);
    }
    return value.toFixed(2);
}

function tickLabel(value: number): string {
    if (value === 0) return "0";
    const magnitude = Math.abs(value);
    if (magnitude >= 1000 || magnitude < 0.01) return value.toExponential(1);
    return Number(value.toPrecision(4)).toString();
}

interface Scale {
    (value: number): number;
}

function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
    const span = d1 - d0 || 1;
    return (value: number) => r0 + ((value - d0) / span) * (r1 - r0);
}

function polyline(curve: VariantCurve, sx: Scale, sy: Scale): string {
    const style = styleFor(curve.variant);
    const points = curve.generations
        .map((g, i) => `${fmt(sx(g))},${fmt(sy(curve.values[i]))}`)
        .join(" ");
    const dash = style.dasharray ? ` stroke-dasharray="${style.dasharray}"` : "";
    return `<polyline data-variant="${curve.variant}" fill="none" stroke="${style.stroke}"` +
        ` stroke-width="1.6"${dash} points="${points}"/>`;
}

function extent(curves: VariantCurve[], pick: (c: VariantCurve) => number[]): [number, number] {
    let lo = Infinity;
    let hi = -Infinity;
    for (const curve of curves) {
        for (const v of pick(curve)) {
            lo = Math.min(lo, v);
            hi = Math.max(hi, v);
        }
    }
    if (lo === hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    return [lo, hi];
}

export function renderFigure(
    curves: VariantCurve[], title: string, yLabel: string, withInset: boolean,
): string {
    if (curves.length === 0) {
        throw new Error("nothing to plot");
    }
    const [x0, x1] = extent(curves, (c) => c.generations);
    const [y0, y1] = extent(curves, (c) => c.values);
    const sx = linearScale(x0, x1, MARGIN.left, WIDTH - MARGIN.right);
    const sy = linearScale(y0, y1, HEIGHT - MARGIN.bottom, MARGIN.top);

    const parts: string[] = [];
    parts.push(
        `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}"` +
        ` viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="11">`,
    );
    parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
    parts.push(`<text x="${WIDTH / 2}" y="18" text-anchor="middle" font-size="14">${title}</text>`);

    // axes
    const axisY = HEIGHT - MARGIN.bottom;
    parts.push(`<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${axisY}" stroke="black"/>`);
    parts.push(`<line x1="${MARGIN.left}" y1="${axisY}" x2="${WIDTH - MARGIN.right}" y2="${axisY}" stroke="black"/>`);
    for (let i = 0; i <= 4; i++) {
        const xv = x0 + ((x1 - x0) * i) / 4;
        const yv = y0 + ((y1 - y0) * i) / 4;
        parts.push(`<text x="${fmt(sx(xv))}" y="${axisY + 16}" text-anchor="middle">${tickLabel(Math.round(xv))}</text>`);
        parts.push(`<text x="${MARGIN.left - 6}" y="${fmt(sy(yv))}" text-anchor="end" dominant-baseline="middle">${tickLabel(yv)}</text>`);
        parts.push(`<line x1="${MARGIN.left - 3}" y1="${fmt(sy(yv))}" x2="${MARGIN.left}" y2="${fmt(sy(yv))}" stroke="black"/>`);
    }
    parts.push(`<text x="${WIDTH / 2}" y="${HEIGHT - 8}" text-anchor="middle">generation</text>`);
    parts.push(
        `<text x="16" y="${HEIGHT / 2}" text-anchor="middle"` +
        ` transform="rotate(-90 16 ${HEIGHT / 2})">${yLabel}</text>`,
    );

    for (const curve of curves) {
        parts.push(polyline(curve, sx, sy));
    }

    // legend
    let ly = MARGIN.top + 6;
    for (const curve of curves) {
        const style = styleFor(curve.variant);
        const dash = style.dasharray ? ` stroke-dasharray="${style.dasharray}"` : "";
        const lx = WIDTH - MARGIN.right - 110;
        parts.push(`<line x1="${lx}" y1="${ly}" x2="${lx + 26}" y2="${ly}" stroke="${style.stroke}" stroke-width="1.6"${dash}/>`);
        parts.push(`<text x="${lx + 32}" y="${ly + 4}">${curve.variant}</text>`);
        ly += 16;
    }

    if (withInset) {
        parts.push(renderInset(curves));
    }
    parts.push("</svg>");
    return parts.join("\n") + "\n";
}

/** Zoomed view of the first five generations, drawn inside the main axes. */
function renderInset(curves: VariantCurve[]): string {
    const early = curves.map((c) => {
        const keep = c.generations.map((g, i) => [g, c.values[i]] as const).filter(([g]) => g <= 5);
        return { variant: c.variant, generations: keep.map(([g]) => g), values: keep.map(([, v]) => v) };
    }).filter((c) => c.generations.length >= 2);
    if (early.length === 0) {
        return "";
    }
    const box = { x: MARGIN.left + 50, y: MARGIN.top + 14, w: 170, h: 120 };
    const [x0, x1] = extent(early, (c) => c.generations);
    const [y0, y1] = extent(early, (c) => c.values);
    const sx = linearScale(x0, x1, box.x + 8, box.x + box.w - 8);
    const sy = linearScale(y0, y1, box.y + box.h - 10, box.y + 10);
    const parts = [
        `<g data-role="inset">`,
        `<rect x="${box.x}" y="${box.y}" width="${box.w}" height="${box.h}" fill="white" stroke="black" stroke-width="0.6"/>`,
        `<text x="${box.x + box.w / 2}" y="${box.y + box.h + 12}" text-anchor="middle" font-size="9">generations 0-5</text>`,
    ];
    for (const curve of early) {
        parts.push(polyline(curve, sx, sy));
    }
    parts.push("</g>");
    return parts.join("\n");
}
