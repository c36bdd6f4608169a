/** Aggregation: per-problem median over runs, then mean across problems. */

import { MetricsRow } from "./csv.js";

export interface VariantCurve {
    variant: string;
    generations: number[];
    values: number[];
}

export function median(values: number[]): number {
    if (values.length === 0) {
        throw new Error("median of empty list");
    }
    const sorted = [...values].sort((a, b) => a - b);
    const mid = Math.floor(sorted.length / 2);
    return sorted.length % 2 === 1 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
}

export function mean(values: number[]): number {
    return values.reduce((acc, v) => acc + v, 0) / values.length;
}

/**
 * One curve per variant: for each (dataset, variant, generation) take the
 * median of the metric over runs, then average those medians across
 * datasets per generation.
 */
export function aggregate(rows: MetricsRow[], column: string): VariantCurve[] {
    const perCell = new Map<string, number[]>(); // dataset|variant|generation -> run values
    const variants = new Set<string>();
    const generations = new Set<number>();
    const datasets = new Set<string>();
    for (const row of rows) {
        if (!(column in row.values)) {
            throw new Error(`metric column '${column}' not present in CSV rows`);
        }
        const key = `${row.dataset}|${row.variant}|${row.generation}`;
        if (!perCell.has(key)) {
            perCell.set(key, []);
        }
        perCell.get(key)!.push(row.values[column]);
        variants.add(row.variant);
        generations.add(row.generation);
        datasets.add(row.dataset);
    }
    const gens = [...generations].sort((a, b) => a - b);
    const curves: VariantCurve[] = [];
    for (const variant of orderVariants([...variants])) {
        const values: number[] = [];
        for (const gen of gens) {
            const perDataset: number[] = [];
            for (const dataset of [...datasets].sort()) {
                const cell = perCell.get(`${dataset}|${variant}|${gen}`);
                if (cell) {
                    perDataset.push(median(cell));
                }
            }
            if (perDataset.length === 0) {
                throw new Error(`no data for variant '${variant}' at generation ${gen}`);
            }
            values.push(mean(perDataset));
        }
        curves.push({ variant, generations: gens, values });
    }
    return curves;
}

const CANONICAL_ORDER = ["genotype", "t0", "t2.5", "t5", "t10", "t20"];

export function orderVariants(variants: string[]): string[] {
    const known = CANONICAL_ORDER.filter((v) => variants.includes(v));
    const unknown = variants.filter((v) => !CANONICAL_ORDER.includes(v)).sort();
    return [...known, ...unknown];
}
