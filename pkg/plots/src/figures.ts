/** The five standard figures and their metric columns. */

import { aggregate, VariantCurve } from "./aggregate.js";
import { MetricsRow } from "./csv.js";
import { renderFigure } from "./svg.js";

export interface FigureSpec {
    name: string;
    column: string;
    title: string;
    yLabel: string;
    inset: boolean;
}

export const FIGURES: Record<string, FigureSpec> = {
    length: {
        name: "length",
        column: "mean_length",
        title: "Average population length",
        yLabel: "mean tree length",
        inset: true,
    },
    smad: {
        name: "smad",
        column: "median_smad",
        title: "Semantic deviation from the genotype",
        yLabel: "median SMAD",
        inset: false,
    },
    diversity: {
        name: "diversity",
        column: "diversity",
        title: "Unique trees per generation",
        yLabel: "unique trees",
        inset: false,
    },
    fitness: {
        name: "fitness",
        column: "median_train_fit",
        title: "Median training fitness",
        yLabel: "median train RMSE",
        inset: false,
    },
    terminals: {
        name: "terminals",
        column: "mean_terminal_prop",
        title: "Terminal share of tree nodes",
        yLabel: "mean terminal proportion",
        inset: false,
    },
};

export function figureCurves(rows: MetricsRow[], spec: FigureSpec): VariantCurve[] {
    return aggregate(rows, spec.column);
}

export function renderNamedFigure(rows: MetricsRow[], name: string): string {
    const spec = FIGURES[name];
    if (!spec) {
        throw new Error(`unknown figure '${name}'; known: ${Object.keys(FIGURES).join(", ")}`);
    }
    return renderFigure(figureCurves(rows, spec), spec.title, spec.yLabel, spec.inset);
}
