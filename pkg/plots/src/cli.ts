#!/usr/bin/env node
/** plots --csv combined.csv --figures length,smad,diversity,fitness,terminals
 *        --out figs/ --format svg
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { parseMetricsCsv } from "./csv.js";
import { FIGURES, renderNamedFigure } from "./figures.js";

export function main(argv: string[]): number {
    let parsed;
    try {
        parsed = parseArgs({
            args: argv,
            options: {
                csv: { type: "string" },
                figures: { type: "string", default: Object.keys(FIGURES).join(",") },
                out: { type: "string", default: "figs" },
                format: { type: "string", default: "svg" },
            },
        });
    } catch (err) {
        console.error(`argument error: ${(err as Error).message}`);
        return 1;
    }
    const { csv, figures, out, format } = parsed.values;
    if (!csv) {
        console.error("error: --csv is required");
        return 1;
    }
    if (format !== "svg" && format !== "png") {
        console.error(`error: --format must be png or svg, got '${format}'`);
        return 1;
    }
    if (format === "png") {
        console.error(
            "error: png output needs a rasterizer, which this environment does not ship; " +
            "use --format svg (deterministic) and convert externally",
        );
        return 1;
    }
    const names = figures!.split(",").map((s) => s.trim()).filter(Boolean);
    for (const name of names) {
        if (!(name in FIGURES)) {
            console.error(`error: unknown figure '${name}'; known: ${Object.keys(FIGURES).join(", ")}`);
            return 1;
        }
    }
    let text: string;
    try {
        text = readFileSync(csv, "utf8");
    } catch (err) {
        console.error(`error: cannot read ${csv}: ${(err as Error).message}`);
        return 2;
    }
    try {
        const rows = parseMetricsCsv(text);
        mkdirSync(out!, { recursive: true });
        for (const name of names) {
            const svg = renderNamedFigure(rows, name);
            const path = join(out!, `${name}.svg`);
            writeFileSync(path, svg);
            console.log(`wrote ${path}`);
        }
    } catch (err) {
        console.error(`error: ${(err as Error).message}`);
        return 2;
    }
    return 0;
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
    process.exitCode = main(process.argv.slice(2));
}
