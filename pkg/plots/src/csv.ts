/** Reader for the engine's combined metrics CSV. */

export interface MetricsRow {
    run_id: string;
    dataset: string;
    seed: number;
    generation: number;
    variant: string;
    values: Record<string, number>;
}

export const REQUIRED_COLUMNS = [
    "run_id", "dataset", "seed", "generation", "variant",
    "mean_length", "median_train_fit", "median_test_fit", "diversity",
    "mean_terminal_prop", "median_smad",
    "elite_train_fit", "elite_test_fit", "elite_length",
];

const NUMERIC_COLUMNS = REQUIRED_COLUMNS.slice(5);

/** Number() plus the engine's spelling of infinities ("inf"/"-inf"). */
function parseNumber(cell: string): number {
    if (cell === "inf") return Infinity;
    if (cell === "-inf") return -Infinity;
    return Number(cell);
}

export function parseMetricsCsv(text: string): MetricsRow[] {
    const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
    if (lines.length === 0) {
        throw new Error("metrics CSV is empty");
    }
    const header = lines[0].split(",");
    for (const col of REQUIRED_COLUMNS) {
        if (!header.includes(col)) {
            throw new Error(`metrics CSV is missing required column '${col}'`);
        }
    }
    const index = new Map(header.map((name, i) => [name, i]));
    if (lines.length === 1) {
        throw new Error("metrics CSV has a header but no data rows");
    }
    const rows: MetricsRow[] = [];
    for (let ln = 1; ln < lines.length; ln++) {
        const cells = lines[ln].split(",");
        if (cells.length !== header.length) {
            throw new Error(`row ${ln + 1}: expected ${header.length} cells, got ${cells.length}`);
        }
        const cell = (name: string) => cells[index.get(name)!];
        const values: Record<string, number> = {};
        for (const col of NUMERIC_COLUMNS) {
            const value = parseNumber(cell(col));
            if (Number.isNaN(value)) {
                throw new Error(`row ${ln + 1}: non-numeric value '${cell(col)}' in column '${col}'`);
            }
            values[col] = value;
        }
        rows.push({
            run_id: cell("run_id"),
            dataset: cell("dataset"),
            seed: Number(cell("seed")),
            generation: Number(cell("generation")),
            variant: cell("variant"),
            values,
        });
    }
    return rows;
}
