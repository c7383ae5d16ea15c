/**
 * Parser for the optimization-harness trajectory CSVs.
 *
 * Schema (fixed column order, `#` lines carry config echo):
 *   experiment_id,preset,trial,epoch,iteration,lambda,rho,gamma,loss,subopt,grad_norm,zero_grad_events
 *
 * Trial rows carry an integer trial id; aggregate rows use trial = "mean" /
 * "std" (population std across trials) per logged iteration. Plots consume
 * the aggregate rows so they can never disagree with the recorded statistics.
 */

export const CSV_COLUMNS = [
  "experiment_id", "preset", "trial", "epoch", "iteration", "lambda",
  "rho", "gamma", "loss", "subopt", "grad_norm", "zero_grad_events",
] as const;

const NUMERIC_COLUMNS = new Set([
  "epoch", "iteration", "lambda", "rho", "gamma", "loss", "subopt",
  "grad_norm", "zero_grad_events",
]);

export type HarnessRow = Record<string, string | number>;

export interface HarnessCsv {
  comments: string[];
  plans: Record<string, string>;
  columns: string[];
  rows: HarnessRow[];
}

export class CsvError extends Error {}

export function parseHarnessCsv(text: string): HarnessCsv {
  const comments: string[] = [];
  const plans: Record<string, string> = {};
  const rows: HarnessRow[] = [];
  let columns: string[] | null = null;

  for (const rawLine of text.split("\n")) {
    const line = rawLine.trimEnd();
    if (!line) continue;
    if (line.startsWith("#")) {
      const body = line.slice(1).trim();
      comments.push(body);
      const planMatch = body.match(/^plan\[(.+?)\]:\s*(.*)$/);
      if (planMatch) plans[planMatch[1]] = planMatch[2];
      continue;
    }
    if (columns === null) {
      columns = line.split(",");
      const expected = CSV_COLUMNS.join(",");
      if (columns.join(",") !== expected) {
        throw new CsvError(`unexpected CSV header: ${line} (expected ${expected})`);
      }
      continue;
    }
    const parts = line.split(",");
    if (parts.length !== columns.length) {
      throw new CsvError(`row has ${parts.length} fields, expected ${columns.length}: ${line}`);
    }
    const row: HarnessRow = {};
    columns.forEach((col, k) => {
      row[col] = NUMERIC_COLUMNS.has(col) ? Number(parts[k]) : parts[k];
    });
    rows.push(row);
  }
  if (columns === null) throw new CsvError("no header row found");
  return { comments, plans, columns, rows };
}

export interface Series {
  /** human-readable group value, e.g. "0.5" for lambda = 0.5 */
  group: string;
  /** numeric group value when the column is numeric (used for ordering) */
  groupValue: number;
  x: number[];
  mean: number[];
  std: number[];
}

/** Shortest decimal form: "0.10000000000000001" -> "0.1". */
export function formatGroupValue(v: string | number): string {
  const num = typeof v === "number" ? v : Number(v);
  return Number.isFinite(num) ? String(num) : String(v);
}

/**
 * Pull one series per distinct group value from the aggregate rows.
 * Throws CsvError when the requested columns do not exist or nothing matches.
 */
export function extractSeries(
  csv: HarnessCsv,
  groupBy: string,
  y: string,
  x: string = "iteration",
): Series[] {
  for (const col of [groupBy, y, x]) {
    if (!csv.columns.includes(col)) {
      throw new CsvError(`column ${JSON.stringify(col)} not in CSV (have: ${csv.columns.join(", ")})`);
    }
  }
  const byGroup = new Map<string, { value: number; x: number[]; mean: number[]; std: number[] }>();
  for (const row of csv.rows) {
    const trial = row["trial"];
    if (trial !== "mean" && trial !== "std") continue;
    const label = formatGroupValue(row[groupBy]);
    let entry = byGroup.get(label);
    if (!entry) {
      entry = { value: Number(row[groupBy]), x: [], mean: [], std: [] };
      byGroup.set(label, entry);
    }
    if (trial === "mean") {
      entry.x.push(Number(row[x]));
      entry.mean.push(Number(row[y]));
    } else {
      entry.std.push(Number(row[y]));
    }
  }
  if (byGroup.size === 0) {
    throw new CsvError("empty selection: no aggregate (mean/std) rows matched");
  }
  const series: Series[] = [];
  for (const [group, e] of byGroup) {
    if (e.mean.length === 0 || e.mean.length !== e.std.length) {
      throw new CsvError(`group ${group}: mean/std row counts disagree (${e.mean.length} vs ${e.std.length})`);
    }
    series.push({ group, groupValue: e.value, x: e.x, mean: e.mean, std: e.std });
  }
  series.sort((a, b) =>
    Number.isFinite(a.groupValue) && Number.isFinite(b.groupValue)
      ? a.groupValue - b.groupValue
      : a.group.localeCompare(b.group));
  return series;
}
