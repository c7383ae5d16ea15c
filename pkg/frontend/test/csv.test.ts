import * as fs from "node:fs";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import { CsvError, extractSeries, formatGroupValue, parseHarnessCsv } from "../src/csv";

const FIXTURE = path.join(__dirname, "fixtures", "fig1.csv");
const text = fs.readFileSync(FIXTURE, "utf-8");

describe("parseHarnessCsv", () => {
  it("reads header comments, plans, and rows", () => {
    const csv = parseHarnessCsv(text);
    expect(csv.columns).toHaveLength(12);
    expect(Object.keys(csv.plans)).toHaveLength(11);
    expect(csv.rows.length).toBeGreaterThan(100);
    expect(csv.comments.some((c) => c.startsWith("config:"))).toBe(true);
  });

  it("rejects a foreign header", () => {
    expect(() => parseHarnessCsv("a,b,c\n1,2,3\n")).toThrow(CsvError);
  });

  it("rejects ragged rows", () => {
    const lines = text.split("\n");
    const headerAt = lines.findIndex((l) => !l.startsWith("#"));
    const broken = lines.slice(0, headerAt + 1).join("\n") + "\n1,2,3\n";
    expect(() => parseHarnessCsv(broken)).toThrow(/fields/);
  });
});

describe("extractSeries", () => {
  it("finds the 11 lambda groups with aligned bands", () => {
    const series = extractSeries(parseHarnessCsv(text), "lambda", "subopt");
    expect(series).toHaveLength(11);
    expect(series.map((s) => s.group)).toEqual(
      ["0", "0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9", "1"],
    );
    for (const s of series) {
      expect(s.x.length).toBe(s.mean.length);
      expect(s.std.length).toBe(s.mean.length);
      expect(s.x[0]).toBe(0);
    }
  });

  it("rejects unknown columns", () => {
    const csv = parseHarnessCsv(text);
    expect(() => extractSeries(csv, "nope", "subopt")).toThrow(/not in CSV/);
    expect(() => extractSeries(csv, "lambda", "nope")).toThrow(/not in CSV/);
  });

  it("rejects an empty selection", () => {
    const csv = parseHarnessCsv(text);
    csv.rows = csv.rows.filter((r) => r["trial"] !== "mean" && r["trial"] !== "std");
    expect(() => extractSeries(csv, "lambda", "subopt")).toThrow(/empty selection/);
  });
});

describe("formatGroupValue", () => {
  it("renders shortest decimal forms", () => {
    expect(formatGroupValue("0.10000000000000001")).toBe("0.1");
    expect(formatGroupValue(0)).toBe("0");
    expect(formatGroupValue(1)).toBe("1");
  });
});
