import { describe, expect, it } from "vitest";

import { num, parseCsv, requireColumns, SchemaError } from "../src/csv.js";

describe("parseCsv", () => {
  it("splits header and rows into records", () => {
    const t = parseCsv("a,b,c\n1,2,3\n4,5,6\n");
    expect(t.columns).toEqual(["a", "b", "c"]);
    expect(t.rows).toHaveLength(2);
    expect(t.rows[1]).toEqual({ a: "4", b: "5", c: "6" });
  });

  it("handles header-only and empty input", () => {
    expect(parseCsv("a,b\n").rows).toHaveLength(0);
    expect(parseCsv("").columns).toHaveLength(0);
  });

  it("pads short rows with empty strings", () => {
    const t = parseCsv("a,b\n1\n");
    expect(t.rows[0]).toEqual({ a: "1", b: "" });
  });
});

describe("requireColumns", () => {
  it("passes when all columns are present", () => {
    const t = parseCsv("a,b,c\n1,2,3\n");
    expect(() => requireColumns(t, ["a", "c"], "x")).not.toThrow();
  });

  it("lists every missing column in the error", () => {
    const t = parseCsv("a\n1\n");
    expect(() => requireColumns(t, ["a", "b", "c"], "fig")).toThrow(SchemaError);
    expect(() => requireColumns(t, ["a", "b", "c"], "fig")).toThrow(/fig: missing columns: b, c/);
  });
});

describe("num", () => {
  it("parses the 17-digit reals the producer emits", () => {
    const t = parseCsv("v\n0.29999999999999999\n");
    expect(num(t.rows[0]!, "v")).toBe(0.3);
  });

  it("rejects non-numeric cells", () => {
    const t = parseCsv("v\nabc\n");
    expect(() => num(t.rows[0]!, "v")).toThrow(SchemaError);
  });
});
