import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { beforeAll, describe, expect, it } from "vitest";

import { parseCsv } from "../src/csv.js";
import { distinctCells, FIGURE_KINDS, render } from "../src/figures.js";
import { theoreticalSlope } from "../src/theory.js";

const SAMPLES = fileURLToPath(new URL("../samples/", import.meta.url));
const SOURCE: Record<string, string> = {
  rate_curves: join(SAMPLES, "sweep.csv"),
  phase_transition: join(SAMPLES, "slopes.csv"),
  gamma_effect: join(SAMPLES, "sweep.csv"),
  bernstein_tails: join(SAMPLES, "bernstein.csv"),
};

let outDir: string;
beforeAll(() => {
  outDir = mkdtempSync(join(tmpdir(), "report-"));
});

describe("render on the shipped samples", () => {
  it.each([...FIGURE_KINDS])("renders %s without error", (kind) => {
    const out = join(outDir, `${kind}.svg`);
    const path = render({ inputCsv: SOURCE[kind]!, figureKind: kind, outputPath: out });
    expect(path).toBe(out);
    const svg = readFileSync(out, "utf-8");
    expect(svg.startsWith("<svg ")).toBe(true);
    expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
  });

  it("draws one series per (delta, gamma) cell on both rate panels", () => {
    const table = parseCsv(readFileSync(SOURCE.rate_curves!, "utf-8"));
    const cells = distinctCells(table, ["delta", "gamma", "estimator"]);
    const svg = readFileSync(join(outDir, "rate_curves.svg"), "utf-8");
    const lines = svg.match(/class="series-line"/g) ?? [];
    expect(lines.length).toBe(2 * cells.length);
  });

  it("overlays the predicted rate curve and one point per fitted slope", () => {
    const table = parseCsv(readFileSync(SOURCE.phase_transition!, "utf-8"));
    const svg = readFileSync(join(outDir, "phase_transition.svg"), "utf-8");
    expect(svg).toContain('class="theory-curve"');
    const markers = svg.match(/class="slope-point"/g) ?? [];
    expect(markers.length).toBe(table.rows.length);
  });

  it("keeps the sample bernstein figure free of flagged points", () => {
    const svg = readFileSync(join(outDir, "bernstein_tails.svg"), "utf-8");
    expect(svg).not.toContain('class="flagged"');
  });

  it("is byte-deterministic across repeat renders", () => {
    for (const kind of FIGURE_KINDS) {
      const again = join(outDir, `${kind}-again.svg`);
      render({ inputCsv: SOURCE[kind]!, figureKind: kind, outputPath: again });
      expect(readFileSync(again, "utf-8")).toBe(
        readFileSync(join(outDir, `${kind}.svg`), "utf-8"),
      );
    }
  });
});

describe("render failure modes", () => {
  it("rejects an unknown figure kind without writing", () => {
    const out = join(outDir, "unknown.svg");
    expect(() =>
      render({ inputCsv: SOURCE.rate_curves!, figureKind: "histogram", outputPath: out }),
    ).toThrow(/unknown figure kind "histogram"/);
    expect(existsSync(out)).toBe(false);
  });

  it("rejects a header-only file without writing", () => {
    const empty = join(outDir, "empty.csv");
    writeFileSync(empty, readFileSync(SOURCE.rate_curves!, "utf-8").split("\n")[0] + "\n");
    const out = join(outDir, "empty.svg");
    expect(() =>
      render({ inputCsv: empty, figureKind: "rate_curves", outputPath: out }),
    ).toThrow(/no data rows/);
    expect(existsSync(out)).toBe(false);
  });

  it("names every missing column in schema errors", () => {
    const bad = join(outDir, "bad.csv");
    writeFileSync(bad, "n,delta\n100,0.5\n");
    const out = join(outDir, "bad.svg");
    try {
      render({ inputCsv: bad, figureKind: "rate_curves", outputPath: out });
      expect.unreachable("schema error expected");
    } catch (err) {
      const msg = (err as Error).message;
      for (const col of ["gamma", "estimator", "l2_error", "wall_time_ms"]) {
        expect(msg).toContain(col);
      }
      expect(msg).not.toContain("delta");
    }
    expect(existsSync(out)).toBe(false);
  });

  it("uses the exact schedule rule for the overlay values", () => {
    // the overlay and the slope table must agree on the delta grid
    const table = parseCsv(readFileSync(SOURCE.phase_transition!, "utf-8"));
    const deltas = table.rows.map((r) => Number(r["delta"]));
    expect(deltas).toEqual([0.3, 0.5, 1, 2]);
    expect(deltas.map(theoreticalSlope)).toEqual([
      -0.3 / 1.3, -0.5 / 1.5, -0.5, -0.5,
    ]);
  });
});
