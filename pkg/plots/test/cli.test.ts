import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";
import { main, parseArgs } from "../src/cli.js";

const FIX = join(__dirname, "..", "fixtures");

describe("argument parsing", () => {
  it("reads flags", () => {
    const spec = parseArgs([
      "--kind", "ratio_hist", "--csv", "a.csv", "--out", "b.svg",
      "--ref", "0.5", "--ref", "0.159155",
    ]);
    expect(spec.kind).toBe("ratio_hist");
    expect(spec.reference_lines).toEqual([0.5, 0.159155]);
  });

  it("reads a JSON spec file", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const specPath = join(dir, "spec.json");
    writeFileSync(specPath, JSON.stringify({
      kind: "sweep", csv: join(FIX, "frames.csv"), out: join(dir, "s.svg"),
    }));
    const spec = parseArgs([specPath]);
    expect(spec.kind).toBe("sweep");
  });
});

describe("cli main", () => {
  it("renders all three figure kinds from the acceptance CSVs", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const jobs: Array<[string, string]> = [
      ["convergence", "convergence.csv"],
      ["ratio_hist", "wente.csv"],
      ["sweep", "frames.csv"],
    ];
    for (const [kind, csv] of jobs) {
      const out = join(dir, `${kind}.svg`);
      const code = main(["--kind", kind, "--csv", join(FIX, csv), "--out", out]);
      expect(code).toBe(0);
      expect(existsSync(out)).toBe(true);
      expect(readFileSync(out, "utf-8")).toContain("</svg>");
    }
  });

  it("exits 1 and writes nothing for an empty CSV", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const out = join(dir, "never.svg");
    const code = main([
      "--kind", "convergence", "--csv", join(FIX, "empty.csv"), "--out", out,
    ]);
    expect(code).toBe(1);
    expect(existsSync(out)).toBe(false);
  });

  it("exits 2 on usage errors", () => {
    expect(main([])).toBe(2);
    expect(main(["--kind", "ratio_hist"])).toBe(2);
  });
});
