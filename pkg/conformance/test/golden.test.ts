import { describe, expect, it } from "vitest";

import { firstDifferingBit, ulpDiff, valuesMatch } from "../src/compare.js";
import { parseGoldenFile, parseValuePairs } from "../src/golden.js";

describe("parseGoldenFile", () => {
  it("parses header and vectors", () => {
    const text =
      "#frame FCCN/F_ACTFLO_Cmd_Pos size 83 seed 7\n" +
      "in.OCE_Cmds.ACTFXX.ACTFLO_Cmd_Pos_rad=1.5 | c1400000000007f8000000\n";
    const golden = parseGoldenFile(text);
    expect(golden.deviceId).toBe("FCCN");
    expect(golden.frameName).toBe("F_ACTFLO_Cmd_Pos");
    expect(golden.sizeBits).toBe(83);
    expect(golden.seed).toBe(7);
    expect(golden.vectors).toHaveLength(1);
    expect(golden.vectors[0]!.values.get("in.OCE_Cmds.ACTFXX.ACTFLO_Cmd_Pos_rad")).toBe("1.5");
    expect(golden.vectors[0]!.hex).toBe("c1400000000007f8000000");
  });

  it("rejects files without a header", () => {
    expect(() => parseGoldenFile("a=1 | 00\n")).toThrow(/#frame/);
  });

  it("rejects malformed vector lines", () => {
    expect(() =>
      parseGoldenFile("#frame D/F size 8 seed 1\nnot a vector\n")
    ).toThrow(/malformed/);
  });

  it("keeps 64-bit integers textual", () => {
    const golden = parseGoldenFile(
      "#frame D/F size 64 seed 1\na.b=18446744073709551615 | ffffffffffffffff\n"
    );
    expect(golden.vectors[0]!.values.get("a.b")).toBe("18446744073709551615");
  });
});

describe("parseValuePairs", () => {
  it("handles empty payloads", () => {
    expect(parseValuePairs("").size).toBe(0);
  });

  it("splits pairs", () => {
    const values = parseValuePairs("a.b=1;c.d=-2.5");
    expect(values.get("a.b")).toBe("1");
    expect(values.get("c.d")).toBe("-2.5");
  });
});

describe("firstDifferingBit", () => {
  it("returns -1 for equal streams", () => {
    expect(firstDifferingBit("c140", "c140")).toBe(-1);
  });

  it("finds the MSB-first bit index", () => {
    expect(firstDifferingBit("80", "00")).toBe(0);
    expect(firstDifferingBit("01", "00")).toBe(7);
    expect(firstDifferingBit("0001", "0000")).toBe(15);
    expect(firstDifferingBit("ff08", "ff00")).toBe(12);
  });

  it("treats missing bytes as zero", () => {
    expect(firstDifferingBit("ff", "ff80")).toBe(8);
  });
});

describe("ulpDiff / valuesMatch", () => {
  it("identical doubles have zero distance", () => {
    expect(ulpDiff(1.25, 1.25)).toBe(0n);
  });

  it("adjacent doubles are one apart", () => {
    const next = Number.MIN_VALUE; // smallest subnormal is one ulp from zero
    expect(ulpDiff(0, next)).toBe(1n);
    expect(ulpDiff(-next, -0)).toBe(1n);
    expect(ulpDiff(-0, 0)).toBe(1n); // signed zeros count as one step
  });

  it("integer values compare textually", () => {
    expect(valuesMatch("42", "42")).toBe(true);
    expect(valuesMatch("42", "43")).toBe(false);
    expect(valuesMatch("18446744073709551615", "18446744073709551615")).toBe(true);
    expect(valuesMatch("18446744073709551615", "18446744073709551614")).toBe(false);
  });

  it("float values tolerate one ulp and different spellings", () => {
    expect(valuesMatch("1.5", "1.5")).toBe(true);
    expect(valuesMatch("3132360182726656.0", "3132360182726656")).toBe(true);
    const bits = new DataView(new ArrayBuffer(8));
    bits.setFloat64(0, 1e30);
    bits.setBigInt64(0, bits.getBigInt64(0) + 1n);
    expect(valuesMatch("1e+30", String(bits.getFloat64(0)))).toBe(true);
    expect(valuesMatch("1.5", "1.6")).toBe(false);
  });
});
