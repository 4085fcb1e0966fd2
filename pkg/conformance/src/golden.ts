/**
 * Golden-vector file parsing.
 *
 * Format (produced by the generator CLI's oracle):
 *
 *   #frame <device>/<frame> size <bits> seed <seed>
 *   path=value;path=value | <lowercase hex, no separators>
 *
 * Values stay as strings here: 64-bit integers do not fit a JS number, and
 * the C runner parses the same file itself, so the harness only ever needs
 * textual or ulp-level comparisons.
 */

export interface GoldenVector {
  values: Map<string, string>;
  hex: string;
}

export interface GoldenFile {
  deviceId: string;
  frameName: string;
  sizeBits: number;
  seed: number;
  vectors: GoldenVector[];
}

export function parseValuePairs(text: string): Map<string, string> {
  const values = new Map<string, string>();
  if (text.trim() === "") {
    return values;
  }
  for (const pair of text.split(";")) {
    const eq = pair.indexOf("=");
    if (eq <= 0) {
      throw new Error(`malformed value pair: ${pair}`);
    }
    values.set(pair.slice(0, eq), pair.slice(eq + 1));
  }
  return values;
}

export function parseGoldenFile(text: string): GoldenFile {
  const lines = text.split("\n").filter((line) => line.trim() !== "");
  const header = lines[0];
  if (header === undefined || !header.startsWith("#frame ")) {
    throw new Error("golden file must start with a '#frame' header");
  }
  const match = /^#frame (\S+)\/(\S+) size (\d+) seed (\d+)$/.exec(header);
  if (match === null) {
    throw new Error(`malformed golden header: ${header}`);
  }
  const vectors: GoldenVector[] = [];
  for (const line of lines.slice(1)) {
    const sep = line.indexOf(" | ");
    if (sep < 0) {
      throw new Error(`malformed vector line: ${line}`);
    }
    vectors.push({
      values: parseValuePairs(line.slice(0, sep)),
      hex: line.slice(sep + 3).trim(),
    });
  }
  return {
    deviceId: match[1]!,
    frameName: match[2]!,
    sizeBits: Number(match[3]),
    seed: Number(match[4]),
    vectors,
  };
}
