/** Bit-level and value-level comparison helpers. */

/**
 * First differing bit between two hex bitstreams, in transmission order
 * (bit 0 is the most significant bit of byte 0); -1 when identical.
 */
export function firstDifferingBit(aHex: string, bHex: string): number {
  const a = Buffer.from(aHex, "hex");
  const b = Buffer.from(bHex, "hex");
  const length = Math.max(a.length, b.length);
  for (let i = 0; i < length; i++) {
    const diff = (a[i] ?? 0) ^ (b[i] ?? 0);
    if (diff !== 0) {
      for (let bit = 0; bit < 8; bit++) {
        if (diff & (0x80 >> bit)) {
          return i * 8 + bit;
        }
      }
    }
  }
  return -1;
}

const scratch = new DataView(new ArrayBuffer(8));

function orderedBits(x: number): bigint {
  scratch.setFloat64(0, x);
  const bits = scratch.getBigInt64(0);
  return bits >= 0n ? bits : -(bits & 0x7fffffffffffffffn) - 1n;
}

/** Distance in representable doubles (0 for equal, 1 for adjacent). */
export function ulpDiff(a: number, b: number): bigint {
  const diff = orderedBits(a) - orderedBits(b);
  return diff < 0n ? -diff : diff;
}

/**
 * Compare a decoded value against the golden one.  Integer leaves must match
 * as canonical decimal text; float leaves (the golden rendering always has a
 * '.', 'e', or 'E') compare numerically within one ulp.
 */
export function valuesMatch(golden: string, produced: string): boolean {
  if (golden === produced) {
    return true;
  }
  if (/[.eE]/.test(golden)) {
    return ulpDiff(Number(golden), Number(produced)) <= 1n;
  }
  return false;
}
