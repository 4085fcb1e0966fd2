/** Result types for the generated-codec conformance harness. */

export interface Mismatch {
  /** Frame the vector belongs to. */
  frame: string;
  /** Zero-based index of the vector inside its golden file. */
  vectorIndex: number;
  /**
   * First differing bit between the golden and the produced bitstream
   * (transmission order, bit 0 is the MSB of byte 0); -1 for decode-side
   * value mismatches, which carry the discrepancy in `detail`.
   */
  firstDifferingBit: number;
  kind: "encode" | "decode";
  detail?: string;
}

export interface FrameResult {
  frame: string;
  vectorsRun: number;
  mismatches: Mismatch[];
  pass: boolean;
}

export interface HarnessResult {
  device: string;
  vectorsRun: number;
  mismatches: Mismatch[];
  pass: boolean;
  frames: FrameResult[];
  workDir: string;
}

export interface ToolchainConfig {
  cc: string;
  flags: string[];
}

export interface ConformanceOptions {
  /** Path to the XML interface definition file. */
  icdPath: string;
  /** Device whose generated codec is exercised. */
  deviceId: string;
  /** Frames to replay (the frame selector). */
  frames: string[];
  /** Vectors per frame; 0 is a vacuous pass. */
  n: number;
  seed: number;
  /** Template set directory or built-in name; defaults to the shipped c99 set. */
  templates?: string;
  toolchain?: Partial<ToolchainConfig>;
  /** Command prefix for the generator CLI, e.g. ["python3", "-m", "icdforge"]. */
  generatorCmd?: string[];
  /** Keep the scratch directory for inspection. */
  keepWork?: boolean;
  workDir?: string;
}

export class CompileFailure extends Error {
  constructor(public log: string) {
    super(`C compilation failed:\n${log}`);
    this.name = "CompileFailure";
  }
}

export class GeneratorFailure extends Error {
  constructor(public log: string) {
    super(`generator command failed:\n${log}`);
    this.name = "GeneratorFailure";
  }
}
