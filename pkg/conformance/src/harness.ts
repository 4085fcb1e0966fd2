/**
 * Conformance harness: generate the transport-layer C codec, generate golden
 * vectors, compile the generic runner against the generated code, replay
 * every vector through the compiled encode/decode, and compare with the
 * golden bitstreams and value maps.
 *
 * The harness talks to the generator exclusively through its CLI and file
 * formats (golden-vector files, template set directories, generated C).
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";

import { firstDifferingBit, valuesMatch } from "./compare.js";
import { parseGoldenFile, parseValuePairs } from "./golden.js";
import {
  CompileFailure,
  ConformanceOptions,
  FrameResult,
  GeneratorFailure,
  HarnessResult,
  Mismatch,
  ToolchainConfig,
} from "./types.js";

const HERE = dirname(fileURLToPath(import.meta.url));

export function runnerSourcePath(): string {
  // dist/ and src/ sit beside csrc/
  return resolve(HERE, "..", "csrc", "runner.c");
}

function defaultGeneratorCmd(): string[] {
  const env = process.env["ICDFORGE_CMD"];
  if (env !== undefined && env.trim() !== "") {
    return env.trim().split(/\s+/);
  }
  return ["python3", "-m", "icdforge"];
}

function runCommand(cmd: string[], what: string): string {
  const [program, ...args] = cmd;
  if (program === undefined) {
    throw new GeneratorFailure(`${what}: empty command`);
  }
  const result = spawnSync(program, args, { encoding: "utf-8", maxBuffer: 1 << 28 });
  if (result.error !== undefined) {
    throw new GeneratorFailure(`${what}: ${String(result.error)}`);
  }
  if (result.status !== 0) {
    throw new GeneratorFailure(
      `${what} exited with ${result.status}\n${result.stdout}\n${result.stderr}`
    );
  }
  return result.stdout;
}

function outputLines(stdout: string): string[] {
  // one line per vector; interior empty lines are meaningful (no-leaf frames)
  if (stdout === "") {
    return [];
  }
  return stdout.replace(/\n$/, "").split("\n");
}

export function compileRunner(
  generatedDir: string,
  deviceIdLower: string,
  binaryPath: string,
  toolchain: ToolchainConfig
): void {
  const args = [
    ...toolchain.flags,
    `-I${generatedDir}`,
    `-DICDTL_HEADER="${deviceIdLower}_tl.h"`,
    `-DICDTL_TABLE=icdtl_${deviceIdLower}_frames`,
    `-DICDTL_COUNT=icdtl_${deviceIdLower}_frame_count`,
    runnerSourcePath(),
    join(generatedDir, `${deviceIdLower}_tl.c`),
    "-o",
    binaryPath,
  ];
  const result = spawnSync(toolchain.cc, args, { encoding: "utf-8" });
  if (result.error !== undefined || result.status !== 0) {
    throw new CompileFailure(
      `${toolchain.cc} ${args.join(" ")}\n${result.stdout ?? ""}${result.stderr ?? ""}` +
        (result.error !== undefined ? String(result.error) : "")
    );
  }
}

function replayFrame(
  binaryPath: string,
  vectorFile: string,
  frame: string
): FrameResult {
  const golden = parseGoldenFile(readFileSync(vectorFile, "utf-8"));
  const mismatches: Mismatch[] = [];

  const encode = spawnSync(binaryPath, ["encode", vectorFile], {
    encoding: "utf-8",
    maxBuffer: 1 << 28,
  });
  if (encode.status !== 0) {
    throw new CompileFailure(`runner encode failed: ${encode.stderr}`);
  }
  const encodeLines = outputLines(encode.stdout);
  if (encodeLines.length !== golden.vectors.length) {
    throw new Error(
      `runner produced ${encodeLines.length} encode lines for ${golden.vectors.length} vectors`
    );
  }
  golden.vectors.forEach((vector, index) => {
    const produced = encodeLines[index]!;
    if (produced !== vector.hex) {
      mismatches.push({
        frame,
        vectorIndex: index,
        firstDifferingBit: firstDifferingBit(vector.hex, produced),
        kind: "encode",
        detail: `golden ${vector.hex} produced ${produced}`,
      });
    }
  });

  const decode = spawnSync(binaryPath, ["decode", vectorFile], {
    encoding: "utf-8",
    maxBuffer: 1 << 28,
  });
  if (decode.status !== 0) {
    throw new CompileFailure(`runner decode failed: ${decode.stderr}`);
  }
  const decodeLines = outputLines(decode.stdout);
  if (decodeLines.length !== golden.vectors.length) {
    throw new Error(
      `runner produced ${decodeLines.length} decode lines for ${golden.vectors.length} vectors`
    );
  }
  golden.vectors.forEach((vector, index) => {
    const line = decodeLines[index]!;
    if (line === "!idmismatch") {
      mismatches.push({
        frame,
        vectorIndex: index,
        firstDifferingBit: -1,
        kind: "decode",
        detail: "generated decode rejected the frame identifier",
      });
      return;
    }
    const produced = parseValuePairs(line);
    for (const [path, goldenValue] of vector.values) {
      const producedValue = produced.get(path);
      if (producedValue === undefined || !valuesMatch(goldenValue, producedValue)) {
        mismatches.push({
          frame,
          vectorIndex: index,
          firstDifferingBit: -1,
          kind: "decode",
          detail: `${path}: golden ${goldenValue}, produced ${producedValue ?? "<missing>"}`,
        });
      }
    }
  });

  return {
    frame,
    vectorsRun: golden.vectors.length,
    mismatches,
    pass: mismatches.length === 0,
  };
}

export function runConformance(options: ConformanceOptions): HarnessResult {
  const generatorCmd = options.generatorCmd ?? defaultGeneratorCmd();
  const toolchain: ToolchainConfig = {
    cc: options.toolchain?.cc ?? "cc",
    flags: options.toolchain?.flags ?? ["-std=c99", "-O2", "-Wall"],
  };
  const workDir = options.workDir ?? mkdtempSync(join(tmpdir(), "icdtl-conf-"));
  const deviceLower = options.deviceId.toLowerCase();
  const frames: FrameResult[] = [];

  try {
    if (options.n > 0 && options.frames.length > 0) {
      const generatedDir = join(workDir, "gen");
      runCommand(
        [
          ...generatorCmd,
          "gen-tl",
          options.icdPath,
          options.templates ?? "c99",
          generatedDir,
        ],
        "gen-tl"
      );
      const binaryPath = join(workDir, `runner_${deviceLower}`);
      compileRunner(generatedDir, deviceLower, binaryPath, toolchain);

      for (const frame of options.frames) {
        const vectorFile = join(workDir, `${frame}.vec`);
        runCommand(
          [
            ...generatorCmd,
            "oracle",
            options.icdPath,
            options.deviceId,
            frame,
            "vectors",
            "--n",
            String(options.n),
            "--seed",
            String(options.seed),
            "--out",
            vectorFile,
          ],
          `oracle vectors (${frame})`
        );
        frames.push(replayFrame(binaryPath, vectorFile, frame));
      }
    } else {
      for (const frame of options.frames) {
        frames.push({ frame, vectorsRun: 0, mismatches: [], pass: true });
      }
    }

    const mismatches = frames.flatMap((f) => f.mismatches);
    const result: HarnessResult = {
      device: options.deviceId,
      vectorsRun: frames.reduce((total, f) => total + f.vectorsRun, 0),
      mismatches,
      pass: mismatches.length === 0,
      frames,
      workDir,
    };
    writeFileSync(
      join(workDir, "result.json"),
      JSON.stringify(
        { ...result, mismatches: result.mismatches.slice(0, 100) },
        null,
        2
      ) + "\n"
    );
    return result;
  } finally {
    if (options.keepWork !== true && options.workDir === undefined) {
      // the result file is only useful when the caller keeps the directory
      rmSync(workDir, { recursive: true, force: true });
    }
  }
}

export function formatHumanLog(result: HarnessResult): string {
  const lines = [
    `device ${result.device}: ${result.vectorsRun} vectors, ` +
      `${result.mismatches.length} mismatches, ${result.pass ? "PASS" : "FAIL"}`,
  ];
  for (const frame of result.frames) {
    lines.push(
      `  frame ${frame.frame}: ${frame.vectorsRun} vectors ${frame.pass ? "ok" : "FAILED"}`
    );
    for (const mismatch of frame.mismatches.slice(0, 5)) {
      lines.push(
        `    vector ${mismatch.vectorIndex} ${mismatch.kind}` +
          (mismatch.firstDifferingBit >= 0
            ? ` first differing bit ${mismatch.firstDifferingBit}`
            : "") +
          (mismatch.detail !== undefined ? `: ${mismatch.detail}` : "")
      );
    }
  }
  return lines.join("\n") + "\n";
}
