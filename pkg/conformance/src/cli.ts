#!/usr/bin/env node
/**
 * Usage:
 *   icdforge-conformance <icd.xml> <DEVICE> <frame>[,frame...] [--n 1000]
 *       [--seed 7] [--templates c99] [--cc cc] [--keep-work]
 *
 * Exit codes: 0 all vectors match, 1 mismatches, 2 usage/toolchain errors.
 */

import { runConformance, formatHumanLog } from "./harness.js";
import { CompileFailure, GeneratorFailure } from "./types.js";

function argValue(args: string[], name: string, fallback: string): string {
  const index = args.indexOf(name);
  if (index < 0) {
    return fallback;
  }
  const value = args[index + 1];
  if (value === undefined) {
    throw new Error(`missing value for ${name}`);
  }
  args.splice(index, 2);
  return value;
}

function main(argv: string[]): number {
  const args = [...argv];
  try {
    const n = Number(argValue(args, "--n", "1000"));
    const seed = Number(argValue(args, "--seed", "7"));
    const templates = argValue(args, "--templates", "c99");
    const cc = argValue(args, "--cc", "cc");
    const keepWork = args.includes("--keep-work");
    if (keepWork) {
      args.splice(args.indexOf("--keep-work"), 1);
    }
    const [icdPath, deviceId, frameList] = args;
    if (icdPath === undefined || deviceId === undefined || frameList === undefined) {
      process.stderr.write(
        "usage: icdforge-conformance <icd.xml> <DEVICE> <frame>[,frame...] " +
          "[--n N] [--seed S] [--templates SET] [--cc CC] [--keep-work]\n"
      );
      return 2;
    }
    const result = runConformance({
      icdPath,
      deviceId,
      frames: frameList.split(","),
      n,
      seed,
      templates,
      toolchain: { cc },
      keepWork,
    });
    process.stdout.write(formatHumanLog(result));
    if (keepWork) {
      process.stdout.write(`work dir: ${result.workDir}\n`);
    }
    return result.pass ? 0 : 1;
  } catch (error) {
    if (error instanceof CompileFailure || error instanceof GeneratorFailure) {
      process.stderr.write(error.message + "\n");
      return 2;
    }
    throw error;
  }
}

process.exit(main(process.argv.slice(2)));
