#!/usr/bin/env node
/** Command-line entry points: `train` and `infer`. */
import { readdirSync, readFileSync } from "node:fs";
import { join } from "node:path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { readVolume } from "./tensorio.js";
import { DEFAULT_TRAIN, train, TrainOptions } from "./train.js";
import { loadCheckpoint } from "./checkpoint.js";
import { inferDirectory } from "./infer.js";

function loadConfig(path: string | undefined): TrainOptions {
  if (!path) return { ...DEFAULT_TRAIN };
  return { ...DEFAULT_TRAIN, ...JSON.parse(readFileSync(path, "utf-8")) };
}

function volumePaths(dir: string): string[] {
  return readdirSync(dir)
    .filter((f) => f.endsWith(".h5"))
    .sort()
    .map((f) => join(dir, f));
}

await yargs(hideBin(process.argv))
  .command(
    "train",
    "train on a corpus directory and checkpoint the best model",
    (y) =>
      y
        .option("config", { type: "string", describe: "JSON config file" })
        .option("corpus", { type: "string", demandOption: true })
        .option("val-fraction", { type: "number", default: 0.25 })
        .option("seed", { type: "number", default: 0 })
        .option("out", { type: "string", demandOption: true }),
    async (argv) => {
      const opts = loadConfig(argv.config);
      const vols = [];
      for (const p of volumePaths(argv.corpus)) vols.push(await readVolume(p));
      const usable = vols.filter((v) => v.target !== null);
      const nVal = Math.max(1, Math.round(argv.valFraction * usable.length));
      const trainVols = usable.slice(0, usable.length - nVal);
      const valVols = usable.slice(usable.length - nVal);
      const result = await train(trainVols, valVols, opts, argv.seed, argv.out);
      console.log(
        `checkpoint: ${result.checkpointDir}  best val NMSE: ${result.bestValNmse}`,
      );
    },
  )
  .command(
    "infer",
    "reconstruct every volume in a directory with a trained checkpoint",
    (y) =>
      y
        .option("config", { type: "string" })
        .option("checkpoint", { type: "string", demandOption: true })
        .option("corpus", { type: "string", demandOption: true })
        .option("seed", { type: "number", default: 0 })
        .option("out", { type: "string", demandOption: true }),
    async (argv) => {
      const opts = loadConfig(argv.config);
      const model = await loadCheckpoint(argv.checkpoint);
      const written = await inferDirectory(
        model,
        volumePaths(argv.corpus),
        argv.out,
        { poolDepth: opts.poolDepth },
      );
      console.log(`wrote ${written.length} reconstructions to ${argv.out}`);
    },
  )
  .demandCommand(1)
  .strict()
  .parseAsync();
