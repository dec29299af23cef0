/** Training loop: L1 objective, RMSProp, tenfold learning-rate drop at a
 * configured epoch, fresh undersampling masks per example per epoch, and
 * best-validation-NMSE model selection. */
import { appendFileSync, mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import seedrandom from "seedrandom";
import * as tf from "./tf.js";
import { disposeExample, makeExample, SliceExample, volumeScale, zeroFilledSlice, targetSlice } from "./data.js";
import { canonicalPolicy, MaskPolicy } from "./masks.js";
import { buildUNet, unetForward, UNetConfig, DEFAULT_CONFIG } from "./model.js";
import { saveCheckpoint } from "./checkpoint.js";
import { VolumeData } from "./tensorio.js";

export interface TrainOptions extends UNetConfig {
  acceleration: number;
}

export const DEFAULT_TRAIN: TrainOptions = { ...DEFAULT_CONFIG, acceleration: 4 };

export function lrForEpoch(opts: Pick<TrainOptions, "learningRate" | "lrDecayEpoch">, epoch: number): number {
  return epoch >= opts.lrDecayEpoch ? opts.learningRate * 0.1 : opts.learningRate;
}

export function l1Loss(pred: tf.Tensor, target: tf.Tensor): tf.Scalar {
  return tf.tidy(() => tf.mean(tf.abs(tf.sub(pred, target)))) as tf.Scalar;
}

function nmseOf(pred: tf.Tensor, target: tf.Tensor): number {
  return tf.tidy(() => {
    const num = tf.sum(tf.square(tf.sub(pred, target))).dataSync()[0];
    const den = tf.sum(tf.square(target)).dataSync()[0];
    return num / den;
  });
}

function shuffled<T>(items: T[], rng: seedrandom.PRNG): T[] {
  const out = items.slice();
  for (let i = out.length - 1; i > 0; i--) {
    const j = Math.floor(rng.quick() * (i + 1));
    [out[i], out[j]] = [out[j], out[i]];
  }
  return out;
}

export class DivergenceError extends Error {}

/** Long optimisation loops are CPU-bound; let timers and IPC breathe. */
function yieldToEventLoop(): Promise<void> {
  return new Promise((resolve) => setImmediate(resolve));
}

export interface TrainResult {
  checkpointDir: string;
  logPath: string;
  bestValNmse: number;
  stepLosses: number[];
}

/** One gradient step on a single example; returns the loss value. */
export function trainStep(
  model: tf.LayersModel,
  optimizer: tf.Optimizer,
  ex: SliceExample,
  poolDepth: number,
): number {
  const loss = optimizer.minimize(
    () => l1Loss(unetForward(model, ex.input, poolDepth), ex.target),
    true,
  )!;
  const v = loss.dataSync()[0];
  loss.dispose();
  return v;
}

export function validationNmse(
  model: tf.LayersModel,
  vols: VolumeData[],
  policy: MaskPolicy,
  poolDepth: number,
  seedTag: string,
): number {
  const values: number[] = [];
  for (const vol of vols) {
    const t = vol.target!;
    const scale = volumeScale(vol);
    for (let s = 0; s < t.slices; s++) {
      const nmse = tf.tidy(() => {
        const ex = makeExample(vol, s, policy, `${seedTag}|val|${vol.id}|${s}`);
        const pred = unetForward(model, ex.input, poolDepth);
        const v = nmseOf(pred, ex.target);
        disposeExample(ex);
        return v;
      });
      values.push(nmse);
      void scale;
    }
  }
  return values.reduce((a, b) => a + b, 0) / values.length;
}

export async function train(
  trainVols: VolumeData[],
  valVols: VolumeData[],
  opts: TrainOptions,
  seed: number,
  outDir: string,
): Promise<TrainResult> {
  mkdirSync(outDir, { recursive: true });
  const logPath = join(outDir, "train.log");
  const checkpointDir = join(outDir, "checkpoint");
  const policy = canonicalPolicy(opts.acceleration);

  // planned learning-rate schedule, logged up front; extends past the
  // decay epoch so the tenfold drop is visible even in short runs
  const horizon = Math.max(opts.totalEpochs, opts.lrDecayEpoch + 1);
  const scheduleLines = [];
  for (let e = 0; e < horizon; e++) {
    scheduleLines.push(`schedule epoch=${e} lr=${lrForEpoch(opts, e)}`);
  }
  writeFileSync(logPath, scheduleLines.join("\n") + "\n");

  const model = buildUNet(opts);
  const optimizer = tf.train.rmsprop(opts.learningRate);
  const rng = seedrandom(`shuffle|${seed}`);

  const examples: Array<{ vol: VolumeData; s: number }> = [];
  for (const vol of trainVols) {
    for (let s = 0; s < vol.target!.slices; s++) examples.push({ vol, s });
  }

  let bestValNmse = Infinity;
  const stepLosses: number[] = [];
  for (let epoch = 0; epoch < opts.totalEpochs; epoch++) {
    const lr = lrForEpoch(opts, epoch);
    (optimizer as unknown as { learningRate: number }).learningRate = lr;
    appendFileSync(logPath, `epoch=${epoch} lr=${lr}\n`);
    for (const { vol, s } of shuffled(examples, rng)) {
      // a different mask for each training example in each epoch
      const ex = makeExample(vol, s, policy, `${seed}|${epoch}|${vol.id}|${s}`);
      const loss = trainStep(model, optimizer, ex, opts.poolDepth);
      disposeExample(ex);
      if (!Number.isFinite(loss)) {
        appendFileSync(
          logPath,
          `ABORT non-finite loss epoch=${epoch} volume=${vol.id} slice=${s}\n`,
        );
        throw new DivergenceError(
          `non-finite loss at epoch ${epoch}, volume ${vol.id}, slice ${s}`,
        );
      }
      stepLosses.push(loss);
      appendFileSync(logPath, `step volume=${vol.id} slice=${s} l1=${loss}\n`);
      await yieldToEventLoop();
    }
    const valNmse = valVols.length
      ? validationNmse(model, valVols, policy, opts.poolDepth, String(seed))
      : Number.NaN;
    appendFileSync(logPath, `epoch=${epoch} val_nmse=${valNmse}\n`);
    if (!valVols.length || valNmse < bestValNmse) {
      bestValNmse = valVols.length ? valNmse : Number.NaN;
      await saveCheckpoint(model, checkpointDir);
      appendFileSync(logPath, `checkpoint epoch=${epoch}\n`);
    }
  }
  model.dispose();
  return { checkpointDir, logPath, bestValNmse, stepLosses };
}

/** Optimization sanity check: repeatedly fit one slice. Returns the loss
 * trajectory. */
export async function overfitSingleSlice(
  vol: VolumeData,
  sliceIndex: number,
  opts: TrainOptions,
  steps: number,
  seed: number,
): Promise<number[]> {
  const policy = canonicalPolicy(opts.acceleration);
  const model = buildUNet(opts);
  const optimizer = tf.train.rmsprop(opts.learningRate);
  const ex = makeExample(vol, sliceIndex, policy, `overfit|${seed}`);
  const losses: number[] = [];
  for (let i = 0; i < steps; i++) {
    losses.push(trainStep(model, optimizer, ex, opts.poolDepth));
    if (i % 5 === 4) await yieldToEventLoop();
  }
  disposeExample(ex);
  model.dispose();
  return losses;
}

export { zeroFilledSlice, targetSlice };
