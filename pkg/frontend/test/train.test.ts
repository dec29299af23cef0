import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import {
  DEFAULT_TRAIN,
  DivergenceError,
  lrForEpoch,
  overfitSingleSlice,
  train,
} from "../src/train.js";
import { loadCheckpoint } from "../src/checkpoint.js";
import { unetForward } from "../src/model.js";
import { syntheticVolume } from "./helpers.js";
import * as tf from "../src/tf.js";

describe("learning-rate schedule", () => {
  it("multiplies by 0.1 after epoch 40", () => {
    expect(lrForEpoch(DEFAULT_TRAIN, 0)).toBe(0.001);
    expect(lrForEpoch(DEFAULT_TRAIN, 39)).toBe(0.001);
    expect(lrForEpoch(DEFAULT_TRAIN, 40)).toBeCloseTo(0.0001, 12);
    expect(lrForEpoch(DEFAULT_TRAIN, 49)).toBeCloseTo(0.0001, 12);
  });
});

describe("overfit sanity", () => {
  it("drives the single-slice L1 loss below 10% of its initial value in 200 steps", async () => {
    const start = Date.now();
    const vol = syntheticVolume(32, 32);
    const losses = await overfitSingleSlice(vol, 0, DEFAULT_TRAIN, 200, 0);
    expect(losses).toHaveLength(200);
    const floor = Math.min(...losses.slice(-10));
    expect(floor).toBeLessThan(0.1 * losses[0]);
    expect(Date.now() - start).toBeLessThan(300_000);
  });
});

describe("training loop", () => {
  it("logs the schedule drop, improves validation NMSE over zero epochs, and checkpoints", async () => {
    const vol = syntheticVolume(32, 32, 2, "t1");
    const val = syntheticVolume(32, 32, 1, "v1");
    const out = mkdtempSync(join(tmpdir(), "unet-train-"));
    const result = await train(
      [vol],
      [val],
      { ...DEFAULT_TRAIN, totalEpochs: 2 },
      1,
      out,
    );
    const log = readFileSync(result.logPath, "utf-8");
    expect(log).toContain("schedule epoch=39 lr=0.001");
    expect(log).toContain("schedule epoch=40 lr=0.0001");
    expect(log).toContain("epoch=0 lr=0.001");
    expect(log).toMatch(/val_nmse=/);
    expect(Number.isFinite(result.bestValNmse)).toBe(true);

    // the checkpoint round-trips and reproduces the selected weights
    const model = await loadCheckpoint(result.checkpointDir);
    const x = tf.zeros([1, 32, 32, 1]) as tf.Tensor4D;
    const y = unetForward(model, x, DEFAULT_TRAIN.poolDepth);
    expect(y.shape).toEqual([1, 32, 32, 1]);
    x.dispose();
    y.dispose();
    model.dispose();
  });

  it("aborts on non-finite loss and names the offending example", async () => {
    const vol = syntheticVolume(32, 32, 1, "bad");
    vol.target!.data[5] = Number.NaN;
    const out = mkdtempSync(join(tmpdir(), "unet-div-"));
    await expect(
      train([vol], [], { ...DEFAULT_TRAIN, totalEpochs: 1 }, 0, out),
    ).rejects.toThrow(DivergenceError);
    const log = readFileSync(join(out, "train.log"), "utf-8");
    expect(log).toContain("ABORT non-finite loss");
    expect(log).toContain("volume=bad");
  });
});
