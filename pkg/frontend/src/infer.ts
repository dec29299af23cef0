/** Inference: read masked (test-style) volumes, run the network on their
 * zero-filled images, and write reconstructions for harness scoring. */
import { mkdirSync } from "node:fs";
import { basename, join } from "node:path";
import * as tf from "./tf.js";
import { volumeScale, zeroFilledSlice } from "./data.js";
import { unetForward } from "./model.js";
import { readVolume, writeReconstruction, VolumeData } from "./tensorio.js";

/** Scale for a volume without ground truth: the RMS of its zero-filled
 * image, so inputs match the O(1) range seen in training. */
export function inferenceScale(zf: Float32Array): number {
  let sum = 0;
  for (let i = 0; i < zf.length; i++) sum += zf[i] * zf[i];
  return Math.sqrt(sum / zf.length) || 1;
}

export interface InferOptions {
  poolDepth: number;
  /** output crop; defaults to the stored ground-truth extent or the full
   * k-space extent for test-style volumes */
  outH?: number;
  outW?: number;
}

export function reconstructVolume(
  model: tf.LayersModel,
  vol: VolumeData,
  opts: InferOptions,
): { data: Float32Array; shape: [number, number, number] } {
  const outH = opts.outH ?? vol.target?.h ?? vol.kspace.h;
  const outW = opts.outW ?? vol.target?.w ?? vol.kspace.w;
  const slices = vol.kspace.slices;
  const out = new Float32Array(slices * outH * outW);
  const trainedScale = vol.target ? volumeScale(vol) : null;
  for (let s = 0; s < slices; s++) {
    const zf = zeroFilledSlice(vol, s, vol.mask, outH, outW);
    const scale = trainedScale ?? inferenceScale(zf);
    const plane = tf.tidy(() => {
      const scaled = new Float32Array(zf.length);
      for (let i = 0; i < zf.length; i++) scaled[i] = zf[i] / scale;
      const input = tf.tensor4d(scaled, [1, outH, outW, 1]);
      const pred = unetForward(model, input, opts.poolDepth);
      return tf.mul(tf.relu(pred), scale).reshape([outH, outW]);
    });
    out.set(plane.dataSync() as Float32Array, s * outH * outW);
    plane.dispose();
  }
  return { data: out, shape: [slices, outH, outW] };
}

export async function inferDirectory(
  model: tf.LayersModel,
  volumePaths: string[],
  outDir: string,
  opts: InferOptions,
): Promise<string[]> {
  mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  for (const path of volumePaths) {
    const vol = await readVolume(path);
    const { data, shape } = reconstructVolume(model, vol, opts);
    const outPath = join(outDir, basename(path));
    await writeReconstruction(outPath, data, shape);
    written.push(outPath);
  }
  return written;
}
