/** Training examples from volume containers.
 *
 * Each example is one slice: the input is the magnitude of the
 * zero-filled inverse transform of masked k-space (root-sum-of-squares
 * over coils), centre-cropped to the ground-truth extent; the target is
 * the stored ground-truth slice.  Both are scaled by the volume's
 * norm-derived RMS so the network sees O(1) values.
 */
import * as tf from "./tf.js";
import { centerCropPlane, ComplexPlane, ifft2c, rssMagnitude } from "./fourier.js";
import { MaskPolicy, sampleRandomMask } from "./masks.js";
import { VolumeData } from "./tensorio.js";

export interface SliceExample {
  volumeId: string;
  sliceIndex: number;
  /** [1,h,w,1] network input (already scaled). */
  input: tf.Tensor4D;
  /** [1,h,w,1] ground truth (same scaling). */
  target: tf.Tensor4D;
  /** multiply network output by this to return to container units */
  scale: number;
}

/** RMS of the ground truth, from the container's norm attribute. */
export function volumeScale(vol: VolumeData): number {
  if (vol.norm !== null && vol.target !== null) {
    const count = vol.target.slices * vol.target.h * vol.target.w;
    return vol.norm / Math.sqrt(count) || 1;
  }
  return 1;
}

function coilPlane(vol: VolumeData, s: number, c: number, mask: Uint8Array | null): ComplexPlane {
  const { coils, h, w } = vol.kspace;
  const off = (s * coils + c) * h * w;
  const re = vol.kspace.re.slice(off, off + h * w);
  const im = vol.kspace.im.slice(off, off + h * w);
  if (mask) {
    for (let i = 0; i < h; i++) {
      for (let j = 0; j < w; j++) {
        if (!mask[j]) {
          re[i * w + j] = 0;
          im[i * w + j] = 0;
        }
      }
    }
  }
  return { re, im, h, w };
}

/** Magnitude of the zero-filled reconstruction of one slice, cropped to
 * (outH, outW).  `mask` of null means the stored k-space is used as is
 * (already masked for test-style volumes). */
export function zeroFilledSlice(
  vol: VolumeData,
  s: number,
  mask: Uint8Array | null,
  outH: number,
  outW: number,
): Float32Array {
  const planes: ComplexPlane[] = [];
  for (let c = 0; c < vol.kspace.coils; c++) {
    planes.push(ifft2c(coilPlane(vol, s, c, mask)));
  }
  return centerCropPlane(
    rssMagnitude(planes),
    vol.kspace.h,
    vol.kspace.w,
    outH,
    outW,
  );
}

export function targetSlice(vol: VolumeData, s: number): Float32Array {
  const t = vol.target!;
  const size = t.h * t.w;
  return t.data.slice(s * size, (s + 1) * size);
}

function scaledTensor(
  data: Float32Array,
  h: number,
  w: number,
  scale: number,
): tf.Tensor4D {
  const out = new Float32Array(data.length);
  for (let i = 0; i < data.length; i++) out[i] = data[i] / scale;
  return tf.tensor4d(out, [1, h, w, 1]);
}

/** Build one training example with a freshly sampled mask. */
export function makeExample(
  vol: VolumeData,
  s: number,
  policy: MaskPolicy,
  maskSeed: string,
): SliceExample {
  const t = vol.target!;
  const mask = sampleRandomMask(vol.kspace.w, policy, maskSeed);
  const scale = volumeScale(vol);
  const zf = zeroFilledSlice(vol, s, mask, t.h, t.w);
  return {
    volumeId: vol.id,
    sliceIndex: s,
    input: scaledTensor(zf, t.h, t.w, scale),
    target: scaledTensor(targetSlice(vol, s), t.h, t.w, scale),
    scale,
  };
}

export function disposeExample(ex: SliceExample): void {
  ex.input.dispose();
  ex.target.dispose();
}
