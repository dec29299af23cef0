import { ComplexPlane, fft2c } from "../src/fourier.js";
import { VolumeData } from "../src/tensorio.js";

/** Synthetic single-coil volume: a smooth blobby magnitude image whose
 * k-space is its centred transform, in the in-memory record layout. */
export function syntheticVolume(
  h: number,
  w: number,
  slices = 1,
  id = "synth",
): VolumeData {
  const target = new Float32Array(slices * h * w);
  for (let s = 0; s < slices; s++) {
    const amp = 1 + 0.2 * s;
    for (let i = 0; i < h; i++) {
      for (let j = 0; j < w; j++) {
        const y = (i - h / 2) / (h / 2);
        const x = (j - w / 2) / (w / 2);
        let v = Math.exp(-((x * x) / 0.5 + (y * y) / 0.35) * 3);
        v += 0.6 * Math.exp(-(((x - 0.3) ** 2 + (y + 0.2) ** 2) / 0.02));
        v -= 0.4 * Math.exp(-(((x + 0.25) ** 2 + y ** 2) / 0.015));
        target[s * h * w + i * w + j] = Math.max(0, amp * v);
      }
    }
  }

  const re = new Float32Array(slices * h * w);
  const im = new Float32Array(slices * h * w);
  for (let s = 0; s < slices; s++) {
    const plane: ComplexPlane = {
      re: target.slice(s * h * w, (s + 1) * h * w),
      im: new Float32Array(h * w),
      h,
      w,
    };
    const k = fft2c(plane);
    re.set(k.re, s * h * w);
    im.set(k.im, s * h * w);
  }

  let normSq = 0;
  for (const v of target) normSq += v * v;

  return {
    path: "",
    id,
    kspace: { re, im, slices, coils: 1, h, w },
    target: { data: target, slices, h, w },
    mask: null,
    norm: Math.sqrt(normSq),
    max: target.reduce((a, b) => Math.max(a, b), 0),
    acceleration: null,
  };
}
