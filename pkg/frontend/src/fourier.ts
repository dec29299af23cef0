/** Centred unitary 2-D discrete Fourier transforms on typed arrays.
 *
 * Conventions match the reconstruction toolkit this package is scored
 * against: DC at (h>>1, w>>1), orthonormal scaling.  The direct O(n^2)
 * transform per axis is ample at the slice sizes handled here and keeps
 * the data pipeline independent of the ML runtime.
 */

export interface ComplexPlane {
  re: Float32Array;
  im: Float32Array;
  h: number;
  w: number;
}

interface Twiddle {
  cos: Float64Array;
  sin: Float64Array;
}

const twiddleCache = new Map<string, Twiddle>();

function twiddle(n: number, sign: number): Twiddle {
  const key = `${n}|${sign}`;
  let t = twiddleCache.get(key);
  if (!t) {
    const cos = new Float64Array(n * n);
    const sin = new Float64Array(n * n);
    for (let k = 0; k < n; k++) {
      for (let j = 0; j < n; j++) {
        const a = (sign * 2 * Math.PI * ((k * j) % n)) / n;
        cos[k * n + j] = Math.cos(a);
        sin[k * n + j] = Math.sin(a);
      }
    }
    t = { cos, sin };
    twiddleCache.set(key, t);
  }
  return t;
}

/** In-place circular shift of each axis by the given amounts. */
function shift2(p: ComplexPlane, sh: number, sw: number): ComplexPlane {
  const { h, w } = p;
  const re = new Float32Array(h * w);
  const im = new Float32Array(h * w);
  for (let i = 0; i < h; i++) {
    const si = (i + sh) % h;
    for (let j = 0; j < w; j++) {
      const sj = (j + sw) % w;
      re[si * w + sj] = p.re[i * w + j];
      im[si * w + sj] = p.im[i * w + j];
    }
  }
  return { re, im, h, w };
}

function fftShift(p: ComplexPlane): ComplexPlane {
  return shift2(p, p.h >> 1, p.w >> 1);
}

function ifftShift(p: ComplexPlane): ComplexPlane {
  return shift2(p, p.h - (p.h >> 1), p.w - (p.w >> 1));
}

/** Unitary DFT along the last axis of an h-by-w complex plane. */
function dftRows(p: ComplexPlane, sign: number): ComplexPlane {
  const { h, w } = p;
  const { cos, sin } = twiddle(w, sign);
  const scale = 1 / Math.sqrt(w);
  const re = new Float32Array(h * w);
  const im = new Float32Array(h * w);
  for (let i = 0; i < h; i++) {
    const row = i * w;
    for (let k = 0; k < w; k++) {
      let ar = 0;
      let ai = 0;
      const tw = k * w;
      for (let j = 0; j < w; j++) {
        const c = cos[tw + j];
        const s = sin[tw + j];
        const xr = p.re[row + j];
        const xi = p.im[row + j];
        ar += xr * c - xi * s;
        ai += xr * s + xi * c;
      }
      re[row + k] = ar * scale;
      im[row + k] = ai * scale;
    }
  }
  return { re, im, h, w };
}

function transposePlane(p: ComplexPlane): ComplexPlane {
  const { h, w } = p;
  const re = new Float32Array(h * w);
  const im = new Float32Array(h * w);
  for (let i = 0; i < h; i++) {
    for (let j = 0; j < w; j++) {
      re[j * h + i] = p.re[i * w + j];
      im[j * h + i] = p.im[i * w + j];
    }
  }
  return { re, im, h: w, w: h };
}

function dft2(p: ComplexPlane, sign: number): ComplexPlane {
  return transposePlane(dftRows(transposePlane(dftRows(p, sign)), sign));
}

export function fft2c(p: ComplexPlane): ComplexPlane {
  return fftShift(dft2(ifftShift(p), -1));
}

export function ifft2c(p: ComplexPlane): ComplexPlane {
  return fftShift(dft2(ifftShift(p), +1));
}

/** Centre crop of a real plane (extra retained pixel on the low side). */
export function centerCropPlane(
  data: Float32Array,
  h: number,
  w: number,
  outH: number,
  outW: number,
): Float32Array {
  if (outH > h || outW > w) throw new Error("crop larger than extent");
  const top = Math.floor((h - outH) / 2);
  const left = Math.floor((w - outW) / 2);
  const out = new Float32Array(outH * outW);
  for (let i = 0; i < outH; i++) {
    for (let j = 0; j < outW; j++) {
      out[i * outW + j] = data[(top + i) * w + (left + j)];
    }
  }
  return out;
}

/** Root-sum-of-squares magnitude of a stack of coil planes. */
export function rssMagnitude(planes: ComplexPlane[]): Float32Array {
  const { h, w } = planes[0];
  const out = new Float32Array(h * w);
  for (const p of planes) {
    for (let i = 0; i < h * w; i++) {
      out[i] += p.re[i] * p.re[i] + p.im[i] * p.im[i];
    }
  }
  for (let i = 0; i < h * w; i++) out[i] = Math.sqrt(out[i]);
  return out;
}
