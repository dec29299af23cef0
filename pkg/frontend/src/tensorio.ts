/** Reader/writer for the shared HDF5 volume container.
 *
 * Layout (one file per volume): datasets `kspace` (complex64, coil axis
 * dropped on disk when singleton), `reconstruction_rss` /
 * `reconstruction_esc` (float32 ground truths), `mask` (float 0/1 per
 * k-space column); attributes `norm`, `max`, `acceleration`,
 * `num_low_frequency`.  Externally produced reconstructions are a single
 * float32 dataset named `reconstruction`.
 */
import h5wasm from "h5wasm/node";
import { basename } from "node:path";

export interface KSpaceData {
  re: Float32Array;
  im: Float32Array;
  slices: number;
  coils: number;
  h: number;
  w: number;
}

export interface TargetData {
  data: Float32Array;
  slices: number;
  h: number;
  w: number;
}

export interface VolumeData {
  path: string;
  id: string;
  kspace: KSpaceData;
  target: TargetData | null;
  mask: Uint8Array | null;
  norm: number | null;
  max: number | null;
  acceleration: number | null;
}

let ready = false;
async function init(): Promise<void> {
  if (!ready) {
    await h5wasm.ready;
    ready = true;
  }
}

function complexPairsToArrays(
  value: unknown,
  count: number,
): [Float32Array, Float32Array] {
  const pairs = value as Array<[number, number]>;
  if (pairs.length !== count) {
    throw new Error(`expected ${count} complex samples, got ${pairs.length}`);
  }
  const re = new Float32Array(count);
  const im = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    re[i] = pairs[i][0];
    im[i] = pairs[i][1];
  }
  return [re, im];
}

function attrNumber(f: InstanceType<typeof h5wasm.File>, name: string): number | null {
  const a = (f.attrs as Record<string, { value: unknown } | undefined>)[name];
  if (a === undefined) return null;
  const v = a.value;
  return typeof v === "number" ? v : Number((v as number[] | string).toString());
}

export async function readVolume(path: string): Promise<VolumeData> {
  await init();
  const f = new h5wasm.File(path, "r");
  try {
    const kds = f.get("kspace") as InstanceType<typeof h5wasm.Dataset> | null;
    if (!kds) throw new Error(`${path}: missing dataset 'kspace'`);
    const shape = kds.shape as number[];
    let slices: number, coils: number, h: number, w: number;
    if (shape.length === 3) {
      [slices, h, w] = shape;
      coils = 1;
    } else if (shape.length === 4) {
      [slices, coils, h, w] = shape;
    } else {
      throw new Error(`${path}: kspace must be 3-D or 4-D`);
    }
    const [re, im] = complexPairsToArrays(kds.value, slices * coils * h * w);

    let target: TargetData | null = null;
    for (const name of ["reconstruction_rss", "reconstruction_esc"]) {
      const ds = f.get(name) as InstanceType<typeof h5wasm.Dataset> | null;
      if (ds) {
        const [ts, th, tw] = ds.shape as number[];
        target = {
          data: Float32Array.from(ds.value as ArrayLike<number>),
          slices: ts,
          h: th,
          w: tw,
        };
        break;
      }
    }

    let mask: Uint8Array | null = null;
    const mds = f.get("mask") as InstanceType<typeof h5wasm.Dataset> | null;
    if (mds) {
      const raw = mds.value as ArrayLike<number>;
      mask = Uint8Array.from({ length: raw.length }, (_, i) =>
        raw[i] > 0.5 ? 1 : 0,
      );
    }

    return {
      path,
      id: basename(path, ".h5"),
      kspace: { re, im, slices, coils, h, w },
      target,
      mask,
      norm: attrNumber(f, "norm"),
      max: attrNumber(f, "max"),
      acceleration: attrNumber(f, "acceleration"),
    };
  } finally {
    f.close();
  }
}

/** Write a magnitude volume in the format the harness's scorer consumes. */
export async function writeReconstruction(
  path: string,
  data: Float32Array,
  shape: [number, number, number],
): Promise<void> {
  await init();
  const f = new h5wasm.File(path, "w");
  try {
    f.create_dataset({ name: "reconstruction", data, shape, dtype: "<f4" });
  } finally {
    f.close();
  }
}
