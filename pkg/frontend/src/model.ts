/** Shape-preserving encoder/decoder reconstruction network.
 *
 * Down-sampling path of double-convolution blocks (3x3 conv, instance
 * normalization, ReLU, twice) with 2x2 max pooling, a bottleneck block,
 * and an up-sampling path using bilinear interpolation with skip
 * concatenation, closed by a stack of 1x1 convolutions down to one
 * channel.  Channel widths double at each of the four pooling levels.
 */
import * as tf from "./tf.js";

export interface UNetConfig {
  baseChannels: 32 | 64 | 128 | 256;
  poolDepth: number;
  learningRate: number;
  lrDecayEpoch: number;
  totalEpochs: number;
  track: "single-coil" | "multi-coil";
}

export const DEFAULT_CONFIG: UNetConfig = {
  baseChannels: 32,
  poolDepth: 4,
  learningRate: 0.001,
  lrDecayEpoch: 40,
  totalEpochs: 50,
  track: "single-coil",
};

const EPS = 1e-5;

/** Per-sample, per-channel normalization over the spatial axes (no
 * learned affine parameters). */
class InstanceNorm extends tf.layers.Layer {
  static className = "InstanceNorm";

  call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    const x = Array.isArray(inputs) ? inputs[0] : inputs;
    return tf.tidy(() => {
      const { mean, variance } = tf.moments(x, [1, 2], true);
      return tf.div(tf.sub(x, mean), tf.sqrt(tf.add(variance, EPS)));
    });
  }

  computeOutputShape(inputShape: tf.Shape): tf.Shape {
    return inputShape;
  }
}
tf.serialization.registerClass(InstanceNorm);

/** Doubles both spatial extents by bilinear interpolation. */
class UpsampleBilinear extends tf.layers.Layer {
  static className = "UpsampleBilinear";

  call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    const x = (Array.isArray(inputs) ? inputs[0] : inputs) as tf.Tensor4D;
    return tf.tidy(() =>
      tf.image.resizeBilinear(x, [x.shape[1] * 2, x.shape[2] * 2]),
    );
  }

  computeOutputShape(inputShape: tf.Shape): tf.Shape {
    const [b, h, w, c] = inputShape as Array<number | null>;
    return [b, h == null ? null : 2 * h, w == null ? null : 2 * w, c];
  }
}
tf.serialization.registerClass(UpsampleBilinear);

function convBlock(
  x: tf.SymbolicTensor,
  filters: number,
  initializer: string,
): tf.SymbolicTensor {
  let out = x;
  for (let i = 0; i < 2; i++) {
    out = tf.layers
      .conv2d({
        filters,
        kernelSize: 3,
        padding: "same",
        kernelInitializer: initializer as "glorotUniform",
      })
      .apply(out) as tf.SymbolicTensor;
    out = new InstanceNorm({}).apply(out) as tf.SymbolicTensor;
    out = tf.layers.reLU().apply(out) as tf.SymbolicTensor;
  }
  return out;
}

export function buildUNet(
  cfg: Pick<UNetConfig, "baseChannels" | "poolDepth">,
  initializer = "glorotUniform",
): tf.LayersModel {
  const input = tf.input({ shape: [null, null, 1] });
  const ch: number = cfg.baseChannels;

  const skips: tf.SymbolicTensor[] = [];
  let x = input;
  let filters = ch;
  for (let level = 0; level < cfg.poolDepth; level++) {
    x = convBlock(x, filters, initializer);
    skips.push(x);
    x = tf.layers
      .maxPooling2d({ poolSize: 2, strides: 2, padding: "same" })
      .apply(x) as tf.SymbolicTensor;
    if (level < cfg.poolDepth - 1) filters *= 2;
  }

  x = convBlock(x, filters, initializer); // bottleneck keeps the widest width

  for (let level = cfg.poolDepth - 1; level >= 0; level--) {
    x = new UpsampleBilinear({}).apply(x) as tf.SymbolicTensor;
    x = tf.layers
      .concatenate({ axis: -1 })
      .apply([skips[level], x]) as tf.SymbolicTensor;
    filters = Math.max(ch, filters / 2);
    x = convBlock(x, level === 0 ? ch : filters, initializer);
    if (level === 0) filters = ch;
  }

  // head: 1x1 convolutions reducing the channel count to one
  for (const f of [Math.floor(ch / 2), 1, 1]) {
    x = tf.layers
      .conv2d({
        filters: f,
        kernelSize: 1,
        kernelInitializer: initializer as "glorotUniform",
      })
      .apply(x) as tf.SymbolicTensor;
  }

  return tf.model({ inputs: input, outputs: x });
}

/** Pad the spatial extents up to a multiple of 2^poolDepth by reflection,
 * run the network, and crop back: the public forward pass is
 * shape-preserving for any input size. */
export function unetForward(
  model: tf.LayersModel,
  x: tf.Tensor4D,
  poolDepth = 4,
): tf.Tensor4D {
  const mult = 1 << poolDepth;
  const [, h, w] = x.shape;
  const padH = (mult - (h % mult)) % mult;
  const padW = (mult - (w % mult)) % mult;
  return tf.tidy(() => {
    let inp = x;
    if (padH || padW) {
      inp = tf.mirrorPad(
        x,
        [
          [0, 0],
          [0, padH],
          [0, padW],
          [0, 0],
        ],
        "reflect",
      );
    }
    let out = model.apply(inp) as tf.Tensor4D;
    if (padH || padW) {
      out = tf.slice(out, [0, 0, 0, 0], [out.shape[0], h, w, 1]);
    }
    return out;
  });
}
