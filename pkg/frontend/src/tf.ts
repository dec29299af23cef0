/** Shared TensorFlow.js import with backend selection.
 *
 * The wasm backend (XNNPACK) is used for speed.  It ships every kernel
 * needed here except the convolution filter gradient, which is
 * registered below as a composition of pad/slice/matMul; the pure-JS
 * "cpu" backend is the fallback if wasm initialisation fails.
 */
import { createRequire } from "node:module";
import { dirname, join } from "node:path";
import * as tfjs from "@tensorflow/tfjs";
import * as wasm from "@tensorflow/tfjs-backend-wasm";

const require = createRequire(import.meta.url);

/** dW[ki,kj,ci,co] = sum over batch and space of x-patch * dy, stride 1. */
function conv2dFilterGradViaMatMul(
  x: tfjs.Tensor4D,
  dy: tfjs.Tensor4D,
  filterShape: [number, number, number, number],
  pad: "same" | "valid" | number,
): tfjs.Tensor4D {
  const [kh, kw, ci, co] = filterShape;
  const [b, , , ] = x.shape;
  const [, ho, wo] = dy.shape;
  let padT = 0;
  let padL = 0;
  if (pad === "same") {
    padT = Math.floor((kh - 1) / 2);
    padL = Math.floor((kw - 1) / 2);
  } else if (typeof pad === "number") {
    padT = pad;
    padL = pad;
  }
  return tfjs.tidy(() => {
    const xp =
      padT || padL
        ? tfjs.pad(x, [
            [0, 0],
            [padT, kh - 1 - padT],
            [padL, kw - 1 - padL],
            [0, 0],
          ])
        : x;
    const dyr = tfjs.reshape(dy, [b * ho * wo, co]);
    const parts: tfjs.Tensor[] = [];
    for (let ki = 0; ki < kh; ki++) {
      for (let kj = 0; kj < kw; kj++) {
        const xs = tfjs.slice(xp, [0, ki, kj, 0], [b, ho, wo, ci]);
        parts.push(
          tfjs.matMul(tfjs.reshape(xs, [b * ho * wo, ci]), dyr, true, false),
        );
      }
    }
    return tfjs.reshape(tfjs.stack(parts), [kh, kw, ci, co]) as tfjs.Tensor4D;
  });
}

tfjs.registerKernel({
  kernelName: "Conv2DBackpropFilter",
  backendName: "wasm",
  kernelFunc: ({ inputs, attrs }) => {
    const { x, dy } = inputs as { x: tfjs.Tensor4D; dy: tfjs.Tensor4D };
    const a = attrs as unknown as {
      strides: number | [number, number];
      pad: "same" | "valid" | number;
      dataFormat: string;
      dilations?: number | [number, number];
      filterShape: [number, number, number, number];
    };
    const strides = Array.isArray(a.strides) ? a.strides : [a.strides, a.strides];
    const dilations = a.dilations
      ? Array.isArray(a.dilations)
        ? a.dilations
        : [a.dilations, a.dilations]
      : [1, 1];
    if (strides.some((s) => s !== 1) || dilations.some((d) => d !== 1)) {
      throw new Error("Conv2DBackpropFilter composition supports stride/dilation 1 only");
    }
    if (a.dataFormat && a.dataFormat !== "NHWC") {
      throw new Error("Conv2DBackpropFilter composition supports NHWC only");
    }
    return conv2dFilterGradViaMatMul(
      x as tfjs.Tensor4D,
      dy as tfjs.Tensor4D,
      a.filterShape,
      a.pad,
    );
  },
});

wasm.setWasmPaths(
  join(dirname(require.resolve("@tensorflow/tfjs-backend-wasm")), "/"),
);

try {
  const ok = await tfjs.setBackend("wasm");
  if (!ok) await tfjs.setBackend("cpu");
} catch {
  await tfjs.setBackend("cpu");
}
await tfjs.ready();

export * from "@tensorflow/tfjs";
