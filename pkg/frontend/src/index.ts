export { buildUNet, unetForward, DEFAULT_CONFIG } from "./model.js";
export type { UNetConfig } from "./model.js";
export {
  train,
  overfitSingleSlice,
  lrForEpoch,
  l1Loss,
  validationNmse,
  DivergenceError,
  DEFAULT_TRAIN,
} from "./train.js";
export type { TrainOptions, TrainResult } from "./train.js";
export { readVolume, writeReconstruction } from "./tensorio.js";
export type { VolumeData } from "./tensorio.js";
export { fft2c, ifft2c, rssMagnitude, centerCropPlane } from "./fourier.js";
export type { ComplexPlane } from "./fourier.js";
export {
  sampleRandomMask,
  canonicalPolicy,
  numLowFrequency,
  centerBlockStart,
  masksDiffer,
} from "./masks.js";
export { makeExample, zeroFilledSlice, targetSlice, volumeScale } from "./data.js";
export { saveCheckpoint, loadCheckpoint } from "./checkpoint.js";
export { inferDirectory, reconstructVolume } from "./infer.js";
