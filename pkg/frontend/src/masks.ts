/** Cartesian undersampling masks over k-space columns.
 *
 * A mask keeps a fully sampled low-frequency block centred on the DC
 * column plus a Bernoulli-sampled set of outer columns, tuned so the
 * expected kept count is width/acceleration.  Fresh masks are drawn per
 * training example per epoch.
 */
import seedrandom from "seedrandom";

export interface MaskPolicy {
  acceleration: number;
  centerFraction: number;
}

export const CANONICAL_POLICIES: Record<number, number> = { 4: 0.08, 8: 0.04 };

export function canonicalPolicy(acceleration: number): MaskPolicy {
  const frac = CANONICAL_POLICIES[acceleration];
  if (frac === undefined) {
    throw new Error(`no canonical centre fraction for ${acceleration}x`);
  }
  return { acceleration, centerFraction: frac };
}

export function roundHalfUp(x: number): number {
  return Math.floor(x + 0.5);
}

export function numLowFrequency(width: number, centerFraction: number): number {
  return roundHalfUp(width * centerFraction);
}

/** Index range [start, start + numLow) of the centre block (DC at width>>1). */
export function centerBlockStart(width: number, numLow: number): number {
  return Math.floor((width - numLow + 1) / 2);
}

export function sampleRandomMask(
  width: number,
  policy: MaskPolicy,
  seed: string | number,
): Uint8Array {
  const numLow = numLowFrequency(width, policy.centerFraction);
  const target = width / policy.acceleration;
  if (target < numLow) {
    throw new Error(
      `infeasible policy: centre block (${numLow}) exceeds kept-line budget (${target})`,
    );
  }
  const p = (target - numLow) / (width - numLow);
  const rng = seedrandom(String(seed));
  const keep = new Uint8Array(width);
  for (let i = 0; i < width; i++) keep[i] = rng.quick() < p ? 1 : 0;
  const start = centerBlockStart(width, numLow);
  for (let i = start; i < start + numLow; i++) keep[i] = 1;
  return keep;
}

export function masksDiffer(a: Uint8Array, b: Uint8Array): boolean {
  if (a.length !== b.length) return true;
  for (let i = 0; i < a.length; i++) if (a[i] !== b[i]) return true;
  return false;
}
