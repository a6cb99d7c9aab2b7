// Reference rates shared by the figure overlays. Must stay numerically
// identical to the Python side's schedule rule: only the first moment
// order past variance is usable, so the exponent caps at delta = 1.

export function theoreticalSlope(delta: number): number {
  if (!(delta > 0)) throw new RangeError(`delta must be > 0, got ${delta}`);
  const de = Math.min(delta, 1);
  return -de / (1 + de);
}

export function effectiveSampleFactor(gamma: number): number {
  if (!(gamma >= 0 && gamma < 1)) {
    throw new RangeError(`gamma must be in [0, 1), got ${gamma}`);
  }
  return (1 - gamma) / (1 + gamma);
}
