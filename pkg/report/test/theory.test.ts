import { describe, expect, it } from "vitest";

import { effectiveSampleFactor, theoreticalSlope } from "../src/theory.js";

describe("theoreticalSlope", () => {
  it("matches -min(delta,1)/(1+min(delta,1)) exactly at the pinned points", () => {
    // the IEEE value of the formula itself, not of the rational 3/13
    expect(theoreticalSlope(0.3)).toBe(-0.3 / 1.3);
    expect(theoreticalSlope(0.3)).toBe(-0.23076923076923075);
    expect(theoreticalSlope(1)).toBe(-0.5);
    expect(theoreticalSlope(2)).toBe(-0.5);
  });

  it("is flat past delta = 1 and continuous at the kink", () => {
    expect(theoreticalSlope(1.5)).toBe(theoreticalSlope(7));
    expect(theoreticalSlope(0.5)).toBe(-(0.5 / 1.5));
    expect(theoreticalSlope(1 - 1e-12)).toBeCloseTo(-0.5, 9);
  });

  it("rejects a nonpositive tail index", () => {
    expect(() => theoreticalSlope(0)).toThrow(RangeError);
    expect(() => theoreticalSlope(-1)).toThrow(RangeError);
  });
});

describe("effectiveSampleFactor", () => {
  it("matches (1-gamma)/(1+gamma)", () => {
    expect(effectiveSampleFactor(0)).toBe(1);
    expect(effectiveSampleFactor(0.5)).toBe(1 / 3);
    expect(effectiveSampleFactor(0.9)).toBeCloseTo(1 / 19, 12);
  });

  it("rejects gamma outside [0, 1)", () => {
    expect(() => effectiveSampleFactor(1)).toThrow(RangeError);
    expect(() => effectiveSampleFactor(-0.1)).toThrow(RangeError);
  });
});
