import { describe, expect, it } from "vitest";

import { blendPixels, type PixelBuffer } from "./blend";

function buffer(width: number, height: number, fill: (i: number) => number): PixelBuffer {
  const data = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < data.length; i++) {
    data[i] = i % 4 === 3 ? 255 : fill(i);
  }
  return { width, height, data };
}

describe("blendPixels", () => {
  const ref = buffer(8, 6, (i) => (i * 37) % 256);
  const mov = buffer(8, 6, (i) => (i * 91 + 13) % 256);

  it("alpha 0 reproduces the reference exactly", () => {
    const out = blendPixels(ref, mov, 0);
    expect(Array.from(out.data)).toEqual(Array.from(ref.data));
  });

  it("alpha 1 reproduces the warped image exactly", () => {
    const out = blendPixels(ref, mov, 1);
    expect(Array.from(out.data)).toEqual(Array.from(mov.data));
  });

  it("alpha 0.5 averages channel values", () => {
    const a = buffer(2, 2, () => 100);
    const b = buffer(2, 2, () => 200);
    const out = blendPixels(a, b, 0.5);
    for (let i = 0; i < out.data.length; i += 4) {
      expect(out.data[i]).toBe(150);
    }
  });

  it("output alpha channel stays opaque", () => {
    const out = blendPixels(ref, mov, 0.3);
    for (let i = 3; i < out.data.length; i += 4) expect(out.data[i]).toBe(255);
  });

  it("rejects mismatched dimensions", () => {
    const small = buffer(4, 6, () => 0);
    expect(() => blendPixels(ref, small, 0.5)).toThrow(/dimension mismatch/);
  });

  it("rejects out-of-range alpha", () => {
    expect(() => blendPixels(ref, mov, 1.5)).toThrow(/alpha/);
    expect(() => blendPixels(ref, mov, -0.1)).toThrow(/alpha/);
  });
});
