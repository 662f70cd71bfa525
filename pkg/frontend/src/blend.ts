/**
 * Client-side pixel compositing for the blend view (view 3).
 *
 * Works on plain RGBA buffers so the math is testable without a canvas;
 * the app wraps the result in ImageData for drawing.
 */

export interface PixelBuffer {
  width: number;
  height: number;
  /** RGBA, row-major, length = width * height * 4 */
  data: Uint8ClampedArray;
}

export function blendPixels(
  ref: PixelBuffer,
  warped: PixelBuffer,
  alpha: number
): PixelBuffer {
  if (ref.width !== warped.width || ref.height !== warped.height) {
    throw new Error(
      `dimension mismatch: ${ref.width}x${ref.height} vs ${warped.width}x${warped.height}`
    );
  }
  if (!(alpha >= 0 && alpha <= 1)) {
    throw new Error(`alpha ${alpha} outside [0, 1]`);
  }
  const n = ref.width * ref.height * 4;
  const out = new Uint8ClampedArray(n);
  const a = ref.data;
  const b = warped.data;
  for (let i = 0; i < n; i += 4) {
    out[i] = Math.round((1 - alpha) * a[i] + alpha * b[i]);
    out[i + 1] = Math.round((1 - alpha) * a[i + 1] + alpha * b[i + 1]);
    out[i + 2] = Math.round((1 - alpha) * a[i + 2] + alpha * b[i + 2]);
    out[i + 3] = 255;
  }
  return { width: ref.width, height: ref.height, data: out };
}
