/**
 * One image view: a canvas that renders its image under a ViewState and
 * forwards wheel/drag interactions to the owning SyncGroup.
 */

import type { PixelBuffer } from "./blend";
import {
  SyncGroup,
  fitToView,
  pan,
  zoomAt,
  type Size,
  type ViewState,
} from "./viewstate";

const WHEEL_STEP = 1.2;
const ARROW_STEP = 50;

export class ImageView {
  readonly canvas: HTMLCanvasElement;
  private ctx: CanvasRenderingContext2D;
  private image: HTMLImageElement | null = null;
  private overlay: ImageData | null = null;
  private dragging = false;
  private lastPointer = { x: 0, y: 0 };

  constructor(
    readonly index: number,
    private group: SyncGroup,
    private onChange: () => void,
    private handMode: () => boolean
  ) {
    this.canvas = document.createElement("canvas");
    this.canvas.className = "view-canvas";
    this.canvas.tabIndex = 0;
    const ctx = this.canvas.getContext("2d");
    if (!ctx) throw new Error("no 2d context");
    this.ctx = ctx;
    this.bindEvents();
  }

  private viewport(): Size {
    return { width: this.canvas.width, height: this.canvas.height };
  }

  imageSize(): Size | null {
    if (this.overlay) return { width: this.overlay.width, height: this.overlay.height };
    if (this.image) {
      return { width: this.image.naturalWidth, height: this.image.naturalHeight };
    }
    return null;
  }

  setImageUrl(url: string, onLoaded?: () => void): void {
    const img = new Image();
    img.onload = () => {
      this.image = img;
      this.overlay = null;
      onLoaded?.();
      this.render();
    };
    img.src = url;
  }

  /** Direct pixel content (client-side blend result). */
  setPixels(buf: PixelBuffer): void {
    this.image = null;
    const copy = new Uint8ClampedArray(buf.data);
    this.overlay = new ImageData(copy, buf.width, buf.height);
    this.render();
  }

  clear(): void {
    this.image = null;
    this.overlay = null;
    this.render();
  }

  fit(): void {
    const size = this.imageSize();
    if (!size) return;
    this.group.apply(this.index, () => fitToView(size, this.viewport()));
    this.onChange();
  }

  resize(width: number, height: number): void {
    this.canvas.width = width;
    this.canvas.height = height;
    this.render();
  }

  render(): void {
    const state = this.group.get(this.index);
    const { width, height } = this.canvas;
    this.ctx.setTransform(1, 0, 0, 1, 0, 0);
    this.ctx.fillStyle = "#181818";
    this.ctx.fillRect(0, 0, width, height);
    if (this.image) {
      this.ctx.imageSmoothingEnabled = state.zoom < 4;
      this.ctx.setTransform(
        state.zoom, 0, 0, state.zoom,
        width / 2 - state.center.x * state.zoom,
        height / 2 - state.center.y * state.zoom
      );
      this.ctx.drawImage(this.image, 0, 0);
    } else if (this.overlay) {
      const off = document.createElement("canvas");
      off.width = this.overlay.width;
      off.height = this.overlay.height;
      off.getContext("2d")!.putImageData(this.overlay, 0, 0);
      this.ctx.imageSmoothingEnabled = state.zoom < 4;
      this.ctx.setTransform(
        state.zoom, 0, 0, state.zoom,
        width / 2 - state.center.x * state.zoom,
        height / 2 - state.center.y * state.zoom
      );
      this.ctx.drawImage(off, 0, 0);
    }
  }

  private pointerPos(ev: MouseEvent): { x: number; y: number } {
    const rect = this.canvas.getBoundingClientRect();
    return { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
  }

  private bindEvents(): void {
    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const factor = ev.deltaY < 0 ? WHEEL_STEP : 1 / WHEEL_STEP;
      const cursor = this.pointerPos(ev);
      const vp = this.viewport();
      this.group.apply(this.index, (s: ViewState) => zoomAt(s, cursor, factor, vp));
      this.onChange();
    });

    this.canvas.addEventListener("mousedown", (ev) => {
      if (!this.handMode()) return;
      this.dragging = true;
      this.lastPointer = this.pointerPos(ev);
      this.canvas.classList.add("dragging");
    });
    window.addEventListener("mousemove", (ev) => {
      if (!this.dragging) return;
      const pos = this.pointerPos(ev);
      const dx = this.lastPointer.x - pos.x;
      const dy = this.lastPointer.y - pos.y;
      this.lastPointer = pos;
      this.group.apply(this.index, (s) => pan(s, dx, dy));
      this.onChange();
    });
    window.addEventListener("mouseup", () => {
      this.dragging = false;
      this.canvas.classList.remove("dragging");
    });

    this.canvas.addEventListener("keydown", (ev) => {
      const steps: Record<string, [number, number]> = {
        ArrowLeft: [-ARROW_STEP, 0],
        ArrowRight: [ARROW_STEP, 0],
        ArrowUp: [0, -ARROW_STEP],
        ArrowDown: [0, ARROW_STEP],
      };
      const step = steps[ev.key];
      if (!step) return;
      ev.preventDefault();
      this.group.apply(this.index, (s) => pan(s, step[0], step[1]));
      this.onChange();
    });
  }
}
