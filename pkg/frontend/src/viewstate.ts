/**
 * Pure view-state math for the four synchronized image views.
 *
 * A ViewState maps image coordinates to viewport pixels:
 *   screen = (imagePt - center) * zoom + viewport / 2
 * so `center` is the image point shown at the viewport middle and
 * `zoom` is screen pixels per image pixel.
 */

export interface Point {
  x: number;
  y: number;
}

export interface ViewState {
  zoom: number;
  center: Point;
}

export interface Size {
  width: number;
  height: number;
}

export const MIN_ZOOM = 1 / 64;
export const MAX_ZOOM = 64;

export function clampZoom(zoom: number): number {
  return Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, zoom));
}

export function imageToScreen(state: ViewState, pt: Point, viewport: Size): Point {
  return {
    x: (pt.x - state.center.x) * state.zoom + viewport.width / 2,
    y: (pt.y - state.center.y) * state.zoom + viewport.height / 2,
  };
}

export function screenToImage(state: ViewState, pt: Point, viewport: Size): Point {
  return {
    x: state.center.x + (pt.x - viewport.width / 2) / state.zoom,
    y: state.center.y + (pt.y - viewport.height / 2) / state.zoom,
  };
}

/**
 * Zoom by `factor` keeping the image point under `cursor` fixed on
 * screen. Exact up to the zoom clamp: the anchor point is re-projected
 * with the clamped zoom, so it stays under the cursor either way.
 */
export function zoomAt(
  state: ViewState,
  cursor: Point,
  factor: number,
  viewport: Size
): ViewState {
  const anchor = screenToImage(state, cursor, viewport);
  const zoom = clampZoom(state.zoom * factor);
  return {
    zoom,
    center: {
      x: anchor.x - (cursor.x - viewport.width / 2) / zoom,
      y: anchor.y - (cursor.y - viewport.height / 2) / zoom,
    },
  };
}

/** Shift the view by a screen-space delta (drag or arrow keys). */
export function pan(state: ViewState, dxScreen: number, dyScreen: number): ViewState {
  return {
    zoom: state.zoom,
    center: {
      x: state.center.x + dxScreen / state.zoom,
      y: state.center.y + dyScreen / state.zoom,
    },
  };
}

/** Fit the whole image into the viewport, aspect preserved, centered. */
export function fitToView(image: Size, viewport: Size): ViewState {
  const zoom = clampZoom(
    Math.min(viewport.width / image.width, viewport.height / image.height)
  );
  return {
    zoom,
    center: { x: image.width / 2, y: image.height / 2 },
  };
}

export function statesEqual(a: ViewState, b: ViewState, tol = 1e-9): boolean {
  return (
    Math.abs(a.zoom - b.zoom) <= tol &&
    Math.abs(a.center.x - b.center.x) <= tol &&
    Math.abs(a.center.y - b.center.y) <= tol
  );
}

export type ViewOp = (state: ViewState) => ViewState;

/**
 * Holds the four view states and the sync flag. With sync on, any
 * interaction applies to every view, keeping the states equal; turning
 * sync on equalizes the group to the interacted (or first) view.
 */
export class SyncGroup {
  states: ViewState[];
  synced = false;

  constructor(n = 4, initial?: ViewState) {
    const base = initial ?? { zoom: 1, center: { x: 0, y: 0 } };
    this.states = Array.from({ length: n }, () => ({
      zoom: base.zoom,
      center: { ...base.center },
    }));
  }

  setSync(on: boolean, basisIndex = 0): void {
    this.synced = on;
    if (on) {
      const basis = this.states[basisIndex];
      this.states = this.states.map(() => ({
        zoom: basis.zoom,
        center: { ...basis.center },
      }));
    }
  }

  apply(viewIndex: number, op: ViewOp): void {
    if (this.synced) {
      this.states = this.states.map((s) => op(s));
    } else {
      this.states[viewIndex] = op(this.states[viewIndex]);
    }
  }

  get(viewIndex: number): ViewState {
    return this.states[viewIndex];
  }

  allEqual(tol = 1e-9): boolean {
    return this.states.every((s) => statesEqual(s, this.states[0], tol));
  }
}
