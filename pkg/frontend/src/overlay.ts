// Box-overlay geometry: hit testing, drag and resize with frame clamping,
// and canvas rendering. Pure functions except the render call.

import { clampToFrame } from './rules.js';
import type { Box, Frame, LayoutEntry, Rulebook } from './types.js';

export type Handle = 'move' | 'nw' | 'ne' | 'sw' | 'se';

export interface DragState {
  id: string;
  handle: Handle;
  startBox: Box;
  startX: number;
  startY: number;
}

const HANDLE_SIZE = 10;
const MIN_SIDE = 8;

export function hitTest(entries: LayoutEntry[], x: number, y: number): { id: string; handle: Handle } | null {
  // walk back to front so the most recently drawn (topmost) box wins
  for (let i = entries.length - 1; i >= 0; i--) {
    const entry = entries[i]!;
    const [bx, by, bw, bh] = entry.box;
    const corners: Array<[Handle, number, number]> = [
      ['nw', bx, by],
      ['ne', bx + bw, by],
      ['sw', bx, by + bh],
      ['se', bx + bw, by + bh],
    ];
    for (const [handle, cx, cy] of corners) {
      if (Math.abs(x - cx) <= HANDLE_SIZE && Math.abs(y - cy) <= HANDLE_SIZE) {
        return { id: entry.id, handle };
      }
    }
    if (x >= bx && x <= bx + bw && y >= by && y <= by + bh) {
      return { id: entry.id, handle: 'move' };
    }
  }
  return null;
}

/** New box for a pointer move; always clamped into the frame so an
 * out-of-frame drag can never be submitted. */
export function applyDrag(drag: DragState, x: number, y: number, frame: Frame): Box {
  const dx = x - drag.startX;
  const dy = y - drag.startY;
  let [bx, by, bw, bh] = drag.startBox;
  switch (drag.handle) {
    case 'move':
      bx += dx;
      by += dy;
      break;
    case 'se':
      bw = Math.max(bw + dx, MIN_SIDE);
      bh = Math.max(bh + dy, MIN_SIDE);
      break;
    case 'ne':
      by += Math.min(dy, bh - MIN_SIDE);
      bw = Math.max(bw + dx, MIN_SIDE);
      bh = Math.max(bh - dy, MIN_SIDE);
      break;
    case 'sw':
      bx += Math.min(dx, bw - MIN_SIDE);
      bw = Math.max(bw - dx, MIN_SIDE);
      bh = Math.max(bh + dy, MIN_SIDE);
      break;
    case 'nw':
      bx += Math.min(dx, bw - MIN_SIDE);
      by += Math.min(dy, bh - MIN_SIDE);
      bw = Math.max(bw - dx, MIN_SIDE);
      bh = Math.max(bh - dy, MIN_SIDE);
      break;
  }
  return clampToFrame([bx, by, bw, bh], frame);
}

export function sameBoxes(a: LayoutEntry[], b: LayoutEntry[]): boolean {
  if (a.length !== b.length) return false;
  return a.every((entry, i) => {
    const other = b[i]!;
    return entry.id === other.id && entry.box.every((v, j) => v === other.box[j]);
  });
}

export interface RenderOptions {
  scale: number;
  selectedId?: string | null;
}

export function renderOverlay(
  ctx: CanvasRenderingContext2D,
  entries: LayoutEntry[],
  options: RenderOptions,
): void {
  const { scale, selectedId } = options;
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  for (const entry of entries) {
    const [x, y, w, h] = entry.box.map((v) => v * scale) as unknown as Box;
    const subject = !entry.id.includes('-');
    ctx.lineWidth = entry.id === selectedId ? 3 : subject ? 2 : 1;
    ctx.strokeStyle = subject ? '#e5484d' : '#3e63dd';
    ctx.setLineDash(subject ? [] : [4, 3]);
    ctx.strokeRect(x, y, w, h);
    ctx.setLineDash([]);
    ctx.fillStyle = ctx.strokeStyle;
    ctx.font = '11px sans-serif';
    ctx.fillText(entry.id, x + 3, y + 12);
    if (entry.id === selectedId) {
      for (const [cx, cy] of [
        [x, y],
        [x + w, y],
        [x, y + h],
        [x + w, y + h],
      ]) {
        ctx.fillRect(cx! - 3, cy! - 3, 6, 6);
      }
    }
  }
}
