// Client-side mirror of the layout rulebook, fed by GET /rules, so users see
// violations while dragging instead of after a rejected submit.

import type { Box, Frame, LayoutEntry, Rulebook } from './types.js';

export function boxArea(box: Box): number {
  return box[2] * box[3];
}

export function clampToFrame(box: Box, frame: Frame): Box {
  let [x, y, w, h] = box;
  if (w > frame.width || h > frame.height) {
    const s = Math.min(frame.width / w, frame.height / h);
    w *= s;
    h *= s;
  }
  x = Math.min(Math.max(x, 0), frame.width - w);
  y = Math.min(Math.max(y, 0), frame.height - h);
  return [x, y, w, h];
}

export function outOfFrame(box: Box, frame: Frame): boolean {
  const [x, y, w, h] = box;
  return x < 0 || y < 0 || x + w > frame.width || y + h > frame.height;
}

export function overlapFraction(a: Box, b: Box): number {
  const w = Math.min(a[0] + a[2], b[0] + b[2]) - Math.max(a[0], b[0]);
  const h = Math.min(a[1] + a[3], b[1] + b[3]) - Math.max(a[1], b[1]);
  if (w <= 0 || h <= 0) return 0;
  return (w * h) / Math.min(boxArea(a), boxArea(b));
}

const isSubject = (entry: LayoutEntry): boolean => !entry.id.includes('-');

/** Human-readable rule findings for one candidate layout; advisory only,
 * the engine's validator remains the authority on submit. */
export function findViolations(entries: LayoutEntry[], frame: Frame, rules: Rulebook): string[] {
  const found: string[] = [];
  const frameArea = frame.width * frame.height;
  const subjects = entries.filter(isSubject);
  for (const entry of subjects) {
    const area = boxArea(entry.box);
    if (area > rules.max_area_frac * frameArea) {
      found.push(`${entry.id}: larger than half the frame`);
    }
    if (area < rules.min_area_frac * frameArea) {
      found.push(`${entry.id}: smaller than 1/25 of the frame`);
    }
    const [, , w, h] = entry.box;
    if (Math.max(w, h) > rules.aspect_max * Math.min(w, h)) {
      found.push(`${entry.id}: one side exceeds twice the other`);
    }
    if (outOfFrame(entry.box, frame)) {
      found.push(`${entry.id}: outside the frame`);
    }
  }
  for (let i = 0; i < subjects.length; i++) {
    for (let j = i + 1; j < subjects.length; j++) {
      const a = subjects[i]!;
      const b = subjects[j]!;
      const frac = overlapFraction(a.box, b.box);
      if (frac > rules.overlap_max) {
        found.push(`${a.id}+${b.id}: overlap ${(frac * 100).toFixed(0)}%`);
      }
    }
  }
  if (subjects.length >= 2) {
    const areas = subjects.map((s) => boxArea(s.box));
    const largest = Math.max(...areas);
    for (let i = 0; i < subjects.length; i++) {
      if (areas[i]! * rules.size_spread < largest) {
        found.push(`${subjects[i]!.id}: under 1/6 of the largest subject`);
      }
    }
  }
  return found;
}
