import { readFileSync } from 'node:fs';
import { fileURLToPath } from 'node:url';

import { describe, expect, it } from 'vitest';

import { clampToFrame, findViolations, outOfFrame, overlapFraction } from '../src/rules.js';
import type { Box, LayoutEntry, Rulebook } from '../src/types.js';

// shared-rule fixture: the engine's /rules export, committed so the client
// mirror is checked against the exact server thresholds (the e2e test
// asserts the live endpoint still matches this file)
const rules: Rulebook = JSON.parse(
  readFileSync(fileURLToPath(new URL('./fixtures/rules.json', import.meta.url)), 'utf-8'),
);

const frame = { width: 1024, height: 1024 };

const entry = (id: string, box: Box): LayoutEntry => ({ description: id, box, id });

describe('rulebook mirror', () => {
  it('fixture carries the expected thresholds', () => {
    expect(rules.overlap_max).toBe(0.25);
    expect(rules.max_area_frac).toBe(0.5);
    expect(rules.aspect_max).toBe(2);
  });

  it('clamping a dragged box always satisfies the out-of-frame rule', () => {
    const cases: Box[] = [
      [-50, 10, 300, 300],
      [900, 900, 300, 300],
      [0, 0, 2000, 500],
      [512, -80, 100, 100],
    ];
    for (const box of cases) {
      const clamped = clampToFrame(box, frame);
      expect(outOfFrame(clamped, frame)).toBe(false);
      expect(clamped[2]).toBeGreaterThan(0);
      expect(clamped[3]).toBeGreaterThan(0);
    }
  });

  it('overlap fraction uses the smaller box as denominator', () => {
    expect(overlapFraction([0, 0, 100, 100], [50, 0, 100, 100])).toBeCloseTo(0.5);
    expect(overlapFraction([0, 0, 100, 100], [200, 200, 10, 10])).toBe(0);
    expect(overlapFraction([0, 0, 100, 100], [25, 25, 50, 50])).toBe(1);
  });

  it('finds the same violation classes the validator would', () => {
    const found = findViolations(
      [
        entry('1', [0, 0, 800, 800]),
        entry('2', [600, 600, 300, 300]),
      ],
      frame,
      rules,
    );
    expect(found.some((v) => v.includes('half the frame'))).toBe(true);
    expect(found.some((v) => v.includes('overlap'))).toBe(true);
  });

  it('clean layout yields no findings', () => {
    const found = findViolations(
      [
        entry('1', [100, 212, 350, 600]),
        entry('2', [574, 212, 350, 600]),
      ],
      frame,
      rules,
    );
    expect(found).toEqual([]);
  });
});
