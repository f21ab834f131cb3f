import { describe, expect, it } from 'vitest';

import { PlaneMapping } from '../src/plane.js';

const mapping = new PlaneMapping(
    { left: 12, top: 34, width: 720, height: 540 },
    [1440, 1080],
);

describe('PlaneMapping', () => {
    it('round-trips CSS -> plane -> CSS within 0.5 px across the plane', () => {
        for (let u = 0; u <= 1440; u += 45) {
            for (let v = 0; v <= 1080; v += 45) {
                const [cx, cy] = mapping.toCss(u, v);
                const [u2, v2] = mapping.toPlane(cx, cy);
                expect(Math.hypot(u2 - u, v2 - v)).toBeLessThan(0.5);
            }
        }
    });

    it('maps plane corners to CSS rect corners', () => {
        expect(mapping.toCss(0, 0)).toEqual([12, 34]);
        expect(mapping.toCss(1440, 1080)).toEqual([12 + 720, 34 + 540]);
    });

    it('maps the CSS rect center to the plane center', () => {
        const [u, v] = mapping.toPlane(12 + 360, 34 + 270);
        expect(u).toBeCloseTo(720, 9);
        expect(v).toBeCloseTo(540, 9);
    });

    it('reports bounds and clamps', () => {
        expect(mapping.inBounds(720, 540)).toBe(true);
        expect(mapping.inBounds(-1, 540)).toBe(false);
        expect(mapping.clamp(-50, 2000)).toEqual([0, 1080]);
    });

    it('rejects degenerate rects', () => {
        expect(() => new PlaneMapping(
            { left: 0, top: 0, width: 0, height: 10 }, [100, 100],
        )).toThrow();
    });
});
