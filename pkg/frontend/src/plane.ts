/**
 * Affine, invertible mapping between CSS pixels of the on-screen plane
 * element and image-plane pixels of the service.
 */

export interface CssRect {
    left: number;
    top: number;
    width: number;
    height: number;
}

export class PlaneMapping {
    constructor(
        public cssRect: CssRect,
        public planeBounds: [number, number],
    ) {
        if (cssRect.width <= 0 || cssRect.height <= 0) {
            throw new Error('CSS rect must have positive size');
        }
        if (planeBounds[0] <= 0 || planeBounds[1] <= 0) {
            throw new Error('plane bounds must be positive');
        }
    }

    toPlane(cssX: number, cssY: number): [number, number] {
        const [w, h] = this.planeBounds;
        return [
            (cssX - this.cssRect.left) / this.cssRect.width * w,
            (cssY - this.cssRect.top) / this.cssRect.height * h,
        ];
    }

    toCss(u: number, v: number): [number, number] {
        const [w, h] = this.planeBounds;
        return [
            this.cssRect.left + u / w * this.cssRect.width,
            this.cssRect.top + v / h * this.cssRect.height,
        ];
    }

    inBounds(u: number, v: number): boolean {
        const [w, h] = this.planeBounds;
        return u >= 0 && u <= w && v >= 0 && v <= h;
    }

    clamp(u: number, v: number): [number, number] {
        const [w, h] = this.planeBounds;
        return [Math.min(Math.max(u, 0), w), Math.min(Math.max(v, 0), h)];
    }
}
