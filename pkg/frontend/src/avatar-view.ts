/**
 * Stylized 2D eye rendering models computed from engine geometry.
 *
 * Each eye becomes an outline circle at its projected center plus an iris
 * disc whose offset direction is the screen projection (x, y components)
 * of the eye's rotated forward axis. No art assets: the calibration
 * signal is gaze direction, nothing else.
 */

import { PlaneMapping } from './plane.js';
import { StatePayload } from './protocol.js';

export interface EyeSprite {
    outline: { cx: number; cy: number; r: number };
    iris: { cx: number; cy: number; r: number };
    direction: [number, number, number];
}

export interface AvatarView {
    eyes: EyeSprite[];
    gazeMarker: { cx: number; cy: number } | null; // active fixation pixel, CSS space
}

export interface AvatarViewOptions {
    eyeRadiusCss: number;   // outline radius in CSS px
    irisTravelCss: number;  // max iris offset in CSS px
    spreadCss: number;      // CSS px per mm of eye-center spread
}

export const DEFAULT_VIEW_OPTIONS: AvatarViewOptions = {
    eyeRadiusCss: 36,
    irisTravelCss: 18,
    spreadCss: 2.0,
};

export function computeAvatarView(
    state: StatePayload,
    mapping: PlaneMapping,
    options: AvatarViewOptions = DEFAULT_VIEW_OPTIONS,
): AvatarView {
    const centerCss = mapping.toCss(state.plane_bounds[0] / 2, state.plane_bounds[1] / 2);
    const anchor = state.rig.anchor;
    const eyes: EyeSprite[] = [];
    for (let i = 0; i < state.rig.eye_centers.length; i++) {
        const c = state.rig.eye_centers[i];
        // place the outline by the eye's offset from the rig anchor
        const cx = centerCss[0] + (c[0] - anchor[0]) * options.spreadCss;
        const cy = centerCss[1] + (c[1] - anchor[1]) * options.spreadCss;
        const direction = state.eyes[i]?.direction ?? [0, 0, 1];
        eyes.push({
            outline: { cx, cy, r: options.eyeRadiusCss },
            iris: {
                cx: cx + direction[0] * options.irisTravelCss,
                cy: cy + direction[1] * options.irisTravelCss,
                r: options.eyeRadiusCss * 0.45,
            },
            direction: direction as [number, number, number],
        });
    }
    let gazeMarker: AvatarView['gazeMarker'] = null;
    if (state.fixation) {
        const [mx, my] = mapping.toCss(state.fixation.pixel[0], state.fixation.pixel[1]);
        gazeMarker = { cx: mx, cy: my };
    }
    return { eyes, gazeMarker };
}
