import { describe, expect, it } from 'vitest';

import { CorrectionModel, applyCorrection } from '../src/correction.js';

function offsetModel(du: number): CorrectionModel {
    // command = intended - du: constant and linear terms only
    return {
        avatar_id: 'test',
        degree: 1,
        terms: [[0, 0], [1, 0], [0, 1]],
        coef_u: [-du, 1, 0],
        coef_v: [0, 0, 1],
        fit_stats: { pre_rms: du, post_rms: 0, n_pairs: 9 },
    };
}

describe('applyCorrection', () => {
    it('evaluates a +10 px offset model as -10 px in u', () => {
        const [u, v] = applyCorrection(offsetModel(10), [150, 180]);
        expect(u).toBeCloseTo(140, 9);
        expect(v).toBeCloseTo(180, 9);
    });

    it('identity model returns the input', () => {
        const identity: CorrectionModel = {
            avatar_id: 'id',
            degree: 1,
            terms: [[1, 0], [0, 1]],
            coef_u: [1, 0],
            coef_v: [0, 1],
            fit_stats: { pre_rms: 0, post_rms: 0, n_pairs: 9 },
        };
        expect(applyCorrection(identity, [321, 123])).toEqual([321, 123]);
    });

    it('evaluates mixed monomials', () => {
        const model: CorrectionModel = {
            avatar_id: 'm',
            degree: 2,
            terms: [[1, 1], [2, 0]],
            coef_u: [0.5, 0],
            coef_v: [0, 0.25],
            fit_stats: { pre_rms: 0, post_rms: 0, n_pairs: 9 },
        };
        const [u, v] = applyCorrection(model, [4, 3]);
        expect(u).toBeCloseTo(0.5 * 4 * 3, 12);
        expect(v).toBeCloseTo(0.25 * 16, 12);
    });
});
