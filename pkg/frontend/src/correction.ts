/**
 * Client-side evaluation of a fitted correction model.
 *
 * The model is the JSON produced by fit_calibration: monomial exponent
 * pairs with one coefficient per term per axis. Evaluating at an intended
 * plane pixel yields the pixel to command so the observer perceives the
 * intended one.
 */

export interface CorrectionModel {
    avatar_id: string;
    degree: number;
    terms: [number, number][];
    coef_u: number[];
    coef_v: number[];
    fit_stats: { pre_rms: number; post_rms: number; n_pairs: number };
    training_hull?: [number, number][];
}

export function applyCorrection(
    model: CorrectionModel,
    intended: [number, number],
): [number, number] {
    const [u, v] = intended;
    let cu = 0;
    let cv = 0;
    for (let k = 0; k < model.terms.length; k++) {
        const [i, j] = model.terms[k];
        const feature = Math.pow(u, i) * Math.pow(v, j);
        cu += model.coef_u[k] * feature;
        cv += model.coef_v[k] * feature;
    }
    return [cu, cv];
}
