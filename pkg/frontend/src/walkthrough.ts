/**
 * Calibration walkthrough: the avatar fixates each grid point in turn,
 * the operator clicks where they perceive eye contact, and each click
 * becomes exactly one recorded pair. Ends with a fit and a residual
 * overlay. Survives disconnects: progress is recovered from the service's
 * pair count, so resuming never duplicates pairs.
 */

import { CorrectionModel, applyCorrection } from './correction.js';
import { ProtocolClient } from './protocol.js';

export interface GridSpec {
    nx: number;
    ny: number;
    /** fraction of the plane covered, centered (0.8 = central 80%) */
    coverage: number;
}

export const DEFAULT_GRID: GridSpec = { nx: 3, ny: 3, coverage: 0.8 };

export type WalkthroughPhase =
    | 'idle'
    | 'awaiting-click'
    | 'recording'
    | 'ready-to-fit'
    | 'fitting'
    | 'done';

export interface ResidualEntry {
    commanded: [number, number];
    perceived: [number, number];
    preResidual: number;
    postResidual: number;
}

export function gridPoints(spec: GridSpec, bounds: [number, number]): [number, number][] {
    const [w, h] = bounds;
    const margin = (1 - spec.coverage) / 2;
    const points: [number, number][] = [];
    for (let row = 0; row < spec.ny; row++) {
        for (let col = 0; col < spec.nx; col++) {
            const fu = spec.nx === 1 ? 0.5 : margin + (col / (spec.nx - 1)) * spec.coverage;
            const fv = spec.ny === 1 ? 0.5 : margin + (row / (spec.ny - 1)) * spec.coverage;
            points.push([fu * w, fv * h]);
        }
    }
    return points;
}

export class CalibrationWalkthrough {
    phase: WalkthroughPhase = 'idle';
    points: [number, number][] = [];
    index = 0;
    pairs: { commanded: [number, number]; perceived: [number, number] }[] = [];
    model: CorrectionModel | null = null;
    residuals: ResidualEntry[] = [];
    observer: string;

    private basePairCount = 0;

    constructor(
        private client: ProtocolClient,
        private spec: GridSpec = DEFAULT_GRID,
        observer = 'operator',
    ) {
        this.observer = observer;
    }

    /** Starts (or restarts) the walkthrough against the current service state. */
    async start(): Promise<void> {
        const state = await this.client.getState();
        this.points = gridPoints(this.spec, state.plane_bounds);
        this.basePairCount = state.pair_count;
        this.index = 0;
        this.pairs = [];
        this.model = null;
        this.residuals = [];
        await this.fixateCurrent();
    }

    /**
     * Re-attaches after a reconnect. The service's pair count tells how
     * many of our grid points were already confirmed, so replaying a
     * half-finished walkthrough cannot double-record.
     */
    async resume(client: ProtocolClient): Promise<void> {
        this.client = client;
        const state = await this.client.getState();
        const confirmed = state.pair_count - this.basePairCount;
        this.index = Math.max(0, Math.min(confirmed, this.points.length));
        this.pairs = this.pairs.slice(0, this.index);
        if (this.index >= this.points.length) {
            this.phase = 'ready-to-fit';
        } else {
            await this.fixateCurrent();
        }
    }

    private async fixateCurrent(): Promise<void> {
        const commanded = this.points[this.index];
        await this.client.request('set_fixation_pixel',
            { pixel: commanded, correct: false });
        this.phase = 'awaiting-click';
    }

    get currentPoint(): [number, number] | null {
        return this.phase === 'awaiting-click' ? this.points[this.index] : null;
    }

    /**
     * One operator click -> exactly one recorded pair. Clicks outside the
     * awaiting phase are ignored (double-clicks cannot double-record).
     */
    async handleClick(perceived: [number, number]): Promise<boolean> {
        if (this.phase !== 'awaiting-click') return false;
        this.phase = 'recording';
        const commanded = this.points[this.index];
        try {
            await this.client.request('record_pair', {
                commanded,
                perceived,
                observer: this.observer,
            });
        } catch (err) {
            // disconnected mid-flight: resume() re-syncs from pair_count
            this.phase = 'awaiting-click';
            throw err;
        }
        this.pairs.push({ commanded, perceived });
        this.index += 1;
        if (this.index >= this.points.length) {
            this.phase = 'ready-to-fit';
        } else {
            await this.fixateCurrent();
        }
        return true;
    }

    /** Fits the correction and computes the pre/post residual overlay. */
    async fit(): Promise<CorrectionModel> {
        if (this.phase !== 'ready-to-fit') {
            throw new Error(`cannot fit in phase ${this.phase}`);
        }
        this.phase = 'fitting';
        const reply = await this.client.request('fit_calibration', {});
        this.model = reply.payload.model as CorrectionModel;
        this.residuals = this.pairs.map(({ commanded, perceived }) => {
            const corrected = applyCorrection(this.model!, perceived);
            return {
                commanded,
                perceived,
                preResidual: Math.hypot(perceived[0] - commanded[0],
                    perceived[1] - commanded[1]),
                postResidual: Math.hypot(corrected[0] - commanded[0],
                    corrected[1] - commanded[1]),
            };
        });
        this.phase = 'done';
        return this.model;
    }

    get maxPostResidual(): number {
        return this.residuals.reduce((m, r) => Math.max(m, r.postResidual), 0);
    }
}
