/**
 * Live target mode: the pointer drives the avatar's fixation.
 *
 * Pointer samples are mapped to plane pixels and sent as fixation
 * commands, rate-limited with trailing-edge coalescing: at most maxHz
 * messages per second, always ending on the newest sample; stale samples
 * in between are dropped. With a correction model active the commands are
 * pre-corrected client-side, so what goes on the wire differs from the
 * raw pointer by the model's offset.
 */

import { CorrectionModel, applyCorrection } from './correction.js';
import { ProtocolClient } from './protocol.js';

export interface LiveModeOptions {
    maxHz: number;
    now?: () => number;
    schedule?: (cb: () => void, ms: number) => unknown;
}

export class LiveTargetMode {
    model: CorrectionModel | null = null;
    sentCount = 0;
    droppedCount = 0;

    private lastSent = -Infinity;
    private pendingSample: [number, number] | null = null;
    private timerActive = false;
    private readonly intervalMs: number;
    private readonly now: () => number;
    private readonly schedule: (cb: () => void, ms: number) => unknown;

    constructor(
        private client: ProtocolClient,
        options: Partial<LiveModeOptions> = {},
    ) {
        const maxHz = options.maxHz ?? 30;
        this.intervalMs = 1000 / maxHz;
        this.now = options.now ?? (() => Date.now());
        this.schedule = options.schedule
            ?? ((cb, ms) => setTimeout(cb, ms));
    }

    setModel(model: CorrectionModel | null): void {
        this.model = model;
    }

    /** Feed one pointer position in plane pixels. */
    pointerSample(u: number, v: number): void {
        const t = this.now();
        if (t - this.lastSent >= this.intervalMs && !this.timerActive) {
            this.send([u, v], t);
            return;
        }
        if (this.pendingSample !== null) this.droppedCount += 1;
        this.pendingSample = [u, v];
        if (!this.timerActive) {
            this.timerActive = true;
            const wait = Math.max(0, this.lastSent + this.intervalMs - t);
            this.schedule(() => this.flush(), wait);
        }
    }

    private flush(): void {
        this.timerActive = false;
        if (this.pendingSample === null) return;
        const sample = this.pendingSample;
        this.pendingSample = null;
        this.send(sample, this.now());
    }

    private send(sample: [number, number], t: number): void {
        this.lastSent = t;
        this.sentCount += 1;
        const pixel = this.model ? applyCorrection(this.model, sample) : sample;
        // correct: false -- correction already happened here
        this.client.request('set_fixation_pixel', { pixel, correct: false })
            .catch(() => undefined); // stale failures must not break the loop
    }
}
