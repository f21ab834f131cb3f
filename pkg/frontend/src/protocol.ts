/**
 * Wire protocol client for the gazekit session service.
 *
 * One JSON object per line over any duplex transport. Requests are
 * answered exactly once; accepted mutations additionally broadcast a
 * state_update carrying the revision they produced. The client keeps the
 * latest state snapshot so the UI can render as a pure function of
 * (revision, pending local input).
 */

export interface Transport {
    send(line: string): void;
    onLine(cb: (line: string) => void): void;
    onClose(cb: () => void): void;
    close(): void;
}

export interface FixationState {
    pixel: [number, number];
    direction: [number, number, number];
    distance_mm: number;
    target_mm: [number, number, number];
}

export interface EyeState {
    quaternion_wxyz: [number, number, number, number];
    direction: [number, number, number];
}

export interface StatePayload {
    revision: number;
    fixation: FixationState | null;
    eyes: EyeState[];
    recognized_gaze: [number, number, number] | null;
    violations: { eye: number; axis: string; angle: number; limit: number }[];
    model_active: boolean;
    pair_count: number;
    plane_bounds: [number, number];
    rig: {
        eye_centers: [number, number, number][];
        anchor: [number, number, number];
        weights: number[];
    };
}

export interface WireReply {
    type: string;
    id: number | null;
    ok?: boolean;
    revision?: number;
    payload?: any;
    code?: string;
    message?: string;
}

/** Splits a byte stream into newline-delimited frames. */
export class LineBuffer {
    private partial = '';

    feed(chunk: string): string[] {
        this.partial += chunk;
        const parts = this.partial.split('\n');
        this.partial = parts.pop() ?? '';
        return parts.filter((p) => p.trim().length > 0);
    }
}

export class ProtocolError extends Error {
    constructor(public code: string, message: string) {
        super(message);
    }
}

export class ProtocolClient {
    private nextId = 1;
    private pending = new Map<number, {
        resolve: (r: WireReply) => void;
        reject: (e: Error) => void;
    }>();
    private stateListeners: ((state: StatePayload) => void)[] = [];
    private closeListeners: (() => void)[] = [];

    /** Latest broadcast snapshot; render from this and nothing else. */
    latestState: StatePayload | null = null;

    constructor(private transport: Transport) {
        transport.onLine((line) => this.dispatch(line));
        transport.onClose(() => {
            const err = new Error('connection closed');
            for (const entry of this.pending.values()) entry.reject(err);
            this.pending.clear();
            for (const cb of this.closeListeners) cb();
        });
    }

    private dispatch(line: string): void {
        let message: WireReply;
        try {
            message = JSON.parse(line);
        } catch {
            return; // not our frame; ignore rather than crash the UI
        }
        if (message.type === 'state_update') {
            const state = message.payload as StatePayload;
            if (!this.latestState || state.revision >= this.latestState.revision) {
                this.latestState = state;
                for (const cb of this.stateListeners) cb(state);
            }
            return;
        }
        if (message.id != null && this.pending.has(message.id as number)) {
            const entry = this.pending.get(message.id as number)!;
            this.pending.delete(message.id as number);
            if (message.type === 'error') {
                entry.reject(new ProtocolError(message.code ?? 'error',
                    message.message ?? 'request failed'));
            } else {
                entry.resolve(message);
            }
        }
    }

    request(type: string, payload: Record<string, unknown> = {}): Promise<WireReply> {
        const id = this.nextId++;
        const line = JSON.stringify({ type, id, payload });
        return new Promise((resolve, reject) => {
            this.pending.set(id, { resolve, reject });
            try {
                this.transport.send(line + '\n');
            } catch (err) {
                this.pending.delete(id);
                reject(err as Error);
            }
        });
    }

    onStateUpdate(cb: (state: StatePayload) => void): void {
        this.stateListeners.push(cb);
    }

    onClose(cb: () => void): void {
        this.closeListeners.push(cb);
    }

    async getState(): Promise<StatePayload> {
        const reply = await this.request('get_state');
        this.latestState = reply.payload as StatePayload;
        return this.latestState;
    }

    close(): void {
        this.transport.close();
    }
}
