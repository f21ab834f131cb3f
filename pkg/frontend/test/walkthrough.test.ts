/**
 * Walkthrough integration against a live gazekit service.
 *
 * Spawns `gazekit serve` (the real Python process), connects over TCP,
 * and plays a scripted operator whose clicks land 30 px right of every
 * commanded point. The walkthrough must log exactly one pair per click
 * and the fitted model must flatten the overlay residual below 1 px.
 */

import { ChildProcess, spawn } from 'node:child_process';
import { mkdtempSync, readFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ProtocolClient } from '../src/protocol.js';
import { connectTcp } from '../src/transport-node.js';
import { CalibrationWalkthrough, gridPoints } from '../src/walkthrough.js';

let server: ChildProcess;
let port: number;
let sessionDir: string;

function startServer(): Promise<number> {
    return new Promise((resolve, reject) => {
        sessionDir = mkdtempSync(join(tmpdir(), 'gazekit-ui-test-'));
        server = spawn('gazekit', ['serve', '--port', '0', '--session-dir', sessionDir],
            { stdio: ['ignore', 'ignore', 'pipe'] });
        let banner = '';
        server.stderr!.on('data', (chunk: Buffer) => {
            banner += chunk.toString();
            const match = banner.match(/serving on [^:]+:(\d+)/);
            if (match) resolve(Number(match[1]));
        });
        server.once('error', reject);
        server.once('exit', (code) => reject(new Error(`server exited: ${code}`)));
        setTimeout(() => reject(new Error(`server never announced: ${banner}`)), 15000);
    });
}

async function connect(): Promise<ProtocolClient> {
    return new ProtocolClient(await connectTcp('127.0.0.1', port));
}

beforeAll(async () => {
    port = await startServer();
}, 20000);

afterAll(() => {
    server.kill();
});

describe('grid generation', () => {
    it('defaults to 3x3 over the central 80%', () => {
        const pts = gridPoints({ nx: 3, ny: 3, coverage: 0.8 }, [1440, 1080]);
        expect(pts).toHaveLength(9);
        expect(pts[0][0]).toBeCloseTo(144, 9);
        expect(pts[0][1]).toBeCloseTo(108, 9);
        expect(pts[8][0]).toBeCloseTo(1296, 9);
        expect(pts[8][1]).toBeCloseTo(972, 9);
        expect(pts[4]).toEqual([720, 540]);
    });
});

describe('calibration walkthrough against the live service', () => {
    it('scripted +30 px operator: 9 pairs, post-fit residual < 1 px', async () => {
        const client = await connect();
        const before = (await client.getState()).pair_count;
        const walkthrough = new CalibrationWalkthrough(
            client, { nx: 3, ny: 3, coverage: 0.8 }, 'synthetic');
        await walkthrough.start();

        let clicks = 0;
        while (walkthrough.phase === 'awaiting-click') {
            const target = walkthrough.currentPoint!;
            // the synthetic operator perceives the gaze 30 px to the right
            const recorded = await walkthrough.handleClick([target[0] + 30, target[1]]);
            expect(recorded).toBe(true);
            clicks += 1;
        }
        expect(clicks).toBe(9);
        expect(walkthrough.phase).toBe('ready-to-fit');

        // exactly one logged pair per click, in the service and on disk
        const state = await client.getState();
        expect(state.pair_count - before).toBe(9);
        const logged = readFileSync(join(sessionDir, 'pairs.jsonl'), 'utf-8')
            .trim().split('\n');
        expect(logged).toHaveLength(state.pair_count);

        const model = await walkthrough.fit();
        expect(model.fit_stats.post_rms).toBeLessThan(1);
        expect(walkthrough.residuals).toHaveLength(9);
        for (const r of walkthrough.residuals) {
            expect(r.preResidual).toBeCloseTo(30, 6);
            expect(r.postResidual).toBeLessThan(1);
        }
        expect(walkthrough.maxPostResidual).toBeLessThan(1);
        client.close();
    }, 20000);

    it('ignores clicks while no point is awaited', async () => {
        const client = await connect();
        const walkthrough = new CalibrationWalkthrough(client);
        expect(await walkthrough.handleClick([10, 10])).toBe(false);
        client.close();
    });

    it('resumes after a disconnect without duplicating pairs', async () => {
        const client = await connect();
        const before = (await client.getState()).pair_count;
        const walkthrough = new CalibrationWalkthrough(
            client, { nx: 3, ny: 3, coverage: 0.8 }, 'reconnecting');
        await walkthrough.start();

        for (let i = 0; i < 4; i++) {
            const target = walkthrough.currentPoint!;
            await walkthrough.handleClick([target[0] + 30, target[1]]);
        }
        client.close(); // the operator's browser drops mid-walkthrough

        const client2 = await connect();
        await walkthrough.resume(client2);
        expect(walkthrough.index).toBe(4); // picks up where it left off
        while (walkthrough.phase === 'awaiting-click') {
            const target = walkthrough.currentPoint!;
            await walkthrough.handleClick([target[0] + 30, target[1]]);
        }
        const state = await client2.getState();
        expect(state.pair_count - before).toBe(9); // no duplicates
        client2.close();
    }, 20000);
});
