/**
 * Browser entry point: canvas rendering and DOM wiring.
 *
 * Connects to the service through a WebSocket bridge (see
 * transport-ws.ts), renders the avatar's eyes from state updates, and
 * drives the calibration walkthrough and live target mode from clicks
 * and pointer movement.
 */

import { computeAvatarView } from './avatar-view.js';
import { PlaneMapping } from './plane.js';
import { ProtocolClient, StatePayload } from './protocol.js';
import { connectWebSocket } from './transport-ws.js';
import { CalibrationWalkthrough, DEFAULT_GRID } from './walkthrough.js';
import { LiveTargetMode } from './live-mode.js';

const WS_URL = new URLSearchParams(location.search).get('ws')
    ?? 'ws://127.0.0.1:8766';

function element<T extends HTMLElement>(id: string): T {
    const el = document.getElementById(id);
    if (!el) throw new Error(`missing #${id}`);
    return el as T;
}

async function boot(): Promise<void> {
    const canvas = element<HTMLCanvasElement>('plane');
    const status = element<HTMLDivElement>('status');
    const startBtn = element<HTMLButtonElement>('start');
    const fitBtn = element<HTMLButtonElement>('fit');
    const liveBtn = element<HTMLButtonElement>('live');
    const ctx = canvas.getContext('2d')!;

    status.textContent = `connecting to ${WS_URL} ...`;
    const client = new ProtocolClient(await connectWebSocket(WS_URL));
    const state = await client.getState();
    const mapping = new PlaneMapping(
        { left: 0, top: 0, width: canvas.width, height: canvas.height },
        state.plane_bounds,
    );
    const walkthrough = new CalibrationWalkthrough(client, DEFAULT_GRID, 'browser');
    const live = new LiveTargetMode(client, { maxHz: 30 });
    let liveActive = false;

    function draw(s: StatePayload): void {
        ctx.clearRect(0, 0, canvas.width, canvas.height);
        ctx.strokeStyle = '#888';
        ctx.strokeRect(0, 0, canvas.width, canvas.height);
        const view = computeAvatarView(s, mapping);
        for (const eye of view.eyes) {
            ctx.beginPath();
            ctx.fillStyle = '#fff';
            ctx.strokeStyle = '#222';
            ctx.arc(eye.outline.cx, eye.outline.cy, eye.outline.r, 0, 2 * Math.PI);
            ctx.fill();
            ctx.stroke();
            ctx.beginPath();
            ctx.fillStyle = '#1b4b8f';
            ctx.arc(eye.iris.cx, eye.iris.cy, eye.iris.r, 0, 2 * Math.PI);
            ctx.fill();
        }
        const target = walkthrough.currentPoint;
        if (target) {
            const [cx, cy] = mapping.toCss(target[0], target[1]);
            ctx.strokeStyle = '#c33';
            ctx.beginPath();
            ctx.arc(cx, cy, 10, 0, 2 * Math.PI);
            ctx.stroke();
            ctx.beginPath();
            ctx.moveTo(cx - 14, cy);
            ctx.lineTo(cx + 14, cy);
            ctx.moveTo(cx, cy - 14);
            ctx.lineTo(cx, cy + 14);
            ctx.stroke();
        }
        for (const r of walkthrough.residuals) {
            const [cx, cy] = mapping.toCss(r.commanded[0], r.commanded[1]);
            ctx.fillStyle = r.postResidual < 1 ? '#2a2' : '#c33';
            ctx.fillRect(cx - 3, cy - 3, 6, 6);
        }
    }

    client.onStateUpdate(draw);
    draw(state);

    startBtn.onclick = async () => {
        await walkthrough.start();
        status.textContent =
            `walkthrough: click where the avatar seems to look (1/${walkthrough.points.length})`;
    };

    fitBtn.onclick = async () => {
        const model = await walkthrough.fit();
        live.setModel(model);
        status.textContent =
            `fit done: ${model.fit_stats.pre_rms.toFixed(1)} -> ` +
            `${model.fit_stats.post_rms.toFixed(3)} px RMS ` +
            `(max overlay residual ${walkthrough.maxPostResidual.toFixed(3)} px)`;
        if (client.latestState) draw(client.latestState);
    };

    liveBtn.onclick = () => {
        liveActive = !liveActive;
        liveBtn.textContent = liveActive ? 'stop live mode' : 'live mode';
        status.textContent = liveActive
            ? 'live: the avatar follows your pointer'
            : 'live mode off';
    };

    canvas.addEventListener('click', async (ev) => {
        const rect = canvas.getBoundingClientRect();
        const [u, v] = mapping.toPlane(ev.clientX - rect.left, ev.clientY - rect.top);
        if (walkthrough.phase === 'awaiting-click') {
            await walkthrough.handleClick(mapping.clamp(u, v));
            const phase: string = walkthrough.phase;
            status.textContent = phase === 'ready-to-fit'
                ? 'all points recorded: press fit'
                : `walkthrough: ${walkthrough.index + 1}/${walkthrough.points.length}`;
        }
    });

    canvas.addEventListener('pointermove', (ev) => {
        if (!liveActive) return;
        const rect = canvas.getBoundingClientRect();
        const [u, v] = mapping.toPlane(ev.clientX - rect.left, ev.clientY - rect.top);
        if (mapping.inBounds(u, v)) live.pointerSample(u, v);
    });
}

boot().catch((err) => {
    const status = document.getElementById('status');
    if (status) status.textContent = `failed: ${err.message}`;
});
