/**
 * WebSocket transport for browsers.
 *
 * Browsers cannot open raw TCP sockets, so point this at a WebSocket
 * bridge in front of the service, e.g.
 *
 *     websocat -b ws-l:127.0.0.1:8766 tcp:127.0.0.1:8765
 *
 * Each WebSocket message may carry one or more newline-terminated frames.
 */

import { LineBuffer, Transport } from './protocol.js';

export function connectWebSocket(url: string): Promise<Transport> {
    return new Promise((resolve, reject) => {
        const ws = new WebSocket(url);
        const buffer = new LineBuffer();
        let lineCb: (line: string) => void = () => undefined;
        let closeCb: () => void = () => undefined;

        ws.onmessage = (ev) => {
            const text = typeof ev.data === 'string' ? ev.data : '';
            for (const line of buffer.feed(text)) lineCb(line);
        };
        ws.onclose = () => closeCb();
        ws.onerror = () => reject(new Error(`websocket failed: ${url}`));
        ws.onopen = () => resolve({
            send: (line) => ws.send(line),
            onLine: (cb) => { lineCb = cb; },
            onClose: (cb) => { closeCb = cb; },
            close: () => ws.close(),
        });
    });
}
