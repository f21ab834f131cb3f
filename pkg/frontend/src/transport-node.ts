/**
 * Raw TCP transport (Node only). The service speaks newline-delimited
 * JSON directly over a socket, so tests and headless tools connect here;
 * browsers use the WebSocket transport instead.
 */

import * as net from 'node:net';

import { LineBuffer, Transport } from './protocol.js';

export function connectTcp(host: string, port: number): Promise<Transport> {
    return new Promise((resolve, reject) => {
        const socket = net.createConnection({ host, port });
        const buffer = new LineBuffer();
        let lineCb: (line: string) => void = () => undefined;
        let closeCb: () => void = () => undefined;

        socket.setEncoding('utf-8');
        socket.on('data', (chunk: string) => {
            for (const line of buffer.feed(chunk)) lineCb(line);
        });
        socket.on('close', () => closeCb());
        socket.once('error', reject);
        socket.once('connect', () => {
            socket.removeListener('error', reject);
            resolve({
                send: (line) => void socket.write(line),
                onLine: (cb) => { lineCb = cb; },
                onClose: (cb) => { closeCb = cb; },
                close: () => socket.destroy(),
            });
        });
    });
}
