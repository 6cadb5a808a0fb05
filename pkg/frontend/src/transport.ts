// Line transport abstraction: the browser speaks WebSocket; tests plug in a
// raw TCP implementation. Both deliver whole text lines to the same callbacks.

export interface Transport {
  send(line: string): void;
  close(): void;
}

export interface TransportCallbacks {
  onLine(line: string): void;
  onOpen(): void;
  onClose(): void;
}

export type TransportFactory = (endpoint: string, cb: TransportCallbacks) => Transport;

export const webSocketTransport: TransportFactory = (endpoint, cb) => {
  const ws = new WebSocket(endpoint);
  ws.onopen = () => cb.onOpen();
  ws.onclose = () => cb.onClose();
  ws.onerror = () => {
    /* close follows; the session model handles retry */
  };
  ws.onmessage = (ev) => {
    for (const line of String(ev.data).split("\n")) {
      if (line.trim().length > 0) cb.onLine(line);
    }
  };
  return {
    send(line: string) {
      if (ws.readyState === WebSocket.OPEN) ws.send(line);
    },
    close() {
      ws.close();
    },
  };
};
