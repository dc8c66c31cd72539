// Live event feed: follows the service's server-sent events with
// reconnect/backoff and flags staleness when nothing arrives for a while.

export interface CubeEvent {
  type: "cube";
  cube_id: number;
  completion: number;
  bounds: [number, number, number, number] | null;
}

export interface LineBatchEvent {
  type: "line_batch";
  cube_id: number;
  count: number;
}

export type GroundEvent = CubeEvent | LineBatchEvent;

export interface EventSourceLike {
  onmessage: ((e: { data: string }) => void) | null;
  onerror: (() => void) | null;
  close(): void;
}

export interface FollowOptions {
  onEvent: (e: GroundEvent) => void;
  onStale?: (stale: boolean) => void;
  onConnected?: (up: boolean) => void;
  makeSource?: (url: string) => EventSourceLike;
  staleAfterMs?: number;
  reconnectBaseMs?: number;
  reconnectMaxMs?: number;
}

export interface StreamHandle {
  close(): void;
}

export function followStream(url: string, opts: FollowOptions): StreamHandle {
  const staleAfter = opts.staleAfterMs ?? 10_000;
  const baseDelay = opts.reconnectBaseMs ?? 1_000;
  const maxDelay = opts.reconnectMaxMs ?? 30_000;
  const makeSource =
    opts.makeSource ??
    ((u: string) => new EventSource(u) as unknown as EventSourceLike);

  let source: EventSourceLike | null = null;
  let closed = false;
  let stale = false;
  let retryDelay = baseDelay;
  let staleTimer: ReturnType<typeof setTimeout> | null = null;
  let reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  const setStale = (value: boolean) => {
    if (stale !== value) {
      stale = value;
      opts.onStale?.(value);
    }
  };

  const armStaleTimer = () => {
    if (staleTimer !== null) clearTimeout(staleTimer);
    staleTimer = setTimeout(() => setStale(true), staleAfter);
  };

  const connect = () => {
    if (closed) return;
    source = makeSource(url);
    opts.onConnected?.(true);
    armStaleTimer();
    source.onmessage = (e) => {
      retryDelay = baseDelay;
      setStale(false);
      armStaleTimer();
      let parsed: GroundEvent;
      try {
        parsed = JSON.parse(e.data) as GroundEvent;
      } catch {
        return; // tolerate pings/partial lines
      }
      if (parsed.type === "cube" || parsed.type === "line_batch") {
        opts.onEvent(parsed);
      }
    };
    source.onerror = () => {
      source?.close();
      source = null;
      opts.onConnected?.(false);
      setStale(true);
      if (closed) return;
      reconnectTimer = setTimeout(connect, retryDelay);
      retryDelay = Math.min(retryDelay * 2, maxDelay);
    };
  };

  connect();
  return {
    close() {
      closed = true;
      if (staleTimer !== null) clearTimeout(staleTimer);
      if (reconnectTimer !== null) clearTimeout(reconnectTimer);
      source?.close();
      source = null;
    },
  };
}
