/** TCP console client for Node: the bridge and the test harness both
 * speak to the service through this.
 *
 * Incoming messages fan out to listeners and to waiting predicates, so
 * a caller awaiting an ack never swallows telemetry meant for the
 * state. request() correlates the reply by request_id; the stream keeps
 * flowing while it waits.
 */

import * as net from "node:net";

import { MessageDecoder, PROTO_VERSION, encodeMessage } from "./framing.js";
import { isServerMessage } from "./messages.js";
import type { ClientMessage, ServerMessage } from "./messages.js";

export interface ConnectOptions {
  host: string;
  port: number;
  token?: string;
  timeoutMs?: number;
}

interface Waiter {
  predicate: (msg: ServerMessage) => boolean;
  resolve: (msg: ServerMessage) => void;
  reject: (err: Error) => void;
  timer: NodeJS.Timeout;
}

export class ConsoleClient {
  private socket: net.Socket;
  private decoder = new MessageDecoder();
  private listeners: ((msg: ServerMessage) => void)[] = [];
  private waiters = new Set<Waiter>();
  private closeHandlers: ((err: Error | null) => void)[] = [];
  private closedErr: Error | null = null;
  private isClosed = false;
  hello: ServerMessage | null = null;

  private constructor(socket: net.Socket) {
    this.socket = socket;
    socket.on("data", (chunk) => this.onData(chunk));
    socket.on("error", (err) => this.teardown(err));
    socket.on("close", () => this.teardown(this.closedErr));
  }

  /** Open a connection and complete the handshake; rejects if the
   * server refuses the hello. */
  static async connect(opts: ConnectOptions): Promise<ConsoleClient> {
    const timeoutMs = opts.timeoutMs ?? 5000;
    const socket = await new Promise<net.Socket>((resolve, reject) => {
      const s = net.createConnection(
        { host: opts.host, port: opts.port },
        () => {
          s.off("error", reject);
          resolve(s);
        },
      );
      s.once("error", reject);
      s.setTimeout(timeoutMs, () => {
        s.destroy(new Error("connect timed out"));
      });
    });
    socket.setTimeout(0);
    const client = new ConsoleClient(socket);
    const hello: ClientMessage = { kind: "hello", proto_version: PROTO_VERSION };
    if (opts.token !== undefined) hello.token = opts.token;
    const reply = await client.roundTrip(
      hello,
      (m) => m.kind === "hello" || m.kind === "reject",
      timeoutMs,
    );
    if (reply.kind === "reject") {
      client.close();
      throw new Error(`handshake rejected: ${reply.reason}`);
    }
    client.hello = reply;
    return client;
  }

  private onData(chunk: Buffer | string): void {
    const bytes =
      typeof chunk === "string"
        ? new TextEncoder().encode(chunk)
        : new Uint8Array(chunk.buffer, chunk.byteOffset, chunk.byteLength);
    let messages: Record<string, unknown>[];
    try {
      messages = this.decoder.feed(bytes);
    } catch (exc) {
      this.teardown(exc instanceof Error ? exc : new Error(String(exc)));
      return;
    }
    for (const raw of messages) {
      if (!isServerMessage(raw)) continue;
      const msg = raw;
      for (const listener of [...this.listeners]) listener(msg);
      for (const waiter of [...this.waiters]) {
        if (waiter.predicate(msg)) {
          this.waiters.delete(waiter);
          clearTimeout(waiter.timer);
          waiter.resolve(msg);
        }
      }
    }
  }

  private teardown(err: Error | null): void {
    if (this.isClosed) return;
    this.isClosed = true;
    this.closedErr = err;
    for (const waiter of this.waiters) {
      clearTimeout(waiter.timer);
      waiter.reject(err ?? new Error("connection closed"));
    }
    this.waiters.clear();
    for (const handler of this.closeHandlers) handler(err);
    this.socket.destroy();
  }

  get closed(): boolean {
    return this.isClosed;
  }

  onMessage(listener: (msg: ServerMessage) => void): void {
    this.listeners.push(listener);
  }

  onClose(handler: (err: Error | null) => void): void {
    if (this.isClosed) {
      handler(this.closedErr);
      return;
    }
    this.closeHandlers.push(handler);
  }

  send(message: ClientMessage): void {
    if (this.isClosed) throw new Error("connection closed");
    this.socket.write(encodeMessage(message));
  }

  /** Resolve with the first message matching the predicate; messages
   * still reach every listener. */
  waitFor(
    predicate: (msg: ServerMessage) => boolean,
    timeoutMs = 5000,
  ): Promise<ServerMessage> {
    if (this.isClosed) {
      return Promise.reject(this.closedErr ?? new Error("connection closed"));
    }
    return new Promise((resolve, reject) => {
      const waiter: Waiter = {
        predicate,
        resolve,
        reject,
        timer: setTimeout(() => {
          this.waiters.delete(waiter);
          reject(new Error(`timed out after ${timeoutMs} ms`));
        }, timeoutMs),
      };
      this.waiters.add(waiter);
    });
  }

  private async roundTrip(
    message: ClientMessage,
    predicate: (msg: ServerMessage) => boolean,
    timeoutMs: number,
  ): Promise<ServerMessage> {
    const reply = this.waitFor(predicate, timeoutMs);
    this.send(message);
    return reply;
  }

  /** Subscribe to the telemetry/decision stream. */
  async subscribe(requestId = "sub", timeoutMs = 5000): Promise<ServerMessage> {
    return this.roundTrip(
      { kind: "subscribe", request_id: requestId },
      (m) =>
        (m.kind === "ack" || m.kind === "reject") && m.request_id === requestId,
      timeoutMs,
    );
  }

  /** Send one operator command; resolves with its ack or reject. */
  async command(
    requestId: string,
    command: string,
    target: string,
    value?: number | boolean,
    timeoutMs = 5000,
  ): Promise<ServerMessage> {
    const params: { target: string; value?: number | boolean } = { target };
    if (value !== undefined) params.value = value;
    return this.roundTrip(
      { kind: "command", command, params, request_id: requestId },
      (m) =>
        (m.kind === "ack" || m.kind === "reject") && m.request_id === requestId,
      timeoutMs,
    );
  }

  close(): void {
    this.teardown(null);
  }
}
