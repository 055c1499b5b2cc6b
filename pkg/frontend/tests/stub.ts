/** In-process stand-in for the live service, for tests that only need
 * protocol behavior and not the engine. */

import * as net from "node:net";

import { MessageDecoder, encodeMessage } from "../src/framing.js";

export interface StubOptions {
  token?: string;
  name?: string;
}

interface StubConn {
  socket: net.Socket;
  authed: boolean;
  subscribed: boolean;
}

export class StubService {
  readonly received: Record<string, unknown>[] = [];
  private readonly conns = new Set<StubConn>();
  private constructor(
    private readonly server: net.Server,
    readonly port: number,
    private readonly opts: StubOptions,
  ) {}

  static start(opts: StubOptions = {}): Promise<StubService> {
    return new Promise((resolve) => {
      const server = net.createServer();
      const conns: StubConn[] = [];
      server.listen(0, "127.0.0.1", () => {
        const address = server.address() as net.AddressInfo;
        const stub = new StubService(server, address.port, opts);
        server.on("connection", (socket) => stub.accept(socket));
        for (const c of conns) stub.conns.add(c);
        resolve(stub);
      });
    });
  }

  private accept(socket: net.Socket): void {
    const conn: StubConn = { socket, authed: false, subscribed: false };
    this.conns.add(conn);
    const decoder = new MessageDecoder();
    socket.on("data", (chunk) => {
      let messages: Record<string, unknown>[];
      try {
        messages = decoder.feed(new Uint8Array(chunk));
      } catch {
        socket.destroy();
        return;
      }
      for (const msg of messages) this.handle(conn, msg);
    });
    socket.on("error", () => socket.destroy());
    socket.on("close", () => this.conns.delete(conn));
  }

  private reply(conn: StubConn, msg: object): void {
    conn.socket.write(encodeMessage(msg));
  }

  private handle(conn: StubConn, msg: Record<string, unknown>): void {
    this.received.push(msg);
    const requestId = (msg.request_id as string | undefined) ?? null;
    if (!conn.authed) {
      if (msg.kind !== "hello") {
        this.reply(conn, {
          kind: "reject",
          request_id: requestId,
          reason: "handshake required first",
        });
        conn.socket.end();
        return;
      }
      if (msg.proto_version !== 1) {
        this.reply(conn, {
          kind: "reject",
          request_id: requestId,
          reason: "proto_version must be 1",
        });
        conn.socket.end();
        return;
      }
      if (this.opts.token !== undefined && msg.token !== this.opts.token) {
        this.reply(conn, {
          kind: "reject",
          request_id: requestId,
          reason: "bad token",
        });
        conn.socket.end();
        return;
      }
      conn.authed = true;
      this.reply(conn, {
        kind: "hello",
        proto_version: 1,
        name: this.opts.name ?? "stub",
        control_period_s: 0.001,
        decimation: 20,
      });
      return;
    }
    if (msg.kind === "subscribe") {
      conn.subscribed = true;
      this.reply(conn, {
        kind: "ack",
        request_id: requestId,
        note: "subscribed",
      });
      return;
    }
    if (msg.kind === "command") {
      const params = (msg.params as { target?: string }) ?? {};
      if (msg.command === "relay_set" && /^L\d$/.test(params.target ?? "")) {
        this.reply(conn, { kind: "ack", request_id: requestId, note: "queued" });
      } else {
        this.reply(conn, {
          kind: "reject",
          request_id: requestId,
          reason: `unknown command ${JSON.stringify(msg.command)}`,
        });
      }
      return;
    }
    this.reply(conn, {
      kind: "reject",
      request_id: requestId,
      reason: `unknown kind ${JSON.stringify(msg.kind)}`,
    });
  }

  /** Send one message to every subscribed connection. */
  broadcast(msg: object): void {
    for (const conn of this.conns) {
      if (conn.subscribed) conn.socket.write(encodeMessage(msg));
    }
  }

  get subscriberCount(): number {
    return [...this.conns].filter((c) => c.subscribed).length;
  }

  dropAll(): void {
    for (const conn of this.conns) conn.socket.destroy();
  }

  close(): void {
    this.dropAll();
    this.server.close();
  }
}
