/** Length-prefixed JSON framing, matching the service end exactly.
 *
 * 4-byte big-endian length, then one UTF-8 JSON object. Outbound JSON
 * is emitted with sorted keys and no whitespace so both ends produce
 * identical bytes for identical messages. The length cap protects us
 * from a corrupted prefix.
 */

export const PROTO_VERSION = 1;
export const MAX_MESSAGE_BYTES = 1 << 20;

const encoder = new TextEncoder();
const decoder = new TextDecoder("utf-8", { fatal: true });

export class FramingError extends Error {}

/** JSON.stringify with object keys sorted at every level. */
export function canonicalJson(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  const entries = Object.entries(value as Record<string, unknown>)
    .filter(([, v]) => v !== undefined)
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0));
  const body = entries
    .map(([k, v]) => JSON.stringify(k) + ":" + canonicalJson(v))
    .join(",");
  return "{" + body + "}";
}

export function encodeMessage(message: object): Uint8Array {
  const body = encoder.encode(canonicalJson(message));
  if (body.length > MAX_MESSAGE_BYTES) {
    throw new FramingError(`message of ${body.length} bytes exceeds cap`);
  }
  const out = new Uint8Array(4 + body.length);
  new DataView(out.buffer).setUint32(0, body.length, false);
  out.set(body, 4);
  return out;
}

/** Incremental decoder; feed chunks, collect complete messages. */
export class MessageDecoder {
  private buffer = new Uint8Array(0);

  feed(chunk: Uint8Array): Record<string, unknown>[] {
    const joined = new Uint8Array(this.buffer.length + chunk.length);
    joined.set(this.buffer, 0);
    joined.set(chunk, this.buffer.length);
    this.buffer = joined;

    const out: Record<string, unknown>[] = [];
    for (;;) {
      if (this.buffer.length < 4) return out;
      const view = new DataView(
        this.buffer.buffer,
        this.buffer.byteOffset,
        this.buffer.byteLength,
      );
      const length = view.getUint32(0, false);
      if (length > MAX_MESSAGE_BYTES) {
        throw new FramingError(`declared length ${length} exceeds cap`);
      }
      if (this.buffer.length < 4 + length) return out;
      const body = this.buffer.subarray(4, 4 + length);
      this.buffer = this.buffer.slice(4 + length);
      let parsed: unknown;
      try {
        parsed = JSON.parse(decoder.decode(body));
      } catch (exc) {
        throw new FramingError(`invalid JSON body: ${exc}`);
      }
      if (parsed === null || typeof parsed !== "object" || Array.isArray(parsed)) {
        throw new FramingError("message must be a JSON object");
      }
      out.push(parsed as Record<string, unknown>);
    }
  }
}
