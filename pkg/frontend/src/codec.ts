/**
 * Base64 <-> Float64Array codec for the wire protocol.
 *
 * The protocol carries C-contiguous little-endian float64 buffers and
 * nothing else. Byte counts are checked on both encode and decode; a
 * mismatch is an error, never a cast.
 */

import { ValidationError } from "./errors.js";

// the typed-array fast paths below assume a little-endian host
const LITTLE_ENDIAN =
  new Uint8Array(new Float64Array([1.0]).buffer)[7] === 0x3f;
if (!LITTLE_ENDIAN) {
  throw new Error("big-endian hosts are not supported by this codec");
}

const BASE64_RE = /^[A-Za-z0-9+/]*={0,2}$/;

export function encodeFloat64(values: Float64Array): string {
  if (!(values instanceof Float64Array)) {
    throw new ValidationError("encodeFloat64 expects a Float64Array");
  }
  return Buffer.from(values.buffer, values.byteOffset, values.byteLength).toString(
    "base64",
  );
}

export function decodeFloat64(b64: string, expectedLength: number): Float64Array {
  if (typeof b64 !== "string" || b64.length % 4 !== 0 || !BASE64_RE.test(b64)) {
    // Buffer.from(..., "base64") silently drops invalid characters, so the
    // strictness has to live here
    throw new ValidationError("buffer is not valid base64");
  }
  const raw = Buffer.from(b64, "base64");
  if (raw.byteLength !== expectedLength * 8) {
    throw new ValidationError(
      `buffer has ${raw.byteLength} bytes, expected ${expectedLength * 8} ` +
        `(float64 x ${expectedLength})`,
    );
  }
  // copy into an exactly-sized, 8-aligned ArrayBuffer; pooled Buffers share
  // backing storage at arbitrary offsets
  const aligned = new ArrayBuffer(raw.byteLength);
  new Uint8Array(aligned).set(raw);
  return new Float64Array(aligned);
}
