// Minimal PNG decoding: 8-bit grayscale / RGB / RGBA (optionally with
// alpha), non-interlaced. Enough to accept PNG uploads without pulling in
// an image library; anything unsupported raises DecodeError.

import * as zlib from "node:zlib";
import { DecodeError, RawImage } from "./pnm.js";

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

interface Header {
  width: number;
  height: number;
  bitDepth: number;
  colorType: number;
  interlace: number;
}

function parseChunks(buf: Buffer): { header: Header; idat: Buffer } {
  if (!buf.subarray(0, 8).equals(SIGNATURE)) throw new DecodeError("not a PNG");
  let pos = 8;
  let header: Header | null = null;
  const idatParts: Buffer[] = [];
  while (pos + 8 <= buf.length) {
    const length = buf.readUInt32BE(pos);
    const type = buf.subarray(pos + 4, pos + 8).toString("ascii");
    const body = buf.subarray(pos + 8, pos + 8 + length);
    if (body.length < length) throw new DecodeError("truncated PNG chunk");
    if (type === "IHDR") {
      header = {
        width: body.readUInt32BE(0),
        height: body.readUInt32BE(4),
        bitDepth: body.readUInt8(8),
        colorType: body.readUInt8(9),
        interlace: body.readUInt8(12),
      };
    } else if (type === "IDAT") {
      idatParts.push(Buffer.from(body));
    } else if (type === "IEND") {
      break;
    }
    pos += 12 + length; // length + type + body + crc
  }
  if (!header) throw new DecodeError("PNG missing IHDR");
  if (idatParts.length === 0) throw new DecodeError("PNG missing IDAT");
  return { header, idat: Buffer.concat(idatParts) };
}

function channelsFor(colorType: number): number {
  switch (colorType) {
    case 0: return 1; // gray
    case 2: return 3; // rgb
    case 4: return 2; // gray + alpha
    case 6: return 4; // rgba
    default: throw new DecodeError(`unsupported PNG color type ${colorType}`);
  }
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

export function decodePng(buf: Buffer): RawImage {
  const { header, idat } = parseChunks(buf);
  if (header.bitDepth !== 8) throw new DecodeError(`unsupported PNG bit depth ${header.bitDepth}`);
  if (header.interlace !== 0) throw new DecodeError("interlaced PNG unsupported");
  if (header.width < 1 || header.height < 1) throw new DecodeError("bad PNG dimensions");
  const nch = channelsFor(header.colorType);

  let raw: Buffer;
  try {
    raw = zlib.inflateSync(idat);
  } catch {
    throw new DecodeError("PNG deflate stream corrupt");
  }
  const stride = header.width * nch;
  if (raw.length < (stride + 1) * header.height) throw new DecodeError("PNG pixel data truncated");

  const out = new Uint8Array(stride * header.height);
  for (let y = 0; y < header.height; y++) {
    const filter = raw[y * (stride + 1)];
    const row = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
    const prev = y > 0 ? out.subarray((y - 1) * stride, y * stride) : null;
    const cur = out.subarray(y * stride, (y + 1) * stride);
    for (let x = 0; x < stride; x++) {
      const a = x >= nch ? cur[x - nch] : 0;
      const b = prev ? prev[x] : 0;
      const c = x >= nch && prev ? prev[x - nch] : 0;
      let v: number;
      switch (filter) {
        case 0: v = row[x]; break;
        case 1: v = row[x] + a; break;
        case 2: v = row[x] + b; break;
        case 3: v = row[x] + ((a + b) >> 1); break;
        case 4: v = row[x] + paeth(a, b, c); break;
        default: throw new DecodeError(`unsupported PNG filter ${filter}`);
      }
      cur[x] = v & 0xff;
    }
  }

  // Collapse to the RawImage channel layouts (drop alpha).
  if (nch === 1) {
    return { width: header.width, height: header.height, channels: 1, data: out };
  }
  if (nch === 3) {
    return { width: header.width, height: header.height, channels: 3, data: out };
  }
  const keep = nch === 2 ? 1 : 3;
  const data = new Uint8Array(header.width * header.height * keep);
  for (let i = 0, j = 0; i < out.length; i += nch, j += keep) {
    for (let k = 0; k < keep; k++) data[j + k] = out[i + k];
  }
  return { width: header.width, height: header.height, channels: keep as 1 | 3, data };
}
