// Binary PGM (P5) / PPM (P6) decoding, maxval 255.

export interface RawImage {
  width: number;
  height: number;
  channels: 1 | 3;
  // row-major, channel-interleaved samples
  data: Uint8Array;
}

export class DecodeError extends Error {}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d || byte === 0x0b || byte === 0x0c;
}

function readToken(buf: Buffer, pos: number): [string, number] {
  const n = buf.length;
  while (pos < n) {
    if (isSpace(buf[pos])) {
      pos += 1;
    } else if (buf[pos] === 0x23 /* '#' */) {
      while (pos < n && buf[pos] !== 0x0a) pos += 1;
    } else {
      break;
    }
  }
  const start = pos;
  while (pos < n && !isSpace(buf[pos])) pos += 1;
  if (start === pos) throw new DecodeError("unexpected end of header");
  return [buf.subarray(start, pos).toString("ascii"), pos];
}

export function decodePnm(buf: Buffer): RawImage {
  const magic = buf.subarray(0, 2).toString("ascii");
  let channels: 1 | 3;
  if (magic === "P5") channels = 1;
  else if (magic === "P6") channels = 3;
  else throw new DecodeError(`not a binary PGM/PPM: magic ${JSON.stringify(magic)}`);

  let pos = 2;
  const fields: number[] = [];
  for (let i = 0; i < 3; i++) {
    const [tok, next] = readToken(buf, pos);
    if (!/^[0-9]+$/.test(tok)) throw new DecodeError(`non-numeric header token ${tok}`);
    fields.push(parseInt(tok, 10));
    pos = next;
  }
  const [width, height, maxval] = fields;
  if (maxval !== 255) throw new DecodeError(`maxval ${maxval} unsupported, need 255`);
  if (width < 1 || height < 1) throw new DecodeError(`bad dimensions ${width}x${height}`);
  if (pos >= buf.length || !isSpace(buf[pos])) throw new DecodeError("missing separator before payload");
  pos += 1;
  const need = width * height * channels;
  if (buf.length - pos < need) {
    throw new DecodeError(`payload has ${buf.length - pos} of ${need} bytes`);
  }
  return { width, height, channels, data: new Uint8Array(buf.subarray(pos, pos + need)) };
}
