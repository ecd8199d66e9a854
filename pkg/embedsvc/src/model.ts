// Deterministic stand-in models: grid embeddings and a moment-based
// 68-point landmark layout. Lab tooling, not detectors: the contract is a
// stable dimension, bit-stable outputs for identical inputs, and a clear
// no-face signal for structureless images.

import { DecodeError, RawImage } from "./pnm.js";
import { decodePnm } from "./pnm.js";
import { decodePng } from "./png.js";

export class NoFaceError extends Error {}

export interface ModelSpec {
  name: string;
  grid: number;
  version: string;
}

export const MODELS: Record<string, ModelSpec> = {
  grid16: { name: "grid16", grid: 16, version: "1.0" },
  grid8: { name: "grid8", grid: 8, version: "1.0" },
};

export function decodeImage(body: Buffer): RawImage {
  if (body.length >= 2 && body[0] === 0x50 && (body[1] === 0x35 || body[1] === 0x36)) {
    return decodePnm(body);
  }
  if (body.length >= 8 && body[0] === 0x89 && body[1] === 0x50) {
    return decodePng(body);
  }
  throw new DecodeError("body is neither PGM/PPM nor PNG");
}

export function toGray(img: RawImage): Float64Array {
  const n = img.width * img.height;
  const gray = new Float64Array(n);
  if (img.channels === 1) {
    for (let i = 0; i < n; i++) gray[i] = img.data[i];
  } else {
    for (let i = 0; i < n; i++) {
      const r = img.data[3 * i];
      const g = img.data[3 * i + 1];
      const b = img.data[3 * i + 2];
      gray[i] = Math.floor(0.299 * r + 0.587 * g + 0.114 * b + 0.5);
    }
  }
  return gray;
}

function grayStats(gray: Float64Array): { mean: number; std: number } {
  let sum = 0;
  for (const v of gray) sum += v;
  const mean = sum / gray.length;
  let varSum = 0;
  for (const v of gray) varSum += (v - mean) * (v - mean);
  return { mean, std: Math.sqrt(varSum / gray.length) };
}

// Images with almost no intensity structure carry no face; the gate keeps
// /v1/embed deterministic while giving clients a real 422 path.
const MIN_STRUCTURE_STD = 6.0;

function requireFace(gray: Float64Array): void {
  if (grayStats(gray).std < MIN_STRUCTURE_STD) {
    throw new NoFaceError("no face-like structure in image");
  }
}

export function embed(img: RawImage, model: ModelSpec): number[] {
  const gray = toGray(img);
  requireFace(gray);
  const g = model.grid;
  const vals = new Float64Array(g * g);
  for (let by = 0; by < g; by++) {
    const y0 = Math.floor((by * img.height) / g);
    const y1 = Math.floor(((by + 1) * img.height) / g);
    for (let bx = 0; bx < g; bx++) {
      const x0 = Math.floor((bx * img.width) / g);
      const x1 = Math.floor(((bx + 1) * img.width) / g);
      let sum = 0;
      let count = 0;
      for (let y = y0; y < y1; y++) {
        for (let x = x0; x < x1; x++) {
          sum += gray[y * img.width + x];
          count += 1;
        }
      }
      vals[by * g + bx] = count > 0 ? sum / count : 0;
    }
  }
  let mean = 0;
  for (const v of vals) mean += v;
  mean /= vals.length;
  let norm = 0;
  for (let i = 0; i < vals.length; i++) {
    vals[i] -= mean;
    norm += vals[i] * vals[i];
  }
  norm = Math.sqrt(norm);
  const out = new Array<number>(vals.length);
  if (norm === 0) {
    out.fill(0);
    out[0] = 1;
    return out;
  }
  // 9 significant digits on the wire
  for (let i = 0; i < vals.length; i++) {
    out[i] = Number((vals[i] / norm).toPrecision(9));
  }
  return out;
}

export const LANDMARK_COUNT = 68;

// Intensity-moment ellipse: centroid and axis spreads of the bright mass.
function faceEllipse(img: RawImage, gray: Float64Array) {
  const { mean } = grayStats(gray);
  let wsum = 0;
  let cx = 0;
  let cy = 0;
  for (let y = 0; y < img.height; y++) {
    for (let x = 0; x < img.width; x++) {
      const w = Math.max(0, gray[y * img.width + x] - mean);
      wsum += w;
      cx += w * (x + 0.5);
      cy += w * (y + 0.5);
    }
  }
  if (wsum <= 0) throw new NoFaceError("no bright mass to anchor landmarks");
  cx /= wsum;
  cy /= wsum;
  let vx = 0;
  let vy = 0;
  for (let y = 0; y < img.height; y++) {
    for (let x = 0; x < img.width; x++) {
      const w = Math.max(0, gray[y * img.width + x] - mean);
      vx += w * (x + 0.5 - cx) * (x + 0.5 - cx);
      vy += w * (y + 0.5 - cy) * (y + 0.5 - cy);
    }
  }
  const ax = Math.max(4, Math.sqrt(vx / wsum) * 1.7);
  const ay = Math.max(4, Math.sqrt(vy / wsum) * 1.7);
  return { cx, cy, ax, ay };
}

function clampPoint(img: RawImage, x: number, y: number): [number, number] {
  const px = Math.min(img.width, Math.max(0, x));
  const py = Math.min(img.height, Math.max(0, y));
  return [Number(px.toPrecision(9)), Number(py.toPrecision(9))];
}

// Classic 68-point ordering: 17 jaw, 2x5 brows, 4+5 nose, 2x6 eyes,
// 12 outer + 8 inner mouth, laid out on the moment ellipse.
export function landmarks(img: RawImage): [number, number][] {
  const gray = toGray(img);
  requireFace(gray);
  const { cx, cy, ax, ay } = faceEllipse(img, gray);
  const pts: [number, number][] = [];
  const put = (x: number, y: number) => pts.push(clampPoint(img, x, y));

  for (let i = 0; i < 17; i++) {
    const th = Math.PI * (i / 16); // left temple over the chin to right temple
    put(cx - ax * Math.cos(th), cy + ay * Math.sin(th) * 0.95);
  }
  for (const side of [-1, 1]) {
    for (let i = 0; i < 5; i++) {
      const t = (i / 4 - 0.5) * 0.55;
      put(cx + side * (0.45 + t * 0.5) * ax, cy - 0.55 * ay + Math.abs(t) * 4);
    }
  }
  for (let i = 0; i < 4; i++) put(cx, cy - 0.25 * ay + (i / 3) * 0.35 * ay);
  for (let i = 0; i < 5; i++) put(cx + ((i - 2) / 2) * 0.18 * ax, cy + 0.18 * ay);
  for (const side of [-1, 1]) {
    for (let i = 0; i < 6; i++) {
      const th = (2 * Math.PI * i) / 6;
      put(cx + side * 0.45 * ax + 0.12 * ax * Math.cos(th),
          cy - 0.3 * ay + 0.07 * ay * Math.sin(th));
    }
  }
  for (let i = 0; i < 12; i++) {
    const th = (2 * Math.PI * i) / 12;
    put(cx + 0.28 * ax * Math.cos(th), cy + 0.55 * ay + 0.1 * ay * Math.sin(th));
  }
  for (let i = 0; i < 8; i++) {
    const th = (2 * Math.PI * i) / 8;
    put(cx + 0.17 * ax * Math.cos(th), cy + 0.55 * ay + 0.05 * ay * Math.sin(th));
  }
  if (pts.length !== LANDMARK_COUNT) throw new Error(`layout bug: ${pts.length} points`);
  return pts;
}
