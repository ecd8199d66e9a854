import assert from "node:assert/strict";
import { readFileSync, readdirSync } from "node:fs";
import * as http from "node:http";
import * as path from "node:path";
import { test, before, after } from "node:test";
import * as zlib from "node:zlib";

import { createService } from "../src/server.js";

const FIXTURES = path.join(import.meta.dirname, "..", "..", "test", "fixtures");

let server: http.Server;
let base: string;

before(async () => {
  server = createService("grid16");
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const addr = server.address();
  if (addr === null || typeof addr === "string") throw new Error("no port");
  base = `http://127.0.0.1:${addr.port}`;
});

after(() => server.close());

async function post(route: string, body: Buffer): Promise<{ status: number; json: any }> {
  const res = await fetch(`${base}${route}`, {
    method: "POST",
    headers: { "Content-Type": "application/octet-stream" },
    body: new Uint8Array(body),
  });
  return { status: res.status, json: await res.json() };
}

function fixture(name: string): Buffer {
  return readFileSync(path.join(FIXTURES, name));
}

function gradientPgm(width: number, height: number): Buffer {
  const header = Buffer.from(`P5 ${width} ${height} 255\n`, "ascii");
  const data = Buffer.alloc(width * height);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      data[y * width + x] = (x * 7 + y * 13) % 256;
    }
  }
  return Buffer.concat([header, data]);
}

function flatPgm(width: number, height: number, level: number): Buffer {
  const header = Buffer.from(`P5 ${width} ${height} 255\n`, "ascii");
  return Buffer.concat([header, Buffer.alloc(width * height, level)]);
}

function tinyPng(): Buffer {
  // 2x2 grayscale PNG, filter 0 rows
  const sig = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
  const ihdrBody = Buffer.alloc(13);
  ihdrBody.writeUInt32BE(2, 0);
  ihdrBody.writeUInt32BE(2, 4);
  ihdrBody.writeUInt8(8, 8); // bit depth
  ihdrBody.writeUInt8(0, 9); // gray
  const raw = Buffer.from([0, 10, 200, 0, 60, 250]); // filter byte + row, twice
  const idatBody = zlib.deflateSync(raw);
  const chunk = (type: string, body: Buffer) => {
    const out = Buffer.alloc(12 + body.length);
    out.writeUInt32BE(body.length, 0);
    out.write(type, 4, "ascii");
    body.copy(out, 8);
    out.writeUInt32BE(0, 8 + body.length); // crc unchecked by the decoder
    return out;
  };
  return Buffer.concat([
    sig, chunk("IHDR", ihdrBody), chunk("IDAT", idatBody), chunk("IEND", Buffer.alloc(0)),
  ]);
}

test("info endpoint is stable and well-formed", async () => {
  const a = await (await fetch(`${base}/v1/info`)).json();
  const b = await (await fetch(`${base}/v1/info`)).json();
  assert.deepEqual(a, b);
  assert.equal(a.model_name, "grid16");
  assert.equal(a.embedding_dim, 256);
  assert.equal(a.landmark_count, 68);
  assert.equal(typeof a.version, "string");
});

test("embedding dimension matches the advertised dim on every response", async () => {
  const info = await (await fetch(`${base}/v1/info`)).json();
  for (const name of readdirSync(FIXTURES).sort()) {
    const { status, json } = await post("/v1/embed", fixture(name));
    assert.equal(status, 200);
    assert.equal(json.embedding.length, info.embedding_dim);
    const norm = Math.sqrt(json.embedding.reduce((s: number, v: number) => s + v * v, 0));
    assert.ok(Math.abs(norm - 1.0) < 1e-6, `norm ${norm}`);
  }
});

test("identical bytes give identical embeddings", async () => {
  const body = fixture("id000_cap00.pgm");
  const first = await post("/v1/embed", body);
  const second = await post("/v1/embed", body);
  assert.deepEqual(first.json, second.json);
});

test("three-subject smoke set: intra-subject closer than inter-subject", async () => {
  const embeddings: Record<string, number[][]> = {};
  for (const subject of ["id000", "id001", "id002"]) {
    embeddings[subject] = [];
    for (const cap of ["cap00", "cap01"]) {
      const { status, json } = await post("/v1/embed", fixture(`${subject}_${cap}.pgm`));
      assert.equal(status, 200);
      embeddings[subject].push(json.embedding);
    }
  }
  const dist = (a: number[], b: number[]) =>
    Math.sqrt(a.reduce((s, v, i) => s + (v - b[i]) * (v - b[i]), 0));
  const intra: number[] = [];
  const inter: number[] = [];
  const subjects = Object.keys(embeddings);
  for (const s of subjects) intra.push(dist(embeddings[s][0], embeddings[s][1]));
  for (let i = 0; i < subjects.length; i++) {
    for (let j = i + 1; j < subjects.length; j++) {
      for (const a of embeddings[subjects[i]]) {
        for (const b of embeddings[subjects[j]]) inter.push(dist(a, b));
      }
    }
  }
  const maxIntra = Math.max(...intra);
  const minInter = Math.min(...inter);
  assert.ok(maxIntra < minInter,
    `intra ${maxIntra.toFixed(4)} should be below inter ${minInter.toFixed(4)}`);
});

test("undecodable body gives 400 with a machine-readable code", async () => {
  const junk = await post("/v1/embed", Buffer.from("definitely not an image"));
  assert.equal(junk.status, 400);
  assert.equal(junk.json.error.code, "undecodable_image");
  const truncated = await post("/v1/embed", fixture("id000_cap00.pgm").subarray(0, 40));
  assert.equal(truncated.status, 400);
  assert.equal(truncated.json.error.code, "undecodable_image");
});

test("structureless image gives 422 no_face", async () => {
  const { status, json } = await post("/v1/embed", flatPgm(64, 64, 128));
  assert.equal(status, 422);
  assert.equal(json.error.code, "no_face");
  const lm = await post("/v1/landmarks", flatPgm(64, 64, 128));
  assert.equal(lm.status, 422);
});

test("landmarks: 68 in-bounds points in pixel space, deterministic", async () => {
  const body = fixture("id001_cap00.pgm");
  const { status, json } = await post("/v1/landmarks", body);
  assert.equal(status, 200);
  assert.equal(json.points.length, 68);
  for (const [x, y] of json.points) {
    assert.ok(x >= 0 && x <= 128 && y >= 0 && y <= 128, `(${x}, ${y})`);
  }
  const again = await post("/v1/landmarks", body);
  assert.deepEqual(json, again.json);
});

test("png uploads decode", async () => {
  const { status, json } = await post("/v1/embed", tinyPng());
  assert.equal(status, 200);
  assert.equal(json.embedding.length, 256);
});

test("gradient synthetic image embeds fine", async () => {
  const { status, json } = await post("/v1/embed", gradientPgm(50, 40));
  assert.equal(status, 200);
  assert.equal(json.embedding.length, 256);
});

test("unknown route gives 404 json", async () => {
  const res = await fetch(`${base}/v1/other`);
  assert.equal(res.status, 404);
  const body = await res.json();
  assert.equal(body.error.code, "not_found");
});

test("dim-agnostic: the grid8 model advertises and serves 64 dims", async () => {
  const small = createService("grid8");
  await new Promise<void>((resolve) => small.listen(0, "127.0.0.1", resolve));
  const addr = small.address();
  if (addr === null || typeof addr === "string") throw new Error("no port");
  const smallBase = `http://127.0.0.1:${addr.port}`;
  try {
    const info = await (await fetch(`${smallBase}/v1/info`)).json();
    assert.equal(info.embedding_dim, 64);
    const res = await fetch(`${smallBase}/v1/embed`, {
      method: "POST", body: new Uint8Array(fixture("id000_cap00.pgm")),
    });
    const json = await res.json();
    assert.equal(json.embedding.length, 64);
  } finally {
    small.close();
  }
});
