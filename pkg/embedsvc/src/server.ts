// HTTP surface: /v1/info, /v1/embed, /v1/landmarks. Stateless; every
// failure returns a JSON body with a machine-readable code.

import * as http from "node:http";
import { DecodeError } from "./pnm.js";
import {
  LANDMARK_COUNT,
  MODELS,
  ModelSpec,
  NoFaceError,
  decodeImage,
  embed,
  landmarks,
} from "./model.js";

function sendJson(res: http.ServerResponse, status: number, body: unknown): void {
  const payload = Buffer.from(JSON.stringify(body));
  res.writeHead(status, {
    "Content-Type": "application/json",
    "Content-Length": payload.length,
  });
  res.end(payload);
}

function sendError(res: http.ServerResponse, status: number, code: string,
                   message: string): void {
  sendJson(res, status, { error: { code, message } });
}

function readBody(req: http.IncomingMessage, limit: number): Promise<Buffer> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    let size = 0;
    req.on("data", (chunk: Buffer) => {
      size += chunk.length;
      if (size > limit) {
        reject(new DecodeError("body too large"));
        req.destroy();
        return;
      }
      chunks.push(chunk);
    });
    req.on("end", () => resolve(Buffer.concat(chunks)));
    req.on("error", reject);
  });
}

const BODY_LIMIT = 32 * 1024 * 1024;

export function createService(modelName: string): http.Server {
  const model: ModelSpec | undefined = MODELS[modelName];
  if (!model) {
    throw new Error(`unknown model ${modelName}; choose one of ${Object.keys(MODELS).join(", ")}`);
  }
  const dim = model.grid * model.grid;
  const info = {
    model_name: model.name,
    embedding_dim: dim,
    landmark_count: LANDMARK_COUNT,
    version: model.version,
  };

  return http.createServer(async (req, res) => {
    try {
      if (req.method === "GET" && req.url === "/v1/info") {
        sendJson(res, 200, info);
        return;
      }
      if (req.method === "POST" && (req.url === "/v1/embed" || req.url === "/v1/landmarks")) {
        const body = await readBody(req, BODY_LIMIT);
        let img;
        try {
          img = decodeImage(body);
        } catch (err) {
          if (err instanceof DecodeError) {
            sendError(res, 400, "undecodable_image", err.message);
            return;
          }
          throw err;
        }
        try {
          if (req.url === "/v1/embed") {
            sendJson(res, 200, { embedding: embed(img, model) });
          } else {
            sendJson(res, 200, { points: landmarks(img) });
          }
        } catch (err) {
          if (err instanceof NoFaceError) {
            sendError(res, 422, "no_face", err.message);
            return;
          }
          throw err;
        }
        return;
      }
      sendError(res, 404, "not_found", `no route for ${req.method} ${req.url}`);
    } catch (err) {
      sendError(res, 500, "model_failure", String(err));
    }
  });
}
