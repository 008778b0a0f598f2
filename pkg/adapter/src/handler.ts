/**
 * Wire protocol v1 request handling.
 *
 * Validation order, error codes, error messages, and response key order
 * are all part of the contract: a conforming peer run against the same
 * requests must produce byte-identical response lines.
 */

import { dummyClassification, dummyDetections, dummyMasks } from "./dummy.js";

export const PROTOCOL_VERSION = 1;

const OPS = ["detect", "segment", "classify"] as const;

const M32 = 4294967296;

export type Json = unknown;

export type Response = Record<string, unknown>;

export interface ErrorResponse extends Response {
  request_id: string;
  error: { code: string; message: string };
}

export type HandlerHooks = {
  detect: (request: Record<string, unknown>) => Response;
  segment: (request: Record<string, unknown>) => Response;
  classify: (request: Record<string, unknown>) => Response;
};

export function errorResponse(requestId: string, code: string, message: string): ErrorResponse {
  return { request_id: requestId, error: { code, message } };
}

function isPlainObject(value: Json): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function isPlainInt(value: unknown): value is number {
  return typeof value === "number" && Number.isInteger(value);
}

function imageDims(request: Record<string, unknown>): [number, number] | null {
  const image = request["image"];
  if (!isPlainObject(image)) return null;
  const width = image["width"];
  const height = image["height"];
  if (!isPlainInt(width) || !isPlainInt(height) || width < 1 || height < 1) return null;
  return [width, height];
}

export function makeHandler(seed: number, hooks?: HandlerHooks) {
  const normalizedSeed = ((seed % M32) + M32) % M32;

  return function handle(request: Json): Response {
    if (!isPlainObject(request)) {
      return errorResponse("", "malformed", "request is not an object");
    }
    const rid = request["request_id"];
    if (typeof rid !== "string") {
      return errorResponse("", "malformed", "missing request_id");
    }
    if (request["protocol_version"] !== PROTOCOL_VERSION) {
      return errorResponse(rid, "version", "unsupported protocol_version");
    }
    const op = request["op"];
    if (typeof op !== "string" || !(OPS as readonly string[]).includes(op)) {
      return errorResponse(rid, "unsupported_op", "unsupported op");
    }
    const dims = imageDims(request);
    if (dims === null) {
      return errorResponse(rid, "malformed", "bad image element");
    }
    const [width, height] = dims;

    if (hooks) {
      try {
        const result = hooks[op as keyof HandlerHooks](request);
        return { request_id: rid, ...result };
      } catch (err) {
        return errorResponse(rid, "handler_error", String(err));
      }
    }

    if (op === "detect") {
      return { request_id: rid, detections: dummyDetections(normalizedSeed, width, height) };
    }
    if (op === "segment") {
      const prompts = request["prompts"];
      const valid =
        Array.isArray(prompts) &&
        prompts.every(
          (p) => Array.isArray(p) && p.length === 4 && p.every((v) => isPlainInt(v)),
        );
      if (!valid) {
        return errorResponse(rid, "malformed", "bad prompts element");
      }
      return {
        request_id: rid,
        masks: dummyMasks(normalizedSeed, width, height, prompts as number[][]),
      };
    }
    const mask = request["mask"];
    const maskValid =
      isPlainObject(mask) &&
      isPlainInt(mask["width"]) &&
      isPlainInt(mask["height"]) &&
      Array.isArray(mask["counts"]) &&
      (mask["counts"] as unknown[]).every((c) => isPlainInt(c));
    if (!maskValid) {
      return errorResponse(rid, "malformed", "bad mask element");
    }
    const m = mask as { width: number; height: number; counts: number[] };
    // canonical RLE: non-empty, only the first run may be zero, runs sum to the area
    const canonical =
      m.counts.length > 0 &&
      m.counts[0] >= 0 &&
      m.counts.slice(1).every((c) => c > 0) &&
      m.counts.reduce((a, b) => a + b, 0) === m.width * m.height;
    if (!canonical) {
      return errorResponse(rid, "malformed", "bad mask element");
    }
    if (m.width !== width || m.height !== height) {
      return errorResponse(rid, "malformed", "mask dimensions do not match image");
    }
    const result = dummyClassification(normalizedSeed, m.counts, m.width);
    if ("error" in result) {
      return errorResponse(rid, result.error.code, result.error.message);
    }
    return {
      request_id: rid,
      genus: result.genus,
      confidence: result.confidence,
      alternates: result.alternates,
    };
  };
}
