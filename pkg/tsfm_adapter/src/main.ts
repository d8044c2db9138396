#!/usr/bin/env node
/**
 * Stdio forecast adapter entry point.
 *
 * Reads line-delimited JSON from stdin, answers on stdout, and keeps the
 * loop strictly serial: one request is fully answered before the next
 * line is processed, so replies always come back in request order.
 */

import { createInterface } from "node:readline";
import { parseArgs } from "node:util";

import {
  Backend,
  BackendUnavailableError,
  BACKEND_NAMES,
  createBackend,
} from "./backends.js";
import {
  encodeLine,
  decodeLine,
  validateForecast,
  OutboundMessage,
  ProtocolError,
  RequestValidationError,
  PROTOCOL_VERSION,
} from "./protocol.js";

function send(message: OutboundMessage): void {
  process.stdout.write(encodeLine(message));
}

function sendError(id: number | null, message: string): void {
  send({ type: "error", id, message });
}

async function handleForecast(backend: Backend, message: Record<string, unknown>): Promise<void> {
  const rawId = message["id"];
  const replyId = typeof rawId === "number" ? rawId : null;
  let input;
  try {
    input = validateForecast(message);
  } catch (err) {
    if (err instanceof RequestValidationError) {
      sendError(replyId, `bad forecast request: ${err.message}`);
      return;
    }
    throw err;
  }
  try {
    const { forecast, metadata } = await backend.forecast({
      history: input.history,
      horizon: input.horizon,
      intervalSeconds: input.intervalSeconds,
    });
    send({ type: "forecast_result", id: input.id, forecast, metadata });
  } catch (err) {
    if (err instanceof BackendUnavailableError) {
      sendError(input.id, err.message);
      return;
    }
    sendError(input.id, `backend ${backend.name} failed: ${(err as Error).message}`);
  }
}

export async function serve(backend: Backend): Promise<number> {
  const lines = createInterface({ input: process.stdin, crlfDelay: Infinity });
  for await (const raw of lines) {
    const line = raw.trim();
    if (line === "") continue;
    let message: Record<string, unknown>;
    try {
      message = decodeLine(line);
    } catch (err) {
      if (err instanceof ProtocolError) {
        sendError(null, err.message);
        continue;
      }
      throw err;
    }
    const type = message["type"];
    if (type === "hello") {
      // The options mapping is free-form configuration; it is reported
      // here so drivers can log exactly what this process will run.
      send({
        type: "hello",
        protocol: PROTOCOL_VERSION,
        name: `tsfm-${backend.name}`,
        backends: [...BACKEND_NAMES],
        options: backend.options,
      });
      continue;
    }
    if (type === "shutdown") {
      return 0;
    }
    if (type === "forecast") {
      await handleForecast(backend, message);
      continue;
    }
    const rawId = message["id"];
    sendError(
      typeof rawId === "number" ? rawId : null,
      `unknown message type ${JSON.stringify(type)}`,
    );
  }
  return 0;
}

function parseOptions(pairs: string[]): Record<string, string> {
  const options: Record<string, string> = {};
  for (const pair of pairs) {
    const eq = pair.indexOf("=");
    if (eq <= 0) {
      throw new Error(`model options take the form key=value, got ${JSON.stringify(pair)}`);
    }
    options[pair.slice(0, eq)] = pair.slice(eq + 1);
  }
  return options;
}

export async function main(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      backend: { type: "string", default: "seasonal-naive" },
      "model-option": { type: "string", multiple: true, default: [] },
    },
  });
  const backend = createBackend(
    values.backend as string,
    parseOptions(values["model-option"] as string[]),
  );
  return serve(backend);
}

main(process.argv.slice(2))
  .then((code) => process.exit(code))
  .catch((err) => {
    process.stderr.write(`${(err as Error).message}\n`);
    process.exit(2);
  });
