/**
 * Wire protocol types and helpers.
 *
 * One JSON object per line, UTF-8, LF-terminated. The driving process
 * opens with a hello naming its protocol version; the adapter replies
 * with its own hello and then answers forecast requests until shutdown.
 */

export const PROTOCOL_VERSION = 1;

export interface HelloMessage {
  type: "hello";
  protocol: number;
  name?: string;
  [extra: string]: unknown;
}

export interface ForecastMessage {
  type: "forecast";
  id: number;
  history: number[][];
  horizon: number;
  interval_seconds: number;
  [extra: string]: unknown;
}

export interface ShutdownMessage {
  type: "shutdown";
  [extra: string]: unknown;
}

export type InboundMessage = HelloMessage | ForecastMessage | ShutdownMessage;

export interface ForecastResultMessage {
  type: "forecast_result";
  id: number;
  forecast: number[][];
  metadata: Record<string, unknown>;
}

export interface ErrorMessage {
  type: "error";
  id: number | null;
  message: string;
}

export type OutboundMessage = HelloMessage | ForecastResultMessage | ErrorMessage;

/** Serialize one message as a single LF-terminated line. */
export function encodeLine(message: OutboundMessage): string {
  return JSON.stringify(message) + "\n";
}

export class ProtocolError extends Error {}

/** Parse one line into a JSON object; anything else is a protocol error. */
export function decodeLine(line: string): Record<string, unknown> {
  let value: unknown;
  try {
    value = JSON.parse(line);
  } catch (err) {
    throw new ProtocolError(`invalid JSON: ${(err as Error).message}`);
  }
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new ProtocolError("message must be a JSON object");
  }
  return value as Record<string, unknown>;
}

export class RequestValidationError extends Error {}

/**
 * Check a forecast request's payload: rectangular numeric history with at
 * least one row, a positive integer horizon, a positive interval.
 */
export function validateForecast(message: Record<string, unknown>): {
  id: number;
  history: number[][];
  horizon: number;
  intervalSeconds: number;
} {
  const id = message["id"];
  if (typeof id !== "number" || !Number.isInteger(id)) {
    throw new RequestValidationError("forecast request needs an integer id");
  }
  const history = message["history"];
  if (!Array.isArray(history) || history.length === 0) {
    throw new RequestValidationError("history must be a non-empty array of rows");
  }
  const rows: number[][] = [];
  let width: number | null = null;
  for (const row of history) {
    if (!Array.isArray(row) || row.length === 0) {
      throw new RequestValidationError("history rows must be non-empty arrays");
    }
    if (width === null) {
      width = row.length;
    } else if (row.length !== width) {
      throw new RequestValidationError("history rows must all have the same length");
    }
    for (const cell of row) {
      if (typeof cell !== "number" || !Number.isFinite(cell)) {
        throw new RequestValidationError("history values must be finite numbers");
      }
    }
    rows.push(row as number[]);
  }
  const horizon = message["horizon"];
  if (typeof horizon !== "number" || !Number.isInteger(horizon) || horizon < 1) {
    throw new RequestValidationError("horizon must be an integer >= 1");
  }
  const intervalSeconds = message["interval_seconds"];
  if (typeof intervalSeconds !== "number" || !(intervalSeconds > 0)) {
    throw new RequestValidationError("interval_seconds must be positive");
  }
  return { id, history: rows, horizon, intervalSeconds };
}
