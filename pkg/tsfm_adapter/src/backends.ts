/**
 * Forecast backends.
 *
 * The seasonal-naive reference backend is pure index arithmetic and always
 * available. The pretrained-model backends (moirai, timesfm) are optional:
 * they load a runtime module lazily on first use, and when none is
 * installed every request gets the same stable error instead of the
 * process failing at startup.
 */

export const BACKEND_NAMES = ["seasonal-naive", "moirai", "timesfm"] as const;

export type BackendName = (typeof BACKEND_NAMES)[number];

export interface ForecastInput {
  history: number[][];
  horizon: number;
  intervalSeconds: number;
}

export interface ForecastOutput {
  forecast: number[][];
  metadata: Record<string, unknown>;
}

export interface Backend {
  readonly name: BackendName;
  readonly options: Record<string, string>;
  forecast(input: ForecastInput): Promise<ForecastOutput>;
}

export class BackendUnavailableError extends Error {}

/** Round half to even, matching the reference implementation's season math. */
export function roundHalfEven(value: number): number {
  const floor = Math.floor(value);
  const fraction = value - floor;
  if (fraction > 0.5) return floor + 1;
  if (fraction < 0.5) return floor;
  return floor % 2 === 0 ? floor : floor + 1;
}

/** One day expressed in intervals, clipped to the usable history length. */
export function seasonLength(intervalSeconds: number, historyLength: number): number {
  const season = roundHalfEven(86400 / intervalSeconds);
  return Math.max(1, Math.min(season, historyLength));
}

/**
 * Repeat the value one season back: step h reads
 * history[t - season + (h mod season)], wrapping within the last day.
 */
export function seasonalNaiveForecast(input: ForecastInput): ForecastOutput {
  const t = input.history.length;
  const season = seasonLength(input.intervalSeconds, t);
  const forecast: number[][] = [];
  for (let h = 0; h < input.horizon; h++) {
    const row = input.history[t - season + (h % season)];
    forecast.push([...(row as number[])]);
  }
  return { forecast, metadata: { backend: "seasonal-naive", season } };
}

class SeasonalNaiveBackend implements Backend {
  readonly name = "seasonal-naive";

  constructor(readonly options: Record<string, string>) {}

  async forecast(input: ForecastInput): Promise<ForecastOutput> {
    return seasonalNaiveForecast(input);
  }
}

/**
 * Duck-typed contract for a pretrained-model runtime: a module exporting
 * `forecast(history, horizon, intervalSeconds)` returning a (horizon x d)
 * array. The module specifier comes from the `module` option so deployments
 * can point at whatever package wraps their model weights.
 */
interface PretrainedRuntime {
  forecast(
    history: number[][],
    horizon: number,
    intervalSeconds: number,
  ): number[][] | Promise<number[][]>;
}

class PretrainedBackend implements Backend {
  private runtime: PretrainedRuntime | null = null;
  private loadFailure: string | null = null;

  constructor(
    readonly name: BackendName,
    readonly options: Record<string, string>,
  ) {}

  private async load(): Promise<PretrainedRuntime> {
    if (this.runtime) return this.runtime;
    if (this.loadFailure !== null) {
      throw new BackendUnavailableError(this.loadFailure);
    }
    const specifier = this.options["module"];
    try {
      if (!specifier) {
        throw new Error("no runtime module configured (pass --model-option module=<specifier>)");
      }
      const loaded = (await import(specifier)) as Partial<PretrainedRuntime>;
      if (typeof loaded.forecast !== "function") {
        throw new Error(`module ${specifier} does not export a forecast function`);
      }
      this.runtime = loaded as PretrainedRuntime;
      return this.runtime;
    } catch (err) {
      // Cache the failure so every request gets the same stable message.
      this.loadFailure = `backend ${this.name} unavailable: ${(err as Error).message}`;
      throw new BackendUnavailableError(this.loadFailure);
    }
  }

  async forecast(input: ForecastInput): Promise<ForecastOutput> {
    const runtime = await this.load();
    const forecast = await runtime.forecast(
      input.history,
      input.horizon,
      input.intervalSeconds,
    );
    return { forecast, metadata: { backend: this.name, options: this.options } };
  }
}

export function createBackend(name: string, options: Record<string, string>): Backend {
  switch (name) {
    case "seasonal-naive":
      return new SeasonalNaiveBackend(options);
    case "moirai":
    case "timesfm":
      return new PretrainedBackend(name, options);
    default:
      throw new Error(`unknown backend ${JSON.stringify(name)}; use one of ${BACKEND_NAMES.join(", ")}`);
  }
}
