"""Classical multivariate forecasters over count series.

Every forecaster consumes a ForecastRequest holding a (t, d) history matrix
and returns real-valued forecasts shaped (horizon, d).  Rounding back to
counts is a separate, explicit postprocessing step so that metric code can
choose whether to evaluate raw or integerized forecasts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = [
    "DEFAULT_MA_WINDOW",
    "DEFAULT_ARIMA_ORDER",
    "DEFAULT_VAR_MAX_LAG",
    "RIDGE_LAMBDA",
    "KNOWN_MODEL_KINDS",
    "ForecastRequest",
    "ForecastResponse",
    "ModelSpec",
    "InsufficientHistoryError",
    "SingularDesignError",
    "forecast_persistence",
    "forecast_seasonal_naive",
    "forecast_ma",
    "forecast_arima",
    "forecast_var",
    "forecast_with_spec",
    "postprocess",
    "postprocess_counts",
]

DEFAULT_MA_WINDOW = 3
DEFAULT_ARIMA_ORDER = (2, 1, 2)
DEFAULT_VAR_MAX_LAG = 3
RIDGE_LAMBDA = 1e-8

KNOWN_MODEL_KINDS = ("persistence", "seasonal_naive", "ma", "arima", "var", "external")


class InsufficientHistoryError(ValueError):
    """History is too short for the requested model order."""


class SingularDesignError(ValueError):
    """The least-squares design matrix is rank deficient."""


@dataclass(eq=False)
class ForecastRequest:
    """History matrix plus how far and at what cadence to forecast."""

    history: np.ndarray
    horizon: int
    interval_seconds: float
    series_id: str = ""

    def __post_init__(self):
        arr = np.asarray(self.history, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise ValueError(f"history must be 1-D or 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"history must be non-empty, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("history contains non-finite values")
        arr = arr.copy()
        arr.setflags(write=False)
        self.history = arr
        if not isinstance(self.horizon, (int, np.integer)) or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon!r}")
        self.horizon = int(self.horizon)
        if not (float(self.interval_seconds) > 0):
            raise ValueError(f"interval_seconds must be positive, got {self.interval_seconds!r}")
        self.interval_seconds = float(self.interval_seconds)

    @property
    def t(self) -> int:
        return self.history.shape[0]

    @property
    def d(self) -> int:
        return self.history.shape[1]


@dataclass(eq=False)
class ForecastResponse:
    """Real-valued forecast shaped (horizon, d) plus model metadata."""

    forecast: np.ndarray
    series_id: str = ""
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.forecast, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"forecast must be 2-D, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("forecast contains non-finite values")
        arr = arr.copy()
        arr.setflags(write=False)
        self.forecast = arr


def _validate_int(params: dict, key: str, minimum: int) -> None:
    value = params[key]
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < minimum:
        raise ValueError(f"model parameter {key!r} must be an integer >= {minimum}, got {value!r}")


@dataclass(frozen=True)
class ModelSpec:
    """Which forecaster to run and with what parameters."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = str(self.kind).lower()
        object.__setattr__(self, "kind", kind)
        if kind not in KNOWN_MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; known: {KNOWN_MODEL_KINDS}")
        params = dict(self.params)
        if kind == "ma":
            params.setdefault("window", DEFAULT_MA_WINDOW)
            _validate_int(params, "window", 1)
        elif kind == "arima":
            order = params.setdefault("order", DEFAULT_ARIMA_ORDER)
            if (
                not isinstance(order, (tuple, list))
                or len(order) != 3
                or any(not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 0 for v in order)
            ):
                raise ValueError(f"arima order must be three non-negative integers, got {order!r}")
            p, d, q = (int(v) for v in order)
            if p + q == 0 and d == 0:
                raise ValueError("arima order (0, 0, 0) specifies no model")
            params["order"] = (p, d, q)
        elif kind == "var":
            params.setdefault("max_lag", DEFAULT_VAR_MAX_LAG)
            _validate_int(params, "max_lag", 1)
            params.setdefault("allow_ridge", False)
            params.setdefault("select_order", True)
            for flag in ("allow_ridge", "select_order"):
                if not isinstance(params[flag], bool):
                    raise ValueError(f"model parameter {flag!r} must be a boolean")
        elif kind == "external":
            command = params.get("command")
            if not (
                isinstance(command, (list, tuple))
                and command
                and all(isinstance(part, str) for part in command)
            ):
                raise ValueError("external model requires a 'command' list of strings")
            params["command"] = tuple(command)
        elif params:
            raise ValueError(f"model kind {kind!r} accepts no parameters, got {sorted(params)}")
        object.__setattr__(self, "params", params)


def _response(request: ForecastRequest, forecast: np.ndarray, **metadata) -> ForecastResponse:
    arr = np.asarray(forecast, dtype=np.float64)
    if arr.shape != (request.horizon, request.d):
        raise AssertionError(f"internal: forecast shape {arr.shape}")
    return ForecastResponse(forecast=arr, series_id=request.series_id, metadata=metadata)


def forecast_persistence(request: ForecastRequest) -> ForecastResponse:
    """Repeat the last observed vector for every horizon step."""
    last = request.history[-1]
    return _response(request, np.tile(last, (request.horizon, 1)), model="persistence")


def forecast_seasonal_naive(request: ForecastRequest) -> ForecastResponse:
    """Repeat the value one season ago; season is one day of intervals.

    The season length rounds 86400 / interval_seconds and is clipped to
    [1, t], so sub-daily histories degrade toward persistence instead of
    failing.
    """
    season = int(round(86400.0 / request.interval_seconds))
    season = max(1, min(season, request.t))
    rows = [
        request.history[request.t - season + (h % season)] for h in range(request.horizon)
    ]
    return _response(request, np.stack(rows), model="seasonal_naive", season=season)


def forecast_ma(request: ForecastRequest, window: int = DEFAULT_MA_WINDOW) -> ForecastResponse:
    """Mean of the trailing window; multi-step recursion appends forecasts.

    Each step forecasts the mean of the last min(window, available) vectors,
    then the forecast joins the series before the next step.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    series = list(request.history)
    out = np.empty((request.horizon, request.d), dtype=np.float64)
    for step in range(request.horizon):
        effective = min(window, len(series))
        out[step] = np.mean(series[-effective:], axis=0)
        series.append(out[step])
    return _response(request, out, model="ma", window=window)


def _ols(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    solution, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < design.shape[1]:
        raise SingularDesignError(
            f"design matrix rank {rank} < {design.shape[1]} columns"
        )
    return solution


def _lagged_design(series: np.ndarray, order: int, start: int) -> np.ndarray:
    """Rows t = start..end with columns [series[t-1], ..., series[t-order]]."""
    return np.column_stack([series[start - k : len(series) - k] for k in range(1, order + 1)])


def _hr_fit(series: np.ndarray, p: int, q: int) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Two-stage least-squares ARMA fit on a 1-D series.

    Stage one fits a long autoregression to proxy the innovations; stage two
    regresses the series on its own lags and the proxy innovation lags.
    Returns (intercept, ar coefficients, ma coefficients, innovations).
    """
    nw = len(series)
    if q == 0:
        start = p
        if nw - start < p + 2:
            raise InsufficientHistoryError(
                f"need at least {2 * p + 2} observations after differencing for ar({p}), got {nw}"
            )
        design = np.column_stack([np.ones(nw - start), _lagged_design(series, p, start)])
        beta = _ols(design, series[start:])
        intercept = float(beta[0])
        phi = beta[1:]
        theta = np.empty(0)
    else:
        long_order = max(8, 2 * (p + q))
        start1 = long_order
        if nw - start1 < long_order + 2:
            raise InsufficientHistoryError(
                f"need at least {2 * long_order + 2} observations after differencing "
                f"for arma({p},{q}), got {nw}"
            )
        design1 = np.column_stack(
            [np.ones(nw - start1), _lagged_design(series, long_order, start1)]
        )
        beta1 = _ols(design1, series[start1:])
        proxy = np.zeros(nw)
        proxy[start1:] = series[start1:] - design1 @ beta1

        start = max(p, start1 + q)
        if nw - start < p + q + 2:
            raise InsufficientHistoryError(
                f"need at least {start + p + q + 2} observations after differencing "
                f"for arma({p},{q}), got {nw}"
            )
        blocks = [np.ones(nw - start)]
        if p:
            blocks.append(_lagged_design(series, p, start))
        blocks.append(_lagged_design(proxy, q, start))
        design2 = np.column_stack(blocks)
        beta2 = _ols(design2, series[start:])
        intercept = float(beta2[0])
        phi = beta2[1 : 1 + p]
        theta = beta2[1 + p :]

    # Innovations recursion over the full series, missing lags treated as zero.
    resid = np.zeros(nw)
    for t in range(nw):
        fitted = intercept
        for k in range(1, min(p, t) + 1):
            fitted += phi[k - 1] * series[t - k]
        for k in range(1, min(q, t) + 1):
            fitted += theta[k - 1] * resid[t - k]
        resid[t] = series[t] - fitted
    return intercept, phi, theta, resid


def _arima_forecast_1d(
    series: np.ndarray, order: tuple[int, int, int], horizon: int
) -> tuple[np.ndarray, dict]:
    p, d, q = order
    if len(series) < d + 1:
        raise InsufficientHistoryError(
            f"need at least {d + 1} observations to difference {d} time(s), got {len(series)}"
        )
    work = series.astype(np.float64)
    tails = []
    for _ in range(d):
        tails.append(work[-1])
        work = np.diff(work)

    fit = {"intercept": 0.0, "ar": np.empty(0), "ma": np.empty(0), "degenerate": None}
    if p + q == 0:
        # Pure noise after differencing, no intercept: forecast zero change,
        # which integrates back to flat persistence.
        future = np.zeros(horizon)
        fit["degenerate"] = "no_arma_terms"
    elif np.ptp(work) == 0.0:
        # A constant (possibly differenced) series makes every lag column
        # collinear with the intercept; forecast the constant directly.
        future = np.full(horizon, work[-1] if len(work) else 0.0)
        fit["degenerate"] = "constant_series"
    else:
        intercept, phi, theta, resid = _hr_fit(work, p, q)
        fit.update(intercept=intercept, ar=phi, ma=theta)
        nw = len(work)
        future = np.zeros(horizon)
        for step in range(1, horizon + 1):
            value = intercept
            for k in range(1, p + 1):
                idx = step - k
                value += phi[k - 1] * (future[idx - 1] if idx >= 1 else work[nw + idx - 1])
            for k in range(1, q + 1):
                idx = step - k
                if idx < 1 and nw + idx - 1 >= 0:
                    value += theta[k - 1] * resid[nw + idx - 1]
            future[step - 1] = value

    for tail in reversed(tails):
        future = tail + np.cumsum(future)
    return future, fit


def forecast_arima(
    request: ForecastRequest, order: tuple[int, int, int] = DEFAULT_ARIMA_ORDER
) -> ForecastResponse:
    """Per-dimension ARIMA via two-stage least squares.

    Each column of the history is fit independently.  A column that is
    constant after differencing short-circuits to its constant forecast,
    which makes order (0, 1, 0) coincide with persistence exactly.
    Fitted coefficients land in the response metadata under "fits".
    """
    p, d, q = (int(v) for v in order)
    if min(p, d, q) < 0:
        raise ValueError(f"arima order must be non-negative, got {order!r}")
    if p + q == 0 and d == 0:
        raise ValueError("arima order (0, 0, 0) specifies no model")
    columns = []
    fits = []
    for j in range(request.d):
        try:
            future, fit = _arima_forecast_1d(request.history[:, j], (p, d, q), request.horizon)
        except (InsufficientHistoryError, SingularDesignError) as exc:
            label = request.series_id or "series"
            raise type(exc)(f"{label}, dimension {j}: {exc}") from exc
        columns.append(future)
        fits.append(fit)
    return _response(
        request, np.column_stack(columns), model="arima", order=(p, d, q), fits=fits
    )


def _var_fit(history: np.ndarray, lag: int, allow_ridge: bool):
    """Least-squares VAR(lag) with intercept.  Returns (coef, aic, used_ridge).

    coef has shape (1 + d*lag, d): intercept row first, then lag-1 block
    through lag-`lag` block.
    """
    t, d = history.shape
    nobs = t - lag
    design = np.ones((nobs, 1 + d * lag))
    for k in range(1, lag + 1):
        design[:, 1 + (k - 1) * d : 1 + k * d] = history[lag - k : t - k]
    target = history[lag:]

    used_ridge = False
    try:
        coef = _ols(design, target)
    except SingularDesignError as exc:
        if not allow_ridge:
            raise SingularDesignError(
                f"var lag {lag}: {exc}; set allow_ridge to fall back to ridge regression"
            ) from exc
        gram = design.T @ design + RIDGE_LAMBDA * np.eye(design.shape[1])
        coef = np.linalg.solve(gram, design.T @ target)
        used_ridge = True

    resid = target - design @ coef
    sigma = (resid.T @ resid) / nobs
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        aic = -np.inf  # degenerate (near-perfect) fit; treat as best possible
    else:
        aic = logdet + 2.0 * (d * (d * lag + 1)) / nobs
    return coef, aic, used_ridge


def forecast_var(
    request: ForecastRequest,
    max_lag: int = DEFAULT_VAR_MAX_LAG,
    allow_ridge: bool = False,
    select_order: bool = True,
) -> ForecastResponse:
    """Vector autoregression with least-squares fit and AIC lag selection.

    With select_order, lag orders 1..max_lag are fit when the history
    supports them and the smallest AIC wins (ties to the smaller lag);
    otherwise the lag is exactly max_lag.  A history whose rows are all
    identical short-circuits to persistence, since every lag column would
    be collinear with the intercept.  The fitted coefficient matrix
    (intercept row, then lag blocks) lands in the response metadata.
    """
    if max_lag < 1:
        raise ValueError(f"max_lag must be >= 1, got {max_lag}")
    history = request.history
    t, d = history.shape

    if np.all(history == history[0]):
        resp = forecast_persistence(request)
        resp.metadata.update(model="var", degenerate="constant_history")
        return resp

    candidates = list(range(1, max_lag + 1)) if select_order else [max_lag]
    feasible = [lag for lag in candidates if t >= d * lag + lag + 2]
    if not feasible:
        raise InsufficientHistoryError(
            f"history of {t} rows supports no var lag in {candidates} at dimension {d} "
            f"(need t >= d*lag + lag + 2)"
        )

    best = None
    failures = []
    for lag in feasible:
        try:
            coef, aic, used_ridge = _var_fit(history, lag, allow_ridge)
        except SingularDesignError as exc:
            failures.append(str(exc))
            continue
        if best is None or aic < best[1]:
            best = (lag, aic, coef, used_ridge)
    if best is None:
        raise SingularDesignError(
            "every candidate var design was rank deficient: " + "; ".join(failures)
        )

    lag, aic, coef, used_ridge = best
    state = history[t - lag : t].copy()
    future = np.zeros((request.horizon, d))
    for step in range(request.horizon):
        row = np.ones(1 + d * lag)
        for k in range(1, lag + 1):
            row[1 + (k - 1) * d : 1 + k * d] = state[lag - k]
        prediction = row @ coef
        future[step] = prediction
        if lag > 1:
            state[:-1] = state[1:]
        state[-1] = prediction
    return _response(
        request, future, model="var", selected_lag=lag, aic=float(aic),
        used_ridge=used_ridge, max_lag=max_lag, coefficients=coef.copy(),
    )


def forecast_with_spec(request: ForecastRequest, spec: ModelSpec) -> ForecastResponse:
    """Dispatch to the in-process forecaster named by the model spec.

    External models are driven through the adapter bridge, not here.
    """
    if spec.kind == "persistence":
        return forecast_persistence(request)
    if spec.kind == "seasonal_naive":
        return forecast_seasonal_naive(request)
    if spec.kind == "ma":
        return forecast_ma(request, window=spec.params["window"])
    if spec.kind == "arima":
        return forecast_arima(request, order=spec.params["order"])
    if spec.kind == "var":
        return forecast_var(
            request,
            max_lag=spec.params["max_lag"],
            allow_ridge=spec.params["allow_ridge"],
            select_order=spec.params["select_order"],
        )
    raise ValueError(f"model kind {spec.kind!r} cannot be forecast in-process")


def postprocess_counts(forecast: np.ndarray) -> np.ndarray:
    """Clamp negatives to zero, then round half-to-even into int64 counts."""
    arr = np.asarray(forecast, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("forecast contains non-finite values")
    return np.round(np.clip(arr, 0.0, None)).astype(np.int64)


def postprocess(
    response: ForecastResponse,
    clamp_nonnegative: bool = True,
    round_to_integer: bool = True,
) -> ForecastResponse:
    """Clamp negatives to zero, then round half-to-even, in that order.

    Either step can be switched off; the result is a new response whose
    metadata records what was applied.  Idempotent for any flag choice.
    """
    arr = np.array(response.forecast, dtype=np.float64)
    if clamp_nonnegative:
        arr = np.clip(arr, 0.0, None)
    if round_to_integer:
        arr = np.round(arr)
    metadata = dict(response.metadata)
    metadata["postprocess"] = {
        "clamp_nonnegative": clamp_nonnegative,
        "round_to_integer": round_to_integer,
    }
    return ForecastResponse(forecast=arr, series_id=response.series_id, metadata=metadata)
