"""
Driving an external forecaster over stdio
=========================================

Any forecasting process that speaks the line-delimited JSON protocol can
sit behind the same request/response contract as the in-process models.
This demo drives the bundled stub adapter (a persistence server) and
shows the crash-safe session lifecycle.
"""

import sys

import numpy as np

from odflow import AdapterConfig, AdapterSession, ForecastRequest, LoopbackPersistenceAdapter
from odflow.forecasters import forecast_persistence

request = ForecastRequest(
    history=np.array([[3.0, 1.0], [4.0, 6.0], [5.0, 2.0]]),
    horizon=2,
    interval_seconds=3600,
    series_id="origin-4",
)

# The session spawns the process, exchanges hello lines (the driver
# announces its protocol version first), and then pipelines requests.
config = AdapterConfig(
    command=(sys.executable, "-m", "odflow.stub_adapter"),
    request_timeout=10.0,
)
with AdapterSession(config) as session:
    print(f"handshake: {session.hello}")
    response = session.forecast_remote(request)
    print(f"remote forecast for {response.series_id}:\n{response.forecast}")
    report = session.shutdown()
print(f"exit: clean={report.clean} returncode={report.returncode}")

# The stub also serves the season-aware baseline.
seasonal_config = AdapterConfig(
    command=(sys.executable, "-m", "odflow.stub_adapter", "--mode", "seasonal"),
)
daily = np.arange(48, dtype=float).reshape(48, 1)
with AdapterSession(seasonal_config) as session:
    result = session.forecast_remote(
        ForecastRequest(history=daily, horizon=3, interval_seconds=1800)
    )
print(f"seasonal stub replays one season back: {result.forecast.ravel()}")

# Numbers cross the pipe as JSON and come back bit-identical: the
# loopback adapter runs the same codec in process to prove it.
with LoopbackPersistenceAdapter() as loop:
    via_wire = loop.forecast_remote(request).forecast
direct = forecast_persistence(request).forecast
print(f"wire round trip byte-identical: {via_wire.tobytes() == direct.tobytes()}")
