"""Reference adapter process speaking the stdio forecast protocol.

Run as ``python -m odflow.stub_adapter [--mode persistence|seasonal]``.
The driving side opens with a hello line; this process replies with its
own hello and then answers every forecast request with the chosen
baseline model.  That makes it useful both as a protocol conformance
target and as a stand-in for heavier external models in tests and demos.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .adapter_bridge import PROTOCOL_VERSION, encode_message
from .forecasters import ForecastRequest, forecast_persistence, forecast_seasonal_naive

MODES = ("persistence", "seasonal")


def _emit(message: dict) -> None:
    sys.stdout.write(encode_message(message))
    sys.stdout.flush()


def _emit_error(request_id, text: str) -> None:
    _emit({"type": "error", "id": request_id, "message": text})


def _handle_forecast(message: dict, mode: str) -> None:
    request_id = message.get("id")
    try:
        history = np.asarray(message["history"], dtype=np.float64)
        request = ForecastRequest(
            history=history,
            horizon=message["horizon"],
            interval_seconds=message["interval_seconds"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        _emit_error(request_id, f"bad forecast request: {exc}")
        return
    if mode == "persistence":
        response = forecast_persistence(request)
    else:
        response = forecast_seasonal_naive(request)
    _emit(
        {
            "type": "forecast_result",
            "id": request_id,
            "forecast": response.forecast.tolist(),
            "metadata": {"mode": mode},
        }
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="odflow-stub-adapter",
        description="baseline forecast adapter over line-delimited JSON stdio",
    )
    parser.add_argument("--mode", choices=MODES, default="persistence")
    args = parser.parse_args(argv)

    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            _emit_error(None, f"invalid JSON: {exc}")
            continue
        if not isinstance(message, dict):
            _emit_error(None, "message must be a JSON object")
            continue
        mtype = message.get("type")
        if mtype == "hello":
            _emit(
                {
                    "type": "hello",
                    "protocol": PROTOCOL_VERSION,
                    "name": f"stub-{args.mode}",
                    "modes": list(MODES),
                }
            )
            continue
        if mtype == "shutdown":
            return 0
        if mtype == "forecast":
            _handle_forecast(message, args.mode)
            continue
        _emit_error(message.get("id"), f"unknown message type {mtype!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
