"""Bridge to external forecasting adapters over line-delimited JSON stdio.

An adapter is any subprocess that speaks the wire protocol: the bridge
opens with a hello line, the adapter replies with its own hello, then
answers forecast requests by id and exits when told to shut down.  One
message per line, UTF-8 JSON, LF-terminated, no framing beyond the newline.
Unknown fields in a message are ignored for forward compatibility; a
message whose type is unknown is a protocol error.
"""

from __future__ import annotations

import itertools
import json
import subprocess
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .forecasters import ForecastRequest, ForecastResponse, forecast_persistence

__all__ = [
    "PROTOCOL_VERSION",
    "STDERR_TAIL_LINES",
    "AdapterConfig",
    "AdapterError",
    "HandshakeError",
    "AdapterProtocolError",
    "AdapterCrashError",
    "AdapterTimeoutError",
    "RemoteModelError",
    "ExitReport",
    "AdapterSession",
    "LoopbackPersistenceAdapter",
    "encode_message",
    "decode_message",
]

PROTOCOL_VERSION = 1
STDERR_TAIL_LINES = 50


class AdapterError(RuntimeError):
    """Base class for adapter bridge failures."""


class HandshakeError(AdapterError):
    """The adapter did not produce a valid hello message in time."""


class AdapterProtocolError(AdapterError):
    """The adapter sent something the protocol does not allow."""


class AdapterCrashError(AdapterError):
    """The adapter process died while requests were outstanding."""


class AdapterTimeoutError(AdapterError):
    """The adapter did not answer a request within the deadline."""


class RemoteModelError(AdapterError):
    """The adapter reported a model-level failure for one request."""


def encode_message(message: dict) -> str:
    """One protocol message as a compact JSON line (newline included)."""
    return json.dumps(message, separators=(",", ":"), ensure_ascii=False) + "\n"


def decode_message(line: str) -> dict:
    """Parse one protocol line; the payload must be a JSON object."""
    try:
        payload = json.loads(line)
    except json.JSONDecodeError as exc:
        raise AdapterProtocolError(f"adapter sent invalid JSON: {line!r}") from exc
    if not isinstance(payload, dict):
        raise AdapterProtocolError(f"adapter message must be a JSON object, got: {line!r}")
    return payload


@dataclass(frozen=True)
class AdapterConfig:
    """How to launch and pace an external adapter process."""

    command: tuple[str, ...]
    max_in_flight: int = 1
    handshake_timeout: float = 10.0
    request_timeout: float = 60.0
    shutdown_timeout: float = 5.0

    def __post_init__(self):
        if not self.command or not all(isinstance(part, str) for part in self.command):
            raise ValueError("adapter command must be a non-empty sequence of strings")
        object.__setattr__(self, "command", tuple(self.command))
        if self.max_in_flight < 1:
            raise ValueError(f"max_in_flight must be >= 1, got {self.max_in_flight}")


@dataclass
class ExitReport:
    """How an adapter session ended."""

    returncode: int | None
    clean: bool
    stderr_tail: list[str] = field(default_factory=list)


class _Waiter:
    __slots__ = ("event", "result", "error")

    def __init__(self):
        self.event = threading.Event()
        self.result: dict | None = None
        self.error: AdapterError | None = None


class AdapterSession:
    """A live adapter subprocess with one reader thread routing replies.

    Thread safe: multiple callers may issue forecasts concurrently, limited
    by max_in_flight.  Use as a context manager or call shutdown() when done.
    """

    def __init__(self, config: AdapterConfig):
        self.config = config
        self.hello: dict | None = None
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        self._waiters: dict[int, _Waiter] = {}
        self._slots = threading.Semaphore(config.max_in_flight)
        self._fatal: AdapterError | None = None
        self._hello_event = threading.Event()
        self._stderr_tail: deque[str] = deque(maxlen=STDERR_TAIL_LINES)
        self._shutdown_sent = False
        self._exit_report: ExitReport | None = None

        try:
            self._proc = subprocess.Popen(
                list(config.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise HandshakeError(f"failed to launch adapter {config.command}: {exc}") from exc

        self._reader = threading.Thread(target=self._read_stdout, daemon=True)
        self._reader.start()
        self._drainer = threading.Thread(target=self._drain_stderr, daemon=True)
        self._drainer.start()

        try:
            self._send({"type": "hello", "protocol": PROTOCOL_VERSION})
        except AdapterError as exc:
            self._kill()
            raise HandshakeError(f"could not greet adapter: {exc}") from exc
        if not self._hello_event.wait(config.handshake_timeout):
            self._kill()
            raise HandshakeError(
                f"adapter produced no hello within {config.handshake_timeout}s"
                + self._stderr_suffix()
            )
        if self._fatal is not None:
            self._kill()
            raise HandshakeError(f"adapter failed during handshake: {self._fatal}")
        assert self.hello is not None
        if self.hello.get("protocol") != PROTOCOL_VERSION:
            self._kill()
            raise HandshakeError(
                f"adapter speaks protocol {self.hello.get('protocol')!r}, "
                f"need {PROTOCOL_VERSION}"
            )

    def __enter__(self) -> "AdapterSession":
        return self

    def __exit__(self, *exc_info) -> None:
        self.shutdown()

    # -- background threads -------------------------------------------------

    def _read_stdout(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                message = decode_message(line)
                self._route(message)
            except AdapterError as exc:
                self._fail_all(exc)
                return
        # EOF: the process closed stdout, usually by exiting.
        if not self._shutdown_sent:
            self._fail_all(AdapterCrashError("adapter closed its output" + self._stderr_suffix()))
        else:
            self._fail_all(None)

    def _drain_stderr(self) -> None:
        assert self._proc.stderr is not None
        for line in self._proc.stderr:
            self._stderr_tail.append(line.rstrip("\n"))

    def _route(self, message: dict) -> None:
        mtype = message.get("type")
        if mtype == "hello":
            if self.hello is None:
                self.hello = message
                self._hello_event.set()
            return
        if mtype == "forecast_result":
            self._deliver(message, error=None)
            return
        if mtype == "error":
            if "id" in message and message["id"] is not None:
                self._deliver(
                    message,
                    error=RemoteModelError(str(message.get("message", "unspecified error"))),
                )
            else:
                raise AdapterProtocolError(
                    f"adapter reported a session error: {message.get('message')!r}"
                )
            return
        raise AdapterProtocolError(f"adapter sent unknown message type {mtype!r}")

    def _deliver(self, message: dict, error: AdapterError | None) -> None:
        request_id = message.get("id")
        with self._lock:
            waiter = self._waiters.pop(request_id, None)
        if waiter is None:
            return  # late reply after a timeout; drop it
        waiter.result = message
        waiter.error = error
        waiter.event.set()

    def _fail_all(self, error: AdapterError | None) -> None:
        with self._lock:
            if error is not None and self._fatal is None:
                self._fatal = error
            waiters = list(self._waiters.values())
            self._waiters.clear()
        for waiter in waiters:
            waiter.error = error or AdapterCrashError("adapter session closed")
            waiter.event.set()
        if error is not None and not self._hello_event.is_set():
            self._hello_event.set()

    def _stderr_suffix(self) -> str:
        tail = list(self._stderr_tail)
        return f"; stderr tail: {tail}" if tail else ""

    # -- requests ------------------------------------------------------------

    def _send(self, message: dict) -> None:
        payload = encode_message(message)
        with self._lock:
            if self._fatal is not None:
                raise self._fatal
            stdin = self._proc.stdin
            assert stdin is not None
            try:
                stdin.write(payload)
                stdin.flush()
            except (BrokenPipeError, ValueError, OSError) as exc:
                raise AdapterCrashError(
                    f"adapter stdin closed: {exc}" + self._stderr_suffix()
                ) from exc

    def forecast_remote(self, request: ForecastRequest) -> ForecastResponse:
        """Send one forecast request and block for its reply."""
        self._slots.acquire()
        try:
            request_id = next(self._ids)
            waiter = _Waiter()
            with self._lock:
                if self._fatal is not None:
                    raise self._fatal
                self._waiters[request_id] = waiter
            try:
                self._send(
                    {
                        "type": "forecast",
                        "id": request_id,
                        "history": request.history.tolist(),
                        "horizon": request.horizon,
                        "interval_seconds": request.interval_seconds,
                    }
                )
            except AdapterError:
                with self._lock:
                    self._waiters.pop(request_id, None)
                raise
            if not waiter.event.wait(self.config.request_timeout):
                with self._lock:
                    self._waiters.pop(request_id, None)
                raise AdapterTimeoutError(
                    f"adapter did not answer request {request_id} within "
                    f"{self.config.request_timeout}s"
                )
            if waiter.error is not None:
                raise waiter.error
            assert waiter.result is not None
            return self._parse_result(waiter.result, request)
        finally:
            self._slots.release()

    @staticmethod
    def _parse_result(message: dict, request: ForecastRequest) -> ForecastResponse:
        forecast = message.get("forecast")
        if not isinstance(forecast, list):
            raise AdapterProtocolError("forecast_result lacks a forecast array")
        try:
            arr = np.asarray(forecast, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise AdapterProtocolError(f"forecast values are not numeric: {exc}") from exc
        if arr.shape != (request.horizon, request.d):
            raise AdapterProtocolError(
                f"forecast shape {arr.shape} does not match "
                f"(horizon, d) = {(request.horizon, request.d)}"
            )
        if not np.isfinite(arr).all():
            raise AdapterProtocolError("forecast contains non-finite values")
        metadata = {"model": "external", "remote_id": message.get("id")}
        if isinstance(message.get("metadata"), dict):
            metadata["remote_metadata"] = message["metadata"]
        return ForecastResponse(forecast=arr, series_id=request.series_id, metadata=metadata)

    # -- teardown ------------------------------------------------------------

    def _kill(self) -> None:
        try:
            self._proc.kill()
        except OSError:
            pass
        self._proc.wait()

    def shutdown(self) -> ExitReport:
        """Ask the adapter to exit, escalating to kill if it lingers.

        Idempotent: repeated calls return the first call's report.
        """
        if self._exit_report is not None:
            return self._exit_report
        clean = True
        if self._proc.poll() is None:
            self._shutdown_sent = True
            try:
                self._send({"type": "shutdown"})
                if self._proc.stdin is not None:
                    self._proc.stdin.close()
            except AdapterError:
                clean = False
            try:
                self._proc.wait(timeout=self.config.shutdown_timeout)
            except subprocess.TimeoutExpired:
                clean = False
                self._proc.terminate()
                try:
                    self._proc.wait(timeout=2.0)
                except subprocess.TimeoutExpired:
                    self._proc.kill()
                    self._proc.wait()
        self._reader.join(timeout=2.0)
        self._drainer.join(timeout=2.0)
        self._fail_all(AdapterCrashError("adapter session shut down"))
        returncode = self._proc.returncode
        self._exit_report = ExitReport(
            returncode=returncode,
            clean=clean and returncode == 0,
            stderr_tail=list(self._stderr_tail),
        )
        return self._exit_report


class LoopbackPersistenceAdapter:
    """In-process stand-in for an external adapter, persistence behavior.

    Requests and replies pass through the same JSON encode/decode path as
    the subprocess stub, so numeric results are byte-identical to running
    the stub adapter out of process.
    """

    def __init__(self):
        self.hello = {"type": "hello", "protocol": PROTOCOL_VERSION, "name": "loopback"}
        self._ids = itertools.count(1)

    def __enter__(self) -> "LoopbackPersistenceAdapter":
        return self

    def __exit__(self, *exc_info) -> None:
        pass

    def forecast_remote(self, request: ForecastRequest) -> ForecastResponse:
        wire_request = decode_message(
            encode_message(
                {
                    "type": "forecast",
                    "id": next(self._ids),
                    "history": request.history.tolist(),
                    "horizon": request.horizon,
                    "interval_seconds": request.interval_seconds,
                }
            )
        )
        inner = ForecastRequest(
            history=np.asarray(wire_request["history"], dtype=np.float64),
            horizon=wire_request["horizon"],
            interval_seconds=wire_request["interval_seconds"],
        )
        result = forecast_persistence(inner)
        wire_reply = decode_message(
            encode_message(
                {
                    "type": "forecast_result",
                    "id": wire_request["id"],
                    "forecast": result.forecast.tolist(),
                }
            )
        )
        return AdapterSession._parse_result(wire_reply, request)

    def shutdown(self) -> ExitReport:
        return ExitReport(returncode=0, clean=True, stderr_tail=[])
