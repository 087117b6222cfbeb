"""Classifiers living in another process, reached over newline-delimited JSON.

Requests and responses are one JSON object per line on the child's stdin
and stdout::

    {"op": "fit", "examples": [{"text": ..., "label": ...}, ...]}  ->  {"ok": true}
    {"op": "predict", "text": ...}  ->  {"label": ..., "confidence": 0.87}

Any response may instead be ``{"ok": false, "error": ...}``.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
from typing import Sequence

from .base import ClassifierError, NotFittedError, Prediction

DEFAULT_TIMEOUT = 60.0


class AdapterError(ClassifierError):
    pass


class ProcessExitedError(AdapterError):
    pass


class ProtocolError(AdapterError):
    def __init__(self, message: str, line_number: int, line: str):
        super().__init__(f"protocol error at response line {line_number}: {message}: {line!r}")
        self.line_number = line_number
        self.line = line


class AdapterTimeout(AdapterError):
    pass


class RemoteError(AdapterError):
    pass


_EOF = object()


def _pump(stream, sink: queue.Queue) -> None:
    for line in iter(stream.readline, ""):
        sink.put(line)
    sink.put(_EOF)


class ExternalClassifier:
    """Proxy ``fit``/``predict`` to a child process speaking the line protocol.

    The child is started on first use and stopped by :meth:`close`. Process
    exit, malformed responses and timeouts raise distinct
    :class:`AdapterError` subclasses.
    """

    def __init__(self, command: str | Sequence[str], timeout: float = DEFAULT_TIMEOUT, cwd=None, env=None):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise AdapterError("empty command")
        self.timeout = timeout
        self.cwd = cwd
        self.env = env
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue = queue.Queue()
        self._lineno = 0
        self._fitted = False

    def _start(self) -> subprocess.Popen:
        if self._proc is None:
            self._lines = queue.Queue()
            self._lineno = 0
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.DEVNULL,
                    text=True,
                    encoding="utf-8",
                    bufsize=1,
                    cwd=self.cwd,
                    env=self.env,
                )
            except OSError as exc:
                raise ProcessExitedError(f"cannot start {self.command[0]!r}: {exc}") from exc
            threading.Thread(target=_pump, args=(self._proc.stdout, self._lines), daemon=True).start()
        return self._proc

    def _exit_message(self) -> str:
        code = self._proc.poll() if self._proc else None
        return f"classifier process exited (code {code})" if code is not None else "classifier process closed its output"

    def _call(self, request: dict) -> dict:
        proc = self._start()
        try:
            proc.stdin.write(json.dumps(request, ensure_ascii=False) + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError):
            raise ProcessExitedError(self._exit_message()) from None
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self.close()
            raise AdapterTimeout(
                f"no response to {request['op']!r} within {self.timeout:g}s"
            ) from None
        if line is _EOF:
            self._lines.put(_EOF)
            try:
                proc.wait(timeout=1.0)
            except subprocess.TimeoutExpired:
                pass
            raise ProcessExitedError(self._exit_message())
        self._lineno += 1
        text = line.rstrip("\r\n")
        try:
            response = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"invalid JSON ({exc.msg})", self._lineno, text) from None
        if not isinstance(response, dict):
            raise ProtocolError("response is not a JSON object", self._lineno, text)
        if response.get("ok") is False:
            raise RemoteError(f"classifier reported an error: {response.get('error')}")
        return response

    def fit(self, examples: Sequence[tuple[str, str]]) -> None:
        examples = list(examples)
        response = self._call(
            {"op": "fit", "examples": [{"text": t, "label": l} for t, l in examples]}
        )
        if response.get("ok") is not True:
            raise ProtocolError("fit response lacks \"ok\": true", self._lineno, json.dumps(response))
        self._fitted = True

    def predict(self, text: str) -> Prediction:
        if not self._fitted:
            raise NotFittedError("predict called before fit")
        response = self._call({"op": "predict", "text": text})
        label, conf = response.get("label"), response.get("confidence")
        if not isinstance(label, str) or isinstance(conf, bool) or not isinstance(conf, (int, float)):
            raise ProtocolError("predict response needs string label and numeric confidence",
                                self._lineno, json.dumps(response))
        return Prediction(label, float(conf))

    def close(self) -> None:
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self) -> "ExternalClassifier":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self) -> None:
        try:
            self.close()
        except Exception:
            pass


def external_adapter(command: str | Sequence[str], timeout: float = DEFAULT_TIMEOUT) -> ExternalClassifier:
    return ExternalClassifier(command, timeout=timeout)
