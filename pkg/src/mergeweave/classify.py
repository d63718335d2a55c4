"""Label-probability prediction for token conflicts.

Two interchangeable backends: a deterministic in-process heuristic, and a
client for an external scorer speaking line-delimited JSON over child
process pipes or TCP (the same protocol the neural component serves).
"""

from __future__ import annotations

import json
import math
import socket
import subprocess
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .align import ModelInput
from .labels import ResolutionLabel
from .textnorm import equivalent

N_LABELS = 9

DEFAULT_TIMEOUT = 10.0


class PredictionSource(Enum):
    HEURISTIC = "Heuristic"
    EXTERNAL = "External"
    FIXED = "Fixed"


@dataclass(frozen=True)
class Prediction:
    probs: tuple[float, ...]
    source: PredictionSource

    def __post_init__(self) -> None:
        if len(self.probs) != N_LABELS:
            raise ValueError("expected 9 probabilities")
        total = sum(self.probs)
        if not math.isclose(total, 1.0, abs_tol=1e-6):
            raise ValueError(f"probabilities sum to {total}")
        if any(p < 0 for p in self.probs):
            raise ValueError("negative probability")

    @property
    def argmax(self) -> ResolutionLabel:
        best = max(range(N_LABELS), key=lambda i: (self.probs[i], -i))
        return ResolutionLabel(best + 1)


class ClassifierError(RuntimeError):
    """Transport or protocol failure of an external backend."""


def _normalized(scores: Sequence[float], source: PredictionSource) -> Prediction:
    total = sum(scores)
    return Prediction(tuple(s / total for s in scores), source)


# Documented heuristic weights; argmax is invariant under any uniform
# positive rescaling of these (plain normalization at the end).
DEFAULT_WEIGHTS = {
    "side_equals_base": 2.0,  # a == o suggests taking b, and vice versa
    "empty_side": 1.0,
    "containment": 1.0,
}


@dataclass
class HeuristicClassifier:
    """Deterministic baseline built from a few shape features of the
    conflict plus an optional corpus label prior."""

    prior: tuple[float, ...] = tuple([1.0 / N_LABELS] * N_LABELS)
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))

    def predict(self, mi: ModelInput) -> Prediction:
        scores = list(self.prior)
        a_text = "".join(mi.a)
        b_text = "".join(mi.b)
        o_text = "".join(mi.o)
        w = self.weights

        if equivalent(a_text, o_text) and not equivalent(b_text, o_text):
            scores[ResolutionLabel.TAKE_B.class_index] += w["side_equals_base"]
        if equivalent(b_text, o_text) and not equivalent(a_text, o_text):
            scores[ResolutionLabel.TAKE_A.class_index] += w["side_equals_base"]

        a_empty = not a_text.strip()
        b_empty = not b_text.strip()
        if a_empty and not b_empty:
            scores[ResolutionLabel.TAKE_B.class_index] += w["empty_side"]
        if b_empty and not a_empty:
            scores[ResolutionLabel.TAKE_A.class_index] += w["empty_side"]

        a_set = {t for t in mi.a if t.strip()}
        b_set = {t for t in mi.b if t.strip()}
        if a_set and b_set and a_text != b_text:
            if b_set <= a_set:
                scores[ResolutionLabel.TAKE_A.class_index] += w["containment"]
            elif a_set <= b_set:
                scores[ResolutionLabel.TAKE_B.class_index] += w["containment"]

        return _normalized(scores, PredictionSource.HEURISTIC)

    def predict_batch(self, inputs: Sequence[ModelInput]) -> list[Prediction]:
        return [self.predict(mi) for mi in inputs]


@dataclass
class FixedClassifier:
    """Returns one fixed distribution for every input (stub behavior)."""

    probs: tuple[float, ...] = tuple([1.0 / N_LABELS] * N_LABELS)

    def predict(self, mi: ModelInput) -> Prediction:
        return _normalized(list(self.probs), PredictionSource.FIXED)

    def predict_batch(self, inputs: Sequence[ModelInput]) -> list[Prediction]:
        return [self.predict(mi) for mi in inputs]


def unit_mass(label: ResolutionLabel) -> tuple[float, ...]:
    probs = [0.0] * N_LABELS
    probs[ResolutionLabel(label).class_index] = 1.0
    return tuple(probs)


class _LineTransport:
    def send_line(self, line: str) -> None:
        raise NotImplementedError

    def recv_line(self, timeout: float) -> str:
        raise NotImplementedError

    def close(self) -> None:
        pass


class SubprocessTransport(_LineTransport):
    """Child process speaking the protocol over stdin/stdout pipes."""

    def __init__(self, command: Sequence[str]):
        try:
            self.proc = subprocess.Popen(
                list(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ClassifierError(f"cannot start scorer: {exc}") from exc

    def send_line(self, line: str) -> None:
        if self.proc.poll() is not None:
            raise ClassifierError("scorer process exited")
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise ClassifierError(f"scorer pipe broken: {exc}") from exc

    def recv_line(self, timeout: float) -> str:
        # Pipes are blocking; the child is trusted to answer each request.
        line = self.proc.stdout.readline()
        if not line:
            raise ClassifierError("scorer closed its output")
        return line

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.stdin.close()
            self.proc.terminate()
            self.proc.wait(timeout=5)


class TcpTransport(_LineTransport):
    def __init__(self, host: str, port: int, timeout: float = DEFAULT_TIMEOUT):
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ClassifierError(f"cannot connect to scorer: {exc}") from exc
        self.reader = self.sock.makefile("r", encoding="utf-8")
        self.writer = self.sock.makefile("w", encoding="utf-8")

    def send_line(self, line: str) -> None:
        try:
            self.writer.write(line + "\n")
            self.writer.flush()
        except OSError as exc:
            raise ClassifierError(f"scorer connection broken: {exc}") from exc

    def recv_line(self, timeout: float) -> str:
        self.sock.settimeout(timeout)
        try:
            line = self.reader.readline()
        except OSError as exc:
            raise ClassifierError(f"scorer read failed: {exc}") from exc
        if not line:
            raise ClassifierError("scorer closed the connection")
        return line

    def close(self) -> None:
        self.sock.close()


class ExternalClassifier:
    """Wire-protocol client; one in-flight pipeline per connection.

    Responses are matched by id, so out-of-order replies are legal.
    """

    def __init__(self, transport: _LineTransport, timeout: float = DEFAULT_TIMEOUT):
        self.transport = transport
        self.timeout = timeout
        self._next_id = 0
        self._pending: dict[int, dict] = {}

    @classmethod
    def subprocess(cls, command: Sequence[str], timeout: float = DEFAULT_TIMEOUT):
        return cls(SubprocessTransport(command), timeout)

    @classmethod
    def tcp(cls, host: str, port: int, timeout: float = DEFAULT_TIMEOUT):
        return cls(TcpTransport(host, port, timeout), timeout)

    def close(self) -> None:
        self.transport.close()

    def _take_response(self, request_id: int) -> dict:
        while request_id not in self._pending:
            line = self.transport.recv_line(self.timeout)
            try:
                msg = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ClassifierError(f"bad scorer reply: {line!r}") from exc
            if "id" not in msg:
                raise ClassifierError(f"scorer reply without id: {msg}")
            self._pending[msg["id"]] = msg
        return self._pending.pop(request_id)

    def _to_prediction(self, msg: dict) -> Prediction:
        if "error" in msg:
            raise ClassifierError(f"scorer error: {msg['error']}")
        probs = msg.get("probs")
        if not isinstance(probs, list) or len(probs) != N_LABELS:
            raise ClassifierError(f"malformed probs in reply: {msg}")
        return _normalized([float(p) for p in probs], PredictionSource.EXTERNAL)

    def predict(self, mi: ModelInput) -> Prediction:
        request_id = self._next_id
        self._next_id += 1
        self.transport.send_line(mi.to_wire_line(request_id))
        return self._to_prediction(self._take_response(request_id))

    def predict_batch(self, inputs: Sequence[ModelInput]) -> list:
        """Pipelined batch; failed items carry the exception in their slot."""
        ids = []
        results: list = []
        for mi in inputs:
            request_id = self._next_id
            self._next_id += 1
            self.transport.send_line(mi.to_wire_line(request_id))
            ids.append(request_id)
        for request_id in ids:
            try:
                results.append(
                    self._to_prediction(self._take_response(request_id))
                )
            except ClassifierError as exc:
                results.append(exc)
        return results


# Fixed distribution served by the stub scorer: mildly peaked on TakeA so
# ordering bugs in clients are visible, normalized to 1.
STUB_PROBS = (0.28, 0.18, 0.12, 0.10, 0.08, 0.07, 0.06, 0.06, 0.05)


def stub_scorer_loop(stdin, stdout) -> None:
    """Serve the wire protocol with the fixed stub distribution."""
    for raw in stdin:
        line = raw.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
            request_id = msg["id"]
            reply = {"id": request_id, "probs": list(STUB_PROBS)}
        except (json.JSONDecodeError, KeyError, TypeError):
            request_id = None
            if isinstance(line, str):
                try:
                    request_id = json.loads(line).get("id")
                except Exception:
                    request_id = None
            reply = {"id": request_id, "error": "malformed request"}
        stdout.write(json.dumps(reply) + "\n")
        stdout.flush()
