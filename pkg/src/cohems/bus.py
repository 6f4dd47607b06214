"""Message transport between residences and the control center.

Two interchangeable buses: an in-process queue and newline-delimited
JSON records over a byte stream. Records carry ``type``, ``iteration``,
``residence_id`` and a vector ``payload`` written with 17 significant
digits.
"""

from __future__ import annotations

import io
import json
from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass
class PlanMessage:
    residence_id: int
    iteration: int
    plan: np.ndarray


@dataclass
class PriceMessage:
    iteration: int
    prices: np.ndarray


def encode(msg) -> bytes:
    if isinstance(msg, PlanMessage):
        rec = {"type": "plan", "iteration": msg.iteration, "residence_id": msg.residence_id,
               "payload": msg.plan}
    elif isinstance(msg, PriceMessage):
        rec = {"type": "price", "iteration": msg.iteration, "residence_id": None,
               "payload": msg.prices}
    else:
        raise TypeError(f"cannot encode {type(msg).__name__}")
    payload = ",".join(format(float(v), ".17g") for v in np.asarray(rec.pop("payload")).ravel())
    head = json.dumps(rec, separators=(",", ":"))
    return (head[:-1] + ',"payload":[' + payload + "]}\n").encode()


def decode(line: bytes):
    rec = json.loads(line)
    vec = np.asarray(rec["payload"], dtype=float)
    if rec["type"] == "plan":
        return PlanMessage(int(rec["residence_id"]), int(rec["iteration"]), vec)
    if rec["type"] == "price":
        return PriceMessage(int(rec["iteration"]), vec)
    raise ValueError(f"unknown record type {rec['type']!r}")


class InProcessBus:
    """FIFO queues for uplink (plans) and downlink (prices)."""

    def __init__(self):
        self._up = deque()
        self._down = deque()
        self.sent_plans = 0
        self.sent_prices = 0

    def send_plan(self, msg: PlanMessage):
        self.sent_plans += 1
        self._up.append(msg)

    def broadcast(self, msg: PriceMessage):
        self.sent_prices += 1
        self._down.append(msg)

    def receive_plans(self, count: int) -> list:
        if len(self._up) < count:
            raise RuntimeError(f"expected {count} plans, {len(self._up)} queued")
        return [self._up.popleft() for _ in range(count)]

    def receive_price(self, residence_id: int) -> PriceMessage:
        if not self._down:
            raise RuntimeError("no price broadcast available")
        return self._down[-1]


class StreamBus(InProcessBus):
    """Same protocol serialised as NDJSON over byte streams.

    ``uplink`` and ``downlink`` default to in-memory buffers; any binary
    file-like object with ``write``/``readline`` works.
    """

    def __init__(self, uplink: io.BufferedIOBase | None = None, downlink: io.BufferedIOBase | None = None):
        super().__init__()
        self.uplink = uplink or io.BytesIO()
        self.downlink = downlink or io.BytesIO()
        self._up_read = 0
        self._down_read = {}
        self.bytes_sent = 0

    def _write(self, stream, msg):
        data = encode(msg)
        stream.seek(0, io.SEEK_END)
        stream.write(data)
        self.bytes_sent += len(data)

    def send_plan(self, msg: PlanMessage):
        self.sent_plans += 1
        self._write(self.uplink, msg)

    def broadcast(self, msg: PriceMessage):
        self.sent_prices += 1
        self._write(self.downlink, msg)

    def receive_plans(self, count: int) -> list:
        self.uplink.seek(self._up_read)
        out = []
        for _ in range(count):
            line = self.uplink.readline()
            if not line:
                raise RuntimeError(f"expected {count} plans, stream ended after {len(out)}")
            out.append(decode(line))
        self._up_read = self.uplink.tell()
        return out

    def receive_price(self, residence_id: int) -> PriceMessage:
        # each residence keeps its own read cursor on the broadcast stream
        self.downlink.seek(self._down_read.get(residence_id, 0))
        msg = None
        for line in iter(self.downlink.readline, b""):
            msg = decode(line)
        self._down_read[residence_id] = self.downlink.tell()
        if msg is None:
            raise RuntimeError("no price broadcast available")
        return msg


def make_bus(kind: str):
    if kind in ("inprocess", "queue"):
        return InProcessBus()
    if kind in ("ndjson", "stream"):
        return StreamBus()
    raise ValueError(f"unknown bus {kind!r}")
