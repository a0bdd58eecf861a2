"""Simulated bilateral link: delay, jitter, drops, reordering, wire codec.

Messages queued by :meth:`Channel.send` become visible to
:meth:`Channel.receive_latest` once simulated time passes their delivery
instant.  Delivery is latest-by-sequence: the consumers only ever want the
freshest pose or plane, so anything older than what was already delivered is
discarded.  All randomness (drop decisions, jitter draws) comes from the
channel's own seeded generator, so the delay statistics of a run are a pure
function of (seed, send order).

The byte layout is normative and bit-exact so two endpoint processes can
exchange the same payloads over local datagrams:

    offset 0   magic      0x45
    offset 1   type       0x01 joint angles | 0x02 collision plane
    offset 2   seq        uint32 little-endian
    offset 6   t_send     float64 little-endian
    offset 14  payload    float64 fields, little-endian:
                          type 0x01: 3 joint angles        (38 bytes total)
                          type 0x02: plane point x,y,z then
                                     unit normal x,y,z     (62 bytes total)
"""

from __future__ import annotations

import heapq
import math
import struct
from dataclasses import dataclass

import numpy as np

from .precontact import PrecontactMsg

__all__ = [
    "ChannelConfig",
    "InFlightMsg",
    "Channel",
    "ThetaMsg",
    "CodecError",
    "encode_message",
    "decode_message",
    "MAGIC_BYTE",
    "TYPE_THETA",
    "TYPE_PLANE",
]

MAGIC_BYTE = 0x45
TYPE_THETA = 0x01
TYPE_PLANE = 0x02

_HEADER = struct.Struct("<BBId")
_THETA_LEN = _HEADER.size + 3 * 8
_PLANE_LEN = _HEADER.size + 6 * 8
_NORMAL_TOL = 1e-6


@dataclass
class ChannelConfig:
    """Link parameters: constant base delay plus uniform jitter on [0, max],
    independent drop probability per message."""

    base_delay: float = 0.001
    jitter_max: float = 0.005
    drop_prob: float = 0.0
    allow_reorder: bool = True
    seed: int = 0

    def validate(self) -> None:
        if self.base_delay < 0 or self.jitter_max < 0:
            raise ValueError("delays must be >= 0")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError(f"drop_prob must be in [0, 1], got {self.drop_prob}")


@dataclass
class InFlightMsg:
    payload: object
    t_send: float
    t_deliver: float
    seq: int


@dataclass
class ThetaMsg:
    """Joint-angle payload sent controller -> world."""

    theta: tuple[float, float, float]
    seq: int
    t_send: float


class Channel:
    """One direction of the link.  Single-threaded; owned by the scheduler."""

    def __init__(self, cfg: ChannelConfig, stream: int = 0):
        cfg.validate()
        self.cfg = cfg
        self._rng = np.random.default_rng([cfg.seed, stream])
        self._queue: list[tuple[float, int, object]] = []
        self._seq = 0
        self._last_scheduled = 0.0
        self._last_delivered_seq = -1

    def send(self, payload, t_now: float) -> None:
        """Queue a message; it may be dropped or jittered.

        Both random draws happen on every send so the stream is aligned
        regardless of the configured probabilities.
        """
        self._seq += 1
        u_drop = self._rng.uniform(0.0, 1.0)
        jitter = self._rng.uniform(0.0, self.cfg.jitter_max)
        if u_drop < self.cfg.drop_prob:
            return
        t_deliver = t_now + self.cfg.base_delay + jitter
        if not self.cfg.allow_reorder and t_deliver < self._last_scheduled:
            t_deliver = self._last_scheduled
        self._last_scheduled = max(self._last_scheduled, t_deliver)
        heapq.heappush(self._queue, (t_deliver, self._seq, payload))

    def receive_latest(self, t_now: float):
        """Deliver everything due by ``t_now``; return the freshest payload.

        Returns None when nothing newer than the last delivery has arrived.
        A returned sequence number never decreases across calls.
        """
        newest_seq = -1
        newest = None
        while self._queue and self._queue[0][0] <= t_now:
            _, seq, payload = heapq.heappop(self._queue)
            if seq > newest_seq:
                newest_seq = seq
                newest = payload
        if newest_seq > self._last_delivered_seq:
            self._last_delivered_seq = newest_seq
            return newest
        return None


class CodecError(ValueError):
    """Raised on malformed wire bytes."""


def encode_message(msg) -> bytes:
    """Serialize a ThetaMsg or PrecontactMsg to the normative byte layout."""
    if isinstance(msg, ThetaMsg):
        return _HEADER.pack(MAGIC_BYTE, TYPE_THETA, msg.seq, msg.t_send) + struct.pack(
            "<3d", *msg.theta
        )
    if isinstance(msg, PrecontactMsg):
        return _HEADER.pack(MAGIC_BYTE, TYPE_PLANE, msg.seq, msg.t_send) + struct.pack(
            "<6d", *msg.point, *msg.normal
        )
    raise TypeError(f"cannot encode {type(msg)!r}")


def decode_message(buf: bytes):
    """Parse wire bytes back into a message; rejects anything malformed."""
    if len(buf) < _HEADER.size:
        raise CodecError(f"buffer too short: {len(buf)} bytes")
    magic, mtype, seq, t_send = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC_BYTE:
        raise CodecError(f"bad magic byte 0x{magic:02x}")
    if mtype == TYPE_THETA:
        if len(buf) != _THETA_LEN:
            raise CodecError(f"joint-angle message must be {_THETA_LEN} bytes, got {len(buf)}")
        theta = struct.unpack_from("<3d", buf, _HEADER.size)
        return ThetaMsg(theta=theta, seq=seq, t_send=t_send)
    if mtype == TYPE_PLANE:
        if len(buf) != _PLANE_LEN:
            raise CodecError(f"plane message must be {_PLANE_LEN} bytes, got {len(buf)}")
        vals = struct.unpack_from("<6d", buf, _HEADER.size)
        normal = vals[3:6]
        norm = math.sqrt(normal[0] ** 2 + normal[1] ** 2 + normal[2] ** 2)
        if abs(norm - 1.0) > _NORMAL_TOL:
            raise CodecError(f"plane normal not unit length (|n| = {norm})")
        return PrecontactMsg(point=np.array(vals[0:3]), normal=np.array(normal), seq=seq, t_send=t_send)
    raise CodecError(f"unknown message type 0x{mtype:02x}")
