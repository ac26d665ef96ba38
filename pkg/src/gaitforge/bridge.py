"""Streaming link between the control stack and an external terrain service.

Messages are newline-delimited JSON objects (schema version 1). Outbound
messages carry platform poses and avatar travel; inbound messages carry
terrain heights under each foot and ground-contact edges. The same byte
stream runs over an in-process channel or a TCP socket.
"""

from __future__ import annotations

import json
import logging
import math
import queue
import socket
import socketserver
import threading
from dataclasses import dataclass
from typing import Union

from .terrain import Flat, Stair, TerrainProfile, Uneven, ground_height

SCHEMA_VERSION = 1
PHASES = ("swing", "stance")

log = logging.getLogger(__name__)


class BridgeError(ValueError):
    """Base class for wire-format errors."""


class MalformedMessage(BridgeError):
    pass


class MissingField(BridgeError):
    pass


class UnknownVersion(BridgeError):
    pass


class UnknownKind(BridgeError):
    pass


def _q(x: float) -> float:
    """Round to the 9 significant digits the wire carries."""
    return float(f"{x:.9g}")


def _num(x: float) -> str:
    if not math.isfinite(x):
        raise BridgeError(f"non-finite value {x!r} cannot be encoded")
    text = f"{x:.9g}"
    return "0" if text == "-0" else text


@dataclass(frozen=True)
class FootPose:
    id: int
    x: float
    z: float
    phase: str = "swing"

    def __post_init__(self):
        if self.phase not in PHASES:
            raise BridgeError(f"unknown phase {self.phase!r}")
        object.__setattr__(self, "x", _q(self.x))
        object.__setattr__(self, "z", _q(self.z))


@dataclass(frozen=True)
class OutboundMessage:
    """Control-stack state for the avatar: forward travel is ``-d_x``."""

    t: float  # ms
    feet: tuple[FootPose, ...] = (FootPose(0, 0.0, 0.0), FootPose(1, 0.0, 0.0))
    avatar_x: float = 0.0
    avatar_z: float = 0.0
    walk_velocity: float = 0.0
    version: int = SCHEMA_VERSION

    def __post_init__(self):
        for name in ("t", "avatar_x", "avatar_z", "walk_velocity"):
            object.__setattr__(self, name, _q(getattr(self, name)))
        object.__setattr__(self, "feet", tuple(self.feet))

    @classmethod
    def from_travel(cls, t_ms, feet, d_x, d_z, v_x):
        return cls(t_ms, tuple(feet), -d_x, -d_z, v_x)


@dataclass(frozen=True)
class TerrainHeight:
    foot: int
    height: float
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "height", _q(self.height))
        object.__setattr__(self, "t", _q(self.t))


@dataclass(frozen=True)
class GroundContact:
    foot: int
    contact: bool
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "t", _q(self.t))


InboundMessage = Union[TerrainHeight, GroundContact]


def encode(msg: OutboundMessage) -> str:
    feet = ",".join(
        f'{{"id":{p.id},"x":{_num(p.x)},"z":{_num(p.z)},"ph":"{p.phase}"}}' for p in msg.feet
    )
    return (
        f'{{"v":{msg.version},"t":{_num(msg.t)},"feet":[{feet}],'
        f'"avx":{_num(msg.avatar_x)},"avz":{_num(msg.avatar_z)},"wv":{_num(msg.walk_velocity)}}}\n'
    )


def encode_inbound(msg: InboundMessage) -> str:
    if isinstance(msg, TerrainHeight):
        return (f'{{"v":{SCHEMA_VERSION},"t":{_num(msg.t)},"kind":"height",'
                f'"id":{msg.foot},"h":{_num(msg.height)}}}\n')
    c = "true" if msg.contact else "false"
    return f'{{"v":{SCHEMA_VERSION},"t":{_num(msg.t)},"kind":"contact","id":{msg.foot},"c":{c}}}\n'


def _parse(line: str) -> dict:
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedMessage(f"not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedMessage("message must be a JSON object")
    if "v" not in obj:
        raise MissingField("v")
    if obj["v"] != SCHEMA_VERSION:
        raise UnknownVersion(f"schema version {obj['v']!r} is not supported")
    return obj


def _field(obj: dict, name: str, kinds):
    if name not in obj:
        raise MissingField(name)
    value = obj[name]
    if isinstance(value, bool) and bool not in kinds or not isinstance(value, kinds):
        raise MalformedMessage(f"field {name!r} has the wrong type")
    if isinstance(value, float) and not math.isfinite(value):
        raise MalformedMessage(f"field {name!r} is not finite")
    return value


def decode_inbound(line: str) -> InboundMessage:
    obj = _parse(line)
    kind = _field(obj, "kind", (str,))
    t = float(_field(obj, "t", (int, float)))
    foot = _field(obj, "id", (int,))
    if kind == "height":
        return TerrainHeight(foot, float(_field(obj, "h", (int, float))), t)
    if kind == "contact":
        return GroundContact(foot, _field(obj, "c", (bool,)), t)
    raise UnknownKind(f"unknown message kind {kind!r}")


def decode(line: str) -> OutboundMessage:
    obj = _parse(line)
    feet = []
    for p in _field(obj, "feet", (list,)):
        if not isinstance(p, dict):
            raise MalformedMessage("feet entries must be objects")
        phase = _field(p, "ph", (str,))
        if phase not in PHASES:
            raise MalformedMessage(f"unknown phase {phase!r}")
        feet.append(FootPose(_field(p, "id", (int,)), float(_field(p, "x", (int, float))),
                             float(_field(p, "z", (int, float))), phase))
    return OutboundMessage(
        float(_field(obj, "t", (int, float))), tuple(feet),
        float(_field(obj, "avx", (int, float))), float(_field(obj, "avz", (int, float))),
        float(_field(obj, "wv", (int, float))),
    )


class LoopbackService:
    """Terrain service stand-in: answers each pose update with heights and contacts.

    It keeps its own footstep count from the stance edges it sees, so uneven
    ground advances exactly as the controller expects.
    """

    def __init__(self, profile: TerrainProfile, contact_epsilon: float = 0.002):
        if not isinstance(profile, (Flat, Stair, Uneven)):
            raise ValueError("loopback service needs a concrete terrain profile")
        self.profile = profile
        self.contact_epsilon = contact_epsilon
        self.contact: dict[int, bool] = {}
        self.phase: dict[int, str] = {}
        self.step: dict[int, int] = {}
        self.count = 0

    def respond(self, msg: OutboundMessage) -> list[InboundMessage]:
        replies: list[InboundMessage] = []
        for p in msg.feet:
            prev = self.phase.get(p.id, "stance")
            if p.phase == "stance" and prev == "swing":
                self.count += 1
            elif p.phase == "swing" and prev == "stance":
                others = any(ph == "swing" for i, ph in self.phase.items() if i != p.id)
                self.step[p.id] = self.count + (2 if others else 1)
            self.phase[p.id] = p.phase
            h = ground_height(self.profile, p.x, self.step.get(p.id, 0))
            replies.append(TerrainHeight(p.id, h, msg.t))
            touching = p.z <= h + self.contact_epsilon
            if touching != self.contact.get(p.id, False):
                self.contact[p.id] = touching
                replies.append(GroundContact(p.id, touching, msg.t))
        return replies

    def handle(self, line: str) -> list[str]:
        return [encode_inbound(m) for m in self.respond(decode(line))]


def loopback_service(profile: TerrainProfile, contact_epsilon: float = 0.002) -> LoopbackService:
    return LoopbackService(profile, contact_epsilon)


class Channel:
    """In-process byte stream with a bounded buffer that drops the oldest line."""

    def __init__(self, maxlen: int = 1024):
        self._q: queue.Queue[str] = queue.Queue(maxlen)
        self.dropped = 0

    def write(self, line: str) -> None:
        while True:
            try:
                self._q.put_nowait(line)
                return
            except queue.Full:
                try:
                    self._q.get_nowait()
                    self.dropped += 1
                except queue.Empty:
                    pass

    def read_all(self) -> list[str]:
        lines = []
        while True:
            try:
                lines.append(self._q.get_nowait())
            except queue.Empty:
                return lines


class LoopbackLink:
    """Synchronous link to an in-process service through the wire format."""

    def __init__(self, service: LoopbackService):
        self.service = service
        self.inbox = Channel()
        self.sent = 0

    def send(self, msg: OutboundMessage) -> None:
        for reply in self.service.handle(encode(msg)):
            self.inbox.write(reply)
        self.sent += 1

    def poll(self) -> list[InboundMessage]:
        return [decode_inbound(line) for line in self.inbox.read_all()]

    def close(self) -> None:
        pass


class TcpLink:
    """Client side of the TCP transport.

    Reader and writer threads move lines between the socket and bounded
    queues; the control loop only ever touches the queues without blocking.
    """

    def __init__(self, host: str, port: int, maxlen: int = 1024, timeout: float = 5.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.sock.settimeout(None)
        self.outbox = Channel(maxlen)
        self.inbox = Channel(maxlen)
        self._wake = threading.Event()
        self._stop = threading.Event()
        self.errors = 0
        self.sent = 0
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._writer = threading.Thread(target=self._write_loop, daemon=True)
        self._reader.start()
        self._writer.start()

    def _read_loop(self):
        with self.sock.makefile("r", encoding="utf-8", newline="\n") as fh:
            try:
                for line in fh:
                    self.inbox.write(line)
            except OSError:
                pass

    def _write_loop(self):
        while not self._stop.is_set():
            self._wake.wait(0.05)
            self._wake.clear()
            data = "".join(self.outbox.read_all())
            if data:
                try:
                    self.sock.sendall(data.encode())
                except OSError:
                    return

    def send(self, msg: OutboundMessage) -> None:
        self.outbox.write(encode(msg))
        self.sent += 1
        self._wake.set()

    def poll(self) -> list[InboundMessage]:
        out = []
        for line in self.inbox.read_all():
            try:
                out.append(decode_inbound(line))
            except BridgeError as exc:
                self.errors += 1
                log.warning("dropping bad inbound line: %s", exc)
        return out

    def close(self) -> None:
        self._stop.set()
        self._wake.set()
        self._writer.join(1.0)
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class _TerrainHandler(socketserver.StreamRequestHandler):
    def handle(self):
        service = LoopbackService(self.server.profile)
        for raw in self.rfile:
            try:
                replies = service.handle(raw.decode("utf-8"))
            except BridgeError as exc:
                log.warning("bad outbound line from client: %s", exc)
                continue
            try:
                self.wfile.write("".join(replies).encode())
                self.wfile.flush()
            except OSError:
                return


class TerrainServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, profile: TerrainProfile, host: str = "127.0.0.1", port: int = 0):
        self.profile = profile
        super().__init__((host, port), _TerrainHandler)

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[:2]


def serve_terrain(profile: TerrainProfile, host: str = "127.0.0.1", port: int = 0,
                  background: bool = False) -> TerrainServer:
    """Serve a loopback terrain over TCP; ``port=0`` picks a free port."""
    server = TerrainServer(profile, host, port)
    if background:
        threading.Thread(target=server.serve_forever, daemon=True).start()
    return server
