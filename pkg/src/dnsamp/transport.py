"""Simulated transport with packet and byte accounting.

A UDP exchange costs two packets. A response with TC set triggers a TCP retry
of the same question: request, response and eight control packets (three for
the handshake, five for teardown), split four and four between the ends.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .authoritative import AuthoritativeServer, answer_query
from .engine import Future, Simulator
from .message import DEFAULT_SIZE_MODEL, DnsMessage, SizeModel, message_size

UDP = "UDP"
TCP = "TCP"
TCP_CONTROL_PACKETS = 8
UPSTREAM = "upstream"
CLIENT_FACING = "client"
SCOPES = (UPSTREAM, CLIENT_FACING, "all")


@dataclass(frozen=True, slots=True)
class Exchange:
    src: str
    dst: str
    request: DnsMessage
    response: DnsMessage | None
    proto: str
    timestamp: float


@dataclass
class LinkModel:
    """Latency is one-way, in simulated milliseconds."""

    latency: float = 1.0
    capacity: int | None = None
    timeout: float = 1000.0
    per_endpoint_latency: dict[str, float] = field(default_factory=dict)

    def latency_to(self, endpoint: str) -> float:
        return self.per_endpoint_latency.get(endpoint, self.latency)


@dataclass
class Counters:
    packets_sent: int = 0
    packets_received: int = 0
    bytes_sent: int = 0
    bytes_received: int = 0

    @property
    def packets(self) -> int:
        return self.packets_sent + self.packets_received

    @property
    def bytes(self) -> int:
        return self.bytes_sent + self.bytes_received

    def __iadd__(self, other: Counters) -> Counters:
        self.packets_sent += other.packets_sent
        self.packets_received += other.packets_received
        self.bytes_sent += other.bytes_sent
        self.bytes_received += other.bytes_received
        return self

    def as_dict(self) -> dict[str, int]:
        return {
            "packets_sent": self.packets_sent,
            "packets_received": self.packets_received,
            "bytes_sent": self.bytes_sent,
            "bytes_received": self.bytes_received,
        }


class PacketLedger:
    """Per-endpoint counters split by role (upstream / client-facing) and protocol."""

    def __init__(self):
        self._c: dict[tuple[str, str, str], list[int]] = defaultdict(lambda: [0, 0, 0, 0])
        self.endpoints: set[str] = set()
        self.losses = 0
        self.exchanges = 0
        self.control_packets = 0

    def register(self, endpoint: str) -> None:
        self.endpoints.add(endpoint)

    def credit(self, endpoint: str, role: str, proto: str, sent: int = 0, received: int = 0,
               bytes_sent: int = 0, bytes_received: int = 0) -> None:
        row = self._c[(endpoint, role, proto)]
        row[0] += sent
        row[1] += received
        row[2] += bytes_sent
        row[3] += bytes_received

    def report(self, endpoint: str, scope: str = "all", proto: str | None = None) -> Counters:
        if endpoint not in self.endpoints:
            raise KeyError(f"unknown endpoint {endpoint!r}")
        if scope not in SCOPES:
            raise ValueError(f"scope must be one of {SCOPES}")
        out = Counters()
        for (ep, role, pr), row in self._c.items():
            if ep != endpoint or (scope != "all" and role != scope) or (proto and pr != proto):
                continue
            out += Counters(*row)
        return out

    def total(self) -> Counters:
        out = Counters()
        for row in self._c.values():
            out += Counters(*row)
        return out

    def rows(self) -> list[dict]:
        rows = []
        for ep in sorted(self.endpoints):
            for scope in SCOPES:
                rows.append({"endpoint": ep, "scope": scope, **self.report(ep, scope).as_dict()})
        return rows

    def to_json(self) -> str:
        return json.dumps({"losses": self.losses, "rows": self.rows()}, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["endpoint", "scope", "packets_sent", "packets_received",
                                                 "bytes_sent", "bytes_received"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows())
        return buf.getvalue()


def ledger_report(ledger: PacketLedger, endpoint: str, scope: str = "all") -> Counters:
    return ledger.report(endpoint, scope)


class Network:
    """Routes queries to registered authoritative servers and keeps the ledger."""

    def __init__(self, sim: Simulator, size_model: SizeModel = DEFAULT_SIZE_MODEL,
                 link: LinkModel | None = None, record: bool = False):
        self.sim = sim
        self.size_model = size_model
        self.link = link or LinkModel()
        self.ledger = PacketLedger()
        self.servers: dict[str, AuthoritativeServer] = {}
        self.record = record
        self.log: list[Exchange] = []
        self._inflight: dict[str, int] = defaultdict(int)

    def register(self, server: AuthoritativeServer) -> None:
        for addr in server.addresses:
            self.servers[addr] = server
            self.ledger.register(addr)

    def register_endpoint(self, endpoint: str) -> None:
        self.ledger.register(endpoint)

    def swap_ledger(self) -> PacketLedger:
        """Start a fresh ledger (same endpoints) and return the old one."""
        old = self.ledger
        self.ledger = PacketLedger()
        for ep in old.endpoints:
            self.ledger.register(ep)
        return old

    def account(self, src: str, dst: str, request: DnsMessage, response: DnsMessage, proto: str = UDP) -> None:
        """Credit one completed request/response pair (no TCP control packets)."""
        ledger = self.ledger
        q = message_size(request, self.size_model)
        r = message_size(response, self.size_model)
        ledger.credit(src, UPSTREAM, proto, 1, 1, q, r)
        ledger.credit(dst, CLIENT_FACING, proto, 1, 1, r, q)
        ledger.exchanges += 1
        if self.record:
            self.log.append(Exchange(src, dst, request, response, proto, self.sim.now))

    def _account_tcp_controls(self, src: str, dst: str) -> None:
        half = TCP_CONTROL_PACKETS // 2
        size = self.size_model.tcp_control_packet * half
        self.ledger.credit(src, UPSTREAM, TCP, half, half, size, size)
        self.ledger.credit(dst, CLIENT_FACING, TCP, half, half, size, size)
        self.ledger.control_packets += TCP_CONTROL_PACKETS

    def exchange(self, src: str, dst: str, request: DnsMessage) -> Future:
        """Send ``request`` from ``src`` to server ``dst``.

        The future resolves with the final response, or ``None`` if the
        exchange was dropped for lack of capacity (after the link timeout).
        """
        server = self.servers.get(dst)
        if server is None:
            raise KeyError(f"no server registered at {dst!r}")
        link = self.link
        fut = Future()
        cap = link.capacity
        if cap is not None and (self._inflight[src] >= cap or self._inflight[dst] >= cap):
            self.ledger.losses += 1
            self.ledger.credit(src, UPSTREAM, UDP, sent=1, bytes_sent=message_size(request, self.size_model))
            self.sim.schedule(link.timeout, fut.set_result, None)
            return fut
        self._inflight[src] += 1
        self._inflight[dst] += 1
        response = answer_query(server, request, self.size_model, server.udp_limit)
        self.account(src, dst, request, response, UDP)
        round_trips = 1
        if response.tc:
            response = answer_query(server, request, self.size_model, None)
            self.account(src, dst, request, response, TCP)
            self._account_tcp_controls(src, dst)
            round_trips = 3
        delay = 2 * link.latency_to(dst) * round_trips
        self.sim.schedule(delay, self._complete, src, dst, fut, response)
        return fut

    def _complete(self, src: str, dst: str, fut: Future, response: DnsMessage) -> None:
        self._inflight[src] -= 1
        self._inflight[dst] -= 1
        fut.set_result(response)


def logged_bytes(log: Iterable[Exchange], size_model: SizeModel = DEFAULT_SIZE_MODEL) -> int:
    """Sum of request and response sizes over an exchange log."""
    total = 0
    for ex in log:
        total += message_size(ex.request, size_model)
        if ex.response is not None:
            total += message_size(ex.response, size_model)
    return total
