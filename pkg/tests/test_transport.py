from __future__ import annotations

import csv
import io
import json

import pytest

from dnsamp.authoritative import AuthoritativeServer, Zone
from dnsamp.engine import Simulator, any_of
from dnsamp.message import RecordType, make_query, message_size
from dnsamp.names import name
from dnsamp.transport import TCP, UDP, LinkModel, Network, PacketLedger, ledger_report, logged_bytes
from worlds import A, NS

SRV = "192.0.2.1"
CLI = "10.0.0.53"


def network(signed=False, capacity=None, latency=1.0):
    sim = Simulator()
    net = Network(sim, link=LinkModel(latency=latency, capacity=capacity), record=True)
    zone = Zone("com", [NS("com", "a.gtld-servers.net"), A("www.x.com", "192.0.2.9")], dnssec_like=signed)
    net.register(AuthoritativeServer(SRV, [zone]))
    net.register_endpoint(CLI)
    return sim, net


def test_engine_fifo_ties_and_processes():
    sim = Simulator()
    order = []
    for tag in "abc":
        sim.schedule(5, order.append, tag)
    sim.schedule(1, order.append, "first")

    def proc():
        value = yield sim.timeout(2, "x")
        order.append(value)
        return "done"

    p = sim.process(proc())
    sim.run()
    assert order == ["first", "x", "a", "b", "c"]
    assert p.value == "done" and sim.now == 5


def test_any_of_resolves_once():
    sim = Simulator()
    fut = any_of([sim.timeout(3, "slow"), sim.timeout(1, "fast")])
    sim.run()
    assert fut.value == "fast"


def test_udp_exchange_two_packets():
    sim, net = network()
    fut = net.exchange(CLI, SRV, make_query(1, name("www.x.com"), RecordType.A))
    sim.run()
    assert fut.value.answer and sim.now == 2.0
    assert net.ledger.total().packets_sent == 2
    assert ledger_report(net.ledger, SRV).packets == 2


def test_tc_fallback_twelve_packets():
    sim, net = network(signed=True)
    fut = net.exchange(CLI, SRV, make_query(1, name("ns1.fakens7.com"), RecordType.A))
    sim.run()
    assert not fut.value.tc and fut.value.authority
    total = net.ledger.total()
    assert total.packets_sent == total.packets_received == 12
    assert net.ledger.report(SRV).packets == 12
    assert net.ledger.report(SRV, proto=TCP).packets == 10
    assert net.ledger.report(SRV, proto=UDP).packets == 2
    assert sim.now == 6.0


def test_bytes_equal_logged_messages_plus_controls():
    sim, net = network(signed=True)
    for i in range(3):
        net.exchange(CLI, SRV, make_query(i, name(f"n{i}.fakens.com"), RecordType.A))
        net.exchange(CLI, SRV, make_query(i, name("www.x.com"), RecordType.A))
    sim.run()
    total = net.ledger.total()
    expected = logged_bytes(net.log) + net.size_model.tcp_control_packet * net.ledger.control_packets
    assert total.bytes_sent == total.bytes_received == expected


def test_capacity_drops_newest():
    sim, net = network(capacity=100)
    futs = [net.exchange(CLI, SRV, make_query(i, name(f"h{i}.x.com"), RecordType.A)) for i in range(270)]
    sim.run()
    assert net.ledger.losses >= 170
    assert sum(f.value is None for f in futs) == net.ledger.losses
    # dropped requests were sent but never received
    total = net.ledger.total()
    assert total.packets_sent - total.packets_received == net.ledger.losses


def test_lossless_conservation():
    sim, net = network()
    for i in range(50):
        net.exchange(CLI, SRV, make_query(i, name(f"h{i}.x.com"), RecordType.A))
    sim.run()
    total = net.ledger.total()
    assert net.ledger.losses == 0 and total.packets_sent == total.packets_received == 100


def test_roles_split():
    sim, net = network()
    net.exchange(CLI, SRV, make_query(1, name("www.x.com"), RecordType.A))
    sim.run()
    assert net.ledger.report(CLI, "upstream").packets == 2
    assert net.ledger.report(CLI, "client").packets == 0
    assert net.ledger.report(SRV, "client").packets == 2


def test_report_errors_and_empty():
    ledger = PacketLedger()
    ledger.register("x")
    assert ledger.report("x").as_dict() == dict.fromkeys(
        ["packets_sent", "packets_received", "bytes_sent", "bytes_received"], 0)
    with pytest.raises(KeyError):
        ledger.report("nobody")
    with pytest.raises(ValueError):
        ledger.report("x", "sideways")


def test_unknown_destination():
    sim, net = network()
    with pytest.raises(KeyError):
        net.exchange(CLI, "192.0.2.250", make_query(1, name("a.com"), RecordType.A))


def test_exports():
    sim, net = network()
    net.exchange(CLI, SRV, make_query(1, name("www.x.com"), RecordType.A))
    sim.run()
    data = json.loads(net.ledger.to_json())
    assert data["losses"] == 0 and len(data["rows"]) == 6
    rows = list(csv.DictReader(io.StringIO(net.ledger.to_csv())))
    assert {(r["endpoint"], r["scope"]) for r in rows} >= {(SRV, "all"), (CLI, "upstream")}
    assert logged_bytes(net.log) == sum(message_size(m) for e in net.log for m in (e.request, e.response))
