"""Small hand-built DNS worlds shared by the resolver and acceptance tests."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from dnsamp.authoritative import AttackVariantConfig, AuthoritativeServer, Zone
from dnsamp.bailiwick import BailiwickStats, ingest
from dnsamp.engine import Simulator
from dnsamp.message import RecordType, ResourceRecord, make_query
from dnsamp.names import ROOT, name
from dnsamp.resolver import FetchPolicy, Resolver, RoundRobin
from dnsamp.transport import LinkModel, Network

ROOT_IP = "198.41.0.4"
TLD_IP = "192.5.6.30"
RESOLVER_IP = "10.0.0.53"
CLIENT_IP = "10.0.0.2"


def A(owner, addr, ttl=3600):
    return ResourceRecord(name(owner), RecordType.A, ttl, addr)


def NS(owner, target, ttl=86400):
    return ResourceRecord(name(owner), RecordType.NS, ttl, name(target))


@dataclass
class World:
    sim: Simulator
    net: Network
    resolver: Resolver
    servers: dict

    def ask(self, qname, qtype=RecordType.A, max_rq=None):
        """Send one client query and run the simulation to quiescence."""
        fut = self.resolver.handle_client(CLIENT_IP, make_query(1, name(qname), qtype), max_rq)
        self.sim.run()
        return fut.value

    def upstream(self):
        return self.net.ledger.report(RESOLVER_IP, "upstream")


def build(servers: dict[str, AuthoritativeServer], policy=FetchPolicy(), breadth_cap=None,
          selector=None, max_rq=75, capacity=None, record=False) -> World:
    sim = Simulator()
    net = Network(sim, link=LinkModel(capacity=capacity), record=record)
    for server in servers.values():
        net.register(server)
    net.register_endpoint(CLIENT_IP)
    resolver = Resolver(sim, net, RESOLVER_IP, [(name("a.root-servers.net"), ROOT_IP)], policy=policy,
                        breadth_cap=breadth_cap, selector=selector or RoundRobin(), max_rq=max_rq,
                        record_fetches=True)
    return World(sim, net, resolver, servers)


def root_and_tlds(tlds=("com", "net"), signed=False, extra_root=()):
    root_zone = Zone(ROOT, [NS(ROOT, "a.root-servers.net"), A("a.root-servers.net", ROOT_IP),
                            A("a.gtld-servers.net", TLD_IP), *extra_root], dnssec_like=signed)
    zones = {}
    for tld in tlds:
        root_zone.add(NS(tld, "a.gtld-servers.net"))
        zones[tld] = Zone(tld, [NS(tld, "a.gtld-servers.net")], dnssec_like=signed)
    return AuthoritativeServer(ROOT_IP, [root_zone]), zones


def honest_three_level(policy=FetchPolicy(), **kw) -> World:
    """root -> com -> microsoft.com, every delegation carrying glue."""
    root, tlds = root_and_tlds()
    tlds["com"].add(NS("microsoft.com", "ns1.microsoft.com"))
    tlds["com"].add(A("ns1.microsoft.com", "192.0.2.53"))
    ms = Zone("microsoft.com", [NS("microsoft.com", "ns1.microsoft.com"), A("ns1.microsoft.com", "192.0.2.53"),
                                A("www.microsoft.com", "192.0.2.80")])
    servers = {
        "root": root,
        "tld": AuthoritativeServer(TLD_IP, tlds.values()),
        "ms": AuthoritativeServer("192.0.2.53", [ms]),
    }
    return build(servers, policy, **kw)


def glueless_zone(m: int, requests: int = 30, policy=FetchPolicy(), **kw) -> World:
    """example.com delegated to m out-of-bailiwick names ns{i}.dnshost.net.

    Every ns{i} address is an alias of the single example.com server, and
    dnshost.net itself is delegated with glue.
    """
    root, tlds = root_and_tlds()
    host_ip = "192.0.2.2"
    tlds["net"].add(NS("dnshost.net", "ns.dnshost.net"))
    tlds["net"].add(A("ns.dnshost.net", host_ip))
    host = Zone("dnshost.net", [NS("dnshost.net", "ns.dnshost.net"), A("ns.dnshost.net", host_ip)])
    aliases = [f"192.0.2.{100 + i}" for i in range(m)]
    for i, addr in enumerate(aliases):
        tlds["com"].add(NS("example.com", f"ns{i}.dnshost.net"))
        host.add(A(f"ns{i}.dnshost.net", addr))
    example = Zone("example.com", [NS("example.com", f"ns{i}.dnshost.net") for i in range(m)])
    for j in range(1, requests + 1):
        example.add(A(f"www{j}.example.com", "192.0.2.80"))
    servers = {
        "root": root,
        "tld": AuthoritativeServer(TLD_IP, tlds.values()),
        "host": AuthoritativeServer(host_ip, [host]),
        "example": AuthoritativeServer(aliases[0], [example], addresses=aliases[1:]),
    }
    return build(servers, policy, **kw)


def referral_attack(n: int, victim_signed=False, policy=FetchPolicy(), **kw) -> World:
    """Variant-b style world: attacker.com hands out n glueless names under victim.com."""
    root, tlds = root_and_tlds(signed=True)
    for sld, addr in (("attacker.com", "203.0.113.66"), ("victim.com", "198.51.100.53")):
        tlds["com"].add(NS(sld, f"ns1.{sld}"))
        tlds["com"].add(A(f"ns1.{sld}", addr))
    cfg = AttackVariantConfig("b", n=n)
    attacker = AuthoritativeServer("203.0.113.66", [Zone("attacker.com", [NS("attacker.com", "ns1.attacker.com")])],
                                   behavior=cfg, udp_limit=4096)
    victim = AuthoritativeServer("198.51.100.53", [Zone("victim.com", [NS("victim.com", "ns1.victim.com")],
                                                        dnssec_like=victim_signed)])
    servers = {"root": root, "tld": AuthoritativeServer(TLD_IP, tlds.values()), "attacker": attacker,
               "victim": victim}
    return build(servers, policy, **kw)


def random_observations(rng: random.Random, count: int) -> list:
    tlds = ["com", "net", "org"]
    slds = ["example", "other", "hoster", "cloudflare", "x"]
    out = []
    for i in range(count):
        domain = f"d{i}.{rng.choice(tlds)}"
        rcode = rng.choice(["NOERROR", "NOERROR", "NOERROR", "NXDOMAIN", "SERVFAIL"])
        nss = []
        if rcode == "NOERROR":
            for j in range(rng.randint(0, 5)):
                host = rng.choice([domain, f"{rng.choice(slds)}.{rng.choice(tlds)}"])
                nss.append({"name": f"ns{j}.{host}", "glue": ["192.0.2.1"] if rng.random() < 0.4 else []})
        out.append({"domain": domain, "rcode": rcode, "nameservers": nss, "cname": rng.random() < 0.05})
    return ingest(json.dumps(o) for o in out).observations


def check_partitions(s: BailiwickStats) -> None:
    assert s.in_bailiwick_strict + s.out_of_bailiwick_strict == s.total_ns
    assert s.in_bailiwick_wider + s.out_of_bailiwick_wider == s.total_ns
    assert s.ns_with_glue + s.ns_without_glue == s.total_ns
    assert s.in_bailiwick_strict <= s.in_bailiwick_wider
    assert s.in_bailiwick_strict + s.wider_only == s.in_bailiwick_wider
    assert sum(s.ns_count_histogram.values()) == s.valid_domains
