"""Scenario configuration and the end-to-end attack run."""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from typing import Any

from .authoritative import AttackVariantConfig, AuthoritativeServer, Zone
from .engine import Simulator
from .message import DEFAULT_SIZE_MODEL, RecordType, ResourceRecord, SizeModel, make_query
from .metrics import CostModelInput, EndpointMap, build_report
from .names import ROOT, DomainName, name
from .resolver import FetchPolicy, Resolver, parse_selector
from .transport import LinkModel, Network

ROOT_ADDR = "198.41.0.4"
TLD_ADDR = "192.5.6.30"
ATTACKER_ADDR = "203.0.113.66"
VICTIM_ADDR = "198.51.100.53"
HONEST_ADDR = "192.0.2.53"
RESOLVER_ADDR = "10.0.0.53"
CLIENT_ADDR = "10.0.0.2"

VARIANTS = ("a", "b", "c", "honest")
TC_MODELS = ("auto", "forced-0", "forced-1")
DEFAULT_N = {"a": 135, "b": 37, "c": 37, "honest": 0}
ATTACKER_UDP_LIMIT = 4096


class ScenarioError(ValueError):
    """Invalid scenario field; a usage error."""


class InfeasibleScenario(ValueError):
    """Well-formed but impossible to run (for example a breadth cap below 1)."""


@dataclass
class AttackScenario:
    variant: str = "b"
    n: int | None = None
    n1: int = 37
    n2: int = 135
    max_rq: int = 75
    n_max: int = 135
    fetch_policy: str = "fetch-all"
    breadth_cap: int | None = None
    requests: int = 1
    tc_model: str = "auto"
    loss_capacity: int | None = None
    seed: int = 0
    selector: str = "round-robin"
    target_tld_pool: tuple[str, ...] = ("com",)
    latency_ms: float = 1.0

    def __post_init__(self):
        if self.n is None:
            self.n = DEFAULT_N.get(self.variant, 0)
        self.target_tld_pool = tuple(self.target_tld_pool)

    def validate(self) -> AttackScenario:
        problems = []
        if self.variant not in VARIANTS:
            problems.append(f"variant: must be one of {', '.join(VARIANTS)}")
        if self.tc_model not in TC_MODELS:
            problems.append(f"tc_model: must be one of {', '.join(TC_MODELS)}")
        for key in ("n", "n1", "n2", "max_rq", "n_max"):
            value = getattr(self, key)
            if not isinstance(value, int) or value < 0:
                problems.append(f"{key}: must be a non-negative integer")
        if not isinstance(self.requests, int) or self.requests < 1:
            problems.append("requests: must be a positive integer")
        try:
            FetchPolicy.parse(self.fetch_policy)
        except ValueError as exc:
            problems.append(f"fetch_policy: {exc}")
        try:
            parse_selector(self.selector)
        except ValueError as exc:
            problems.append(f"selector: {exc}")
        if self.loss_capacity is not None and self.loss_capacity < 1:
            problems.append("loss_capacity: must be >= 1")
        if not self.target_tld_pool or any("." in t.strip(".") or not t for t in self.target_tld_pool):
            problems.append("target_tld_pool: must list single-label TLDs")
        if self.latency_ms < 0:
            problems.append("latency_ms: must be >= 0")
        if problems:
            raise ScenarioError("; ".join(problems))
        if self.breadth_cap is not None and self.breadth_cap < 1:
            raise InfeasibleScenario("breadth_cap: must be at least 1")
        return self

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["target_tld_pool"] = list(self.target_tld_pool)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> AttackScenario:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ScenarioError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    def model_input(self) -> CostModelInput | None:
        if self.variant == "honest":
            return None
        return CostModelInput(self.variant, n=self.n, max_rq=self.max_rq, n_max=self.n_max, tc=self.effective_tc(),
                              n1=self.n1, n2=self.n2, breadth_cap=self.breadth_cap)

    def effective_tc(self) -> int:
        if self.tc_model == "forced-0":
            return 0
        if self.tc_model == "forced-1":
            return 1
        # root and TLD negatives are signed and oversize; plain SLD victims are not
        return 0 if self.variant == "b" else 1


def _a(owner: str | DomainName, addr: str, ttl: int = 86400) -> ResourceRecord:
    return ResourceRecord(name(owner), RecordType.A, ttl, addr)


def _ns(owner: str | DomainName, target: str | DomainName, ttl: int = 86400) -> ResourceRecord:
    return ResourceRecord(name(owner), RecordType.NS, ttl, name(target))


@dataclass
class Topology:
    sim: Simulator
    network: Network
    resolver: Resolver
    attacker: AuthoritativeServer | None
    servers: dict[str, AuthoritativeServer]
    client_names: list[DomainName]
    endpoints: EndpointMap


def build_topology(sc: AttackScenario, size_model: SizeModel = DEFAULT_SIZE_MODEL) -> Topology:
    tc = sc.tc_model
    signed_upper = tc != "forced-0"
    signed_sld = tc == "forced-1"
    sim = Simulator()
    net = Network(sim, size_model, LinkModel(latency=sc.latency_ms, capacity=sc.loss_capacity))

    tlds = sorted({"com", *sc.target_tld_pool})
    root_zone = Zone(ROOT, [_ns(ROOT, "a.root-servers.net"), _a("a.root-servers.net", ROOT_ADDR),
                            _a("a.gtld-servers.net", TLD_ADDR)], dnssec_like=signed_upper)
    for tld in tlds:
        root_zone.add(_ns(tld, "a.gtld-servers.net"))
    tld_zones = {tld: Zone(tld, [_ns(tld, "a.gtld-servers.net")], dnssec_like=signed_upper) for tld in tlds}
    com = tld_zones["com"]
    for sld, addr in (("attacker.com", ATTACKER_ADDR), ("victim.com", VICTIM_ADDR),
                      ("microsoft.com", HONEST_ADDR)):
        com.add(_ns(sld, f"ns1.{sld}"))
        com.add(_a(f"ns1.{sld}", addr))

    root = AuthoritativeServer(ROOT_ADDR, [root_zone])
    tld_server = AuthoritativeServer(TLD_ADDR, list(tld_zones.values()))
    victim_zone = Zone("victim.com", [_ns("victim.com", "ns1.victim.com"), _a("ns1.victim.com", VICTIM_ADDR)],
                       dnssec_like=signed_sld)
    victim = AuthoritativeServer(VICTIM_ADDR, [victim_zone])
    honest_zone = Zone("microsoft.com", [_ns("microsoft.com", "ns1.microsoft.com"),
                                         _a("ns1.microsoft.com", HONEST_ADDR)], dnssec_like=signed_sld)
    honest = AuthoritativeServer(HONEST_ADDR, [honest_zone])
    servers = {"root": root, "tld": tld_server, "victim": victim, "honest": honest}

    attacker = None
    if sc.variant != "honest":
        cfg = AttackVariantConfig(sc.variant, n=sc.n, target_tld_pool=list(sc.target_tld_pool),
                                  n1=sc.n1, n2=sc.n2, n_max=sc.n_max)
        attacker_zone = Zone("attacker.com", [_ns("attacker.com", "ns1.attacker.com"),
                                              _a("ns1.attacker.com", ATTACKER_ADDR)])
        attacker = AuthoritativeServer(ATTACKER_ADDR, [attacker_zone], behavior=cfg, udp_limit=ATTACKER_UDP_LIMIT)
        servers["attacker"] = attacker
    for server in servers.values():
        net.register(server)
    net.register_endpoint(CLIENT_ADDR)

    resolver = Resolver(sim, net, RESOLVER_ADDR, [(name("a.root-servers.net"), ROOT_ADDR)],
                        policy=FetchPolicy.parse(sc.fetch_policy), breadth_cap=sc.breadth_cap,
                        selector=parse_selector(sc.selector), max_rq=sc.max_rq, seed=sc.seed)

    if sc.variant == "honest":
        for i in range(1, sc.requests + 1):
            honest_zone.add(_a(f"www{i}.microsoft.com", "192.0.2.80", 300))
        client_names = [name(f"www{i}.microsoft.com") for i in range(1, sc.requests + 1)]
        endpoints = EndpointMap(RESOLVER_ADDR, HONEST_ADDR, ())
    else:
        stem = "req" if sc.variant == "c" else "sd"
        client_names = [name(f"{stem}{i}.attacker.com") for i in range(1, sc.requests + 1)]
        victim_ep = {"a": TLD_ADDR, "b": VICTIM_ADDR, "c": ROOT_ADDR}[sc.variant]
        endpoints = EndpointMap(RESOLVER_ADDR, victim_ep, (CLIENT_ADDR, ATTACKER_ADDR))
    return Topology(sim, net, resolver, attacker, servers, client_names, endpoints)


def _setup_names(sc: AttackScenario) -> list[DomainName]:
    """Delegations the resolver learns before the measured requests."""
    if sc.variant == "honest":
        return []
    out = [name("attacker.com")]
    if sc.variant == "b":
        out.append(name("victim.com"))
    if sc.variant == "a":
        out.extend(name(t) for t in sorted(set(sc.target_tld_pool)))
    return out


def _prime(topo: Topology, names: list[DomainName]) -> None:
    for zone in names:
        topo.resolver.resolve(topo.resolver.new_task(zone, RecordType.NS))
        topo.sim.run()


def _client(topo: Topology, rng: random.Random, series: list[dict], outcomes: dict[str, int]):
    net = topo.network
    eps = topo.endpoints
    for i, qname in enumerate(topo.client_names, 1):
        query = make_query(rng.getrandbits(16), qname, RecordType.A)
        task, reply = yield topo.resolver.handle_client(CLIENT_ADDR, query)
        outcomes[reply.rcode.value] = outcomes.get(reply.rcode.value, 0) + 1
        ledger = net.ledger
        series.append({
            "request": i,
            "resolver_upstream_pkts": ledger.report(eps.resolver, "upstream").packets,
            "victim_pkts": ledger.report(eps.victim, "all").packets,
            "attacker_pkts": sum(ledger.report(ep, "all").packets_sent for ep in eps.attackers),
        })


def run_attack(sc: AttackScenario, timestamp: bool = True, size_model: SizeModel = DEFAULT_SIZE_MODEL):
    """Run a scenario end to end and return its AttackReport."""
    sc.validate()
    topo = build_topology(sc, size_model)
    _prime(topo, _setup_names(sc))
    setup = topo.network.swap_ledger()
    cache = topo.resolver.cache
    baseline = cache.scan_counts()
    tasks_before = len(topo.resolver.tasks)

    rng = random.Random(sc.seed)
    series: list[dict] = []
    outcomes: dict[str, int] = {}
    topo.sim.process(_client(topo, rng, series, outcomes))
    topo.sim.run()

    counts = cache.scan_counts()
    stats = {k: counts[k] - baseline[k] for k in counts}
    nx = sum(t.nx_on_ns_fetch for t in topo.resolver.tasks[tasks_before:])
    return build_report(
        topo.network.ledger,
        stats,
        sc.model_input(),
        topo.endpoints,
        requests=sc.requests,
        cache_totals=counts,
        nx_detector_total=nx,
        setup_packets=setup.total().packets_sent,
        outcomes=dict(sorted(outcomes.items())),
        series=series,
        scenario=sc.to_dict(),
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds") if timestamp else None,
    )
