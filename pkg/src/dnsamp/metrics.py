"""Closed-form cost model and attack reports."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Any

from .transport import UDP, PacketLedger

VARIANTS = ("a", "b", "c")
# client request + one stage-1 referral + 74 stage-2 referrals
SELF_DELEGATION_ATTACKER_COST = 76


@dataclass(frozen=True)
class CostModelInput:
    variant: str
    n: int = 37
    max_rq: int = 75
    n_max: int = 135
    tc: int = 0
    n1: int = 37
    n2: int = 135
    breadth_cap: int | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.tc not in (0, 1):
            raise ValueError("tc must be 0 or 1")
        for key in ("n", "max_rq", "n_max", "n1", "n2"):
            if getattr(self, key) < 0:
                raise ValueError(f"{key} must be non-negative")
        if self.breadth_cap is not None and self.breadth_cap < 1:
            raise ValueError("breadth_cap must be >= 1")


def _sld_budget(n: int, max_rq: int) -> int:
    # one budget unit goes to the query that fetched the referral itself
    return 2 * min(n, max(max_rq - 1, 0) // 2)


def firepower(inp: CostModelInput) -> int:
    """Address fetches one malicious client request induces (FetchAll resolver)."""
    cap = inp.breadth_cap
    accepted = lambda k: k if cap is None else min(k, cap)  # noqa: E731
    if inp.variant == "a":
        return 2 * accepted(min(inp.n, inp.n_max))
    if inp.variant == "b":
        return _sld_budget(accepted(min(inp.n, inp.n_max)), inp.max_rq)
    stage1 = _sld_budget(accepted(min(inp.n1, inp.n_max)), inp.max_rq)
    per_referral = min(inp.n2, inp.n_max)
    if cap is None:
        return stage1 * 2 * per_referral
    # the A and AAAA referrals for one stage-1 name merge into one capped delegation
    return stage1 // 2 * 2 * min(cap, 2 * per_referral)


def predicted_victim_cost(f: int, tc: int) -> int:
    if f < 0 or tc not in (0, 1):
        raise ValueError("need F >= 0 and tc in {0, 1}")
    return 2 * f * (1 + 5 * tc)


def attacker_cost(variant: str) -> int:
    if variant in ("a", "b"):
        return 2
    if variant == "c":
        return SELF_DELEGATION_ATTACKER_COST
    raise ValueError(f"unknown variant {variant!r}")


def ratio(num: float, den: float) -> float | None:
    return None if not den else num / den


@dataclass(frozen=True)
class EndpointMap:
    """Which ledger endpoints play which part in a run."""

    resolver: str
    victim: str
    attackers: tuple[str, ...] = ()


class ReportError(KeyError):
    pass


@dataclass
class AttackReport:
    variant: str
    requests: int
    F: int | None
    F_simulated: int
    attacker_cost_pkts: int
    victim_cost_pkts: int
    attacker_bytes: int
    victim_bytes: int
    PAF: float | None
    BAF: float | None
    resolver_upstream_pkts: int
    resolver_upstream_bytes: int
    resolver_PAF: float | None
    predicted_victim_cost: int | None
    predicted_attacker_cost: int | None
    predicted_PAF: float | None
    cache_stats: dict[str, int]
    cache_totals: dict[str, int] = field(default_factory=dict)
    nx_detector_total: int = 0
    losses: int = 0
    setup_packets: int = 0
    outcomes: dict[str, int] = field(default_factory=dict)
    ledger: list[dict] = field(default_factory=list)
    series: list[dict] = field(default_factory=list)
    scenario: dict[str, Any] = field(default_factory=dict)
    timestamp: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict) -> AttackReport:
        return cls(**data)


FLAT_FIELDS = (
    "variant", "requests", "F", "F_simulated", "attacker_cost_pkts", "victim_cost_pkts",
    "attacker_bytes", "victim_bytes", "PAF", "BAF", "resolver_upstream_pkts",
    "resolver_upstream_bytes", "resolver_PAF", "predicted_victim_cost", "predicted_PAF",
    "nx_detector_total", "losses", "setup_packets",
)


def report_csv(reports: list[AttackReport]) -> str:
    """One flat row per report, plus the policy and cache columns."""
    buf = io.StringIO()
    cache_cols = [f"cache_{k}" for k in ("A", "AAAA", "NS", "NX")]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["fetch_policy", "breadth_cap", *FLAT_FIELDS, *cache_cols])
    for r in reports:
        writer.writerow([
            r.scenario.get("fetch_policy"), r.scenario.get("breadth_cap"),
            *(getattr(r, f) for f in FLAT_FIELDS),
            *(r.cache_stats.get(k, 0) for k in ("A", "AAAA", "NS", "NX")),
        ])
    return buf.getvalue()


def series_csv(report: AttackReport) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["request", "resolver_upstream_pkts", "victim_pkts", "attacker_pkts"],
                            lineterminator="\n")
    writer.writeheader()
    writer.writerows(report.series)
    return buf.getvalue()


def build_report(
    ledger: PacketLedger,
    cache_stats: dict[str, int],
    model_input: CostModelInput | None,
    endpoints: EndpointMap,
    requests: int = 1,
    **extra: Any,
) -> AttackReport:
    """Fill an AttackReport from a finished run.

    ``model_input`` of ``None`` (an honest run) leaves the calculated figures
    empty. Attacker cost counts packets sent by the attacker endpoints.
    """
    for ep in (endpoints.resolver, endpoints.victim, *endpoints.attackers):
        if ep not in ledger.endpoints:
            raise ReportError(f"endpoint {ep!r} is not in the ledger")
    victim = ledger.report(endpoints.victim, "all")
    victim_udp_queries = ledger.report(endpoints.victim, "client", UDP).packets_received
    upstream = ledger.report(endpoints.resolver, "upstream")
    a_pkts = a_bytes = 0
    for ep in endpoints.attackers:
        c = ledger.report(ep, "all")
        a_pkts += c.packets_sent
        a_bytes += c.bytes_sent
    victim_bytes = victim.bytes
    if model_input is not None:
        f = firepower(model_input)
        pv = predicted_victim_cost(f, model_input.tc) * requests
        pa = attacker_cost(model_input.variant) * requests
        ppaf = ratio(pv, pa)
    else:
        f = pv = pa = ppaf = None
    return AttackReport(
        variant=model_input.variant if model_input else "honest",
        requests=requests,
        F=f,
        F_simulated=victim_udp_queries,
        attacker_cost_pkts=a_pkts,
        victim_cost_pkts=victim.packets,
        attacker_bytes=a_bytes,
        victim_bytes=victim_bytes,
        PAF=ratio(victim.packets, a_pkts) if model_input else None,
        BAF=ratio(victim_bytes, a_bytes) if model_input else None,
        resolver_upstream_pkts=upstream.packets,
        resolver_upstream_bytes=upstream.bytes,
        resolver_PAF=ratio(upstream.packets, a_pkts) if model_input else None,
        predicted_victim_cost=pv,
        predicted_attacker_cost=pa,
        predicted_PAF=ppaf,
        cache_stats=dict(cache_stats),
        losses=ledger.losses,
        ledger=ledger.rows(),
        **extra,
    )


class ScenarioMismatch(ValueError):
    pass


def _reduction(before: float | None, after: float | None) -> float | None:
    if before is None or after is None:
        return None
    return ratio(before, after)


def compare_mitigation(baseline: AttackReport, mitigated: AttackReport, strict: bool = False) -> dict:
    """Side-by-side figures and baseline/mitigated reduction ratios.

    Scenario fields other than the fetch policy and breadth cap must agree;
    differences are listed under ``scenario_mismatch`` (or raised if ``strict``).
    """
    ignore = {"fetch_policy", "breadth_cap"}
    keys = sorted(set(baseline.scenario) | set(mitigated.scenario))
    mismatch = [k for k in keys if k not in ignore and baseline.scenario.get(k) != mitigated.scenario.get(k)]
    if mismatch and strict:
        raise ScenarioMismatch(f"scenarios differ in {', '.join(mismatch)}")
    rows = {}
    for key in ("resolver_upstream_pkts", "victim_cost_pkts", "attacker_cost_pkts", "resolver_upstream_bytes",
                "victim_bytes", "PAF", "resolver_PAF", "nx_detector_total"):
        b, m = getattr(baseline, key), getattr(mitigated, key)
        rows[key] = {"baseline": b, "mitigated": m, "reduction": _reduction(b, m)}
    for kind in ("A", "AAAA", "NS", "NX"):
        b, m = baseline.cache_stats.get(kind, 0), mitigated.cache_stats.get(kind, 0)
        rows[f"cache_{kind}"] = {"baseline": b, "mitigated": m, "reduction": _reduction(b, m)}
    return {
        "baseline_policy": baseline.scenario.get("fetch_policy"),
        "mitigated_policy": mitigated.scenario.get("fetch_policy"),
        "scenario_mismatch": mismatch,
        "rows": rows,
    }
