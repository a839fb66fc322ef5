"""Command-line front end: ``dnsamp run-attack | compare | analyze-bailiwick | report``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import bailiwick
from .metrics import AttackReport, compare_mitigation, report_csv, series_csv
from .scenario import TC_MODELS, VARIANTS, AttackScenario, InfeasibleScenario, ScenarioError, run_attack

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _optional_int(text: str) -> int | None:
    return None if text.lower() in ("none", "off", "") else int(text)


# flag name -> (scenario key, type, help)
SCENARIO_FLAGS: dict[str, tuple[str, Any, str]] = {
    "--variant": ("variant", str, f"attack variant: {', '.join(VARIANTS)}"),
    "--n": ("n", int, "delegations per referral"),
    "--n1": ("n1", int, "self-delegation stage-1 names"),
    "--n2": ("n2", int, "self-delegation stage-2 names"),
    "--max-rq": ("max_rq", int, "resolver query budget per client request"),
    "--n-max": ("n_max", int, "most NS names one referral can carry"),
    "--fetch-policy": ("fetch_policy", str, "fetch-all or maxfetch:K"),
    "--breadth-cap": ("breadth_cap", _optional_int, "MaxBreadth cap (none to disable)"),
    "--requests": ("requests", int, "client requests to send"),
    "--tc-model": ("tc_model", str, f"one of {', '.join(TC_MODELS)}"),
    "--loss-capacity": ("loss_capacity", _optional_int, "max in-flight exchanges per endpoint"),
    "--seed": ("seed", int, "RNG seed"),
    "--selector": ("selector", str, "round-robin or srtt[:DECAY]"),
    "--tld-pool": ("target_tld_pool", lambda s: tuple(t for t in s.split(",") if t), "comma-separated TLDs"),
    "--latency-ms": ("latency_ms", float, "one-way link latency"),
}


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON or YAML file with scenario keys")
    for flag, (key, typ, help_) in SCENARIO_FLAGS.items():
        p.add_argument(flag, dest=key, type=typ, default=argparse.SUPPRESS, help=help_)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")


def load_config(path: Path) -> dict[str, Any]:
    text = path.read_text()
    if path.suffix in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a mapping of scenario keys")
    return {k.replace("-", "_"): v for k, v in data.items()}


def scenario_from_args(args: argparse.Namespace) -> AttackScenario:
    values: dict[str, Any] = {}
    if args.config is not None:
        try:
            values.update(load_config(args.config))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
    for key, _, _ in SCENARIO_FLAGS.values():
        if key in vars(args):
            values[key] = getattr(args, key)
    if "target_tld_pool" in values:
        values["target_tld_pool"] = tuple(values["target_tld_pool"])
    return AttackScenario.from_dict(values).validate()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _summary(r: AttackReport) -> str:
    fmt = lambda v: "n/a" if v is None else (f"{v:.2f}" if isinstance(v, float) else str(v))  # noqa: E731
    return (f"variant={r.variant} requests={r.requests} F={fmt(r.F)} victim_pkts={r.victim_cost_pkts} "
            f"predicted={fmt(r.predicted_victim_cost)} attacker_pkts={r.attacker_cost_pkts} "
            f"resolver_upstream_pkts={r.resolver_upstream_pkts} PAF={fmt(r.PAF)} BAF={fmt(r.BAF)} "
            f"nx_detector={r.nx_detector_total} losses={r.losses}")


def cmd_run_attack(args: argparse.Namespace) -> int:
    sc = scenario_from_args(args)
    report = run_attack(sc, timestamp=not args.no_timestamp)
    stem = args.out / f"report-{sc.variant}"
    _write(stem.with_suffix(".json"), report.to_json())
    _write(args.out / f"series-{sc.variant}.csv", series_csv(report))
    print(_summary(report))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    if len(policies) < 2:
        raise UsageError("compare needs at least two policies")
    base = scenario_from_args(args)
    reports = []
    for policy in policies:
        sc = AttackScenario.from_dict({**base.to_dict(), "fetch_policy": policy}).validate()
        reports.append(run_attack(sc, timestamp=not args.no_timestamp))
    comparisons = [compare_mitigation(reports[0], r) for r in reports[1:]]
    doc = {"scenario": base.to_dict(), "policies": policies, "comparisons": comparisons,
           "reports": [r.to_dict() for r in reports]}
    _write(args.out / "compare.json", json.dumps(doc, indent=2))
    _write(args.out / "compare.csv", report_csv(reports))
    for i, r in enumerate(reports):
        _write(args.out / f"series-{i}-{policies[i].replace(':', '')}.csv", series_csv(r))
    for r in reports:
        print(f"[{r.scenario['fetch_policy']}] {_summary(r)}")
    for c in comparisons:
        red = c["rows"]["resolver_upstream_pkts"]["reduction"]
        print(f"{c['baseline_policy']} vs {c['mitigated_policy']}: upstream reduction "
              f"{'n/a' if red is None else f'{red:.2f}x'}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        with open(args.input) as fh:
            result = bailiwick.ingest(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from None
    for diag in result.diagnostics:
        print(f"{args.input}: {diag}", file=sys.stderr)
    stats = bailiwick.analyze(result.observations, args.zone_origin_rule)
    stats.malformed_lines = result.malformed
    _write(args.out / "bailiwick.json", bailiwick.emit(stats, "json"))
    for stem, text in bailiwick.emit(stats, "csv").items():
        _write(args.out / f"bailiwick-{stem}.csv", text)
    print(f"domains={stats.requests} valid={stats.valid_domains} total_ns={stats.total_ns} "
          f"mean_ns={stats.mean_ns_per_domain:.2f} malformed={stats.malformed_lines}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        data = json.loads(Path(args.report).read_text())
        report = AttackReport.from_dict(data)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"cannot load report {args.report}: {exc}") from None
    stem = Path(args.report).stem
    _write(args.out / f"{stem}-summary.csv", report_csv([report]))
    _write(args.out / f"{stem}-series.csv", series_csv(report))
    print(_summary(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dnsamp", description="Deterministic NS-referral amplification simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run-attack", help="run one scenario and write its report")
    _add_scenario_flags(p)
    p.set_defaults(func=cmd_run_attack)

    p = sub.add_parser("compare", help="run a scenario under several fetch policies")
    _add_scenario_flags(p)
    p.add_argument("--policies", default="fetch-all,maxfetch:1", help="comma-separated fetch policies")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("analyze-bailiwick", help="glue and bailiwick statistics from JSON lines")
    p.add_argument("input", type=Path)
    p.add_argument("--zone-origin-rule", choices=bailiwick.ZONE_ORIGIN_RULES, default="tld")
    p.add_argument("--out", type=Path, default=Path("."))
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="re-render CSV files from a stored JSON report")
    p.add_argument("report", type=Path)
    p.add_argument("--out", type=Path, default=Path("."))
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"dnsamp: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleScenario as exc:
        print(f"dnsamp: infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    raise SystemExit(main())
