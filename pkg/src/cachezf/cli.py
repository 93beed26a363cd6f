"""
Command-line front end.

    python -m cachezf demo
    python -m cachezf sweep --kt 1:4 --kr 1:4 --format csv
    python -m cachezf verify --config cfg.json --demand 1,2,3
    python -m cachezf bounds --grid 6
    python -m cachezf exact bundled:three_by_three --exact-cap 18

Reports go to stdout or ``--out``. The exit code is 0 iff every embedded check
passes. Reports contain no wall-clock data unless ``--timing`` is given, so
equal arguments give byte-identical output.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
import time
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import converse
from .errors import CacheZFError, ExactCapExceeded, InstanceFormatError
from .phy import TOL_ZERO, gen_channel, verify_schedule
from .placement import NetworkConfig, split_file
from .scheduler import NO_DELIVERY_NEEDED, DemandVector, needed_subfiles, plan_delivery

DEFAULT_SEED = 20180101
SEED_ENV = "CACHEZF_SEED"

CSV_COLUMNS = (
    "k_t", "k_r", "n", "m_t", "m_r", "f", "t_t", "t_r", "demand", "delivered",
    "blocks", "dof", "dof_lower", "dof_upper", "gap", "max_residual", "seed",
)
CSV_VERSION = 1

MAX_EXHAUSTIVE_DEMANDS = 720
DEMAND_SAMPLE = 100

# the worked 3x3 example: groups as label sets ("A_{12,2}" = file A at Tx 1,2 and Rx 2)
DEMO_CONFIG = NetworkConfig(3, 3, 3, Fraction(2), Fraction(1), 9)
DEMO_DEMAND = (1, 2, 3)
DEMO_GROUPS = (
    {"A_{12,2}", "B_{23,3}", "C_{13,1}"},
    {"A_{12,3}", "B_{13,1}", "C_{23,2}"},
    {"A_{13,2}", "B_{12,3}", "C_{23,1}"},
    {"A_{13,3}", "B_{23,1}", "C_{12,2}"},
    {"A_{23,2}", "B_{13,3}", "C_{12,1}"},
    {"A_{23,3}", "B_{12,1}", "C_{13,2}"},
)


@dataclass
class RunReport:
    command: str
    seed: int
    records: list[dict[str, Any]] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_json(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "seed": self.seed,
            "ok": self.ok,
            "errors": self.errors,
            **self.extra,
            "records": self.records,
        }


# -- helpers ----------------------------------------------------------------

def _file_letter(n: int) -> str:
    return chr(ord("A") + n - 1) if n <= 26 else f"W{n}"


def subfile_label(file: int, tx_set: Sequence[int], rx_set: Sequence[int]) -> str:
    sep = "" if max([*tx_set, *rx_set], default=0) < 10 else "."
    return f"{_file_letter(file)}_{{{sep.join(map(str, tx_set))},{sep.join(map(str, rx_set))}}}"


def _rational(x) -> str:
    return str(x)


def _parse_range(text: str) -> range:
    lo, _, hi = text.partition(":")
    lo_i = int(lo)
    hi_i = int(hi) if hi else lo_i
    if hi_i < lo_i:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return range(lo_i, hi_i + 1)


def _parse_demand(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad demand {text!r}; expected e.g. 1,2,3") from None


def resolve_seed(arg: int | None) -> int:
    if arg is None:
        env = os.environ.get(SEED_ENV)
        arg = int(env) if env else DEFAULT_SEED
    if not 0 <= arg < 2**64:
        raise CacheZFError(f"seed {arg} outside the unsigned 64-bit range")
    return arg


def _load_json(path: str) -> Any:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_config(path: str) -> NetworkConfig:
    doc = _load_json(path)
    if isinstance(doc, dict) and "config" in doc:
        doc = doc["config"]
    return NetworkConfig.from_json(doc)


def demand_samples(cfg: NetworkConfig, seed: int) -> list[tuple[int, ...]]:
    """All distinct-file demand vectors if there are at most 720, else 100
    drawn reproducibly from ``seed``."""
    N, K = cfg.n_files, cfg.k_r
    count = 1
    for k in range(K):
        count *= N - k
    if count <= MAX_EXHAUSTIVE_DEMANDS:
        return list(itertools.permutations(range(1, N + 1), K))
    rng = np.random.default_rng(seed)
    picked = set()
    while len(picked) < DEMAND_SAMPLE:
        picked.add(tuple(int(x) + 1 for x in rng.permutation(N)[:K]))
    return sorted(picked)


def integer_grid(kt_range: Sequence[int], kr_range: Sequence[int], n_files=None,
                 include_saturated: bool = True) -> Iterator[NetworkConfig]:
    """Configs with integer replication factors ``t_T >= 1``, ``t_R >= 0``;
    ``n_files`` defaults to ``K_R`` so that distinct demands exist."""
    for kt in kt_range:
        for kr in kr_range:
            N = kr if n_files is None else n_files
            for t_t in range(1, kt + 1):
                for t_r in range(0, kr + 1):
                    if t_t + t_r > kr and not include_saturated:
                        continue
                    yield NetworkConfig(kt, kr, N, Fraction(t_t * N, kt), Fraction(t_r * N, kr))


def _config_fields(cfg: NetworkConfig) -> dict[str, Any]:
    return {
        "k_t": cfg.k_t, "k_r": cfg.k_r, "n": cfg.n_files,
        "m_t": _rational(cfg.m_t), "m_r": _rational(cfg.m_r),
        "t_t": _rational(cfg.t_t), "t_r": _rational(cfg.t_r),
    }


def delivery_record(cfg: NetworkConfig, demand: Sequence[int], seed: int,
                    tol_zero: float = TOL_ZERO) -> dict[str, Any]:
    """Plan, verify and bound one (config, demand) pair; ``ok`` is False if
    any block is undecodable, the DoF differs from the achievable formula or
    the bound gap exceeds 2."""
    plan = plan_delivery(demand, cfg)
    bounds = converse.dof_bounds(cfg)
    max_res, regenerated, failures = 0.0, [], 0
    for share, sched in plan.parts:
        rep = verify_schedule(sched, demand, gen_channel(seed, share.config), share.config, tol_zero=tol_zero)
        max_res = max(max_res, rep.max_residual)
        regenerated.extend(rep.regenerated)
        failures += len(rep.failures)
    dof = plan.dof
    problems = []
    if failures:
        problems.append(f"{failures} undecodable receivers")
    if dof is not NO_DELIVERY_NEEDED and dof != bounds.dof_lower:
        problems.append(f"dof {dof} != achievable {bounds.dof_lower}")
    if bounds.gap_ratio > 2:
        problems.append(f"gap {bounds.gap_ratio} > 2")
    return {
        **_config_fields(cfg),
        "f": sum(s.packets for s, _ in plan.parts),
        "demand": "-".join(map(str, demand)),
        "delivered": plan.delivered,
        "blocks": plan.blocks,
        "dof": str(dof),
        "dof_lower": _rational(bounds.dof_lower),
        "dof_upper": _rational(bounds.dof_upper),
        "gap": _rational(bounds.gap_ratio),
        "max_residual": repr(max_res),
        "seed": seed,
        "regenerated": regenerated,
        "ok": not problems,
        "problems": problems,
    }


# -- subcommands -------------------------------------------------------------

def run_demo(seed: int, tol_zero: float = TOL_ZERO) -> RunReport:
    cfg, d = DEMO_CONFIG, DEMO_DEMAND
    report = RunReport("demo", seed)
    base = split_file(1, cfg)
    needed = needed_subfiles(d, cfg)
    plan = plan_delivery(d, cfg)
    (_, sched), = plan.parts
    groups = [
        {subfile_label(a.subfile.file, a.subfile.tx_set, a.subfile.cached_at) for a in assigned}
        for assigned in sched.assignments
    ]
    record = delivery_record(cfg, d, seed, tol_zero)
    checks = [
        ("base subfiles per file", len(base), 9),
        ("needed subfiles", len(needed), 18),
        ("delivery groups", len(groups), 6),
        ("group sizes", sorted({len(g) for g in groups}), [3]),
        ("dof", record["dof"], "3"),
    ]
    for name, got, want in checks:
        if got != want:
            report.errors.append(f"{name}: got {got}, expected {want}")
    got_groups = {frozenset(g) for g in groups}
    for g in DEMO_GROUPS:
        if frozenset(g) not in got_groups:
            report.errors.append(f"missing group {sorted(g)}; got {sorted(sorted(x) for x in got_groups)}")
    if not record["ok"]:
        report.errors.extend(record["problems"])
    report.extra["groups"] = [sorted(g) for g in groups]
    report.extra["config"] = cfg.to_json()
    report.records.append(record)
    return report


def run_sweep(configs: Sequence[NetworkConfig], seed: int, tol_zero: float = TOL_ZERO) -> RunReport:
    report = RunReport("sweep", seed)
    for cfg in configs:
        for d in demand_samples(cfg, seed):
            rec = delivery_record(cfg, d, seed, tol_zero)
            report.records.append(rec)
            if not rec["ok"]:
                report.errors.append(f"{cfg.label()} d={rec['demand']}: {'; '.join(rec['problems'])}")
    return report


def run_verify(cfg: NetworkConfig, demand: Sequence[int], seed: int, tol_zero: float = TOL_ZERO) -> RunReport:
    report = RunReport("verify", seed)
    DemandVector(tuple(demand)).check(cfg)
    rec = delivery_record(cfg, demand, seed, tol_zero)
    report.records.append(rec)
    if not rec["ok"]:
        report.errors.extend(rec["problems"])
    return report


def bounds_record(cfg: NetworkConfig) -> dict[str, Any]:
    b = converse.dof_bounds(cfg)
    return {**_config_fields(cfg), **b.to_json()}


def run_bounds(configs: Sequence[NetworkConfig], seed: int) -> RunReport:
    report = RunReport("bounds", seed)
    for cfg in configs:
        b = converse.dof_bounds(cfg)
        if not b.dof_lower <= b.dof_upper <= 2 * b.dof_lower:
            report.errors.append(f"{cfg.label()}: {b.dof_lower} <= {b.dof_upper} <= 2 * {b.dof_lower} fails")
        report.records.append(bounds_record(cfg))
    return report


def bounds_grid(max_k: int = 6, max_n: int = 6) -> Iterator[NetworkConfig]:
    """Every integer ``(M_T, M_R)`` with ``K_T M_T >= N`` for
    ``K_T, K_R, N <= max``."""
    for kt in range(1, max_k + 1):
        for kr in range(1, max_k + 1):
            for n in range(1, max_n + 1):
                for m_t in range(-(-n // kt), n + 1):
                    for m_r in range(0, n + 1):
                        yield NetworkConfig(kt, kr, n, Fraction(m_t), Fraction(m_r))


def open_instance(ref: str) -> converse.Instance:
    """Path to an instance file, or ``bundled:NAME`` for a packaged one."""
    if ref.startswith("bundled:"):
        name = ref.split(":", 1)[1]
        res = resources.files("cachezf") / "data" / f"{name}.json"
        if not res.is_file():
            raise InstanceFormatError(f"no bundled instance {name!r}; have {bundled_instances()}")
        return converse.parse_instance(res.read_text(), ref)
    return converse.load_instance(ref)


def bundled_instances() -> list[str]:
    root = resources.files("cachezf") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def run_exact(ref: str, seed: int, cap: int) -> RunReport:
    inst = open_instance(ref)
    report = RunReport("exact", seed)
    rec: dict[str, Any] = {"instance": ref, "name": inst.name, "packets": len(inst.packets)}
    try:
        rec["exact"] = converse.min_blocks_exact(inst.packets, cap=cap)
    except ExactCapExceeded as exc:
        rec["exact"] = None
        report.errors.append(str(exc))
    rec["greedy"] = converse.min_blocks_greedy(inst.packets)
    if inst.config is not None:
        rec["config"] = inst.config.to_json()
        rec["analytic_block_lb"] = _rational(converse.analytic_block_lb(inst.config))
        if inst.profile is not None:
            bad = inst.profile.violations(inst.config)
            if bad:
                report.errors.extend(f"profile: {v}" for v in bad)
            else:
                try:
                    avg = converse.average_min_blocks(inst.profile, inst.config, cap=cap)
                    rec["average_min_blocks"] = _rational(avg)
                    if converse.analytic_block_lb(inst.config) > avg:
                        report.errors.append(f"analytic bound exceeds average {avg}")
                except ExactCapExceeded as exc:
                    report.errors.append(f"average: {exc}")
    if rec["exact"] is not None and rec["greedy"] < rec["exact"]:
        report.errors.append(f"greedy {rec['greedy']} below exact {rec['exact']}")
    expected = inst.meta.get("expected", {}) if isinstance(inst.meta, dict) else {}
    for key, rkey in (("min_blocks", "exact"), ("average_min_blocks", "average_min_blocks"),
                      ("analytic_block_lb", "analytic_block_lb")):
        if key in expected and rkey in rec and str(rec[rkey]) != str(expected[key]):
            report.errors.append(f"{rkey}: got {rec[rkey]}, instance expects {expected[key]}")
    report.records.append(rec)
    return report


# -- output -------------------------------------------------------------------

def render(report: RunReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.to_json(), indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    if report.command in ("demo", "sweep", "verify"):
        columns = list(CSV_COLUMNS)
    else:
        columns = list(dict.fromkeys(k for r in report.records for k in r))
    writer = csv.DictWriter(buf, columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for r in report.records:
        writer.writerow({k: json.dumps(v) if isinstance(v, (dict, list)) else v for k, v in r.items()})
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with a network configuration")
    common.add_argument("--seed", type=int, default=None,
                        help=f"channel / sampling seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--exact-cap", type=int, default=converse.EXACT_CAP)
    common.add_argument("--tol-zero", type=float, default=TOL_ZERO)
    common.add_argument("--timing", action="store_true", help="add elapsed seconds to the report")

    p = argparse.ArgumentParser(prog="cachezf", description=__doc__.split("\n\n")[0].strip())
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("demo", parents=[common], help="reproduce the 3x3 worked example")
    sw = sub.add_parser("sweep", parents=[common], help="DoF and zero-forcing checks over a grid")
    sw.add_argument("--kt", type=_parse_range, default=range(1, 5), help="K_T range, e.g. 1:4")
    sw.add_argument("--kr", type=_parse_range, default=range(1, 5), help="K_R range, e.g. 1:4")
    sw.add_argument("--n-files", type=int, default=None, help="library size (default K_R)")
    sw.add_argument("--no-saturated", action="store_true", help="skip t_T + t_R > K_R")
    vf = sub.add_parser("verify", parents=[common], help="schedule and verify one config")
    vf.add_argument("--demand", type=_parse_demand, help="requested files, e.g. 1,2,3 (default 1..K_R)")
    bd = sub.add_parser("bounds", parents=[common], help="DoF bounds for --config or a grid")
    bd.add_argument("--grid", type=int, default=6, help="largest K_T, K_R, N of the grid")
    ex = sub.add_parser("exact", parents=[common], help="solve a packet-scheduling instance exactly")
    ex.add_argument("instance", help="instance file or bundled:NAME")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        seed = resolve_seed(args.seed)
        cfg = load_config(args.config) if args.config else None
        if args.command == "demo":
            report = run_demo(seed, args.tol_zero)
        elif args.command == "sweep":
            configs = [cfg] if cfg else list(integer_grid(
                args.kt, args.kr, args.n_files, include_saturated=not args.no_saturated))
            report = run_sweep(configs, seed, args.tol_zero)
        elif args.command == "verify":
            if cfg is None:
                raise CacheZFError("verify needs --config")
            demand = args.demand or tuple(range(1, cfg.k_r + 1))
            report = run_verify(cfg, demand, seed, args.tol_zero)
        elif args.command == "bounds":
            configs = [cfg] if cfg else list(bounds_grid(args.grid, args.grid))
            report = run_bounds(configs, seed)
        else:
            report = run_exact(args.instance, seed, args.exact_cap)
    except CacheZFError as exc:
        print(f"cachezf: error: {exc}", file=sys.stderr)
        return 2
    if args.timing:
        report.extra["elapsed_s"] = round(time.perf_counter() - started, 3)
    text = render(report, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for err in report.errors:
        print(f"cachezf: check failed: {err}", file=sys.stderr)
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
