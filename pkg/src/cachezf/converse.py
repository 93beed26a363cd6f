"""
Outer bounds for one-shot linear delivery.

A set of packets can share a block only if their intended receivers are
distinct and their number does not exceed ``|T_l| + |R_l|`` for every member
(caching transmitters plus caching receivers). The minimum number of blocks
for a packet list is then a minimum set partition into such feasible groups,
solved exactly by bitmask search for small instances. Averaging that minimum
over all distinct-demand vectors is bounded below in closed form by
``K_R N F (1 - M_R/N)^2 / (K_T M_T + K_R M_R)``, which turns into the DoF
upper bound reported by :func:`dof_bounds`.

All bound values are exact rationals.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from collections.abc import Callable, Hashable, Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import kernels
from .errors import DomainError, ExactCapExceeded, InstanceFormatError, SingularChannelError
from .phy import COND_LIMIT, ChannelMatrix, nulling_residual
from .placement import CachePlacement, NetworkConfig, build_placement, minimal_f
from .scheduler import DemandVector, memory_sharing_packets, saturate

__all__ = [
    "PacketInstance",
    "PlacementProfile",
    "BoundsReport",
    "Instance",
    "EXACT_CAP",
    "group_feasible",
    "group_feasible_numeric",
    "feasible_groups",
    "min_blocks_exact",
    "min_blocks_bruteforce",
    "min_blocks_greedy",
    "greedy_partition",
    "average_min_blocks",
    "analytic_block_lb",
    "order_aggregates",
    "profile_block_bound",
    "dof_bounds",
    "instance_for_config",
    "load_instance",
    "parse_instance",
    "dump_instance",
]

EXACT_CAP = 20
NUMERIC_TOL = 1e-8


@dataclass(frozen=True)
class PacketInstance:
    """A packet to deliver: cached at ``tx_holders`` and ``rx_holders``,
    requested by ``intended_rx``."""

    id: Hashable
    tx_holders: frozenset[int]
    rx_holders: frozenset[int]
    intended_rx: int

    def __post_init__(self):
        object.__setattr__(self, "tx_holders", frozenset(self.tx_holders))
        object.__setattr__(self, "rx_holders", frozenset(self.rx_holders))
        if not self.tx_holders:
            raise DomainError(f"packet {self.id!r} is cached at no transmitter")
        if self.intended_rx in self.rx_holders:
            raise DomainError(f"packet {self.id!r} is already cached at its receiver {self.intended_rx}")

    @property
    def capacity(self) -> int:
        """Largest group this packet can be scheduled in."""
        return len(self.tx_holders) + len(self.rx_holders)


def group_feasible(group: Iterable[PacketInstance]) -> bool:
    """Distinct intended receivers and ``len(group) <= min(|T_l| + |R_l|)``."""
    group = list(group)
    if len({p.intended_rx for p in group}) != len(group):
        return False
    return all(len(group) <= p.capacity for p in group)


def group_feasible_numeric(group: Iterable[PacketInstance], H: ChannelMatrix,
                           tol: float = NUMERIC_TOL) -> tuple[bool, float]:
    """Check schedulability of ``group`` under a concrete channel.

    Each packet must reach its receiver with unit gain and vanish at every
    other group receiver that does not cache it; the returned residual is the
    largest least-squares misfit over the packets.

    Raises
    ------
    SingularChannelError
        If a system that should be solvable is numerically singular.
    """
    group = list(group)
    receivers = [p.intended_rx for p in group]
    if len(set(receivers)) != len(receivers):
        return False, float("inf")
    worst = 0.0
    for slot, p in enumerate(group, 1):
        nulls = [j for j in receivers if j != p.intended_rx and j not in p.rx_holders]
        tx = sorted(p.tx_holders)
        if 1 + len(nulls) <= len(tx):
            A = H.rows([p.intended_rx, *nulls], tx)
            sv = np.linalg.svd(A, compute_uv=False)
            if sv[-1] == 0 or sv[0] / sv[-1] > COND_LIMIT:
                raise SingularChannelError(slot, [p.intended_rx, *nulls], tx, float(sv[0] / max(sv[-1], 1e-300)))
        worst = max(worst, nulling_residual(H, tx, p.intended_rx, nulls))
    return worst < tol, worst


def feasible_groups(packets: Sequence[PacketInstance]) -> list[int]:
    """Every feasible group as a bitmask over ``packets``, by DFS in index
    order. Feasibility is closed under taking subsets, so extending only
    feasible prefixes finds all of them."""
    n = len(packets)
    caps = [p.capacity for p in packets]
    rxs = [p.intended_rx for p in packets]
    out: list[int] = []

    def extend(mask: int, last: int, used: frozenset, limit: int, size: int):
        out.append(mask)
        if size >= limit:
            return
        for k in range(last + 1, n):
            if rxs[k] in used or caps[k] <= size:
                continue
            extend(mask | (1 << k), k, used | {rxs[k]}, min(limit, caps[k]), size + 1)

    for k in range(n):
        extend(1 << k, k, frozenset((rxs[k],)), caps[k], 1)
    return out


def _check_cap(packets: Sequence, cap: int):
    if len(packets) > cap:
        raise ExactCapExceeded(
            f"{len(packets)} packets exceed the exact-solve cap of {cap}; use min_blocks_greedy"
        )


def min_blocks_exact(packets: Sequence[PacketInstance], cap: int = EXACT_CAP) -> int:
    """Minimum number of feasible groups partitioning ``packets``.

    Memoized search over the bitmask of undelivered packets. Each node
    branches on the groups containing the lowest undelivered packet and skips
    a branch once ``1 + ceil(remaining / largest group)`` cannot beat the best
    value found at that node.
    """
    _check_cap(packets, cap)
    n = len(packets)
    if n == 0:
        return 0
    groups = feasible_groups(packets)
    buckets: list[list[int]] = [[] for _ in range(n)]
    for g in groups:
        buckets[(g & -g).bit_length() - 1].append(g)
    offsets = np.zeros(n + 1, dtype=np.int64)
    flat: list[int] = []
    for b, bucket in enumerate(buckets):
        bucket.sort(key=lambda g: (-g.bit_count(), g))
        flat.extend(bucket)
        offsets[b + 1] = len(flat)
    max_size = max(g.bit_count() for g in groups)
    return kernels.min_partition((1 << n) - 1, offsets, np.array(flat, dtype=np.int64), max_size)


def min_blocks_bruteforce(packets: Sequence[PacketInstance], cap: int = EXACT_CAP) -> int:
    """Reference value for :func:`min_blocks_exact`: a bottom-up table over
    all ``2**n`` subsets that tries every feasible group at every subset,
    without bounds or branching order."""
    _check_cap(packets, cap)
    n = len(packets)
    if n == 0:
        return 0
    # feasibility checked directly per subset, independent of feasible_groups
    groups = []
    for size in range(1, min(n, max(p.capacity for p in packets)) + 1):
        for combo in itertools.combinations(range(n), size):
            if group_feasible(packets[k] for k in combo):
                groups.append(sum(1 << k for k in combo))
    table = kernels.partition_table(n, np.array(groups, dtype=np.int64))
    return int(table[(1 << n) - 1])


def greedy_partition(packets: Sequence[PacketInstance]) -> list[list[int]]:
    """Largest-feasible-group-first partition (indices into ``packets``).

    A group of size ``L`` exists iff at least ``L`` distinct receivers still
    have a packet of capacity ``>= L``. Each step takes the largest such
    ``L``, preferring receivers with the most pending packets and, per
    receiver, the eligible packet of smallest capacity.
    """
    remaining = set(range(len(packets)))
    out = []
    while remaining:
        by_rx: dict[int, list[int]] = defaultdict(list)
        for k in remaining:
            by_rx[packets[k].intended_rx].append(k)
        best_size, chosen = 1, None
        top = max(packets[k].capacity for k in remaining)
        for L in range(min(top, len(by_rx)), 0, -1):
            eligible = {
                j: [k for k in ks if packets[k].capacity >= L] for j, ks in by_rx.items()
            }
            eligible = {j: ks for j, ks in eligible.items() if ks}
            if len(eligible) >= L:
                rx_order = sorted(eligible, key=lambda j: (-len(by_rx[j]), j))[:L]
                chosen = [min(eligible[j], key=lambda k: (packets[k].capacity, k)) for j in rx_order]
                best_size = L
                break
        assert chosen is not None and len(chosen) == best_size
        out.append(sorted(chosen))
        remaining.difference_update(chosen)
    return out


def min_blocks_greedy(packets: Sequence[PacketInstance]) -> int:
    """Upper bound on the minimum block count; usable at any size."""
    return len(greedy_partition(packets))


@dataclass(frozen=True)
class PlacementProfile:
    """Packet counts ``a[(n, T, R)]`` of a caching realization: how many
    packets of file ``n`` are stored exactly at transmitters ``T`` and
    receivers ``R``."""

    counts: dict[tuple[int, frozenset[int], frozenset[int]], int]

    @classmethod
    def from_placement(cls, placement: CachePlacement) -> PlacementProfile:
        counts = {}
        for sub in placement.subfiles:
            key = (sub.file, frozenset(placement.tx_holders(sub)), frozenset(placement.rx_holders(sub)))
            counts[key] = counts.get(key, 0) + placement.packets_per_base_subfile
        return cls(counts)

    def _sorted(self):
        return sorted(self.counts.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1]), sorted(kv[0][2])))

    def file_totals(self, n_files: int) -> list[int]:
        tot = [0] * n_files
        for (n, _, _), a in self.counts.items():
            tot[n - 1] += a
        return tot

    def tx_loads(self, k_t: int) -> list[int]:
        load = [0] * k_t
        for (_, T, _), a in self.counts.items():
            for i in T:
                load[i - 1] += a
        return load

    def rx_loads(self, k_r: int) -> list[int]:
        load = [0] * k_r
        for (_, _, R), a in self.counts.items():
            for j in R:
                load[j - 1] += a
        return load

    def violations(self, cfg: NetworkConfig, f_packets: int | None = None) -> list[str]:
        """Broken constraints among: every file has ``F`` packets, caches fit
        their budgets, counts are nonnegative, every packet is at some
        transmitter."""
        F = f_packets if f_packets is not None else cfg.packets
        bad = []
        for (n, T, R), a in self.counts.items():
            if a < 0:
                bad.append(f"a[{n},{sorted(T)},{sorted(R)}] = {a} < 0")
            if not T and a:
                bad.append(f"a[{n},{{}},{sorted(R)}] stored at no transmitter")
        for n, tot in enumerate(self.file_totals(cfg.n_files), 1):
            if tot != F:
                bad.append(f"file {n}: {tot} packets != F = {F}")
        for i, load in enumerate(self.tx_loads(cfg.k_t), 1):
            if load > cfg.m_t * F:
                bad.append(f"Tx_{i}: {load} > M_T F = {cfg.m_t * F}")
        for j, load in enumerate(self.rx_loads(cfg.k_r), 1):
            if load > cfg.m_r * F:
                bad.append(f"Rx_{j}: {load} > M_R F = {cfg.m_r * F}")
        return bad

    def packets_for(self, d: DemandVector | Sequence[int]) -> list[PacketInstance]:
        """Packets of each requested file not cached at the requester.

        Packet ids are ``(n, f)`` with ``f`` numbering the packets of file
        ``n`` in profile order.
        """
        demands = d.demands if isinstance(d, DemandVector) else tuple(d)
        numbered = defaultdict(list)
        next_f: dict[int, int] = defaultdict(int)
        for (n, T, R), a in self._sorted():
            ids = []
            for _ in range(a):
                next_f[n] += 1
                ids.append((n, next_f[n]))
            numbered[n].append((T, R, ids))
        out = []
        for j, n in enumerate(demands, 1):
            for T, R, ids in numbered[n]:
                if j not in R:
                    out.extend(PacketInstance(pid, T, R, j) for pid in ids)
        return out

    def to_json(self) -> list[dict]:
        return [
            {"file": n, "tx": sorted(T), "rx": sorted(R), "count": a}
            for (n, T, R), a in self._sorted()
        ]


def average_min_blocks(profile: PlacementProfile, cfg: NetworkConfig, cap: int = EXACT_CAP,
                       solver: Callable[..., int] = min_blocks_exact) -> Fraction:
    """Mean of the exact block count over all ``N!/(N-K_R)!`` demand vectors
    with pairwise distinct files."""
    if cfg.n_files < cfg.k_r:
        raise DomainError(f"distinct demands need N >= K_R (N={cfg.n_files}, K_R={cfg.k_r})")
    total, count = 0, 0
    for d in itertools.permutations(range(1, cfg.n_files + 1), cfg.k_r):
        total += solver(profile.packets_for(d), cap=cap)
        count += 1
    return Fraction(total, count)


def analytic_block_lb(cfg: NetworkConfig, f_packets: int | None = None) -> Fraction:
    """``K_R N F (1 - M_R/N)^2 / (K_T M_T + K_R M_R)``, a lower bound on the
    demand-averaged minimum block count of any budget-respecting placement."""
    F = f_packets if f_packets is not None else _default_f(cfg)
    N = cfg.n_files
    return Fraction(cfg.k_r * N * F) * (1 - cfg.m_r / N) ** 2 / (cfg.k_t * cfg.m_t + cfg.k_r * cfg.m_r)


def order_aggregates(profile: PlacementProfile, cfg: NetworkConfig) -> dict[tuple[int, int], int]:
    """``b[(r, r')] = (K_R - r') * sum of a[n, T, R]`` over ``|T| = r``,
    ``|R| = r'``, for ``r' < K_R``: demanded-but-uncached packets of each
    order, summed over receivers."""
    acc: dict[tuple[int, int], int] = defaultdict(int)
    for (_, T, R), a in profile.counts.items():
        if T and len(R) < cfg.k_r:
            acc[(len(T), len(R))] += (cfg.k_r - len(R)) * a
    return dict(acc)


def profile_block_bound(profile: PlacementProfile, cfg: NetworkConfig) -> Fraction:
    """``(1/N) sum b[r, r'] / (r + r')``: the averaged block bound evaluated on
    a specific profile, before the closed-form relaxation."""
    b = order_aggregates(profile, cfg)
    return sum((Fraction(v, r + rp) for (r, rp), v in b.items()), Fraction(0)) / cfg.n_files


def _default_f(cfg: NetworkConfig) -> int:
    if cfg.f_packets is not None:
        return cfg.f_packets
    if cfg.m_r == cfg.n_files:
        return 1
    c = saturate(cfg) if cfg.saturated else cfg
    return minimal_f(c) if c.integral else memory_sharing_packets(c)


@dataclass(frozen=True)
class BoundsReport:
    dof_lower: Fraction
    dof_upper: Fraction
    gap_ratio: Fraction
    analytic_block_lb: Fraction
    converse_upper: Fraction
    factor_two_upper: Fraction
    f_packets: int
    no_delivery: bool = False

    def to_json(self) -> dict[str, Any]:
        return {
            "dof_lower": str(self.dof_lower),
            "dof_upper": str(self.dof_upper),
            "gap_ratio": str(self.gap_ratio),
            "analytic_block_lb": str(self.analytic_block_lb),
            "converse_upper": str(self.converse_upper),
            "factor_two_upper": str(self.factor_two_upper),
            "f_packets": self.f_packets,
            "no_delivery": self.no_delivery,
        }


def dof_bounds(cfg: NetworkConfig) -> BoundsReport:
    """Achievable sum-DoF ``min{S/N, K_R}`` and the upper bound
    ``min{S/(N - M_R), 2 S/N, K_R}`` with ``S = K_T M_T + K_R M_R``."""
    N, K_R = cfg.n_files, Fraction(cfg.k_r)
    S = cfg.k_t * cfg.m_t + cfg.k_r * cfg.m_r
    lower = min(S / N, K_R)
    no_delivery = cfg.m_r == N
    converse = K_R if no_delivery else min(S / (N - cfg.m_r), K_R)
    doubled = min(2 * S / N, K_R)
    upper = min(converse, doubled)
    F = _default_f(cfg)
    return BoundsReport(
        dof_lower=lower, dof_upper=upper, gap_ratio=upper / lower,
        analytic_block_lb=analytic_block_lb(cfg, F),
        converse_upper=converse, factor_two_upper=doubled, f_packets=F,
        no_delivery=no_delivery,
    )


# -- instance files ---------------------------------------------------------

INSTANCE_FORMAT = "cachezf-instance/1"


@dataclass(frozen=True)
class Instance:
    """A posed packet-scheduling problem, optionally with the configuration,
    demand and placement profile it came from."""

    packets: tuple[PacketInstance, ...]
    config: NetworkConfig | None = None
    demand: tuple[int, ...] | None = None
    profile: PlacementProfile | None = None
    name: str = ""
    meta: dict = field(default_factory=dict)


def instance_for_config(cfg: NetworkConfig, d: DemandVector | Sequence[int], name: str = "") -> Instance:
    """Packets left to deliver under the combinatorial placement of ``cfg``."""
    profile = PlacementProfile.from_placement(build_placement(cfg))
    demand = d.demands if isinstance(d, DemandVector) else tuple(d)
    return Instance(tuple(profile.packets_for(demand)), cfg, demand, profile, name)


def _int_list(value, where: str) -> list[int]:
    if not isinstance(value, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in value):
        raise InstanceFormatError(f"{where}: expected a list of integers, got {value!r}")
    return value


def parse_instance(text: str, source: str = "<instance>") -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"{source}: top level must be an object")
    fmt = doc.get("format", INSTANCE_FORMAT)
    if fmt != INSTANCE_FORMAT:
        raise InstanceFormatError(f"{source}: format: unsupported {fmt!r}")
    if "packets" not in doc or not isinstance(doc["packets"], list):
        raise InstanceFormatError(f"{source}: packets: missing or not a list")
    cfg = None
    if doc.get("config") is not None:
        try:
            cfg = NetworkConfig.from_json(doc["config"])
        except (InstanceFormatError, DomainError) as exc:
            raise InstanceFormatError(f"{source}: {exc}") from exc
    packets = []
    for k, p in enumerate(doc["packets"]):
        where = f"{source}: packets[{k}]"
        if not isinstance(p, dict):
            raise InstanceFormatError(f"{where}: expected an object")
        for key in ("tx", "rx", "to"):
            if key not in p:
                raise InstanceFormatError(f"{where}.{key}: missing")
        to = p["to"]
        if not isinstance(to, int) or isinstance(to, bool):
            raise InstanceFormatError(f"{where}.to: expected an integer, got {to!r}")
        pid = p.get("id", k)
        pid = tuple(pid) if isinstance(pid, list) else pid
        try:
            packets.append(PacketInstance(pid, _int_list(p["tx"], f"{where}.tx"),
                                          _int_list(p["rx"], f"{where}.rx"), to))
        except DomainError as exc:
            raise InstanceFormatError(f"{where}: {exc}") from exc
    demand = tuple(_int_list(doc["demand"], f"{source}: demand")) if doc.get("demand") is not None else None
    profile = None
    if doc.get("profile") is not None:
        counts = {}
        for k, e in enumerate(doc["profile"]):
            where = f"{source}: profile[{k}]"
            try:
                key = (e["file"], frozenset(_int_list(e["tx"], f"{where}.tx")),
                       frozenset(_int_list(e["rx"], f"{where}.rx")))
                counts[key] = counts.get(key, 0) + int(e["count"])
            except (KeyError, TypeError) as exc:
                raise InstanceFormatError(f"{where}: missing or bad field {exc}") from exc
        profile = PlacementProfile(counts)
    return Instance(tuple(packets), cfg, demand, profile, doc.get("name", ""), doc.get("meta", {}))


def load_instance(path: str | Path) -> Instance:
    path = Path(path)
    return parse_instance(path.read_text(), str(path))


def _id_json(pid):
    return list(pid) if isinstance(pid, tuple) else pid


def dump_instance(inst: Instance) -> str:
    doc: dict[str, Any] = {"format": INSTANCE_FORMAT}
    if inst.name:
        doc["name"] = inst.name
    if inst.config is not None:
        doc["config"] = inst.config.to_json()
    if inst.demand is not None:
        doc["demand"] = list(inst.demand)
    if inst.profile is not None:
        doc["profile"] = inst.profile.to_json()
    if inst.meta:
        doc["meta"] = inst.meta
    doc["packets"] = [
        {"id": _id_json(p.id), "tx": sorted(p.tx_holders), "rx": sorted(p.rx_holders), "to": p.intended_rx}
        for p in inst.packets
    ]
    return json.dumps(doc, indent=1) + "\n"
