"""
Delivery-phase planning.

A delivery group ``(T, R, pi)`` fixes a ``t_T``-subset ``T`` of transmitters,
a ``(t_T + t_R)``-subset ``R`` of receivers and a circular order ``pi`` of
``R``. Slot ``l`` of the group serves receiver ``pi(l)`` with the refined
subfile cached at transmitters ``T (+) (l-1)`` and at receivers
``pi[l+1 : l+t_R]``, zero-forced at ``pi[l+t_R+1 : l+t_R+t_T-1]``. Over all
groups every needed refined subfile is served exactly once, so each group is
one block carrying ``t_T + t_R`` packets.

Non-integer replication factors are handled by memory-sharing across integer
corner configurations, and ``t_T + t_R > K_R`` by discarding cache space
(:func:`saturate`) until the sum equals ``K_R``.
"""
from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, NamedTuple

from .combinat import circular_permutations, k_subsets, perm_window, shift_set
from .errors import ConsistencyError, DomainError, SaturationRequired
from .placement import (
    NetworkConfig,
    RefinedSubfileId,
    _integer_t,
    minimal_f,
    refine_subfile,
    split_file,
)

__all__ = [
    "DemandVector",
    "DeliveryGroup",
    "PacketAssignment",
    "Schedule",
    "MemoryShare",
    "DeliveryPlan",
    "NO_DELIVERY_NEEDED",
    "needed_subfiles",
    "enumerate_groups",
    "expand_group",
    "schedule",
    "saturate",
    "plan_memory_sharing",
    "memory_sharing_packets",
    "rounding_slack",
    "plan_delivery",
    "measured_dof",
]


class _NoDelivery:
    """Sentinel DoF value for a schedule that delivers nothing in zero blocks."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NO_DELIVERY_NEEDED"

    def __str__(self):
        return "no-delivery-needed"


NO_DELIVERY_NEEDED = _NoDelivery()


@dataclass(frozen=True)
class DemandVector:
    """Requested file index of each receiver (repetitions allowed)."""

    demands: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple(int(x) for x in self.demands))

    def __len__(self):
        return len(self.demands)

    def __getitem__(self, j: int) -> int:
        """File requested by receiver ``j`` (1-based)."""
        return self.demands[j - 1]

    def check(self, cfg: NetworkConfig) -> DemandVector:
        if len(self.demands) != cfg.k_r:
            raise DomainError(f"demand vector has {len(self.demands)} entries, K_R={cfg.k_r}")
        for j, n in enumerate(self.demands, 1):
            if not 1 <= n <= cfg.n_files:
                raise DomainError(f"receiver {j} demands file {n} outside [1, {cfg.n_files}]")
        return self


def _demand(d: DemandVector | Sequence[int], cfg: NetworkConfig) -> DemandVector:
    if not isinstance(d, DemandVector):
        d = DemandVector(tuple(d))
    return d.check(cfg)


class DeliveryGroup(NamedTuple):
    base_tx_set: tuple[int, ...]
    rx_set: tuple[int, ...]
    circ_perm: tuple[int, ...]


class PacketAssignment(NamedTuple):
    slot: int
    rx: int
    subfile: RefinedSubfileId


def _deliverable(cfg: NetworkConfig) -> tuple[int, int]:
    t_t, t_r = _integer_t(cfg)
    if t_t + t_r > cfg.k_r:
        raise SaturationRequired(
            f"t_T + t_R = {t_t + t_r} > K_R = {cfg.k_r}; apply saturate() first"
        )
    return t_t, t_r


def needed_subfiles(d: DemandVector | Sequence[int], cfg: NetworkConfig) -> frozenset[RefinedSubfileId]:
    """Refined pieces of each receiver's requested file that it does not cache."""
    _deliverable(cfg)
    d = _demand(d, cfg)
    out: set[RefinedSubfileId] = set()
    for j in range(1, cfg.k_r + 1):
        for base in split_file(d[j], cfg):
            if j not in base.rx_set:
                out.update(refine_subfile(base, j, cfg))
    return frozenset(out)


def enumerate_groups(cfg: NetworkConfig) -> list[DeliveryGroup]:
    """All delivery groups, ordered by ``T``, then ``R``, then circular order."""
    t_t, t_r = _deliverable(cfg)
    return [
        DeliveryGroup(T, R, pi)
        for T in k_subsets(cfg.k_t, t_t)
        for R in k_subsets(cfg.k_r, t_t + t_r)
        for pi in circular_permutations(R)
    ]


def expand_group(g: DeliveryGroup, d: DemandVector | Sequence[int], cfg: NetworkConfig) -> list[PacketAssignment]:
    """The ``t_T + t_R`` refined subfiles served simultaneously by ``g``."""
    t_t, t_r = _deliverable(cfg)
    d = _demand(d, cfg)
    pi = g.circ_perm
    out = []
    for l in range(1, t_t + t_r + 1):
        rx = pi[l - 1]
        sub = RefinedSubfileId(
            file=d[rx],
            intended_rx=rx,
            tx_set=shift_set(g.base_tx_set, l - 1, cfg.k_t),
            cached_at=perm_window(pi, l + 1, l + t_r),
            nulled_at=perm_window(pi, l + t_r + 1, l + t_r + t_t - 1),
        )
        out.append(PacketAssignment(l, rx, sub))
    return out


@dataclass(frozen=True)
class Schedule:
    """Delivery groups with their expanded assignments.

    With ``F = c * minimal_f`` every refined subfile is ``c`` packets, so each
    group occupies ``blocks_per_group = c`` blocks.
    """

    groups: tuple[DeliveryGroup, ...]
    assignments: tuple[tuple[PacketAssignment, ...], ...]
    blocks_per_group: int = 1

    @property
    def delivered(self) -> int:
        return sum(len(a) for a in self.assignments) * self.blocks_per_group

    @property
    def blocks(self) -> int:
        return len(self.groups) * self.blocks_per_group

    def to_json(self) -> dict[str, Any]:
        groups = []
        for g, assigned in zip(self.groups, self.assignments):
            groups.append({
                "base_tx_set": list(g.base_tx_set),
                "rx_set": list(g.rx_set),
                "circ_perm": list(g.circ_perm),
                "assignments": [
                    {
                        "slot": a.slot,
                        "rx": a.rx,
                        "file": a.subfile.file,
                        "tx_set": list(a.subfile.tx_set),
                        "cached_at": list(a.subfile.cached_at),
                        "nulled_at": list(a.subfile.nulled_at),
                    }
                    for a in assigned
                ],
            })
        return {
            "groups": groups,
            "summary": {
                "delivered": self.delivered,
                "blocks": self.blocks,
                "dof": str(measured_dof(self)),
            },
        }


def schedule(d: DemandVector | Sequence[int], cfg: NetworkConfig) -> Schedule:
    """Build the full delivery schedule and check that it partitions the
    needed subfiles exactly.

    Raises
    ------
    ConsistencyError
        If some needed subfile is missed or served twice.
    """
    d = _demand(d, cfg)
    groups = enumerate_groups(cfg)
    assignments = tuple(tuple(expand_group(g, d, cfg)) for g in groups)
    served = Counter(a.subfile for assigned in assignments for a in assigned)
    needed = needed_subfiles(d, cfg)
    dup = [s for s, c in served.items() if c > 1]
    missing = needed - served.keys()
    extra = served.keys() - needed
    if dup or missing or extra:
        raise ConsistencyError(
            f"delivery groups do not partition the needed subfiles: "
            f"{len(dup)} duplicated, {len(missing)} missing, {len(extra)} unexpected"
        )
    return Schedule(tuple(groups), assignments, cfg.packets // minimal_f(cfg))


def measured_dof(s: Schedule) -> Fraction | _NoDelivery:
    """Delivered packets per block."""
    if s.blocks == 0:
        if s.delivered:
            raise ConsistencyError("packets delivered in zero blocks")
        return NO_DELIVERY_NEEDED
    return Fraction(s.delivered, s.blocks)


def saturate(cfg: NetworkConfig, order: str = "receiver-first") -> NetworkConfig:
    """Shrink caches so that ``t_T + t_R == K_R``.

    ``order="receiver-first"`` (default) discards receiver cache space first
    and only then transmitter space; ``"transmitter-first"`` does the reverse
    but never below ``M_T = N / K_T``. The returned config has
    ``f_packets=None``.
    """
    if not cfg.saturated:
        raise DomainError(f"t_T + t_R = {cfg.t_t + cfg.t_r} <= K_R = {cfg.k_r}; nothing to saturate")
    N, kt, kr = cfg.n_files, cfg.k_t, cfg.k_r
    target = Fraction(N * kr)  # K_T M'_T + K_R M'_R must equal N K_R
    if order == "receiver-first":
        m_r = max(Fraction(0), (target - kt * cfg.m_t) / kr)
        m_t = cfg.m_t if m_r > 0 else target / kt
    elif order == "transmitter-first":
        m_t = max(Fraction(N, kt), (target - kr * cfg.m_r) / kt)
        m_t = min(m_t, cfg.m_t)
        m_r = (target - kt * m_t) / kr
    else:
        raise DomainError(f"unknown saturation order {order!r}")
    out = cfg.replace(m_t=m_t, m_r=m_r, f_packets=None)
    if out.t_t + out.t_r != kr:
        raise ConsistencyError(f"saturation produced t_T + t_R = {out.t_t + out.t_r}")
    return out


class MemoryShare(NamedTuple):
    """One integer corner of a memory-sharing decomposition.

    ``packets`` is the corner's share of every file (``weight * F`` rounded
    down to the corner's own granularity); when positive it is also recorded
    as ``config.f_packets``.
    """

    weight: Fraction
    config: NetworkConfig
    packets: int


def _corner(cfg: NetworkConfig, t_t: int, t_r: int) -> NetworkConfig:
    return cfg.replace(
        m_t=Fraction(t_t * cfg.n_files, cfg.k_t),
        m_r=Fraction(t_r * cfg.n_files, cfg.k_r),
        f_packets=None,
    )


def _granularity(c: NetworkConfig, order: str = "receiver-first") -> int:
    if c.m_r == c.n_files:
        return 1
    return minimal_f(saturate(c, order) if c.saturated else c)


def _corners(cfg: NetworkConfig) -> list[tuple[Fraction, NetworkConfig]]:
    def axis(t: Fraction) -> list[tuple[int, Fraction]]:
        lo = math.floor(t)
        frac = t - lo
        if frac == 0:
            return [(lo, Fraction(1))]
        return [(lo, 1 - frac), (lo + 1, frac)]

    return [
        (wt * wr, _corner(cfg, a, b))
        for b, wr in axis(cfg.t_r)
        for a, wt in axis(cfg.t_t)
    ]


def memory_sharing_packets(cfg: NetworkConfig) -> int:
    """Smallest ``F`` for which every corner share ``weight * F`` is an exact
    multiple of that corner's granularity."""
    F = 1
    for w, c in _corners(cfg):
        step = Fraction(_granularity(c)) / w
        F = math.lcm(F, step.numerator)
    return F


def plan_memory_sharing(cfg: NetworkConfig) -> list[MemoryShare]:
    """Decompose ``cfg`` into at most four integer corner configurations.

    Corners are ``{floor, ceil}(t_T) x {floor, ceil}(t_R)`` with bilinear
    weights, so the weighted averages of the corner ``t_T`` and ``t_R``
    reproduce the original values and the corner caches add up to the
    original budgets. Without ``f_packets`` the packet count defaults to
    :func:`memory_sharing_packets`, which leaves no rounding slack.
    """
    if cfg.saturated:
        raise SaturationRequired(
            f"t_T + t_R = {cfg.t_t + cfg.t_r} > K_R = {cfg.k_r}; apply saturate() first"
        )
    if cfg.integral:
        return [MemoryShare(Fraction(1), cfg, cfg.packets)]
    F = cfg.f_packets if cfg.f_packets is not None else memory_sharing_packets(cfg)
    out = []
    for w, c in _corners(cfg):
        unit = _granularity(c)
        share = int(w * F // unit) * unit
        out.append(MemoryShare(w, c.replace(f_packets=share) if share else c, share))
    return out


def rounding_slack(cfg: NetworkConfig, shares: Iterable[MemoryShare]) -> int:
    """Packets per file left unassigned by :func:`plan_memory_sharing`."""
    if cfg.integral:
        return 0
    F = cfg.f_packets if cfg.f_packets is not None else memory_sharing_packets(cfg)
    return F - sum(s.packets for s in shares)


@dataclass(frozen=True)
class DeliveryPlan:
    """Delivery for an arbitrary configuration.

    ``effective`` is the configuration after saturation; ``parts`` pairs each
    integer corner of it with a schedule delivering that corner's share of
    every requested file.
    """

    config: NetworkConfig
    effective: NetworkConfig
    parts: tuple[tuple[MemoryShare, Schedule], ...]
    slack: int = 0

    @property
    def delivered(self) -> int:
        return sum(s.delivered for _, s in self.parts)

    @property
    def blocks(self) -> int:
        return sum(s.blocks for _, s in self.parts)

    @property
    def dof(self) -> Fraction | _NoDelivery:
        if self.blocks == 0:
            return NO_DELIVERY_NEEDED
        return Fraction(self.delivered, self.blocks)


def plan_delivery(d: DemandVector | Sequence[int], cfg: NetworkConfig,
                  order: str = "receiver-first") -> DeliveryPlan:
    """Schedule any configuration: saturate when ``t_T + t_R > K_R``, split
    non-integer factors by memory-sharing, then schedule every corner."""
    d = _demand(d, cfg)
    if cfg.m_r == cfg.n_files:
        # every receiver already holds the whole library
        return DeliveryPlan(cfg, cfg, ())
    eff = cfg
    if cfg.saturated:
        eff = saturate(cfg, order)
        if cfg.f_packets is not None and eff.integral and cfg.f_packets % minimal_f(eff) == 0:
            eff = eff.replace(f_packets=cfg.f_packets)
    shares = plan_memory_sharing(eff)
    parts = []
    for share in shares:
        if share.packets == 0:
            continue
        c = share.config
        if c.saturated:
            c = saturate(c, order).replace(f_packets=share.packets)
        parts.append((share, schedule(d, c)))
    return DeliveryPlan(cfg, eff, tuple(parts), rounding_slack(eff, shares))
