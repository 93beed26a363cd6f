"""
Prefetching phase: network parameters, subfile splitting and cache contents.

A file is split into ``C(K_T, t_T) * C(K_R, t_R)`` base subfiles
``W[n, T, R]``; transmitter ``i`` caches every base subfile with ``i in T``
and receiver ``j`` every base subfile with ``j in R``. For delivery each base
subfile is refined further, once per requesting receiver, into pieces indexed
by an ordering of ``R`` and an ordered choice of ``t_T - 1`` receivers at
which the piece will be zero-forced.

The packet unit is the smallest refined subfile: the default packet count per
file is :func:`minimal_f`, for which every refined subfile is one packet.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, NamedTuple

from .combinat import arrangements, k_subsets
from .errors import (
    DomainError,
    InstanceFormatError,
    MemorySharingRequired,
    SaturationRequired,
)

__all__ = [
    "NetworkConfig",
    "BaseSubfileId",
    "RefinedSubfileId",
    "CachePlacement",
    "BudgetReport",
    "minimal_f",
    "split_file",
    "build_placement",
    "refinement_factor",
    "refine_subfile",
    "audit_budgets",
]


def _as_fraction(value: Any, name: str) -> Fraction:
    if isinstance(value, bool):
        raise InstanceFormatError(f"{name}: expected a number, got {value!r}")
    if isinstance(value, float):
        # keep short decimal inputs such as 1.5 exact
        return Fraction(str(value))
    try:
        return Fraction(value)
    except (TypeError, ValueError):
        raise InstanceFormatError(f"{name}: expected a number or 'p/q' string, got {value!r}")


def _fraction_to_json(x: Fraction) -> int | str:
    return int(x) if x.denominator == 1 else str(x)


@dataclass(frozen=True)
class NetworkConfig:
    """System parameters.

    Parameters
    ----------
    k_t, k_r : int
        Number of transmitters and receivers.
    n_files : int
        Library size ``N``.
    m_t, m_r : Fraction-like
        Cache sizes in files. Stored as exact :class:`~fractions.Fraction`.
    f_packets : int, optional
        Packets per file. ``None`` means the minimal granularity
        :func:`minimal_f`.
    """

    k_t: int
    k_r: int
    n_files: int
    m_t: Fraction
    m_r: Fraction = Fraction(0)
    f_packets: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "m_t", _as_fraction(self.m_t, "m_t"))
        object.__setattr__(self, "m_r", _as_fraction(self.m_r, "m_r"))
        for name in ("k_t", "k_r", "n_files"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
        if not 0 < self.m_t <= self.n_files:
            raise DomainError(f"need 0 < M_T <= N, got M_T={self.m_t}, N={self.n_files}")
        if not 0 <= self.m_r <= self.n_files:
            raise DomainError(f"need 0 <= M_R <= N, got M_R={self.m_r}, N={self.n_files}")
        if self.k_t * self.m_t < self.n_files:
            raise DomainError(
                f"K_T*M_T = {self.k_t * self.m_t} < N = {self.n_files}: "
                "some content would be cached at no transmitter"
            )
        if self.f_packets is not None and (
            not isinstance(self.f_packets, int) or self.f_packets < 1
        ):
            raise DomainError(f"f_packets must be a positive integer, got {self.f_packets!r}")

    @property
    def t_t(self) -> Fraction:
        """Transmitter replication factor ``K_T M_T / N``."""
        return self.k_t * self.m_t / self.n_files

    @property
    def t_r(self) -> Fraction:
        """Receiver replication factor ``K_R M_R / N``."""
        return self.k_r * self.m_r / self.n_files

    @property
    def integral(self) -> bool:
        return self.t_t.denominator == 1 and self.t_r.denominator == 1

    @property
    def saturated(self) -> bool:
        return self.t_t + self.t_r > self.k_r

    @property
    def packets(self) -> int:
        """Packets per file: ``f_packets`` or the minimal granularity."""
        return self.f_packets if self.f_packets is not None else minimal_f(self)

    def replace(self, **changes) -> NetworkConfig:
        fields = dict(
            k_t=self.k_t, k_r=self.k_r, n_files=self.n_files,
            m_t=self.m_t, m_r=self.m_r, f_packets=self.f_packets,
        )
        fields.update(changes)
        return NetworkConfig(**fields)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "k_t": self.k_t,
            "k_r": self.k_r,
            "n_files": self.n_files,
            "m_t": _fraction_to_json(self.m_t),
            "m_r": _fraction_to_json(self.m_r),
        }
        if self.f_packets is not None:
            out["f_packets"] = self.f_packets
        return out

    @classmethod
    def from_json(cls, obj: dict[str, Any] | str) -> NetworkConfig:
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict):
            raise InstanceFormatError("config: expected a JSON object")
        required = ("k_t", "k_r", "n_files", "m_t", "m_r")
        missing = [k for k in required if k not in obj]
        if missing:
            raise InstanceFormatError(f"config: missing field(s) {', '.join(missing)}")
        unknown = set(obj) - set(required) - {"f_packets"}
        if unknown:
            raise InstanceFormatError(f"config: unknown field(s) {', '.join(sorted(unknown))}")
        return cls(
            k_t=obj["k_t"], k_r=obj["k_r"], n_files=obj["n_files"],
            m_t=_as_fraction(obj["m_t"], "m_t"), m_r=_as_fraction(obj["m_r"], "m_r"),
            f_packets=obj.get("f_packets"),
        )

    def label(self) -> str:
        return (f"K_T={self.k_t} K_R={self.k_r} N={self.n_files} "
                f"M_T={self.m_t} M_R={self.m_r}")


class BaseSubfileId(NamedTuple):
    """``W[file, tx_set, rx_set]``: the part of a file cached exactly at
    ``tx_set`` and ``rx_set``."""

    file: int
    tx_set: tuple[int, ...]
    rx_set: tuple[int, ...]


class RefinedSubfileId(NamedTuple):
    """A deliverable piece of a base subfile for one requesting receiver.

    ``cached_at`` is an ordering of the base subfile's receiver set and
    ``nulled_at`` the ordered receivers at which the piece is zero-forced.
    """

    file: int
    intended_rx: int
    tx_set: tuple[int, ...]
    cached_at: tuple[int, ...]
    nulled_at: tuple[int, ...]

    @property
    def base(self) -> BaseSubfileId:
        return BaseSubfileId(self.file, self.tx_set, tuple(sorted(self.cached_at)))


def _integer_t(cfg: NetworkConfig) -> tuple[int, int]:
    if not cfg.integral:
        raise MemorySharingRequired(
            f"t_T={cfg.t_t}, t_R={cfg.t_r} are not both integers; "
            "requires memory-sharing (see scheduler.plan_memory_sharing)"
        )
    return int(cfg.t_t), int(cfg.t_r)


def refinement_factor(cfg: NetworkConfig) -> int:
    """Number of refined pieces per base subfile and requesting receiver,
    ``t_R! (K_R - t_R - 1)! / (K_R - t_R - t_T)!``."""
    t_t, t_r = _integer_t(cfg)
    if t_t + t_r > cfg.k_r:
        raise SaturationRequired(
            f"t_T + t_R = {t_t + t_r} > K_R = {cfg.k_r}; apply saturate() first"
        )
    k = cfg.k_r
    return math.factorial(t_r) * math.factorial(k - t_r - 1) // math.factorial(k - t_r - t_t)


def minimal_f(cfg: NetworkConfig) -> int:
    """Smallest packet count per file that makes every refined subfile exactly
    one packet. Saturated configurations are never refined, so for them the
    base-subfile count is returned."""
    t_t, t_r = _integer_t(cfg)
    base = math.comb(cfg.k_t, t_t) * math.comb(cfg.k_r, t_r)
    if t_t + t_r > cfg.k_r:
        return base
    return base * refinement_factor(cfg)


def _packets_per_base(cfg: NetworkConfig) -> int:
    t_t, t_r = _integer_t(cfg)
    n_base = math.comb(cfg.k_t, t_t) * math.comb(cfg.k_r, t_r)
    unit = minimal_f(cfg)
    if cfg.packets % unit:
        raise DomainError(
            f"F={cfg.packets} is not a multiple of the minimal granularity {unit}"
        )
    return cfg.packets // n_base


def split_file(file: int, cfg: NetworkConfig) -> list[BaseSubfileId]:
    """Base subfiles of one file, ``T`` varying slowest (``A_{12,1}, A_{12,2}, ...``)."""
    t_t, t_r = _integer_t(cfg)
    if not 1 <= file <= cfg.n_files:
        raise DomainError(f"file index {file} outside [1, {cfg.n_files}]")
    _packets_per_base(cfg)
    return [
        BaseSubfileId(file, T, R)
        for T in k_subsets(cfg.k_t, t_t)
        for R in k_subsets(cfg.k_r, t_r)
    ]


@dataclass(frozen=True)
class CachePlacement:
    """Cache contents of every node.

    ``tx_caches[i - 1]`` is the set of base subfiles stored at transmitter
    ``i`` (likewise ``rx_caches``). Each base subfile holds
    ``packets_per_base_subfile`` packets.
    """

    tx_caches: tuple[frozenset[BaseSubfileId], ...]
    rx_caches: tuple[frozenset[BaseSubfileId], ...]
    packets_per_base_subfile: int

    @cached_property
    def subfiles(self) -> frozenset[BaseSubfileId]:
        out: set[BaseSubfileId] = set()
        for cache in self.tx_caches + self.rx_caches:
            out |= cache
        return frozenset(out)

    def tx_holders(self, sub: BaseSubfileId) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.tx_caches, 1) if sub in c)

    def rx_holders(self, sub: BaseSubfileId) -> tuple[int, ...]:
        return tuple(j for j, c in enumerate(self.rx_caches, 1) if sub in c)

    @classmethod
    def empty(cls, cfg: NetworkConfig, packets_per_base_subfile: int = 1) -> CachePlacement:
        return cls(
            tx_caches=tuple(frozenset() for _ in range(cfg.k_t)),
            rx_caches=tuple(frozenset() for _ in range(cfg.k_r)),
            packets_per_base_subfile=packets_per_base_subfile,
        )


def build_placement(cfg: NetworkConfig) -> CachePlacement:
    """Populate the caches: ``Tx_i`` keeps ``W[n,T,R]`` iff ``i in T`` and
    ``Rx_j`` keeps it iff ``j in R``."""
    library = [s for n in range(1, cfg.n_files + 1) for s in split_file(n, cfg)]
    tx = tuple(frozenset(s for s in library if i in s.tx_set) for i in range(1, cfg.k_t + 1))
    rx = tuple(frozenset(s for s in library if j in s.rx_set) for j in range(1, cfg.k_r + 1))
    return CachePlacement(tx, rx, _packets_per_base(cfg))


def refine_subfile(base: BaseSubfileId, intended_rx: int, cfg: NetworkConfig) -> list[RefinedSubfileId]:
    """Split ``base`` into the pieces delivered to ``intended_rx``.

    One piece per ordering of ``base.rx_set`` and per ordered ``(t_T - 1)``-tuple
    of receivers outside ``base.rx_set | {intended_rx}``.
    """
    t_t, _ = _integer_t(cfg)
    if intended_rx in base.rx_set:
        raise DomainError(f"Rx_{intended_rx} already caches {base}")
    if not 1 <= intended_rx <= cfg.k_r:
        raise DomainError(f"receiver {intended_rx} outside [1, {cfg.k_r}]")
    others = set(range(1, cfg.k_r + 1)) - set(base.rx_set) - {intended_rx}
    return [
        RefinedSubfileId(base.file, intended_rx, base.tx_set, pi, pi2)
        for pi in arrangements(base.rx_set, len(base.rx_set))
        for pi2 in arrangements(others, t_t - 1)
    ]


@dataclass(frozen=True)
class BudgetReport:
    tx_packets: tuple[int, ...]
    rx_packets: tuple[int, ...]
    tx_budget: Fraction
    rx_budget: Fraction
    violations: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations


def audit_budgets(p: CachePlacement, cfg: NetworkConfig) -> BudgetReport:
    """Count cached packets per node and flag any node over its budget."""
    F = cfg.packets
    tx = tuple(len(c) * p.packets_per_base_subfile for c in p.tx_caches)
    rx = tuple(len(c) * p.packets_per_base_subfile for c in p.rx_caches)
    tx_budget, rx_budget = cfg.m_t * F, cfg.m_r * F
    bad = [f"Tx_{i}: {n} > {tx_budget}" for i, n in enumerate(tx, 1) if n > tx_budget]
    bad += [f"Rx_{j}: {n} > {rx_budget}" for j, n in enumerate(rx, 1) if n > rx_budget]
    return BudgetReport(tx, rx, tx_budget, rx_budget, tuple(bad))
