"""
Physical-layer linear algebra for one-shot zero-forcing delivery.

For every slot of a delivery group the transmitters caching that slot's
subfile choose coefficients ``v[i, l]`` so that the combined gain is one at the
intended receiver and zero at each receiver in the subfile's ``nulled_at``
window. Interference at the remaining group receivers comes from subfiles
they cache and is subtracted after reception.

Noise is not simulated: decodability is a property of the effective
coefficients alone. Power normalization is reported (``scale``) but not
applied, since scaling all transmit signals does not change decodability.
"""
from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularChannelError
from .placement import NetworkConfig
from .scheduler import DemandVector, PacketAssignment, Schedule

__all__ = [
    "ChannelMatrix",
    "BeamformingSolution",
    "ReceiverReport",
    "BlockReport",
    "VerificationReport",
    "TOL_ZERO",
    "TOL_SIGNAL",
    "gen_channel",
    "solve_beamformers",
    "simulate_block",
    "verify_schedule",
    "nulling_residual",
]

log = logging.getLogger(__name__)

TOL_ZERO = 1e-8
TOL_SIGNAL = 1e-10
COND_LIMIT = 1e12


@dataclass(frozen=True)
class ChannelMatrix:
    """Complex gains ``gains[j-1, i-1] = h_ji`` from ``Tx_i`` to ``Rx_j``."""

    gains: np.ndarray
    seed: int

    def __post_init__(self):
        g = np.array(self.gains, dtype=np.complex128)
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    def h(self, j: int, i: int) -> complex:
        return complex(self.gains[j - 1, i - 1])

    def rows(self, rx: Sequence[int], tx: Sequence[int]) -> np.ndarray:
        return self.gains[np.ix_(np.asarray(rx) - 1, np.asarray(tx) - 1)]


def gen_channel(seed: int, cfg: NetworkConfig) -> ChannelMatrix:
    """i.i.d. ``CN(0, 1)`` gains, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    shape = (cfg.k_r, cfg.k_t)
    gains = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    return ChannelMatrix(gains, seed)


@dataclass(frozen=True)
class BeamformingSolution:
    """Zero-forcing coefficients of one delivery group.

    ``coefficients[(i, l)]`` is the weight transmitter ``i`` puts on the
    subfile of slot ``l``. ``residual`` is the largest constraint violation
    after back-substitution, relative to the largest channel gain involved.
    ``scale`` is the largest per-transmitter coefficient norm; dividing all
    coefficients by it meets a unit power budget.
    """

    coefficients: dict[tuple[int, int], complex]
    scale: float
    residual: float
    n_equations: int
    n_unknowns: int


def _slot_system(a: PacketAssignment, H: ChannelMatrix):
    rows = (a.rx,) + tuple(a.subfile.nulled_at)
    cols = a.subfile.tx_set
    A = H.rows(rows, cols)
    b = np.zeros(len(rows), dtype=np.complex128)
    b[0] = 1.0
    return rows, cols, A, b


def solve_beamformers(assignments: Sequence[PacketAssignment], H: ChannelMatrix,
                      cond_limit: float = COND_LIMIT) -> BeamformingSolution:
    """Solve the unit-gain and nulling equations of one delivery group.

    The full system has ``t_T (t_T + t_R)`` equations in as many unknowns but
    is block diagonal: slot ``l`` involves only its own ``t_T`` coefficients,
    one unit-gain row for ``pi(l)`` and one nulling row per receiver in its
    ``nulled_at`` window.

    Raises
    ------
    SingularChannelError
        If a slot subsystem has condition number above ``cond_limit``.
    """
    coeffs: dict[tuple[int, int], complex] = {}
    n_eq = n_unk = 0
    worst = 0.0
    for a in assignments:
        rows, cols, A, b = _slot_system(a, H)
        n_eq += len(rows)
        n_unk += len(cols)
        if A.shape[0] != A.shape[1]:
            raise ValueError(
                f"slot {a.slot}: {A.shape[0]} equations for {A.shape[1]} unknowns"
            )
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > cond_limit:
            raise SingularChannelError(a.slot, rows, cols, float(cond))
        v = np.linalg.solve(A, b)
        worst = max(worst, float(np.max(np.abs(A @ v - b))) / float(np.max(np.abs(A))))
        for i, vi in zip(cols, v):
            coeffs[(i, a.slot)] = complex(vi)
    per_tx: dict[int, float] = {}
    for (i, _), v in coeffs.items():
        per_tx[i] = per_tx.get(i, 0.0) + abs(v) ** 2
    scale = float(np.sqrt(max(per_tx.values()))) if per_tx else 1.0
    return BeamformingSolution(coeffs, scale, worst, n_eq, n_unk)


def effective_gains(assignments: Sequence[PacketAssignment], solution: BeamformingSolution,
                    H: ChannelMatrix) -> dict[tuple[int, int], complex]:
    """Combined gain ``sum_i h[j, i] v[i, l]`` for every group receiver ``j``
    and slot ``l``."""
    out = {}
    for a in assignments:
        for b in assignments:
            j = b.rx
            out[(j, a.slot)] = sum(
                H.h(j, i) * solution.coefficients[(i, a.slot)] for i in a.subfile.tx_set
            )
    return out


@dataclass(frozen=True)
class ReceiverReport:
    """What receiver ``rx`` sees in one block.

    ``zero_forced`` and ``cancelled`` map the interfering slot to its
    effective gain at this receiver; ``residual`` is the summed magnitude of
    interference left after cache cancellation, relative to ``|desired|``.
    """

    rx: int
    slot: int
    desired: complex
    zero_forced: dict[int, complex]
    cancelled: dict[int, complex]
    residual: float
    decodable: bool

    def to_json(self) -> dict:
        return {
            "rx": self.rx,
            "slot": self.slot,
            "desired_magnitude": repr(abs(self.desired)),
            "zero_forced": {str(k): repr(abs(v)) for k, v in sorted(self.zero_forced.items())},
            "cancelled": sorted(self.cancelled),
            "residual": repr(self.residual),
            "decodable": self.decodable,
        }


@dataclass(frozen=True)
class BlockReport:
    receivers: tuple[ReceiverReport, ...]
    backsub_residual: float

    @property
    def decodable(self) -> bool:
        return all(r.decodable for r in self.receivers)

    @property
    def max_residual(self) -> float:
        return max((r.residual for r in self.receivers), default=0.0)

    @property
    def min_desired(self) -> float:
        return min((abs(r.desired) for r in self.receivers), default=float("inf"))

    def to_json(self) -> dict:
        return {
            "receivers": [r.to_json() for r in self.receivers],
            "backsub_residual": repr(self.backsub_residual),
            "decodable": self.decodable,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def simulate_block(assignments: Sequence[PacketAssignment], solution: BeamformingSolution,
                   H: ChannelMatrix, tol_zero: float = TOL_ZERO,
                   tol_signal: float = TOL_SIGNAL) -> BlockReport:
    """Split each group receiver's signal into desired, zero-forced and
    cache-cancellable parts and decide decodability."""
    gains = effective_gains(assignments, solution, H)
    reports = []
    for own in assignments:
        j = own.rx
        desired = gains[(j, own.slot)]
        zf, cancelled = {}, {}
        for other in assignments:
            if other.slot == own.slot:
                continue
            # Q_j rule: Rx_j caches W[n, T, R] iff j in R
            if j in other.subfile.cached_at:
                cancelled[other.slot] = gains[(j, other.slot)]
            else:
                zf[other.slot] = gains[(j, other.slot)]
        mag = abs(desired)
        leak = sum(abs(g) for g in zf.values())
        residual = leak / mag if mag > 0 else float("inf")
        reports.append(ReceiverReport(
            rx=j, slot=own.slot, desired=desired, zero_forced=zf, cancelled=cancelled,
            residual=residual, decodable=bool(residual < tol_zero and mag > tol_signal),
        ))
    return BlockReport(tuple(reports), solution.residual)


@dataclass
class VerificationReport:
    seed: int
    n_groups: int = 0
    max_residual: float = 0.0
    max_backsub_residual: float = 0.0
    min_desired: float = float("inf")
    failures: list[tuple[int, int]] = field(default_factory=list)
    regenerated: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "groups": self.n_groups,
            "max_residual": repr(self.max_residual),
            "max_backsub_residual": repr(self.max_backsub_residual),
            "min_desired": repr(self.min_desired),
            "failures": [{"group": g, "rx": j} for g, j in self.failures],
            "regenerated": self.regenerated,
            "ok": self.ok,
        }


def verify_schedule(s: Schedule, d: DemandVector | Sequence[int], H: ChannelMatrix,
                    cfg: NetworkConfig, tol_zero: float = TOL_ZERO,
                    tol_signal: float = TOL_SIGNAL, max_regenerations: int = 8) -> VerificationReport:
    """Solve and simulate every group of ``s`` under one channel.

    If some subsystem is singular the channel is redrawn with ``seed + 1``
    and verification restarts; the discarded seeds are listed in
    ``regenerated``. ``failures`` holds ``(group index, receiver)`` pairs that
    were not decodable.
    """
    regenerated: list[int] = []
    while True:
        rep = VerificationReport(seed=H.seed, regenerated=list(regenerated))
        try:
            for gi, assigned in enumerate(s.assignments):
                sol = solve_beamformers(assigned, H)
                block = simulate_block(assigned, sol, H, tol_zero, tol_signal)
                rep.n_groups += 1
                rep.max_residual = max(rep.max_residual, block.max_residual)
                rep.max_backsub_residual = max(rep.max_backsub_residual, block.backsub_residual)
                rep.min_desired = min(rep.min_desired, block.min_desired)
                rep.failures.extend((gi, r.rx) for r in block.receivers if not r.decodable)
            return rep
        except SingularChannelError as exc:
            if len(regenerated) >= max_regenerations:
                raise
            log.warning("seed %d: %s", H.seed, exc)
            regenerated.append(H.seed)
            H = gen_channel(H.seed + 1, cfg)


def nulling_residual(H: ChannelMatrix, tx: Sequence[int], desired_rx: int,
                     null_rx: Sequence[int]) -> float:
    """Least-squares residual of ``h_desired . v = 1``, ``h_j . v = 0`` for
    ``j`` in ``null_rx``, with ``v`` supported on transmitters ``tx``.

    Zero (to rounding) iff some beamformer delivers the packet to
    ``desired_rx`` while nulling it at every receiver in ``null_rx``.
    """
    rows = [desired_rx, *null_rx]
    A = H.rows(rows, list(tx))
    b = np.zeros(len(rows), dtype=np.complex128)
    b[0] = 1.0
    v, *_ = np.linalg.lstsq(A, b, rcond=None)
    return float(np.linalg.norm(A @ v - b))
