from fractions import Fraction
import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from cachezf import converse as cv
from cachezf.errors import DomainError, ExactCapExceeded, InstanceFormatError
from cachezf.phy import gen_channel
from cachezf.placement import NetworkConfig, build_placement
from cachezf.scheduler import schedule

from conftest import integer_configs


def P(tx, rx, to, pid=None):
    return cv.PacketInstance(pid if pid is not None else (to, tuple(tx), tuple(rx)), frozenset(tx), frozenset(rx), to)


def set_partitions(items):
    """Every set partition of ``items``, generated literally."""
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[head] + part[k]] + part[k + 1:]
        yield [[head]] + part


def literal_min_blocks(packets):
    best = None
    for part in set_partitions(list(range(len(packets)))):
        if all(cv.group_feasible(packets[k] for k in g) for g in part):
            best = len(part) if best is None else min(best, len(part))
    return best if best is not None else 0


packet_st = st.builds(
    lambda tx, rx, to: (tx, rx - {to}, to),
    st.frozensets(st.integers(1, 3), min_size=1, max_size=3),
    st.frozensets(st.integers(1, 4), max_size=3),
    st.integers(1, 4),
)
instances = st.lists(packet_st, min_size=0, max_size=7).map(
    lambda ps: [cv.PacketInstance(k, tx, rx, to) for k, (tx, rx, to) in enumerate(ps)]
)


def test_packet_validation():
    with pytest.raises(DomainError):
        P([], [1], 2)
    with pytest.raises(DomainError):
        P([1], [2], 2)
    assert P([1, 2], [3], 1).capacity == 3


def test_group_feasible_examples():
    good = [P([1, 2], [2], 1), P([2, 3], [3], 2), P([1, 3], [1], 3)]
    assert cv.group_feasible(good)
    assert not cv.group_feasible([P([1, 2], [2], 1), P([2, 3], [3], 2), P([1], [], 3)])
    assert cv.group_feasible([P([1, 2], [], 1), P([1, 2], [], 2)])
    assert not cv.group_feasible([P([1, 2], [], 1), P([1, 2], [], 1)])
    assert cv.group_feasible([P([1], [], 1)])


def test_numeric_feasibility_of_demo_group(demo_cfg):
    H = gen_channel(9, demo_cfg)
    ok, res = cv.group_feasible_numeric([P([1, 2], [2], 1), P([2, 3], [3], 2), P([1, 3], [1], 3)], H)
    assert ok and res < 1e-10
    ok, res = cv.group_feasible_numeric([P([2], [], 3)], H)
    assert ok and res < 1e-12
    ok, res = cv.group_feasible_numeric([P([1], [], 1), P([2], [], 2)], H)
    assert not ok and res > 1e-6
    ok, res = cv.group_feasible_numeric([P([1, 2], [], 1), P([1, 3], [], 1)], H)
    assert not ok and res == float("inf")


@given(instances)
def test_feasible_groups_match_direct_enumeration(packets):
    got = set(cv.feasible_groups(packets))
    want = {
        sum(1 << k for k in combo)
        for size in range(1, len(packets) + 1)
        for combo in itertools.combinations(range(len(packets)), size)
        if cv.group_feasible(packets[k] for k in combo)
    }
    assert got == want


@given(instances)
def test_exact_matches_literal_enumeration(packets):
    exact = cv.min_blocks_exact(packets)
    assert exact == cv.min_blocks_bruteforce(packets)
    assert exact == literal_min_blocks(packets)
    assert cv.min_blocks_greedy(packets) >= exact
    parts = cv.greedy_partition(packets)
    assert sorted(k for g in parts for k in g) == list(range(len(packets)))
    assert all(cv.group_feasible(packets[k] for k in g) for g in parts)


def test_exact_edge_cases():
    assert cv.min_blocks_exact([]) == 0
    assert cv.min_blocks_greedy([]) == 0
    assert cv.min_blocks_greedy([P([1], [], 1)]) == 1
    wide = [P([1, 2, 3], [], j) for j in (1, 2, 3)]
    assert cv.min_blocks_exact(wide) == 1
    with pytest.raises(ExactCapExceeded, match="greedy"):
        cv.min_blocks_exact([P([1], [], 1, k) for k in range(21)])
    with pytest.raises(ExactCapExceeded):
        cv.min_blocks_bruteforce(wide, cap=2)


SMALL = [c for c in integer_configs(4)
         if cv.PlacementProfile.from_placement(build_placement(c)).packets_for(range(1, c.k_r + 1)).__len__() <= 20]


@pytest.mark.parametrize("cfg", SMALL, ids=lambda c: c.label())
def test_combinatorial_placement_attains_trivial_bound(cfg):
    d = tuple(range(1, cfg.k_r + 1))
    inst = cv.instance_for_config(cfg, d)
    size = int(cfg.t_t + cfg.t_r)
    assert all(p.capacity == size for p in inst.packets)
    exact = cv.min_blocks_exact(inst.packets)
    assert exact == -(-len(inst.packets) // size) == schedule(d, cfg).blocks


@pytest.mark.parametrize("cfg", list(integer_configs(3)), ids=lambda c: c.label())
def test_profile_budgets_exact(cfg):
    prof = cv.PlacementProfile.from_placement(build_placement(cfg))
    F = cfg.packets
    assert prof.violations(cfg) == []
    assert prof.file_totals(cfg.n_files) == [F] * cfg.n_files
    assert prof.tx_loads(cfg.k_t) == [cfg.m_t * F] * cfg.k_t
    assert prof.rx_loads(cfg.k_r) == [cfg.m_r * F] * cfg.k_r


def test_average_min_blocks_examples(demo_cfg):
    c2 = NetworkConfig(2, 2, 2, Fraction(1), Fraction(1), 4)
    prof2 = cv.PlacementProfile.from_placement(build_placement(c2))
    assert cv.average_min_blocks(prof2, c2) == 2
    full = NetworkConfig(2, 2, 2, Fraction(1), Fraction(2))
    prof_full = cv.PlacementProfile.from_placement(build_placement(full))
    assert cv.average_min_blocks(prof_full, full) == 0
    prof3 = cv.PlacementProfile.from_placement(build_placement(demo_cfg))
    assert cv.average_min_blocks(prof3, demo_cfg, cap=18) == 6
    with pytest.raises(ExactCapExceeded):
        cv.average_min_blocks(prof3, demo_cfg, cap=17)
    with pytest.raises(DomainError):
        cv.average_min_blocks(prof2, NetworkConfig(2, 3, 2, Fraction(1), Fraction(0)))


def test_analytic_bound_values(demo_cfg):
    assert cv.analytic_block_lb(demo_cfg) == 4
    assert cv.analytic_block_lb(NetworkConfig(2, 2, 2, Fraction(1), Fraction(1), 4)) == 1
    assert cv.analytic_block_lb(NetworkConfig(2, 2, 2, Fraction(1), Fraction(2)), f_packets=4) == 0
    # direct evaluation with a non-integer cache
    cfg = NetworkConfig(2, 2, 2, Fraction(1), Fraction(1, 2), 4)
    assert cv.analytic_block_lb(cfg) == Fraction(2 * 2 * 4) * Fraction(3, 4) ** 2 / 3


def test_dof_bounds_examples(demo_cfg):
    b = cv.dof_bounds(demo_cfg)
    assert (b.dof_lower, b.dof_upper, b.gap_ratio) == (3, 3, 1)
    for kr, n, m_r in [(3, 4, 1), (2, 3, 2), (4, 4, 0)]:
        b = cv.dof_bounds(NetworkConfig(1, kr, n, Fraction(n), Fraction(m_r)))
        assert b.dof_lower == min(1 + Fraction(kr * m_r, n), kr)
    for kt, kr, n, m_r in [(2, 4, 3, 1), (3, 5, 4, 2)]:
        b = cv.dof_bounds(NetworkConfig(kt, kr, n, Fraction(n), Fraction(m_r)))
        assert b.dof_lower == min(kt + Fraction(kr * m_r, n), kr)
    b = cv.dof_bounds(NetworkConfig(2, 3, 2, Fraction(1), Fraction(2)))
    assert b.no_delivery and b.dof_lower == 3
    assert json.loads(json.dumps(b.to_json()))["no_delivery"] is True


def _random_profile(draw, kt, kr, n, F):
    keys = [(frozenset(T), frozenset(R))
            for t in range(1, kt + 1) for T in itertools.combinations(range(1, kt + 1), t)
            for r in range(0, kr + 1) for R in itertools.combinations(range(1, kr + 1), r)]
    counts = {}
    for file in range(1, n + 1):
        picks = draw(st.lists(st.sampled_from(range(len(keys))), min_size=F, max_size=F))
        for k in picks:
            key = (file, *keys[k])
            counts[key] = counts.get(key, 0) + 1
    return cv.PlacementProfile(counts)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.data())
def test_analytic_bound_below_average_for_any_budgeted_profile(data):
    kt = data.draw(st.integers(1, 3))
    kr = data.draw(st.integers(1, 2))
    n = data.draw(st.integers(kr, 2))
    F = data.draw(st.integers(1, 4))
    prof = _random_profile(data.draw, kt, kr, n, F)
    # tightest budgets this profile respects
    m_t = Fraction(max(prof.tx_loads(kt)), F)
    m_r = Fraction(max(prof.rx_loads(kr)), F)
    assume(kt * m_t >= n and 0 < m_t <= n)
    cfg = NetworkConfig(kt, kr, n, m_t, m_r, F)
    assert prof.violations(cfg) == []
    b = cv.order_aggregates(prof, cfg)
    S = cfg.k_t * cfg.m_t + cfg.k_r * cfg.m_r
    assert S * F >= sum(Fraction(r + rp, kr - rp) * v for (r, rp), v in b.items())
    assert sum(b.values()) >= kr * (n - m_r) * F
    avg = cv.average_min_blocks(prof, cfg)
    assert avg >= cv.profile_block_bound(prof, cfg) >= cv.analytic_block_lb(cfg, F)


def test_instance_roundtrip_and_errors(tmp_path, demo_cfg):
    inst = cv.instance_for_config(demo_cfg, (1, 2, 3), "demo")
    text = cv.dump_instance(inst)
    back = cv.parse_instance(text)
    assert back.packets == inst.packets and back.config == demo_cfg and back.demand == (1, 2, 3)
    assert back.profile.counts == inst.profile.counts
    path = tmp_path / "i.json"
    path.write_text(text)
    assert cv.load_instance(path).packets == inst.packets
    assert cv.parse_instance('{"packets": []}').packets == ()
    with pytest.raises(InstanceFormatError, match="line 2"):
        cv.parse_instance('{\n  "packets": [,]}')
    with pytest.raises(InstanceFormatError, match=r"packets\[0\]\.to"):
        cv.parse_instance('{"packets": [{"tx": [1], "rx": []}]}')
    with pytest.raises(InstanceFormatError, match=r"packets\[1\]\.tx"):
        cv.parse_instance('{"packets": [{"tx": [1], "rx": [], "to": 1}, {"tx": "x", "rx": [], "to": 2}]}')
    with pytest.raises(InstanceFormatError, match=r"packets\[0\]"):
        cv.parse_instance('{"packets": [{"tx": [1], "rx": [1], "to": 1}]}')
    with pytest.raises(InstanceFormatError, match="format"):
        cv.parse_instance('{"format": "other/2", "packets": []}')
    with pytest.raises(InstanceFormatError, match="config"):
        cv.parse_instance('{"config": {"k_t": 1}, "packets": []}')
