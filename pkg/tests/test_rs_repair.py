"""
Test Suite for RS Trace Repair
Helper traces, aggregate completion, unlocking, corrupted helpers and the extended scheme
"""

import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from agents.models import RepairRequest
from agents.rs_repair import RsRepairAgent
from tools.rs_code import RsParams, build_tower, random_message, rs_encode
from utils.errors import ParameterError


@pytest.fixture(scope="module")
def agent():
    """q=3, u=2, n_bar=3, k=3, d_bar=2: ell = 210"""
    return RsRepairAgent(build_tower(RsParams(q=3, u=2, n_bar=3, k=3, d_bar=2)))


@pytest.fixture(scope="module")
def agent_e1():
    """q=3, u=2, n_bar=3, k=1, d_bar=2, e_bar=1: s_bar = 1, ell = 105"""
    return RsRepairAgent(build_tower(RsParams(q=3, u=2, n_bar=3, k=1, d_bar=2, e_bar=1)))


def _repair(agent, host, failed, helpers, corrupted=(), seed=0):
    tower = agent.tower
    u = tower.params.u
    original = rs_encode(tower, random_message(tower, np.random.default_rng(seed)))
    damaged = original.erase([host * u + g for g in failed])
    request = RepairRequest(host=host, failed=list(failed), helpers=list(helpers),
                            corrupted=list(corrupted))
    recovered, transcript = agent.rs_repair(damaged, request, np.random.default_rng(seed + 1))
    assert sorted(recovered) == [host * u + g for g in failed]
    for node, value in recovered.items():
        assert value == original.coords[node]
    return transcript


def test_only_single_failures_are_repairable(agent):
    """u - v = 1 and u - 1 = 1: h = 1 is the only scheme"""
    assert agent.scheme_for(1) == "base"
    with pytest.raises(ParameterError):
        agent.scheme_for(2)


@pytest.mark.parametrize("host", range(3))
@pytest.mark.parametrize("failed", [0, 1])
def test_single_node_repair(agent, host, failed):
    """Exact repair at d_bar ell / s_bar = 210 downloaded symbols"""
    helpers = [i for i in range(3) if i != host]
    transcript = _repair(agent, host, [failed], helpers, seed=host * 2 + failed)
    assert transcript.scheme == "base"
    assert transcript.downloaded_symbols == 210
    assert transcript.downloads_per_m == [210]
    assert transcript.accessed_per_node == 105
    assert transcript.accessed_symbols == 420
    assert transcript.local_reads == 210


def test_helper_traces_lie_in_host_subfield(agent):
    tower = agent.tower
    cw = rs_encode(tower, random_message(tower, np.random.default_rng(5)))
    traces = agent.rs_helper_extract(cw.rack(1), 1, 0, 0)
    assert len(traces) == 3
    assert all(tower.field.in_subfield(t, tower.params.sub_degree(0)) for t in traces)


def test_host_aggregate_from_true_traces(agent):
    """Completing C_0 from honest traces gives the host aggregate exactly"""
    tower = agent.tower
    cw = rs_encode(tower, random_message(tower, np.random.default_rng(6)))
    host = 1
    payloads = {i: agent.rs_helper_extract(cw.rack(i), i, host, 0) for i in (0, 2)}
    columns, detected = agent.rs_cm_reconstruct(payloads, host, 0)
    assert detected == set()
    expected = tower.field.zero()
    for g in range(2):
        expected = expected + tower.multiplier(host, g) * cw.coords[host * 2 + g]
    assert agent.rs_host_aggregate(columns, host, 0) == expected


def test_payload_cost(agent):
    tower = agent.tower
    cw = rs_encode(tower, random_message(tower, np.random.default_rng(7)))
    wire = agent.collect_payloads(cw, RepairRequest(host=2, failed=[1], helpers=[0, 1]))
    assert [(p.rack, p.m, p.cost) for p in wire] == [(0, 0, 105), (1, 0, 105)]


def test_wrong_helper_count(agent):
    with pytest.raises(ParameterError, match="needs 2 helper"):
        agent.validate(RepairRequest(host=0, failed=[0], helpers=[1]))


@pytest.mark.parametrize("corrupted", [[], [1], [2]])
def test_corrupted_helper_localised(agent_e1, corrupted):
    """One corrupted trace column out of two is found and ignored"""
    transcript = _repair(agent_e1, 0, [1], [1, 2], corrupted=corrupted, seed=11)
    assert transcript.downloaded_symbols == 210
    assert transcript.corrupted_detected == corrupted


@pytest.mark.slow
def test_extended_rs_repair():
    """q=7, u=3, n_bar=3, k=5, d_bar=1: h = 2 downloads 385 + 2 * 385 = 1155 < 1540"""
    agent = RsRepairAgent(build_tower(RsParams(q=7, u=3, n_bar=3, k=5, d_bar=1)))
    assert agent.params.ell == 385
    assert agent.scheme_for(1) == "base"
    assert agent.scheme_for(2) == "extended"
    with pytest.raises(ParameterError):
        agent.scheme_for(3)
    transcript = _repair(agent, 0, [0, 2], [1, 2], seed=3)
    assert transcript.scheme == "extended"
    assert transcript.downloads_per_m == [385, 770]
    assert transcript.downloaded_symbols == 1155 < 1540
    single = _repair(agent, 2, [1], [0], seed=4)
    assert single.downloaded_symbols == 385
