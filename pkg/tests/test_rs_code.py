"""
Test Suite for the Rack-Aware Reed-Solomon Code
Parameters, field tower, encoding, dual checks, repair spaces and access audit
"""

import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from tools.gf_core import field_make
from tools.rs_code import (RsCodeword, RsParams, build_tower, choose_primes, dual_multipliers,
                           evaluate, interpolate, random_message, repair_space_report,
                           rs_access_audit, rs_decode_from_k, rs_encode, rs_is_codeword,
                           rs_syndrome, rs_verify_mds)
from utils.errors import CodewordFormatError, ParameterError

BASE = dict(q=3, u=2, n_bar=3, k=3, d_bar=2)


@pytest.fixture(scope="module")
def tower():
    """GF(3^210) with rack primes 3, 5, 7"""
    return build_tower(RsParams(**BASE))


# Parameters
def test_default_primes_and_derived_values():
    params = RsParams(**BASE)
    assert params.primes == (3, 5, 7)
    assert (params.n, params.k_bar, params.v, params.r, params.s_bar) == (6, 1, 1, 3, 2)
    assert params.ell == 210
    assert [params.sub_degree(i) for i in range(3)] == [35, 21, 15]
    assert params.describe()["primes"] == [3, 5, 7]


def test_choose_primes():
    """Smallest distinct primes above u that are 1 mod s_bar"""
    assert choose_primes(3, 2, 2) == (3, 5, 7)
    assert choose_primes(3, 1, 3) == (5, 7, 11)
    assert choose_primes(2, 3, 2) == (7, 13)


@pytest.mark.parametrize("overrides,message", [
    ({"q": 9}, "must be prime"),
    ({"u": 4}, "u \\| q - 1"),
    ({"k": 6}, "k < n"),
    ({"d_bar": 3}, "d_bar <= n_bar - 1"),
    ({"primes": (3, 5)}, "rack primes"),
    ({"primes": (3, 3, 5)}, "distinct"),
    ({"primes": (3, 5, 9)}, "not prime"),
])
def test_parameter_constraints(overrides, message):
    values = dict(BASE)
    values.update(overrides)
    with pytest.raises(ValueError, match=message):
        RsParams(**values)


def test_prime_congruence_and_size():
    """Rack primes must be 1 mod s_bar and exceed u"""
    with pytest.raises(ValueError, match="1 mod s_bar"):
        RsParams(**BASE, primes=(3, 5, 2))
    with pytest.raises(ValueError, match="p > u"):
        RsParams(q=7, u=3, n_bar=3, k=5, d_bar=1, primes=(2, 5, 7))


# Field tower
def test_tower_elements(tower):
    """lambda_i has degree p_i, gamma has order u, points are distinct"""
    K = tower.field
    assert K.m == 210
    for lam, p in zip(tower.lambdas, (3, 5, 7)):
        assert K.in_subfield(lam, p) and not K.in_subfield(lam, 1)
    assert tower.gamma ** 2 == 1 and tower.gamma != 1
    assert len(set(tower.points)) == 6
    assert tower.point(1, 1) == tower.lambdas[1] * tower.gamma
    # lambda_j lies in F_i for j != i
    for i in range(3):
        for j in range(3):
            if i != j:
                assert K.in_subfield(tower.lambdas[j], tower.params.sub_degree(i))


def test_build_tower_is_cached():
    assert build_tower(RsParams(**BASE)) is build_tower(RsParams(**BASE))


def test_dual_multipliers_small_field():
    """sum_w v(w) w^t = 0 for t <= n - 2 over any distinct points"""
    F = field_make(7, 1)
    points = [F.scalar(c) for c in (1, 2, 3, 5)]
    mults = dual_multipliers(points)
    for t in range(3):
        total = F.zero()
        for w, v in zip(points, mults):
            total = total + v * w ** t
        assert total.is_zero()


# Encoding, syndromes and interpolation
def test_encode_and_check(tower):
    rng = np.random.default_rng(0)
    message = random_message(tower, rng)
    cw = rs_encode(tower, message)
    assert rs_is_codeword(tower, cw)
    assert cw.coords[4] == evaluate(message, tower.point(2, 0))
    assert interpolate(tower, {c: cw.coords[c] for c in (0, 3, 5)}) == message

    broken = RsCodeword(tower.params, list(cw.coords))
    broken.coords[2] = broken.coords[2] + 1
    assert not rs_is_codeword(tower, broken)
    assert any(not s.is_zero() for s in rs_syndrome(tower, broken))


def test_decode_from_k(tower):
    cw = rs_encode(tower, random_message(tower, np.random.default_rng(1)))
    assert rs_decode_from_k(tower, {c: cw.coords[c] for c in (1, 2, 4)}) == cw
    assert rs_decode_from_k(tower, {c: cw.coords[c] for c in range(6)}) == cw
    with pytest.raises(ParameterError):
        rs_decode_from_k(tower, {0: cw.coords[0]})


def test_codeword_shape_and_erasure(tower):
    cw = rs_encode(tower, random_message(tower, np.random.default_rng(2)))
    damaged = cw.erase([2])
    assert damaged.erased == [2] and damaged.coords[2].is_zero()
    assert damaged.rack(1) == [damaged.coords[2], damaged.coords[3]]
    with pytest.raises(CodewordFormatError):
        RsCodeword(tower.params, cw.coords[:5])
    with pytest.raises(ParameterError):
        rs_encode(tower, cw.coords[:2])


def test_rs_mds(tower):
    """Every 3-subset of the 6 coordinates interpolates back"""
    report = rs_verify_mds(tower, budget=100, seed=0)
    assert report.patterns_total == 20 and report.patterns_checked == 20
    assert report.passed


# Repair spaces and access
@pytest.mark.parametrize("host", range(3))
def test_repair_space_ranks(tower, host):
    """S_host has dimension p_host and its products form a basis over F_host"""
    report = repair_space_report(tower, host)
    assert report.space_dimension == (3, 5, 7)[host]
    assert report.product_rank == report.expected_product_rank == 2 * (3, 5, 7)[host]
    assert report.passed


def test_repair_dual_is_dual(tower):
    host = 0
    products = tower.repair_products(host)
    dual = tower.repair_dual(host)
    for a, x in enumerate(products):
        for b, y in enumerate(dual):
            assert tower.trace(host, x * y) == (1 if a == b else 0)


@pytest.mark.parametrize("host", range(3))
def test_access_audit(tower, host):
    """A host-specific dual storage basis reads ell / s_bar = 105 symbols per helper node"""
    report = rs_access_audit(tower, host)
    assert report.needed_rows == 105
    assert report.per_node == report.expected_per_node == 105
    assert report.orthogonal and report.passed
    assert report.helper_nodes == 4 and report.total == 420


@pytest.mark.parametrize("host", range(3))
def test_traces_rebuild_elements_over_each_rack_subfield(tower, host):
    """beta = sum_t tr_{K/F_host}(b_t beta) dual_t for the host's repair products"""
    K = tower.field
    products = tower.repair_products(host)
    dual = tower.repair_dual(host)
    assert len(products) == len(dual) == 2 * (3, 5, 7)[host]
    rng = np.random.default_rng(host)
    for _ in range(3):
        beta = K.random(rng)
        rebuilt = K.zero()
        for b, bd in zip(products, dual):
            rebuilt = rebuilt + tower.trace(host, b * beta) * bd
        assert rebuilt == beta
