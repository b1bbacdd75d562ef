"""
Test Suite for the Finite Field Core
Arithmetic, Frobenius maps, traces, dual bases and linear algebra
"""

import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from tools.gf_core import (FieldCtx, arith, dual_basis, element_from_json, element_of_order,
                           element_to_json, field_make, is_prime, matmul_mod, matrix_inverse,
                           matrix_rank, prime_factors, prime_power, solve_linear,
                           subfield_element_of_degree, trace_form, trace_naive,
                           trace_to_subfield)
from tools.gf_dense import DenseGF
from utils.errors import (FieldArithmeticError, InconsistentSystemError, ParameterError,
                          SingularMatrixError)


# Integer helpers
def test_prime_helpers():
    """Primality, factorisation and prime-power recognition"""
    assert is_prime(13) and is_prime(2) and not is_prime(15) and not is_prime(1)
    assert prime_factors(210) == [2, 3, 5, 7]
    assert prime_factors(1) == []
    assert prime_power(16) == (2, 4)
    assert prime_power(13) == (13, 1)
    assert prime_power(12) is None


def test_matmul_mod_large_characteristic():
    """Products beyond float precision fall back to exact integer paths"""
    p = 2_147_483_647
    rng = np.random.default_rng(0)
    a = rng.integers(0, p, size=(3, 4), dtype=np.int64)
    b = rng.integers(0, p, size=(4, 2), dtype=np.int64)
    expected = [[sum(int(a[i, t]) * int(b[t, j]) for t in range(4)) % p for j in range(2)]
                for i in range(3)]
    assert matmul_mod(a, b, p).tolist() == expected


# Field construction
def test_field_make_is_cached_and_irreducible():
    """Same (p, m, seed) gives the same context with a monic irreducible modulus"""
    a = field_make(3, 5, 0)
    b = field_make(3, 5, 0)
    assert a is b
    assert a.is_irreducible()
    assert len(a.modulus) == 6 and a.modulus[-1] == 1
    assert a.q == 243


def test_reducible_modulus_rejected():
    """x^2 + 1 = (x + 1)^2 over GF(2) is refused"""
    with pytest.raises(ParameterError):
        FieldCtx(2, 2, [1, 0, 1])


def test_descriptor_rebuilds_the_same_field():
    """describe/from_descriptor reproduces the modulus"""
    K = field_make(5, 4)
    assert FieldCtx.from_descriptor(K.describe()) == K


# Arithmetic
@pytest.mark.parametrize("p,m", [(2, 8), (3, 7), (13, 1), (7, 3)])
def test_field_axioms(p, m):
    """Distributivity, inverses and subtraction on random elements"""
    K = field_make(p, m)
    rng = np.random.default_rng(p * 100 + m)
    for _ in range(15):
        a, b, c = K.random(rng), K.random(rng), K.random(rng)
        assert (a + b) * c == a * c + b * c
        assert a - a == K.zero()
        assert -a + a == 0
        if not a.is_zero():
            assert a * a.inverse() == K.one()
            assert b / a * a == b


def test_division_by_zero():
    """Zero has no inverse"""
    K = field_make(5, 3)
    with pytest.raises(FieldArithmeticError):
        K.zero().inverse()
    with pytest.raises(ZeroDivisionError):
        K.one() / K.zero()
    with pytest.raises(FieldArithmeticError):
        K.zero() ** -1


def test_powers():
    """Group order, negative exponents and the zero power"""
    K = field_make(2, 8)
    x = K.gen()
    assert x ** (K.q - 1) == K.one()
    assert x ** -1 == x.inverse()
    assert x ** 5 * x ** -5 == 1
    assert K.zero() ** 0 == K.one()


def test_named_operations():
    """arith dispatches by name and rejects unknown operations"""
    K = field_make(7, 2)
    a, b = K.gen(), K.scalar(3)
    assert arith(a, b, "add") == a + b
    assert arith(a, b, "div") == a / b
    assert arith(a, None, "pow", exponent=4) == a ** 4
    assert arith(a, None, "inv") == a.inverse()
    with pytest.raises(ParameterError):
        arith(a, b, "xor")


def test_json_encoding():
    """Coefficient lists and integer encodings both decode"""
    K = field_make(3, 4)
    x = K.gen() ** 7
    assert element_from_json(K, element_to_json(x)) == x
    assert element_from_json(K, x.to_int()) == x


def test_mixed_fields_refused():
    """Elements of different fields do not combine"""
    with pytest.raises(ParameterError):
        field_make(3, 2).one() + field_make(3, 3).one()


# Frobenius, subfields and traces
def test_frobenius_and_subfields():
    """x -> x^p matches exponentiation; subfield elements have the requested degree"""
    K = field_make(2, 6)
    x = K.random(np.random.default_rng(3))
    assert K.frobenius(x) == x ** 2
    assert K.frobenius(x, 6) == x
    lam = subfield_element_of_degree(K, 3)
    assert K.in_subfield(lam, 3)
    assert not K.in_subfield(lam, 1)


def test_subfield_degree_must_divide():
    """Degree 4 is not a subfield of GF(2^6)"""
    with pytest.raises(ParameterError):
        subfield_element_of_degree(field_make(2, 6), 4)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_trace_matches_naive(d):
    """Cached trace map equals the Frobenius sum and lands in the subfield"""
    K = field_make(3, 6)
    rng = np.random.default_rng(d)
    for _ in range(5):
        x = K.random(rng)
        t = trace_to_subfield(K, d, x)
        assert t == trace_naive(K, d, x)
        assert K.in_subfield(t, d)


def test_trace_form_is_symmetric_and_nonsingular():
    """The power-basis trace Gram matrix is Hankel and invertible"""
    K = field_make(5, 4)
    gram = trace_form(K)
    assert np.array_equal(gram, gram.T)
    assert DenseGF(field_make(5, 1)).rank(gram) == 4


def test_dual_basis_over_prime_field():
    """tr(b_s dual_t) = delta_st and traces rebuild any element"""
    K = field_make(2, 6)
    basis = [K.gen() ** i for i in range(6)]
    dual = dual_basis(K, 1, basis)
    for s in range(6):
        for t in range(6):
            assert trace_to_subfield(K, 1, basis[s] * dual[t]) == (1 if s == t else 0)
    beta = K.random(np.random.default_rng(9))
    rebuilt = K.zero()
    for b, bd in zip(basis, dual):
        rebuilt = rebuilt + trace_to_subfield(K, 1, b * beta) * bd
    assert rebuilt == beta


def test_dual_basis_over_subfield():
    """{1, x, x^2} is a basis of GF(2^6) over GF(4) and has a trace dual"""
    K = field_make(2, 6)
    basis = [K.gen() ** i for i in range(3)]
    dual = dual_basis(K, 2, basis)
    for s in range(3):
        for t in range(3):
            assert trace_to_subfield(K, 2, basis[s] * dual[t]) == (1 if s == t else 0)


def test_dual_basis_rejects_dependent_lists():
    """Repeated elements are not a basis"""
    K = field_make(2, 4)
    with pytest.raises(SingularMatrixError):
        dual_basis(K, 1, [K.one()] * 4)
    with pytest.raises(ParameterError):
        dual_basis(K, 1, [K.one()])


def test_element_of_order():
    """gamma of order 3 in GF(13); 5 does not divide 12"""
    F = field_make(13, 1)
    g = element_of_order(F, 3)
    assert g ** 3 == 1 and g != 1
    with pytest.raises(ParameterError):
        element_of_order(F, 5)


def test_primitive_and_minimal_polynomial():
    """Minimal polynomial of a degree-3 element has degree 3 and vanishes at it"""
    K = field_make(2, 6)
    xi = K.primitive_element()
    assert all(xi ** (63 // r) != 1 for r in (3, 7))
    lam = subfield_element_of_degree(K, 3)
    poly = K.minimal_polynomial(lam)
    assert len(poly) == 4 and poly[-1] == 1
    value = K.zero()
    for i, c in enumerate(poly):
        value = value + K.scalar(c) * lam ** i
    assert value.is_zero()


# Linear algebra over FieldElements
def test_solve_linear_vandermonde():
    """Distinct nodes give a solvable Vandermonde system"""
    K = field_make(3, 4)
    nodes = [K.gen() ** e for e in (0, 1, 2)]
    A = [[x ** j for j in range(3)] for x in nodes]
    truth = [K.gen() ** 5, K.scalar(2), K.zero()]
    y = [sum((a * t for a, t in zip(row, truth)), K.zero()) for row in A]
    assert solve_linear(A, y) == truth
    assert matrix_rank(A) == 3
    inv = matrix_inverse(A)
    assert all((sum((A[i][t] * inv[t][j] for t in range(3)), K.zero()) == (1 if i == j else 0))
               for i in range(3) for j in range(3))


def test_solve_linear_errors():
    """Repeated rows are singular; a contradictory extra row is inconsistent"""
    K = field_make(3, 4)
    one, x = K.one(), K.gen()
    with pytest.raises(SingularMatrixError) as info:
        solve_linear([[one, x], [one, x]], [one, one])
    assert info.value.rank == 1
    with pytest.raises(InconsistentSystemError):
        solve_linear([[one, K.zero()], [K.zero(), one], [one, one]], [one, one, K.zero()])


def test_solve_linear_prime_field_path():
    """GF(p) systems go through the dense kernel"""
    F = field_make(13, 1)
    A = [[F.scalar(2), F.scalar(1)], [F.scalar(1), F.scalar(3)]]
    solution = solve_linear(A, [F.scalar(5), F.scalar(10)])
    assert solution == [F.scalar(1), F.scalar(3)]


# Dense kernel
@pytest.mark.parametrize("p,m", [(2, 4), (3, 2), (13, 1)])
def test_dense_kernel_matches_field_elements(p, m):
    """Vectorised add, mul and inv agree with FieldElement arithmetic"""
    K = field_make(p, m)
    gf = DenseGF(K)
    rng = np.random.default_rng(p + m)
    a = gf.random(rng, 40)
    b = gf.random(rng, 40)
    total, product = gf.add(a, b), gf.mul(a, b)
    for i in range(40):
        x, y = gf.element(a[i]), gf.element(b[i])
        assert gf.element(total[i]) == x + y
        assert gf.element(product[i]) == x * y
    nonzero = a[a != 0]
    inverses = gf.inv(nonzero)
    assert np.all(gf.mul(nonzero, inverses) == 1)
    assert np.array_equal(gf.sub(a, a), np.zeros(40, dtype=np.int64))


def test_dense_kernel_powers():
    """pow agrees with repeated multiplication, including exponent zero"""
    gf = DenseGF(field_make(2, 4))
    a = np.arange(16)
    assert np.array_equal(gf.pow(a, 3), gf.mul(a, gf.mul(a, a)))
    assert np.all(gf.pow(a, 0) == 1)
    with pytest.raises(FieldArithmeticError):
        gf.inv(np.array([0, 1]))


def test_dense_solve_rank_and_pivots():
    """Square solve, singular and inconsistent systems, and pivot columns"""
    gf = DenseGF(field_make(13, 1))
    A = np.array([[1, 1, 1], [1, 2, 4], [1, 3, 9]])
    X = np.array([[5, 0], [7, 1], [2, 12]])
    B = gf.matmul(A, X)
    assert np.array_equal(gf.solve(A, B), X)
    assert np.array_equal(gf.matmul(A, gf.inverse(A)), np.eye(3, dtype=np.int64))

    with pytest.raises(SingularMatrixError) as info:
        gf.solve(np.array([[1, 2], [2, 4]]), np.array([1, 2]))
    assert info.value.rank == 1
    with pytest.raises(InconsistentSystemError):
        gf.solve(np.array([[1, 0], [0, 1], [1, 1]]), np.array([1, 1, 0]))

    assert gf.rank(np.array([[1, 2, 3], [2, 4, 6]])) == 1
    assert gf.pivots(np.array([[0, 1, 2], [0, 2, 5]])) == [1, 2]


def test_dense_table_limit():
    """Extension fields beyond the table limit are refused"""
    with pytest.raises(ParameterError):
        DenseGF(field_make(2, 17))


def test_trace_matches_naive_in_large_field():
    """GF(3^30) down to GF(3^15): cached map and Frobenius sum agree on 100 elements"""
    K = field_make(3, 30)
    rng = np.random.default_rng(30)
    for _ in range(100):
        x = K.random(rng)
        assert trace_to_subfield(K, 15, x) == trace_naive(K, 15, x)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_dual_of_dual_is_original(d):
    """The trace dual is an involution on bases"""
    K = field_make(2, 6)
    basis = [K.gen() ** (i + 1) for i in range(6 // d)]
    assert dual_basis(K, d, dual_basis(K, d, basis)) == basis
