"""
Rack-Aware Reed-Solomon Code
Field tower, evaluation encoding, dual multipliers, repair spaces and access accounting.

Symbols live in K = GF(q^ell) with ell = s_bar * prod(p_i). Rack i evaluates the
message polynomial at lambda_i * gamma^g, where lambda_i has degree p_i over
GF(q) and gamma has order u. F_i is the subfield of degree ell / (s_bar p_i);
it contains every lambda_j with j != i, so F_i-linear algebra runs inside K.
"""

import math
import threading
from functools import lru_cache
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from tools.array_code import MdsReport, sample_combinations
from tools.gf_core import (FieldCtx, FieldElement, dual_basis, element_of_order,
                           field_make, is_prime, matmul_mod, matrix_rank, prime_factors,
                           solve_linear, subfield_element_of_degree, trace_form,
                           trace_to_subfield)
from tools.gf_dense import DenseGF
from utils.config import Config
from utils.errors import (CodewordFormatError, InconsistentSystemError, ParameterError,
                          SingularMatrixError)
from utils.logger import get_logger

logger = get_logger(__name__)


def choose_primes(n_bar: int, s_bar: int, u: int) -> Tuple[int, ...]:
    """Smallest n_bar distinct primes with p = 1 mod s_bar and p > u, ascending"""
    primes = []
    candidate = u + 1
    while len(primes) < n_bar:
        if is_prime(candidate) and candidate % s_bar == 1 % s_bar:
            primes.append(candidate)
        candidate += 1
    return tuple(primes)


class RsParams(BaseModel):
    """Parameter bundle of the rack-aware RS code; primes default to the smallest admissible"""

    model_config = ConfigDict(frozen=True)

    q: int = Field(..., ge=2)
    u: int = Field(..., ge=1)
    n_bar: int = Field(..., ge=2)
    k: int = Field(..., ge=1)
    d_bar: int = Field(..., ge=1)
    e_bar: int = Field(0, ge=0)
    seed: int = 0
    primes: Tuple[int, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _default_primes(cls, data: Any) -> Any:
        if not isinstance(data, dict) or data.get("primes"):
            return data
        try:
            u, k, n_bar = int(data["u"]), int(data["k"]), int(data["n_bar"])
            s_bar = int(data["d_bar"]) - 2 * int(data.get("e_bar", 0)) - k // u + 1
        except (KeyError, TypeError, ValueError, ZeroDivisionError):
            return data
        if s_bar >= 1 and u >= 1:
            data = {**data, "primes": choose_primes(n_bar, s_bar, u)}
        return data

    @model_validator(mode="after")
    def _check_constraints(self):
        if not is_prime(self.q):
            raise ParameterError(f"q = {self.q} must be prime for the RS tower")
        if (self.q - 1) % self.u:
            raise ParameterError(f"u | q - 1 violated: {self.u} does not divide {self.q - 1}")
        if self.k >= self.n:
            raise ParameterError(f"k < n violated: k = {self.k}, n = {self.n}")
        if not self.k_bar + 2 * self.e_bar <= self.d_bar <= self.n_bar - 1:
            raise ParameterError(
                f"k_bar + 2 e_bar <= d_bar <= n_bar - 1 violated: "
                f"{self.k_bar} + 2*{self.e_bar} <= {self.d_bar} <= {self.n_bar - 1}")
        if len(self.primes) != self.n_bar:
            raise ParameterError(f"need {self.n_bar} rack primes, got {len(self.primes)}")
        if len(set(self.primes)) != self.n_bar:
            raise ParameterError(f"rack primes must be distinct: {self.primes}")
        for p in self.primes:
            if not is_prime(p):
                raise ParameterError(f"rack prime {p} is not prime")
            if p % self.s_bar != 1 % self.s_bar:
                raise ParameterError(f"p = 1 mod s_bar violated: {p} mod {self.s_bar}")
            if p <= self.u:
                raise ParameterError(f"p > u violated: p = {p}, u = {self.u}")
        return self

    @property
    def n(self) -> int:
        return self.u * self.n_bar

    @property
    def k_bar(self) -> int:
        return self.k // self.u

    @property
    def v(self) -> int:
        return self.k - self.u * self.k_bar

    @property
    def r(self) -> int:
        return self.n - self.k

    @property
    def s_bar(self) -> int:
        return self.d_bar - 2 * self.e_bar - self.k_bar + 1

    @property
    def ell(self) -> int:
        return self.s_bar * int(np.prod(self.primes))

    def sub_degree(self, i: int) -> int:
        """Degree of F_i over GF(q)"""
        return self.ell // (self.s_bar * self.primes[i])

    def describe(self) -> dict:
        data = self.model_dump()
        data.update(primes=list(self.primes), n=self.n, k_bar=self.k_bar, v=self.v, r=self.r,
                    s_bar=self.s_bar, ell=self.ell)
        return data


def dual_multipliers(points: Sequence[FieldElement]) -> List[FieldElement]:
    """v(w) = prod_{w' != w} (w - w')^-1, the GRS dual column multipliers"""
    out = []
    for a, w in enumerate(points):
        acc = w.ctx.one()
        for b, other in enumerate(points):
            if a != b:
                acc = acc * (w - other)
        out.append(acc.inverse())
    return out


class RsTower:
    """GF(q) < F_i < F < K with rack elements lambda_i, gamma of order u and generator alpha"""

    def __init__(self, params: RsParams):
        self.params = params
        self.name = "Rack-aware RS code"
        self.field: FieldCtx = field_make(params.q, params.ell, params.seed)
        K = self.field

        self.alpha = K.gen()
        for r in prime_factors(params.s_bar):
            assert not K.in_subfield(self.alpha, params.ell // r), \
                "alpha lies in a proper intermediate field of K / F"

        self.lambdas: List[FieldElement] = []
        for p in params.primes:
            lam = subfield_element_of_degree(K, p)
            assert K.in_subfield(lam, p) and not K.in_subfield(lam, 1), \
                f"lambda for p = {p} has the wrong degree"
            self.lambdas.append(lam)

        base = field_make(params.q, 1)
        self.gamma = K.scalar(element_of_order(base, params.u).to_int())
        self.points = [self.lambdas[i] * self.gamma ** g
                       for i in range(params.n_bar) for g in range(params.u)]
        if len(set(self.points)) != params.n:
            raise ParameterError("evaluation points are not pairwise distinct")
        self.multipliers = dual_multipliers(self.points)

        self._lock = threading.Lock()
        self._spaces: Dict[int, List[FieldElement]] = {}
        self._duals: Dict[int, List[FieldElement]] = {}
        logger.info("RS tower ready: GF(%d^%d), primes %s", params.q, params.ell,
                    list(params.primes))

    def point(self, i: int, g: int) -> FieldElement:
        return self.points[i * self.params.u + g]

    def multiplier(self, i: int, g: int) -> FieldElement:
        return self.multipliers[i * self.params.u + g]

    def trace(self, host: int, x: FieldElement) -> FieldElement:
        """tr_{K/F_host}(x)"""
        return trace_to_subfield(self.field, self.params.sub_degree(host), x)

    def repair_space(self, host: int) -> List[FieldElement]:
        with self._lock:
            cached = self._spaces.get(host)
        if cached is not None:
            return cached
        space = build_repair_space(self, host)
        with self._lock:
            self._spaces.setdefault(host, space)
            return self._spaces[host]

    def repair_products(self, host: int) -> List[FieldElement]:
        """e_j lambda_host^(u w), ordered (w, j) with w < s_bar, j < p_host"""
        lam_u = self.lambdas[host] ** self.params.u
        space = self.repair_space(host)
        return [e * lam_u ** w for w in range(self.params.s_bar) for e in space]

    def repair_dual(self, host: int) -> List[FieldElement]:
        """Dual of repair_products(host) over F_host; a SingularMatrixError means no basis"""
        with self._lock:
            cached = self._duals.get(host)
        if cached is not None:
            return cached
        dual = dual_basis(self.field, self.params.sub_degree(host), self.repair_products(host))
        with self._lock:
            self._duals.setdefault(host, dual)
            return self._duals[host]


@lru_cache(maxsize=8)
def build_tower(params: RsParams) -> RsTower:
    return RsTower(params)


def build_repair_space(tower: RsTower, host: int) -> List[FieldElement]:
    """Spanning list of S_host: sum_m alpha^m lambda^(u(p-1)), then alpha^j lambda^(u(j + t s_bar))"""
    params = tower.params
    if not 0 <= host < params.n_bar:
        raise ParameterError(f"host rack {host} outside [0, {params.n_bar})")
    p, s_bar, u = params.primes[host], params.s_bar, params.u
    lam = tower.lambdas[host]
    head = tower.field.zero()
    for m in range(s_bar):
        head = head + tower.alpha ** m
    space = [head * lam ** (u * (p - 1))]
    for t in range((p - 1) // s_bar):
        for j in range(s_bar):
            space.append(tower.alpha ** j * lam ** (u * (j + t * s_bar)))
    return space


class RsCodeword:
    """n coordinates over K in rack-major order; erased coordinates hold zero"""

    def __init__(self, params: RsParams, coords: Sequence[FieldElement],
                 erased: Sequence[int] = ()):
        if len(coords) != params.n:
            raise CodewordFormatError(f"expected {params.n} coordinates, got {len(coords)}")
        self.params = params
        self.coords = list(coords)
        self.erased = sorted(set(erased))

    def rack(self, i: int) -> List[FieldElement]:
        u = self.params.u
        return self.coords[i * u:(i + 1) * u]

    def erase(self, nodes: Sequence[int]) -> "RsCodeword":
        coords = list(self.coords)
        for c in nodes:
            coords[c] = coords[c].ctx.zero()
        return RsCodeword(self.params, coords, set(self.erased) | set(nodes))

    def __eq__(self, other):
        return (isinstance(other, RsCodeword) and self.params == other.params
                and self.coords == other.coords)


def evaluate(coefficients: Sequence[FieldElement], x: FieldElement) -> FieldElement:
    acc = x.ctx.zero()
    for c in reversed(coefficients):
        acc = acc * x + c
    return acc


def rs_encode(tower: RsTower, message: Sequence[FieldElement]) -> RsCodeword:
    """Coordinate iu+g = f(lambda_i gamma^g) for f with the k message coefficients"""
    if len(message) != tower.params.k:
        raise ParameterError(f"message must have k = {tower.params.k} coefficients")
    return RsCodeword(tower.params, [evaluate(message, w) for w in tower.points])


def random_message(tower: RsTower, rng: np.random.Generator) -> List[FieldElement]:
    return [tower.field.random(rng) for _ in range(tower.params.k)]


def interpolate(tower: RsTower, known: Mapping[int, FieldElement]) -> List[FieldElement]:
    """Coefficients of the degree < k polynomial through the known coordinates"""
    k = tower.params.k
    nodes = sorted(known)
    if len(nodes) < k:
        raise ParameterError(f"need at least k = {k} coordinates, got {len(nodes)}")
    rows = [[tower.points[c] ** e for e in range(k)] for c in nodes]
    return solve_linear(rows, [known[c] for c in nodes])


def rs_decode_from_k(tower: RsTower, known: Mapping[int, FieldElement]) -> RsCodeword:
    return rs_encode(tower, interpolate(tower, known))


def rs_syndrome(tower: RsTower, cw: RsCodeword) -> List[FieldElement]:
    """sum_w v(w) w^t C_w for t < n - k"""
    out = []
    for t in range(tower.params.r):
        acc = tower.field.zero()
        for w, v, c in zip(tower.points, tower.multipliers, cw.coords):
            acc = acc + v * w ** t * c
        out.append(acc)
    return out


def rs_is_codeword(tower: RsTower, cw: RsCodeword) -> bool:
    return all(s.is_zero() for s in rs_syndrome(tower, cw))


class SpaceReport(BaseModel):
    """Rank checks of one rack's repair space over F_host"""

    host: int
    prime: int
    space_dimension: int
    product_rank: int
    expected_product_rank: int
    passed: bool


def repair_space_report(tower: RsTower, host: int) -> SpaceReport:
    """dim S_host = p_host and the s_bar p_host products span K over F_host"""
    params = tower.params
    space = tower.repair_space(host)
    products = tower.repair_products(host)
    gram = [[tower.trace(host, a * b) for b in products] for a in products]
    product_rank = matrix_rank(gram)
    pairing = [[tower.trace(host, e * b) for b in products] for e in space]
    dimension = matrix_rank(pairing)
    size = params.s_bar * params.primes[host]
    return SpaceReport(host=host, prime=params.primes[host], space_dimension=dimension,
                       product_rank=product_rank, expected_product_rank=size,
                       passed=dimension == params.primes[host] == len(space)
                       and product_rank == size)


class AccessReport(BaseModel):
    """Helper-side reads when node iu+g stores v_{i,g} C_{iu+g} in the dual basis {beta_b*}"""

    host: int
    needed_rows: int
    per_node: int
    expected_per_node: int
    helper_nodes: int
    total: int
    orthogonal: bool
    passed: bool
    note: str = ("the storage basis depends on the host rack; "
                 "counts are per host rack, not one layout for all racks")


def rs_access_audit(tower: RsTower, host: int,
                    helper_racks: Optional[int] = None) -> AccessReport:
    """Count stored coordinates b with tr(eps_t e_j beta_b*) != 0 for some needed (t, j)"""
    params = tower.params
    K = tower.field
    degree = params.sub_degree(host)
    theta = subfield_element_of_degree(K, degree)
    eps = [theta ** t for t in range(degree)]
    needed = np.array([(e_t * e_j).coeffs for e_j in tower.repair_space(host) for e_t in eps],
                      dtype=np.int64)

    kernel = DenseGF(field_make(K.p, 1))
    pivots = kernel.pivots(needed)
    if len(pivots) != needed.shape[0]:
        raise SingularMatrixError("needed trace functionals are dependent", len(pivots))
    taken = set(pivots)
    extension = np.eye(K.m, dtype=np.int64)[[c for c in range(K.m) if c not in taken]]
    basis = [FieldElement(K, row) for row in np.vstack((needed, extension))]
    dual = np.array([b.coeffs for b in dual_basis(K, 1, basis)], dtype=np.int64)

    pairing = matmul_mod(matmul_mod(needed, trace_form(K), K.p), dual.T, K.p)
    per_node = int(np.count_nonzero(pairing.any(axis=0)))
    orthogonal = bool(np.array_equal(pairing, np.eye(needed.shape[0], K.m, dtype=np.int64)))
    helpers = params.d_bar if helper_racks is None else helper_racks
    expected = params.ell // params.s_bar
    report = AccessReport(host=host, needed_rows=needed.shape[0], per_node=per_node,
                          expected_per_node=expected, helper_nodes=helpers * params.u,
                          total=per_node * helpers * params.u, orthogonal=orthogonal,
                          passed=orthogonal and per_node == expected)
    logger.info("RS access audit host %d: %d symbols per helper node (expected %d)",
                host, per_node, expected)
    return report


def rs_verify_mds(tower: RsTower, budget: Optional[int] = None, seed: int = 0,
                  codewords: int = 2) -> MdsReport:
    """Every k-subset of coordinates (or a seeded sample) must interpolate back to the codeword"""
    params = tower.params
    budget = Config.budget(budget, Config.mds_budget())
    rng = np.random.default_rng(seed)
    words = [rs_encode(tower, random_message(tower, rng)) for _ in range(codewords)]
    subsets, sampled = sample_combinations(params.n, params.k, budget, rng)

    failures = []
    for subset in subsets:
        for cw in words:
            try:
                decoded = rs_decode_from_k(tower, {c: cw.coords[c] for c in subset})
            except (SingularMatrixError, InconsistentSystemError) as exc:
                logger.warning("coordinate subset %s failed: %s", subset, exc)
                decoded = None
            if decoded != cw:
                failures.append(list(subset))
                break

    return MdsReport(params=params.describe(), patterns_total=math.comb(params.n, params.k),
                     patterns_checked=len(subsets), codewords=codewords, sampled=sampled,
                     failures=failures, passed=bool(subsets) and not failures)
