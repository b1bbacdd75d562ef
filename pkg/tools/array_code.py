"""
Rack-Aware MDS Array Code
Parity-check construction, systematic encoding, syndromes and erasure decoding.

Node iu+g (rack i, in-rack position g) stores a column of ell = s_bar^n_bar symbols.
The code is the kernel of sum_{i,g} A_{i,g}^t C_{iu+g} = 0, t < r, where
A_{i,g} = gamma^g A_i and A_i is a scaled shift of the i-th base-s_bar digit.
The A matrices are applied through digit arithmetic and only materialised when
a dense parity-check matrix is needed.
"""

import math
import threading
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from tools.gf_core import FieldElement, element_of_order, field_make, prime_power
from tools.gf_dense import DenseGF
from utils.config import Config
from utils.errors import (CodewordFormatError, InconsistentSystemError, ParameterError,
                          SingularMatrixError)
from utils.logger import get_logger

logger = get_logger(__name__)


def smallest_array_field(n: int, u: int) -> int:
    """Smallest prime power q > n with u | q - 1"""
    q = n + 1
    while True:
        if prime_power(q) is not None and (q - 1) % u == 0:
            return q
        q += 1


class ArrayCodeParams(BaseModel):
    """Parameter bundle (q, u, n_bar, k, d_bar, e_bar) with derived quantities"""

    model_config = ConfigDict(frozen=True)

    q: int = Field(..., ge=2)
    u: int = Field(..., ge=1)
    n_bar: int = Field(..., ge=2)
    k: int = Field(..., ge=1)
    d_bar: int = Field(..., ge=1)
    e_bar: int = Field(0, ge=0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_constraints(self):
        if prime_power(self.q) is None:
            raise ParameterError(f"q = {self.q} is not a prime power")
        if (self.q - 1) % self.u:
            raise ParameterError(f"u | q - 1 violated: {self.u} does not divide {self.q - 1}")
        if self.q <= self.n:
            raise ParameterError(f"q > n violated: q = {self.q}, n = {self.n}")
        if not self.u <= self.k:
            raise ParameterError(f"u <= k violated: u = {self.u}, k = {self.k}")
        if not self.u <= self.r:
            raise ParameterError(f"u <= n - k violated: u = {self.u}, n - k = {self.r}")
        if not self.k_bar + 2 * self.e_bar <= self.d_bar <= self.n_bar - 1:
            raise ParameterError(
                f"k_bar + 2 e_bar <= d_bar <= n_bar - 1 violated: "
                f"{self.k_bar} + 2*{self.e_bar} <= {self.d_bar} <= {self.n_bar - 1}")
        if math.gcd(self.u, self.s_bar) != 1:
            raise ParameterError(f"gcd(u, s_bar) = 1 violated: gcd({self.u}, {self.s_bar}) "
                                 f"= {math.gcd(self.u, self.s_bar)}")
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
    def r_bar(self) -> int:
        return self.n_bar - self.k_bar

    @property
    def s_bar(self) -> int:
        return self.d_bar - 2 * self.e_bar - self.k_bar + 1

    @property
    def ell(self) -> int:
        return self.s_bar ** self.n_bar

    @property
    def ell_prime(self) -> int:
        return self.s_bar ** (self.n_bar - 1)

    def describe(self) -> dict:
        data = self.model_dump()
        data.update(n=self.n, k_bar=self.k_bar, v=self.v, r=self.r, r_bar=self.r_bar,
                    s_bar=self.s_bar, ell=self.ell, ell_prime=self.ell_prime)
        return data


class DigitIndex:
    """Row index j with its base-s_bar digits; digits[i] is j_i"""

    __slots__ = ("j", "base", "digits")

    def __init__(self, j: int, base: int, width: int):
        if not 0 <= j < base ** width:
            raise ParameterError(f"index {j} outside [0, {base ** width})")
        self.j = j
        self.base = base
        self.digits = tuple((j // base ** i) % base for i in range(width))

    @classmethod
    def from_digits(cls, digits: Sequence[int], base: int) -> "DigitIndex":
        return cls(sum(d * base ** i for i, d in enumerate(digits)), base, len(digits))

    def __int__(self):
        return self.j

    def __eq__(self, other):
        return isinstance(other, DigitIndex) and (self.j, self.base) == (other.j, other.base)

    def __hash__(self):
        return hash((self.j, self.base))

    def __repr__(self):
        return f"DigitIndex({self.j}, digits={self.digits[::-1]})"


def digit_sub(j: DigitIndex, i: int, b: int) -> DigitIndex:
    """j(i, b): replace digit i of j by b"""
    if not 0 <= i < len(j.digits):
        raise ParameterError(f"rack {i} outside [0, {len(j.digits)})")
    if not 0 <= b < j.base:
        raise ParameterError(f"digit {b} outside [0, {j.base})")
    digits = list(j.digits)
    digits[i] = b
    return DigitIndex.from_digits(digits, j.base)


class ArrayCodeword:
    """n x ell grid of integer-encoded symbols; erased columns are tracked separately"""

    def __init__(self, params: ArrayCodeParams, grid: np.ndarray,
                 erased: Sequence[int] = ()):
        grid = np.asarray(grid, dtype=np.int64)
        if grid.shape != (params.n, params.ell):
            raise CodewordFormatError(
                f"grid shape {grid.shape} does not match ({params.n}, {params.ell})")
        self.params = params
        self.grid = grid
        self.erased = sorted(set(erased))

    def rack(self, i: int) -> np.ndarray:
        u = self.params.u
        return self.grid[i * u:(i + 1) * u]

    def erase(self, nodes: Sequence[int]) -> "ArrayCodeword":
        grid = self.grid.copy()
        grid[list(nodes)] = 0
        return ArrayCodeword(self.params, grid, set(self.erased) | set(nodes))

    def __eq__(self, other):
        return (isinstance(other, ArrayCodeword) and self.params == other.params
                and np.array_equal(self.grid, other.grid))


class MdsReport(BaseModel):
    """Outcome of an erasure-pattern sweep"""

    params: dict
    patterns_total: int
    patterns_checked: int
    codewords: int
    sampled: bool
    failures: List[List[int]] = Field(default_factory=list)
    passed: bool


class CmSweepReport(BaseModel):
    """Outcome of the aggregate-code subset sweep for one host rack and m"""

    host: int
    m: int
    subset_size: int
    subsets_total: int
    subsets_checked: int
    sampled: bool
    failures: List[List[int]] = Field(default_factory=list)
    passed: bool


def sample_combinations(n: int, size: int, budget: int,
                        rng: np.random.Generator) -> Tuple[List[Tuple[int, ...]], bool]:
    """All size-subsets of range(n) if there are at most budget of them, else a seeded sample"""
    total = math.comb(n, size)
    if total <= budget:
        return list(combinations(range(n), size)), False
    chosen = set()
    while len(chosen) < budget:
        chosen.add(tuple(sorted(int(c) for c in rng.choice(n, size=size, replace=False))))
    return sorted(chosen), True


class ArrayCode:
    """The array code for one parameter bundle, with cached parity structures"""

    def __init__(self, params: ArrayCodeParams):
        self.params = params
        self.name = "Rack-aware MDS array code"
        p, m = prime_power(params.q)
        self.field = field_make(p, m, params.seed)
        self.gf = DenseGF(self.field)
        self.xi = self.field.primitive_element().to_int()
        self.gamma = element_of_order(self.field, params.u).to_int()

        ell, s = params.ell, params.s_bar
        self._weights = s ** np.arange(params.n_bar, dtype=np.int64)
        self._digits = (np.arange(ell)[None, :] // self._weights[:, None]) % s

        self._lock = threading.Lock()
        self._shifts: Dict[Tuple[int, int], Tuple[np.ndarray, np.ndarray]] = {}
        self._parity: Optional[np.ndarray] = None
        self._parity_map: Optional[np.ndarray] = None
        self._cm: Dict[Tuple[int, int], np.ndarray] = {}

        logger.debug("array code ready: %s over %s", params.describe(), self.field)

    # -- digit helpers -------------------------------------------------------

    def index(self, j: int) -> DigitIndex:
        return DigitIndex(j, self.params.s_bar, self.params.n_bar)

    def base_indices(self, host: int) -> np.ndarray:
        """Row indices j with j_host = 0, ascending (ell' of them)"""
        return np.flatnonzero(self._digits[host] == 0)

    def _positions(self, host: int) -> np.ndarray:
        pos = np.full(self.params.ell, -1, dtype=np.int64)
        base = self.base_indices(host)
        pos[base] = np.arange(base.size)
        return pos

    # -- A-matrix action -----------------------------------------------------

    def _zero_hits(self, b, t: int) -> np.ndarray:
        """#{a < t : b + a = 0 mod s_bar}"""
        s = self.params.s_bar
        first = (-np.asarray(b, dtype=np.int64)) % s
        return np.where(t <= first, 0, (t - first - 1) // s + 1)

    def lambda_run(self, i: int, b: int, t: int) -> FieldElement:
        """Lambda_{i,b,t} = prod_{a<t} lambda_{i, b+a}; lambda_{i,0} = xi^i, others 1"""
        if t < 0:
            raise ParameterError("run length must be non-negative")
        exponent = i * int(self._zero_hits(b, t))
        return self.field.from_int(int(self.gf.pow(self.xi, exponent)))

    def shift(self, i: int, t: int) -> Tuple[np.ndarray, np.ndarray]:
        """(src, coef) with (A_i^t x)[j] = coef[j] * x[src[j]]"""
        key = (i, t)
        with self._lock:
            cached = self._shifts.get(key)
        if cached is not None:
            return cached
        s = self.params.s_bar
        digit = self._digits[i]
        src = np.arange(self.params.ell) + ((digit + t) % s - digit) * self._weights[i]
        hits = self._zero_hits(digit, t)
        xi_i = int(self.gf.pow(self.xi, i))
        coef = np.array([int(self.gf.pow(xi_i, int(h))) for h in range(int(hits.max()) + 1)],
                        dtype=np.int64)[hits]
        src.setflags(write=False)
        coef.setflags(write=False)
        with self._lock:
            self._shifts.setdefault(key, (src, coef))
            return self._shifts[key]

    def apply_A(self, i: int, g: int, t: int, x: np.ndarray) -> np.ndarray:
        """A_{i,g}^t x without materialising the ell x ell matrix; x may carry a batch axis"""
        if not 0 <= i < self.params.n_bar or not 0 <= g < self.params.u or t < 0:
            raise ParameterError(f"invalid A power (i={i}, g={g}, t={t})")
        x = np.asarray(x, dtype=np.int64)
        src, coef = self.shift(i, t)
        scale = self.gf.mul(coef, self.gf.pow(self.gamma, g * t))
        if x.ndim == 2:
            scale = scale[:, None]
        return self.gf.mul(scale, x[src])

    # -- parity checks -------------------------------------------------------

    def parity_matrix(self) -> np.ndarray:
        """Dense (r ell) x (n ell) parity-check matrix, node-major columns"""
        with self._lock:
            if self._parity is not None:
                return self._parity
        params = self.params
        ell = params.ell
        rows = np.arange(ell)
        H = np.zeros((params.r * ell, params.n * ell), dtype=np.int64)
        for t in range(params.r):
            for i in range(params.n_bar):
                src, coef = self.shift(i, t)
                for g in range(params.u):
                    node = i * params.u + g
                    H[t * ell + rows, node * ell + src] = self.gf.mul(
                        coef, self.gf.pow(self.gamma, g * t))
        H.setflags(write=False)
        with self._lock:
            if self._parity is None:
                self._parity = H
            return self._parity

    def syndrome(self, cw: ArrayCodeword) -> np.ndarray:
        """r x ell grid; row t is sum_{i,g} A_{i,g}^t C_{iu+g}"""
        params = self.params
        out = np.zeros((params.r, params.ell), dtype=np.int64)
        for t in range(params.r):
            for i in range(params.n_bar):
                for g in range(params.u):
                    out[t] = self.gf.add(out[t], self.apply_A(i, g, t, cw.grid[i * params.u + g]))
        return out

    def is_codeword(self, cw: ArrayCodeword) -> bool:
        return not np.any(self.syndrome(cw))

    def _columns(self, nodes: Sequence[int]) -> np.ndarray:
        ell = self.params.ell
        if not len(nodes):
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([np.arange(c * ell, (c + 1) * ell) for c in nodes])

    # -- encoding and erasure decoding ---------------------------------------

    def _parity_side(self) -> np.ndarray:
        """Cached map message -> parity symbols: solve H_P x_P = -H_M x_M once"""
        with self._lock:
            if self._parity_map is not None:
                return self._parity_map
        params = self.params
        H = self.parity_matrix()
        message_cols = self._columns(range(params.k))
        parity_cols = self._columns(range(params.k, params.n))
        mapping = self.gf.solve(H[:, parity_cols], self.gf.neg(H[:, message_cols]))
        mapping.setflags(write=False)
        with self._lock:
            if self._parity_map is None:
                self._parity_map = mapping
            return self._parity_map

    def encode_many(self, messages: np.ndarray) -> np.ndarray:
        """messages: (batch, k ell) -> grids (batch, n, ell)"""
        params = self.params
        messages = np.asarray(messages, dtype=np.int64)
        if messages.ndim != 2 or messages.shape[1] != params.k * params.ell:
            raise ParameterError(f"message length must be k*ell = {params.k * params.ell}")
        parity = self.gf.matmul(self._parity_side(), messages.T).T
        grids = np.concatenate((messages, parity), axis=1)
        return grids.reshape(messages.shape[0], params.n, params.ell)

    def encode(self, message: Sequence[int]) -> ArrayCodeword:
        """Message symbols fill columns 0..k-1 column by column; parity fills the rest"""
        grid = self.encode_many(np.asarray(message, dtype=np.int64)[None, :])[0]
        return ArrayCodeword(self.params, grid)

    def random_message(self, rng: np.random.Generator) -> np.ndarray:
        return self.gf.random(rng, self.params.k * self.params.ell)

    def _recover(self, unknown: Sequence[int], known: Sequence[int],
                 values: np.ndarray) -> np.ndarray:
        """Solve H_U x_U = -H_K x_K; values: (|known| ell, batch) -> (|unknown| ell, batch)"""
        H = self.parity_matrix()
        rhs = self.gf.neg(self.gf.matmul(H[:, self._columns(known)], values))
        return self.gf.solve(H[:, self._columns(unknown)], rhs)

    def decode_from_k(self, known: Mapping[int, np.ndarray]) -> ArrayCodeword:
        """Rebuild all n columns from at least k known ones"""
        params = self.params
        nodes = sorted(known)
        if len(nodes) < params.k:
            raise ParameterError(f"need at least k = {params.k} columns, got {len(nodes)}")
        if any(not 0 <= c < params.n for c in nodes):
            raise ParameterError("column index out of range")
        grid = np.zeros((params.n, params.ell), dtype=np.int64)
        for c in nodes:
            column = np.asarray(known[c], dtype=np.int64)
            if column.shape != (params.ell,):
                raise CodewordFormatError(f"column {c} must have {params.ell} symbols")
            grid[c] = column
        unknown = [c for c in range(params.n) if c not in known]
        if unknown:
            values = grid[nodes].reshape(-1, 1)
            grid[unknown] = self._recover(unknown, nodes, values).reshape(len(unknown), params.ell)
        return ArrayCodeword(params, grid)

    # -- aggregate code C_m ----------------------------------------------------

    def cm_etas(self, m: int) -> List[int]:
        """eta with u(eta + s_bar) + m <= r - 1: checks t = u eta + m pair with t + u s_bar"""
        params = self.params
        etas = []
        eta = 0
        while params.u * (eta + params.s_bar) + m <= params.r - 1:
            etas.append(eta)
            eta += 1
        return etas

    def cm_parity_matrix(self, host: int, m: int) -> np.ndarray:
        """Checks of C_m over the non-host racks: rows (eta, j in base set), columns (rack, j)"""
        key = (host, m)
        with self._lock:
            cached = self._cm.get(key)
        if cached is not None:
            return cached
        params = self.params
        base = self.base_indices(host)
        pos = self._positions(host)
        width = params.ell_prime
        others = [i for i in range(params.n_bar) if i != host]
        etas = self.cm_etas(m)
        xi_host_u = int(self.gf.pow(self.xi, host * params.u))
        P = np.zeros((len(etas) * width, len(others) * width), dtype=np.int64)
        rows = np.arange(width)
        for e, eta in enumerate(etas):
            t = params.u * eta + m
            for idx, i in enumerate(others):
                src, coef = self.shift(i, t)
                factor = self.gf.sub(xi_host_u, self.gf.pow(self.xi, i * params.u))
                P[e * width + rows, idx * width + pos[src[base]]] = self.gf.mul(factor, coef[base])
        P.setflags(write=False)
        with self._lock:
            self._cm.setdefault(key, P)
            return self._cm[key]

    def b_block(self, i: int, host: int, power: int) -> np.ndarray:
        """B_i^power: A_i^power restricted to the base index set of the host rack"""
        if i == host:
            raise ParameterError("B blocks are defined for non-host racks only")
        base = self.base_indices(host)
        pos = self._positions(host)
        src, coef = self.shift(i, power)
        B = np.zeros((base.size, base.size), dtype=np.int64)
        B[np.arange(base.size), pos[src[base]]] = coef[base]
        return B


def block_vandermonde_invertible(gf: DenseGF, blocks: Sequence[np.ndarray]) -> bool:
    """Rank test of [M_j^t]_{t, j} for square blocks M_0..M_{n-1}"""
    count = len(blocks)
    if count == 0:
        return True
    size = blocks[0].shape[0]
    rows = []
    powers = [gf.identity(size) for _ in blocks]
    for _ in range(count):
        rows.append(np.hstack(powers))
        powers = [gf.matmul(P, M) for P, M in zip(powers, blocks)]
    return gf.rank(np.vstack(rows)) == count * size


def verify_mds(code: ArrayCode, budget: Optional[int] = None, seed: int = 0,
               codewords: int = 10) -> MdsReport:
    """Erase every r-subset (or a seeded sample within budget) and decode from the rest"""
    params = code.params
    budget = Config.budget(budget, Config.mds_budget())
    rng = np.random.default_rng(seed)
    grids = code.encode_many(np.stack([code.random_message(rng) for _ in range(codewords)]))
    patterns, sampled = sample_combinations(params.n, params.r, budget, rng)

    failures = []
    for erased in patterns:
        known = [c for c in range(params.n) if c not in erased]
        values = grids[:, known, :].reshape(codewords, -1).T
        try:
            recovered = code._recover(list(erased), known, values)
        except (SingularMatrixError, InconsistentSystemError) as exc:
            logger.warning("erasure pattern %s failed: %s", erased, exc)
            failures.append(list(erased))
            continue
        expected = grids[:, list(erased), :].reshape(codewords, -1).T
        if not np.array_equal(recovered, expected):
            failures.append(list(erased))

    report = MdsReport(params=params.describe(), patterns_total=math.comb(params.n, params.r),
                       patterns_checked=len(patterns), codewords=codewords, sampled=sampled,
                       failures=failures, passed=bool(patterns) and not failures)
    logger.info("MDS sweep: %d/%d patterns checked, %d failures%s", report.patterns_checked,
                report.patterns_total, len(failures), " (sampled)" if sampled else "")
    return report


def cm_mds_sweep(code: ArrayCode, host: int, m: int, budget: Optional[int] = None,
                 seed: int = 0) -> CmSweepReport:
    """Every subset of the determining size must fix the remaining C_m columns"""
    params = code.params
    budget = Config.budget(budget, Config.sweep_budget())
    width = params.ell_prime
    others = [i for i in range(params.n_bar) if i != host]
    P = code.cm_parity_matrix(host, m)
    size = len(others) - len(code.cm_etas(m))
    subsets, sampled = sample_combinations(len(others), size, budget,
                                           np.random.default_rng(seed))
    failures = []
    for subset in subsets:
        unknown = [idx for idx in range(len(others)) if idx not in subset]
        cols = np.concatenate([np.arange(idx * width, (idx + 1) * width) for idx in unknown]) \
            if unknown else np.zeros(0, dtype=np.int64)
        if code.gf.rank(P[:, cols]) != cols.size:
            failures.append([others[idx] for idx in subset])
    return CmSweepReport(host=host, m=m, subset_size=size,
                         subsets_total=math.comb(len(others), size),
                         subsets_checked=len(subsets), sampled=sampled,
                         failures=failures, passed=bool(subsets) and not failures)
