"""
Finite Field Core
Exact arithmetic in GF(p) and GF(p^m), subfield traces, dual bases and linear solving.

Elements of GF(p^m) are coefficient vectors over GF(p) in the power basis of a
monic irreducible modulus (little-endian). Subfields GF(p^d), d | m, live inside
the same context and are recognised by the Frobenius membership test x^(p^d) = x.
"""

import threading
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from utils.errors import (FieldArithmeticError, InconsistentSystemError,
                          ParameterError, SingularMatrixError)
from utils.logger import get_logger

logger = get_logger(__name__)

MAX_CHARACTERISTIC = 1 << 31


# ---------------------------------------------------------------------------
# integer helpers
# ---------------------------------------------------------------------------

def is_prime(n: int) -> bool:
    """Deterministic trial division (characteristics and rack primes are small)"""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_factors(n: int, limit: Optional[int] = None) -> Optional[List[int]]:
    """Distinct prime factors by trial division, or None if n has a cofactor beyond limit"""
    factors = []
    d = 2
    while d * d <= n:
        if limit is not None and d > limit:
            return None
        if n % d == 0:
            factors.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        factors.append(n)
    return factors


def prime_power(q: int) -> Optional[Tuple[int, int]]:
    """(p, m) with q = p^m, or None if q is not a prime power"""
    if q < 2:
        return None
    factors = prime_factors(q)
    if len(factors) != 1:
        return None
    p = factors[0]
    m = 0
    while q > 1:
        q //= p
        m += 1
    return p, m


def matmul_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """(a @ b) mod p without int64 overflow; BLAS float64 path while products stay exact"""
    inner = a.shape[-1] if a.ndim else 1
    bound = inner * (p - 1) ** 2
    if bound < 1 << 53:
        out = np.rint(a.astype(np.float64) @ b.astype(np.float64))
        return out.astype(np.int64) % p
    if bound < 1 << 63:
        return (a.astype(np.int64) @ b.astype(np.int64)) % p
    return ((a.astype(object) @ b.astype(object)) % p).astype(np.int64)


# ---------------------------------------------------------------------------
# polynomials over GF(p): little-endian int64 arrays
# ---------------------------------------------------------------------------

def _degree(a: np.ndarray) -> int:
    nz = np.nonzero(a)[0]
    return int(nz[-1]) if nz.size else -1


def _trim(a: np.ndarray) -> np.ndarray:
    return a[:_degree(a) + 1]


def _poly_divmod(a: np.ndarray, b: np.ndarray, p: int) -> Tuple[np.ndarray, np.ndarray]:
    a = _trim(np.asarray(a, dtype=np.int64) % p).copy()
    b = _trim(np.asarray(b, dtype=np.int64) % p)
    db = b.size - 1
    if db < 0:
        raise FieldArithmeticError("polynomial division by zero")
    inv = pow(int(b[db]), p - 2, p)
    quotient = np.zeros(max(a.size - db, 1), dtype=np.int64)
    for i in range(a.size - 1 - db, -1, -1):
        c = int(a[i + db]) * inv % p
        if c:
            quotient[i] = c
            a[i:i + db + 1] = (a[i:i + db + 1] - c * b) % p
    return _trim(quotient), _trim(a[:db])


def _poly_sub(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    size = max(a.size, b.size)
    out = np.zeros(size, dtype=np.int64)
    out[:a.size] += a
    out[:b.size] -= b
    return _trim(out % p)


def _poly_gcd(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    a, b = _trim(a % p), _trim(b % p)
    while b.size:
        a, b = b, _poly_divmod(a, b, p)[1]
    if a.size:
        a = a * pow(int(a[-1]), p - 2, p) % p
    return a


class _Reducer:
    """Multiplication modulo a fixed monic polynomial via a precomputed reduction matrix"""

    def __init__(self, modulus: np.ndarray, p: int):
        self.p = p
        self.m = modulus.size - 1
        m = self.m
        low = (-modulus[:m]) % p
        rows = np.zeros((max(m - 1, 0), m), dtype=np.int64)
        current = low.copy()
        for i in range(m - 1):
            rows[i] = current
            top = current[m - 1]
            shifted = np.concatenate(([0], current[:-1]))
            current = (shifted + top * low) % p
        self.reduction = rows

    def reduce(self, prod: np.ndarray) -> np.ndarray:
        m = self.m
        prod = prod % self.p
        out = np.zeros(m, dtype=np.int64)
        head = prod[:m]
        out[:head.size] = head
        high = prod[m:]
        if high.size:
            out = out + matmul_mod(high, self.reduction[:high.size], self.p)
        return out % self.p

    def mulmod(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.reduce(np.convolve(a, b))

    def powmod(self, a: np.ndarray, e: int) -> np.ndarray:
        result = np.zeros(self.m, dtype=np.int64)
        result[0] = 1
        base = a
        while e:
            if e & 1:
                result = self.mulmod(result, base)
            e >>= 1
            if e:
                base = self.mulmod(base, base)
        return result


def _x_vector(m: int) -> np.ndarray:
    x = np.zeros(m, dtype=np.int64)
    if m > 1:
        x[1] = 1
    return x


def _ben_or_irreducible(modulus: np.ndarray, p: int) -> bool:
    """Ben-Or test: no factor of degree <= m/2 (rejects random candidates early)"""
    m = modulus.size - 1
    if m == 1:
        return True
    reducer = _Reducer(modulus, p)
    x = _x_vector(m)
    h = x
    for _ in range(m // 2):
        h = reducer.powmod(h, p)
        if _poly_gcd(modulus, _poly_sub(h, x, p), p).size > 1:
            return False
    return True


# ---------------------------------------------------------------------------
# field context and elements
# ---------------------------------------------------------------------------

class FieldCtx:
    """GF(p^m) with a fixed monic irreducible modulus"""

    def __init__(self, p: int, m: int, modulus: Sequence[int]):
        if not is_prime(p) or p >= MAX_CHARACTERISTIC:
            raise ParameterError(f"characteristic must be a prime below 2^31, got {p}")
        if m < 1:
            raise ParameterError(f"extension degree must be >= 1, got {m}")
        coeffs = [int(c) % p for c in modulus]
        if len(coeffs) != m + 1 or coeffs[-1] != 1:
            raise ParameterError("modulus must be monic of degree m")
        if m > 1 and m * (p - 1) ** 2 >= 1 << 62:
            raise ParameterError(f"GF({p}^{m}) is too large for int64 convolution")

        self.p = p
        self.m = m
        self.q = p ** m
        self.modulus = tuple(coeffs)
        self._f = np.array(coeffs, dtype=np.int64)
        self._reducer = _Reducer(self._f, p)

        self._lock = threading.Lock()
        self._frobenius: Dict[int, np.ndarray] = {}
        self._traces: Dict[int, np.ndarray] = {}
        self._primitive: Optional["FieldElement"] = None

        if not self.is_irreducible():
            raise ParameterError(f"modulus {self.modulus} is reducible over GF({p})")

    # -- construction helpers ------------------------------------------------

    def element(self, coeffs: Iterable[int]) -> "FieldElement":
        arr = np.zeros(self.m, dtype=np.int64)
        values = np.asarray(list(coeffs), dtype=np.int64) % self.p
        if values.size > self.m:
            raise ParameterError(f"too many coefficients for GF({self.p}^{self.m})")
        arr[:values.size] = values
        return FieldElement(self, arr)

    def zero(self) -> "FieldElement":
        return FieldElement(self, np.zeros(self.m, dtype=np.int64))

    def one(self) -> "FieldElement":
        return self.scalar(1)

    def scalar(self, c: int) -> "FieldElement":
        arr = np.zeros(self.m, dtype=np.int64)
        arr[0] = c % self.p
        return FieldElement(self, arr)

    def gen(self) -> "FieldElement":
        """Class of X: generates GF(p^m) over GF(p)"""
        if self.m == 1:
            return self.one()
        return FieldElement(self, _x_vector(self.m))

    def from_int(self, value: int) -> "FieldElement":
        if not 0 <= value < self.q:
            raise ParameterError(f"{value} out of range for a field of size {self.q}")
        digits = np.zeros(self.m, dtype=np.int64)
        for i in range(self.m):
            value, digits[i] = divmod(value, self.p)
        return FieldElement(self, digits)

    def random(self, rng: np.random.Generator) -> "FieldElement":
        return FieldElement(self, rng.integers(0, self.p, size=self.m, dtype=np.int64))

    def describe(self) -> dict:
        return {"p": self.p, "m": self.m, "modulus": list(self.modulus)}

    @classmethod
    def from_descriptor(cls, descriptor: dict) -> "FieldCtx":
        return cls(int(descriptor["p"]), int(descriptor["m"]),
                   [int(c) for c in descriptor["modulus"]])

    def __eq__(self, other):
        return isinstance(other, FieldCtx) and (self.p, self.modulus) == (other.p, other.modulus)

    def __hash__(self):
        return hash((self.p, self.modulus))

    def __repr__(self):
        return f"FieldCtx(GF({self.p}^{self.m}))"

    # -- raw coefficient arithmetic -------------------------------------------

    def _mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.m == 1:
            return (a * b) % self.p
        return self._reducer.mulmod(a, b)

    def _inv(self, a: np.ndarray) -> np.ndarray:
        if not a.any():
            raise FieldArithmeticError("inverse of zero")
        if self.m == 1:
            return np.array([pow(int(a[0]), self.p - 2, self.p)], dtype=np.int64)
        r0, r1 = self._f.copy(), _trim(a)
        s0, s1 = np.zeros(1, dtype=np.int64), np.ones(1, dtype=np.int64)
        while r1.size > 1:
            quotient, rem = _poly_divmod(r0, r1, self.p)
            r0, r1 = r1, rem
            s0, s1 = s1, _poly_sub(s0, np.convolve(quotient, s1) % self.p, self.p)
        scale = pow(int(r1[0]), self.p - 2, self.p)
        out = np.zeros(self.m, dtype=np.int64)
        s1 = _poly_divmod(s1, self._f, self.p)[1] if s1.size > self.m else s1
        out[:s1.size] = s1 * scale % self.p
        return out

    # -- irreducibility, Frobenius and traces ---------------------------------

    def is_irreducible(self) -> bool:
        """Rabin: x^(p^m) = x and gcd(x^(p^(m/t)) - x, f) = 1 for every prime t | m"""
        m, p = self.m, self.p
        if m == 1:
            return True
        checkpoints = {m // t for t in prime_factors(m)}
        x = _x_vector(m)
        h = x
        for i in range(1, m + 1):
            h = self._reducer.powmod(h, p)
            if i in checkpoints and i != m:
                if _poly_gcd(self._f, _poly_sub(h, x, p), p).size > 1:
                    return False
        return bool(np.array_equal(h, x))

    def frobenius_matrix(self, d: int = 1) -> np.ndarray:
        """GF(p)-linear matrix of x -> x^(p^d), acting on row coefficient vectors"""
        with self._lock:
            cached = self._frobenius.get(d)
        if cached is not None:
            return cached
        if d == 0:
            matrix = np.eye(self.m, dtype=np.int64)
        elif d == 1:
            matrix = np.zeros((self.m, self.m), dtype=np.int64)
            y = self._reducer.powmod(self.gen().coeffs, self.p) if self.m > 1 \
                else np.ones(1, dtype=np.int64)
            row = np.zeros(self.m, dtype=np.int64)
            row[0] = 1
            for i in range(self.m):
                matrix[i] = row
                row = self._mul(row, y)
        else:
            base = self.frobenius_matrix(1)
            matrix = np.eye(self.m, dtype=np.int64)
            e = d % self.m if self.m > 1 else 0
            while e:
                if e & 1:
                    matrix = matmul_mod(matrix, base, self.p)
                e >>= 1
                if e:
                    base = matmul_mod(base, base, self.p)
        matrix.setflags(write=False)
        with self._lock:
            self._frobenius.setdefault(d, matrix)
            return self._frobenius[d]

    def trace_matrix(self, d: int) -> np.ndarray:
        """Matrix of tr_{GF(p^m)/GF(p^d)} = sum of x^(p^(d j)), j < m/d"""
        self._check_divisor(d)
        with self._lock:
            cached = self._traces.get(d)
        if cached is not None:
            return cached
        step = self.frobenius_matrix(d)
        power = np.eye(self.m, dtype=np.int64)
        total = np.zeros((self.m, self.m), dtype=np.int64)
        for _ in range(self.m // d):
            total = (total + power) % self.p
            power = matmul_mod(power, step, self.p)
        total.setflags(write=False)
        with self._lock:
            self._traces.setdefault(d, total)
            return self._traces[d]

    def _check_divisor(self, d: int):
        if d < 1 or self.m % d:
            raise ParameterError(f"subfield degree {d} does not divide {self.m}")

    def in_subfield(self, x: "FieldElement", d: int) -> bool:
        self._check_divisor(d)
        image = matmul_mod(x.coeffs, self.frobenius_matrix(d), self.p)
        return bool(np.array_equal(image, x.coeffs))

    def frobenius(self, x: "FieldElement", d: int = 1) -> "FieldElement":
        return FieldElement(self, matmul_mod(x.coeffs, self.frobenius_matrix(d), self.p))

    def primitive_element(self) -> "FieldElement":
        """Smallest (by integer encoding) generator of the multiplicative group"""
        with self._lock:
            if self._primitive is not None:
                return self._primitive
        factors = prime_factors(self.q - 1, limit=1 << 20)
        if factors is None:
            raise ParameterError(f"cannot factor q-1 for GF({self.p}^{self.m})")
        one = self.one()
        for value in range(2 if self.q > 2 else 1, self.q):
            beta = self.from_int(value)
            if all(beta ** ((self.q - 1) // r) != one for r in factors):
                with self._lock:
                    self._primitive = beta
                return beta
        raise ParameterError("no primitive element found")

    def minimal_polynomial(self, x: "FieldElement") -> List[int]:
        """Monic minimal polynomial of x over GF(p), found from the first dependent power"""
        from tools.gf_dense import DenseGF
        prime = field_make(self.p, 1)
        kernel = DenseGF(prime)
        powers = [self.one().coeffs]
        while True:
            nxt = self._mul(powers[-1], x.coeffs)
            basis = np.array(powers, dtype=np.int64).T
            try:
                sol = kernel.solve(basis, nxt.reshape(-1, 1))
            except (SingularMatrixError, InconsistentSystemError):
                powers.append(nxt)
                continue
            return [int(-c) % self.p for c in sol[:, 0]] + [1]


class FieldElement:
    """Immutable element of a FieldCtx"""

    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx: FieldCtx, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=np.int64)
        coeffs.setflags(write=False)
        self.ctx = ctx
        self.coeffs = coeffs

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.ctx is not self.ctx and other.ctx != self.ctx:
                raise ParameterError("operands belong to different fields")
            return other
        if isinstance(other, (int, np.integer)):
            return self.ctx.scalar(int(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.ctx, (self.coeffs + other.coeffs) % self.ctx.p)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.ctx, (self.coeffs - other.coeffs) % self.ctx.p)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __neg__(self):
        return FieldElement(self.ctx, (-self.coeffs) % self.ctx.p)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.ctx, self.ctx._mul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        return FieldElement(self.ctx, self.ctx._inv(self.coeffs))

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __pow__(self, exponent: int):
        exponent = int(exponent)
        if self.is_zero():
            if exponent < 0:
                raise FieldArithmeticError("zero raised to a negative power")
            return self.ctx.one() if exponent == 0 else self
        base = self
        if exponent < 0:
            base, exponent = self.inverse(), -exponent
        exponent %= self.ctx.q - 1
        return FieldElement(self.ctx, self.ctx._reducer.powmod(base.coeffs, exponent)
                            if self.ctx.m > 1
                            else np.array([pow(int(base.coeffs[0]), exponent, self.ctx.p)]))

    def is_zero(self) -> bool:
        return not self.coeffs.any()

    def to_int(self) -> int:
        value = 0
        for c in reversed(self.coeffs.tolist()):
            value = value * self.ctx.p + c
        return value

    def to_list(self) -> List[int]:
        return [int(c) for c in self.coeffs]

    def __eq__(self, other):
        if isinstance(other, (int, np.integer)):
            other = self.ctx.scalar(int(other))
        if not isinstance(other, FieldElement):
            return NotImplemented
        same_field = self.ctx is other.ctx or self.ctx == other.ctx
        return same_field and bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash((self.ctx.p, self.coeffs.tobytes()))

    def __repr__(self):
        if self.ctx.m == 1:
            return f"GF({self.ctx.p})({int(self.coeffs[0])})"
        return f"GF({self.ctx.p}^{self.ctx.m})({self.to_int()})"


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def field_make(p: int, m: int, seed: int = 0) -> FieldCtx:
    """Deterministic GF(p^m): seeded search over random monic candidates"""
    if not is_prime(p):
        raise ParameterError(f"{p} is not prime")
    if m < 1:
        raise ParameterError(f"extension degree must be >= 1, got {m}")
    if m == 1:
        return FieldCtx(p, 1, [0, 1])

    rng = np.random.default_rng([p, m, seed])
    attempts = 0
    while True:
        attempts += 1
        low = rng.integers(0, p, size=m, dtype=np.int64)
        if low[0] == 0:
            continue
        candidate = np.concatenate((low, [1]))
        if _ben_or_irreducible(candidate, p):
            logger.debug("GF(%d^%d): modulus found after %d candidates", p, m, attempts)
            return FieldCtx(p, m, candidate.tolist())


def arith(a: FieldElement, b: Optional[FieldElement], op: str,
          exponent: Optional[int] = None) -> FieldElement:
    """Named-operation entry point: add, sub, mul, div, pow, inv, neg"""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    if op == "pow":
        return a ** exponent
    if op == "inv":
        return a.inverse()
    if op == "neg":
        return -a
    raise ParameterError(f"unknown field operation {op!r}")


def element_of_order(ctx: FieldCtx, u: int) -> FieldElement:
    """Element of exact multiplicative order u, u | q-1"""
    if u < 1 or (ctx.q - 1) % u:
        raise ParameterError(f"u = {u} does not divide q - 1 = {ctx.q - 1}")
    one = ctx.one()
    if u == 1:
        return one
    try:
        return ctx.primitive_element() ** ((ctx.q - 1) // u)
    except ParameterError:
        pass
    # q - 1 too large to factor: scan, certifying the order through the factors of u
    u_factors = prime_factors(u)
    value = 2
    while True:
        candidate = ctx.from_int(value) ** ((ctx.q - 1) // u)
        if all(candidate ** (u // r) != one for r in u_factors):
            return candidate
        value += 1


def subfield_element_of_degree(ctx: FieldCtx, t: int) -> FieldElement:
    """λ ∈ GF(p^t) lying in no proper subfield of GF(p^t)"""
    ctx._check_divisor(t)
    if t == 1:
        return ctx.scalar(2) if ctx.p > 2 else ctx.one()
    exponent = (ctx.q - 1) // (ctx.p ** t - 1)
    divisors = prime_factors(t)
    value = ctx.p
    while True:
        beta = ctx.from_int(value % ctx.q)
        value += 1
        if beta.is_zero():
            continue
        lam = beta ** exponent
        assert ctx.in_subfield(lam, t), "norm image left the subfield"
        if all(not ctx.in_subfield(lam, t // r) for r in divisors):
            return lam


def trace_to_subfield(ctx: FieldCtx, d: int, x: FieldElement) -> FieldElement:
    """tr_{GF(p^m)/GF(p^d)}(x) through the cached linear map"""
    return FieldElement(ctx, matmul_mod(x.coeffs, ctx.trace_matrix(d), ctx.p))


def trace_naive(ctx: FieldCtx, d: int, x: FieldElement) -> FieldElement:
    """Same trace by explicit Frobenius powers; slow, used as an oracle"""
    ctx._check_divisor(d)
    total = ctx.zero()
    for j in range(ctx.m // d):
        total = total + x ** (ctx.p ** (d * j))
    return total


def trace_form(ctx: FieldCtx) -> np.ndarray:
    """Gram matrix tr_{K/GF(p)}(x^i x^j) of the power basis (Hankel)"""
    tr = ctx.trace_matrix(1)[:, 0]
    values = np.zeros(2 * ctx.m - 1, dtype=np.int64)
    power = ctx.one().coeffs
    x = ctx.gen().coeffs
    for i in range(2 * ctx.m - 1):
        values[i] = int(matmul_mod(power, tr, ctx.p))
        power = ctx._mul(power, x)
    idx = np.add.outer(np.arange(ctx.m), np.arange(ctx.m))
    return values[idx]


def dual_basis(ctx: FieldCtx, d: int, basis: Sequence[FieldElement]) -> List[FieldElement]:
    """{b̄_t} with tr_{K/GF(p^d)}(b_s b̄_t) = δ_st, by inverting the trace Gram matrix"""
    ctx._check_divisor(d)
    size = ctx.m // d
    if len(basis) != size:
        raise ParameterError(f"basis over GF(p^{d}) needs {size} elements, got {len(basis)}")

    if d == 1:
        from tools.gf_dense import DenseGF
        kernel = DenseGF(field_make(ctx.p, 1))
        coords = np.array([b.coeffs for b in basis], dtype=np.int64)
        gram = matmul_mod(matmul_mod(coords, trace_form(ctx), ctx.p), coords.T, ctx.p)
        try:
            inv = kernel.inverse(gram)
        except SingularMatrixError as exc:
            raise SingularMatrixError("basis is linearly dependent", exc.rank)
        dual = matmul_mod(inv.T, coords, ctx.p)
        return [FieldElement(ctx, row) for row in dual]

    gram = [[trace_to_subfield(ctx, d, bs * bt) for bt in basis] for bs in basis]
    try:
        inv = matrix_inverse(gram)
    except SingularMatrixError as exc:
        raise SingularMatrixError("basis is linearly dependent", exc.rank)
    dual = []
    for t in range(size):
        acc = ctx.zero()
        for r in range(size):
            acc = acc + inv[r][t] * basis[r]
        dual.append(acc)
    return dual


# ---------------------------------------------------------------------------
# linear algebra over FieldElements
# ---------------------------------------------------------------------------

Matrix = List[List[FieldElement]]


def _row_reduce(rows: Matrix, ncols: int) -> Tuple[Matrix, List[int]]:
    """Gauss-Jordan on the first ncols columns; returns reduced rows and pivot columns"""
    rows = [list(r) for r in rows]
    pivots: List[int] = []
    rank = 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(rows)) if not rows[i][col].is_zero()), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = rows[rank][col].inverse()
        rows[rank] = [v * inv for v in rows[rank]]
        for i in range(len(rows)):
            if i != rank and not rows[i][col].is_zero():
                factor = rows[i][col]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[rank])]
        pivots.append(col)
        rank += 1
    return rows, pivots


def matrix_rank(A: Matrix) -> int:
    if not A:
        return 0
    return len(_row_reduce(A, len(A[0]))[1])


def solve_linear(A: Matrix, y: Sequence[FieldElement]) -> List[FieldElement]:
    """Exact solution of A x = y; A square nonsingular or rectangular and consistent"""
    if not A:
        return []
    ncols = len(A[0])
    if len(A) != len(y):
        raise ParameterError("row count of A and length of y differ")
    ctx = y[0].ctx if y else A[0][0].ctx
    if ctx.m == 1:
        from tools.gf_dense import DenseGF
        kernel = DenseGF(ctx)
        a = np.array([[v.to_int() for v in row] for row in A], dtype=np.int64)
        b = np.array([[v.to_int()] for v in y], dtype=np.int64)
        return [ctx.scalar(int(v)) for v in kernel.solve(a, b)[:, 0]]

    augmented = [list(row) + [rhs] for row, rhs in zip(A, y)]
    reduced, pivots = _row_reduce(augmented, ncols)
    if len(pivots) < ncols:
        raise SingularMatrixError("system has no unique solution", len(pivots))
    for row in reduced[ncols:]:
        if not row[ncols].is_zero():
            raise InconsistentSystemError("overdetermined system is inconsistent")
    return [reduced[i][ncols] for i in range(ncols)]


def matrix_inverse(A: Matrix) -> Matrix:
    n = len(A)
    if any(len(row) != n for row in A):
        raise ParameterError("matrix is not square")
    ctx = A[0][0].ctx
    augmented = [list(row) + [ctx.one() if i == j else ctx.zero() for j in range(n)]
                 for i, row in enumerate(A)]
    reduced, pivots = _row_reduce(augmented, n)
    if len(pivots) < n:
        raise SingularMatrixError("matrix is singular", len(pivots))
    return [row[n:] for row in reduced]


def element_to_json(x: FieldElement) -> List[int]:
    return x.to_list()


def element_from_json(ctx: FieldCtx, data: Union[List[int], int]) -> FieldElement:
    if isinstance(data, int):
        return ctx.from_int(data)
    return ctx.element(data)
