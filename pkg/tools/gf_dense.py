"""
Dense Field Kernel
Vectorised numpy arithmetic and Gauss-Jordan elimination over small fields.

Elements are integer encodings (FieldElement.to_int), so whole symbol grids
are plain int64 arrays. Prime fields use modular arithmetic directly;
extension fields use exp/log tables built from the smallest primitive element.
"""

from typing import List, Tuple

import numpy as np

from tools.gf_core import FieldCtx, FieldElement, matmul_mod
from utils.errors import (FieldArithmeticError, InconsistentSystemError,
                          ParameterError, SingularMatrixError)


class DenseGF:
    """Array arithmetic over a FieldCtx small enough for lookup tables"""

    MAX_TABLE_SIZE = 1 << 16

    def __init__(self, ctx: FieldCtx):
        self.ctx = ctx
        self.p = ctx.p
        self.m = ctx.m
        self.q = ctx.q
        self.name = f"GF({self.q}) kernel"

        if self.m > 1:
            if self.q > self.MAX_TABLE_SIZE:
                raise ParameterError(
                    f"GF({self.p}^{self.m}) exceeds the {self.MAX_TABLE_SIZE}-element table limit")
            self._build_tables()

    def _build_tables(self):
        q = self.q
        xi = self.ctx.primitive_element()
        self._exp = np.zeros(2 * (q - 1), dtype=np.int64)
        self._log = np.full(q, -1, dtype=np.int64)
        x = self.ctx.one()
        for i in range(q - 1):
            value = x.to_int()
            self._exp[i] = value
            self._log[value] = i
            x = x * xi
        self._exp[q - 1:] = self._exp[:q - 1]
        self._weights = self.p ** np.arange(self.m, dtype=np.int64)

    # -- conversions ---------------------------------------------------------

    def element(self, value: int) -> FieldElement:
        return self.ctx.from_int(int(value))

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.integers(0, self.q, size=shape, dtype=np.int64)

    def identity(self, size: int) -> np.ndarray:
        return np.eye(size, dtype=np.int64)

    # -- elementwise arithmetic ----------------------------------------------

    def _digits(self, a: np.ndarray) -> np.ndarray:
        return (a[..., None] // self._weights) % self.p

    def _undigits(self, d: np.ndarray) -> np.ndarray:
        return (d * self._weights).sum(axis=-1)

    def add(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.m == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        return self._undigits((self._digits(a) + self._digits(b)) % self.p)

    def neg(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if self.m == 1:
            return (-a) % self.p
        if self.p == 2:
            return a.copy()
        return self._undigits((-self._digits(a)) % self.p)

    def sub(self, a, b) -> np.ndarray:
        return self.add(a, self.neg(b))

    def mul(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.m == 1:
            return (a * b) % self.p
        zero = (a == 0) | (b == 0)
        logs = self._log[np.where(a == 0, 1, a)] + self._log[np.where(b == 0, 1, b)]
        return np.where(zero, 0, self._exp[logs])

    def inv(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise FieldArithmeticError("inverse of zero")
        if self.m == 1:
            return self._pow_prime(a, self.p - 2)
        return self._exp[(self.q - 1 - self._log[a]) % (self.q - 1)]

    def div(self, a, b) -> np.ndarray:
        return self.mul(a, self.inv(b))

    def pow(self, a, e: int) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        e = int(e)
        if e < 0:
            a, e = self.inv(a), -e
        if self.m == 1:
            return self._pow_prime(a, e)
        reduced = e % (self.q - 1)
        logs = self._log[np.where(a == 0, 1, a)]
        return np.where(a == 0, int(e == 0), self._exp[(logs * reduced) % (self.q - 1)])

    def _pow_prime(self, a: np.ndarray, e: int) -> np.ndarray:
        result = np.ones_like(a)
        base = a % self.p
        while e:
            if e & 1:
                result = (result * base) % self.p
            e >>= 1
            if e:
                base = (base * base) % self.p
        return result

    # -- matrices ------------------------------------------------------------

    def matmul(self, A, B) -> np.ndarray:
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        if self.m == 1:
            return matmul_mod(A, B, self.p)
        vector = B.ndim == 1
        if vector:
            B = B[:, None]
        out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
        for k in range(A.shape[1]):
            out = self.add(out, self.mul(A[:, k:k + 1], B[k:k + 1, :]))
        return out[:, 0] if vector else out

    def _eliminate(self, M: np.ndarray, ncols: int) -> Tuple[np.ndarray, int]:
        """Gauss-Jordan on the leading ncols columns; returns (reduced matrix, rank)"""
        M = np.array(M, dtype=np.int64, copy=True)
        rows = M.shape[0]
        rank = 0
        for col in range(ncols):
            if rank == rows:
                break
            nz = np.flatnonzero(M[rank:, col])
            if nz.size == 0:
                continue
            pivot = rank + int(nz[0])
            if pivot != rank:
                M[[rank, pivot]] = M[[pivot, rank]]
            M[rank, col:] = self.mul(M[rank, col:], self.inv(M[rank, col]))
            others = np.flatnonzero(M[:, col])
            others = others[others != rank]
            if others.size:
                factors = M[others, col][:, None]
                M[np.ix_(others, np.arange(col, M.shape[1]))] = self.sub(
                    M[others, col:], self.mul(factors, M[rank, col:][None, :]))
            rank += 1
        return M, rank

    def rank(self, A) -> int:
        A = np.asarray(A, dtype=np.int64)
        if A.size == 0:
            return 0
        return self._eliminate(A, A.shape[1])[1]

    def pivots(self, A) -> List[int]:
        """Pivot columns of the reduced row echelon form of A"""
        A = np.asarray(A, dtype=np.int64)
        reduced, rank = self._eliminate(A, A.shape[1])
        return [int(np.flatnonzero(reduced[r])[0]) for r in range(rank)]

    def solve(self, A, B) -> np.ndarray:
        """X with A X = B; A square nonsingular, or tall with full column rank and consistent"""
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        vector = B.ndim == 1
        if vector:
            B = B[:, None]
        if A.shape[0] != B.shape[0]:
            raise ParameterError(f"row mismatch: A has {A.shape[0]} rows, B has {B.shape[0]}")
        ncols = A.shape[1]
        reduced, rank = self._eliminate(np.hstack((A, B)), ncols)
        if rank < ncols:
            raise SingularMatrixError("system has no unique solution", rank)
        if np.any(reduced[rank:, ncols:]):
            raise InconsistentSystemError("overdetermined system is inconsistent")
        solution = reduced[:ncols, ncols:]
        return solution[:, 0] if vector else solution

    def inverse(self, A) -> np.ndarray:
        A = np.asarray(A, dtype=np.int64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ParameterError("matrix is not square")
        return self.solve(A, self.identity(A.shape[0]))
