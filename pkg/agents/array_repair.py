"""
Array Repair Agent
Error-resilient multi-node repair for the rack-aware MDS array code

Pipeline per m: helper racks send sum_g gamma^{gm} C_{iu+g} restricted to the
base rows (j_host = 0); the aggregate code C_m is completed by
errors-and-erasures decoding; the host aggregates Delta_m over all ell rows
follow from the parity checks t = wu + m; finally the failed columns are
unlocked from Delta_0..Delta_{h-1} by a Vandermonde solve in gamma^g.
"""

from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from agents.models import HelperPayload, RepairRequest, RepairTranscript
from tools.array_code import ArrayCode, ArrayCodeword
from tools.erasure_decoder import decode_errors_and_erasures
from utils.errors import InconsistentSystemError, ParameterError
from utils.logger import get_logger

logger = get_logger(__name__)


class ArrayRepairAgent:
    """Runs repairs of ArrayCode codewords and records their transcripts"""

    def __init__(self, code: ArrayCode):
        self.code = code
        self.params = code.params
        self.gf = code.gf
        self.name = "Array Repair Engine"

    # -- scheme bookkeeping --------------------------------------------------

    def scheme_for(self, h: int) -> str:
        params = self.params
        if not 1 <= h <= params.u:
            raise ParameterError(f"h = {h} outside [1, u = {params.u}]")
        return "base" if h <= params.u - params.v else "extended"

    def helpers_needed(self, h: int) -> int:
        return self.params.d_bar + (self.scheme_for(h) == "extended")

    def validate(self, request: RepairRequest) -> str:
        params = self.params
        if request.host >= params.n_bar or any(i >= params.n_bar for i in request.helpers):
            raise ParameterError(f"rack index outside [0, {params.n_bar})")
        if any(g >= params.u for g in request.failed):
            raise ParameterError(f"failed position outside [0, {params.u})")
        scheme = self.scheme_for(request.h)
        if scheme == "extended" and params.d_bar + 1 > params.n_bar - 1:
            raise ParameterError(
                f"extended repair needs d_bar + 1 <= n_bar - 1 helper racks, "
                f"got d_bar + 1 = {params.d_bar + 1} > {params.n_bar - 1}")
        needed = self.helpers_needed(request.h)
        if len(request.helpers) != needed:
            raise ParameterError(f"{scheme} repair of h = {request.h} needs {needed} helper "
                                 f"racks, got {len(request.helpers)}")
        return scheme

    def helpers_for_m(self, request: RepairRequest, m: int) -> List[int]:
        """All helpers, except that the extended scheme uses the first d_bar for m < u - v"""
        if m < self.params.u - self.params.v:
            return request.helpers[:self.params.d_bar]
        return list(request.helpers)

    # -- pipeline steps ------------------------------------------------------

    def helper_extract(self, rack_columns: np.ndarray, host: int, m: int) -> np.ndarray:
        """sum_g gamma^{gm} c_{iu+g, j} over the base rows j (j_host = 0), ascending j"""
        base = self.code.base_indices(host)
        out = np.zeros(base.size, dtype=np.int64)
        for g in range(self.params.u):
            weight = self.gf.pow(self.code.gamma, g * m)
            out = self.gf.add(out, self.gf.mul(weight, rack_columns[g, base]))
        return out

    def _complete(self, host: int, m: int):
        """Solver for C_m: P_U x_U = -P_K x_K over the non-host racks"""
        params = self.params
        width = params.ell_prime
        others = [i for i in range(params.n_bar) if i != host]
        slot = {rack: idx for idx, rack in enumerate(others)}
        P = self.code.cm_parity_matrix(host, m)

        def cols(racks: Sequence[int]) -> np.ndarray:
            if not racks:
                return np.zeros(0, dtype=np.int64)
            return np.concatenate([np.arange(slot[i] * width, (slot[i] + 1) * width)
                                   for i in racks])

        def complete(unknown: List[int], known: Dict[int, np.ndarray]) -> Dict[int, np.ndarray]:
            racks = sorted(known)
            if racks:
                values = np.concatenate([known[i] for i in racks])
                rhs = self.gf.neg(self.gf.matmul(P[:, cols(racks)], values))
            else:
                rhs = np.zeros(P.shape[0], dtype=np.int64)
            if not unknown:
                if np.any(rhs):
                    raise InconsistentSystemError("received columns violate the C_m checks")
                return {}
            solution = self.gf.solve(P[:, cols(unknown)], rhs)
            return {i: solution[idx * width:(idx + 1) * width] for idx, i in enumerate(unknown)}

        return others, complete

    def cm_reconstruct(self, payloads: Mapping[int, np.ndarray], host: int, m: int,
                       extended: bool = False) -> Tuple[Dict[int, np.ndarray], Set[int]]:
        """All n_bar - 1 columns of C_m from the helper columns, up to e_bar of them wrong"""
        params = self.params
        expected = params.d_bar + (1 if extended else 0)
        if len(payloads) != expected:
            raise ParameterError(f"C_m completion needs {expected} helper columns, "
                                 f"got {len(payloads)}")
        if not extended and m >= params.u - params.v:
            raise ParameterError(f"m = {m} needs the extended scheme (m >= u - v)")
        others, complete = self._complete(host, m)
        outcome = decode_errors_and_erasures(others, payloads, params.e_bar, complete,
                                             lambda a, b: bool(np.array_equal(a, b)))
        return outcome.columns, outcome.detected

    def host_aggregates(self, cm: Mapping[int, np.ndarray], host: int, m: int) -> np.ndarray:
        """Delta_m[j] = sum_g gamma^{gm} c_{host u + g, j} for every j < ell"""
        params = self.params
        code = self.code
        base = code.base_indices(host)
        pos = code._positions(host)
        host_weight = code._weights[host]
        delta = np.zeros(params.ell, dtype=np.int64)
        for w in range(params.s_bar):
            t = w * params.u + m
            acc = np.zeros(base.size, dtype=np.int64)
            for i in range(params.n_bar):
                if i == host:
                    continue
                src, coef = code.shift(i, t)
                acc = self.gf.add(acc, self.gf.mul(coef[base], cm[i][pos[src[base]]]))
            host_lambda = code.lambda_run(host, 0, t).to_int()
            target = base + (t % params.s_bar) * host_weight
            delta[target] = self.gf.neg(self.gf.div(acc, host_lambda))
        return delta

    def unlock_failed(self, deltas: Sequence[np.ndarray], survivors: Mapping[int, np.ndarray],
                      failed: Sequence[int]) -> Dict[int, np.ndarray]:
        """Solve the h x h Vandermonde system in gamma^g row by row"""
        h = len(failed)
        if len(deltas) < h:
            raise ParameterError(f"need {h} aggregates, got {len(deltas)}")
        gamma = self.code.gamma
        V = np.array([[int(self.gf.pow(gamma, g * m)) for g in failed] for m in range(h)],
                     dtype=np.int64)
        rhs = np.zeros((h, self.params.ell), dtype=np.int64)
        for m in range(h):
            row = np.asarray(deltas[m], dtype=np.int64)
            for g, column in survivors.items():
                row = self.gf.sub(row, self.gf.mul(self.gf.pow(gamma, g * m), column))
            rhs[m] = row
        solution = self.gf.solve(V, rhs)
        return {g: solution[idx] for idx, g in enumerate(failed)}

    # -- orchestration -------------------------------------------------------

    def collect_payloads(self, codeword: ArrayCodeword, request: RepairRequest,
                         rng: Optional[np.random.Generator] = None) -> List[HelperPayload]:
        """Wire traffic ordered by (rack, m); corrupted racks are replaced in transit"""
        params = self.params
        rng = rng if rng is not None else np.random.default_rng(0)
        wire = []
        for rack in request.helpers:
            for m in range(request.h):
                if rack not in self.helpers_for_m(request, m):
                    continue
                symbols = self.helper_extract(codeword.rack(rack), request.host, m)
                corrupted = rack in request.corrupted
                if corrupted:
                    symbols = self.gf.random(rng, symbols.size)
                wire.append(HelperPayload(rack=rack, m=m, symbols=symbols.tolist(),
                                          cost=params.ell_prime, corrupted=corrupted))
        return wire

    def repair(self, codeword: ArrayCodeword, request: RepairRequest,
               rng: Optional[np.random.Generator] = None
               ) -> Tuple[Dict[int, np.ndarray], RepairTranscript]:
        """Recover the failed host columns; returns {node: column} and the transcript"""
        params = self.params
        scheme = self.validate(request)
        u, host = params.u, request.host
        wire = self.collect_payloads(codeword, request, rng)

        deltas = []
        downloads = []
        detected: Set[int] = set()
        for m in range(request.h):
            payloads = {p.rack: np.asarray(p.symbols, dtype=np.int64) for p in wire if p.m == m}
            downloads.append(sum(p.cost for p in wire if p.m == m))
            extended = len(payloads) > params.d_bar
            cm, found = self.cm_reconstruct(payloads, host, m, extended=extended)
            detected |= found
            deltas.append(self.host_aggregates(cm, host, m))

        survivors = {g: codeword.grid[host * u + g] for g in range(u) if g not in request.failed}
        columns = self.unlock_failed(deltas, survivors, request.failed)
        recovered = {host * u + g: column for g, column in columns.items()}

        racks_read = {p.rack for p in wire}
        transcript = RepairTranscript(
            code="array", scheme=scheme, host=host, failed=request.failed,
            helpers=request.helpers, corrupted_injected=request.corrupted,
            corrupted_detected=sorted(detected), downloaded_symbols=sum(downloads),
            downloads_per_m=downloads, accessed_symbols=len(racks_read) * u * params.ell_prime,
            accessed_per_node=params.ell_prime, local_reads=len(survivors) * params.ell,
            recovered=sorted(recovered))
        logger.info("array repair %s: downloaded %d", request.describe(),
                    transcript.downloaded_symbols)
        return recovered, transcript
