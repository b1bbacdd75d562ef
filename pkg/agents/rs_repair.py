"""
RS Repair Agent
Trace repair of the rack-aware Reed-Solomon code with corrupted helper racks.

For t = uw + m the dual checks read sum_i lambda_i^(uw+m) Z_{i,m} = 0 with
Z_{i,m} = sum_g gamma^(gm) v_{i,g} C_{iu+g}. Taking tr_{K/F_host} against the
repair space e_0..e_{p-1} turns every non-host term into lambda_i^(uw+m) times a
helper trace, so each helper rack sends p_host traces per m (ell / s_bar base
symbols). The host side is fixed by its traces against e_j lambda_host^(uw),
w < s_bar, which form a basis of K over F_host.
"""

import threading
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from agents.models import HelperPayload, RepairRequest, RepairTranscript
from tools.erasure_decoder import decode_errors_and_erasures
from tools.gf_core import FieldElement, solve_linear
from tools.rs_code import RsCodeword, RsTower
from utils.errors import ParameterError
from utils.logger import get_logger

logger = get_logger(__name__)

Column = List[FieldElement]


class RsRepairAgent:
    """Runs base and extended trace repairs over an RsTower"""

    def __init__(self, tower: RsTower):
        self.tower = tower
        self.params = tower.params
        self.field = tower.field
        self.name = "RS Repair Engine"
        self._lock = threading.Lock()
        self._coefficients: Dict[int, List[List[Column]]] = {}

    # -- scheme bookkeeping --------------------------------------------------

    def scheme_for(self, h: int) -> str:
        params = self.params
        if 1 <= h <= params.u - params.v:
            return "base"
        if params.u - params.v < h <= params.u - 1:
            return "extended"
        raise ParameterError(f"h = {h} outside [1, u - 1 = {params.u - 1}]")

    def validate(self, request: RepairRequest) -> str:
        params = self.params
        if request.host >= params.n_bar or any(i >= params.n_bar for i in request.helpers):
            raise ParameterError(f"rack index outside [0, {params.n_bar})")
        if any(g >= params.u for g in request.failed):
            raise ParameterError(f"failed position outside [0, {params.u})")
        scheme = self.scheme_for(request.h)
        needed = params.d_bar + (scheme == "extended")
        if needed > params.n_bar - 1:
            raise ParameterError(
                f"extended repair needs d_bar + 1 <= n_bar - 1 helper racks, "
                f"got d_bar + 1 = {needed} > {params.n_bar - 1}")
        if len(request.helpers) != needed:
            raise ParameterError(f"{scheme} repair of h = {request.h} needs {needed} helper "
                                 f"racks, got {len(request.helpers)}")
        return scheme

    def helpers_for_m(self, request: RepairRequest, m: int) -> List[int]:
        if m < self.params.u - self.params.v:
            return request.helpers[:self.params.d_bar]
        return list(request.helpers)

    def check_rows(self, m: int) -> List[int]:
        """w with uw + m <= r - 1"""
        params = self.params
        return [w for w in range(params.n_bar + 1) if params.u * w + m <= params.r - 1]

    def _host_coefficients(self, host: int) -> List[List[Column]]:
        """c[w][j][(w', j')] = tr(e_j lambda^(uw) dual_(w', j')) for every checkable w"""
        with self._lock:
            cached = self._coefficients.get(host)
        if cached is not None:
            return cached
        tower = self.tower
        lam_u = tower.lambdas[host] ** self.params.u
        dual = tower.repair_dual(host)
        table = []
        for w in self.check_rows(0):
            shifted = [e * lam_u ** w for e in tower.repair_space(host)]
            table.append([[tower.trace(host, s * b) for b in dual] for s in shifted])
        with self._lock:
            self._coefficients.setdefault(host, table)
            return self._coefficients[host]

    # -- pipeline steps ------------------------------------------------------

    def rs_helper_extract(self, rack_coords: Sequence[FieldElement], rack: int, host: int,
                          m: int) -> Column:
        """sum_g gamma^(gm) tr_host(e_j v_{i,g} C_{iu+g}) for j < p_host"""
        tower = self.tower
        aggregate = self.field.zero()
        for g, coord in enumerate(rack_coords):
            aggregate = aggregate + tower.gamma ** (g * m) * tower.multiplier(rack, g) * coord
        return [tower.trace(host, e * aggregate) for e in tower.repair_space(host)]

    def _complete(self, host: int, m: int):
        tower = self.tower
        params = self.params
        zero = self.field.zero()
        p = params.primes[host]
        host_size = params.s_bar * p
        rows = self.check_rows(m)
        coefficients = self._host_coefficients(host)
        others = [i for i in range(params.n_bar) if i != host]
        weight = {(i, w): tower.lambdas[i] ** (params.u * w + m) for i in others for w in rows}

        def complete(unknown: List[int], known: Dict[int, Column]) -> Dict[int, Column]:
            A, y = [], []
            for w in rows:
                for j in range(p):
                    row = list(coefficients[w][j])
                    for i in unknown:
                        row.extend(weight[i, w] if jj == j else zero for jj in range(p))
                    A.append(row)
                    rhs = zero
                    for i, column in known.items():
                        rhs = rhs - weight[i, w] * column[j]
                    y.append(rhs)
            solution = solve_linear(A, y)
            return {i: solution[host_size + idx * p: host_size + (idx + 1) * p]
                    for idx, i in enumerate(unknown)}

        return others, complete

    def rs_cm_reconstruct(self, payloads: Mapping[int, Column], host: int, m: int,
                          extended: bool = False) -> Tuple[Dict[int, Column], Set[int]]:
        """Trace columns of every non-host rack, tolerating e_bar wrong helper columns"""
        params = self.params
        expected = params.d_bar + (1 if extended else 0)
        if len(payloads) != expected:
            raise ParameterError(f"C_m completion needs {expected} helper columns, "
                                 f"got {len(payloads)}")
        if not extended and m >= params.u - params.v:
            raise ParameterError(f"m = {m} needs the extended scheme (m >= u - v)")
        others, complete = self._complete(host, m)
        outcome = decode_errors_and_erasures(others, payloads, params.e_bar, complete,
                                             lambda a, b: list(a) == list(b))
        return outcome.columns, outcome.detected

    def rs_host_aggregate(self, columns: Mapping[int, Column], host: int, m: int) -> FieldElement:
        """sum_g gamma^(gm) v_{host,g} C_{host u+g} from the completed traces"""
        tower = self.tower
        params = self.params
        dual = tower.repair_dual(host)
        p = params.primes[host]
        aggregate = self.field.zero()
        for w in range(params.s_bar):
            for j in range(p):
                trace = self.field.zero()
                for i, column in columns.items():
                    trace = trace - tower.lambdas[i] ** (params.u * w + m) * column[j]
                aggregate = aggregate + trace * dual[w * p + j]
        return aggregate * tower.lambdas[host] ** (-m)

    def unlock_failed(self, aggregates: Sequence[FieldElement],
                      survivors: Mapping[int, FieldElement], host: int,
                      failed: Sequence[int]) -> Dict[int, FieldElement]:
        """gamma-Vandermonde solve for v_{host,g} C_g, then divide by the multipliers"""
        tower = self.tower
        h = len(failed)
        if len(aggregates) < h:
            raise ParameterError(f"need {h} aggregates, got {len(aggregates)}")
        V = [[tower.gamma ** (g * m) for g in failed] for m in range(h)]
        rhs = []
        for m in range(h):
            value = aggregates[m]
            for g, coord in survivors.items():
                value = value - tower.gamma ** (g * m) * tower.multiplier(host, g) * coord
            rhs.append(value)
        scaled = solve_linear(V, rhs)
        return {g: y / tower.multiplier(host, g) for g, y in zip(failed, scaled)}

    # -- orchestration -------------------------------------------------------

    def collect_payloads(self, codeword: RsCodeword, request: RepairRequest,
                         rng: Optional[np.random.Generator] = None) -> List[HelperPayload]:
        params = self.params
        rng = rng if rng is not None else np.random.default_rng(0)
        cost = params.ell // params.s_bar
        wire = []
        for rack in request.helpers:
            for m in range(request.h):
                if rack not in self.helpers_for_m(request, m):
                    continue
                traces = self.rs_helper_extract(codeword.rack(rack), rack, request.host, m)
                corrupted = rack in request.corrupted
                if corrupted:
                    traces = [self.tower.trace(request.host, self.field.random(rng))
                              for _ in traces]
                wire.append(HelperPayload(rack=rack, m=m, symbols=traces, cost=cost,
                                          corrupted=corrupted))
        return wire

    def rs_repair(self, codeword: RsCodeword, request: RepairRequest,
                  rng: Optional[np.random.Generator] = None
                  ) -> Tuple[Dict[int, FieldElement], RepairTranscript]:
        """Recover the failed host coordinates; returns {node: coordinate} and the transcript"""
        params = self.params
        scheme = self.validate(request)
        u, host = params.u, request.host
        wire = self.collect_payloads(codeword, request, rng)

        aggregates = []
        downloads = []
        detected: Set[int] = set()
        for m in range(request.h):
            payloads = {p.rack: p.symbols for p in wire if p.m == m}
            downloads.append(sum(p.cost for p in wire if p.m == m))
            columns, found = self.rs_cm_reconstruct(payloads, host, m,
                                                    extended=len(payloads) > params.d_bar)
            detected |= found
            aggregates.append(self.rs_host_aggregate(columns, host, m))

        survivors = {g: codeword.coords[host * u + g] for g in range(u)
                     if g not in request.failed}
        coords = self.unlock_failed(aggregates, survivors, host, request.failed)
        recovered = {host * u + g: value for g, value in coords.items()}

        per_node = params.ell // params.s_bar
        racks_read = {p.rack for p in wire}
        transcript = RepairTranscript(
            code="rs", scheme=scheme, host=host, failed=request.failed,
            helpers=request.helpers, corrupted_injected=request.corrupted,
            corrupted_detected=sorted(detected), downloaded_symbols=sum(downloads),
            downloads_per_m=downloads, accessed_symbols=len(racks_read) * u * per_node,
            accessed_per_node=per_node, local_reads=len(survivors) * params.ell,
            recovered=sorted(recovered))
        logger.info("RS repair %s: downloaded %d", request.describe(),
                    transcript.downloaded_symbols)
        return recovered, transcript

    repair = rs_repair
