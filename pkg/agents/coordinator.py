"""
Repair Coordinator - Main Orchestrator
Analyses repair requests, picks the scheme and routes them to the matching engine
"""

import time
from typing import Dict, Optional, Union

import numpy as np

from agents.array_repair import ArrayRepairAgent
from agents.models import RepairRequest, RepairTranscript
from agents.rs_repair import RsRepairAgent
from tools.array_code import ArrayCode, ArrayCodeword
from tools.rs_code import RsCodeword, RsTower
from utils.errors import ParameterError, RackCodeError
from utils.logger import SystemLogger, get_logger

logger = get_logger(__name__)

Codeword = Union[ArrayCodeword, RsCodeword]


class RepairCoordinator:
    """Owns one engine per code and runs requests through it"""

    def __init__(self, code: Union[ArrayCode, RsTower],
                 system_logger: Optional[SystemLogger] = None):
        if isinstance(code, ArrayCode):
            self.engine = ArrayRepairAgent(code)
            self.kind = "array"
        elif isinstance(code, RsTower):
            self.engine = RsRepairAgent(code)
            self.kind = "rs"
        else:
            raise ParameterError(f"no repair engine for {type(code).__name__}")
        self.code = code
        self.params = code.params
        self.system_logger = system_logger
        self.name = "Rack Repair Coordinator"

    def analyze_request(self, request: RepairRequest) -> Dict:
        """Scheme, helper count and download per m for a request, without running it"""
        params = self.params
        scheme = self.engine.validate(request)
        per_rack = params.ell_prime if self.kind == "array" else params.ell // params.s_bar
        downloads = [len(self.engine.helpers_for_m(request, m)) * per_rack
                     for m in range(request.h)]
        if scheme == "base":
            reasoning = f"h = {request.h} <= u - v = {params.u - params.v}: d_bar helpers per m"
        else:
            reasoning = (f"h = {request.h} > u - v = {params.u - params.v}: "
                         f"d_bar + 1 helpers for m >= u - v")
        return {"engine": self.engine.name, "scheme": scheme, "h": request.h,
                "helpers_needed": len(request.helpers), "downloads_per_m": downloads,
                "reasoning": reasoning}

    def route_to_engine(self, codeword: Codeword, request: RepairRequest,
                        rng: Optional[np.random.Generator] = None):
        if self.kind == "array":
            if not isinstance(codeword, ArrayCodeword):
                raise ParameterError("array engine needs an ArrayCodeword")
        elif not isinstance(codeword, RsCodeword):
            raise ParameterError("RS engine needs an RsCodeword")
        return self.engine.repair(codeword, request, rng)

    def _matches(self, recovered: Dict, original: Codeword) -> bool:
        if self.kind == "array":
            return all(np.array_equal(column, original.grid[node])
                       for node, column in recovered.items())
        return all(value == original.coords[node] for node, value in recovered.items())

    def process_repair(self, codeword: Codeword, request: RepairRequest,
                       rng: Optional[np.random.Generator] = None,
                       original: Optional[Codeword] = None):
        """Analyse, route and audit one request; returns (recovered, transcript)"""
        analysis = self.analyze_request(request)
        logger.debug("request %s -> %s", request.describe(), analysis)
        if self.system_logger:
            self.system_logger.log_repair_start(self.engine.name, request.describe())

        started = time.perf_counter()
        try:
            recovered, transcript = self.route_to_engine(codeword, request, rng)
        except RackCodeError as exc:
            elapsed = time.perf_counter() - started
            if self.system_logger:
                self.system_logger.log_repair_completion(self.engine.name, elapsed, False)
            logger.error("repair %s failed: %s", request.describe(), exc)
            raise
        elapsed = time.perf_counter() - started

        if original is not None:
            transcript.ok = self._matches(recovered, original)
        if self.system_logger:
            self.system_logger.log_repair_completion(self.engine.name, elapsed,
                                                     transcript.ok is not False)
        return recovered, transcript

    def failed_transcript(self, request: RepairRequest, note: str) -> RepairTranscript:
        """Transcript for a repair that raised; counts the traffic it would have used"""
        analysis = self.analyze_request(request)
        return RepairTranscript(code=self.kind, scheme=analysis["scheme"], host=request.host,
                                failed=request.failed, helpers=request.helpers,
                                corrupted_injected=request.corrupted,
                                downloaded_symbols=sum(analysis["downloads_per_m"]),
                                downloads_per_m=analysis["downloads_per_m"], ok=False,
                                note=note)
