"""
Scenario Runner
Failure and corruption injection over a simulated rack cluster, with bandwidth
and access audits against the cut-set bound.

Every run is seeded from (scenario seed, run index), so a scenario always
produces the same report regardless of the worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from agents.coordinator import RepairCoordinator
from agents.models import RepairRequest
from tools.array_code import ArrayCode, ArrayCodeParams
from tools.rs_code import RsParams, build_tower, random_message, rs_encode
from utils.config import Config
from utils.errors import ParameterError, RackCodeError, ScenarioError
from utils.logger import get_logger

logger = get_logger(__name__)

Params = Union[ArrayCodeParams, RsParams]


class Scenario(BaseModel):
    """What to break and how often; None for host, failed or helpers means sweep them all"""

    name: str = "scenario"
    kind: str
    params: dict
    seed: int = 0
    h: int = Field(1, ge=1)
    host: Optional[int] = None
    failed: Optional[List[int]] = None
    helpers: Optional[List[int]] = None
    corrupted: Optional[List[int]] = None
    corrupt_count: int = Field(0, ge=0, description="sweep every corrupted subset of this size")
    runs: int = Field(1, ge=1, description="fresh random codewords per configuration")
    budget: Optional[int] = None
    workers: Optional[int] = None

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, value: str) -> str:
        if value not in ("array", "rs"):
            raise ValueError(f"unknown code kind {value!r}")
        return value


class RunRecord(BaseModel):
    run: int
    host: int
    failed: List[int]
    helpers: List[int]
    corrupted: List[int]
    detected: List[int] = Field(default_factory=list)
    scheme: str
    downloaded: int
    bound: str
    ratio: float
    expected_download: int
    accessed: int
    expected_access: int
    access_ratio: float
    exact: bool
    ok: bool
    note: str = ""


class Report(BaseModel):
    name: str
    kind: str
    params: dict
    seed: int
    jobs_total: int
    runs_checked: int
    sampled: bool
    access_per_rack: int
    field_constraint: str
    records: List[RunRecord] = Field(default_factory=list)
    summary: Dict[str, float] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.records) and all(r.ok for r in self.records)

    def to_frame(self) -> pd.DataFrame:
        columns = ["run", "host", "failed", "helpers", "corrupted", "detected", "scheme",
                   "downloaded", "bound", "ratio", "expected_download", "accessed",
                   "expected_access", "access_ratio", "exact", "ok", "note"]
        frame = pd.DataFrame([r.model_dump() for r in self.records], columns=columns)
        for col in ("failed", "helpers", "corrupted", "detected"):
            frame[col] = frame[col].map(lambda v: " ".join(str(x) for x in v))
        frame.insert(0, "scenario", self.name)
        return frame

    def write_csv(self, path: str):
        self.to_frame().to_csv(path, index=False)

    def write_json(self, path: str):
        with open(path, "w") as f:
            f.write(self.model_dump_json(indent=2))


def cutset_bound(params: Params, h: int, mode: str = "uer") -> Fraction:
    """d_bar h ell / (d_bar - k_bar + 1), or with 2 e_bar subtracted in the uer mode"""
    if mode == "plain":
        denominator = params.d_bar - params.k_bar + 1
    elif mode == "uer":
        denominator = params.d_bar - 2 * params.e_bar - params.k_bar + 1
    else:
        raise ParameterError(f"unknown bound mode {mode!r}")
    return Fraction(params.d_bar * h * params.ell, denominator)


def expected_download(params: Params, h: int) -> int:
    """Exact traffic of the implemented schemes: ell / s_bar per helper rack per m"""
    per_rack = params.ell // params.s_bar
    base = params.u - params.v
    if h <= base:
        return params.d_bar * h * per_rack
    return params.d_bar * base * per_rack + (params.d_bar + 1) * (h - base) * per_rack


def build_code(kind: str, params: dict):
    try:
        if kind == "array":
            return ArrayCode(ArrayCodeParams(**params))
        return build_tower(RsParams(**params))
    except ValueError as exc:
        raise ScenarioError(f"invalid {kind} parameters: {exc}")


Job = Tuple[int, int, Tuple[int, ...], Tuple[int, ...], Tuple[int, ...]]


def _enumerate_jobs(scenario: Scenario, coordinator: RepairCoordinator) -> List[Job]:
    params = coordinator.params
    engine = coordinator.engine
    try:
        scheme = engine.scheme_for(scenario.h)
    except ParameterError as exc:
        raise ScenarioError(str(exc))
    needed = params.d_bar + (scheme == "extended")
    if needed > params.n_bar - 1:
        raise ScenarioError(f"{scheme} scheme needs {needed} helper racks but only "
                            f"{params.n_bar - 1} survive")

    if scenario.host is not None and not 0 <= scenario.host < params.n_bar:
        raise ScenarioError(f"host rack {scenario.host} outside [0, {params.n_bar})")
    hosts = [scenario.host] if scenario.host is not None else range(params.n_bar)

    if scenario.failed is not None:
        if len(scenario.failed) != scenario.h:
            raise ScenarioError(f"failed set {scenario.failed} does not have h = {scenario.h}")
        failed_sets = [tuple(sorted(scenario.failed))]
    else:
        failed_sets = list(combinations(range(params.u), scenario.h))

    jobs = []
    for host in hosts:
        others = [i for i in range(params.n_bar) if i != host]
        if scenario.helpers is not None:
            if host in scenario.helpers or len(scenario.helpers) != needed:
                raise ScenarioError(f"helpers {scenario.helpers} must be {needed} racks "
                                    f"other than host {host}")
            helper_sets = [tuple(sorted(scenario.helpers))]
        else:
            helper_sets = list(combinations(others, needed))
        for failed in failed_sets:
            for helpers in helper_sets:
                if scenario.corrupted is not None:
                    if not set(scenario.corrupted) <= set(helpers):
                        raise ScenarioError("corrupted racks must be helper racks")
                    corrupted_sets = [tuple(sorted(scenario.corrupted))]
                else:
                    corrupted_sets = list(combinations(helpers, scenario.corrupt_count))
                for corrupted in corrupted_sets:
                    for _ in range(scenario.runs):
                        jobs.append((len(jobs), host, failed, helpers, corrupted))
    return jobs


def _fresh_codeword(coordinator: RepairCoordinator, rng: np.random.Generator):
    code = coordinator.code
    if coordinator.kind == "array":
        return code.encode(code.random_message(rng))
    return rs_encode(code, random_message(code, rng))


def _run_job(scenario: Scenario, coordinator: RepairCoordinator, job: Job) -> RunRecord:
    index, host, failed, helpers, corrupted = job
    params = coordinator.params
    rng = np.random.default_rng([scenario.seed, index])
    original = _fresh_codeword(coordinator, rng)
    u = params.u
    damaged = original.erase([host * u + g for g in failed])
    request = RepairRequest(host=host, failed=list(failed), helpers=list(helpers),
                            corrupted=list(corrupted))

    bound = cutset_bound(params, len(failed), "uer")
    per_node = params.ell // params.s_bar
    expected_access = len(helpers) * u * per_node
    target = expected_download(params, len(failed))
    try:
        _, transcript = coordinator.process_repair(damaged, request, rng, original=original)
    except RackCodeError as exc:
        transcript = coordinator.failed_transcript(request, f"{type(exc).__name__}: {exc}")

    exact = bool(transcript.ok)
    audits = (transcript.downloaded_symbols == target
              and (not transcript.recovered or transcript.accessed_symbols == expected_access))
    if exact and audits and len(corrupted) <= params.e_bar:
        audits = set(transcript.corrupted_detected) == set(corrupted)
    ratio = Fraction(transcript.downloaded_symbols) / bound if bound else Fraction(0)
    return RunRecord(run=index, host=host, failed=list(failed), helpers=list(helpers),
                     corrupted=list(corrupted), detected=transcript.corrupted_detected,
                     scheme=transcript.scheme, downloaded=transcript.downloaded_symbols,
                     bound=str(bound), ratio=float(ratio), expected_download=target,
                     accessed=transcript.accessed_symbols, expected_access=expected_access,
                     access_ratio=transcript.accessed_symbols / expected_access,
                     exact=exact, ok=exact and audits, note=transcript.note)


def run_scenario(scenario: Scenario) -> Report:
    """Encode, break, corrupt in transit, repair and audit every configured run"""
    code = build_code(scenario.kind, scenario.params)
    coordinator = RepairCoordinator(code)
    params = coordinator.params

    jobs = _enumerate_jobs(scenario, coordinator)
    budget = Config.budget(scenario.budget, Config.sweep_budget())
    sampled = len(jobs) > budget
    if sampled:
        rng = np.random.default_rng([scenario.seed, len(jobs)])
        keep = np.sort(rng.choice(len(jobs), size=budget, replace=False))
        chosen = [jobs[int(i)] for i in keep]
    else:
        chosen = jobs

    workers = scenario.workers or Config.workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda job: _run_job(scenario, coordinator, job), chosen))
    else:
        records = [_run_job(scenario, coordinator, job) for job in chosen]

    report = Report(
        name=scenario.name, kind=scenario.kind, params=params.describe(), seed=scenario.seed,
        jobs_total=len(jobs), runs_checked=len(records), sampled=sampled,
        access_per_rack=params.u * params.ell // params.s_bar,
        field_constraint=_field_constraint(scenario.kind, params), records=records)
    if records:
        frame = report.to_frame()
        stats = frame["downloaded"].agg(["min", "max", "mean"])
        report.summary = {
            "downloaded_min": float(stats["min"]),
            "downloaded_max": float(stats["max"]),
            "downloaded_mean": float(stats["mean"]),
            "ratio_max": float(frame["ratio"].max()),
            "ratio_limit": 1 + 1 / params.s_bar,
            "passed": float(frame["ok"].sum()),
        }
    logger.info("scenario %s: %d/%d runs passed%s", scenario.name,
                sum(r.ok for r in records), len(records), " (sampled)" if sampled else "")
    return report


def _field_constraint(kind: str, params: Params) -> str:
    if kind == "array":
        return f"u | q - 1 and q > n: {params.u} | {params.q - 1}, {params.q} > {params.n}"
    return (f"u | q - 1 with K = GF({params.q}^{params.ell}): "
            f"{params.u} | {params.q - 1}, primes {list(params.primes)}")


