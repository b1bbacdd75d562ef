"""
Rack Code Toolkit - Command-Line Interface
Encode, damage, repair, verify and simulate rack-aware MDS codes

Exit status: 0 when every audit passes, 1 when an audit fails, 2 when the
input or the parameters are rejected.
"""

import argparse
import json
import os
import sys
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from colorama import Fore, Style, init
from pydantic import BaseModel, Field, ValidationError

from agents.coordinator import RepairCoordinator
from agents.models import RepairRequest
from memory.codeword_io import load_codeword, save_codeword
from memory.transcript_store import TranscriptStore, scan_transcripts
from sim.scenario_runner import Scenario, expected_download, run_scenario
from tools.array_code import (ArrayCode, ArrayCodeParams, ArrayCodeword, smallest_array_field,
                              verify_mds)
from tools.gf_core import is_prime
from tools.rs_code import (RsCodeword, RsParams, build_tower, random_message, rs_encode,
                           rs_is_codeword, rs_verify_mds)
from utils.config import Config
from utils.errors import AmbiguousDecodingError, RackCodeError, UnrecoverableRepairError
from utils.logger import SystemLogger

VERSION = "1.0.0"

EXIT_OK = 0
EXIT_AUDIT = 1
EXIT_REJECTED = 2


class Rejected(Exception):
    """Input or parameters refused before any work"""


class CliConfig(BaseModel):
    """One invocation: subcommand, code flags, paths, seed and budget"""

    command: str
    kind: Optional[str] = None
    racks: Optional[int] = Field(None, ge=2)
    rack_size: Optional[int] = Field(None, ge=1)
    k: Optional[int] = Field(None, ge=1)
    helpers: Optional[int] = Field(None, ge=1)
    errors: int = Field(0, ge=0)
    q: Optional[int] = Field(None, ge=2)
    input: Optional[str] = None
    output: Optional[str] = None
    seed: int = 0
    budget: Optional[int] = Field(None, ge=1)

    @classmethod
    def from_namespace(cls, args: argparse.Namespace) -> "CliConfig":
        values = {name: getattr(args, name) for name in cls.model_fields
                  if getattr(args, name, None) is not None}
        return cls(**values)


def smallest_rs_field(u: int) -> int:
    """Smallest prime q with u | q - 1"""
    q = 2
    while not (is_prime(q) and (q - 1) % u == 0):
        q += 1
    return q


class RackCodeCLI:
    """Subcommand handlers; each returns an exit status"""

    def __init__(self, system_logger: Optional[SystemLogger] = None):
        self.system_logger = system_logger
        init(autoreset=True)

    # -- output ----------------------------------------------------------------

    def ok(self, message: str):
        print(Fore.GREEN + "✅ " + message)

    def fail(self, message: str):
        print(Fore.RED + "❌ " + message)

    def info(self, message: str):
        print(Style.DIM + message)

    # -- parameters ------------------------------------------------------------

    def params_from_args(self, args) -> Tuple[str, Dict]:
        for flag in ("racks", "rack_size", "k", "helpers"):
            if getattr(args, flag) is None:
                raise Rejected(f"--{flag.replace('_', '-')} is required")
        n = args.racks * args.rack_size
        if args.kind == "array":
            q = args.q or smallest_array_field(n, args.rack_size)
        else:
            q = args.q or smallest_rs_field(args.rack_size)
        return args.kind, {"q": q, "u": args.rack_size, "n_bar": args.racks, "k": args.k,
                           "d_bar": args.helpers, "e_bar": args.errors,
                           "seed": Config.field_seed()}

    def build(self, kind: str, params: Dict):
        if kind == "array":
            return ArrayCode(ArrayCodeParams(**params))
        return build_tower(RsParams(**params))

    def cmd_params(self, args) -> int:
        kind, raw = self.params_from_args(args)
        params = ArrayCodeParams(**raw) if kind == "array" else RsParams(**raw)
        print(json.dumps(params.describe(), indent=2))
        self.ok(f"{kind} parameters accepted")
        return EXIT_OK

    def cmd_encode(self, args) -> int:
        kind, raw = self.params_from_args(args)
        code = self.build(kind, raw)
        rng = np.random.default_rng(args.seed)
        if kind == "array":
            cw = code.encode(code.random_message(rng))
        else:
            cw = rs_encode(code, random_message(code, rng))
        save_codeword(args.output, code, cw)
        self.ok(f"encoded a {kind} codeword ({code.params.n} columns) to {args.output}")
        return EXIT_OK

    def cmd_damage(self, args) -> int:
        code, cw, data = load_codeword(args.input)
        params = code.params
        if args.host is None or not 0 <= args.host < params.n_bar:
            raise Rejected(f"--host must be a rack in [0, {params.n_bar})")
        failed = args.failed or []
        if any(not 0 <= g < params.u for g in failed):
            raise Rejected(f"--failed positions must lie in [0, {params.u})")
        corrupt = args.corrupt or []
        if args.host in corrupt:
            raise Rejected("the host rack cannot also be corrupted")
        damaged = cw.erase([args.host * params.u + g for g in failed])
        save_codeword(args.output, code, damaged,
                      sorted(set(data.corrupted_racks) | set(corrupt)))
        self.ok(f"erased nodes {damaged.erased}, corrupted racks {sorted(corrupt)}")
        return EXIT_OK

    def _locate(self, erased: List[int], u: int) -> Tuple[int, List[int]]:
        if not erased:
            raise Rejected("nothing to repair")
        racks = sorted({c // u for c in erased})
        if len(racks) != 1:
            raise Rejected(f"erased nodes span racks {racks}; one host rack per repair")
        return racks[0], [c % u for c in erased]

    def cmd_repair(self, args) -> int:
        code, cw, data = load_codeword(args.input)
        params = code.params
        host, failed = self._locate(cw.erased, params.u)
        coordinator = RepairCoordinator(code, self.system_logger)
        scheme = coordinator.engine.scheme_for(len(failed))
        needed = params.d_bar + (scheme == "extended")
        helpers = args.helper_racks or [i for i in range(params.n_bar) if i != host][:needed]
        corrupted = [i for i in data.corrupted_racks if i in helpers]
        request = RepairRequest(host=host, failed=failed, helpers=helpers, corrupted=corrupted)

        recovered, transcript = coordinator.process_repair(
            cw, request, np.random.default_rng(args.seed))
        if isinstance(cw, ArrayCodeword):
            grid = cw.grid.copy()
            for node, column in recovered.items():
                grid[node] = column
            repaired = ArrayCodeword(params, grid)
            consistent = code.is_codeword(repaired)
        else:
            coords = list(cw.coords)
            for node, value in recovered.items():
                coords[node] = value
            repaired = RsCodeword(params, coords)
            consistent = rs_is_codeword(code, repaired)
        traffic_ok = transcript.downloaded_symbols == expected_download(params, len(failed))
        per_node = params.ell // params.s_bar
        access_ok = (transcript.accessed_per_node == per_node
                     and transcript.accessed_symbols == len(helpers) * params.u * per_node)
        if not access_ok:
            transcript.note = (f"access audit: {transcript.accessed_per_node} per node, "
                               f"expected {per_node}")
        transcript.ok = consistent and traffic_ok and access_ok

        save_codeword(args.output, code, repaired)
        transcript_path = args.transcript or os.path.splitext(args.output)[0] + ".transcript.json"
        with open(transcript_path, "w") as f:
            f.write(transcript.model_dump_json(indent=2))
        if args.store:
            TranscriptStore(args.store).save_transcript(transcript)

        if transcript.ok:
            self.ok(transcript.summary())
            return EXIT_OK
        self.fail(transcript.summary())
        return EXIT_AUDIT

    def cmd_verify(self, args) -> int:
        code, cw, _ = load_codeword(args.input)
        if not cw.erased:
            member = code.is_codeword(cw) if isinstance(cw, ArrayCodeword) \
                else rs_is_codeword(code, cw)
            if not member:
                self.fail("stored columns do not satisfy the parity checks")
                return EXIT_AUDIT
            self.ok("stored columns satisfy the parity checks")
        if isinstance(code, ArrayCode):
            report = verify_mds(code, budget=args.budget, seed=args.seed)
        else:
            report = rs_verify_mds(code, budget=args.budget, seed=args.seed)
        if self.system_logger:
            self.system_logger.log_audit("mds", report.passed,
                                         f"{report.patterns_checked}/{report.patterns_total}")
        line = (f"MDS check: {report.patterns_checked}/{report.patterns_total} patterns"
                f"{' (sampled)' if report.sampled else ''}, {len(report.failures)} failures")
        if report.passed:
            self.ok(line)
            return EXIT_OK
        self.fail(line)
        return EXIT_AUDIT

    def cmd_report(self, args) -> int:
        transcripts = scan_transcripts(args.input)
        if not transcripts:
            raise Rejected(f"no transcripts under {args.input}")
        frame = pd.DataFrame([t.model_dump() for t in transcripts])
        for col in ("failed", "helpers", "corrupted_injected", "corrupted_detected",
                    "downloads_per_m", "recovered"):
            frame[col] = frame[col].map(lambda v: " ".join(str(x) for x in v))
        frame.to_csv(args.output, index=False)
        failing = sum(1 for t in transcripts if t.ok is False)
        self.info(frame[["code", "scheme", "host", "downloaded_symbols",
                         "accessed_symbols", "ok"]].to_string(index=False))
        if failing:
            self.fail(f"{failing} of {len(frame)} transcripts failed")
            return EXIT_AUDIT
        self.ok(f"{len(frame)} transcripts written to {args.output}")
        return EXIT_OK

    def cmd_simulate(self, args) -> int:
        kind, raw = self.params_from_args(args)
        scenario = Scenario(name=args.name, kind=kind, params=raw, seed=args.seed, h=args.h,
                            host=args.host, failed=args.failed, helpers=args.helper_racks,
                            corrupted=args.corrupt, corrupt_count=args.corrupt_count,
                            runs=args.runs, budget=args.budget, workers=args.workers)
        report = run_scenario(scenario)
        prefix = args.output or scenario.name
        report.write_json(prefix + ".json")
        report.write_csv(prefix + ".csv")
        if self.system_logger:
            self.system_logger.log_audit("scenario " + scenario.name, report.passed,
                                         json.dumps(report.summary))
        line = (f"{sum(r.ok for r in report.records)}/{report.runs_checked} runs passed"
                f"{' (sampled)' if report.sampled else ''}; report at {prefix}.json")
        if report.passed:
            self.ok(line)
            return EXIT_OK
        self.fail(line)
        return EXIT_AUDIT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rackcode",
                                     description="Rack-aware MDS codes with error-resilient repair")
    sub = parser.add_subparsers(dest="command", required=True)

    def code_flags(p):
        p.add_argument("--kind", choices=("array", "rs"), default="array")
        p.add_argument("--racks", type=int, help="number of racks (n_bar)")
        p.add_argument("--rack-size", type=int, help="nodes per rack (u)")
        p.add_argument("--k", type=int, help="message length in nodes")
        p.add_argument("--helpers", type=int, help="helper racks per repair (d_bar)")
        p.add_argument("--errors", type=int, default=0, help="corrupted racks tolerated (e_bar)")
        p.add_argument("--q", type=int, help="field size (default: smallest admissible)")

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--budget", type=int)

    p = sub.add_parser("params", help="derive and check a parameter bundle")
    code_flags(p)

    p = sub.add_parser("encode", help="encode a seeded random message")
    code_flags(p)
    common(p)
    p.add_argument("--out", dest="output", required=True)

    p = sub.add_parser("damage", help="erase nodes of one rack and mark corrupted racks")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--host", type=int)
    p.add_argument("--failed", type=int, nargs="+")
    p.add_argument("--corrupt", type=int, nargs="*")

    p = sub.add_parser("repair", help="repair the erased nodes of a damaged codeword")
    common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--helper-racks", type=int, nargs="+")
    p.add_argument("--transcript")
    p.add_argument("--store", help="transcript store directory")

    p = sub.add_parser("verify", help="parity and MDS checks for a codeword file")
    common(p)
    p.add_argument("--in", dest="input", required=True)

    p = sub.add_parser("report", help="collect transcripts into a CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)

    p = sub.add_parser("simulate", help="run a failure and corruption scenario")
    code_flags(p)
    common(p)
    p.add_argument("--name", default="scenario")
    p.add_argument("--h", type=int, default=1)
    p.add_argument("--host", type=int)
    p.add_argument("--failed", type=int, nargs="+")
    p.add_argument("--helper-racks", type=int, nargs="+")
    p.add_argument("--corrupt", type=int, nargs="*")
    p.add_argument("--corrupt-count", type=int, default=0)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", dest="output")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point"""
    args = build_parser().parse_args(argv)
    system_logger = SystemLogger()
    system_logger.log_startup("rackcode", VERSION)
    cli = RackCodeCLI(system_logger)
    handler = getattr(cli, f"cmd_{args.command}")
    try:
        config = CliConfig.from_namespace(args)
    except ValidationError as exc:
        cli.fail(f"invalid flags: {exc.errors()[0]['loc'][0]} {exc.errors()[0]['msg']}")
        system_logger.close()
        return EXIT_REJECTED
    system_logger.logger.debug("invocation %s", config.model_dump(exclude_none=True))
    try:
        return handler(args)
    except Rejected as exc:
        cli.fail(str(exc))
        return EXIT_REJECTED
    except (UnrecoverableRepairError, AmbiguousDecodingError) as exc:
        cli.fail(f"repair failed: {exc}")
        return EXIT_AUDIT
    except (ValueError, RackCodeError) as exc:
        cli.fail(f"{type(exc).__name__}: {exc}")
        return EXIT_REJECTED
    finally:
        system_logger.close()


if __name__ == "__main__":
    sys.exit(main())
