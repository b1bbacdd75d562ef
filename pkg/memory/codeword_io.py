"""
Codeword Files
JSON persistence of array and RS codewords (parameter echo, field descriptor, columns)
"""

import json
from typing import List, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from agents.models import CodewordFile
from tools.array_code import ArrayCode, ArrayCodeParams, ArrayCodeword
from tools.gf_core import FieldCtx, element_from_json, element_to_json
from tools.rs_code import RsCodeword, RsParams, RsTower, build_tower
from utils.errors import CodewordFormatError

Codeword = Union[ArrayCodeword, RsCodeword]


def _array_columns(code: ArrayCode, cw: ArrayCodeword) -> List:
    erased = set(cw.erased)
    return [None if c in erased else [code.gf.element(v).to_list() for v in cw.grid[c]]
            for c in range(cw.params.n)]


def _rs_columns(cw: RsCodeword) -> List:
    erased = set(cw.erased)
    return [None if c in erased else element_to_json(x) for c, x in enumerate(cw.coords)]


def to_file(code: Union[ArrayCode, RsTower], cw: Codeword,
            corrupted_racks: Sequence[int] = ()) -> CodewordFile:
    if isinstance(cw, ArrayCodeword):
        return CodewordFile(kind="array", params=cw.params.model_dump(),
                            field=code.field.describe(), erased=cw.erased,
                            corrupted_racks=sorted(corrupted_racks),
                            columns=_array_columns(code, cw))
    return CodewordFile(kind="rs", params=cw.params.model_dump(mode="json"),
                        field=code.field.describe(), erased=cw.erased,
                        corrupted_racks=sorted(corrupted_racks), columns=_rs_columns(cw))


def save_codeword(path: str, code: Union[ArrayCode, RsTower], cw: Codeword,
                  corrupted_racks: Sequence[int] = ()):
    with open(path, "w") as f:
        f.write(to_file(code, cw, corrupted_racks).model_dump_json())


def read_file(path: str) -> CodewordFile:
    try:
        with open(path, "r") as f:
            return CodewordFile.model_validate(json.load(f))
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        raise CodewordFormatError(f"{path}: not a codeword file ({exc})")


def from_file(data: CodewordFile) -> Tuple[Union[ArrayCode, RsTower], Codeword]:
    """Rebuild the code and the codeword; the stored field must match the rebuilt one"""
    try:
        if data.kind == "array":
            code = ArrayCode(ArrayCodeParams(**data.params))
        else:
            code = build_tower(RsParams(**data.params))
    except ValueError as exc:
        raise CodewordFormatError(f"bad parameter header: {exc}")
    if FieldCtx.from_descriptor(data.field) != code.field:
        raise CodewordFormatError("field descriptor does not match the parameters")
    params = code.params
    if len(data.columns) != params.n:
        raise CodewordFormatError(f"expected {params.n} columns, got {len(data.columns)}")

    erased = set(data.erased) | {c for c, col in enumerate(data.columns) if col is None}
    if data.kind == "array":
        grid = np.zeros((params.n, params.ell), dtype=np.int64)
        for c, column in enumerate(data.columns):
            if column is None:
                continue
            if len(column) != params.ell:
                raise CodewordFormatError(f"column {c} must have {params.ell} symbols")
            grid[c] = [code.field.element(symbol).to_int() for symbol in column]
        return code, ArrayCodeword(params, grid, erased)

    coords = [code.field.zero() if column is None else element_from_json(code.field, column)
              for column in data.columns]
    return code, RsCodeword(params, coords, erased)


def load_codeword(path: str) -> Tuple[Union[ArrayCode, RsTower], Codeword, CodewordFile]:
    data = read_file(path)
    code, cw = from_file(data)
    return code, cw, data
