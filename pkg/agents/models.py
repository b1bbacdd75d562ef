"""
Repair Data Models
Requests, helper payload records, transcripts and the codeword file format
"""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class RepairRequest(BaseModel):
    """Which host rack failed, which of its nodes, and which racks help"""

    model_config = ConfigDict(frozen=True)

    host: int = Field(..., ge=0)
    failed: List[int]
    helpers: List[int]
    corrupted: List[int] = Field(default_factory=list)

    @field_validator("failed", "helpers", "corrupted")
    @classmethod
    def _sorted_unique(cls, values: List[int]) -> List[int]:
        if any(v < 0 for v in values):
            raise ValueError("indices must be non-negative")
        if len(set(values)) != len(values):
            raise ValueError(f"duplicate indices in {values}")
        return sorted(values)

    @model_validator(mode="after")
    def _check_sets(self):
        if not self.failed:
            raise ValueError("at least one failed node is required (h >= 1)")
        if self.host in self.helpers:
            raise ValueError(f"host rack {self.host} cannot also be a helper")
        if not set(self.corrupted) <= set(self.helpers):
            raise ValueError("corrupted racks must be helper racks")
        return self

    @property
    def h(self) -> int:
        return len(self.failed)

    def describe(self) -> str:
        return (f"host={self.host} failed={self.failed} helpers={self.helpers} "
                f"corrupted={self.corrupted}")


class HelperPayload(BaseModel):
    """What one helper rack sends for one m (symbols as integer encodings or coefficient lists)"""

    rack: int
    m: int
    symbols: list
    cost: int = Field(..., ge=0, description="base-field symbols crossing the rack boundary")
    corrupted: bool = False


class RepairTranscript(BaseModel):
    """Ledger of one repair: traffic, reads, localisation and outcome"""

    code: str
    scheme: str
    host: int
    failed: List[int]
    helpers: List[int]
    corrupted_injected: List[int] = Field(default_factory=list)
    corrupted_detected: List[int] = Field(default_factory=list)
    downloaded_symbols: int = 0
    downloads_per_m: List[int] = Field(default_factory=list)
    accessed_symbols: int = 0
    accessed_per_node: int = 0
    local_reads: int = 0
    recovered: List[int] = Field(default_factory=list)
    ok: Optional[bool] = None
    note: str = ""

    def summary(self) -> str:
        status = {True: "ok", False: "FAILED", None: "unchecked"}[self.ok]
        return (f"[{self.code}/{self.scheme}] host {self.host} failed {self.failed}: "
                f"downloaded {self.downloaded_symbols}, accessed {self.accessed_symbols}, "
                f"detected {self.corrupted_detected} -> {status}")


class CodewordFile(BaseModel):
    """On-disk codeword: parameter echo, field descriptor, then column-major symbols"""

    kind: str
    params: dict
    field: dict
    erased: List[int] = Field(default_factory=list)
    corrupted_racks: List[int] = Field(default_factory=list)
    columns: List[Optional[list]]

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, value: str) -> str:
        if value not in ("array", "rs"):
            raise ValueError(f"unknown code kind {value!r}")
        return value
