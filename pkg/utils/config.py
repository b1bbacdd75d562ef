"""
Configuration
Environment-driven settings for budgets, logging and field construction
"""

import os
from typing import Optional

from dotenv import load_dotenv

from utils.errors import ParameterError

load_dotenv()


class Config:
    """Reads toolkit settings from the environment (.env supported)"""

    MDS_BUDGET_DEFAULT = 100_000
    SWEEP_BUDGET_DEFAULT = 10_000

    @staticmethod
    def _int(key: str, default: int) -> int:
        raw = os.getenv(key)
        if raw is None or raw.strip() == "":
            return default
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"{key} must be an integer, got {raw!r}")

    @classmethod
    def budget(cls, cli_value: Optional[int] = None,
               default: Optional[int] = None) -> int:
        """RACKCODE_BUDGET overrides --budget, which overrides the default; must be >= 1"""
        if os.getenv("RACKCODE_BUDGET", "").strip():
            value, source = cls._int("RACKCODE_BUDGET", 0), "RACKCODE_BUDGET"
        elif cli_value is not None:
            value, source = cli_value, "budget"
        else:
            value = default if default is not None else cls.sweep_budget()
            source = "default budget"
        if value < 1:
            raise ParameterError(f"{source} must be at least 1, got {value}")
        return value

    @classmethod
    def mds_budget(cls) -> int:
        return cls._int("RACKCODE_MDS_BUDGET", cls.MDS_BUDGET_DEFAULT)

    @classmethod
    def sweep_budget(cls) -> int:
        return cls._int("RACKCODE_SWEEP_BUDGET", cls.SWEEP_BUDGET_DEFAULT)

    @classmethod
    def field_seed(cls) -> int:
        return cls._int("RACKCODE_FIELD_SEED", 0)

    @classmethod
    def workers(cls) -> int:
        return max(1, cls._int("RACKCODE_WORKERS", 1))

    @staticmethod
    def log_dir() -> str:
        return os.getenv("RACKCODE_LOG_DIR", "logs")

    @staticmethod
    def log_level() -> str:
        return os.getenv("RACKCODE_LOG_LEVEL", "INFO").upper()
