"""
System Logger
Console and file logging for repairs, audits and CLI runs
"""

import logging
import os
from typing import Optional

from utils.config import Config

ROOT = "rackcode"


def get_logger(name: str) -> logging.Logger:
    """Namespaced logger under the toolkit root"""
    if name.startswith(ROOT):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT}.{name}")


class SystemLogger:
    """Configures the toolkit root logger and records high-level events"""

    def __init__(self, log_dir: Optional[str] = None, level: Optional[str] = None):
        self.log_dir = log_dir or Config.log_dir()
        self.logger = logging.getLogger(ROOT)
        self.logger.setLevel(level or Config.log_level())

        os.makedirs(self.log_dir, exist_ok=True)
        self.log_file = os.path.join(self.log_dir, "rackcode.log")

        formatter = logging.Formatter(
            "%(asctime)s %(levelname)-7s %(name)s: %(message)s")

        if not any(getattr(h, "_rackcode", False) for h in self.logger.handlers):
            console = logging.StreamHandler()
            console.setLevel(logging.WARNING)
            console.setFormatter(formatter)
            console._rackcode = True
            self.logger.addHandler(console)

        known = {getattr(h, "baseFilename", None) for h in self.logger.handlers}
        if os.path.abspath(self.log_file) not in known:
            file_handler = logging.FileHandler(self.log_file)
            file_handler.setFormatter(formatter)
            self.logger.addHandler(file_handler)

    def log_startup(self, app_name: str, version: str):
        self.logger.info("%s %s starting", app_name, version)

    def log_repair_start(self, engine: str, request: str):
        self.logger.info("[%s] repair started: %s", engine, request)

    def log_repair_completion(self, engine: str, seconds: float, ok: bool):
        level = logging.INFO if ok else logging.ERROR
        self.logger.log(level, "[%s] repair %s in %.3fs",
                        engine, "succeeded" if ok else "failed", seconds)

    def log_audit(self, name: str, ok: bool, detail: str = ""):
        level = logging.INFO if ok else logging.WARNING
        self.logger.log(level, "audit %s: %s %s", name, "pass" if ok else "FAIL", detail)

    def close(self):
        """Detach file handlers (lets tests remove the log directory)"""
        for handler in list(self.logger.handlers):
            if isinstance(handler, logging.FileHandler):
                handler.close()
                self.logger.removeHandler(handler)
