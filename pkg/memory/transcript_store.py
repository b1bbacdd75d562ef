"""
Transcript Store
Persists repair transcripts and simulator reports as JSON files
"""

import json
import os
from datetime import datetime
from typing import Dict, List, Optional

from pydantic import ValidationError

from agents.models import RepairTranscript
from utils.errors import CodewordFormatError
from utils.logger import get_logger

logger = get_logger(__name__)


class TranscriptStore:
    """Directory of transcript JSON files with an index of run ids"""

    def __init__(self, directory: str = "transcripts"):
        self.directory = directory
        self.index_file = os.path.join(directory, "index.json")
        self.index: Dict[str, Dict] = {}
        self.load_index()

    def save_transcript(self, transcript: RepairTranscript, run_id: Optional[str] = None) -> str:
        """Write one transcript; returns its run id"""
        if run_id is None:
            stamp = datetime.now().strftime("%Y%m%d_%H%M%S_%f")
            run_id = f"{transcript.code}_h{transcript.host}_{stamp}"
            suffix = 1
            while run_id in self.index:
                run_id = f"{transcript.code}_h{transcript.host}_{stamp}_{suffix}"
                suffix += 1
        path = os.path.join(self.directory, f"{run_id}.json")
        os.makedirs(self.directory, exist_ok=True)
        with open(path, "w") as f:
            f.write(transcript.model_dump_json(indent=2))

        self.index[run_id] = {
            "path": path,
            "code": transcript.code,
            "scheme": transcript.scheme,
            "host": transcript.host,
            "saved_at": datetime.now().isoformat(),
        }
        self.save_index()
        return run_id

    def load_transcript(self, run_id: str) -> RepairTranscript:
        entry = self.index.get(run_id)
        path = entry["path"] if entry else os.path.join(self.directory, f"{run_id}.json")
        return load_transcript_file(path)

    def delete_transcript(self, run_id: str) -> bool:
        entry = self.index.pop(run_id, None)
        if entry is None:
            return False
        if os.path.exists(entry["path"]):
            os.remove(entry["path"])
        self.save_index()
        return True

    def list_transcripts(self, code: Optional[str] = None) -> List[str]:
        return sorted(run_id for run_id, entry in self.index.items()
                      if code is None or entry["code"] == code)

    def save_index(self):
        try:
            os.makedirs(self.directory, exist_ok=True)
            with open(self.index_file, "w") as f:
                json.dump(self.index, f, indent=2)
        except OSError as exc:
            logger.warning("could not save transcript index: %s", exc)

    def load_index(self):
        try:
            if os.path.exists(self.index_file):
                with open(self.index_file, "r") as f:
                    self.index = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            logger.warning("could not load transcript index: %s", exc)
            self.index = {}


def load_transcript_file(path: str) -> RepairTranscript:
    try:
        with open(path, "r") as f:
            return RepairTranscript.model_validate_json(f.read())
    except (OSError, ValidationError) as exc:
        raise CodewordFormatError(f"{path}: not a repair transcript ({exc})")


def scan_transcripts(directory: str) -> List[RepairTranscript]:
    """Every transcript file under directory (recursive, sorted by path); the index is skipped"""
    found = []
    for root, _, files in os.walk(directory):
        for name in sorted(files):
            if name.endswith(".json") and name != "index.json":
                found.append(os.path.join(root, name))
    transcripts = []
    for path in sorted(found):
        try:
            transcripts.append(load_transcript_file(path))
        except CodewordFormatError as exc:
            logger.debug("skipping %s", exc)
    return transcripts
