"""Persistent store of calibrated constants.

The store is a single JSON object keyed by 'experiment/metric@JxKy'.
Constants are only written in calibrate mode; verify runs read them.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from typing import Dict, Optional

from walsh.errors import WalshError

logger = logging.getLogger(__name__)


class CalibrationMissing(WalshError):
    """Verify mode needs a constant that was never calibrated."""


@dataclass(frozen=True)
class CalibrationEntry:
    constant: float
    measured: float
    headroom: float
    grid_j: int
    grid_k: int
    seed: int
    trials: int
    timestamp: str


class CalibrationStore:
    def __init__(self, path: str, entries: Optional[Dict[str, CalibrationEntry]] = None):
        self.path = path
        self.entries: Dict[str, CalibrationEntry] = dict(entries or {})

    @classmethod
    def load(cls, path: str) -> "CalibrationStore":
        if not os.path.exists(path):
            return cls(path)
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
            entries = {key: CalibrationEntry(**value) for key, value in raw.items()}
        except (OSError, ValueError, TypeError) as exc:
            raise WalshError(f"unreadable calibration store {path}: {exc}") from None
        return cls(path, entries)

    def get(self, key: str) -> CalibrationEntry:
        try:
            return self.entries[key]
        except KeyError:
            raise CalibrationMissing(
                f"no calibrated constant for {key} in {self.path}; run with --calibrate first"
            ) from None

    def record(self, key: str, measured: float, headroom: float, grid_j: int, grid_k: int,
               seed: int, trials: int) -> CalibrationEntry:
        entry = CalibrationEntry(
            constant=headroom * measured,
            measured=measured,
            headroom=headroom,
            grid_j=grid_j,
            grid_k=grid_k,
            seed=seed,
            trials=trials,
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        self.entries[key] = entry
        logger.info("calibrated %s = %.6g (measured %.6g)", key, entry.constant, measured)
        return entry

    def save(self) -> None:
        directory = os.path.dirname(os.path.abspath(self.path))
        os.makedirs(directory, exist_ok=True)
        payload = {key: asdict(entry) for key, entry in sorted(self.entries.items())}
        with open(self.path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
