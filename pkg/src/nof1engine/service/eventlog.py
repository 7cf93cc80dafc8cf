"""Append-only JSON-lines event log with per-entry checksums.

One JSON object per line: {seq, ts, entity, payload, crc32c}. The checksum
covers the canonical (sorted-key, compact) encoding of the payload; replay
refuses to proceed past a corrupt entry, naming its sequence number.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from ..errors import CorruptLogError

_CRC32C_POLY = 0x82F63B78


def _build_table() -> list[int]:
    table = []
    for n in range(256):
        crc = n
        for _ in range(8):
            crc = (crc >> 1) ^ _CRC32C_POLY if crc & 1 else crc >> 1
        table.append(crc)
    return table


_TABLE = _build_table()


def crc32c(data: bytes) -> int:
    """CRC-32C (Castagnoli), the variant used per log entry."""
    crc = 0xFFFFFFFF
    for byte in data:
        crc = (crc >> 8) ^ _TABLE[(crc ^ byte) & 0xFF]
    return crc ^ 0xFFFFFFFF


def canonical_payload(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


@dataclass(frozen=True)
class EventLogEntry:
    seq: int
    ts: float
    entity: str  # trial | patient | budget | contribution
    payload: dict
    crc: int

    def to_line(self) -> str:
        return json.dumps(
            {"seq": self.seq, "ts": self.ts, "entity": self.entity, "payload": self.payload, "crc32c": self.crc},
            sort_keys=True,
            separators=(",", ":"),
        )


class EventLog:
    """Single-writer append-only log; reads validate checksums and ordering."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._next_seq = 1
        if self.path.exists():
            entries = list(self.read_all())
            if entries:
                self._next_seq = entries[-1].seq + 1

    def append(self, entity: str, payload: dict, ts: float | None = None) -> EventLogEntry:
        entry = EventLogEntry(
            seq=self._next_seq,
            ts=time.time() if ts is None else ts,
            entity=entity,
            payload=payload,
            crc=crc32c(canonical_payload(payload)),
        )
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(entry.to_line() + "\n")
            fh.flush()
        self._next_seq += 1
        return entry

    def read_all(self) -> Iterator[EventLogEntry]:
        if not self.path.exists():
            return
        last_seq = 0
        with open(self.path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                    entry = EventLogEntry(
                        seq=int(raw["seq"]),
                        ts=float(raw["ts"]),
                        entity=raw["entity"],
                        payload=raw["payload"],
                        crc=int(raw["crc32c"]),
                    )
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise CorruptLogError(f"unreadable log entry at line {line_no}", seq=line_no) from exc
                if crc32c(canonical_payload(entry.payload)) != entry.crc:
                    raise CorruptLogError(f"checksum mismatch at seq {entry.seq}", seq=entry.seq)
                if entry.seq <= last_seq:
                    raise CorruptLogError(f"non-increasing sequence number {entry.seq}", seq=entry.seq)
                last_seq = entry.seq
                yield entry
