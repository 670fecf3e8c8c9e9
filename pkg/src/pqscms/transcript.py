"""Per-entity log of every message field sent or received."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple


class TranscriptEntry(NamedTuple):
    direction: str  # "send" | "recv"
    name: str
    value: bytes


@dataclass
class Transcript:
    owner: str
    entries: list[TranscriptEntry] = field(default_factory=list)

    def record(self, direction: str, name: str, value: bytes) -> None:
        if direction not in ("send", "recv"):
            raise ValueError(f"bad direction {direction!r}")
        self.entries.append(TranscriptEntry(direction, name, bytes(value)))

    def record_fields(self, direction: str, message: str, fields: Iterable[tuple[str, bytes]]) -> None:
        for name, value in fields:
            self.record(direction, f"{message}.{name}", value)

    def values(self) -> Iterator[bytes]:
        for entry in self.entries:
            yield entry.value

    def contains(self, needle: bytes) -> bool:
        """True if ``needle`` equals or occurs inside any recorded value."""
        return any(needle in value for value in self.values())

    def __len__(self) -> int:
        return len(self.entries)
