"""The two-way label a detection run assigns to a claim."""

from enum import Enum


class Verdict(str, Enum):
    REAL = "Real"
    FAKE = "Fake"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value
