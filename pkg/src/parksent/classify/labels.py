from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path


class AttitudeLabel(str, Enum):
    POSITIVE = "positive"
    NEUTRAL = "neutral"
    NEGATIVE = "negative"
    UNRELATED = "unrelated"

    @classmethod
    def parse(cls, raw) -> "AttitudeLabel":
        if isinstance(raw, cls):
            return raw
        try:
            return cls(str(raw).strip().lower())
        except ValueError:
            raise ValueError(f"unknown attitude label {raw!r}") from None

    def __str__(self) -> str:
        return self.value


ATTITUDES = tuple(AttitudeLabel)


@dataclass(frozen=True)
class LabeledExample:
    text: str
    label: AttitudeLabel
    split: str = "train"


def load_labeled_examples(path: str | Path) -> list[LabeledExample]:
    """Read ``text,label,split`` CSV rows."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            text = (row.get("text") or "").strip()
            if not text:
                raise ValueError(f"{path}: empty text in labeled examples")
            split = (row.get("split") or "train").strip().lower()
            if split not in ("train", "test"):
                raise ValueError(f"{path}: split must be train or test, got {split!r}")
            out.append(LabeledExample(text, AttitudeLabel.parse(row["label"]), split))
    return out
