"""Bit-true reference model of Tsetlin Machine inference.

Literal ``2m`` is feature ``f[m]`` and literal ``2m+1`` is its complement.
An exclude bit of 1 removes the literal from the clause conjunction.
Clauses ``0 .. C/2-1`` vote positively, the rest negatively; a tie counts
as in-class.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class SizeMismatch(ValueError):
    pass


class Outcome(str, enum.Enum):
    GREATER = "GREATER"
    EQUAL = "EQUAL"
    LESS = "LESS"

    def mirrored(self) -> "Outcome":
        return {Outcome.GREATER: Outcome.LESS, Outcome.LESS: Outcome.GREATER}.get(self, self)


class Decision(str, enum.Enum):
    IN_CLASS = "IN_CLASS"
    NOT_IN_CLASS = "NOT_IN_CLASS"


POLARITY_FIRST_HALF = "first-half-positive"


@dataclass(frozen=True)
class TmConfig:
    F: int
    C: int
    exclude: np.ndarray
    """``(C, 2F)`` array of 0/1; row ``j`` is clause ``j``."""
    polarity: str = POLARITY_FIRST_HALF

    def __post_init__(self):
        if self.F < 1:
            raise ValueError("F must be >= 1")
        if self.C < 2 or self.C % 2:
            raise ValueError("C must be even and >= 2")
        if self.polarity != POLARITY_FIRST_HALF:
            raise ValueError(f"unsupported polarity convention {self.polarity!r}")
        ex = np.asarray(self.exclude, dtype=np.uint8)
        if ex.shape != (self.C, 2 * self.F):
            raise SizeMismatch(f"exclude must be {self.C}x{2 * self.F}, got {ex.shape}")
        if ex.size and ex.max() > 1:
            raise ValueError("exclude bits must be 0 or 1")
        ex.setflags(write=False)
        object.__setattr__(self, "exclude", ex)

    @property
    def half(self) -> int:
        return self.C // 2

    def clause_polarity(self, j: int) -> int:
        return 1 if j < self.half else -1

    def __eq__(self, other):
        if not isinstance(other, TmConfig):
            return NotImplemented
        return (self.F, self.C, self.polarity) == (other.F, other.C, other.polarity) and \
            np.array_equal(self.exclude, other.exclude)

    __hash__ = None

    @classmethod
    def all_excluded(cls, F: int, C: int) -> "TmConfig":
        return cls(F, C, np.ones((C, 2 * F), dtype=np.uint8))

    @classmethod
    def random(cls, F: int, C: int, rng: np.random.Generator, p_exclude: float = 0.5) -> "TmConfig":
        return cls(F, C, (rng.random((C, 2 * F)) < p_exclude).astype(np.uint8))

    # -- JSON --------------------------------------------------------------
    def to_dict(self) -> dict:
        return {"F": self.F, "C": self.C,
                "exclude": [bits_to_hex(row) for row in self.exclude],
                "polarity": self.polarity}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data) -> "TmConfig":
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        extra = set(data) - {"F", "C", "exclude", "polarity"}
        if extra:
            raise ValueError(f"unknown config field(s): {sorted(extra)}")
        try:
            F, C = int(data["F"]), int(data["C"])
            rows = data["exclude"]
        except KeyError as e:
            raise ValueError(f"missing config field {e}") from None
        if len(rows) != C:
            raise SizeMismatch(f"expected {C} exclude rows, got {len(rows)}")
        ex = np.array([hex_to_bits(r, 2 * F) for r in rows], dtype=np.uint8).reshape(C, 2 * F)
        return cls(F, C, ex, data.get("polarity", POLARITY_FIRST_HALF))

    @classmethod
    def from_json(cls, text: str) -> "TmConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "TmConfig":
        return cls.from_json(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(indent=2) + "\n")


def bits_to_hex(bits: Sequence[int]) -> str:
    """Hex string with bit ``i`` of the sequence as bit ``i`` of the integer."""
    value = 0
    for i, b in enumerate(bits):
        value |= int(b) << i
    return format(value, "x")


def hex_to_bits(text: str, n: int) -> list[int]:
    value = int(str(text).strip(), 16)
    if value >> n:
        raise SizeMismatch(f"hex value {text!r} does not fit in {n} bits")
    return [(value >> i) & 1 for i in range(n)]


@dataclass(frozen=True)
class InferenceResult:
    clause_bits: tuple[int, ...]
    pos_count: int
    neg_count: int
    outcome: Outcome

    @property
    def decision(self) -> Decision:
        return Decision.NOT_IN_CLASS if self.outcome is Outcome.LESS else Decision.IN_CLASS


def clause_eval(f: Sequence[int], exclude_row: Sequence[int]) -> int:
    if len(exclude_row) != 2 * len(f):
        raise SizeMismatch(f"exclude row needs {2 * len(f)} bits, got {len(exclude_row)}")
    for m, fm in enumerate(f):
        if not (exclude_row[2 * m] or fm):
            return 0
        if not (exclude_row[2 * m + 1] or not fm):
            return 0
    return 1


def popcount_oracle(bits: Iterable[int]) -> int:
    return sum(1 for b in bits if b)


def compare_oracle(a: int, b: int) -> Outcome:
    if a > b:
        return Outcome.GREATER
    return Outcome.EQUAL if a == b else Outcome.LESS


def infer(f: Sequence[int], config: TmConfig) -> InferenceResult:
    if len(f) != config.F:
        raise SizeMismatch(f"expected {config.F} features, got {len(f)}")
    bits = tuple(clause_eval(f, row) for row in config.exclude.tolist())
    pos = popcount_oracle(bits[:config.half])
    neg = popcount_oracle(bits[config.half:])
    return InferenceResult(bits, pos, neg, compare_oracle(pos, neg))


def infer_batch(features: np.ndarray, exclude: np.ndarray) -> np.ndarray:
    """Vectorised outcome codes (0 GREATER, 1 EQUAL, 2 LESS).

    ``features`` is ``(N, F)``; ``exclude`` is ``(C, 2F)`` or ``(N, C, 2F)``.
    """
    f = np.asarray(features, dtype=bool)
    ex = np.asarray(exclude, dtype=bool)
    lit = np.empty(f.shape[:1] + (2 * f.shape[1],), dtype=bool)
    lit[:, 0::2], lit[:, 1::2] = f, ~f
    if ex.ndim == 2:
        ex = ex[None]
    clauses = np.all(ex | lit[:, None, :], axis=2)
    half = clauses.shape[1] // 2
    pos, neg = clauses[:, :half].sum(1), clauses[:, half:].sum(1)
    return np.where(pos > neg, 0, np.where(pos == neg, 1, 2))


OUTCOME_CODES = (Outcome.GREATER, Outcome.EQUAL, Outcome.LESS)


# -- stimulus files ---------------------------------------------------------

def read_stimulus(path, F: int) -> list[list[int]]:
    """One hex feature vector per line (bit ``m`` = feature ``m``)."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(hex_to_bits(line, F))
    return out


def write_stimulus(path, vectors: Iterable[Sequence[int]]) -> None:
    Path(path).write_text("".join(bits_to_hex(v) + "\n" for v in vectors))
