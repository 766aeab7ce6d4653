"""Generation-based fuzzer for operand pairs, plus the corpus file format.

Randomness comes from NumPy's PCG64. The master seed is split with
``SeedSequence.spawn`` into a data stream and a constants stream, so changing
``count`` never changes the drawn constant ``k``.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from mrrefine.errors import ConfigError, FormatError

RNG_ALGORITHM = "numpy.PCG64 via SeedSequence.spawn(2): stream 0 = data, stream 1 = constants"
CORPUS_HEADER = ("id", "a", "b")


class Mode(str, enum.Enum):
    RANDOM = "random"
    EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class FuzzConfig:
    count: int = 100
    domain_min: int = 0
    domain_max: int = 9
    seed: int = 0
    distribution: str = "uniform"
    mode: Mode = Mode.RANDOM

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.domain_min > self.domain_max:
            raise ConfigError(f"empty domain: min {self.domain_min} > max {self.domain_max}")
        if self.mode is Mode.RANDOM and self.count < 1:
            raise ConfigError(f"count must be >= 1 in random mode, got {self.count}")
        if self.distribution != "uniform":
            raise ConfigError(f"unsupported distribution {self.distribution!r}")


@dataclass(frozen=True)
class TestDatum:
    __test__ = False  # not a pytest class

    id: int
    a: int
    b: int


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    ss = np.random.SeedSequence(seed & (2**64 - 1))
    data_ss, const_ss = ss.spawn(2)
    return np.random.Generator(np.random.PCG64(data_ss)), np.random.Generator(np.random.PCG64(const_ss))


def generate(config: FuzzConfig) -> list[TestDatum]:
    lo, hi = config.domain_min, config.domain_max
    if config.mode is Mode.EXHAUSTIVE:
        values = range(lo, hi + 1)
        pairs = ((a, b) for a in values for b in values)
    else:
        data_rng, _ = _streams(config.seed)
        drawn = data_rng.integers(lo, hi, size=(config.count, 2), endpoint=True, dtype=np.int64)
        pairs = ((int(a), int(b)) for a, b in drawn)
    return [TestDatum(i, a, b) for i, (a, b) in enumerate(pairs)]


def draw_constant_k(seed: int, lo: int = 2, hi: int = 9) -> int:
    """One uniform draw in ``[lo, hi]`` from the constants stream of ``seed``."""
    if lo > hi:
        raise ConfigError(f"empty range for k: lo {lo} > hi {hi}")
    if lo < 1:
        raise ConfigError(f"k must be positive, lo={lo}")
    _, const_rng = _streams(seed)
    return int(const_rng.integers(lo, hi, endpoint=True))


def dumps_corpus(corpus: Iterable[TestDatum]) -> str:
    lines = [",".join(CORPUS_HEADER)]
    lines.extend(f"{d.id},{d.a},{d.b}" for d in corpus)
    return "\n".join(lines) + "\n"


def write_corpus(corpus: Iterable[TestDatum], path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_corpus(corpus))


def loads_corpus(text: str) -> list[TestDatum]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CORPUS_HEADER:
        raise FormatError(f"corpus header must be {','.join(CORPUS_HEADER)!r}, got {header!r}")
    corpus = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            i, a, b = (int(x) for x in row)
        except ValueError:
            raise FormatError(f"corpus line {lineno}: expected three integers, got {row!r}") from None
        if i != len(corpus):
            raise FormatError(f"corpus line {lineno}: ids must be dense from 0, got {i}")
        corpus.append(TestDatum(i, a, b))
    return corpus


def read_corpus(path: Union[str, Path]) -> list[TestDatum]:
    return loads_corpus(Path(path).read_text())
