"""Generative model for mate-pair observations under Poisson coverage.

Two modes are offered. ``poisson_counts`` draws the per-(start, span)
observation counts directly, with rate c * p_l * ln n per cell, which is the
form every threshold argument works with. ``read_list`` draws individual
reads (a Poisson number c * (n-1) * ln n of them, uniform start over the
valid range) and keeps their chromosome of origin and both end values; it
differs from the count mode only by O(w/n) edge effects.

Randomness comes from counter-based Philox streams keyed by
``SeedSequence(seed, spawn_key=(tag, span))`` so every span is drawn from
its own stream and results do not depend on evaluation order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, TextIO

import numpy as np

from .model import ChannelParams, GapDistribution, Haplotype, ModelError

RNG_NAME = "numpy.random.Philox keyed by SeedSequence(seed, spawn_key=(tag, span))"

_TAG_COUNTS = 1
_TAG_READS = 2


class SimConfigError(ModelError):
    pass


def philox(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class SimConfig:
    n: int
    channel: ChannelParams
    coverage_c: float
    gaps: GapDistribution = field(default_factory=GapDistribution.adjacent)
    weights: np.ndarray | None = None
    mode: str = "poisson_counts"
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise SimConfigError("need at least 2 SNPs")
        if not (self.coverage_c >= 0 and math.isfinite(self.coverage_c)):
            raise SimConfigError("coverage multiplier must be a nonnegative real")
        if self.mode not in ("poisson_counts", "read_list"):
            raise SimConfigError(f"unknown mode {self.mode!r}")
        if self.weights is not None:
            if not self.gaps.is_adjacent:
                raise SimConfigError("per-SNP weights are only defined for adjacent reads (W = 1)")
            q = np.asarray(self.weights, dtype=float)
            if q.shape != (self.n - 1,):
                raise SimConfigError(f"expected {self.n - 1} weights, got shape {q.shape}")
            if not (q > 0).all():
                raise SimConfigError("weights must be positive")
            if abs(q.sum() - (self.n - 1)) > 1e-9 * max(1, self.n - 1):
                raise SimConfigError(f"weights must sum to n-1 = {self.n - 1}, got {q.sum()!r}")
            q = q.copy()
            q.setflags(write=False)
            object.__setattr__(self, "weights", q)


def two_level_weights(n: int, fraction: float, t: float) -> np.ndarray:
    """Weights where the first ``fraction`` of adjacent pairs get q = t.

    The remaining pairs share the rest of the mass equally so the total stays
    n - 1.
    """
    if not 0 < fraction < 1 or not 0 < t:
        raise SimConfigError("need 0 < fraction < 1 and t > 0")
    m = n - 1
    k = int(round(fraction * m))
    if not 0 < k < m:
        raise SimConfigError("fraction leaves one of the two classes empty")
    q = np.empty(m)
    q[:k] = t
    q[k:] = (m - k * t) / (m - k)
    if q[k] <= 0:
        raise SimConfigError("t too large for the chosen fraction")
    return q


@dataclass(frozen=True, eq=False)
class ObservationTable:
    """Observation counts per (start i, span l).

    ``counts[l] = (zeros, ones)`` where both arrays have length n - l and
    entry i-1 counts observations of S_i xor S_{i+l}.
    """

    n: int
    counts: Mapping[int, tuple[np.ndarray, np.ndarray]]

    def __post_init__(self):
        if self.n < 2:
            raise ModelError("need at least 2 SNPs")
        frozen = {}
        for span, (zeros, ones) in sorted(self.counts.items()):
            span = int(span)
            if not 1 <= span < self.n:
                raise ModelError(f"span {span} out of range for n = {self.n}")
            zeros = np.asarray(zeros, dtype=np.int64).copy()
            ones = np.asarray(ones, dtype=np.int64).copy()
            if zeros.shape != (self.n - span,) or ones.shape != (self.n - span,):
                raise ModelError(f"span {span} needs {self.n - span} cells")
            if (zeros < 0).any() or (ones < 0).any():
                raise ModelError("counts must be nonnegative")
            zeros.setflags(write=False)
            ones.setflags(write=False)
            frozen[span] = (zeros, ones)
        object.__setattr__(self, "counts", frozen)

    @classmethod
    def empty(cls, n: int, spans: Iterable[int] = ()) -> ObservationTable:
        return cls(n, {l: (np.zeros(n - l, np.int64), np.zeros(n - l, np.int64)) for l in spans})

    @classmethod
    def from_cells(
        cls, n: int, cells: Iterable[tuple[int, int, int, int]], spans: Iterable[int] = ()
    ) -> ObservationTable:
        """Build from ``(i, span, zeros, ones)`` tuples with 1-based ``i``."""
        acc = {l: (np.zeros(n - l, np.int64), np.zeros(n - l, np.int64)) for l in spans}
        for i, span, z, o in cells:
            if span not in acc:
                if not 1 <= span < n:
                    raise ModelError(f"span {span} out of range for n = {n}")
                acc[span] = (np.zeros(n - span, np.int64), np.zeros(n - span, np.int64))
            if not 1 <= i <= n - span:
                raise ModelError(f"start {i} out of range for span {span}")
            acc[span][0][i - 1] += z
            acc[span][1][i - 1] += o
        return cls(n, acc)

    @property
    def spans(self) -> tuple[int, ...]:
        return tuple(self.counts)

    @property
    def max_span(self) -> int:
        return max(self.counts, default=0)

    def cell(self, i: int, span: int) -> tuple[int, int]:
        if span not in self.counts:
            return 0, 0
        zeros, ones = self.counts[span]
        return int(zeros[i - 1]), int(ones[i - 1])

    def total(self) -> int:
        return int(sum(z.sum() + o.sum() for z, o in self.counts.values()))

    def is_empty(self) -> bool:
        return self.total() == 0

    def iter_cells(self):
        """Yield ``(i, span, zeros, ones)`` for every cell with observations."""
        for span, (zeros, ones) in self.counts.items():
            for idx in np.flatnonzero(zeros + ones):
                yield int(idx) + 1, span, int(zeros[idx]), int(ones[idx])

    def to_json_dict(self) -> dict:
        spans = []
        for span, (zeros, ones) in self.counts.items():
            nz = np.flatnonzero(zeros + ones)
            cells = [{"i": int(k) + 1, "zeros": int(zeros[k]), "ones": int(ones[k])} for k in nz]
            spans.append({"span": span, "cells": cells})
        return {"n": self.n, "spans": spans}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> ObservationTable:
        try:
            n = int(data["n"])
            cells, spans = [], []
            for entry in data.get("spans", []):
                span = int(entry["span"])
                spans.append(span)
                for c in entry.get("cells", []):
                    cells.append((int(c["i"]), span, int(c.get("zeros", 0)), int(c.get("ones", 0))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed observation table: {exc}") from exc
        return cls.from_cells(n, cells, spans)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ObservationTable):
            return NotImplemented
        if self.n != other.n or self.spans != other.spans:
            return False
        return all(
            np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
            for a, b in zip(self.counts.values(), other.counts.values())
        )


class ReadRecord(NamedTuple):
    start: int
    span: int
    end1: int
    end2: int
    chromosome: int

    @property
    def parity(self) -> int:
        return self.end1 ^ self.end2


def simulate_counts(truth: Haplotype, cfg: SimConfig) -> ObservationTable:
    if cfg.mode != "poisson_counts":
        raise SimConfigError("simulate_counts needs mode 'poisson_counts'")
    if truth.n != cfg.n:
        raise SimConfigError(f"haplotype has {truth.n} SNPs, config says {cfg.n}")
    n, s = cfg.n, truth.snps
    log_n = math.log(n)
    th = cfg.channel.theta
    counts = {}
    for span in cfg.gaps.support:
        m = n - span
        if m < 1:
            continue
        if cfg.weights is not None:
            rate = cfg.coverage_c * cfg.weights * log_n
        else:
            rate = np.full(m, cfg.coverage_c * cfg.gaps.probs[span - 1] * log_n)
        rng = philox(cfg.seed, _TAG_COUNTS, span)
        total = rng.poisson(rate)
        flipped = rng.binomial(total, th)
        true_parity = (s[:m] ^ s[span:]).astype(bool)
        ones = np.where(true_parity, total - flipped, flipped)
        counts[span] = (total - ones, ones)
    return ObservationTable(n, counts)


def simulate_reads(truth: Haplotype, cfg: SimConfig) -> list[ReadRecord]:
    if cfg.mode != "read_list":
        raise SimConfigError("simulate_reads needs mode 'read_list'")
    if truth.n != cfg.n:
        raise SimConfigError(f"haplotype has {truth.n} SNPs, config says {cfg.n}")
    n, s = cfg.n, truth.snps
    rng = philox(cfg.seed, _TAG_READS, 0)
    m = rng.poisson(cfg.coverage_c * (n - 1) * math.log(n))
    support = np.array([l for l in cfg.gaps.support if l < n])
    if m == 0 or support.size == 0:
        return []
    probs = np.array([cfg.gaps.probs[l - 1] for l in support])
    span = rng.choice(support, size=m, p=probs / probs.sum())
    if cfg.weights is not None:
        start = 1 + rng.choice(n - 1, size=m, p=cfg.weights / cfg.weights.sum())
    else:
        start = 1 + np.floor(rng.random(m) * (n - span)).astype(np.int64)
    chromosome = 1 + rng.integers(0, 2, size=m)
    flip = rng.random((2, m)) < cfg.channel.p
    hap = chromosome == 2
    end1 = s[start - 1] ^ hap ^ flip[0]
    end2 = s[start + span - 1] ^ hap ^ flip[1]
    return [
        ReadRecord(int(a), int(b), int(c), int(d), int(e))
        for a, b, c, d, e in zip(start, span, end1, end2, chromosome)
    ]


def aggregate(reads: Iterable[ReadRecord], n: int, spans: Iterable[int] = ()) -> ObservationTable:
    """Reduce reads to per-cell parity counts; chromosome labels are discarded."""
    reads = list(reads)
    acc = {l: (np.zeros(n - l, np.int64), np.zeros(n - l, np.int64)) for l in spans}
    if reads:
        arr = np.array([(r.start, r.span, r.end1 ^ r.end2) for r in reads], dtype=np.int64)
        for span in np.unique(arr[:, 1]):
            span = int(span)
            if not 1 <= span < n:
                raise ModelError(f"read span {span} out of range for n = {n}")
            rows = arr[arr[:, 1] == span]
            if (rows[:, 0] < 1).any() or (rows[:, 0] > n - span).any():
                raise ModelError(f"read start out of range for span {span}")
            zeros, ones = acc.setdefault(span, (np.zeros(n - span, np.int64), np.zeros(n - span, np.int64)))
            par = rows[:, 2].astype(bool)
            np.add.at(ones, rows[par, 0] - 1, 1)
            np.add.at(zeros, rows[~par, 0] - 1, 1)
    return ObservationTable(n, acc)


READ_CSV_HEADER = ("start", "span", "end1", "end2", "chromosome")


def write_reads_csv(reads: Iterable[ReadRecord], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(READ_CSV_HEADER)
    writer.writerows(reads)


def read_reads_csv(fh: TextIO) -> list[ReadRecord]:
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != READ_CSV_HEADER:
        raise ModelError(f"expected CSV header {','.join(READ_CSV_HEADER)}")
    return [ReadRecord(*(int(row[k]) for k in READ_CSV_HEADER)) for row in reader]
