"""Domain types shared by the simulator, decoders and analytics.

SNP alleles are bits with 1 = major allele and 0 = minor allele. Every
position is assumed heterozygous, so only one chromosome is stored and the
homologous one is its bitwise complement. All arithmetic on alleles is XOR,
so nothing downstream depends on which allele is called 1.

Indices are 1-based in documentation and serialized output; arrays are
0-based internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class ModelError(ValueError):
    """Invalid domain value (bad probability, malformed bit string, ...)."""


def _as_bits(values: Iterable[int] | str | np.ndarray, name: str) -> np.ndarray:
    if isinstance(values, str):
        if values.strip("01"):
            raise ModelError(f"{name} must contain only '0' and '1'")
        arr = np.frombuffer(values.encode(), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(values)
        if arr.ndim != 1:
            raise ModelError(f"{name} must be one-dimensional")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ModelError(f"{name} entries must be 0 or 1")
    arr = arr.astype(np.uint8, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Haplotype:
    """Alleles S_1..S_n along one chromosome."""

    snps: np.ndarray

    def __init__(self, snps: Iterable[int] | str | np.ndarray):
        bits = _as_bits(snps, "snps")
        if bits.size < 2:
            raise ModelError("a haplotype needs at least 2 SNPs")
        object.__setattr__(self, "snps", bits)

    @property
    def n(self) -> int:
        return int(self.snps.size)

    def complement(self) -> Haplotype:
        return Haplotype(1 - self.snps)

    def to_str(self) -> str:
        return "".join("01"[b] for b in self.snps)

    @classmethod
    def from_str(cls, text: str) -> Haplotype:
        return cls(text.strip())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Haplotype):
            return NotImplemented
        return np.array_equal(self.snps, other.snps)

    def __hash__(self) -> int:
        return hash(self.snps.tobytes())

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        text = self.to_str()
        if len(text) > 40:
            text = text[:37] + "..."
        return f"Haplotype('{text}')"


@dataclass(frozen=True, eq=False)
class ParityVector:
    """Adjacent parities L_i = S_i xor S_{i+1}, i = 1..n-1."""

    parities: np.ndarray

    def __init__(self, parities: Iterable[int] | str | np.ndarray):
        object.__setattr__(self, "parities", _as_bits(parities, "parities"))

    @property
    def n_snps(self) -> int:
        return int(self.parities.size) + 1

    def to_str(self) -> str:
        return "".join("01"[b] for b in self.parities)

    @classmethod
    def from_str(cls, text: str) -> ParityVector:
        return cls(text.strip())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParityVector):
            return NotImplemented
        return np.array_equal(self.parities, other.parities)

    def __hash__(self) -> int:
        return hash(self.parities.tobytes())

    def __len__(self) -> int:
        return int(self.parities.size)

    def __repr__(self) -> str:
        text = self.to_str()
        if len(text) > 40:
            text = text[:37] + "..."
        return f"ParityVector('{text}')"


def parities_of(h: Haplotype) -> ParityVector:
    return ParityVector(h.snps[:-1] ^ h.snps[1:])


def haplotype_from_parities(l: ParityVector, first_bit: int = 0) -> Haplotype:
    """Invert :func:`parities_of`, fixing S_1 = ``first_bit``.

    A parity vector only determines the haplotype up to complementation;
    ``first_bit`` picks one of the two.
    """
    if first_bit not in (0, 1):
        raise ModelError("first_bit must be 0 or 1")
    snps = np.empty(l.n_snps, dtype=np.uint8)
    snps[0] = first_bit
    snps[1:] = first_bit ^ np.bitwise_xor.accumulate(l.parities)
    return Haplotype(snps)


def theta(p: float) -> float:
    """Probability that a read reports the wrong parity when each end errs w.p. ``p``."""
    if not 0.0 <= p < 0.5:
        raise ModelError(f"per-end error probability must lie in [0, 0.5), got {p!r}")
    return 2.0 * p * (1.0 - p)


def relative_entropy_half(th: float) -> float:
    """D(0.5 || th) in nats; ``math.inf`` at th = 0."""
    if not 0.0 <= th < 0.5:
        raise ModelError(f"parity flip probability must lie in [0, 0.5), got {th!r}")
    if th == 0.0:
        return math.inf
    return 0.5 * math.log(0.5 / th) + 0.5 * math.log(0.5 / (1.0 - th))


@dataclass(frozen=True)
class ChannelParams:
    p: float

    def __post_init__(self):
        theta(self.p)

    @property
    def theta(self) -> float:
        return theta(self.p)

    @property
    def d_nats(self) -> float:
        if self.p < 0.25:
            return relative_entropy_half(self.theta)
        # near p = 1/2, theta rounds to 1/2; use 1 - 2 theta = (1 - 2p)^2 instead
        return -0.5 * math.log1p(-((1.0 - 2.0 * self.p) ** 4))

    @property
    def noiseless(self) -> bool:
        return self.p == 0.0

    @property
    def exponent_factor(self) -> float:
        """1 - exp(-D(theta)); equals 1 on the noiseless channel."""
        d = self.d_nats
        return 1.0 if math.isinf(d) else -math.expm1(-d)


@dataclass(frozen=True)
class GapDistribution:
    """Distribution of the SNP separation W of a mate-pair, P(W = l) = probs[l-1]."""

    probs: tuple[float, ...]

    def __init__(self, probs: Sequence[float]):
        probs = tuple(float(x) for x in probs)
        if not probs:
            raise ModelError("gap distribution needs at least one entry")
        if any(not math.isfinite(x) or x < 0 for x in probs):
            raise ModelError("gap probabilities must be finite and nonnegative")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ModelError(f"gap probabilities must sum to 1, got {math.fsum(probs)!r}")
        # trailing zeros carry no information and would only inflate the trellis
        while probs[-1] == 0.0:
            probs = probs[:-1]
        object.__setattr__(self, "probs", probs)

    @classmethod
    def adjacent(cls) -> GapDistribution:
        return cls((1.0,))

    @classmethod
    def uniform(cls, w: int) -> GapDistribution:
        if w < 1:
            raise ModelError("w must be positive")
        return cls([1.0 / w] * w)

    @classmethod
    def parse(cls, text: str) -> GapDistribution:
        """Parse ``"0.5,0.5"``; entries are renormalized if they sum within 1e-6 of 1."""
        try:
            values = [float(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise ModelError(f"cannot parse gap distribution {text!r}") from exc
        total = math.fsum(values)
        if values and abs(total - 1.0) <= 1e-6:
            values = [x / total for x in values]
        return cls(values)

    @property
    def w(self) -> int:
        return len(self.probs)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, x in enumerate(self.probs) if x > 0)

    @property
    def is_adjacent(self) -> bool:
        return self.support == (1,)

    def mean_gap(self) -> float:
        return math.fsum((i + 1) * x for i, x in enumerate(self.probs))

    def to_str(self) -> str:
        return ",".join(repr(x) for x in self.probs)
