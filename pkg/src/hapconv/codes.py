"""Structure of the rate-1/w code family generated by g_w(z).

Stream l of the code has generator v_l(z) = 1 + z + ... + z^(l-1): its output at
step j is the XOR of the last l message bits, i.e. the skip-(l-1) parity
S_{j-l+1} xor S_{j+1}. Only the streams inside the support of the gap
distribution are observed, and each observed stream is weighted by p_l.
"""

from __future__ import annotations

import heapq
import io
from dataclasses import dataclass
from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

from .gf2 import PolyF2, clmul, gcd_f2
from .model import GapDistribution

MAX_TRELLIS_W = 16


class CatastrophicCodeError(ValueError):
    """The observed streams share a nontrivial common factor: reconstruction is impossible."""


@dataclass(frozen=True)
class CodeSpec:
    w: int
    stream_weights: tuple[float, ...]

    def __init__(self, w: int, stream_weights: Sequence[float] | None = None):
        if w < 1:
            raise ValueError("w must be positive")
        if stream_weights is None:
            stream_weights = [1.0 / w] * w
        stream_weights = tuple(float(x) for x in stream_weights)
        if len(stream_weights) != w:
            raise ValueError(f"expected {w} stream weights, got {len(stream_weights)}")
        if any(x < 0 for x in stream_weights):
            raise ValueError("stream weights must be nonnegative")
        if not any(x > 0 for x in stream_weights):
            raise ValueError("stream weights have empty support")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "stream_weights", stream_weights)

    @classmethod
    def from_gaps(cls, gaps: GapDistribution) -> CodeSpec:
        return cls(gaps.w, gaps.probs)

    @classmethod
    def from_support(cls, support: Sequence[int], w: int | None = None) -> CodeSpec:
        """Uniform weights on ``support`` (1-based stream indices)."""
        support = sorted(set(support))
        if not support:
            raise ValueError("stream weights have empty support")
        w = w or support[-1]
        weights = [0.0] * w
        for l in support:
            weights[l - 1] = 1.0 / len(support)
        return cls(w, weights)

    @property
    def generators(self) -> tuple[PolyF2, ...]:
        return tuple(PolyF2.repunit(l) for l in range(1, self.w + 1))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(l + 1 for l, x in enumerate(self.stream_weights) if x > 0)

    def mean_gap(self) -> float:
        return sum((l + 1) * x for l, x in enumerate(self.stream_weights))


@dataclass(frozen=True)
class Trellis:
    """State diagram of g_w: the state holds the last w-1 message bits.

    Bit 0 of a state is the most recent bit. ``outputs[s, b, l-1]`` is the bit
    emitted on stream l when input ``b`` arrives in state ``s``.
    """

    w: int
    next_state: np.ndarray
    outputs: np.ndarray

    @property
    def num_states(self) -> int:
        return int(self.next_state.shape[0])


def build_trellis(w: int) -> Trellis:
    if not 1 <= w <= MAX_TRELLIS_W:
        raise ValueError(f"trellis memory w must lie in [1, {MAX_TRELLIS_W}]")
    num_states = 1 << (w - 1)
    states = np.arange(num_states)
    inputs = np.arange(2)
    next_state = ((states[:, None] << 1) | inputs[None, :]) & (num_states - 1)
    outputs = np.empty((num_states, 2, w), dtype=np.uint8)
    for l in range(1, w + 1):
        history = states & ((1 << (l - 1)) - 1)
        hist_parity = np.array([bin(int(h)).count("1") & 1 for h in history], dtype=np.uint8)
        outputs[:, :, l - 1] = hist_parity[:, None] ^ inputs[None, :]
    next_state.setflags(write=False)
    outputs.setflags(write=False)
    return Trellis(w, next_state, outputs)


def is_catastrophic(spec: CodeSpec) -> bool:
    gens = [PolyF2.repunit(l) for l in spec.support]
    return reduce(gcd_f2, gens).bits != 1


def _min_codeword_weight(spec: CodeSpec, stream_costs: np.ndarray) -> float:
    if is_catastrophic(spec):
        raise CatastrophicCodeError(
            f"generators on support {spec.support} share a common factor; "
            "reconstruction impossible"
        )
    trellis = build_trellis(spec.w)
    edge_cost = trellis.outputs.astype(float) @ stream_costs
    # diverge from the zero state with input 1, stop at the first remerge
    start = int(trellis.next_state[0, 1])
    best = {start: edge_cost[0, 1]}
    heap = [(edge_cost[0, 1], start)]
    done = set()
    while heap:
        dist, s = heapq.heappop(heap)
        if s == 0:
            return float(dist)
        if s in done:
            continue
        done.add(s)
        for b in (0, 1):
            t = int(trellis.next_state[s, b])
            nd = dist + edge_cost[s, b]
            if nd < best.get(t, np.inf):
                best[t] = nd
                heapq.heappush(heap, (nd, t))
    raise AssertionError("zero state unreachable; the trellis is malformed")


def free_distance(spec: CodeSpec) -> int:
    """Minimum Hamming weight of a nonzero codeword on the observed streams."""
    costs = np.array([1.0 if x > 0 else 0.0 for x in spec.stream_weights])
    return int(round(_min_codeword_weight(spec, costs)))


def averaged_free_distance(spec: CodeSpec) -> float:
    """Minimum over nonzero codewords of sum_l p_l * wt(stream l)."""
    return _min_codeword_weight(spec, np.asarray(spec.stream_weights, dtype=float))


class CodewordWeights(NamedTuple):
    streams: tuple[int, ...]
    averaged: float


def codeword_weights(spec: CodeSpec, message: PolyF2) -> CodewordWeights:
    """Encode ``message`` through every generator of ``spec``."""
    streams = tuple(bin(clmul(message.bits, g.bits)).count("1") for g in spec.generators)
    averaged = sum(p * wt for p, wt in zip(spec.stream_weights, streams))
    return CodewordWeights(streams, averaged)


def v_divisibility_table(max_r: int) -> np.ndarray:
    """Boolean matrix whose entry [r, s] says whether v_r(z) divides v_s(z).

    Rows and columns are indexed 1..max_r directly; index 0 is unused.
    """
    if not 2 <= max_r <= 64:
        raise ValueError("max must lie in [2, 64]")
    v = [None] + [PolyF2.repunit(r) for r in range(1, max_r + 1)]
    table = np.zeros((max_r + 1, max_r + 1), dtype=bool)
    for r in range(1, max_r + 1):
        for s in range(1, max_r + 1):
            table[r, s] = v[r].divides(v[s])
    return table


def divisibility_csv(table: np.ndarray) -> str:
    buf = io.StringIO()
    size = table.shape[0] - 1
    buf.write("r," + ",".join(str(s) for s in range(1, size + 1)) + "\n")
    for r in range(1, size + 1):
        buf.write(f"{r}," + ",".join("1" if x else "0" for x in table[r, 1:]) + "\n")
    return buf.getvalue()
