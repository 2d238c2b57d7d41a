"""Maximum-likelihood reconstruction of the parity vector.

Every observation flips independently with the same probability theta < 1/2,
so maximizing the likelihood is the same as minimizing the number of
observations that disagree with the hypothesized parities. All decoders here
minimize that integer count ("score").

Ties are broken toward the lexicographically smallest parity vector (parity
0 preferred at each position). ``tie_flag`` is set exactly when the minimizer
is not unique.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .codes import CatastrophicCodeError, CodeSpec, MAX_TRELLIS_W, build_trellis, is_catastrophic
from .model import Haplotype, ModelError, ParityVector, haplotype_from_parities
from .reads import ObservationTable

BRUTE_FORCE_MAX_N = 22


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class DecodeResult:
    parities: ParityVector
    score: int
    tie_flag: bool
    disconnected: tuple[int, ...] = ()
    haplotype_pair: tuple[Haplotype, Haplotype] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        pair = (haplotype_from_parities(self.parities, 0), haplotype_from_parities(self.parities, 1))
        object.__setattr__(self, "haplotype_pair", pair)

    @property
    def warnings(self) -> list[str]:
        if not self.disconnected:
            return []
        return [
            "no observation covers parity position(s) "
            + _format_ranges(self.disconnected)
            + "; the haplotype is phased independently on each side"
        ]

    def to_json_dict(self) -> dict:
        return {
            "parities": self.parities.to_str(),
            "score": self.score,
            "tie_flag": self.tie_flag,
            "warnings": self.warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def _format_ranges(positions) -> str:
    parts = []
    start = prev = positions[0]
    for x in list(positions[1:]) + [None]:
        if x is not None and x == prev + 1:
            prev = x
            continue
        parts.append(str(start) if start == prev else f"{start}-{prev}")
        if x is not None:
            start = prev = x
    return ", ".join(parts)


def hamming_errors(decoded: ParityVector, truth: ParityVector) -> int:
    if len(decoded) != len(truth):
        raise ModelError(f"length mismatch: {len(decoded)} vs {len(truth)}")
    return int(np.count_nonzero(decoded.parities != truth.parities))


def _check_n(table: ObservationTable, n: int) -> None:
    if n < 2:
        raise DecodeError("need at least 2 SNPs")
    if table.n != n:
        raise DecodeError(f"table is for n = {table.n}, decoder called with n = {n}")


def uncovered_positions(table: ObservationTable) -> tuple[int, ...]:
    """Parity positions (1-based) not spanned by any observation.

    A read with start i and span l spans L_i..L_{i+l-1}; an uncovered L_j is a
    cut separating SNPs <= j from SNPs > j.
    """
    n = table.n
    diff = np.zeros(n + 1, dtype=np.int64)
    for span, (zeros, ones) in table.counts.items():
        seen = (zeros + ones) > 0
        diff[: n - span] += seen
        diff[span : n] -= seen
    cover = np.cumsum(diff)[: n - 1]
    return tuple(int(j) + 1 for j in np.flatnonzero(cover == 0))


def decode_adjacent(table: ObservationTable, n: int) -> DecodeResult:
    """Per-position majority vote; only span-1 observations are allowed."""
    _check_n(table, n)
    if any(span != 1 for span in table.spans):
        raise DecodeError("decode_adjacent only accepts span-1 observations")
    if 1 in table.counts:
        zeros, ones = table.counts[1]
    else:
        zeros = ones = np.zeros(n - 1, np.int64)
    decided = (ones > zeros).astype(np.uint8)
    score = int(np.minimum(zeros, ones).sum())
    tie = bool((zeros == ones).any())
    return DecodeResult(ParityVector(decided), score, tie, uncovered_positions(table))


def _branch_costs(table: ObservationTable, n: int, w: int, trellis) -> np.ndarray:
    """cost[j-1, s, b]: disagreements charged when L_j = b is appended to state s.

    An observation (i, l) is charged at step j = i + l - 1, where its
    hypothesized parity L_i xor ... xor L_j is the stream-l output of the
    transition.
    """
    num_states = trellis.num_states
    cost = np.zeros((n - 1, num_states, 2), dtype=np.int64)
    for span, (zeros, ones) in table.counts.items():
        out = trellis.outputs[:, :, span - 1].astype(bool)
        # steps j = span .. n-1 receive cells i = 1 .. n-span
        cost[span - 1 :] += np.where(out[None], zeros[:, None, None], ones[:, None, None])
    return cost


def decode_viterbi(table: ObservationTable, n: int, w: int | None = None) -> DecodeResult:
    """Exact ML decode over the 2^(w-1)-state trellis of g_w.

    The state before the first step is free (the parity sequence cannot be
    zero-padded) and so is the final state. The recursion runs from the last
    step backwards so that the traceback walks forward from L_1 and can pick
    the lexicographically smallest optimal sequence.
    """
    _check_n(table, n)
    if w is None:
        w = max(table.max_span, 1)
    if table.max_span > w:
        raise DecodeError(f"table has span {table.max_span} > trellis memory w = {w}")
    if w > MAX_TRELLIS_W:
        raise DecodeError(f"w = {w} exceeds the supported trellis size ({MAX_TRELLIS_W})")
    if table.spans and is_catastrophic(CodeSpec.from_support(table.spans, w)):
        raise CatastrophicCodeError(
            f"observed spans {table.spans} give a catastrophic code; reconstruction impossible"
        )
    trellis = build_trellis(w)
    next_state = trellis.next_state
    cost = _branch_costs(table, n, w, trellis)

    steps = n - 1
    to_go = np.zeros((steps + 1, trellis.num_states), dtype=np.int64)
    for t in range(steps - 1, -1, -1):
        to_go[t] = (cost[t] + to_go[t + 1][next_state]).min(axis=1)

    # cost[0] ignores the (fictitious) state bits, so start from state 0
    state = 0
    decided = np.empty(steps, dtype=np.uint8)
    tie = False
    for t in range(steps):
        via0 = cost[t, state, 0] + to_go[t + 1, next_state[state, 0]]
        via1 = cost[t, state, 1] + to_go[t + 1, next_state[state, 1]]
        b = 0 if via0 <= via1 else 1
        tie |= via0 == via1
        decided[t] = b
        state = next_state[state, b]
    return DecodeResult(ParityVector(decided), int(to_go[0, 0]), bool(tie), uncovered_positions(table))


def decode(table: ObservationTable, n: int, w: int | None = None) -> DecodeResult:
    """Majority vote for adjacent-only tables, trellis decoding otherwise."""
    if all(span == 1 for span in table.spans) and (w is None or w == 1):
        return decode_adjacent(table, n)
    return decode_viterbi(table, n, w)


def brute_force_ml(table: ObservationTable, n: int) -> DecodeResult:
    """Enumerate all 2^(n-1) parity vectors; reference oracle for small n."""
    _check_n(table, n)
    if n > BRUTE_FORCE_MAX_N:
        raise DecodeError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}")
    m = n - 1
    # candidate x encodes L_1 as its most significant bit: numeric order = lexicographic
    x = np.arange(1 << m, dtype=np.int64)
    bits = ((x[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(np.uint8)
    snps = np.zeros((x.size, n), dtype=np.uint8)
    snps[:, 1:] = np.bitwise_xor.accumulate(bits, axis=1)
    score = np.zeros(x.size, dtype=np.int64)
    for i, span, zeros, ones in table.iter_cells():
        parity = snps[:, i - 1] ^ snps[:, i - 1 + span]
        score += np.where(parity == 1, zeros, ones)
    best = int(score.min())
    winners = np.flatnonzero(score == best)
    return DecodeResult(
        ParityVector(bits[winners[0]]), best, bool(winners.size > 1), uncovered_positions(table)
    )


def shift_table(table: ObservationTable, mask: ParityVector) -> ObservationTable:
    """Relabel observations as if the truth were XORed with ``mask``.

    A cell (i, l) observes L_i xor ... xor L_{i+l-1}; where the mask has odd
    parity over that window its zero and one counts trade places.
    """
    if len(mask) != table.n - 1:
        raise ModelError("mask length must be n - 1")
    s = haplotype_from_parities(mask, 0).snps
    shifted = {}
    for span, (zeros, ones) in table.counts.items():
        flip = (s[: table.n - span] ^ s[span:]).astype(bool)
        shifted[span] = (np.where(flip, ones, zeros), np.where(flip, zeros, ones))
    return ObservationTable(table.n, shifted)


def decode_random_ties(
    table: ObservationTable, n: int, w: int | None = None, *, rng: np.random.Generator
) -> DecodeResult:
    """ML decode with ties resolved uniformly instead of toward zeros.

    Decoding a table shifted by a uniform random mask and shifting the answer
    back is still exactly ML, but the error pattern no longer depends on the
    true parities.
    """
    mask = ParityVector(rng.integers(0, 2, size=n - 1))
    result = decode(shift_table(table, mask), n, w)
    return DecodeResult(
        ParityVector(result.parities.parities ^ mask.parities),
        result.score,
        result.tie_flag,
        result.disconnected,
    )
