"""End-to-end trials and coverage sweeps.

A trial draws a truth haplotype, simulates an observation table, decodes it
and counts parity errors. A sweep repeats trials over a grid of coverage
multipliers and locates the empirical 50% success crossing.

Seeds: trial t at grid point k uses
``SeedSequence(base_seed, spawn_key=(k, t)).generate_state(1, uint64)[0]``,
so every trial is independent of every other and of execution order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import binomtest

from .bounds import CoverageClassDescriptor, coverage_class_bounds, optimal_coverage
from .decode import decode, decode_random_ties, hamming_errors
from .model import ChannelParams, GapDistribution, Haplotype, ModelError, parities_of
from .reads import RNG_NAME, SimConfig, philox, simulate_counts

TRUTH_MODES = ("random", "all_zero", "adversarial_alternating")
TIE_BREAKS = ("lexicographic", "random")
SWEEP_CSV_COLUMNS = ("c", "successes", "trials", "p_hat", "wilson_lo", "wilson_hi")

_TAG_TRUTH = 3
_TAG_TIES = 4


def trial_seed(base_seed: int, point: int, trial: int) -> int:
    seq = np.random.SeedSequence(base_seed, spawn_key=(point, trial))
    return int(seq.generate_state(1, np.uint64)[0])


def make_truth(n: int, mode: str, seed: int) -> Haplotype:
    if mode == "random":
        return Haplotype(philox(seed, _TAG_TRUTH, 0).integers(0, 2, size=n))
    if mode == "all_zero":
        return Haplotype(np.zeros(n, dtype=np.uint8))
    if mode == "adversarial_alternating":
        # every adjacent parity is 1, the opposite of the tie-break default
        return Haplotype(np.arange(n) % 2)
    raise ModelError(f"unknown truth mode {mode!r}; expected one of {TRUTH_MODES}")


class TrialOutcome(NamedTuple):
    perfect: bool
    errors: int
    tie_flag: bool


def run_trial(
    n: int,
    channel: ChannelParams,
    gaps: GapDistribution,
    c: float,
    seed: int,
    truth_mode: str = "random",
    weights: np.ndarray | None = None,
    tie_break: str = "lexicographic",
) -> TrialOutcome:
    """Simulate, decode and score one instance.

    ``tie_break="random"`` resolves decoder ties uniformly, which makes the
    error distribution identical for every truth; the default sends ties to
    parity 0 and so favours the all-zero truth.
    """
    truth = make_truth(n, truth_mode, seed)
    cfg = SimConfig(n=n, channel=channel, coverage_c=c, gaps=gaps, weights=weights, seed=seed)
    table = simulate_counts(truth, cfg)
    if tie_break == "random":
        result = decode_random_ties(table, n, gaps.w, rng=philox(seed, _TAG_TIES, 0))
    elif tie_break == "lexicographic":
        result = decode(table, n, gaps.w)
    else:
        raise ModelError(f"unknown tie break {tie_break!r}; expected one of {TIE_BREAKS}")
    errors = hamming_errors(result.parities, parities_of(truth))
    return TrialOutcome(errors == 0, errors, result.tie_flag)


@dataclass(frozen=True)
class SweepSpec:
    n: int
    channel: ChannelParams
    gaps: GapDistribution
    c_grid: tuple[float, ...]
    trials_per_point: int
    seed: int = 0
    truth_mode: str = "random"
    weights: np.ndarray | None = field(default=None, compare=False)
    coverage_classes: CoverageClassDescriptor | None = None
    tie_break: str = "lexicographic"

    def __post_init__(self):
        grid = tuple(float(c) for c in self.c_grid)
        if not grid:
            raise ModelError("c_grid must be nonempty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ModelError("c_grid must be strictly ascending")
        if grid[0] < 0:
            raise ModelError("coverage multipliers must be nonnegative")
        if self.trials_per_point < 1:
            raise ModelError("need at least one trial per point")
        if self.truth_mode not in TRUTH_MODES:
            raise ModelError(f"unknown truth mode {self.truth_mode!r}")
        if self.tie_break not in TIE_BREAKS:
            raise ModelError(f"unknown tie break {self.tie_break!r}")
        object.__setattr__(self, "c_grid", grid)
        # fail early on bad weights rather than inside a worker
        SimConfig(n=self.n, channel=self.channel, coverage_c=0.0, gaps=self.gaps, weights=self.weights)


@dataclass(frozen=True)
class SweepRow:
    c: float
    successes: int
    trials: int
    p_hat: float
    wilson_lo: float
    wilson_hi: float
    mean_errors: float
    ties: int


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple[SweepRow, ...]
    threshold_estimate: float | None
    analytic_c_star: float | None

    @property
    def success(self) -> np.ndarray:
        return np.array([r.p_hat for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([repr(r.c), r.successes, r.trials, repr(r.p_hat), repr(r.wilson_lo), repr(r.wilson_hi)])
        return buf.getvalue()

    def summary(self) -> dict:
        s = self.spec
        return {
            "n": s.n,
            "p": s.channel.p,
            "gaps": list(s.gaps.probs),
            "weighted": s.weights is not None,
            "trials_per_point": s.trials_per_point,
            "seed": s.seed,
            "truth_mode": s.truth_mode,
            "tie_break": s.tie_break,
            "rng": RNG_NAME,
            "threshold_estimate": self.threshold_estimate,
            "analytic_c_star": self.analytic_c_star,
            "rows": [r.__dict__ for r in self.rows],
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(0.95, method="wilson")
    return float(ci.low), float(ci.high)


def crossing(c_grid: Sequence[float], success: Sequence[float], level: float = 0.5) -> float | None:
    """Linear interpolation of the first upward crossing of ``level``.

    None when the curve starts at or above ``level`` or never reaches it.
    """
    for k in range(1, len(c_grid)):
        if success[k - 1] < level <= success[k]:
            c0, c1 = c_grid[k - 1], c_grid[k]
            s0, s1 = success[k - 1], success[k]
            return c0 + (level - s0) * (c1 - c0) / (s1 - s0)
    return None


def _analytic(spec: SweepSpec) -> float | None:
    if spec.weights is None:
        return optimal_coverage(spec.channel, spec.gaps).value
    if spec.coverage_classes is not None:
        return coverage_class_bounds(spec.coverage_classes).sufficient(spec.channel)
    return None


def _trial_job(args) -> TrialOutcome:
    spec, point, trial = args
    return run_trial(
        spec.n,
        spec.channel,
        spec.gaps,
        spec.c_grid[point],
        trial_seed(spec.seed, point, trial),
        spec.truth_mode,
        spec.weights,
        spec.tie_break,
    )


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    tasks = [(spec, k, t) for k in range(len(spec.c_grid)) for t in range(spec.trials_per_point)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_trial_job, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outcomes = [_trial_job(task) for task in tasks]

    rows = []
    per = spec.trials_per_point
    for k, c in enumerate(spec.c_grid):
        chunk = outcomes[k * per : (k + 1) * per]
        successes = sum(o.perfect for o in chunk)
        lo, hi = wilson_interval(successes, per)
        rows.append(
            SweepRow(
                c=c,
                successes=successes,
                trials=per,
                p_hat=successes / per,
                wilson_lo=lo,
                wilson_hi=hi,
                mean_errors=sum(o.errors for o in chunk) / per,
                ties=sum(o.tie_flag for o in chunk),
            )
        )
    threshold = crossing(spec.c_grid, [r.p_hat for r in rows])
    return SweepResult(spec, tuple(rows), threshold, _analytic(spec))


def parse_grid(text: str) -> tuple[float, ...]:
    """``"lo:hi:step"`` (inclusive of hi) or a comma-separated list."""
    try:
        if ":" in text:
            lo, hi, step = (float(x) for x in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return tuple(round(lo + k * step, 12) for k in range(count))
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ModelError(f"cannot parse coverage grid {text!r}") from exc
