"""Closed-form coverage thresholds and error-probability bounds.

Coverage multipliers ``c`` are in units of n ln n reads. Bounds that can go
negative at small n are clamped to 0 and reported with ``vacuous=True``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .codes import CodeSpec, averaged_free_distance, free_distance, is_catastrophic
from .model import ChannelParams, GapDistribution, ModelError


class Bound(NamedTuple):
    value: float
    vacuous: bool = False


class CoverageThreshold(NamedTuple):
    value: float
    noiseless: bool = False


def _clamped(x: float) -> Bound:
    if not x > 0:  # also catches nan
        return Bound(0.0, True)
    return Bound(x, False)


def optimal_coverage(channel: ChannelParams, gaps: GapDistribution) -> CoverageThreshold:
    """c* = 1 / (averaged free distance * (1 - exp(-D(theta)))).

    The averaged free distance comes from a trellis search, not from the
    closed form min(E[W], 2). On the noiseless channel the threshold is
    1 / d_free and the result is flagged.
    """
    d_free = averaged_free_distance(CodeSpec.from_gaps(gaps))
    if channel.noiseless:
        return CoverageThreshold(1.0 / d_free, True)
    return CoverageThreshold(1.0 / (d_free * channel.exponent_factor), False)


def parity_error_upper(c: float, n: int, channel: ChannelParams) -> float:
    """Upper bound n^(-c (1 - e^-D)) on a majority-vote parity error."""
    if c < 0 or n < 2:
        raise ModelError("need c >= 0 and n >= 2")
    return n ** (-c * channel.exponent_factor)


def parity_error_lower(c: float, n: int, channel: ChannelParams) -> Bound:
    r"""Lower bound on the wrong-parity probability with N ~ Poiss(c ln n) votes.

    (1/2) (c e^D ln n)^-2 [ n^{-c(1-e^-D)} - 1/n - c e^D ln n / n ]
    """
    if not (c > 0 and n >= 3):
        raise ModelError("need c > 0 and n >= 3")
    if channel.noiseless:
        return Bound(0.0, True)
    d = channel.d_nats
    scale = c * math.exp(d) * math.log(n)
    bracket = n ** (-c * channel.exponent_factor) - 1.0 / n - scale / n
    return _clamped(0.5 * scale**-2 * bracket)


def poisson_race_upper(lam: float, mu: float) -> float:
    """Chernoff bound exp(-(sqrt(lam) - sqrt(mu))^2) on P(X >= Y).

    X ~ Poiss(lam) counts erroneous observations, Y ~ Poiss(mu) correct ones,
    lam <= mu.
    """
    if not 0 <= lam <= mu:
        raise ModelError("need 0 <= lam <= mu")
    return math.exp(-((math.sqrt(lam) - math.sqrt(mu)) ** 2))


def poisson_race_lower(lam: float, mu: float) -> Bound:
    """Lower bound on P(X > Y) for independent X ~ Poiss(lam), Y ~ Poiss(mu)."""
    if not (lam > 0 and mu > 0):
        raise ModelError("need lam > 0 and mu > 0")
    s = lam + mu
    tail = math.exp(-s)
    value = (
        math.exp(-((math.sqrt(mu) - math.sqrt(lam)) ** 2)) / s**2
        - tail / (2 * math.sqrt(lam * mu))
        - tail / (4 * lam * mu)
    )
    return _clamped(value)


def path_kill_probability_bound(d: float, c: float, n: int, channel: ChannelParams) -> float:
    """Bound n^(-d c (1 - e^-D)) on an averaged-weight-d path beating the truth.

    ``c`` is the per-stream coverage, so callers in a setting where each of k
    streams gets c/k pass that share.
    """
    if not (d > 0 and c >= 0 and n >= 2):
        raise ModelError("need d > 0, c >= 0 and n >= 2")
    return n ** (-d * c * channel.exponent_factor)


def geometric_tail_bound(gamma: float, n: int, start: int = 1) -> float:
    """Union bound sum_{i >= start} 2^i n^(-gamma i) over paths of weight i."""
    ratio = 2.0 * n ** (-gamma)
    if ratio >= 1:
        return math.inf
    return ratio**start / (1.0 - ratio)


@dataclass(frozen=True)
class CoverageClassDescriptor:
    """Quantized description of non-uniform adjacent coverage.

    Each level is ``(q, epsilon)``: a class of adjacent pairs with weight q
    whose size grows like n^epsilon. With ``delta > 0`` the level is snapped
    to its quantization cell (C1 + (l-1) delta, C1 + l delta]; with
    ``delta = 0`` the cell edges collapse onto q itself.
    """

    c1: float
    c2: float
    levels: tuple[tuple[float, float], ...]
    delta: float = 0.0

    def __post_init__(self):
        if not 0 < self.c1 <= self.c2:
            raise ModelError("need 0 < C1 <= C2")
        if self.delta < 0:
            raise ModelError("delta must be nonnegative")
        levels = tuple((float(q), float(e)) for q, e in self.levels)
        if not levels:
            raise ModelError("at least one coverage level is required")
        for q, eps in levels:
            if not self.c1 <= q <= self.c2:
                raise ModelError(f"level q = {q} outside [C1, C2] = [{self.c1}, {self.c2}]")
            if not 0 < eps <= 1:
                raise ModelError(f"growth exponent {eps} outside (0, 1]")
        object.__setattr__(self, "levels", levels)

    def edges(self, q: float) -> tuple[float, float]:
        if self.delta == 0:
            return q, q
        cell = max(1, math.ceil((q - self.c1) / self.delta - 1e-12))
        return self.c1 + (cell - 1) * self.delta, self.c1 + cell * self.delta


class CoverageClassBounds(NamedTuple):
    m: float
    k: float

    def sufficient(self, channel: ChannelParams) -> float:
        return self.m / channel.exponent_factor

    def necessary(self, channel: ChannelParams) -> float:
        return self.k / channel.exponent_factor


def coverage_class_bounds(desc: CoverageClassDescriptor) -> CoverageClassBounds:
    """m = max eps / lower edge and k = max eps / upper edge over the levels."""
    m = max(eps / desc.edges(q)[0] for q, eps in desc.levels)
    k = max(eps / desc.edges(q)[1] for q, eps in desc.levels)
    return CoverageClassBounds(m, k)


def two_level_descriptor(t: float, rest: float = 1.0) -> CoverageClassDescriptor:
    """Linear-size classes at q = t and q = ``rest``, both with epsilon = 1."""
    lo, hi = min(t, rest), max(t, rest)
    return CoverageClassDescriptor(lo, hi, ((t, 1.0), (rest, 1.0)))


def bounds_report(
    channel: ChannelParams, gaps: GapDistribution, c: float, n: int
) -> dict[str, object]:
    """All closed-form quantities for one configuration, keyed by formula name."""
    spec = CodeSpec.from_gaps(gaps)
    report: dict[str, object] = {
        "n": n,
        "c": c,
        "p": channel.p,
        "gaps": list(gaps.probs),
        "theta": channel.theta,
        "relative_entropy_half": None if channel.noiseless else channel.d_nats,
        "exponent_factor": channel.exponent_factor,
        "expected_gap": gaps.mean_gap(),
        "catastrophic": is_catastrophic(spec),
    }
    if report["catastrophic"]:
        report["reconstruction_impossible"] = True
        return report
    d_avg = averaged_free_distance(spec)
    c_star = optimal_coverage(channel, gaps)
    report.update(
        free_distance=free_distance(spec),
        averaged_free_distance=d_avg,
        optimal_coverage=c_star.value,
        noiseless=c_star.noiseless,
        path_kill_probability_bound=path_kill_probability_bound(d_avg, c, n, channel),
    )
    if gaps.is_adjacent:
        report["parity_error_upper"] = parity_error_upper(c, n, channel)
        if c > 0 and n >= 3:
            lower = parity_error_lower(c, n, channel)
            report["parity_error_lower"] = lower.value
            report["parity_error_lower_vacuous"] = lower.vacuous
        rate = c * math.log(n)
        lam, mu = channel.theta * rate, (1 - channel.theta) * rate
        if lam > 0:
            report["poisson_race_upper"] = poisson_race_upper(lam, mu)
            lower = poisson_race_lower(lam, mu)
            report["poisson_race_lower"] = lower.value
            report["poisson_race_lower_vacuous"] = lower.vacuous
    return report

