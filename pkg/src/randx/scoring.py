"""Game operators, (1+eps)-scores and randomness, rate curves, and bounds.

All logarithms are base 2 (quantities are measured in bits).  The smoothed
score of a device at a game is

    W^eps = bracket(sqrt(K) phi sqrt(K), eps) / bracket(phi, eps)

with K the game operator sum p(a) H(a,x) P_a^x; at eps = 0 this is the
ordinary Born-rule expected score.  The (1+eps)-randomness compares the
bracket of the post-measurement branches with that of the initial state and
converges to a Renyi entropy rate as eps -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import matcore
from .devicemodel import Device, Letter, is_classically_predictable
from .gamedefs import Game, SpotCheckGame, require_compatible

LOG2E = math.log2(math.e)
RATIO_CLAMP = 1.0 + 1e-9


class ScoringError(ValueError):
    pass


class BadParamsError(ScoringError):
    pass


class DomainError(ScoringError):
    pass


class NotPredictableError(ScoringError):
    pass


@dataclass(frozen=True)
class GameOperator:
    """K = sum p(a) H(a,x) P_a^x with its device/adversary sandwich states."""

    matrix: np.ndarray
    device_state: np.ndarray  # sqrt(K) phi sqrt(K)
    adversary_state: np.ndarray  # (sqrt(phi) K sqrt(phi))^T

    @property
    def top_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.matrix + matcore.dagger(self.matrix)) / 2)[-1])


def _game_terms(g: Game | SpotCheckGame, d: Device) -> Iterable[tuple[float, Letter, Letter, float]]:
    """Yield (probability, device input letter, output letter, score)."""
    if isinstance(g, SpotCheckGame):
        for i in g.input_alphabet:
            p = g.prob(i)
            if p <= 0.0:
                continue
            _, a = i
            for x in d.measurements[a]:
                yield p, a, x, g.score(i, x)
    else:
        for a in g.input_alphabet:
            p = g.prob(a)
            if p <= 0.0:
                continue
            for x in d.measurements[a]:
                yield p, a, x, g.score(a, x)


def game_operator(g: Game | SpotCheckGame, d: Device) -> GameOperator:
    """Assemble the game operator for a compatible device.

    For bounded games K <= I holds automatically.  The sandwich states use the
    device's initial operator.
    """
    require_compatible(g, d)
    k = np.zeros((d.dim, d.dim), dtype=np.complex128)
    for p, a, x, h in _game_terms(g, d):
        if h != 0.0:
            k += (p * h) * d.measurements[a][x]
    rk = matcore.sqrtm_psd(k)
    rphi = matcore.sqrtm_psd(d.state)
    dev = rk @ d.state @ rk
    adv = (rphi @ k @ rphi).T
    return GameOperator(matrix=k, device_state=dev, adversary_state=adv)


def eps_score(g: Game | SpotCheckGame, d: Device, eps: float) -> float:
    """(1+eps)-score of a device; the Born-rule expected score at eps = 0."""
    if not 0.0 <= eps <= 1.0:
        raise BadParamsError(f"eps must lie in [0, 1], got {eps}")
    op = game_operator(g, d)
    num = matcore.psd_bracket(op.device_state, eps)
    den = matcore.psd_bracket(d.state, eps)
    return num / den


def _branch_brackets(d: Device, a: Letter, eps: float) -> float:
    """sum_x bracket(P_a^x phi P_a^x, eps); unitaries cannot change it."""
    total = 0.0
    for p in d.measurements[a].values():
        total += matcore.psd_bracket(p @ d.state @ p, eps)
    return total


def _clamped_ratio(num: float, den: float) -> float:
    ratio = num / den
    if ratio > RATIO_CLAMP:
        raise ScoringError(
            f"branch bracket ratio {ratio} exceeds 1 beyond numerical tolerance"
        )
    return min(ratio, RATIO_CLAMP)


def _weighted_branch_sum(g: Game | SpotCheckGame, d: Device, eps: float, s: float) -> float:
    num = 0.0
    for p, a, x, h in _game_terms(g, d):
        weight = 2.0 ** (eps * s * h) if (s != 0.0 and h != 0.0) else 1.0
        proj = d.measurements[a][x]
        num += p * weight * matcore.psd_bracket(proj @ d.state @ proj, eps)
    return num


def eps_randomness(target: Game | SpotCheckGame | Letter, d: Device, eps: float) -> float:
    """(1+eps)-randomness of a device.

    With a game as target, branches are weighted by the input distribution;
    with an input letter, only that letter's branches enter.  The result is
    -(1/eps) log2 of a bracket ratio that cannot exceed 1 except by rounding
    noise (clamped at 1 + 1e-9).
    """
    if not 0.0 < eps <= 1.0:
        raise BadParamsError(f"eps must lie in (0, 1], got {eps}")
    den = matcore.psd_bracket(d.state, eps)
    if isinstance(target, (Game, SpotCheckGame)):
        require_compatible(target, d)
        num = _weighted_branch_sum(target, d, eps, 0.0)
    else:
        if target not in d.measurements:
            raise ScoringError(f"input letter {target!r} unknown to the device")
        num = _branch_brackets(d, target, eps)
    return -(1.0 / eps) * math.log2(_clamped_ratio(num, den))


def weighted_randomness(
    g: Game | SpotCheckGame, d: Device, eps: float, s: float
) -> float:
    """Randomness weighted by 2^(eps * s * H); equals eps_randomness at s = 0.

    Computed on the device side; the adversary-side branches share the same
    spectrum, so the value is identical.
    """
    if not 0.0 < eps <= 1.0:
        raise BadParamsError(f"eps must lie in (0, 1], got {eps}")
    require_compatible(g, d)
    den = matcore.psd_bracket(d.state, eps)
    num = _weighted_branch_sum(g, d, eps, s)
    ratio = num / den
    if s == 0.0:
        ratio = min(ratio, RATIO_CLAMP)
    return -(1.0 / eps) * math.log2(ratio)


@dataclass(frozen=True)
class RateCurve:
    """A nondecreasing convex randomness-rate curve with evaluable derivative."""

    w: float  # threshold below which the curve vanishes
    r: int  # output alphabet size used by the quadratic form
    label: str  # "quadratic", "ghz_comparison", or "custom"
    evaluate: Callable[[float], float]
    derivative: Callable[[float], float]


def quadratic_rate_curve(w: float, r: int) -> RateCurve:
    """The universal quadratic curve 2 log2(e) (x - w)^2 / (r - 1) above w."""
    if not 0.0 <= w < 1.0:
        raise BadParamsError(f"threshold w must lie in [0, 1), got {w}")
    if r < 2:
        raise BadParamsError(f"output alphabet size must be >= 2, got {r}")
    scale = 2.0 * LOG2E / (r - 1)

    def evaluate(x: float) -> float:
        return scale * (x - w) ** 2 if x > w else 0.0

    def derivative(x: float) -> float:
        return 2.0 * scale * (x - w) if x > w else 0.0

    return RateCurve(w=float(w), r=int(r), label="quadratic", evaluate=evaluate, derivative=derivative)


def _binary_entropy(u: float) -> float:
    if u < 0.0 or u > 1.0:
        raise DomainError(f"binary entropy argument {u} outside [0, 1]")
    if u == 0.0 or u == 1.0:
        return 0.0
    return -u * math.log2(u) - (1.0 - u) * math.log2(1.0 - u)


def ghz_comparison_curve() -> RateCurve:
    """The comparison curve x -> 1 - 2 H((1-x)/0.11) for x in (0.89, 1].

    Provided for plotting comparisons only; raw values (possibly negative)
    are returned, clamping for plots is the caller's business.
    """

    def evaluate(x: float) -> float:
        if x <= 0.89:
            raise DomainError(f"curve defined for x > 0.89, got {x}")
        return 1.0 - 2.0 * _binary_entropy((1.0 - x) / 0.11)

    def derivative(x: float) -> float:
        if x <= 0.89:
            raise DomainError(f"curve defined for x > 0.89, got {x}")
        u = (1.0 - x) / 0.11
        if u == 0.0:
            return math.inf
        return (2.0 / 0.11) * math.log2((1.0 - u) / u)

    return RateCurve(w=0.89, r=8, label="ghz_comparison", evaluate=evaluate, derivative=derivative)


def devind_bound(curve: RateCurve, r_point: float) -> float:
    """Device-independent weighted-randomness floor pi(r) - pi'(r) * r.

    This is the vertical-axis intercept of the tangent at r_point; the
    leading term only, no O(eps) allowance is included.
    """
    if r_point <= 0.0:
        raise DomainError(f"tangent point must be positive, got {r_point}")
    return curve.evaluate(r_point) - curve.derivative(r_point) * r_point


@dataclass(frozen=True)
class CapCheck:
    w_eps: float
    cap: float
    slack: float  # cap - w_eps


def predictable_cap_check(
    g: Game | SpotCheckGame, d: Device, eps: float, cap: float
) -> CapCheck:
    """Check the score cap for devices classically predictable on the
    distinguished input.

    cap is the restricted game value for the distinguished input (supplied
    explicitly so its provenance stays visible).  For devices deterministic
    on the distinguished input the inequality w_eps <= cap is exact; for
    mixtures it holds up to O(eps).
    """
    base = g.base if isinstance(g, SpotCheckGame) else g
    ok, dev = is_classically_predictable(d, base.distinguished_input)
    if not ok:
        raise NotPredictableError(
            f"device is not classically predictable on {base.distinguished_input!r} "
            f"(pinching defect {dev:.3e})"
        )
    w = eps_score(g, d, eps)
    return CapCheck(w_eps=w, cap=float(cap), slack=float(cap) - w)


@dataclass(frozen=True)
class RandomnessReport:
    eps: float
    w_eps: float
    r_input: float
    r_game: float
    r_weighted: dict[float, float]


def randomness_report(
    g: Game | SpotCheckGame, d: Device, eps: float, s_values: Sequence[float] = ()
) -> RandomnessReport:
    base = g.base if isinstance(g, SpotCheckGame) else g
    return RandomnessReport(
        eps=eps,
        w_eps=eps_score(g, d, eps),
        r_input=eps_randomness(base.distinguished_input, d, eps),
        r_game=eps_randomness(g, d, eps),
        r_weighted={float(s): weighted_randomness(g, d, eps, s) for s in s_values},
    )
