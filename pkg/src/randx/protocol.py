"""The spot-checking generation protocol: simulation, exact success-state
enumeration, and the min-entropy bound pipeline.

Protocol (per round, N rounds total): draw t in {0,1} with P(t=1) = q; on a
test round draw the game input from p and add the raw score H(a, x) to the
accumulator c; on a generation round feed the distinguished input.  The run
succeeds iff c >= chi*q*N at the end.

Two usage semantics are supported everywhere:

  fresh_state=True (default)  every round is played on a fresh copy of the
      initial state.  This is the honest iid usage; it is exactly the memory
      model of the round-counter extension of the device (measure factor j,
      shift), so all formulas below apply to it verbatim and factorize over
      rounds.
  fresh_state=False           the strict in-place memory model: the single
      system collapses round by round (outputs sampled from the current
      evolved state, which is then updated by the selected branch and the
      input's unitary).

Randomness is drawn from a counter-based 64-bit generator (Philox) seeded by
the run seed; each round consumes three uniforms in a fixed order (round
type, then input, then output; unused draws are still consumed), so
transcripts are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from . import matcore
from .devicemodel import Device, Letter
from .gamedefs import Game, require_compatible, spot_check
from .matcore import dagger, psd_power

BRANCH_CAP = 10**7


class ProtocolError(ValueError):
    pass


class BadDeltaError(ProtocolError):
    pass


class BadTableError(ProtocolError):
    pass


class TooLargeError(ProtocolError):
    pass


@dataclass(frozen=True)
class ProtocolParams:
    n_rounds: int
    q: float
    chi: float
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ProtocolError(f"n_rounds must be positive, got {self.n_rounds}")
        if not 0.0 < self.q < 1.0:
            raise ProtocolError(f"q must lie in (0, 1), got {self.q}")
        if not 0.0 < self.chi < 1.0:
            raise ProtocolError(f"chi must lie in (0, 1), got {self.chi}")

    @property
    def threshold(self) -> float:
        return self.chi * self.q * self.n_rounds


@dataclass(frozen=True)
class Transcript:
    """One protocol run: per-round records plus the accumulated score.

    Letters are stored as indices into the referenced alphabets to keep large
    transcripts cheap; iterate with ``rounds()`` for letter tuples.
    """

    test_flags: np.ndarray  # uint8, 1 on game rounds
    input_indices: np.ndarray  # into input_alphabet
    output_indices: np.ndarray  # into output_alphabet
    scores: np.ndarray  # per-round raw scores (0 on generation rounds)
    c: float
    success: bool
    input_alphabet: tuple[Letter, ...]
    output_alphabet: tuple[Letter, ...]

    def rounds(self) -> Iterator[tuple[int, Letter, Letter, float]]:
        for t, ai, xi, s in zip(
            self.test_flags, self.input_indices, self.output_indices, self.scores
        ):
            yield int(t), self.input_alphabet[ai], self.output_alphabet[xi], float(s)

    def __len__(self) -> int:
        return len(self.test_flags)


def _born_rows(g: Game, d: Device) -> tuple[np.ndarray, np.ndarray]:
    """Per-input output distributions and scores over the full output alphabet."""
    n_in, n_out = len(g.input_alphabet), len(g.output_alphabet)
    probs = np.zeros((n_in, n_out))
    scores = np.zeros((n_in, n_out))
    out_index = {x: j for j, x in enumerate(g.output_alphabet)}
    for i, a in enumerate(g.input_alphabet):
        for x, p in d.measurements[a].items():
            probs[i, out_index[x]] = float(np.einsum("ij,ji->", p, d.state).real)
        for j, x in enumerate(g.output_alphabet):
            scores[i, j] = g.score(a, x)
    return probs, scores


def _sample_index(cdf: np.ndarray, u: float) -> int:
    return min(int(np.searchsorted(cdf, u, side="right")), len(cdf) - 1)


def simulate(
    g: Game, d: Device, params: ProtocolParams, fresh_state: bool = True
) -> Transcript:
    """Run the protocol once; reproducible given the seed.

    The accumulator stores raw scores; the success rule is c >= chi*q*N, so a
    run with no test rounds succeeds only if that threshold is <= 0.
    """
    require_compatible(g, d)
    n = params.n_rounds
    rng = np.random.Generator(np.random.Philox(key=params.seed))
    u = rng.random(3 * n).reshape(n, 3)
    abar_idx = g.input_alphabet.index(g.distinguished_input)
    p_cdf = np.cumsum([g.prob(a) for a in g.input_alphabet])
    p_cdf[-1] = max(p_cdf[-1], 1.0)

    t = (u[:, 0] < params.q).astype(np.uint8)
    a_idx = np.minimum(
        np.searchsorted(p_cdf, u[:, 1], side="right"), len(p_cdf) - 1
    ).astype(np.int64)
    a_idx[t == 0] = abar_idx

    if fresh_state:
        probs, score_table = _born_rows(g, d)
        cdfs = np.cumsum(probs, axis=1)
        cdfs[:, -1] = np.maximum(cdfs[:, -1], 1.0)
        x_idx = (u[:, 2][:, None] >= cdfs[a_idx]).sum(axis=1).astype(np.int64)
        np.clip(x_idx, 0, probs.shape[1] - 1, out=x_idx)
        scores = score_table[a_idx, x_idx] * t
    else:
        out_index = {x: j for j, x in enumerate(g.output_alphabet)}
        state = d.state.copy()
        x_idx = np.zeros(n, dtype=np.int64)
        scores = np.zeros(n)
        for j in range(n):
            a = g.input_alphabet[a_idx[j]]
            branch_probs = []
            branch_outs = []
            tr = float(np.trace(state).real)
            for x, p in d.measurements[a].items():
                branch_outs.append(x)
                branch_probs.append(float(np.einsum("ij,ji->", p, state).real) / tr)
            cdf = np.cumsum(branch_probs)
            cdf[-1] = max(cdf[-1], 1.0)
            pick = _sample_index(cdf, u[j, 2])
            x = branch_outs[pick]
            x_idx[j] = out_index[x]
            proj = d.measurements[a][x]
            uni = d.unitary(a)
            state = uni @ proj @ state @ proj @ dagger(uni)
            tr = float(np.trace(state).real)
            if tr > 0:
                state = state / tr
            if t[j]:
                scores[j] = g.score(a, x)

    c = float(np.sum(scores))
    return Transcript(
        test_flags=t,
        input_indices=a_idx,
        output_indices=x_idx,
        scores=scores,
        c=c,
        success=bool(c >= params.threshold),
        input_alphabet=g.input_alphabet,
        output_alphabet=g.output_alphabet,
    )


@dataclass(frozen=True)
class SuccessStateSummary:
    """Exact aggregates of the subnormalized success-event operator family.

    mass is the success probability sum p_q(i-seq) tr(branch operator);
    renyi_randomness is -(1/eps) log2 of the conditional branch sum (the
    sandwiched branches with the initial adversary state's negative power),
    the quantity the min-entropy bound consumes.
    """

    eps: float
    mass: float
    renyi_randomness: float
    branches: int  # success branches with nonzero contribution
    n_rounds: int
    q: float
    chi: float


def _round_tables(
    g: Game, d: Device, q: float, eps: float
) -> list[tuple[float, float, list[tuple[float, float, Letter, Letter]]]]:
    """Per-round branch data for the fresh (iid) semantics.

    Returns a list over supported protocol inputs (t, a) of
    (p_q, score placeholder, branches), each branch being
    (born probability, sandwiched bracket, input letter, output letter).
    """
    sandwich = psd_power(d.state, 1.0 / (2.0 + 2.0 * eps))
    gq = spot_check(g, q)
    rows = []
    branch_cache: dict[Letter, list[tuple[float, float, Letter]]] = {}
    for i in gq.input_alphabet:
        p_i = gq.prob(i)
        if p_i <= 0.0:
            continue
        _, a = i
        if a not in branch_cache:
            entries = []
            for x, proj in d.measurements[a].items():
                born = float(np.einsum("ij,ji->", proj, d.state).real)
                core = sandwich @ proj @ sandwich
                w = matcore.psd_bracket(core, eps)
                entries.append((born, w, x))
            branch_cache[a] = entries
        t, _ = i
        branches = [
            (born, w, x, g.score(a, x) if t == 1 else 0.0)
            for born, w, x in branch_cache[a]
        ]
        rows.append((p_i, i, branches))
    return rows


def enumerate_success_state(
    g: Game,
    d: Device,
    n_rounds: int,
    q: float,
    chi: float,
    eps: float,
    fresh_state: bool = True,
    branch_cap: int = BRANCH_CAP,
) -> SuccessStateSummary:
    """Exhaustively enumerate all (input, output) sequences of the protocol.

    The success set is {raw score >= chi*q*N} (equivalently the q-weighted
    score >= chi*N).  chi = 0 makes every branch a success branch.  Zero
    probability branches are pruned; the branch count guard rejects runs
    beyond ``branch_cap`` leaves.
    """
    require_compatible(g, d)
    if not 0.0 < eps <= 1.0:
        raise ProtocolError(f"eps must lie in (0, 1], got {eps}")
    if not 0.0 < q < 1.0:
        raise ProtocolError(f"q must lie in (0, 1), got {q}")
    if chi < 0.0:
        raise ProtocolError(f"chi must be nonnegative, got {chi}")
    if n_rounds < 1:
        raise ProtocolError("n_rounds must be positive")
    gq = spot_check(g, q)
    support = sum(1 for i in gq.input_alphabet if gq.prob(i) > 0.0)
    if (support * len(g.output_alphabet)) ** n_rounds > branch_cap:
        raise TooLargeError(
            f"({support} inputs x {len(g.output_alphabet)} outputs)^{n_rounds} "
            f"exceeds the {branch_cap} branch cap"
        )
    threshold = chi * q * n_rounds

    if fresh_state:
        rows = _round_tables(g, d, q, eps)
        # level-order expansion over rounds with pruning of zero-mass branches
        leaves = [(1.0, 1.0, 1.0, 0.0)]  # (p_q product, born product, bracket product, score)
        for _ in range(n_rounds):
            nxt = []
            for pq, born, w, score in leaves:
                for p_i, _i, branches in rows:
                    for b_born, b_w, _x, b_h in branches:
                        nb = born * b_born
                        if nb <= 0.0 and w * b_w <= 0.0:
                            continue
                        nxt.append((pq * p_i, nb, w * b_w, score + b_h))
            leaves = nxt
        mass = 0.0
        ksum = 0.0
        branches = 0
        for pq, born, w, score in leaves:
            if score >= threshold:
                mass += pq * born
                ksum += pq * w
                if pq * (born + w) > 0.0:
                    branches += 1
    else:
        sandwich = psd_power(d.state, 1.0 / (2.0 + 2.0 * eps))
        inputs = [(gq.prob(i), i[1], i[0]) for i in gq.input_alphabet if gq.prob(i) > 0.0]
        mass = 0.0
        ksum = 0.0
        branches = 0
        stack = [(0, 1.0, np.eye(d.dim, dtype=np.complex128), 0.0)]
        while stack:
            depth, pq, m, score = stack.pop()
            if depth == n_rounds:
                dev_branch = m @ d.state @ dagger(m)
                born = float(np.trace(dev_branch).real)
                core = sandwich @ dagger(m) @ m @ sandwich
                w = matcore.psd_bracket(core, eps)
                if score >= threshold:
                    mass += pq * born
                    ksum += pq * w
                    if pq * (born + w) > 0.0:
                        branches += 1
                continue
            for p_i, a, t in inputs:
                uni = d.unitary(a)
                for x, proj in d.measurements[a].items():
                    nm = uni @ proj @ m
                    if float(np.einsum("ij,ji->", nm @ d.state, dagger(nm)).real) <= 1e-30 and depth < n_rounds - 1:
                        continue
                    h = g.score(a, x) if t == 1 else 0.0
                    stack.append((depth + 1, pq * p_i, nm, score + h))

    if ksum > 0.0:
        k_value = -(1.0 / eps) * math.log2(ksum)
    else:
        k_value = math.inf
    return SuccessStateSummary(
        eps=eps,
        mass=mass,
        renyi_randomness=k_value,
        branches=branches,
        n_rounds=n_rounds,
        q=q,
        chi=chi,
    )


@dataclass(frozen=True)
class ExpansionBound:
    """Realized numbers of the extractable-bits pipeline.

    Fields not applicable to the producing operation are None: the
    enumeration path fills hmin_lower from the smoothing penalty, the
    rate-curve path fills pi_chi / ideal_bits, and only fills hmin_lower when
    a slack constant is supplied (the leading-order error constant is not
    specified, so it is a caller input).
    """

    delta: float
    eps: float
    hmin_lower: float | None
    bits_per_round: float | None
    pi_chi: float | None = None
    ideal_bits: float | None = None
    b: float | None = None
    eps_star: float | None = None
    delta_term: float | None = None
    soundness_error: float | None = None


def entropy_lower_bound(summary: SuccessStateSummary, delta: float) -> ExpansionBound:
    """Smooth min-entropy lower bound: K - (1 + 2 log2(1/delta)) / eps.

    The bound may be negative, in which case it is vacuous at these
    parameters and reported as-is.
    """
    if not 0.0 < delta <= 1.0:
        raise BadDeltaError(f"delta must lie in (0, 1], got {delta}")
    penalty = (1.0 + 2.0 * math.log2(1.0 / delta)) / summary.eps
    hmin = summary.renyi_randomness - penalty
    return ExpansionBound(
        delta=delta,
        eps=summary.eps,
        hmin_lower=hmin,
        bits_per_round=hmin / summary.n_rounds,
    )


def extractable_bits(
    curve,
    chi: float,
    q: float,
    b: float,
    n_rounds: int,
    slack_constant: float | None = None,
) -> ExpansionBound:
    """Extractable-bits report for a rate curve at soundness exponent b.

    The smoothing parameter is delta = sqrt(2) 2^(-b q N) (soundness error
    3 * 2^(-b q N)); the optimizing eps is min(1, sqrt(q log2(2/delta^2)/N)).
    The idealized rate is N pi(chi).  The error term q + sqrt(log2(2/delta^2)
    / (q N)) carries an unspecified leading constant, so a concrete bound is
    emitted only when slack_constant is supplied.
    """
    if not (0.0 < q < 1.0 and b > 0.0 and n_rounds >= 1):
        raise ProtocolError("require 0 < q < 1, b > 0, n_rounds >= 1")
    if chi < 0.0:
        raise ProtocolError(f"chi must be nonnegative, got {chi}")
    delta = math.sqrt(2.0) * 2.0 ** (-b * q * n_rounds)
    log_term = 2.0 * b * q * n_rounds  # log2(2/delta^2), immune to delta underflow
    eps_star = min(1.0, math.sqrt(q * log_term / n_rounds))
    delta_term = q + math.sqrt(log_term / (q * n_rounds))
    pi_chi = curve.evaluate(chi)
    hmin = None
    bits_per_round = None
    if slack_constant is not None:
        bits_per_round = pi_chi - slack_constant * delta_term
        hmin = n_rounds * bits_per_round
    return ExpansionBound(
        delta=delta,
        eps=eps_star,
        hmin_lower=hmin,
        bits_per_round=bits_per_round,
        pi_chi=pi_chi,
        ideal_bits=n_rounds * pi_chi,
        b=b,
        eps_star=eps_star,
        delta_term=delta_term,
        soundness_error=3.0 * 2.0 ** (-b * q * n_rounds),
    )


def hmin_classical_adversary(table) -> float:
    """Min-entropy of X against a classical adversary E: -log2 sum_e max_x P(x,e).

    The table is indexed (x, e); it must be entrywise nonnegative and sum to
    at most one (subnormalized tables are allowed).
    """
    if isinstance(table, Mapping):
        xs = sorted({k[0] for k in table})
        es = sorted({k[1] for k in table})
        arr = np.zeros((len(xs), len(es)))
        for (x, e), p in table.items():
            arr[xs.index(x), es.index(e)] = p
    else:
        arr = np.asarray(table, dtype=float)
    if arr.ndim != 2:
        raise BadTableError(f"expected a 2-d table, got shape {arr.shape}")
    if float(arr.min(initial=0.0)) < -1e-12:
        raise BadTableError("table has negative entries")
    total = float(arr.sum())
    if total > 1.0 + 1e-9:
        raise BadTableError(f"table mass {total} exceeds 1")
    if total <= 0.0:
        raise BadTableError("table has no mass")
    guess = float(arr.max(axis=0).sum())
    return -math.log2(guess)
