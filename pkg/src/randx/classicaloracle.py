"""Ground-truth game values: exact classical enumeration, see-saw search for
quantum values, and a table of known closed-form values.

Classical values are exact: shared randomness cannot beat the best
deterministic strategy for an objective that is linear on the strategy
simplex, so enumerating deterministic strategies suffices.  See-saw results
are certified lower bounds only (the value is re-scored from the witnessing
device); they are never claimed to be the supremum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import matcore, scoring
from .devicemodel import Device, Letter, components_device
from .gamedefs import NONLOCAL, Game
from .parallel import parallel_map

ENUMERATION_GUARD = 10**7


class OracleError(ValueError):
    pass


class TooLargeError(OracleError):
    pass


class UnsupportedError(OracleError):
    pass


class BadDimsError(OracleError):
    pass


class UnknownGameError(OracleError):
    pass


@dataclass(frozen=True)
class StrategyEnumeration:
    best_value: float
    best_strategy: tuple[dict[Letter, Letter], ...]  # per player: input -> output
    count: int  # total deterministic strategies covered


def _strategy_score(g: Game, strategy: Sequence[Mapping[Letter, Letter]]) -> float:
    terms = []
    for a in g.input_alphabet:
        p = g.prob(a)
        if p == 0.0:
            continue
        x = tuple(strategy[i][a[i]] for i in range(len(strategy)))
        terms.append(p * g.score(a, x))
    return math.fsum(terms)


def classical_value(g: Game) -> StrategyEnumeration:
    """Exact maximum expected score over deterministic strategies.

    All players but the last are enumerated outright; the last player's best
    response decomposes per input because the objective is linear.  Ties are
    broken toward the lexicographically first maximizing strategy (outputs
    enumerated in declared order).  The reported count covers the full
    product strategy space.
    """
    if g.kind != NONLOCAL or g.player_inputs is None:
        raise OracleError("classical_value requires a nonlocal game with player structure")
    s = len(g.player_inputs)
    count = 1
    for i in range(s):
        count *= len(g.player_outputs[i]) ** len(g.player_inputs[i])
    if count > ENUMERATION_GUARD:
        raise TooLargeError(f"{count} strategies exceed the {ENUMERATION_GUARD} guard")

    last_inputs = g.player_inputs[-1]
    last_outputs = g.player_outputs[-1]
    outer_spaces = [
        itertools.product(g.player_outputs[i], repeat=len(g.player_inputs[i]))
        for i in range(s - 1)
    ]
    best_value = -math.inf
    best_strategy: tuple[dict[Letter, Letter], ...] | None = None
    for outer in itertools.product(*outer_spaces):
        outer_maps = [
            dict(zip(g.player_inputs[i], outer[i])) for i in range(s - 1)
        ]
        # best response of the last player, one input at a time
        last_map: dict[Letter, Letter] = {}
        for a_last in last_inputs:
            best_g = -math.inf
            best_x = last_outputs[0]
            for x_last in last_outputs:
                val = 0.0
                for a in g.input_alphabet:
                    if a[-1] != a_last:
                        continue
                    p = g.prob(a)
                    if p == 0.0:
                        continue
                    x = tuple(outer_maps[i][a[i]] for i in range(s - 1)) + (x_last,)
                    val += p * g.score(a, x)
                if val > best_g + 1e-15:
                    best_g = val
                    best_x = x_last
            last_map[a_last] = best_x
        strategy = tuple(outer_maps) + (last_map,)
        value = _strategy_score(g, strategy)
        if value > best_value + 1e-15:
            best_value = value
            best_strategy = strategy
    assert best_strategy is not None
    return StrategyEnumeration(
        best_value=_strategy_score(g, best_strategy),
        best_strategy=best_strategy,
        count=count,
    )


def strategy_device(g: Game, strategy: Sequence[Mapping[Letter, Letter]]) -> Device:
    """Embed a deterministic strategy as a trivial (all dims 1) quantum device."""
    site_meas = []
    for i, player_map in enumerate(strategy):
        meas = {
            a: {player_map[a]: np.eye(1, dtype=np.complex128)}
            for a in g.player_inputs[i]
        }
        site_meas.append(meas)
    d = components_device(
        [1] * len(strategy),
        np.eye(1, dtype=np.complex128),
        site_meas,
        name="deterministic",
    )
    # carry the game's full output alphabet so compatibility checks pass
    return Device(
        kind=d.kind,
        dims=d.dims,
        state=d.state,
        input_alphabet=tuple(g.input_alphabet),
        output_alphabet=tuple(g.output_alphabet),
        measurements=d.measurements,
        unitaries=d.unitaries,
        name=d.name,
    )


@dataclass(frozen=True)
class SeesawResult:
    value: float
    device: Device
    iterations: int
    constrained: bool
    restarts: int


def _random_pvm(dim: int, n_outcomes: int, rng: np.random.Generator) -> list[np.ndarray]:
    u = matcore.haar_unitary(dim, rng)
    sizes = [dim // n_outcomes + (1 if i < dim % n_outcomes else 0) for i in range(n_outcomes)]
    pvm = []
    start = 0
    for size in sizes:
        cols = u[:, start : start + size]
        pvm.append(cols @ matcore.dagger(cols))
        start += size
    return pvm


def _positive_part_projector(delta: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((delta + matcore.dagger(delta)) / 2)
    keep = vecs[:, vals > 0]
    return keep @ matcore.dagger(keep)


def _update_pvm(pvm: list[np.ndarray], effops: list[np.ndarray]) -> list[np.ndarray]:
    """Maximize sum_x Tr[A_x R_x] over projective measurements.

    Binary case is exact (positive eigenspace of R_0 - R_1).  For more
    outcomes, pairwise subspace sweeps reoptimize every outcome pair's split,
    which never decreases the objective.
    """
    n = len(effops)
    if n == 2:
        a0 = _positive_part_projector(effops[0] - effops[1])
        return [a0, np.eye(a0.shape[0], dtype=np.complex128) - a0]
    pvm = [p.copy() for p in pvm]
    for _ in range(3):  # a few sweeps settle this at desk scale
        for j in range(n):
            for k in range(j + 1, n):
                sub = pvm[j] + pvm[k]
                vals, vecs = np.linalg.eigh((sub + matcore.dagger(sub)) / 2)
                iso = vecs[:, vals > 0.5]
                if iso.shape[1] == 0:
                    continue
                rj = matcore.dagger(iso) @ effops[j] @ iso
                rk = matcore.dagger(iso) @ effops[k] @ iso
                split = _positive_part_projector(rj - rk)
                pvm[j] = iso @ split @ matcore.dagger(iso)
                pvm[k] = iso @ (np.eye(iso.shape[1]) - split) @ matcore.dagger(iso)
    return pvm


def _assemble_operator(
    g: Game,
    pvms: tuple[dict[Letter, list[np.ndarray]], dict[Letter, list[np.ndarray]]],
    dims: tuple[int, int],
) -> np.ndarray:
    k = np.zeros((dims[0] * dims[1],) * 2, dtype=np.complex128)
    for a in g.input_alphabet:
        p = g.prob(a)
        if p == 0.0:
            continue
        for i1, x1 in enumerate(g.player_outputs[0]):
            for i2, x2 in enumerate(g.player_outputs[1]):
                h = g.score(a, (x1, x2))
                if h != 0.0:
                    k += (p * h) * np.kron(pvms[0][a[0]][i1], pvms[1][a[1]][i2])
    return k


def _seesaw_restart(
    g: Game, dims: tuple[int, int], constrain_abar: bool, iters: int, seed: int, restart: int
):
    """One seeded restart; returns (best value, snapshot, iterations used)."""
    d1, d2 = dims
    outs1, outs2 = g.player_outputs
    abar = g.distinguished_input
    best_value = -math.inf
    best_snapshot = None
    total_iters = 0
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(restart,)))
    pvm1 = {a: _random_pvm(d1, len(outs1), rng) for a in g.player_inputs[0]}
    pvm2 = {b: _random_pvm(d2, len(outs2), rng) for b in g.player_inputs[1]}
    psi = rng.normal(size=d1 * d2) + 1j * rng.normal(size=d1 * d2)
    psi /= np.linalg.norm(psi)
    prev = -math.inf
    for it in range(iters):
        total_iters += 1
        psi_mat = psi.reshape(d1, d2)
        # player 1: effective operators R_x = Psi M^T Psi† per input
        for a1 in g.player_inputs[0]:
            effops = []
            for i1, x1 in enumerate(outs1):
                m = np.zeros((d2, d2), dtype=np.complex128)
                for a in g.input_alphabet:
                    if a[0] != a1:
                        continue
                    p = g.prob(a)
                    if p == 0.0:
                        continue
                    for i2, x2 in enumerate(outs2):
                        h = g.score(a, (x1, x2))
                        if h != 0.0:
                            m += (p * h) * pvm2[a[1]][i2]
                effops.append(psi_mat @ m.T @ matcore.dagger(psi_mat))
            pvm1[a1] = _update_pvm(pvm1[a1], effops)
        # player 2: effective operators R_x = Psi† M Psi per input
        for a2 in g.player_inputs[1]:
            effops = []
            for i2, x2 in enumerate(outs2):
                m = np.zeros((d1, d1), dtype=np.complex128)
                for a in g.input_alphabet:
                    if a[1] != a2:
                        continue
                    p = g.prob(a)
                    if p == 0.0:
                        continue
                    for i1, x1 in enumerate(outs1):
                        h = g.score(a, (x1, x2))
                        if h != 0.0:
                            m += (p * h) * pvm1[a[0]][i1]
                effops.append(matcore.dagger(psi_mat) @ m @ psi_mat)
            pvm2[a2] = _update_pvm(pvm2[a2], effops)
        k = _assemble_operator(g, (pvm1, pvm2), (d1, d2))
        vals, vecs = np.linalg.eigh((k + matcore.dagger(k)) / 2)
        psi = vecs[:, -1]
        if constrain_abar:
            # restrict the state to its heaviest deterministic branch of abar
            best_branch = None
            best_weight = -1.0
            for i1, x1 in enumerate(outs1):
                p1 = pvm1[abar[0]][i1]
                for i2, x2 in enumerate(outs2):
                    proj = np.kron(p1, pvm2[abar[1]][i2])
                    w = float(np.vdot(psi, proj @ psi).real)
                    if w > best_weight:
                        best_weight = w
                        best_branch = proj
            projected = best_branch @ psi
            norm = np.linalg.norm(projected)
            if norm < 1e-12:
                break
            psi = projected / norm
        value = float(np.vdot(psi, k @ psi).real)
        if value > best_value:
            best_value = value
            best_snapshot = (
                {a: [p.copy() for p in pvm1[a]] for a in pvm1},
                {b: [p.copy() for p in pvm2[b]] for b in pvm2},
                psi.copy(),
            )
        if abs(value - prev) < 1e-12 * max(1.0, abs(value)):
            break
        prev = value
    return best_value, best_snapshot, total_iters


def seesaw(
    g: Game,
    dims: Sequence[int],
    constrain_abar: bool = False,
    restarts: int = 20,
    iters: int = 500,
    seed: int = 0,
    threads: int | None = 1,
) -> SeesawResult:
    """Alternating optimization toward the (restricted) quantum value.

    Per sweep each player's measurement is reoptimized against the other
    player and the shared state, the state moves to the top eigenvector of
    the game operator, and with constrain_abar the state is then projected
    onto its best deterministic branch of the distinguished input.  Restarts
    run independently (in parallel when threads > 1) and are merged by max
    with first-index tie break, so results do not depend on the worker
    count.  The returned value is a certified lower bound: it is re-scored
    from the witnessed device.
    """
    if g.kind != NONLOCAL or g.player_inputs is None or len(g.player_inputs) != 2:
        raise UnsupportedError("see-saw supports exactly 2-player nonlocal games")
    d1, d2 = (int(x) for x in dims)
    if not (1 <= d1 <= 8 and 1 <= d2 <= 8):
        raise BadDimsError(f"per-player dims must lie in [1, 8], got {dims}")
    outs1, outs2 = g.player_outputs

    runs = parallel_map(
        lambda k: _seesaw_restart(g, (d1, d2), constrain_abar, iters, seed, k),
        range(restarts),
        threads=threads,
    )
    best_value = -math.inf
    best_snapshot = None
    total_iters = 0
    for value, snapshot, used in runs:
        total_iters += used
        if snapshot is not None and value > best_value:
            best_value = value
            best_snapshot = snapshot

    assert best_snapshot is not None
    pvm1, pvm2, psi = best_snapshot
    site1 = {a: {x: pvm1[a][i] for i, x in enumerate(outs1)} for a in g.player_inputs[0]}
    site2 = {b: {x: pvm2[b][i] for i, x in enumerate(outs2)} for b in g.player_inputs[1]}
    device = components_device(
        (d1, d2),
        np.outer(psi, np.conj(psi)),
        (site1, site2),
        name="seesaw" + ("-constrained" if constrain_abar else ""),
    )
    value = scoring.eps_score(g, device, 0.0)
    return SeesawResult(
        value=value,
        device=device,
        iterations=total_iters,
        constrained=constrain_abar,
        restarts=restarts,
    )


@dataclass(frozen=True)
class KnownValues:
    name: str
    w_classical: float
    w_quantum: float | None
    w_quantum_abar: float | None
    noise_tolerance: float | None
    notes: dict[str, str] = field(default_factory=dict)


def known_values(name: str) -> KnownValues:
    """Closed-form and witnessed values for the built-in games."""
    key = name.lower().replace("_", "-")
    if key == "chsh":
        w_q = 0.5 + math.sqrt(2.0) / 4.0
        return KnownValues(
            name="chsh",
            w_classical=0.75,
            w_quantum=w_q,
            w_quantum_abar=0.75,
            noise_tolerance=w_q - 0.75,
            notes={
                "w_classical": "exact enumeration",
                "w_quantum": "closed form 1/2 + sqrt(2)/4, achieved by the catalog device",
                "w_quantum_abar": "closed form 3/4 for devices predictable on input (0,0)",
                "noise_tolerance": "w_quantum - w_quantum_abar",
            },
        )
    if key in ("magic-square", "magicsquare", "ms"):
        w_wit = 5.0 / 9.0 + (4.0 / 9.0) * (0.5 + math.sqrt(2.0) / 4.0)
        return KnownValues(
            name="magic-square",
            w_classical=8.0 / 9.0,
            w_quantum=w_wit,
            w_quantum_abar=None,
            noise_tolerance=None,
            notes={
                "w_classical": "exact enumeration",
                "w_quantum": "witnessed lower bound (catalog single-pair device family); not proven optimal",
                "w_quantum_abar": "no closed form known; the seesaw subcommand gives an unproven lower bound",
                "noise_tolerance": "unavailable without w_quantum_abar",
            },
        )
    raise UnknownGameError(f"no known-values row for {name!r}")
