"""Untrusted-device models: construction, validation, and state evolution.

A device holds a quantum system with an initial operator, one projective
measurement per input letter, and one unitary per input letter applied after
the measurement.  Four structure tags are supported:

  general     no structural restriction,
  components  the space and measurements factor over r sites,
  contextual  inputs are non-repeating sequences of base letters whose
              per-letter measurements commute within each declared context,
  abstract    like general but the initial operator need only be a nonzero
              positive semidefinite matrix (not trace one).

Devices are immutable after construction; the memory a device keeps between
rounds is represented by the evolved operators returned from
``evolve_sequence``, never by mutable device state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import matcore
from .matcore import (
    HERM_TOL,
    VALIDATION_TOL,
    as_matrix,
    dagger,
    frozen,
    hermiticity_defect,
    projector_defect,
    psd_power,
    sqrtm_psd,
)

GENERAL = "general"
COMPONENTS = "components"
CONTEXTUAL = "contextual"
ABSTRACT = "abstract"
KINDS = (GENERAL, COMPONENTS, CONTEXTUAL, ABSTRACT)

Letter = Any  # hashable: int, str, or (nested) tuple


class DeviceError(ValueError):
    pass


class DimMismatchError(DeviceError):
    pass


class UnknownLetterError(DeviceError):
    pass


class LengthMismatchError(DeviceError):
    pass


@dataclass(frozen=True)
class Violation:
    check: str
    deviation: float
    detail: str = ""


@dataclass
class ValidationReport:
    """List of violated invariants with their worst observed deviation."""

    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, check: str, deviation: float, detail: str = "") -> None:
        self.violations.append(Violation(check, float(deviation), detail))

    def merge(self, other: "ValidationReport") -> None:
        self.violations.extend(other.violations)

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"{v.check} ({v.deviation:.3e}) {v.detail}".strip() for v in self.violations)


@dataclass(frozen=True)
class Device:
    kind: str
    dims: tuple[int, ...]
    state: np.ndarray  # initial operator on the full space
    input_alphabet: tuple[Letter, ...]
    output_alphabet: tuple[Letter, ...]
    measurements: Mapping[Letter, Mapping[Letter, np.ndarray]]
    unitaries: Mapping[Letter, np.ndarray]
    name: str = ""

    @property
    def dim(self) -> int:
        return self.state.shape[0]

    def projector(self, a: Letter, x: Letter) -> np.ndarray:
        """Measurement projector for (input, output); zero if unlisted."""
        if a not in self.measurements:
            raise UnknownLetterError(f"unknown input letter {a!r}")
        p = self.measurements[a].get(x)
        if p is None:
            if x not in self.output_alphabet:
                raise UnknownLetterError(f"unknown output letter {x!r}")
            return np.zeros((self.dim, self.dim), dtype=np.complex128)
        return p

    def unitary(self, a: Letter) -> np.ndarray:
        u = self.unitaries.get(a)
        if u is None:
            return np.eye(self.dim, dtype=np.complex128)
        return u


def make_device(
    kind: str,
    dims: Sequence[int],
    state,
    measurements: Mapping[Letter, Mapping[Letter, Any]],
    unitaries: Mapping[Letter, Any] | None = None,
    input_alphabet: Sequence[Letter] | None = None,
    output_alphabet: Sequence[Letter] | None = None,
    name: str = "",
) -> Device:
    """Normalize inputs and build an immutable Device (no validation here)."""
    if kind not in KINDS:
        raise DeviceError(f"unknown device kind {kind!r}")
    phi = frozen(as_matrix(state))
    meas = {
        a: {x: frozen(as_matrix(p)) for x, p in outs.items()}
        for a, outs in measurements.items()
    }
    unis = {a: frozen(as_matrix(u)) for a, u in (unitaries or {}).items()}
    inputs = tuple(input_alphabet) if input_alphabet is not None else tuple(meas)
    if output_alphabet is not None:
        outputs = tuple(output_alphabet)
    else:
        seen: dict[Letter, None] = {}
        for outs in meas.values():
            for x in outs:
                seen.setdefault(x)
        outputs = tuple(seen)
    return Device(
        kind=kind,
        dims=tuple(int(d) for d in dims),
        state=phi,
        input_alphabet=inputs,
        output_alphabet=outputs,
        measurements=meas,
        unitaries=unis,
        name=name,
    )


def components_device(
    site_dims: Sequence[int],
    state,
    site_measurements: Sequence[Mapping[Letter, Mapping[Letter, Any]]],
    unitaries: Mapping[Letter, Any] | None = None,
    name: str = "",
) -> Device:
    """Build an r-site device from per-site measurements.

    Joint input letters are tuples of per-site inputs, joint outputs tuples of
    per-site outputs; joint projectors are Kronecker products.  Only products
    of listed (nonzero) site projectors are stored.
    """
    r = len(site_dims)
    if len(site_measurements) != r:
        raise DeviceError("one measurement map per site required")
    site_inputs = [tuple(m.keys()) for m in site_measurements]
    site_outputs: list[tuple[Letter, ...]] = []
    for m in site_measurements:
        seen: dict[Letter, None] = {}
        for outs in m.values():
            for x in outs:
                seen.setdefault(x)
        site_outputs.append(tuple(seen))

    def joint_letters(per_site):
        letters = [()]
        for options in per_site:
            letters = [prev + (o,) for prev in letters for o in options]
        return letters

    inputs = joint_letters(site_inputs)
    outputs = joint_letters(site_outputs)
    meas: dict[Letter, dict[Letter, np.ndarray]] = {}
    for a in inputs:
        branch: dict[Letter, np.ndarray] = {}
        site_branches = [list(site_measurements[i][a[i]].items()) for i in range(r)]
        combos = [((), np.eye(1, dtype=np.complex128))]
        for i in range(r):
            combos = [
                (x + (xi,), np.kron(p, pi))
                for x, p in combos
                for xi, pi in site_branches[i]
            ]
        for x, p in combos:
            branch[x] = p
        meas[a] = branch
    return make_device(
        COMPONENTS,
        site_dims,
        state,
        meas,
        unitaries=unitaries,
        input_alphabet=inputs,
        output_alphabet=outputs,
        name=name,
    )


def _psd_defect(m: np.ndarray) -> float:
    vals = np.linalg.eigvalsh((m + dagger(m)) / 2)
    top = max(float(vals[-1]), 0.0)
    return max(0.0, -float(vals[0]) - 1e-8 * top)


def _embedded_factor(m: np.ndarray, dims: Sequence[int], site: int) -> tuple[np.ndarray, float]:
    """Extract Q such that m ~ I_pre (x) Q (x) I_post; return (Q, defect)."""
    r = len(dims)
    t = m.reshape(tuple(dims) * 2)
    other = [i for i in range(r) if i != site]
    q = t
    # contract each non-site index pair (row with matching column index)
    for count, i in enumerate(other):
        row_axis = i - sum(1 for j in other[:count] if j < i)
        col_axis = row_axis + (r - count)
        q = np.trace(q, axis1=row_axis, axis2=col_axis)
    d_other = 1
    for i in other:
        d_other *= dims[i]
    q = q / d_other
    rebuilt = np.eye(1, dtype=np.complex128)
    for i in range(r):
        rebuilt = np.kron(rebuilt, q if i == site else np.eye(dims[i]))
    defect = float(np.max(np.abs(rebuilt - m))) if m.size else 0.0
    return q, defect


def _validate_components_structure(d: Device, report: ValidationReport) -> None:
    dims = d.dims
    r = len(dims)
    for a in d.input_alphabet:
        if not isinstance(a, tuple) or len(a) != r:
            report.add("component-input-structure", 1.0, f"input {a!r} is not an {r}-tuple")
            return
    for a, outs in d.measurements.items():
        marginals: list[dict[Letter, np.ndarray]] = [{} for _ in range(r)]
        for x, p in outs.items():
            if not isinstance(x, tuple) or len(x) != r:
                report.add("component-output-structure", 1.0, f"output {x!r} is not an {r}-tuple")
                return
            for i in range(r):
                m = marginals[i].get(x[i])
                marginals[i][x[i]] = p if m is None else m + p
        worst_embed = 0.0
        factors: list[dict[Letter, np.ndarray]] = [{} for _ in range(r)]
        for i in range(r):
            for y, m in marginals[i].items():
                q, defect = _embedded_factor(m, dims, i)
                worst_embed = max(worst_embed, defect)
                factors[i][y] = q
        if worst_embed > HERM_TOL:
            report.add("component-marginal-factorization", worst_embed, f"input {a!r}")
        worst_prod = 0.0
        for x, p in outs.items():
            rebuilt = np.eye(1, dtype=np.complex128)
            for i in range(r):
                rebuilt = np.kron(rebuilt, factors[i][x[i]])
            worst_prod = max(worst_prod, float(np.max(np.abs(rebuilt - p))))
        if worst_prod > HERM_TOL:
            report.add("component-product-form", worst_prod, f"input {a!r}")


def _validate_contextual_structure(d: Device, report: ValidationReport) -> None:
    # contexts are the declared input letters: non-repeating base-letter tuples
    base_marginals: dict[Letter, dict[Letter, np.ndarray]] = {}
    for a in d.input_alphabet:
        if not isinstance(a, tuple):
            report.add("context-structure", 1.0, f"context {a!r} is not a tuple")
            return
        if len(set(a)) != len(a):
            report.add("context-repeats", 1.0, f"context {a!r} repeats a base letter")
    for a, outs in d.measurements.items():
        m = len(a)
        per_letter: list[dict[Letter, np.ndarray]] = [{} for _ in range(m)]
        for x, p in outs.items():
            if not isinstance(x, tuple) or len(x) != m:
                report.add(
                    "context-output-length", 1.0,
                    f"output {x!r} does not match context length {m}",
                )
                return
            for k in range(m):
                prev = per_letter[k].get(x[k])
                per_letter[k][x[k]] = p if prev is None else prev + p
        # per-letter marginals must be projectors, commute within the context,
        # agree across contexts, and their products rebuild the joint operators
        worst_proj = 0.0
        worst_comm = 0.0
        for k, b in enumerate(a):
            for y, q in per_letter[k].items():
                worst_proj = max(worst_proj, projector_defect(q))
            stored = base_marginals.setdefault(b, {})
            for y, q in per_letter[k].items():
                if y in stored:
                    dev = float(np.max(np.abs(stored[y] - q)))
                    if dev > HERM_TOL:
                        report.add(
                            "context-consistency", dev,
                            f"base letter {b!r} differs between contexts",
                        )
                else:
                    stored[y] = q
        for j in range(len(a)):
            for k in range(j + 1, len(a)):
                for qj in per_letter[j].values():
                    for qk in per_letter[k].values():
                        worst_comm = max(
                            worst_comm, float(np.max(np.abs(qj @ qk - qk @ qj)))
                        )
        if worst_proj > HERM_TOL:
            report.add("context-marginal-projector", worst_proj, f"context {a!r}")
        if worst_comm > HERM_TOL:
            report.add("context-commutation", worst_comm, f"context {a!r}")
        worst_prod = 0.0
        for x, p in outs.items():
            prod = np.eye(d.dim, dtype=np.complex128)
            for k in range(m):
                prod = prod @ per_letter[k][x[k]]
            worst_prod = max(worst_prod, float(np.max(np.abs(prod - p))))
        if worst_prod > HERM_TOL:
            report.add("context-product-form", worst_prod, f"context {a!r}")


def validate_device(d: Device) -> ValidationReport:
    """Check every device invariant; the report is empty iff the device is well formed."""
    report = ValidationReport()
    dim = d.dim
    prod = 1
    for x in d.dims:
        prod *= x
    if prod != dim:
        report.add("dims-product", abs(prod - dim), f"dims {d.dims} vs state dim {dim}")

    h = hermiticity_defect(d.state)
    if h > HERM_TOL:
        report.add("state-hermitian", h)
    psd = _psd_defect(d.state)
    if psd > 0:
        report.add("state-psd", psd)
    tr = float(np.trace(d.state).real)
    if d.kind == ABSTRACT:
        if tr <= HERM_TOL:
            report.add("state-nonzero", abs(tr), "abstract state must be nonzero PSD")
    else:
        if abs(tr - 1.0) > HERM_TOL:
            report.add("state-trace", abs(tr - 1.0))

    for a in d.input_alphabet:
        outs = d.measurements.get(a)
        if outs is None:
            report.add("measurement-missing", 1.0, f"input {a!r}")
            continue
        total = np.zeros((dim, dim), dtype=np.complex128)
        worst_proj = 0.0
        for x, p in outs.items():
            if p.shape[0] != dim:
                report.add("measurement-dim", abs(p.shape[0] - dim), f"({a!r}, {x!r})")
                continue
            worst_proj = max(worst_proj, projector_defect(p))
            total += p
            if x not in d.output_alphabet:
                report.add("output-letter", 1.0, f"{x!r} not in output alphabet")
        if worst_proj > HERM_TOL:
            report.add("measurement-projector", worst_proj, f"input {a!r}")
        comp = float(np.max(np.abs(total - np.eye(dim))))
        if comp > HERM_TOL:
            report.add("measurement-completeness", comp, f"input {a!r}")
        listed = list(outs.values())
        worst_orth = 0.0
        for j in range(len(listed)):
            for k in range(j + 1, len(listed)):
                worst_orth = max(worst_orth, float(np.max(np.abs(listed[j] @ listed[k]))))
        if worst_orth > HERM_TOL:
            report.add("measurement-orthogonality", worst_orth, f"input {a!r}")

    for a, u in d.unitaries.items():
        if u.shape[0] != dim:
            report.add("unitary-dim", abs(u.shape[0] - dim), f"input {a!r}")
            continue
        dev = float(np.max(np.abs(dagger(u) @ u - np.eye(dim))))
        if dev > HERM_TOL:
            report.add("unitary", dev, f"input {a!r}")

    if d.kind == COMPONENTS:
        _validate_components_structure(d, report)
    elif d.kind == CONTEXTUAL:
        _validate_contextual_structure(d, report)
    return report


@dataclass(frozen=True)
class DeviceStatePair:
    """Post-selection operators on the device and on its purifying system.

    device_state = sqrt(X) phi sqrt(X); adversary_state = (sqrt(phi) X sqrt(phi))^T.
    The two share their nonzero spectrum.
    """

    device_state: np.ndarray
    adversary_state: np.ndarray


def state_pair(d: Device, x) -> DeviceStatePair:
    """Device/adversary state pair for a PSD operator X on the device space."""
    xm = as_matrix(x)
    if xm.shape[0] != d.dim:
        raise DimMismatchError(f"X has dim {xm.shape[0]}, device has dim {d.dim}")
    rx = sqrtm_psd(xm)
    rphi = sqrtm_psd(d.state)
    dev = rx @ d.state @ rx
    adv = (rphi @ xm @ rphi).T
    return DeviceStatePair(device_state=dev, adversary_state=adv)


def _branch_operator(d: Device, a_seq: Sequence[Letter], x_seq: Sequence[Letter]) -> np.ndarray:
    """M_n ... M_1 with M_j = U_{a_j} P_{a_j}^{x_j}."""
    m = np.eye(d.dim, dtype=np.complex128)
    for a, x in zip(a_seq, x_seq):
        m = d.unitary(a) @ d.projector(a, x) @ m
    return m


def evolve_sequence(d: Device, a_seq: Sequence[Letter], x_seq: Sequence[Letter]) -> DeviceStatePair:
    """Joint device/adversary operators after an input/output sequence.

    For the empty sequence this is (phi, phi^T).  The trace of the device
    state is the Born probability of the output sequence for a normalized
    device.
    """
    a_seq = list(a_seq)
    x_seq = list(x_seq)
    if len(a_seq) != len(x_seq):
        raise LengthMismatchError(
            f"input sequence length {len(a_seq)} != output sequence length {len(x_seq)}"
        )
    for a in a_seq:
        if a not in d.measurements:
            raise UnknownLetterError(f"unknown input letter {a!r}")
    m = _branch_operator(d, a_seq, x_seq)
    dev = m @ d.state @ dagger(m)
    rphi = sqrtm_psd(d.state)
    adv = (rphi @ dagger(m) @ m @ rphi).T
    return DeviceStatePair(device_state=dev, adversary_state=adv)


def abstractify(d: Device, eps: float) -> Device:
    """Replace the initial operator with state^(1/(1+eps)); tag the result abstract.

    Measurements and unitaries are shared with the source device.
    """
    if not 0.0 < eps <= 1.0:
        raise DeviceError(f"eps must lie in (0, 1], got {eps}")
    new_state = psd_power(d.state, 1.0 / (1.0 + eps))
    return Device(
        kind=ABSTRACT,
        dims=d.dims,
        state=frozen(new_state),
        input_alphabet=d.input_alphabet,
        output_alphabet=d.output_alphabet,
        measurements=d.measurements,
        unitaries=d.unitaries,
        name=f"{d.name}^(1/(1+{eps}))" if d.name else "",
    )


def born_probabilities(d: Device, a: Letter, state: np.ndarray | None = None) -> dict[Letter, float]:
    """Outcome distribution for one use on input a (unlisted outputs omitted)."""
    if a not in d.measurements:
        raise UnknownLetterError(f"unknown input letter {a!r}")
    rho = d.state if state is None else state
    out: dict[Letter, float] = {}
    for x, p in d.measurements[a].items():
        out[x] = float(np.einsum("ij,ji->", p, rho).real)
    return out


def is_classically_predictable(d: Device, a: Letter, tol: float = HERM_TOL) -> tuple[bool, float]:
    """Whether the state is invariant under pinching by the a-measurement."""
    pinched = np.zeros_like(d.state)
    for p in d.measurements[a].values():
        pinched += p @ d.state @ p
    dev = float(np.max(np.abs(pinched - d.state)))
    return dev <= tol, dev


def is_deterministic_on(d: Device, a: Letter, tol: float = HERM_TOL) -> tuple[bool, float]:
    """Whether state = P_a^x state P_a^x for some single output x."""
    best = np.inf
    for p in d.measurements[a].values():
        dev = float(np.max(np.abs(p @ d.state @ p - d.state)))
        best = min(best, dev)
    return best <= tol, best


# ---------------------------------------------------------------------------
# file format


def _letter_to_json(letter: Letter):
    if isinstance(letter, tuple):
        return [_letter_to_json(v) for v in letter]
    if isinstance(letter, (np.integer,)):
        return int(letter)
    return letter


def _letter_from_json(obj) -> Letter:
    if isinstance(obj, list):
        return tuple(_letter_from_json(v) for v in obj)
    return obj


def device_to_dict(d: Device) -> dict:
    inputs = []
    for a in d.input_alphabet:
        entry: dict[str, Any] = {
            "letter": _letter_to_json(a),
            "projectors": [
                {"output": _letter_to_json(x), "matrix": matcore.matrix_to_pairs(p)}
                for x, p in d.measurements[a].items()
            ],
        }
        if a in d.unitaries:
            entry["unitary"] = matcore.matrix_to_pairs(d.unitaries[a])
        inputs.append(entry)
    return {
        "kind": d.kind,
        "name": d.name,
        "dims": list(d.dims),
        "phi": matcore.matrix_to_pairs(d.state),
        "output_alphabet": [_letter_to_json(x) for x in d.output_alphabet],
        "inputs": inputs,
    }


def device_from_dict(data: Mapping) -> Device:
    meas: dict[Letter, dict[Letter, np.ndarray]] = {}
    unis: dict[Letter, np.ndarray] = {}
    for entry in data["inputs"]:
        a = _letter_from_json(entry["letter"])
        meas[a] = {
            _letter_from_json(p["output"]): matcore.matrix_from_pairs(p["matrix"])
            for p in entry["projectors"]
        }
        if "unitary" in entry:
            unis[a] = matcore.matrix_from_pairs(entry["unitary"])
    outputs = None
    if "output_alphabet" in data:
        outputs = [_letter_from_json(x) for x in data["output_alphabet"]]
    return make_device(
        kind=data["kind"],
        dims=data["dims"],
        state=matcore.matrix_from_pairs(data["phi"]),
        measurements=meas,
        unitaries=unis,
        input_alphabet=list(meas),
        output_alphabet=outputs,
        name=data.get("name", ""),
    )


def save_device(d: Device, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(device_to_dict(d), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_device(path) -> Device:
    with open(path, "r", encoding="utf-8") as fh:
        return device_from_dict(json.load(fh))
