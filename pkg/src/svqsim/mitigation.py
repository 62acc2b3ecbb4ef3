"""Zero-noise extrapolation by gate-level error amplification.

RX and CZ gates (the noisy ones; RZ is virtual) are replaced by redundant
sequences whose error is roughly E times larger, the circuit is run at
several odd E, and a straight line in E is extrapolated back to E = 0.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .core import Circuit, GateKind, GateOp, NoiseModel, State, StateVector, gate, run_circuit
from .observables import Observable, expectation

IDENTITY_INSERTION = "identity"
SANDWICH = "sandwich"
MODES = (IDENTITY_INSERTION, SANDWICH)


@dataclass(frozen=True)
class AmplificationRule:
    factor: int
    mode: str = IDENTITY_INSERTION

    def __post_init__(self):
        if self.factor < 1 or self.factor % 2 == 0:
            raise ValueError(f"amplification factor must be an odd positive integer, got {self.factor}")
        if self.mode not in MODES:
            raise ValueError(f"unknown amplification mode {self.mode!r}")


def _amplify_op(op: GateOp, rule: AmplificationRule) -> list[GateOp]:
    e = rule.factor
    if op.kind is GateKind.CZ:
        return [op] * e
    if op.kind is not GateKind.RX:
        return [op]
    if rule.mode == IDENTITY_INSERTION:
        # G (G^dag G)^((E-1)/2)
        return [op] + [op.adjoint(), op] * ((e - 1) // 2)
    q = op.targets[0]
    return [gate("RZ", q, angle=np.pi)] + [op] * e + [gate("RZ", q, angle=np.pi)]


def amplify_circuit(circuit: Circuit, rule: AmplificationRule) -> Circuit:
    """Replace every RX and CZ following ``rule``; all other gates are kept.

    ``identity`` mode: G -> G (G^dag G)^((E-1)/2), noiselessly identical to G
    for every odd E. ``sandwich`` mode: RX(a) -> RZ(pi) RX(a)^E RZ(pi) and
    CZ -> CZ^E verbatim; for RX(pi/2) this equals the bare gate only when
    E = 3 mod 4, see :func:`noiseless_equivalent`.
    """
    ops: list[GateOp] = []
    for op in circuit.ops:
        ops.extend(_amplify_op(op, rule))
    return Circuit(circuit.n_qubits, tuple(ops))


def noiseless_equivalent(base: Circuit, amplified: Circuit, params: Sequence[float] | None = None,
                         atol: float = 1e-10) -> bool:
    """Whether the two circuits implement the same unitary up to global phase."""
    u = base.unitary(params)
    v = amplified.unitary(params)
    overlap = np.trace(u.conj().T @ v)
    dim = u.shape[0]
    if abs(abs(overlap) - dim) > atol * dim:
        return False
    return bool(np.allclose(v, u * overlap / abs(overlap), atol=atol))


@dataclass(frozen=True)
class ScalingPoint:
    factor: int
    value: float
    bias: float


def estimate_error_scaling(circuit: Circuit, factors: Sequence[int], noise: NoiseModel, observable: Observable,
                           input: State | None = None, mode: str = IDENTITY_INSERTION) -> list[ScalingPoint]:
    """Exact (density-matrix) observable bias versus E for one circuit."""
    ideal = expectation(observable, run_circuit(circuit, input=input))
    points = []
    for e in factors:
        amplified = amplify_circuit(circuit, AmplificationRule(e, mode))
        value = expectation(observable, run_circuit(amplified, input=input, noise=noise, mode="density"))
        points.append(ScalingPoint(e, value, value - ideal))
    return points


@dataclass(frozen=True)
class ExtrapolationEstimate:
    samples: tuple[tuple[float, float, float], ...]  # (E, mean, stderr) after merging duplicates
    slope: float
    intercept: float
    stderr: float
    residuals: tuple[float, ...]

    @property
    def mitigated(self) -> float:
        return self.intercept


def _merge_duplicates(samples: Sequence[tuple[float, float, float]]) -> list[tuple[float, float, float]]:
    groups: dict[float, list[tuple[float, float]]] = {}
    for e, m, s in samples:
        groups.setdefault(float(e), []).append((float(m), float(s)))
    merged = []
    for e in sorted(groups):
        vals = groups[e]
        if len(vals) == 1:
            merged.append((e, *vals[0]))
            continue
        means = np.array([m for m, _ in vals])
        errs = np.array([s for _, s in vals])
        if np.all(errs > 0):
            w = 1 / errs**2
            merged.append((e, float(w @ means / w.sum()), float(np.sqrt(1 / w.sum()))))
        else:
            merged.append((e, float(means.mean()), float(np.sqrt(np.sum(errs**2)) / len(vals))))
    return merged


def extrapolate(samples: Sequence[tuple[float, float, float]]) -> ExtrapolationEstimate:
    """Weighted least-squares line through (E, mean) evaluated at E = 0.

    Weights are 1/stderr^2 when every stderr is positive, uniform otherwise.
    The reported stderr propagates the sample errors through the fit.
    """
    merged = _merge_duplicates(samples)
    if not merged:
        raise ValueError("no samples to extrapolate")
    es = np.array([s[0] for s in merged])
    ys = np.array([s[1] for s in merged])
    errs = np.array([s[2] for s in merged])
    if len(merged) == 1:
        return ExtrapolationEstimate(tuple(merged), 0.0, float(ys[0]), float(errs[0]), (0.0,))
    w = 1 / errs**2 if np.all(errs > 0) else np.ones_like(errs)
    design = np.column_stack([np.ones_like(es), es])
    normal = design.T @ (w[:, None] * design)
    coef = np.linalg.solve(normal, design.T @ (w * ys))
    # intercept = a . y for the linear estimator; propagate the per-sample errors
    a = np.linalg.solve(normal, design.T * w)[0]
    stderr = float(np.sqrt(np.sum((a * errs) ** 2)))
    residuals = tuple(float(r) for r in ys - design @ coef)
    return ExtrapolationEstimate(tuple(merged), float(coef[1]), float(coef[0]), stderr, residuals)
