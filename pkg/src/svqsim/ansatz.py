"""Parametrised circuits: the hardware-efficient SSVQE ansatz and the
one-hot-preserving state-preparation circuit.

Only RX(pi/2), RZ and CZ are emitted, so every circuit here can be error
amplified and noise-modelled the same way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import PAULI, Circuit, GateOp, gate

HALF_PI = np.pi / 2


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    depth: int = 1

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")

    @property
    def num_parameters(self) -> int:
        return 2 * self.n_qubits * (self.depth + 1)


def build_ansatz(spec: AnsatzSpec) -> Circuit:
    """U_D(theta).

    Each of the D blocks is [RX(pi/2) on all qubits] [RZ(theta) on all]
    [RX(pi/2) on all] [RZ(theta) on all] [CZ on 0-1, 1-2, ...], followed by
    one more rotation column without the entangler. RX(pi/2) RZ RX(pi/2) RZ
    reaches any single-qubit state from a basis state, and together with the
    trailing RZ of the previous column it is a full ZXZ Euler rotation.
    Slots are numbered in gate order.
    """
    n = spec.n_qubits
    ops: list[GateOp] = []
    slot = 0

    def rotation_column():
        nonlocal slot
        for _ in range(2):
            ops.extend(gate("RX", q, angle=HALF_PI) for q in range(n))
            for q in range(n):
                ops.append(gate("RZ", q, slot=slot))
                slot += 1

    for _ in range(spec.depth):
        rotation_column()
        ops.extend(gate("CZ", q, q + 1) for q in range(n - 1))
    rotation_column()
    return Circuit(n, tuple(ops))


def random_parameters(n: int, rng: np.random.Generator | int | None) -> np.ndarray:
    """Uniform initial angles on [0, 2 pi)."""
    return np.random.default_rng(rng).uniform(0.0, 2 * np.pi, size=n)


# -- excitation-exchange gate -----------------------------------------------

def _hadamard(q: int) -> list[GateOp]:
    # proportional to H
    return [gate("RZ", q, angle=HALF_PI), gate("RX", q, angle=HALF_PI), gate("RZ", q, angle=HALF_PI)]


def _rx_minus_half_pi(q: int) -> list[GateOp]:
    # RZ(pi) RX(pi/2) RZ(pi) = -RX(-pi/2)
    return [gate("RZ", q, angle=np.pi), gate("RX", q, angle=HALF_PI), gate("RZ", q, angle=np.pi)]


def _cnot(control: int, target: int) -> list[GateOp]:
    return _hadamard(target) + [gate("CZ", control, target)] + _hadamard(target)


def _ry_slot(q: int, slot: int) -> list[GateOp]:
    # RX(pi/2) RZ(t) RX(-pi/2) = RY(-t)
    return _rx_minus_half_pi(q) + [gate("RZ", q, slot=slot), gate("RX", q, angle=HALF_PI)]


def ry_ops(q: int, angle: float) -> list[GateOp]:
    """RY(angle) on qubit q in the native RX(pi/2)/RZ alphabet, up to global phase."""
    return _rx_minus_half_pi(q) + [gate("RZ", q, angle=-angle), gate("RX", q, angle=HALF_PI)]


def excitation_generator() -> np.ndarray:
    """|01><10| + |10><01| = (XX + YY) / 2."""
    return (np.kron(PAULI["X"], PAULI["X"]) + np.kron(PAULI["Y"], PAULI["Y"])).real / 2


def excitation_matrix(theta: float) -> np.ndarray:
    return expm(-1j * theta * excitation_generator())


def excitation_ops(a: int, b: int, slot: int = 0) -> list[GateOp]:
    """Native gates realising exp(-i theta (|01><10| + h.c.)) on qubits (a, b),
    with theta read from parameter ``slot`` (used by two RZ gates)."""
    if a == b:
        raise ValueError("excitation gate needs two distinct qubits")
    ops = [gate("RZ", a, angle=-HALF_PI), gate("RX", a, angle=HALF_PI), gate("RZ", a, angle=HALF_PI),
           gate("RZ", b, angle=HALF_PI)]
    ops += _cnot(a, b) + _ry_slot(a, slot) + _ry_slot(b, slot) + _cnot(a, b)
    ops += [gate("RZ", b, angle=-HALF_PI), gate("RZ", a, angle=-HALF_PI)]
    ops += _rx_minus_half_pi(a) + [gate("RZ", a, angle=HALF_PI)]
    # the sequence above carries a global factor -1; RZ(2 pi) = -I removes it
    ops.append(gate("RZ", a, angle=2 * np.pi))
    return ops


def build_excitation_gate(theta: float, qubits: tuple[int, int]) -> list[GateOp]:
    """Bound gate sequence for a fixed ``theta``."""
    a, b = qubits
    n = max(a, b) + 1
    return list(Circuit(n, tuple(excitation_ops(a, b))).bind([theta]).ops)


def _verify_excitation_compilation() -> None:
    probe = Circuit(2, tuple(excitation_ops(0, 1)))
    for theta in (0.0, 0.37, 1.9):
        if not np.allclose(probe.unitary([theta]), excitation_matrix(theta), atol=1e-12):
            raise AssertionError("excitation gate compilation does not match its target matrix")


_verify_excitation_compilation()


@dataclass(frozen=True)
class SubspacePrepSpec:
    """U_ST(phi) over the one-hot states of the first ``levels`` qubits."""

    n_qubits: int
    levels: int
    layers: int | None = None

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.levels > self.n_qubits:
            raise ValueError(f"levels={self.levels} exceeds n_qubits={self.n_qubits}")
        if self.layers is not None and self.layers < 1:
            raise ValueError("layers must be >= 1")

    @property
    def num_layers(self) -> int:
        return self.layers if self.layers is not None else max(1, self.levels - 1)


def subspace_prep_blocks(spec: SubspacePrepSpec) -> list[Circuit]:
    """The logical gates of U_ST(phi) in order, each compiled to native ops.

    Each layer applies exchange gates on (0,1), (1,2), ..., (l-2, l-1)
    followed by RZ on qubits 0..l-1. Every block keeps the one-hot subspace
    invariant, and at zero parameters the whole circuit is the identity.
    """
    blocks: list[Circuit] = []
    slot = 0
    for _ in range(spec.num_layers):
        for q in range(spec.levels - 1):
            blocks.append(Circuit(spec.n_qubits, tuple(excitation_ops(q, q + 1, slot))))
            slot += 1
        for q in range(spec.levels):
            blocks.append(Circuit(spec.n_qubits, (gate("RZ", q, slot=slot),)))
            slot += 1
    return blocks


def build_subspace_prep(spec: SubspacePrepSpec) -> Circuit:
    """Alternating excitation-exchange chains and RZ columns (see :func:`subspace_prep_blocks`)."""
    return Circuit(spec.n_qubits, tuple(op for block in subspace_prep_blocks(spec) for op in block.ops))


def one_hot_indices(n_qubits: int, levels: int | None = None) -> list[int]:
    """Basis indices of X_j|0...0>, j = 0..levels-1 (qubit 0 is the MSB)."""
    levels = n_qubits if levels is None else levels
    return [1 << (n_qubits - 1 - j) for j in range(levels)]
