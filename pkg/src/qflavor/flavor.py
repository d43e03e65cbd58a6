"""One-call flavor conversion of canonical commitments and its duality harness."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .commitments import (
    MAX_DENSE_DIM,
    CanonicalCommitment,
    binding_sup,
    hiding_advantage,
)
from .qcore import (
    EPS_ID,
    HADAMARD,
    PAULI_Z,
    DimensionError,
    QState,
    RegisterLayout,
    UnitaryOp,
    apply,
    default_dim_cap,
    gate,
    make_basis_state,
)


@dataclass(frozen=True, eq=False)
class ConvertedScheme(CanonicalCommitment):
    """Q'_b = (Q0 ⊗ |0><0|_D + Q1 ⊗ |1><1|_D)(I ⊗ Z^b H_D).

    Commit register is (R, D), reveal register is C; D is the last register
    of the layout.
    """

    base: CanonicalCommitment | None = field(default=None, repr=False)
    control: str = "D"

    def select(self) -> UnitaryOp:
        """The single controlled application of the pair (Q0, Q1)."""
        q0 = self.base.unitary(0).matrix_on(self.base.layout)
        q1 = self.base.unitary(1).matrix_on(self.base.layout)
        p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        return UnitaryOp(self.layout, np.kron(q0, p0) + np.kron(q1, p1), check=False)

    def unitary(self, b: int) -> UnitaryOp:
        if b not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, got {b!r}")
        if self.layout.total_dim > MAX_DENSE_DIM:
            raise DimensionError(f"refusing to build a dense {self.layout.total_dim}-dim unitary")
        prep = np.linalg.matrix_power(PAULI_Z, b) @ HADAMARD
        pre = np.kron(np.eye(self.base.layout.total_dim), prep)
        return UnitaryOp(self.layout, self.select().matrix @ pre, check=False)


def _select_on_zero_branches(base: CanonicalCommitment, s: QState, control: str) -> np.ndarray:
    """Apply Q_d to the D=d branch of a state whose branches are ∝ |0>_{C,R}."""
    t = s.permute(base.layout.names + (control,)).amplitudes.reshape(-1, 2)
    out = np.zeros_like(t)
    for d in (0, 1):
        branch = t[:, d]
        amp = branch[0]
        if np.linalg.norm(branch[1:]) > 1e-14:
            out[:, d] = base.unitary(d).matrix_on(base.layout) @ branch
        else:
            out[:, d] = amp * base.vectors[d]
    return out.reshape(-1)


def convert(scheme: CanonicalCommitment, control: str = "D") -> ConvertedScheme:
    name = control
    while name in scheme.layout.names:
        name += "_"
    cap = scheme.layout.max_dim
    if cap is not None or scheme.layout.total_dim * 2 > default_dim_cap():
        cap = max(cap or 0, scheme.layout.total_dim * 2)
    layout = RegisterLayout(scheme.layout.registers + ((name, 2),), max_dim=cap)
    vecs = []
    for b in (0, 1):
        s = make_basis_state(layout)
        s = apply(gate(name, HADAMARD), s)
        if b:
            s = apply(gate(name, PAULI_Z), s)
        vecs.append(_select_on_zero_branches(scheme, s, name))
    return ConvertedScheme(
        layout,
        scheme.reveal_registers + (name,),
        scheme.commit_registers,
        tuple(vecs),
        name=f"converted({scheme.name})" if scheme.name else "converted",
        base=scheme,
        control=name,
    )


@dataclass(frozen=True)
class DualityReport:
    h0: float
    b0: float
    h1: float
    b1: float
    hiding_to_binding: bool
    binding_to_hiding: bool

    @property
    def holds(self) -> bool:
        return self.hiding_to_binding and self.binding_to_hiding


def duality_check(scheme: CanonicalCommitment, tol: float = EPS_ID) -> DualityReport:
    """Metrics of a scheme and its conversion, with the perfect-case implications.

    ``hiding_to_binding`` records that h0 = 0 implies b1 = 0 (vacuously true
    when h0 > tol); ``binding_to_hiding`` likewise for b0 = 0 and h1 = 0.
    """
    conv = convert(scheme)
    h0, b0 = hiding_advantage(scheme), binding_sup(scheme)
    h1, b1 = hiding_advantage(conv), binding_sup(conv)
    return DualityReport(
        h0, b0, h1, b1,
        hiding_to_binding=not (h0 <= tol) or b1 <= tol,
        binding_to_hiding=not (b0 <= tol) or h1 <= tol,
    )
