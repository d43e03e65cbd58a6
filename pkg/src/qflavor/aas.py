"""Swap <-> distinguish equivalence: circuit builders and exact evaluators.

A distinguisher is a :class:`Circuit`: a sequence of unitaries over a
layout, a designated outcome register, and a fixed preset state for every
register the caller does not supply (ancilla, advice). Advantages are
computed exactly from projector expectations.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qcore import (
    EPS_ID,
    HADAMARD,
    PAULI_X,
    PAULI_Z,
    LayoutError,
    QCoreError,
    QState,
    RegisterLayout,
    UnitaryOp,
    apply,
    controlled,
    gate,
    make_basis_state,
    measure_probabilities,
)


class PreconditionError(QCoreError):
    pass


@dataclass(frozen=True)
class SwapReport:
    gamma: float
    theta: float
    advantage: float
    claim_value: float | None = None


@dataclass(frozen=True, eq=False)
class Circuit:
    """Unitary part of a distinguisher plus its outcome register.

    ``inputs`` are the registers the caller supplies; ``preset`` holds the
    state of every other register (or is None when there are none).
    """

    layout: RegisterLayout
    steps: tuple[UnitaryOp, ...]
    outcome: str
    inputs: tuple[str, ...]
    preset: QState | None = None

    @property
    def targets(self) -> tuple[str, ...]:
        """Registers acted on by at least one step, in layout order."""
        touched = {n for op in self.steps for n in op.target_names}
        return tuple(n for n in self.layout.names if n in touched)

    def unitary(self) -> UnitaryOp:
        """The product of all steps as a single op over :attr:`targets`."""
        total = self.steps[0]
        for op in self.steps[1:]:
            total = op @ total
        return total

    def prepare(self, s: QState) -> QState:
        if tuple(s.layout.names) != self.inputs:
            s = s.permute(self.inputs)
        full = s if self.preset is None else s.tensor(self.preset)
        return QState(self.layout, full.permute(self.layout.names).amplitudes)

    def run(self, s: QState) -> QState:
        out = self.prepare(s)
        for op in self.steps:
            out = apply(op, out)
        return out

    def prob_one(self, s: QState) -> float:
        return float(measure_probabilities(self.run(s), self.outcome)[1])

    def advantage(self, psi: QState, phi: QState) -> float:
        return abs(self.prob_one(psi) - self.prob_one(phi))


def _check_orthogonal(x: QState, y: QState):
    if x.layout.registers != y.layout.registers:
        raise LayoutError("x and y must share a layout")
    if abs(x.inner(y)) > EPS_ID:
        raise PreconditionError(f"inputs are not orthogonal (|<x|y>| = {abs(x.inner(y)):.3g})")


def _swap_sum(op: UnitaryOp, x: QState, y: QState) -> complex:
    _check_orthogonal(x, y)
    return y.inner(apply(op, x)) + x.inner(apply(op, y))


def gamma_of(op: UnitaryOp, x: QState, y: QState) -> float:
    """|<y|U|x> + <x|U|y>| for orthogonal x, y."""
    return abs(_swap_sum(op, x, y))


def alignment_phase(op: UnitaryOp, x: QState, y: QState) -> float:
    total = _swap_sum(op, x, y)
    if total == 0:
        return 0.0
    return -cmath.phase(total)


def phase_align(op: UnitaryOp, x: QState, y: QState) -> UnitaryOp:
    """e^{i theta} U with Re(<y|.|x> + <x|.|y>) equal to gamma_of(U, x, y)."""
    return op.scaled(cmath.exp(1j * alignment_phase(op, x, y)))


def swap_states(psi: QState, phi: QState) -> tuple[QState, QState]:
    """x = (psi+phi)/sqrt2, y = (psi-phi)/sqrt2 (and vice versa)."""
    _check_orthogonal(psi, phi)
    r = 1 / np.sqrt(2)
    return (
        QState(psi.layout, r * (psi.amplitudes + phi.amplitudes)),
        QState(psi.layout, r * (psi.amplitudes - phi.amplitudes)),
    )


def _fresh_name(base: str, taken: Sequence[str]) -> str:
    name, k = base, 0
    while name in taken:
        k += 1
        name = f"{base}{k}"
    return name


def build_distinguisher(op: UnitaryOp, x: QState, y: QState, ancilla: str = "anc") -> Circuit:
    """H, controlled-(phase-aligned U), H on a fresh ancilla; measure it.

    On inputs (x+y)/sqrt2 and (x-y)/sqrt2 the advantage is gamma_of/2.
    """
    aligned = phase_align(op, x, y)
    anc = _fresh_name(ancilla, x.layout.names)
    layout = RegisterLayout(((anc, 2),) + x.layout.registers, max_dim=x.layout.max_dim)
    h = gate(anc, HADAMARD)
    steps = (h, controlled(aligned, anc), h)
    preset = make_basis_state(RegisterLayout(((anc, 2),)), [0])
    return Circuit(layout, steps, anc, x.layout.names, preset)


def build_swapper(
    v: UnitaryOp, psi: QState, phi: QState, outcome: str | None = None
) -> tuple[UnitaryOp, float]:
    """U = V^dagger Z_out V and the exact advantage of V on (psi, phi).

    ``outcome`` defaults to the first register of the input layout and must
    have dimension 2.
    """
    _check_orthogonal(psi, phi)
    outcome = outcome if outcome is not None else psi.layout.names[0]
    if psi.layout.dim_of(outcome) != 2:
        raise LayoutError(f"outcome register {outcome!r} must have dimension 2")
    p_psi = measure_probabilities(apply(v, psi), outcome)[1]
    p_phi = measure_probabilities(apply(v, phi), outcome)[1]
    z = gate(outcome, PAULI_Z)
    u = v.dagger() @ (z @ v)
    return u, float(abs(p_psi - p_phi))


def circuit_to_swapper(circuit: Circuit, psi: QState, phi: QState) -> tuple[UnitaryOp, float]:
    """Swapper built from a distinguisher circuit's unitary part via `build_swapper`.

    The swap targets are psi, phi with the circuit's preset registers attached.
    """
    full_psi, full_phi = circuit.prepare(psi), circuit.prepare(phi)
    return build_swapper(circuit.unitary(), full_psi, full_phi, circuit.outcome)


def _primed(names: Sequence[str], taken: Sequence[str]) -> dict[str, str]:
    mapping = {}
    for n in names:
        p = n + "'"
        while p in taken or p in mapping.values():
            p += "'"
        mapping[n] = p
    return mapping


def _contract_first(op: UnitaryOp, bra: QState, ket: QState, tau: QState) -> np.ndarray:
    """(<bra| ⊗ I_Z) U |ket>|tau>, as a vector on tau's registers."""
    out = apply(op, ket.tensor(tau))
    m = out.amplitudes.reshape(ket.layout.total_dim, tau.layout.total_dim)
    return bra.amplitudes.conj() @ m


def generalized_gamma(op: UnitaryOp, x: QState, y: QState, tau: QState) -> float:
    _check_orthogonal(x, y)
    v = _contract_first(op, y, x, tau) + _contract_first(op, x, y, tau)
    return float(np.linalg.norm(v))


def build_generalized_swapper_to_distinguisher(
    op: UnitaryOp, x: QState, y: QState, tau: QState, ancilla: str = "anc", bit: str = "B"
) -> tuple[Circuit, QState, SwapReport]:
    """Distinguisher with advice tau ⊗ sigma from a swapper U over (A, Z).

    sigma = (|x>_{A'}|0>_B + |y>_{A'}|1>_B)/sqrt2 and the controlled unitary
    is X_B U^dagger_{A',Z} U_{A,Z}. The advantage is gamma^2/4.
    """
    _check_orthogonal(x, y)
    a_names = x.layout.names
    z_names = tau.layout.names
    if set(a_names) & set(z_names):
        raise LayoutError("A and Z registers must be disjoint")
    for n in op.target_names:
        if n not in a_names and n not in z_names:
            raise LayoutError(f"U acts on {n!r}, which is neither in A nor in Z")
    prime = _primed(a_names, a_names + z_names)
    bit = _fresh_name(bit, a_names + z_names + tuple(prime.values()))
    anc = _fresh_name(ancilla, a_names + z_names + tuple(prime.values()) + (bit,))

    a_prime = x.layout.rename(prime)
    b_layout = RegisterLayout(((bit, 2),))
    sigma_layout = a_prime.concat(b_layout)
    sigma = QState(
        sigma_layout,
        np.stack([x.amplitudes, y.amplitudes], axis=1).reshape(-1) / np.sqrt(2),
    )
    advice = tau.tensor(sigma)

    u_a = op
    u_ap_dag = op.dagger().rename(prime)
    x_b = gate(bit, PAULI_X)

    # Claim value <y,tau,sigma|U~|x,tau,sigma> + <x,tau,sigma|U~|y,tau,sigma>.
    def tilde(s: QState) -> QState:
        return apply(x_b, apply(u_ap_dag, apply(u_a, s)))

    xs, ys = x.tensor(advice), y.tensor(advice)
    claim = ys.inner(tilde(xs)) + xs.inner(tilde(ys))
    theta = 0.0 if claim == 0 else -cmath.phase(claim)

    layout = RegisterLayout(((anc, 2),), max_dim=x.layout.max_dim).concat(x.layout.concat(advice.layout))
    h = gate(anc, HADAMARD)
    steps = (
        h,
        controlled(u_a, anc),
        controlled(u_ap_dag, anc),
        controlled(x_b.scaled(cmath.exp(1j * theta)), anc),
        h,
    )
    preset = make_basis_state(RegisterLayout(((anc, 2),)), [0]).tensor(advice)
    circuit = Circuit(layout, steps, anc, a_names, preset)

    psi, phi = swap_states(x, y)
    report = SwapReport(
        gamma=generalized_gamma(op, x, y, tau),
        theta=theta,
        advantage=circuit.advantage(psi, phi),
        claim_value=abs(claim),
    )
    return circuit, advice, report


def generalized_distinguisher_to_swapper(
    v: UnitaryOp, tau: QState, psi: QState, phi: QState, outcome: str | None = None
) -> tuple[UnitaryOp, float]:
    """Swapper for |x>|tau>, |y>|tau> from a distinguisher V with advice tau."""
    _check_orthogonal(psi, phi)
    return build_swapper(v, psi.tensor(tau), phi.tensor(tau), outcome)
