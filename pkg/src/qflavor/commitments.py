"""Canonical quantum bit commitments and their statistical metrics.

A scheme is stored through its two commitment vectors Q_b|0>, which is all
the hiding, binding and reveal metrics need. Dense unitaries are built on
demand: explicitly supplied ones are kept as they are, otherwise Q_b is
completed from Q_b|0> by a phase-fixed Householder reflection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.linalg import polar

from .qcore import (
    EPS_ID,
    DimensionError,
    DensityOp,
    LayoutError,
    QState,
    RegisterLayout,
    UnitaryOp,
    apply,
    fidelity,
    make_basis_state,
    partial_trace,
    trace_distance,
)

# Dense unitaries beyond this dimension are refused (memory guard).
MAX_DENSE_DIM = 2048


def unitary_from_state(v: np.ndarray) -> np.ndarray:
    """A unitary W with W|0> = v.

    W = alpha (I - 2 w w^dagger / |w|^2) with w = e_0 - conj(alpha) v, where
    alpha is the phase of v[0]; when w = 0 the reflection is the identity.
    """
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = v.shape[0]
    alpha = v[0] / abs(v[0]) if abs(v[0]) > 0 else 1.0
    w = -np.conj(alpha) * v
    w[0] += 1.0
    nw = np.vdot(w, w).real
    m = np.eye(d, dtype=complex)
    if nw > 1e-30:
        m -= (2.0 / nw) * np.outer(w, w.conj())
    return alpha * m


@dataclass(frozen=True, eq=False)
class CanonicalCommitment:
    """Commitment scheme (Q0, Q1) with its commit/reveal register split."""

    layout: RegisterLayout
    commit_registers: tuple[str, ...]
    reveal_registers: tuple[str, ...]
    vectors: tuple[np.ndarray, np.ndarray]
    name: str = ""
    unitaries: tuple[UnitaryOp, UnitaryOp] | None = field(default=None, repr=False)
    params: dict[str, Any] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "commit_registers", tuple(self.commit_registers))
        object.__setattr__(self, "reveal_registers", tuple(self.reveal_registers))
        roles = self.commit_registers + self.reveal_registers
        if sorted(roles) != sorted(self.layout.names) or len(set(roles)) != len(roles):
            raise LayoutError(
                f"commit {self.commit_registers} and reveal {self.reveal_registers} "
                f"must partition {self.layout.names}"
            )
        # QState validates length and normalization.
        vecs = tuple(QState(self.layout, v).amplitudes for v in self.vectors)
        object.__setattr__(self, "vectors", vecs)
        if self.unitaries is not None:
            for u in self.unitaries:
                if sorted(u.target_names) != sorted(self.layout.names):
                    raise LayoutError("Q_b must act on all of (C, R)")

    @classmethod
    def from_unitaries(
        cls,
        layout: RegisterLayout,
        commit: Sequence[str],
        reveal: Sequence[str],
        q0: UnitaryOp,
        q1: UnitaryOp,
        name: str = "",
        **params,
    ) -> "CanonicalCommitment":
        zero = make_basis_state(layout)
        vecs = (apply(q0, zero).amplitudes, apply(q1, zero).amplitudes)
        return cls(layout, tuple(commit), tuple(reveal), vecs, name, (q0, q1), params)

    @classmethod
    def from_states(
        cls,
        layout: RegisterLayout,
        commit: Sequence[str],
        reveal: Sequence[str],
        v0: np.ndarray,
        v1: np.ndarray,
        name: str = "",
        **params,
    ) -> "CanonicalCommitment":
        return cls(layout, tuple(commit), tuple(reveal), (np.asarray(v0), np.asarray(v1)), name, None, params)

    def unitary(self, b: int) -> UnitaryOp:
        _check_bit(b)
        if self.unitaries is not None:
            return self.unitaries[b]
        d = self.layout.total_dim
        if d > MAX_DENSE_DIM:
            raise DimensionError(f"refusing to build a dense {d}x{d} unitary")
        return UnitaryOp(self.layout, unitary_from_state(self.vectors[b]), check=False)

    def commit_state(self, b: int) -> QState:
        _check_bit(b)
        return QState(self.layout, self.vectors[b])

    def commit_matrix(self, b: int) -> np.ndarray:
        """Q_b|0> reshaped to a (dim C) x (dim R) matrix."""
        s = self.commit_state(b).permute(self.commit_registers + self.reveal_registers)
        dc = self.layout.sub(self.commit_registers).total_dim
        return s.amplitudes.reshape(dc, -1)


def _check_bit(b: int):
    if b not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {b!r}")


def commit_state(scheme: CanonicalCommitment, b: int) -> QState:
    return scheme.commit_state(b)


def reveal_verify(scheme: CanonicalCommitment, b: int, state: QState) -> float:
    """Acceptance probability |<0|Q_b^dagger|state>|^2 of the reveal check."""
    _check_bit(b)
    if state.layout.names != scheme.layout.names:
        state = state.permute(scheme.layout.names)
    return float(abs(np.vdot(scheme.vectors[b], state.amplitudes)) ** 2)


def reduced_states(scheme: CanonicalCommitment) -> tuple[DensityOp, DensityOp]:
    """Tr_R of both commitment states, on the commit registers."""
    return tuple(partial_trace(scheme.commit_state(b), scheme.commit_registers) for b in (0, 1))


def hiding_advantage(scheme: CanonicalCommitment) -> float:
    rho0, rho1 = reduced_states(scheme)
    return trace_distance(rho0, rho1)


def binding_sup(scheme: CanonicalCommitment) -> float:
    """Unbounded binding optimum, sqrt(F) of the reduced commit states."""
    rho0, rho1 = reduced_states(scheme)
    return float(np.sqrt(fidelity(rho0, rho1)))


@dataclass(frozen=True)
class BindingEstimate:
    value: float
    iterations: int
    converged: bool
    history: tuple[float, ...] = ()


def _polar_unitary(k: np.ndarray) -> np.ndarray:
    """W maximizing |Tr(W K)| over unitaries: W = (polar factor of K)^dagger."""
    u, _ = polar(k)
    return u.conj().T


def binding_numeric(
    scheme: CanonicalCommitment,
    max_iters: int = 200,
    seed: int = 0,
    advice_dim: int = 1,
    tol: float = 1e-14,
) -> BindingEstimate:
    """Maximize ||(<Q1 0| ⊗ I_Z)(I_C ⊗ U)(Q0|0> ⊗ |tau>)|| by alternating ascent.

    The variables are U on (R, Z), the advice |tau> and the output direction
    z on Z. Each sweep performs a polar-decomposition update of U followed
    by closed-form updates of z and tau, so the objective never decreases.
    With ``advice_dim=1`` Z is trivial.
    """
    rng = np.random.default_rng(seed)
    m0, m1 = scheme.commit_matrix(0), scheme.commit_matrix(1)
    dr = m0.shape[1]
    dz = int(advice_dim)
    if dz < 1:
        raise ValueError("advice_dim must be positive")

    def rand_unit(n):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        return v / np.linalg.norm(v)

    tau, z = rand_unit(dz), rand_unit(dz)
    # (I_C ⊗ W) acting on M ⊗ tau: the C x (R Z) matrix N becomes N W^T.
    n0 = lambda t: np.kron(m0, t[None, :])
    n1 = lambda zz: np.kron(m1, zz[None, :])

    def objective(w, t):
        out = n0(t) @ w.T
        v = (m1.conj()[:, :, None] * out.reshape(m0.shape[0], dr, dz)).sum(axis=(0, 1))
        return v

    w = np.eye(dr * dz, dtype=complex)
    best = 0.0
    history = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        k = n1(z).conj().T @ n0(tau)
        w = _polar_unitary(k).T
        v = objective(w, tau)
        val = float(np.linalg.norm(v))
        if val > 0:
            z = v / val
        if dz > 1:
            # Linear functional of tau: <M1 ⊗ z| W |M0 ⊗ e_k>.
            coeffs = np.array(
                [np.vdot(n1(z).reshape(-1), (n0(np.eye(dz)[j]) @ w.T).reshape(-1)) for j in range(dz)]
            )
            nc = np.linalg.norm(coeffs)
            if nc > 0:
                tau = coeffs.conj() / nc
            val = max(val, float(nc))
        history.append(val)
        if val <= best + tol and it > 1:
            best = max(best, val)
            converged = True
            break
        best = max(best, val)
    return BindingEstimate(min(best, 1.0), it, converged, tuple(history))


def _encode_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _decode_matrix(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("matrix entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def scheme_to_json(scheme: CanonicalCommitment) -> dict:
    """JSON document {registers, commit, reveal, Q0, Q1} with [re, im] entries."""
    return {
        "name": scheme.name,
        "registers": [[n, d] for n, d in scheme.layout.registers],
        "commit": list(scheme.commit_registers),
        "reveal": list(scheme.reveal_registers),
        "Q0": _encode_matrix(scheme.unitary(0).matrix_on(scheme.layout)),
        "Q1": _encode_matrix(scheme.unitary(1).matrix_on(scheme.layout)),
    }


def scheme_from_json(doc: dict | str) -> CanonicalCommitment:
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        layout = RegisterLayout(tuple((str(n), int(d)) for n, d in doc["registers"]))
        q0 = UnitaryOp(layout, _decode_matrix(doc["Q0"]))
        q1 = UnitaryOp(layout, _decode_matrix(doc["Q1"]))
        commit, reveal = doc["commit"], doc["reveal"]
    except KeyError as exc:
        raise ValueError(f"scheme document is missing {exc}") from None
    return CanonicalCommitment.from_unitaries(layout, commit, reveal, q0, q1, doc.get("name", ""))
