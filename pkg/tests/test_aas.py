import cmath

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qflavor.aas import (
    PreconditionError,
    alignment_phase,
    build_distinguisher,
    build_generalized_swapper_to_distinguisher,
    build_swapper,
    circuit_to_swapper,
    gamma_of,
    generalized_distinguisher_to_swapper,
    generalized_gamma,
    phase_align,
    swap_states,
)
from qflavor.experiments import (
    random_generalized_instance,
    random_layout,
    random_orthogonal_pair,
    random_sub_unitary,
)
from qflavor.qcore import (
    PAULI_X,
    LayoutError,
    QState,
    RegisterLayout,
    UnitaryOp,
    apply,
    gate,
    make_basis_state,
    random_state,
    random_unitary,
)

A = RegisterLayout.of(("A", 2))
ZERO, ONE = make_basis_state(A, [0]), make_basis_state(A, [1])
X_GATE = gate("A", PAULI_X)
I_GATE = gate("A", np.eye(2))


def dense_gamma(u, x, y):
    m = u.matrix_on(x.layout)
    return abs(np.vdot(y.amplitudes, m @ x.amplitudes) + np.vdot(x.amplitudes, m @ y.amplitudes))


def seeds():
    return st.integers(0, 2**32 - 1)


# ---- gamma and alignment

def test_gamma_perfect_swap():
    assert gamma_of(X_GATE, ZERO, ONE) == pytest.approx(2)


def test_gamma_identity():
    assert gamma_of(I_GATE, ZERO, ONE) == 0


def test_gamma_matches_matrix_elements():
    rng = np.random.default_rng(0)
    lay = RegisterLayout.of(("a", 2), ("b", 3), ("c", 2))
    x, y = random_orthogonal_pair(lay, rng)
    u = random_unitary(lay, rng)
    # loop-based evaluation of <y|U|x> + <x|U|y>
    m = u.matrix
    total = 0j
    for i in range(12):
        for j in range(12):
            total += np.conj(y.amplitudes[i]) * m[i, j] * x.amplitudes[j]
            total += np.conj(x.amplitudes[i]) * m[i, j] * y.amplitudes[j]
    assert gamma_of(u, x, y) == pytest.approx(abs(total), abs=1e-12)


def test_gamma_requires_orthogonality():
    with pytest.raises(PreconditionError):
        gamma_of(X_GATE, ZERO, QState(A, np.array([1, 1]) / np.sqrt(2)))


def test_alignment_phase_examples():
    assert alignment_phase(X_GATE, ZERO, ONE) == pytest.approx(0)
    ix = gate("A", 1j * PAULI_X)
    assert alignment_phase(ix, ZERO, ONE) == pytest.approx(-np.pi / 2)


@settings(max_examples=30, deadline=None)
@given(seeds())
def test_alignment_makes_sum_real(seed):
    rng = np.random.default_rng(seed)
    lay = random_layout(rng, 32)
    x, y = random_orthogonal_pair(lay, rng)
    u = random_sub_unitary(lay, rng)
    aligned = phase_align(u, x, y)
    s = y.inner(apply(aligned, x)) + x.inner(apply(aligned, y))
    assert abs(s.real - gamma_of(u, x, y)) <= 1e-12
    assert abs(s.imag) <= 1e-12


# ---- forward direction

def test_distinguisher_perfect():
    circ = build_distinguisher(X_GATE, ZERO, ONE)
    psi, phi = swap_states(ZERO, ONE)
    assert circ.advantage(psi, phi) == pytest.approx(1)


def test_distinguisher_identity():
    circ = build_distinguisher(I_GATE, ZERO, ONE)
    psi, phi = swap_states(ZERO, ONE)
    assert circ.advantage(psi, phi) == pytest.approx(0, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(seeds())
def test_distinguisher_advantage_is_half_gamma(seed):
    rng = np.random.default_rng(seed)
    lay = random_layout(rng, 64)
    x, y = random_orthogonal_pair(lay, rng)
    u = random_sub_unitary(lay, rng)
    circ = build_distinguisher(u, x, y)
    psi, phi = swap_states(x, y)
    assert abs(circ.advantage(psi, phi) - dense_gamma(u, x, y) / 2) <= 1e-9


def test_distinguisher_dense_oracle():
    # H, controlled-U, H built by hand from Kronecker products
    rng = np.random.default_rng(1)
    lay = RegisterLayout.of(("a", 2), ("b", 2))
    x, y = random_orthogonal_pair(lay, rng)
    u = random_unitary(lay, rng)
    circ = build_distinguisher(u, x, y)
    theta = alignment_phase(u, x, y)
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    cu = np.block([[np.eye(4), np.zeros((4, 4))], [np.zeros((4, 4)), cmath.exp(1j * theta) * u.matrix]])
    full = np.kron(h, np.eye(4)) @ cu @ np.kron(h, np.eye(4))
    psi, phi = swap_states(x, y)
    p = []
    for s in (psi, phi):
        out = full @ np.kron([1, 0], s.amplitudes)
        p.append(np.sum(np.abs(out[4:]) ** 2))
    assert circ.advantage(psi, phi) == pytest.approx(abs(p[0] - p[1]), abs=1e-12)


def test_distinguisher_locality():
    rng = np.random.default_rng(2)
    lay = RegisterLayout.of(("a", 2), ("b", 3), ("c", 2))
    x, y = random_orthogonal_pair(lay, rng)
    u = random_unitary(lay.sub(["b"]), rng)
    circ = build_distinguisher(u, x, y)
    assert set(circ.targets) == {circ.outcome, "b"}


def test_ancilla_name_is_fresh():
    lay = RegisterLayout.of(("anc", 2))
    x, y = make_basis_state(lay, [0]), make_basis_state(lay, [1])
    circ = build_distinguisher(gate("anc", PAULI_X), x, y)
    assert circ.outcome != "anc"


# ---- reverse direction

def test_swapper_perfect_distinguisher():
    lay = RegisterLayout.of(("out", 2), ("w", 2))
    psi = make_basis_state(lay, [0, 0])
    phi = make_basis_state(lay, [0, 1])
    # V sends psi to |1>|0> and phi to |0>|1>
    m = np.zeros((4, 4))
    m[2, 0] = m[1, 1] = m[0, 2] = m[3, 3] = 1
    v = UnitaryOp(lay, m)
    u, delta = build_swapper(v, psi, phi, "out")
    x, y = swap_states(psi, phi)
    assert delta == pytest.approx(1)
    assert gamma_of(u, x, y) / 2 == pytest.approx(1)


def test_swapper_blind_distinguisher():
    lay = RegisterLayout.of(("out", 2), ("w", 2))
    psi, phi = make_basis_state(lay, [0, 0]), make_basis_state(lay, [0, 1])
    u, delta = build_swapper(UnitaryOp(lay, np.eye(4)), psi, phi, "out")
    x, y = swap_states(psi, phi)
    assert delta == 0
    assert gamma_of(u, x, y) == pytest.approx(0, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(seeds())
def test_swapper_identity(seed):
    rng = np.random.default_rng(seed)
    lay = RegisterLayout((("out", 2),) + random_layout(rng, 16, 3).registers)
    psi, phi = random_orthogonal_pair(lay, rng)
    v = random_unitary(lay, rng)
    u, delta = build_swapper(v, psi, phi, "out")
    # independent evaluation of the advantage from the dense V
    vm = v.matrix
    half = lay.total_dim // 2
    p = [np.sum(np.abs((vm @ s.amplitudes)[half:]) ** 2) for s in (psi, phi)]
    assert delta == pytest.approx(abs(p[0] - p[1]), abs=1e-12)
    x, y = swap_states(psi, phi)
    assert abs(dense_gamma(u, x, y) / 2 - delta) <= 1e-9


def test_swapper_outcome_must_be_qubit():
    lay = RegisterLayout.of(("out", 3))
    with pytest.raises(LayoutError):
        build_swapper(UnitaryOp(lay, np.eye(3)), make_basis_state(lay, [0]), make_basis_state(lay, [1]), "out")


def test_round_trip_through_circuit():
    rng = np.random.default_rng(3)
    lay = RegisterLayout.of(("a", 2), ("b", 3))
    x, y = random_orthogonal_pair(lay, rng)
    u = random_unitary(lay, rng)
    circ = build_distinguisher(u, x, y)
    psi, phi = swap_states(x, y)
    u2, delta = circuit_to_swapper(circ, psi, phi)
    assert delta == pytest.approx(gamma_of(u, x, y) / 2, abs=1e-12)
    xs, ys = swap_states(circ.prepare(psi), circ.prepare(phi))
    assert gamma_of(u2, xs, ys) / 2 == pytest.approx(delta, abs=1e-12)


# ---- generalized swapper with auxiliary register

def test_generalized_perfect_swap_any_tau():
    rng = np.random.default_rng(4)
    tau = random_state(RegisterLayout.of(("Z", 3)), rng)
    circ, advice, rep = build_generalized_swapper_to_distinguisher(X_GATE, ZERO, ONE, tau)
    assert rep.gamma == pytest.approx(2)
    assert rep.advantage == pytest.approx(1)
    assert rep.claim_value == pytest.approx(2)


def test_generalized_identity():
    tau = make_basis_state(RegisterLayout.of(("Z", 2)), [1])
    _, _, rep = build_generalized_swapper_to_distinguisher(I_GATE, ZERO, ONE, tau)
    assert rep.gamma == pytest.approx(0, abs=1e-15)
    assert rep.advantage == pytest.approx(0, abs=1e-15)


def dense_generalized(u, x, y, tau):
    """Γ and claim value from dense tensors, with sigma built explicitly."""
    da, dz = x.layout.total_dim, tau.layout.total_dim
    m = u.matrix_on(x.layout.concat(tau.layout)).reshape(da, dz, da, dz)
    xt, yt, t = x.amplitudes, y.amplitudes, tau.amplitudes
    vec = np.einsum("a,azbw,b,w->z", yt.conj(), m, xt, t) + np.einsum("a,azbw,b,w->z", xt.conj(), m, yt, t)
    gamma = np.linalg.norm(vec)
    # advice tau ⊗ sigma, sigma over (A', B)
    sigma = np.stack([xt, yt], axis=1).reshape(-1) / np.sqrt(2)
    ud = m.reshape(da * dz, da * dz).conj().T.reshape(da, dz, da, dz)
    xb = np.array([[0, 1], [1, 0]])

    def tilde(a_vec):
        # state over (A, Z, A', B)
        s = np.einsum("a,z,pb->azpb", a_vec, t, sigma.reshape(da, 2))
        s = np.einsum("azcw,cwpb->azpb", m, s)
        s = np.einsum("pzqw,awqb->azpb", ud, s)
        return np.einsum("cb,azpb->azpc", xb, s)

    def ket(a_vec):
        return np.einsum("a,z,pb->azpb", a_vec, t, sigma.reshape(da, 2))

    claim = np.vdot(ket(yt), tilde(xt)) + np.vdot(ket(xt), tilde(yt))
    return gamma, abs(claim)


@settings(max_examples=25, deadline=None)
@given(seeds())
def test_generalized_identities(seed):
    rng = np.random.default_rng(seed)
    u, x, y, tau = random_generalized_instance(rng, 16)
    circ, advice, rep = build_generalized_swapper_to_distinguisher(u, x, y, tau)
    g, claim = dense_generalized(u, x, y, tau)
    assert rep.gamma == pytest.approx(g, abs=1e-12)
    assert generalized_gamma(u, x, y, tau) == pytest.approx(g, abs=1e-12)
    assert abs(rep.claim_value - claim) <= 1e-9
    assert abs(rep.claim_value - g**2 / 2) <= 1e-9
    assert abs(rep.advantage - g**2 / 4) <= 1e-9


def test_generalized_locality():
    rng = np.random.default_rng(5)
    a = RegisterLayout.of(("a0", 2), ("a1", 2))
    z = RegisterLayout.of(("z0", 2), ("z1", 3))
    x, y = random_orthogonal_pair(a, rng)
    tau = random_state(z, rng)
    u = random_unitary(RegisterLayout.of(("a1", 2), ("z1", 3)), rng)
    circ, advice, rep = build_generalized_swapper_to_distinguisher(u, x, y, tau)
    touched = set(circ.targets) - {circ.outcome}
    # U acts on (a1, z1); its primed dagger on (a1', z1); the bit on B
    assert "a0" not in touched and "z0" not in touched
    assert touched == {"a1", "z1", "a1'", "B"}


def test_generalized_reverse():
    rng = np.random.default_rng(6)
    a = RegisterLayout.of(("out", 2), ("w", 2))
    z = RegisterLayout.of(("z", 2))
    psi, phi = random_orthogonal_pair(a, rng)
    tau = random_state(z, rng)
    v = random_unitary(a.concat(z), rng)
    u, delta = generalized_distinguisher_to_swapper(v, tau, psi, phi, "out")
    x, y = swap_states(psi, phi)
    assert abs(gamma_of(u, x.tensor(tau), y.tensor(tau)) / 2 - delta) <= 1e-9


def test_generalized_reverse_perfect_ignores_tau():
    lay = RegisterLayout.of(("out", 2))
    tau = make_basis_state(RegisterLayout.of(("z", 3)), [2])
    psi, phi = make_basis_state(lay, [1]), make_basis_state(lay, [0])
    u, delta = generalized_distinguisher_to_swapper(UnitaryOp(lay, np.eye(2)), tau, psi, phi)
    assert delta == 1


def test_generalized_rejects_overlapping_registers():
    tau = make_basis_state(RegisterLayout.of(("A", 2)), [0])
    with pytest.raises(LayoutError):
        build_generalized_swapper_to_distinguisher(X_GATE, ZERO, ONE, tau)
