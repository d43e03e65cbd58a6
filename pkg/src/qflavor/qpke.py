"""Quantum-ciphertext public-key encryption over a swap-trapdoor function pair.

The public key is the public copy of an :class:`StfInstance` (trapdoor
removed). The secret key is the instance itself: it carries the trapdoor
together with the public group structure that Swap needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .qcore import (
    DensityOp,
    DimensionError,
    QState,
    RegisterLayout,
    UnitaryOp,
    apply,
    apply_classical,
    collapse,
    drop_register,
    hadamard_measure,
    make_basis_state,
    measure_probabilities,
    trace_distance,
)
from .stf import StfInstance

CT_LAYOUT_NAMES = ("D", "X")


@dataclass(frozen=True, eq=False)
class Ciphertext:
    """Ciphertext state over (D, X).

    ``y`` is kept by the encryptor for test oracles only; it is not part of
    the transmitted ciphertext and :func:`dec` never reads it.
    """

    state: QState
    y: int = field(repr=False)


def keygen(stf_builder: Callable[[np.random.Generator], StfInstance], rng) -> tuple[StfInstance, StfInstance]:
    stf = stf_builder(rng)
    return stf.public(), stf


def _prepare(pk: StfInstance, b: int) -> QState:
    """(|0> + (-1)^b |1>)_D |X>_X |0>_Y with f_D computed into Y."""
    nx, ny = pk.domain_size, pk.codomain_size
    layout = RegisterLayout.of(("D", 2), ("X", nx), ("Y", ny))
    amps = np.zeros((2, nx, ny), dtype=complex)
    amps[0, :, 0] = 1.0
    amps[1, :, 0] = (-1.0) ** b
    s = QState(layout, amps.reshape(-1) / np.sqrt(2 * nx))
    # |d, x, y> -> |d, x, y + f_d(x) mod |Y|>
    d, x, y = np.meshgrid(np.arange(2), np.arange(nx), np.arange(ny), indexing="ij")
    fx = np.where(d == 0, pk.f[0][x], pk.f[1][x])
    target = (d * nx + x) * ny + (y + fx) % ny
    return apply_classical(s, ["D", "X", "Y"], target.reshape(-1))


def y_distribution(pk: StfInstance, b: int = 0) -> np.ndarray:
    """Exact distribution of the measured y during encryption."""
    return measure_probabilities(_prepare(pk, b), "Y")


def enc(pk: StfInstance, b: int, rng: np.random.Generator | None = None, y: int | None = None) -> Ciphertext:
    """Encrypt a bit; the Y outcome is sampled with ``rng`` or forced via ``y``."""
    if b not in (0, 1):
        raise ValueError(f"message must be a bit, got {b!r}")
    s = _prepare(pk, b)
    if y is None:
        if rng is None:
            raise ValueError("need an rng or an explicit y")
        p = measure_probabilities(s, "Y")
        y = int(rng.choice(len(p), p=p))
    s = drop_register(collapse(s, "Y", y), "Y")
    return Ciphertext(s, y)


def _u_td(sk: StfInstance) -> np.ndarray:
    """Classical table of U_td on (D, X): |1, x> -> |1, Swap(td, 1, x)>."""
    nx = sk.domain_size
    table = np.arange(2 * nx)
    table[nx:] = nx + np.array([sk.swap(1, x) for x in range(nx)])
    return table


def _check_ct(sk: StfInstance, ct: Ciphertext):
    names = ct.state.layout.names
    if names != CT_LAYOUT_NAMES or ct.state.layout.dims != (2, sk.domain_size):
        raise DimensionError(f"malformed ciphertext layout {ct.state.layout.registers}")


def decrypted_state(sk: StfInstance, ct: Ciphertext) -> QState:
    _check_ct(sk, ct)
    return apply_classical(ct.state, ["D", "X"], _u_td(sk))


def dec_distribution(sk: StfInstance, ct: Ciphertext) -> np.ndarray:
    """Exact (Pr[0], Pr[1]) of the decryption output."""
    p1 = hadamard_measure(decrypted_state(sk, ct), "D")
    return np.array([1.0 - p1, p1])


def dec(sk: StfInstance, ct: Ciphertext, rng: np.random.Generator) -> int:
    p = dec_distribution(sk, ct)
    return int(rng.choice(2, p=p))


@dataclass(frozen=True)
class EavesdropReport:
    per_y: float
    averaged: float
    dephased: float


def _ct_density(pk: StfInstance, b: int) -> np.ndarray:
    p = y_distribution(pk, b)
    out = np.zeros((2 * pk.domain_size,) * 2, dtype=complex)
    for y in np.flatnonzero(p > 0):
        v = enc(pk, b, y=int(y)).state.amplitudes
        out += p[y] * np.outer(v, v.conj())
    return out


def eavesdrop_advantage(pk: StfInstance) -> EavesdropReport:
    """Statistical distinguishing advantages of a party holding (D, X).

    ``per_y`` is the mean over y of the trace distance between the two
    fixed-y ciphertexts, ``averaged`` the trace distance of the y-averaged
    ciphertexts, ``dephased`` the same after dephasing D.
    """
    p = y_distribution(pk, 0)
    per_y = 0.0
    for y in np.flatnonzero(p > 0):
        a, b = (enc(pk, bit, y=int(y)).state for bit in (0, 1))
        per_y += p[y] * trace_distance(a.density(), b.density())
    layout = RegisterLayout.of(("D", 2), ("X", pk.domain_size))
    rho0, rho1 = (DensityOp(layout, _ct_density(pk, bit)) for bit in (0, 1))
    averaged = trace_distance(rho0, rho1)
    nx = pk.domain_size
    mask = np.kron(np.eye(2), np.ones((nx, nx)))
    deph0, deph1 = (DensityOp(layout, r.matrix * mask) for r in (rho0, rho1))
    return EavesdropReport(float(per_y), averaged, trace_distance(deph0, deph1))


@dataclass(frozen=True)
class AttackReport:
    """Success of the conversion adversary built from a swapper, with the bound chain.

    For each public parameter: ``success`` >= ``cauchy_schwarz`` >=
    ``triangle`` >= ``projected``; ``jensen`` is E_pp[projected] >= ``bound``,
    the squared swap amplitude of U on the primed superpositions.
    ``bound_from_sum`` is the same amplitude assembled from the per-pp sums.
    """

    success: float
    per_pp: tuple[dict, ...]
    jensen: float
    bound: float
    bound_from_sum: float


def swapper_to_conversion_attack(
    u: UnitaryOp,
    pks: Sequence[StfInstance],
    tau: QState,
    weights: Sequence[float] | None = None,
) -> AttackReport:
    """Exact success of the adversary that runs U on |pp>|0>|f_0^{-1}(y)>|tau> and measures X.

    U acts on (P, D, X) plus tau's registers, with P indexing ``pks``.
    """
    npp = len(pks)
    nx, ny = pks[0].domain_size, pks[0].codomain_size
    if any((pk.domain_size, pk.codomain_size) != (nx, ny) for pk in pks):
        raise DimensionError("all public parameters must share X and Y")
    w = np.full(npp, 1.0 / npp) if weights is None else np.asarray(weights, dtype=float)
    base = RegisterLayout.of(("P", npp), ("D", 2), ("X", nx))
    layout = base.concat(tau.layout)
    z = tau.layout.total_dim

    def run(pp: int, d: int, x: int) -> np.ndarray:
        s = make_basis_state(base, [pp, d, x]).tensor(tau)
        return apply(u, QState(layout, s.amplitudes)).amplitudes.reshape(npp, 2, nx, z)

    per_pp = []
    success = 0.0
    jensen = 0.0
    amplitude = 0.0 + 0.0j
    for i, pk in enumerate(pks):
        cols = {x: run(i, 0, x) for x in range(nx)}
        ket_tau = tau.amplitudes
        pr = cs = 0.0
        tri_vec = np.zeros((npp, 2, z), dtype=complex)
        proj = 0.0 + 0.0j
        for y in range(ny):
            pre0, pre1 = pk.preimage(0, y), pk.preimage(1, y)
            if pre0.size == 0 or pre1.size == 0:
                continue
            # U |pp>|0>|f_0^{-1}(y)>|tau> = Σ_x U|pp,0,x,tau> / sqrt|pre0|
            out = sum(cols[int(x)] for x in pre0)
            for xp in pre1:
                v = out[:, :, int(xp), :]
                norm2 = float(np.vdot(v, v).real) / pre0.size
                pr += pre0.size / nx * norm2
                cs += np.sqrt(pre0.size / nx * norm2)
                tri_vec += v
                proj += v[i, 1] @ ket_tau.conj()
        cs = cs**2 / nx
        tri = float(np.vdot(tri_vec, tri_vec).real) / nx**2
        projected = abs(proj) ** 2 / nx**2
        per_pp.append({"success": pr, "cauchy_schwarz": cs, "triangle": tri, "projected": projected})
        success += w[i] * pr
        jensen += w[i] * projected
        amplitude += w[i] * proj / nx
    bound = _primed_overlap(u, pks, tau, w)
    return AttackReport(float(success), tuple(per_pp), float(jensen), bound, float(abs(amplitude) ** 2))


def _primed_overlap(u: UnitaryOp, pks: Sequence[StfInstance], tau: QState, w: np.ndarray) -> float:
    """|<psi'_1, tau| (U ⊗ I) |psi'_0, tau>|^2 built from full states over (P, P', D, X, Y, Z).

    |psi'_b> = Σ_pp sqrt(w_pp) |pp>_P |pp>_P' Σ_x |b>_D |x>_X |f_b(x)>_Y / sqrt|X|.
    """
    npp = len(pks)
    nx, ny = pks[0].domain_size, pks[0].codomain_size
    layout = RegisterLayout.of(("P", npp), ("P'", npp), ("D", 2), ("X", nx), ("Y", ny))
    vecs = []
    for b in (0, 1):
        t = np.zeros((npp, npp, 2, nx, ny), dtype=complex)
        for i, pk in enumerate(pks):
            t[i, i, b, np.arange(nx), pk.f[b]] = np.sqrt(w[i] / nx)
        vecs.append(QState(layout, t.reshape(-1)).tensor(tau))
    out = apply(u, vecs[0])
    return float(abs(vecs[1].inner(out)) ** 2)
