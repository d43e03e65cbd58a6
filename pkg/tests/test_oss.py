import itertools

import numpy as np
import pytest

from qflavor.oss import (
    Signature0,
    Signature1,
    SigningAborted,
    biased_oracle,
    exhaustive_forger,
    extract_claw,
    oss_keygen,
    oss_setup,
    oss_sign,
    oss_verify,
)
from qflavor.stf import (
    brute_conversion_solver,
    dihedral_vertex_action,
    group_cyclic,
    regular_action,
    stf_from_group_action,
    table_stf,
    verify_stf,
)

C8 = regular_action(group_cyclic(8))
D4V = dihedral_vertex_action(4)


def builder(ga):
    return lambda r: stf_from_group_action(ga, r)


def never(stf, state, rng):
    return None


# ---- setup and keys

def test_setup_gives_independent_instances():
    pp = oss_setup(builder(C8), 4, np.random.default_rng(0))
    assert len(pp) == 4
    assert len({p.pp for p in pp}) == 4
    for p in pp:
        assert p.td is None
        assert all(p.eval(b, h) == (h + p.pp[b]) % 8 for b in (0, 1) for h in range(8))


def test_setup_instances_pass_invariants():
    rng = np.random.default_rng(1)
    for _ in range(4):
        assert verify_stf(stf_from_group_action(D4V, rng)).ok


def test_signing_key_support_is_stabilizer():
    rng = np.random.default_rng(2)
    pp = oss_setup(builder(D4V), 3, rng)
    keys = oss_keygen(pp, rng)
    for p, y, (_, s) in zip(pp, keys.vk, keys.sk):
        support = np.flatnonzero(np.abs(s.amplitudes) > 1e-12)
        assert len(support) == len(D4V.stabilizer(p.pp[0]))
        assert all(p.eval(0, x) == y for x in support)
        assert abs(np.linalg.norm(s.amplitudes) - 1) <= 1e-12


def test_injective_instance_gives_basis_states():
    rng = np.random.default_rng(3)
    pp = oss_setup(builder(C8), 2, rng)
    keys = oss_keygen(pp, rng)
    for _, s in keys.sk:
        assert np.count_nonzero(np.abs(s.amplitudes) > 1e-12) == 1


# ---- signing and verification

@pytest.mark.parametrize("ga", [C8, D4V], ids=lambda a: a.name)
def test_honest_signatures_verify(ga):
    rng = np.random.default_rng(4)
    pp = oss_setup(builder(ga), 4, rng)
    for _ in range(20):
        keys = oss_keygen(pp, rng)
        s0 = oss_sign(pp, keys.sk, 0, brute_conversion_solver, rng)
        s1 = oss_sign(pp, keys.sk, 1, brute_conversion_solver, rng)
        assert oss_verify(pp, keys.vk, 0, s0)
        assert oss_verify(pp, keys.vk, 1, s1)


def test_tampered_signatures_rejected():
    rng = np.random.default_rng(5)
    pp = oss_setup(builder(C8), 3, rng)
    keys = oss_keygen(pp, rng)
    s0 = oss_sign(pp, keys.sk, 0, brute_conversion_solver, rng)
    bad = ((s0.xs[0] + 1) % 8,) + s0.xs[1:]
    assert not oss_verify(pp, keys.vk, 0, Signature0(bad))
    s1 = oss_sign(pp, keys.sk, 1, brute_conversion_solver, rng)
    assert not oss_verify(pp, keys.vk, 1, Signature1(s1.index, (s1.x + 1) % 8))
    # wrong message, wrong type, wrong length, out of range
    assert not oss_verify(pp, keys.vk, 1, s0)
    assert not oss_verify(pp, keys.vk, 0, s1)
    assert not oss_verify(pp, keys.vk, 0, Signature0(s0.xs[:2]))
    assert not oss_verify(pp, keys.vk, 1, Signature1(7, 0))
    assert not oss_verify(pp, keys.vk, 2, s0)


def test_signing_aborts_when_oracle_fails():
    rng = np.random.default_rng(6)
    pp = oss_setup(builder(C8), 3, rng)
    keys = oss_keygen(pp, rng)
    with pytest.raises(SigningAborted):
        oss_sign(pp, keys.sk, 1, never, rng)


def test_signing_rejects_non_bit():
    rng = np.random.default_rng(7)
    pp = oss_setup(builder(C8), 1, rng)
    with pytest.raises(ValueError):
        oss_sign(pp, oss_keygen(pp, rng).sk, 2, brute_conversion_solver, rng)


def test_abort_rate_small_sample():
    # N = 2·ceil(1/p) instances, abort probability (1-p)^N
    p, n, trials = 0.5, 4, 2000
    rng = np.random.default_rng(8)
    pp = oss_setup(builder(C8), n, rng)
    oracle = biased_oracle(brute_conversion_solver, p)
    aborts = 0
    for _ in range(trials):
        keys = oss_keygen(pp, rng)
        try:
            oss_sign(pp, keys.sk, 1, oracle, rng)
        except SigningAborted:
            aborts += 1
    q = (1 - p) ** n
    assert aborts / trials <= q + 3 * np.sqrt(q * (1 - q) / trials) + 1 / trials


# ---- forgeries and claws

def brute_double_accepting(pp):
    """Enumerate (vk, sig0, sig1) over all of Y^N x X^N x [N] x X and filter by the verifiers."""
    ny, nx = pp[0].codomain_size, pp[0].domain_size
    n = len(pp)
    out = set()
    for vk in itertools.product(range(ny), repeat=n):
        for xs in itertools.product(range(nx), repeat=n):
            s0 = Signature0(xs)
            if not oss_verify(pp, vk, 0, s0):
                continue
            for i in range(n):
                for x in range(nx):
                    if oss_verify(pp, vk, 1, Signature1(i, x)):
                        out.add((vk, xs, i, x))
    return out


@pytest.mark.parametrize("ga", [regular_action(group_cyclic(4)), dihedral_vertex_action(3)], ids=lambda a: a.name)
def test_exhaustive_forger_is_complete(ga):
    pp = oss_setup(builder(ga), 2, np.random.default_rng(9))
    found = {(vk, s0.xs, s1.index, s1.x) for vk, s0, s1 in exhaustive_forger(pp)}
    assert found == brute_double_accepting(pp)


def test_every_forgery_gives_a_claw():
    pp = oss_setup(builder(C8), 2, np.random.default_rng(10))
    count = 0
    for vk, s0, s1 in exhaustive_forger(pp):
        assert oss_verify(pp, vk, 0, s0) and oss_verify(pp, vk, 1, s1)
        x0, x1 = extract_claw(pp, s0, s1)
        p = pp[s1.index]
        assert p.eval(0, x0) == p.eval(1, x1)
        count += 1
    assert count > 0


def test_forger_finds_nothing_without_claws():
    pp = (table_stf([0, 1], [2, 3], 4),)
    assert list(exhaustive_forger(pp)) == []


def test_forger_size_limit():
    pp = oss_setup(builder(C8), 3, np.random.default_rng(11))
    with pytest.raises(ValueError):
        next(exhaustive_forger(pp, limit=100))
