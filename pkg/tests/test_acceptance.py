"""The ten acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line before asserting.
"""

import time

import numpy as np
import pytest

from qflavor.aas import (
    build_distinguisher,
    build_generalized_swapper_to_distinguisher,
    build_swapper,
    gamma_of,
    swap_states,
)
from qflavor.commitments import binding_numeric, binding_sup, hiding_advantage
from qflavor.experiments import (
    abort_slack,
    random_layout,
    random_low_rank_scheme,
    random_orthogonal_pair,
    random_scheme,
    random_sub_unitary,
)
from qflavor.flavor import convert
from qflavor.oss import (
    SigningAborted,
    biased_oracle,
    exhaustive_forger,
    extract_claw,
    oss_keygen,
    oss_setup,
    oss_sign,
    oss_verify,
)
from qflavor.qcore import RegisterLayout, random_state, random_unitary
from qflavor.qpke import dec_distribution, enc, keygen, y_distribution
from qflavor.scheme_zoo import (
    ToyFunction,
    ToyPRS,
    dms_scheme,
    gl_scheme,
    halevi_micali_scheme,
    injective_scheme,
    keyed_injective_scheme,
    my,
)
from qflavor.stf import (
    brute_conversion_solver,
    dihedral_vertex_action,
    group_cyclic,
    group_dihedral,
    group_symmetric,
    regular_action,
    stf_from_group_action,
    symmetric_point_action,
    verify_stf,
)

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        return ok

    return emit


def test_criterion_01_forward_identity(report):
    t0 = time.perf_counter()
    worst = 0.0
    n, max_dim_seen = 120, 0
    for i in range(n):
        rng = np.random.default_rng([1, i])
        lay = random_layout(rng, 64)
        max_dim_seen = max(max_dim_seen, lay.total_dim)
        x, y = random_orthogonal_pair(lay, rng)
        u = random_sub_unitary(lay, rng)
        circ = build_distinguisher(u, x, y)
        psi, phi = swap_states(x, y)
        worst = max(worst, abs(circ.advantage(psi, phi) - gamma_of(u, x, y) / 2))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed <= 10 and max_dim_seen <= 64
    assert report(1, "AAS forward identity", ok,
                  f"{n} instances, dim <= {max_dim_seen}, max error {worst:.2e}, {elapsed:.2f}s")


def test_criterion_02_reverse_identity(report):
    worst = 0.0
    n = 120
    for i in range(n):
        rng = np.random.default_rng([2, i])
        lay = RegisterLayout((("out", 2),) + random_layout(rng, 32, 3).registers)
        psi, phi = random_orthogonal_pair(lay, rng)
        v = random_unitary(lay, rng)
        u, delta = build_swapper(v, psi, phi, "out")
        x, y = swap_states(psi, phi)
        worst = max(worst, abs(gamma_of(u, x, y) / 2 - delta))
    assert report(2, "AAS reverse identity", worst <= 1e-9, f"{n} instances, max error {worst:.2e}")


def test_criterion_03_generalized(report):
    n = 110
    worst_adv = worst_claim = 0.0
    local = True
    for i in range(n):
        rng = np.random.default_rng([3, i])
        a = random_layout(rng, 8, 2, prefix="a")
        z = random_layout(rng, 8, 2, prefix="z")
        x, y = random_orthogonal_pair(a, rng)
        tau = random_state(z, rng)
        # U acts on a random subset of A ∪ Z containing at least one Z register
        names = list(a.names) + list(z.names)
        pick = [nm for nm in names if rng.random() < 0.5]
        if not any(nm in z.names for nm in pick):
            pick.append(z.names[int(rng.integers(len(z.names)))])
        full = a.concat(z)
        u = random_unitary(full.sub([nm for nm in names if nm in pick]), rng)
        circ, advice, rep = build_generalized_swapper_to_distinguisher(u, x, y, tau)
        g2 = rep.gamma**2
        worst_adv = max(worst_adv, abs(rep.advantage - g2 / 4))
        worst_claim = max(worst_claim, abs(rep.claim_value - g2 / 2))
        primed = {nm + "'" for nm in u.target_names if nm in a.names}
        bit = advice.layout.names[-1]
        allowed = {circ.outcome, bit} | set(u.target_names) | primed
        local &= set(circ.targets) == allowed
    ok = worst_adv <= 1e-9 and worst_claim <= 1e-9 and local
    assert report(3, "generalized swapper", ok,
                  f"{n} instances, advantage err {worst_adv:.2e}, claim err {worst_claim:.2e}, locality {local}")


def test_criterion_04_perfect_dualities(report):
    rng = np.random.default_rng(4)
    values = {}
    for k in range(3):
        values[f"injective{k}"] = binding_sup(convert(injective_scheme(ToyFunction.random_injective(4, 16, rng))))
        values[f"keyed{k}"] = binding_sup(
            convert(keyed_injective_scheme([ToyFunction.random_injective(4, 8, rng) for _ in range(2)]))
        )
        values[f"dms{k}"] = binding_sup(convert(dms_scheme(ToyFunction.random_permutation(8, rng))))
        values[f"gl{k}"] = hiding_advantage(convert(gl_scheme(ToyFunction.random_injective(4, 8, rng))))
    worst = max(values.values())
    assert report(4, "perfect-case dualities", worst <= 1e-12,
                  f"converted binding (injective, DMS) and hiding (GL), max {worst:.2e}")


def test_criterion_05_my_binding(report):
    fs = [binding_sup(my(ToyPRS.haar(2, np.random.default_rng([5, s])))) ** 2 for s in range(24)]
    f3 = binding_sup(my(ToyPRS.haar(3, np.random.default_rng(53)), max_dim=2**18)) ** 2
    ok = max(fs) <= 2.0**-4 and f3 <= 2.0**-6
    assert report(5, "MY binding bound", ok,
                  f"n=2 over {len(fs)} tables max F {max(fs):.4g} (<= {2**-4}); n=3 F {f3:.4g} (<= {2**-6})")


def test_criterion_06_halevi_micali(report):
    out = {}
    for lam, ell in ((1, 2), (2, 1)):
        big_l = ell + 2 * lam + 1
        h = ToyFunction.random(2**big_l, 2**ell, np.random.default_rng([6, lam]))
        out[lam] = hiding_advantage(halevi_micali_scheme([h], lam=lam, max_dim=2**22))
    ok = all(out[lam] <= 2.0**-lam for lam in out)
    assert report(6, "Halevi-Micali hiding", ok,
                  ", ".join(f"lambda'={lam}: {v:.4f} <= {2.0**-lam}" for lam, v in out.items()))


def pke_grid():
    grid = [(f"cyclic{n}", regular_action(group_cyclic(n))) for n in range(1, 17)]
    for n in range(3, 9):
        grid.append((f"dihedral{n}-vertices", dihedral_vertex_action(n)))
        grid.append((f"dihedral{n}-regular", regular_action(group_dihedral(n))))
    for n in range(2, 5):
        grid.append((f"symmetric{n}-regular", regular_action(group_symmetric(n))))
        grid.append((f"symmetric{n}-points", symmetric_point_action(n)))
    return grid


def test_criterion_07_pke_correctness(report):
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for name, ga in pke_grid():
        pk, sk = keygen(lambda r: stf_from_group_action(ga, r), np.random.default_rng(7))
        for b in (0, 1):
            for y in np.flatnonzero(y_distribution(pk, b) > 0):
                worst = max(worst, abs(1 - dec_distribution(sk, enc(pk, b, y=int(y)))[b]))
                count += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed <= 30
    assert report(7, "PKE correctness", ok,
                  f"{len(pke_grid())} groups, {count} (b, y) cases, max error {worst:.2e}, {elapsed:.2f}s")


def test_criterion_08_stf_invariants(report):
    instances = failures = 0
    for name, ga in pke_grid():
        if ga.group.order > 24:
            continue
        for s0 in range(ga.set_size):
            for g in range(ga.group.order):
                chk = verify_stf(stf_from_group_action(ga, np.random.default_rng(0), s0=s0, g=g))
                instances += 1
                failures += not chk.ok
    assert report(8, "STF invariants", failures == 0, f"{instances} instances checked exhaustively, {failures} failures")


def test_criterion_09_binding_oracle(report):
    diffs = []
    for i in range(60):
        rng = np.random.default_rng([9, i])
        dc, dr = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        while dc * dr > 64:
            dr -= 1
        s = random_low_rank_scheme(rng, dc, dr) if i % 3 == 0 else random_scheme(rng, dc, dr)
        diffs.append(abs(binding_numeric(s, seed=i).value - binding_sup(s)))
    worst = max(diffs)
    assert report(9, "binding optimizer agreement", worst <= 1e-6, f"{len(diffs)} schemes, max |diff| {worst:.2e}")


def test_criterion_10_oss(report):
    rng = np.random.default_rng(10)
    build = lambda r: stf_from_group_action(dihedral_vertex_action(4), r)

    pp = oss_setup(build, 4, rng)
    honest = 0
    trials = 200
    for _ in range(trials):
        keys = oss_keygen(pp, rng)
        s0 = oss_sign(pp, keys.sk, 0, brute_conversion_solver, rng)
        s1 = oss_sign(pp, keys.sk, 1, brute_conversion_solver, rng)
        honest += oss_verify(pp, keys.vk, 0, s0) and oss_verify(pp, keys.vk, 1, s1)

    small = oss_setup(lambda r: stf_from_group_action(regular_action(group_cyclic(8)), r), 2, rng)
    forgeries = claws = 0
    for vk, s0, s1 in exhaustive_forger(small):
        forgeries += 1
        x0, x1 = extract_claw(small, s0, s1)
        claws += small[s1.index].eval(0, x0) == small[s1.index].eval(1, x1)

    lam, p, t = 8, 0.25, 10**4
    n = 4 * lam
    big = oss_setup(lambda r: stf_from_group_action(regular_action(group_cyclic(8)), r), n, rng)
    oracle = biased_oracle(brute_conversion_solver, p)
    aborts = 0
    for _ in range(t):
        keys = oss_keygen(big, rng)
        try:
            oss_sign(big, keys.sk, 1, oracle, rng)
        except SigningAborted:
            aborts += 1
    q = (1 - p) ** n
    limit = q + abort_slack(q, t)
    ok = honest == trials and forgeries > 0 and claws == forgeries and aborts / t <= limit
    assert report(10, "one-shot signatures", ok,
                  f"honest {honest}/{trials}, claws {claws}/{forgeries}, "
                  f"abort {aborts}/{t} = {aborts / t:.4g} <= {limit:.4g}")
