"""Random instance generators and the experiment suites driven by the CLI.

Each suite returns a list of report rows. A row has the fixed keys
``suite, instance_id, measured, expected, abs_error, pass`` plus optional
suite-specific extras.
"""

from __future__ import annotations

from typing import Any, Callable

import numpy as np

from .aas import (
    build_distinguisher,
    build_generalized_swapper_to_distinguisher,
    build_swapper,
    gamma_of,
    swap_states,
)
from .commitments import CanonicalCommitment, binding_sup, hiding_advantage, reveal_verify
from .flavor import convert, duality_check
from .oss import (
    SigningAborted,
    biased_oracle,
    exhaustive_forger,
    extract_claw,
    oss_keygen,
    oss_setup,
    oss_sign,
    oss_verify,
)
from .qcore import (
    EPS_ID,
    QState,
    RegisterLayout,
    UnitaryOp,
    random_state,
    random_unitary,
)
from .qpke import dec_distribution, eavesdrop_advantage, enc, keygen, y_distribution
from .scheme_zoo import (
    ToyFunction,
    ToyPRS,
    collapsing_scheme,
    dms_scheme,
    gl_scheme,
    halevi_micali_scheme,
    injective_scheme,
    keyed_injective_scheme,
    my,
    ywlq,
)
from .stf import (
    GroupAction,
    brute_conversion_solver,
    dihedral_vertex_action,
    group_cyclic,
    group_dihedral,
    group_symmetric,
    regular_action,
    stf_from_group_action,
)

Row = dict[str, Any]

SUITE_ORDER = ("aas", "generalized", "conversion", "zoo", "pke", "oss")


def suite_rng(seed: int, suite: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, SUITE_ORDER.index(suite), index])


def row(suite: str, instance_id: str, measured: float, expected: float, ok: bool | None = None,
        tol: float = EPS_ID, **extra) -> Row:
    err = abs(measured - expected)
    return {
        "suite": suite,
        "instance_id": instance_id,
        "measured": float(measured),
        "expected": float(expected),
        "abs_error": float(err),
        "pass": bool(err <= tol) if ok is None else bool(ok),
        **extra,
    }


# ---------------------------------------------------------------- instances

def random_layout(rng: np.random.Generator, max_dim: int = 64, max_regs: int = 4,
                  prefix: str = "r", min_dim: int = 2) -> RegisterLayout:
    """Random qudit layout with total dimension in [min_dim, max_dim]."""
    while True:
        k = int(rng.integers(1, max_regs + 1))
        dims = [int(rng.integers(2, 5)) for _ in range(k)]
        total = int(np.prod(dims))
        if min_dim <= total <= max_dim:
            return RegisterLayout(tuple((f"{prefix}{i}", d) for i, d in enumerate(dims)))


def random_orthogonal_pair(layout: RegisterLayout, rng) -> tuple[QState, QState]:
    x = random_state(layout, rng)
    y = random_state(layout, rng).amplitudes
    y = y - np.vdot(x.amplitudes, y) * x.amplitudes
    return x, QState.from_vector(layout, y)


def random_sub_unitary(layout: RegisterLayout, rng) -> UnitaryOp:
    """Haar unitary on a random nonempty subset of the layout's registers."""
    names = list(layout.names)
    k = int(rng.integers(1, len(names) + 1))
    chosen = sorted(rng.choice(len(names), size=k, replace=False))
    return random_unitary(layout.sub([names[i] for i in chosen]), rng)


def random_scheme(rng, dc: int, dr: int) -> CanonicalCommitment:
    layout = RegisterLayout.of(("C", dc), ("R", dr))
    v0, v1 = random_state(layout, rng), random_state(layout, rng)
    return CanonicalCommitment.from_states(layout, ["C"], ["R"], v0.amplitudes, v1.amplitudes, "random")


def random_low_rank_scheme(rng, dc: int, dr: int) -> CanonicalCommitment:
    """Random scheme whose commitment states have Schmidt rank below min(dc, dr)."""
    layout = RegisterLayout.of(("C", dc), ("R", dr))
    vecs = []
    for _ in range(2):
        rank = int(rng.integers(1, max(2, min(dc, dr))))
        a = rng.normal(size=(dc, rank)) + 1j * rng.normal(size=(dc, rank))
        b = rng.normal(size=(rank, dr)) + 1j * rng.normal(size=(rank, dr))
        m = a @ b
        vecs.append(m.reshape(-1) / np.linalg.norm(m))
    return CanonicalCommitment.from_states(layout, ["C"], ["R"], vecs[0], vecs[1], "random-low-rank")


# ---------------------------------------------------------------- suites

def run_aas(seed: int, sizes: dict) -> list[Row]:
    n, max_dim = int(sizes.get("instances", 100)), int(sizes.get("max_dim", 64))
    rows = []
    for i in range(n):
        rng = suite_rng(seed, "aas", i)
        layout = random_layout(rng, max_dim)
        x, y = random_orthogonal_pair(layout, rng)
        u = random_sub_unitary(layout, rng)
        circ = build_distinguisher(u, x, y)
        psi, phi = swap_states(x, y)
        local = set(circ.targets) - {circ.outcome} == set(u.target_names)
        adv, gamma = circ.advantage(psi, phi), gamma_of(u, x, y)
        rows.append(row("aas", f"fwd-{i:04d}", adv, gamma / 2, ok=abs(adv - gamma / 2) <= EPS_ID and local))
    for i in range(n):
        rng = suite_rng(seed, "aas", n + i)
        layout = RegisterLayout((("out", 2),) + random_layout(rng, max_dim // 2).registers)
        psi, phi = random_orthogonal_pair(layout, rng)
        v = random_unitary(layout, rng)
        u, delta = build_swapper(v, psi, phi, "out")
        x, y = swap_states(psi, phi)
        rows.append(row("aas", f"rev-{i:04d}", gamma_of(u, x, y) / 2, delta))
    return rows


def random_generalized_instance(rng, max_dim: int = 64):
    a = random_layout(rng, 8, 2, prefix="a")
    z = random_layout(rng, max(2, max_dim // a.total_dim), 2, prefix="z")
    x, y = random_orthogonal_pair(a, rng)
    tau = random_state(z, rng)
    u = random_unitary(a.concat(z), rng)
    return u, x, y, tau


def run_generalized(seed: int, sizes: dict) -> list[Row]:
    n = int(sizes.get("instances", 100))
    rows = []
    for i in range(n):
        rng = suite_rng(seed, "generalized", i)
        u, x, y, tau = random_generalized_instance(rng, int(sizes.get("max_dim", 32)))
        circ, _, rep = build_generalized_swapper_to_distinguisher(u, x, y, tau)
        g2 = rep.gamma**2
        rows.append(row("generalized", f"gen-{i:04d}/advantage", rep.advantage, g2 / 4))
        rows.append(row("generalized", f"gen-{i:04d}/claim", rep.claim_value, g2 / 2))
    return rows


def perfect_zoo(rng) -> dict[str, CanonicalCommitment]:
    return {
        "injective": injective_scheme(ToyFunction.random_injective(4, 8, rng)),
        "keyed_injective": keyed_injective_scheme([ToyFunction.random_injective(4, 8, rng) for _ in range(2)]),
        "dms": dms_scheme(ToyFunction.random_permutation(4, rng)),
        "gl": gl_scheme(ToyFunction.random_injective(4, 8, rng)),
    }


def run_conversion(seed: int, sizes: dict) -> list[Row]:
    rng = suite_rng(seed, "conversion")
    rows = []
    for name, scheme in perfect_zoo(rng).items():
        rep = duality_check(scheme)
        if name == "gl":
            rows.append(row("conversion", f"{name}/converted-hiding", rep.h1, 0.0, tol=1e-12, b0=rep.b0))
        else:
            rows.append(row("conversion", f"{name}/converted-binding", rep.b1, 0.0, tol=1e-12, h0=rep.h0))
    for t in range(int(sizes.get("my_tables", 3))):
        scheme = my(ToyPRS.haar(int(sizes.get("my_n", 2)), suite_rng(seed, "conversion", 1 + t)))
        rep = duality_check(scheme)
        soft = float(np.sqrt(2 * rep.b0))
        rows.append(row("conversion", f"my-{t:02d}/converted-hiding", rep.h1, soft,
                        ok=rep.h1 <= soft + EPS_ID, h0=rep.h0, b0=rep.b0, b1=rep.b1))
    return rows


def run_zoo(seed: int, sizes: dict) -> list[Row]:
    rows = []
    rng = suite_rng(seed, "zoo")
    schemes = dict(perfect_zoo(rng))
    schemes["ywlq"] = ywlq(ToyFunction.random(2, 8, rng))
    schemes["collapsing"] = collapsing_scheme([ToyFunction.random(16, 4, rng) for _ in range(2)])
    schemes["my"] = my(ToyPRS.haar(2, rng))
    for name, s in schemes.items():
        for b in (0, 1):
            rows.append(row("zoo", f"{name}/reveal-{b}", reveal_verify(s, b, s.commit_state(b)), 1.0))
    for name in ("injective", "keyed_injective", "dms"):
        rows.append(row("zoo", f"{name}/hiding", hiding_advantage(schemes[name]), 0.0, tol=1e-12))
    rows.append(row("zoo", "gl/binding", binding_sup(schemes["gl"]), 0.0, tol=1e-12))
    for name in ("ywlq", "collapsing"):
        s = schemes[name]
        h, bnd = hiding_advantage(s), binding_sup(s)
        rows.append(row("zoo", f"{name}/binding", bnd, bnd, ok=True, hiding=h))
    n = int(sizes.get("my_n", 2))
    for t in range(int(sizes.get("my_tables", 20))):
        f = binding_sup(my(ToyPRS.haar(n, suite_rng(seed, "zoo", 1 + t)))) ** 2
        bound = 2.0 ** (-2 * n)
        rows.append(row("zoo", f"my-n{n}-{t:02d}/fidelity", f, bound, ok=f <= bound + EPS_ID))
    for lam in sizes.get("hm_lambdas", [1, 2]):
        lam = int(lam)
        ell = 2 if lam == 1 else 1
        big_l = ell + 2 * lam + 1
        hrng = suite_rng(seed, "zoo", 100 + lam)
        s = halevi_micali_scheme([ToyFunction.random(2**big_l, 2**ell, hrng)], lam=lam, max_dim=2**22)
        h = hiding_advantage(s)
        rows.append(row("zoo", f"hm-lam{lam}/hiding", h, 2.0**-lam, ok=h <= 2.0**-lam))
    return rows


def pke_actions(sizes: dict) -> list[tuple[str, int, GroupAction]]:
    out = []
    for n in sizes.get("cyclic", [8]):
        out.append(("cyclic", int(n), regular_action(group_cyclic(int(n)))))
    for n in sizes.get("dihedral", [4]):
        out.append(("dihedral", int(n), dihedral_vertex_action(int(n))))
        out.append(("dihedral-regular", int(n), regular_action(group_dihedral(int(n)))))
    for n in sizes.get("symmetric", [3]):
        out.append(("symmetric", int(n), regular_action(group_symmetric(int(n)))))
    return out


def pke_correctness(ga: GroupAction, rng) -> tuple[list[float], object]:
    """Pr[dec = b] for every b and every y in the image, for one fresh key."""
    pk, sk = keygen(lambda r: stf_from_group_action(ga, r), rng)
    probs = []
    for b in (0, 1):
        p = y_distribution(pk, b)
        for y in np.flatnonzero(p > 0):
            probs.append(float(dec_distribution(sk, enc(pk, b, y=int(y)))[b]))
    return probs, pk


def run_pke(seed: int, sizes: dict) -> list[Row]:
    rows = []
    for i, (family, n, ga) in enumerate(pke_actions(sizes)):
        rng = suite_rng(seed, "pke", i)
        pk, sk = keygen(lambda r: stf_from_group_action(ga, r), rng)
        eav = eavesdrop_advantage(pk)
        for b in (0, 1):
            p = y_distribution(pk, b)
            worst = min(float(dec_distribution(sk, enc(pk, b, y=int(y)))[b]) for y in np.flatnonzero(p > 0))
            rows.append(row(
                "pke", f"{family}-{n}/b{b}", worst, 1.0, tol=1e-12,
                group=family, N=n, b=b, p_correct=worst,
                eavesdrop_values={"per_y": eav.per_y, "averaged": eav.averaged, "dephased": eav.dephased},
            ))
    return rows


def run_oss(seed: int, sizes: dict) -> list[Row]:
    rng = suite_rng(seed, "oss")
    ga = regular_action(group_cyclic(int(sizes.get("group_n", 8))))
    build = lambda r: stf_from_group_action(ga, r)
    n = int(sizes.get("N", 4))
    pp = oss_setup(build, n, rng)

    ok = 0
    trials = int(sizes.get("trials", 50))
    for _ in range(trials):
        keys = oss_keygen(pp, rng)
        s0 = oss_sign(pp, keys.sk, 0, brute_conversion_solver, rng)
        s1 = oss_sign(pp, keys.sk, 1, brute_conversion_solver, rng)
        ok += oss_verify(pp, keys.vk, 0, s0) and oss_verify(pp, keys.vk, 1, s1)
    rows = [row("oss", "honest-correctness", ok / trials, 1.0)]

    small = pp[: int(sizes.get("forger_N", 2))]
    claws = total = 0
    for vk, s0, s1 in exhaustive_forger(small):
        total += 1
        x0, x1 = extract_claw(small, s0, s1)
        claws += small[s1.index].eval(0, x0) == small[s1.index].eval(1, x1)
    claw_ok = total > 0 and claws == total
    rows.append(row("oss", "forger-claws", claws / max(total, 1), 1.0, ok=claw_ok, forgeries=total))

    p = float(sizes.get("p", 0.25))
    big_n = int(sizes.get("abort_N", 8))
    abort_trials = int(sizes.get("abort_trials", 500))
    pp_big = oss_setup(build, big_n, rng)
    oracle = biased_oracle(brute_conversion_solver, p)
    aborts = 0
    for _ in range(abort_trials):
        keys = oss_keygen(pp_big, rng)
        try:
            oss_sign(pp_big, keys.sk, 1, oracle, rng)
        except SigningAborted:
            aborts += 1
    freq = aborts / abort_trials
    bound = (1 - p) ** big_n
    slack = abort_slack(bound, abort_trials)
    rows.append(row("oss", f"abort-N{big_n}", freq, bound, ok=freq <= bound + slack,
                    N=big_n, abort_prob=freq, claw_extraction_ok=claw_ok))
    return rows


def abort_slack(q: float, trials: int) -> float:
    """Three binomial standard deviations plus one count of granularity."""
    return 3 * np.sqrt(q * (1 - q) / trials) + 1 / trials


SUITES: dict[str, Callable[[int, dict], list[Row]]] = {
    "aas": run_aas,
    "generalized": run_generalized,
    "conversion": run_conversion,
    "zoo": run_zoo,
    "pke": run_pke,
    "oss": run_oss,
}
