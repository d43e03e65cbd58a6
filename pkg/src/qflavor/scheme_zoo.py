"""Concrete commitment schemes over toy primitives.

Computational primitives are replaced by random tables and Haar-random
states drawn from an explicit RNG. Bit strings are encoded big-endian, so
the string (x, 0^k) is the integer x << k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .commitments import CanonicalCommitment
from .qcore import DimensionError, DomainError, RegisterLayout


@dataclass(frozen=True, eq=False)
class ToyFunction:
    domain_size: int
    codomain_size: int
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64).reshape(-1)
        if t.shape[0] != self.domain_size:
            raise DimensionError(f"table has {t.shape[0]} entries for domain size {self.domain_size}")
        if t.size and (t.min() < 0 or t.max() >= self.codomain_size):
            raise DimensionError("table entry outside the codomain")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def __call__(self, x):
        return self.table[x]

    @property
    def injective(self) -> bool:
        return len(np.unique(self.table)) == self.domain_size

    @property
    def permutation(self) -> bool:
        return self.domain_size == self.codomain_size and self.injective

    @classmethod
    def random(cls, domain_size: int, codomain_size: int, rng: np.random.Generator) -> "ToyFunction":
        return cls(domain_size, codomain_size, rng.integers(0, codomain_size, size=domain_size))

    @classmethod
    def random_injective(cls, domain_size: int, codomain_size: int, rng) -> "ToyFunction":
        if codomain_size < domain_size:
            raise DomainError("no injection into a smaller codomain")
        return cls(domain_size, codomain_size, rng.permutation(codomain_size)[:domain_size])

    @classmethod
    def random_permutation(cls, size: int, rng) -> "ToyFunction":
        return cls(size, size, rng.permutation(size))

    @classmethod
    def identity(cls, size: int, codomain_size: int | None = None) -> "ToyFunction":
        return cls(size, codomain_size or size, np.arange(size))

    @classmethod
    def constant(cls, domain_size: int, codomain_size: int, value: int = 0) -> "ToyFunction":
        return cls(domain_size, codomain_size, np.full(domain_size, value))


@dataclass(frozen=True, eq=False)
class ToyPRS:
    """2^n keyed pure states, each on a 2^m-dimensional register."""

    n: int
    states: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.states, dtype=complex)
        if s.ndim != 2 or s.shape[0] != 2**self.n:
            raise DimensionError("need one state per key")
        if not np.allclose(np.linalg.norm(s, axis=1), 1.0, atol=1e-10):
            raise DomainError("PRS states must be normalized")
        s.setflags(write=False)
        object.__setattr__(self, "states", s)

    @property
    def m(self) -> int:
        return int(np.log2(self.states.shape[1]))

    @classmethod
    def haar(cls, n: int, rng: np.random.Generator, m: int | None = None) -> "ToyPRS":
        m = 3 * n if m is None else m
        g = rng.normal(size=(2**n, 2**m)) + 1j * rng.normal(size=(2**n, 2**m))
        return cls(n, g / np.linalg.norm(g, axis=1, keepdims=True))


def _bits(size: int) -> int:
    b = int(size).bit_length() - 1
    if 1 << b != size:
        raise DimensionError(f"{size} is not a power of two")
    return b


def _zeros(layout: RegisterLayout) -> np.ndarray:
    return np.zeros(layout.dims, dtype=complex)


def _popparity(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    out = np.zeros_like(a)
    while np.any(a):
        out ^= a & 1
        a = a >> 1
    return out


def hadamard_n(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return (-1.0) ** _popparity(idx[:, None] & idx[None, :]) / np.sqrt(2**n)


def _scheme(layout, commit, reveal, t0, t1, name, **params) -> CanonicalCommitment:
    return CanonicalCommitment.from_states(
        layout, commit, reveal, t0.reshape(-1), t1.reshape(-1), name, **params
    )


def ywlq(g: ToyFunction, max_dim: int | None = None) -> CanonicalCommitment:
    """Q0|0> = 2^{-n/2} Σ_x |G(x)>_C |x,0^{2n}>_R, Q1|0> = 2^{-3n/2} Σ_y |y>_C |y>_R."""
    n = _bits(g.domain_size)
    if g.codomain_size != 2 ** (3 * n):
        raise DimensionError("G must stretch n bits to 3n bits")
    d = 2 ** (3 * n)
    layout = RegisterLayout.of(("C", d), ("R", d), max_dim=max_dim)
    t0, t1 = _zeros(layout), _zeros(layout)
    x = np.arange(2**n)
    t0[g.table, x << (2 * n)] = 2 ** (-n / 2)
    t1[np.arange(d), np.arange(d)] = 2 ** (-3 * n / 2)
    return _scheme(layout, ["C"], ["R"], t0, t1, "ywlq", n=n)


def my(prs: ToyPRS, max_dim: int | None = None) -> CanonicalCommitment:
    """Q0|0> = 2^{-n/2} Σ_k |phi_k>_C |k,0^{m-n}>_R, Q1|0> maximally entangled."""
    n, m = prs.n, prs.m
    d = 2**m
    layout = RegisterLayout.of(("C", d), ("R", d), max_dim=max_dim)
    t0, t1 = _zeros(layout), _zeros(layout)
    k = np.arange(2**n)
    t0[:, k << (m - n)] = prs.states.T * 2 ** (-n / 2)
    t1[np.arange(d), np.arange(d)] = 2 ** (-m / 2)
    return _scheme(layout, ["C"], ["R"], t0, t1, "my", n=n, m=m)


def injective_scheme(f: ToyFunction) -> CanonicalCommitment:
    """Q0|0> = Σ_x |x>_C |f(x)>_R, Q1|0> = Σ_x |x>_C |x,0^{m-n}>_R (normalized)."""
    if not f.injective:
        raise DomainError("f must be injective")
    n, m = _bits(f.domain_size), _bits(f.codomain_size)
    layout = RegisterLayout.of(("C", 2**n), ("R", 2**m))
    t0, t1 = _zeros(layout), _zeros(layout)
    x = np.arange(2**n)
    t0[x, f.table] = 2 ** (-n / 2)
    t1[x, x << (m - n)] = 2 ** (-n / 2)
    return _scheme(layout, ["C"], ["R"], t0, t1, "injective", n=n, m=m)


def keyed_injective_scheme(family: Sequence[ToyFunction]) -> CanonicalCommitment:
    """Q0|0> = Σ_{x,k} |x,k>_C |f_k(x),k>_R, Q1|0> = Σ_{x,k} |x,k>_C |x,0^{m-n},k>_R."""
    family = list(family)
    if not family or any(not f.injective for f in family):
        raise DomainError("family must be a nonempty list of injective functions")
    n, m = _bits(family[0].domain_size), _bits(family[0].codomain_size)
    if any((f.domain_size, f.codomain_size) != (2**n, 2**m) for f in family):
        raise DimensionError("family members must share domain and codomain")
    nk = len(family)
    layout = RegisterLayout.of(("Cx", 2**n), ("Ck", nk), ("Ry", 2**m), ("Rk", nk))
    t0, t1 = _zeros(layout), _zeros(layout)
    amp = 1 / np.sqrt(2**n * nk)
    x = np.arange(2**n)
    for k, f in enumerate(family):
        t0[x, k, f.table, k] = amp
        t1[x, k, x << (m - n), k] = amp
    return _scheme(layout, ["Cx", "Ck"], ["Ry", "Rk"], t0, t1, "keyed_injective", n=n, m=m)


def collapsing_scheme(family: Sequence[ToyFunction]) -> CanonicalCommitment:
    """Q0|0> = Σ |x,k>_C |H_k(x),0^{n-m},k>_R, Q1|0> = Σ |x,k>_C |x,k>_R."""
    family = list(family)
    if not family:
        raise DomainError("empty hash family")
    n, m = _bits(family[0].domain_size), _bits(family[0].codomain_size)
    if m > n:
        raise DimensionError("hash functions must compress")
    nk = len(family)
    layout = RegisterLayout.of(("Cx", 2**n), ("Ck", nk), ("Ry", 2**n), ("Rk", nk))
    t0, t1 = _zeros(layout), _zeros(layout)
    amp = 1 / np.sqrt(2**n * nk)
    x = np.arange(2**n)
    for k, h in enumerate(family):
        t0[x, k, h.table << (n - m), k] = amp
        t1[x, k, x, k] = amp
    return _scheme(layout, ["Cx", "Ck"], ["Ry", "Rk"], t0, t1, "collapsing", n=n, m=m)


def dms_scheme(f: ToyFunction) -> CanonicalCommitment:
    """Q_b|0> = 2^{-n/2} Σ_x (H^b)^{⊗n}|f(x)>_C |x>_R for a permutation f."""
    if not f.permutation:
        raise DomainError("f must be a permutation")
    n = _bits(f.domain_size)
    d = 2**n
    layout = RegisterLayout.of(("C", d), ("R", d))
    t0 = _zeros(layout)
    x = np.arange(d)
    t0[f.table, x] = 2 ** (-n / 2)
    t1 = hadamard_n(n) @ t0
    return _scheme(layout, ["C"], ["R"], t0, t1, "dms", n=n)


def gl_scheme(f: ToyFunction) -> CanonicalCommitment:
    """Q_b|0> = 2^{-n} Σ_{x,r} |f(x), r, r·x ⊕ b>_C |x, r>_R for injective f."""
    if not f.injective:
        raise DomainError("f must be injective")
    n, m = _bits(f.domain_size), _bits(f.codomain_size)
    layout = RegisterLayout.of(("Cy", 2**m), ("Cr", 2**n), ("Cb", 2), ("Rx", 2**n), ("Rr", 2**n))
    t = [_zeros(layout), _zeros(layout)]
    x, r = np.meshgrid(np.arange(2**n), np.arange(2**n), indexing="ij")
    dot = _popparity(x & r)
    for b in (0, 1):
        t[b][f.table[x], r, dot ^ b, x, r] = 2.0**-n
    return _scheme(layout, ["Cy", "Cr", "Cb"], ["Rx", "Rr"], t[0], t[1], "gl", n=n, m=m)


def affine_family(length: int) -> list[tuple[int, int]]:
    """Keys (a, c) of the maps x -> a·x ⊕ c from GF(2)^length to GF(2)."""
    return [(a, c) for a in range(2**length) for c in (0, 1)]


def halevi_micali_scheme(
    hash_family: Sequence[ToyFunction], lam: int | None = None, max_dim: int | None = None
) -> CanonicalCommitment:
    """Q_b|0> ∝ Σ_{k,k',x} |k, k', H_k(x), f_{k'}(x) ⊕ b>_C |k, k', x>_R.

    H_k maps L bits to l bits; f ranges over the affine family on L bits.
    When ``lam`` is given the sizes must satisfy L = l + 2 lam + 1.
    """
    hash_family = list(hash_family)
    if not hash_family:
        raise DomainError("empty hash family")
    big_l, ell = _bits(hash_family[0].domain_size), _bits(hash_family[0].codomain_size)
    if any((h.domain_size, h.codomain_size) != (2**big_l, 2**ell) for h in hash_family):
        raise DimensionError("hash family members must share domain and codomain")
    if big_l > 6:
        raise DimensionError("toy Halevi-Micali instances need L <= 6")
    if lam is not None and big_l != ell + 2 * lam + 1:
        raise DimensionError(f"need L = l + 2*lam + 1, got L={big_l}, l={ell}, lam={lam}")
    keys = affine_family(big_l)
    nh, nf = len(hash_family), len(keys)
    layout = RegisterLayout.of(
        ("Ckh", nh), ("Ckf", nf), ("Ch", 2**ell), ("Cb", 2),
        ("Rkh", nh), ("Rkf", nf), ("Rx", 2**big_l),
        max_dim=max_dim,
    )
    amp = 1 / np.sqrt(2**big_l * nh * nf)
    x = np.arange(2**big_l)
    t = [_zeros(layout), _zeros(layout)]
    for kh, h in enumerate(hash_family):
        for kf, (a, c) in enumerate(keys):
            fx = _popparity(a & x) ^ c
            for b in (0, 1):
                t[b][kh, kf, h.table, fx ^ b, kh, kf, x] = amp
    return _scheme(
        layout, ["Ckh", "Ckf", "Ch", "Cb"], ["Rkh", "Rkf", "Rx"], t[0], t[1], "halevi_micali",
        L=big_l, ell=ell, lam=lam,
    )


def hm_dim(big_l: int, ell: int, n_hash: int = 1) -> int:
    """Total dimension of a toy Halevi-Micali layout."""
    nf = 2 ** (big_l + 1)
    return n_hash * nf * 2**ell * 2 * n_hash * nf * 2**big_l
