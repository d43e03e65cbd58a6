"""One-shot signatures compiled from N swap-trapdoor instances and a conversion oracle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .qcore import QState, RegisterLayout, apply_classical, drop_register, sample_measurement
from .stf import StfInstance

# oracle(pp_i, |f_{i,0}^{-1}(y_i)>, rng) -> candidate f_{i,1}-preimage, or None
Oracle = Callable[[StfInstance, QState, np.random.Generator], "int | None"]


class SigningAborted(RuntimeError):
    """The conversion oracle failed on every instance."""


@dataclass(frozen=True, eq=False)
class OssKeys:
    pp: tuple[StfInstance, ...]
    vk: tuple[int, ...]
    sk: tuple[tuple[int, QState], ...]


@dataclass(frozen=True)
class Signature0:
    xs: tuple[int, ...]


@dataclass(frozen=True)
class Signature1:
    index: int
    x: int


def oss_setup(stf_builder: Callable[[np.random.Generator], StfInstance], n: int, rng) -> tuple[StfInstance, ...]:
    """N independent instances with their trapdoors discarded."""
    return tuple(stf_builder(rng).public() for _ in range(n))


def _keygen_one(pp: StfInstance, rng) -> tuple[int, QState]:
    nx, ny = pp.domain_size, pp.codomain_size
    layout = RegisterLayout.of(("X", nx), ("Y", ny))
    amps = np.zeros((nx, ny), dtype=complex)
    amps[:, 0] = 1 / np.sqrt(nx)
    s = QState(layout, amps.reshape(-1))
    s = apply_classical(s, ["X", "Y"], pp.evaluation_map(0))
    yi, s = sample_measurement(s, "Y", rng)
    return yi, drop_register(s, "Y")


def oss_keygen(pp: Sequence[StfInstance], rng) -> OssKeys:
    pairs = [_keygen_one(p, rng) for p in pp]
    return OssKeys(tuple(pp), tuple(y for y, _ in pairs), tuple(pairs))


def oss_sign(pp: Sequence[StfInstance], sk, b: int, oracle: Oracle, rng):
    """Sign one bit. Raises :class:`SigningAborted` when b=1 and every oracle call fails."""
    if b == 0:
        return Signature0(tuple(sample_measurement(s, "X", rng)[0] for _, s in sk))
    if b != 1:
        raise ValueError(f"message must be a bit, got {b!r}")
    for i, (p, (y, s)) in enumerate(zip(pp, sk)):
        x = oracle(p, s, rng)
        if x is not None and 0 <= x < p.domain_size and p.eval(1, x) == y:
            return Signature1(i, int(x))
    raise SigningAborted("conversion oracle failed on all instances")


def oss_verify(pp: Sequence[StfInstance], vk: Sequence[int], b: int, sig) -> bool:
    try:
        if b == 0:
            if not isinstance(sig, Signature0) or len(sig.xs) != len(pp) or len(vk) != len(pp):
                return False
            return all(0 <= x < p.domain_size and p.eval(0, x) == y for p, x, y in zip(pp, sig.xs, vk))
        if b == 1:
            if not isinstance(sig, Signature1) or not 0 <= sig.index < len(pp):
                return False
            p = pp[sig.index]
            return 0 <= sig.x < p.domain_size and p.eval(1, sig.x) == vk[sig.index]
    except (TypeError, IndexError, ValueError):
        return False
    return False


def extract_claw(pp: Sequence[StfInstance], sig0: Signature0, sig1: Signature1) -> tuple[int, int]:
    """(x_{i*}, x'_{i*}) from a pair of accepted signatures on one vk."""
    return sig0.xs[sig1.index], sig1.x


def exhaustive_forger(
    pp: Sequence[StfInstance], limit: int = 2 * 10**5
) -> Iterator[tuple[tuple[int, ...], Signature0, Signature1]]:
    """Every (vk, sig0, sig1) that both verifiers accept.

    Acceptance of sig0 forces vk = (f_{i,0}(x_i))_i, so the search runs over
    all sig0 in X_1 x ... x X_N and all sig1 = (i, x') with
    f_{i,1}(x') = vk_i.
    """
    sizes = [p.domain_size for p in pp]
    if int(np.prod(sizes, dtype=float)) > limit:
        raise ValueError("exhaustive forgery search exceeds the size limit")
    for xs in itertools.product(*(range(n) for n in sizes)):
        vk = tuple(p.eval(0, x) for p, x in zip(pp, xs))
        for i, p in enumerate(pp):
            for x1 in p.preimage(1, vk[i]):
                yield vk, Signature0(tuple(xs)), Signature1(i, int(x1))


def biased_oracle(base: Oracle, p: float) -> Oracle:
    """Wrap an oracle so that it only answers with probability p."""

    def oracle(stf, state, rng):
        if rng.random() >= p:
            return None
        return base(stf, state, rng)

    return oracle
