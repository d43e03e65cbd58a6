"""Finite groups, group actions and swap-trapdoor function pairs.

Groups are dense multiplication tables over element indices 0..|G|-1, with
``mul[g, h]`` the index of g·h. Actions are tables with ``act[g, s]`` the
index of g⋆s.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from .qcore import DomainError, QState, RegisterLayout, sample_measurement, uniform_superposition

MAX_GROUP_ORDER = 10**4
EXHAUSTIVE_GROUP_CHECK = 128
EXHAUSTIVE_ACTION_CHECK = 10**5


class GroupError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    mul: np.ndarray
    labels: tuple[str, ...] = ()
    name: str = ""
    identity: int = field(init=False)
    inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mul = np.asarray(self.mul, dtype=np.int64)
        n = mul.shape[0]
        if mul.shape != (n, n) or n < 1:
            raise GroupError("multiplication table must be square and nonempty")
        if n > MAX_GROUP_ORDER:
            raise GroupError(f"group order {n} exceeds the cap {MAX_GROUP_ORDER}")
        if mul.min() < 0 or mul.max() >= n:
            raise GroupError("table entries out of range")
        ids = [e for e in range(n) if np.array_equal(mul[e], np.arange(n)) and np.array_equal(mul[:, e], np.arange(n))]
        if len(ids) != 1:
            raise GroupError("no two-sided identity")
        e = ids[0]
        inv = np.argmax(mul == e, axis=1)
        if not np.all(mul[np.arange(n), inv] == e) or not np.all(mul[inv, np.arange(n)] == e):
            raise GroupError("some element has no inverse")
        if n <= EXHAUSTIVE_GROUP_CHECK:
            if not _associative(mul):
                raise GroupError("multiplication is not associative")
        mul.setflags(write=False)
        inv.setflags(write=False)
        labels = tuple(self.labels) if self.labels else tuple(str(i) for i in range(n))
        if len(labels) != n:
            raise GroupError("need one label per element")
        object.__setattr__(self, "mul", mul)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "identity", int(e))
        object.__setattr__(self, "inverse", inv)

    @property
    def order(self) -> int:
        return self.mul.shape[0]

    def __len__(self) -> int:
        return self.order

    def op(self, g: int, h: int) -> int:
        return int(self.mul[g, h])

    def inv(self, g: int) -> int:
        return int(self.inverse[g])

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mul, self.mul.T))


def _associative(mul: np.ndarray) -> bool:
    # (gh)k == g(hk) for all g, h, k
    left = mul[mul, :]  # left[g, h, k] = (g h) k
    right = mul[:, mul]  # right[g, h, k] = g (h k)
    return bool(np.array_equal(left, right))


def group_cyclic(n: int) -> FiniteGroup:
    i = np.arange(n)
    return FiniteGroup((i[:, None] + i[None, :]) % n, name=f"cyclic{n}")


def group_dihedral(n: int) -> FiniteGroup:
    """Symmetries of the n-gon, order 2n; element r^a s^j has index a + n j."""
    idx = np.arange(2 * n)
    a, j = idx % n, idx // n
    sign = np.where(j == 1, -1, 1)
    # (r^a s^j)(r^b s^k) = r^{a + (-1)^j b} s^{j+k}
    prod_a = (a[:, None] + sign[:, None] * a[None, :]) % n
    prod_j = (j[:, None] + j[None, :]) % 2
    labels = tuple(f"r{x}" + ("s" if y else "") for x, y in zip(a, j))
    return FiniteGroup(prod_a + n * prod_j, labels, name=f"dihedral{n}")


def group_symmetric(n: int) -> FiniteGroup:
    """Permutations of range(n) in lexicographic order; (p q)(i) = p[q[i]]."""
    perms = list(itertools.permutations(range(n)))
    if len(perms) > MAX_GROUP_ORDER:
        raise GroupError(f"S_{n} exceeds the size cap")
    index = {p: i for i, p in enumerate(perms)}
    arr = np.array(perms, dtype=np.int64).reshape(len(perms), n)
    mul = np.empty((len(perms), len(perms)), dtype=np.int64)
    for i, p in enumerate(arr):
        for k, q in enumerate(arr):
            mul[i, k] = index[tuple(p[q])]
    return FiniteGroup(mul, tuple("".join(map(str, p)) or "()" for p in perms), name=f"symmetric{n}")


def symmetric_permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)


def group_product(g: FiniteGroup, h: FiniteGroup) -> FiniteGroup:
    """Direct product; (a, b) has index a |H| + b."""
    if g.order * h.order > MAX_GROUP_ORDER:
        raise GroupError("product exceeds the size cap")
    mul = (g.mul[:, None, :, None] * h.order + h.mul[None, :, None, :]).reshape(
        g.order * h.order, g.order * h.order
    )
    labels = tuple(f"({a},{b})" for a in g.labels for b in h.labels)
    return FiniteGroup(mul, labels, name=f"{g.name}x{h.name}")


def find_isomorphism(g: FiniteGroup, h: FiniteGroup) -> np.ndarray | None:
    """A bijection phi with phi(ab) = phi(a)phi(b), by backtracking search."""
    n = g.order
    if h.order != n:
        return None

    def orders(grp):
        out = np.ones(n, dtype=np.int64)
        for a in range(n):
            x, k = a, 1
            while x != grp.identity:
                x, k = grp.mul[x, a], k + 1
            out[a] = k
        return out

    og, oh = orders(g), orders(h)
    if sorted(og) != sorted(oh):
        return None
    # Generate g greedily and extend the map through products of generators.
    gens = []
    span = {g.identity}
    for a in sorted(range(n), key=lambda a: -og[a]):
        if a not in span:
            gens.append(a)
            span = _closure(g, gens)
        if len(span) == n:
            break

    def extend(images):
        phi = {g.identity: h.identity}
        frontier = [g.identity]
        while frontier:
            nxt = []
            for x in frontier:
                for gi, im in zip(gens, images):
                    y = int(g.mul[x, gi])
                    val = int(h.mul[phi[x], im])
                    if y in phi:
                        if phi[y] != val:
                            return None
                    else:
                        phi[y] = val
                        nxt.append(y)
            frontier = nxt
        if len(set(phi.values())) != n:
            return None
        arr = np.array([phi[a] for a in range(n)])
        if not np.array_equal(arr[g.mul], h.mul[arr[:, None], arr[None, :]]):
            return None
        return arr

    candidates = [[b for b in range(n) if oh[b] == og[a]] for a in gens]
    for images in itertools.product(*candidates):
        arr = extend(images)
        if arr is not None:
            return arr
    return None


def _closure(g: FiniteGroup, gens: Sequence[int]) -> set[int]:
    span = {g.identity}
    frontier = [g.identity]
    while frontier:
        nxt = []
        for x in frontier:
            for a in gens:
                y = int(g.mul[x, a])
                if y not in span:
                    span.add(y)
                    nxt.append(y)
        frontier = nxt
    return span


@dataclass(frozen=True, eq=False)
class GroupAction:
    group: FiniteGroup
    act: np.ndarray
    name: str = ""

    def __post_init__(self):
        act = np.asarray(self.act, dtype=np.int64)
        n = self.group.order
        if act.ndim != 2 or act.shape[0] != n:
            raise GroupError("action table must have one row per group element")
        if act.min() < 0 or act.max() >= act.shape[1]:
            raise GroupError("action table entries out of range")
        if not np.array_equal(act[self.group.identity], np.arange(act.shape[1])):
            raise GroupError("identity does not act trivially")
        if n * act.shape[1] <= EXHAUSTIVE_ACTION_CHECK:
            # (gh)⋆s == g⋆(h⋆s), one g at a time to bound memory
            for g in range(n):
                if not np.array_equal(act[self.group.mul[g]], act[g][act]):
                    raise GroupError("action is not compatible with the group law")
        act.setflags(write=False)
        object.__setattr__(self, "act", act)

    @property
    def set_size(self) -> int:
        return self.act.shape[1]

    def orbit(self, s: int) -> np.ndarray:
        return np.unique(self.act[:, s])

    def stabilizer(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.act[:, s] == s)

    def orbits(self) -> list[np.ndarray]:
        seen = np.zeros(self.set_size, dtype=bool)
        out = []
        for s in range(self.set_size):
            if not seen[s]:
                o = self.orbit(s)
                seen[o] = True
                out.append(o)
        return out


def regular_action(g: FiniteGroup) -> GroupAction:
    """G acting on itself by left multiplication."""
    return GroupAction(g, g.mul, name=f"{g.name}-regular")


def dihedral_vertex_action(n: int) -> GroupAction:
    """Dihedral group of order 2n on the n vertices: r^a s^j ⋆ v = a + (-1)^j v."""
    g = group_dihedral(n)
    idx = np.arange(2 * n)
    a, j = idx % n, idx // n
    v = np.arange(n)
    act = (a[:, None] + np.where(j == 1, -1, 1)[:, None] * v[None, :]) % n
    return GroupAction(g, act, name=f"dihedral{n}-vertices")


def symmetric_point_action(n: int) -> GroupAction:
    """S_n on {0..n-1}: p ⋆ i = p[i]."""
    return GroupAction(group_symmetric(n), symmetric_permutations(n), name=f"symmetric{n}-points")


def conjugation_action(g: FiniteGroup) -> GroupAction:
    """g ⋆ s = g s g^{-1}."""
    act = g.mul[g.mul, g.inverse[:, None]]
    return GroupAction(g, act, name=f"{g.name}-conjugation")


def disjoint_copies(ga: GroupAction, copies: int) -> GroupAction:
    """G acting on ``copies`` disjoint copies of the set; element (c, s) has index c |S| + s."""
    s = ga.set_size
    act = np.concatenate([ga.act + c * s for c in range(copies)], axis=1)
    return GroupAction(ga.group, act, name=f"{ga.name}x{copies}")


def group_to_json(ga: GroupAction) -> dict:
    return {
        "name": ga.name,
        "elements": list(ga.group.labels),
        "mul_table": ga.group.mul.tolist(),
        "set_size": ga.set_size,
        "act_table": ga.act.tolist(),
    }


def group_from_json(doc: dict | str) -> GroupAction:
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        g = FiniteGroup(np.asarray(doc["mul_table"]), tuple(doc.get("elements", ())))
        act = np.asarray(doc["act_table"], dtype=np.int64)
        if act.shape[1] != int(doc["set_size"]):
            raise GroupError("set_size does not match act_table")
    except KeyError as exc:
        raise GroupError(f"group document is missing {exc}") from None
    return GroupAction(g, act, name=doc.get("name", ""))


class TrapdoorMissing(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class StfInstance:
    """A swap-trapdoor function pair given by evaluation tables.

    ``f[b][x]`` is f_b(x). ``swap_fn(td, b, x)`` implements Swap; public
    copies have ``td=None`` and cannot swap.
    """

    f: tuple[np.ndarray, np.ndarray]
    codomain_size: int
    pp: Any
    td: Any
    swap_fn: Callable[[Any, int, int], int] | None = field(default=None, repr=False)
    action: GroupAction | None = field(default=None, repr=False)

    def __post_init__(self):
        f0, f1 = (np.asarray(t, dtype=np.int64) for t in self.f)
        if f0.shape != f1.shape or f0.ndim != 1:
            raise DomainError("f_0 and f_1 must share the domain")
        for t in (f0, f1):
            if t.min() < 0 or t.max() >= self.codomain_size:
                raise DomainError("evaluation table outside the codomain")
            t.setflags(write=False)
        object.__setattr__(self, "f", (f0, f1))

    @property
    def domain_size(self) -> int:
        return self.f[0].shape[0]

    def eval(self, b: int, x: int) -> int:
        return int(self.f[b][x])

    def swap(self, b: int, x: int) -> int:
        if self.td is None or self.swap_fn is None:
            raise TrapdoorMissing("this instance carries no trapdoor")
        return int(self.swap_fn(self.td, b, x))

    def preimage(self, b: int, y: int) -> np.ndarray:
        return np.flatnonzero(self.f[b] == y)

    def evaluation_map(self, b: int) -> np.ndarray:
        """Permutation |x, y> -> |x, y + f_b(x) mod |Y|> on the joint (X, Y) index."""
        cache = self.__dict__.setdefault("_eval_maps", {})
        if b not in cache:
            nx, ny = self.domain_size, self.codomain_size
            x, y = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
            table = (x * ny + (y + self.f[b][x]) % ny).reshape(-1)
            table.setflags(write=False)
            cache[b] = table
        return cache[b]

    def public(self) -> "StfInstance":
        return replace(self, td=None)

    def with_trapdoor(self, td) -> "StfInstance":
        return replace(self, td=td)


def stf_from_group_action(
    ga: GroupAction, rng: np.random.Generator, s0: int | None = None, g: int | None = None
) -> StfInstance:
    """f_b(h) = h ⋆ s_b with s1 = g ⋆ s0; td = g.

    Swap(td, 0, h) = h g^{-1} and Swap(td, 1, h) = h g.
    """
    grp = ga.group
    if s0 is None:
        s0 = int(rng.integers(ga.set_size))
    if g is None:
        g = int(rng.integers(grp.order))
    s1 = int(ga.act[g, s0])

    def swap(td, b, h):
        return grp.mul[h, grp.inverse[td]] if b == 0 else grp.mul[h, td]

    f0, f1 = ga.act[:, s0], ga.act[:, s1]
    return StfInstance((f0, f1), ga.set_size, (s0, s1), g, swap, ga)


def table_stf(f0, f1, codomain_size: int, swap_tables=None) -> StfInstance:
    """STF from explicit tables; ``swap_tables[b][x]`` gives Swap(td, b, x)."""
    swap = None
    td = None
    if swap_tables is not None:
        td = tuple(np.asarray(t, dtype=np.int64) for t in swap_tables)
        swap = lambda t, b, x: t[b][x]
    return StfInstance((f0, f1), codomain_size, ("table",), td, swap)


@dataclass(frozen=True)
class StfCheck:
    evaluation: bool
    swapping: bool
    bijection: bool

    @property
    def ok(self) -> bool:
        return self.evaluation and self.swapping and self.bijection


def verify_stf(stf: StfInstance) -> StfCheck:
    """Exhaustive evaluation, swapping and preimage-bijection checks."""
    evaluation = True
    if stf.action is not None:
        s0, s1 = stf.pp
        evaluation = all(
            stf.eval(b, h) == int(stf.action.act[h, s]) for b, s in ((0, s0), (1, s1)) for h in range(stf.domain_size)
        )
    swapping = True
    bijection = True
    for b in (0, 1):
        for x in range(stf.domain_size):
            xp = stf.swap(b, x)
            if stf.eval(1 - b, xp) != stf.eval(b, x) or stf.swap(1 - b, xp) != x:
                swapping = False
    for y in np.union1d(stf.f[0], stf.f[1]):
        for b in (0, 1):
            src = stf.preimage(b, y)
            img = sorted(stf.swap(b, x) for x in src)
            if img != sorted(stf.preimage(1 - b, y).tolist()) or len(set(img)) != len(src):
                bijection = False
    return StfCheck(evaluation, swapping, bijection)


def preimage_superposition(stf: StfInstance, b: int, y: int, register: str = "X") -> QState:
    pre = stf.preimage(b, y)
    if pre.size == 0:
        raise DomainError(f"{y} has no f_{b}-preimage")
    return uniform_superposition(RegisterLayout(((register, stf.domain_size),)), register, pre)


def brute_claw(stf: StfInstance) -> tuple[int, int] | None:
    """Lexicographically first claw (x0, x1) with f_0(x0) = f_1(x1), or None."""
    if stf.domain_size**2 > 10**6:
        raise DomainError("exhaustive claw search is capped at |X|^2 <= 10^6")
    first1 = {}
    for x1 in range(stf.domain_size - 1, -1, -1):
        first1[int(stf.f[1][x1])] = x1
    for x0 in range(stf.domain_size):
        y = int(stf.f[0][x0])
        if y in first1:
            return x0, first1[y]
    return None


def all_claws(stf: StfInstance) -> Iterator[tuple[int, int]]:
    for x0 in range(stf.domain_size):
        for x1 in stf.preimage(1, stf.f[0][x0]):
            yield x0, int(x1)


def claw_to_group_element(stf: StfInstance, claw: tuple[int, int]) -> int:
    """g' = h1^{-1} h0 for a claw of a group-action STF; g' ⋆ s0 = s1."""
    grp = stf.action.group
    h0, h1 = claw
    return int(grp.mul[grp.inverse[h1], h0])


def brute_conversion_solver(
    stf: StfInstance, state: QState, rng: np.random.Generator
) -> int | None:
    """Measure the f_0-preimage state, then search exhaustively for an f_1-preimage."""
    if stf.domain_size > 10**4:
        raise DomainError("brute-force conversion is capped at |X| <= 10^4")
    x0, _ = sample_measurement(state, state.layout.names[0], rng)
    y = stf.eval(0, x0)
    pre = stf.preimage(1, y)
    return int(pre[0]) if pre.size else None


def orbit_fraction(ga: GroupAction) -> float:
    """Exact Pr over uniform (s, t) that t lies in the orbit of s."""
    return float(sum(len(o) ** 2 for o in ga.orbits()) / ga.set_size**2)


def orbit_disjointness_estimate(ga: GroupAction, samples: int, rng: np.random.Generator) -> float:
    s = rng.integers(ga.set_size, size=samples)
    t = rng.integers(ga.set_size, size=samples)
    hits = sum(1 for a, b in zip(s, t) if np.any(ga.act[:, a] == b))
    return hits / samples
