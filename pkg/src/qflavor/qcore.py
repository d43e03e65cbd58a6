"""Dense statevector and density-operator engine over named qudit registers.

Every value here is immutable. Operations return new objects and never
mutate their inputs, so they are safe to run from several threads.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import unitary_group

EPS_NORM = 1e-10
EPS_ID = 1e-9
DEFAULT_DIM_CAP = 2**14

# Eigenvalues below this are treated as exact zeros when taking matrix roots.
EIG_CLIP = 1e-13


class QCoreError(ValueError):
    """Base class for engine errors."""


class DimensionError(QCoreError):
    pass


class LayoutError(QCoreError):
    pass


class DomainError(QCoreError):
    pass


class CollapseError(QCoreError):
    pass


class NumericError(QCoreError):
    pass


def default_dim_cap() -> int:
    """Dimension cap, read from ``QFLAVOR_DIM_CAP`` when set."""
    raw = os.environ.get("QFLAVOR_DIM_CAP")
    if raw is None or raw.strip() == "":
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise DimensionError(f"QFLAVOR_DIM_CAP must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise DimensionError("QFLAVOR_DIM_CAP must be positive")
    return cap


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered named registers; flat indices are row-major in this order.

    ``max_dim`` overrides the global cap for layouts that are known to be
    larger than the default (the caller takes responsibility for memory).
    """

    registers: tuple[tuple[str, int], ...]
    max_dim: int | None = field(default=None, compare=False)

    def __post_init__(self):
        regs = tuple((str(n), int(d)) for n, d in self.registers)
        object.__setattr__(self, "registers", regs)
        names = tuple(n for n, _ in regs)
        dims = tuple(d for _, d in regs)
        object.__setattr__(self, "_names", names)
        object.__setattr__(self, "_dims", dims)
        total = 1
        for d in dims:
            total *= d
        object.__setattr__(self, "_total", total)
        if len(set(names)) != len(names):
            raise LayoutError(f"duplicate register names in {names}")
        for n, d in regs:
            if d < 1:
                raise DimensionError(f"register {n!r} has dimension {d}")
        cap = self.max_dim if self.max_dim is not None else default_dim_cap()
        if self.total_dim > cap:
            raise DimensionError(f"total dimension {self.total_dim} exceeds cap {cap}")

    @classmethod
    def of(cls, *pairs: tuple[str, int], max_dim: int | None = None) -> "RegisterLayout":
        return cls(tuple(pairs), max_dim=max_dim)

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    @property
    def dims(self) -> tuple[int, ...]:
        return self._dims

    @property
    def total_dim(self) -> int:
        return self._total

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def __len__(self) -> int:
        return len(self.registers)

    def position(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise LayoutError(f"unknown register {name!r}; layout has {self.names}") from None

    def dim_of(self, name: str) -> int:
        return self.registers[self.position(name)][1]

    def index(self, values: Sequence[int] | Mapping[str, int]) -> int:
        """Flat index of a per-register index tuple (or name -> index mapping)."""
        if isinstance(values, Mapping):
            unknown = set(values) - set(self.names)
            if unknown:
                raise LayoutError(f"unknown registers {sorted(unknown)}")
            values = [values.get(n, 0) for n in self.names]
        values = list(values)
        if len(values) != len(self.registers):
            raise DimensionError(f"expected {len(self.registers)} indices, got {len(values)}")
        flat = 0
        for (n, d), v in zip(self.registers, values):
            v = int(v)
            if not 0 <= v < d:
                raise DimensionError(f"index {v} out of range for register {n!r} of dim {d}")
            flat = flat * d + v
        return flat

    def multi_index(self, flat: int) -> tuple[int, ...]:
        if not 0 <= flat < self.total_dim:
            raise DimensionError(f"flat index {flat} out of range")
        return tuple(int(v) for v in np.unravel_index(flat, self.dims)) if self.registers else ()

    def sub(self, names: Iterable[str]) -> "RegisterLayout":
        """Layout of the named registers, in the given order."""
        names = list(names)
        return RegisterLayout(tuple((n, self.dim_of(n)) for n in names), max_dim=self.max_dim)

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        cap = None
        if self.max_dim is not None or other.max_dim is not None:
            cap = max(self.max_dim or 0, other.max_dim or 0, default_dim_cap())
        return RegisterLayout(self.registers + other.registers, max_dim=cap)

    def with_cap(self, max_dim: int | None) -> "RegisterLayout":
        return RegisterLayout(self.registers, max_dim=max_dim)

    def rename(self, mapping: Mapping[str, str]) -> "RegisterLayout":
        return RegisterLayout(
            tuple((mapping.get(n, n), d) for n, d in self.registers), max_dim=self.max_dim
        )


def _as_layout(layout) -> RegisterLayout:
    if isinstance(layout, RegisterLayout):
        return layout
    return RegisterLayout(tuple(layout))


@dataclass(frozen=True, eq=False)
class QState:
    """Normalized pure state over a register layout."""

    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        layout = _as_layout(self.layout)
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != layout.total_dim:
            raise DimensionError(
                f"amplitude vector has length {amps.shape[0]}, layout needs {layout.total_dim}"
            )
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > EPS_NORM:
            raise NumericError(f"state is not normalized: |s|^2 = {norm2!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, layout, vec) -> "QState":
        """Build a state from an unnormalized nonzero vector."""
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise DomainError("cannot normalize the zero vector")
        return cls(layout, vec / norm)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.layout.dims

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims) if len(self.layout) else self.amplitudes

    def inner(self, other: "QState") -> complex:
        """<self|other> (registers must coincide)."""
        _check_same_layout(self.layout, other.layout)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor(self, other: "QState") -> "QState":
        return QState(self.layout.concat(other.layout), np.kron(self.amplitudes, other.amplitudes))

    def permute(self, names: Sequence[str]) -> "QState":
        """Reorder registers to ``names`` (a permutation of the layout)."""
        names = list(names)
        if sorted(names) != sorted(self.layout.names):
            raise LayoutError(f"{names} is not a permutation of {self.layout.names}")
        if tuple(names) == self.layout.names:
            return self
        axes = [self.layout.position(n) for n in names]
        amps = np.transpose(self.tensor_view(), axes).reshape(-1)
        return QState(self.layout.sub(names), amps)

    def density(self) -> "DensityOp":
        return DensityOp(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self):
        return f"QState({self.layout.registers})"


def _check_same_layout(a: RegisterLayout, b: RegisterLayout):
    if a.registers != b.registers:
        raise LayoutError(f"layout mismatch: {a.registers} vs {b.registers}")


@dataclass(frozen=True, eq=False)
class DensityOp:
    """Hermitian, PSD, trace-one operator over a register layout.

    The eigenvalue check is skipped above ``check_limit`` to keep large
    reduced states cheap; hermiticity and trace are always checked.
    """

    layout: RegisterLayout
    matrix: np.ndarray
    check_limit: int = field(default=1024, compare=False, repr=False)

    def __post_init__(self):
        layout = _as_layout(self.layout)
        m = np.array(self.matrix, dtype=complex)
        d = layout.total_dim
        if m.shape != (d, d):
            raise DimensionError(f"density matrix has shape {m.shape}, expected {(d, d)}")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > EPS_NORM:
            raise NumericError("density operator is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > EPS_NORM:
            raise NumericError(f"density operator has trace {tr!r}")
        if d <= self.check_limit:
            lo = np.linalg.eigvalsh(m).min()
            if lo < -EPS_NORM:
                raise NumericError(f"density operator has negative eigenvalue {lo!r}")
        m.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "matrix", m)

    def __repr__(self):
        return f"DensityOp({self.layout.registers})"


def _probe_unitary(m: np.ndarray) -> float:
    d = m.shape[0]
    if d <= 512:
        return float(np.max(np.abs(m.conj().T @ m - np.eye(d)), initial=0.0))
    # Large operators: check norm preservation on a few fixed probe vectors.
    rng = np.random.default_rng(0)
    probes = rng.normal(size=(d, 4)) + 1j * rng.normal(size=(d, 4))
    probes /= np.linalg.norm(probes, axis=0)
    gram = (m @ probes).conj().T @ (m @ probes)
    return float(np.max(np.abs(gram - probes.conj().T @ probes)))


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    """Dense unitary acting on the registers listed in ``targets``.

    The matrix is indexed row-major over ``targets`` in its own order. The
    op can be applied to any state whose layout contains those registers
    with matching dimensions.
    """

    targets: RegisterLayout
    matrix: np.ndarray
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        targets = _as_layout(self.targets)
        m = np.array(self.matrix, dtype=complex)
        d = targets.total_dim
        if m.shape != (d, d):
            raise DimensionError(f"unitary has shape {m.shape}, targets need {(d, d)}")
        if self.check:
            err = _probe_unitary(m)
            if err > EPS_NORM:
                raise NumericError(f"matrix is not unitary (deviation {err:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "matrix", m)

    @property
    def target_names(self) -> tuple[str, ...]:
        return self.targets.names

    def matrix_on(self, layout: RegisterLayout) -> np.ndarray:
        """Dense matrix over ``layout`` (identity on registers outside the targets)."""
        if self.targets.registers == layout.registers:
            return self.matrix
        return embed(self, layout)

    def dagger(self) -> "UnitaryOp":
        return UnitaryOp(self.targets, self.matrix.conj().T, check=False)

    def __matmul__(self, other: "UnitaryOp") -> "UnitaryOp":
        """Product ``self · other`` (other applied first) on the union of targets."""
        names = list(self.target_names)
        for n in other.target_names:
            if n not in names:
                names.append(n)
        dims = {**dict(other.targets.registers), **dict(self.targets.registers)}
        joint = RegisterLayout(tuple((n, dims[n]) for n in names),
                               max_dim=_joint_cap(self.targets, other.targets))
        return UnitaryOp(joint, embed(self, joint) @ embed(other, joint), check=False)

    def scaled(self, phase: complex) -> "UnitaryOp":
        return UnitaryOp(self.targets, phase * self.matrix, check=False)

    def rename(self, mapping: Mapping[str, str]) -> "UnitaryOp":
        return UnitaryOp(self.targets.rename(mapping), self.matrix, check=False)

    def __repr__(self):
        return f"UnitaryOp({self.targets.registers})"


def _joint_cap(*layouts: RegisterLayout) -> int | None:
    caps = [l.max_dim for l in layouts if l.max_dim is not None]
    return max(caps + [default_dim_cap()]) if caps else None


def embed(op: UnitaryOp, layout: RegisterLayout) -> np.ndarray:
    """Dense matrix of ``op`` tensored with identity on the rest of ``layout``."""
    d = layout.total_dim
    cols = np.eye(d, dtype=complex)
    out = np.empty((d, d), dtype=complex)
    for j in range(d):
        out[:, j] = _apply_matrix(op, layout, cols[:, j])
    return out


def _target_axes(op: UnitaryOp, layout: RegisterLayout) -> list[int]:
    axes = []
    for n, d in op.targets.registers:
        if n not in layout:
            raise LayoutError(f"target register {n!r} not in layout {layout.names}")
        if layout.dim_of(n) != d:
            raise DimensionError(
                f"register {n!r} has dim {layout.dim_of(n)} in the state but {d} in the op"
            )
        axes.append(layout.position(n))
    return axes


def _apply_matrix(op: UnitaryOp, layout: RegisterLayout, amps: np.ndarray) -> np.ndarray:
    axes = _target_axes(op, layout)
    k = len(axes)
    t = amps.reshape(layout.dims)
    t = np.moveaxis(t, axes, list(range(k)))
    moved_shape = t.shape
    t = (op.matrix @ t.reshape(op.targets.total_dim, -1)).reshape(moved_shape)
    return np.moveaxis(t, list(range(k)), axes).reshape(-1)


def make_basis_state(layout: RegisterLayout, values: Sequence[int] | Mapping[str, int] = ()) -> QState:
    """Computational basis state; missing registers default to 0."""
    layout = _as_layout(layout)
    if not isinstance(values, Mapping) and len(values) == 0:
        values = [0] * len(layout)
    amps = np.zeros(layout.total_dim, dtype=complex)
    amps[layout.index(values)] = 1.0
    return QState(layout, amps)


def uniform_superposition(layout: RegisterLayout, register: str, subset: Iterable[int]) -> QState:
    """Uniform superposition over ``subset`` on one register, others in |0>."""
    layout = _as_layout(layout)
    subset = sorted(set(int(v) for v in subset))
    if not subset:
        raise DomainError("uniform superposition over an empty set")
    d = layout.dim_of(register)
    if subset[0] < 0 or subset[-1] >= d:
        raise DimensionError(f"subset element out of range for register {register!r} of dim {d}")
    pos = layout.position(register)
    t = np.zeros(layout.dims, dtype=complex)
    idx = [0] * len(layout)
    idx[pos] = subset
    t[tuple(idx)] = 1.0 / np.sqrt(len(subset))
    return QState(layout, t.reshape(-1))


def apply(op: UnitaryOp, s: QState) -> QState:
    return QState(s.layout, _apply_matrix(op, s.layout, s.amplitudes))


def controlled(op: UnitaryOp, control: str) -> UnitaryOp:
    """|0><0| ⊗ I + |1><1| ⊗ op, over (control, targets...)."""
    if control in op.targets:
        raise LayoutError(f"control register {control!r} is among the targets")
    d = op.targets.total_dim
    m = np.zeros((2 * d, 2 * d), dtype=complex)
    m[:d, :d] = np.eye(d)
    m[d:, d:] = op.matrix
    targets = RegisterLayout(((control, 2),) + op.targets.registers, max_dim=op.targets.max_dim)
    return UnitaryOp(targets, m, check=False)


def controlled_apply(control: str, op: UnitaryOp, s: QState) -> QState:
    if control in op.targets:
        raise LayoutError(f"control register {control!r} is among the targets")
    if s.layout.dim_of(control) != 2:
        raise LayoutError(f"control register {control!r} must have dimension 2")
    pos = s.layout.position(control)
    t = s.tensor_view().copy()
    branch = np.take(t, 1, axis=pos)
    sub_layout = s.layout.sub([n for n in s.layout.names if n != control])
    new_branch = _apply_matrix(op, sub_layout, branch.reshape(-1)).reshape(branch.shape)
    idx = [slice(None)] * len(s.layout)
    idx[pos] = 1
    t[tuple(idx)] = new_branch
    return QState(s.layout, t.reshape(-1))


def apply_classical(s: QState, targets: Sequence[str], table: np.ndarray) -> QState:
    """Apply a reversible classical map on the joint basis of ``targets``.

    ``table[i]`` is the image of joint basis index ``i`` (row-major over
    ``targets``). The table must be a permutation.
    """
    targets = list(targets)
    sub = s.layout.sub(targets)
    table = np.asarray(table, dtype=np.int64).reshape(-1)
    d = sub.total_dim
    if table.shape[0] != d:
        raise DimensionError(f"classical map has {table.shape[0]} entries, targets need {d}")
    if not np.array_equal(np.sort(table), np.arange(d)):
        raise DomainError("classical map is not a permutation")
    axes = [s.layout.position(n) for n in targets]
    k = len(axes)
    t = np.moveaxis(s.tensor_view(), axes, list(range(k)))
    shape = t.shape
    flat = t.reshape(d, -1)
    out = np.empty_like(flat)
    out[table] = flat
    out = np.moveaxis(out.reshape(shape), list(range(k)), axes)
    return QState(s.layout, out.reshape(-1))


def partial_trace(s: QState | DensityOp, keep: Sequence[str]) -> DensityOp:
    """Reduced state on ``keep`` (registers in the given order)."""
    keep = list(keep)
    layout = s.layout
    for n in keep:
        layout.position(n)
    if len(set(keep)) != len(keep):
        raise LayoutError(f"duplicate registers in {keep}")
    rest = [n for n in layout.names if n not in keep]
    kept = layout.sub(keep)
    dk = kept.total_dim
    if isinstance(s, QState):
        t = np.transpose(s.tensor_view(), [layout.position(n) for n in keep + rest])
        m = t.reshape(dk, -1)
        rho = m @ m.conj().T
    else:
        n = len(layout)
        t = s.matrix.reshape(layout.dims + layout.dims)
        order = [layout.position(r) for r in keep + rest]
        t = np.transpose(t, order + [n + o for o in order])
        dr = layout.total_dim // dk
        rho = np.einsum("atbt->ab", t.reshape(dk, dr, dk, dr))
    rho = (rho + rho.conj().T) / 2
    return DensityOp(kept, rho)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    if w.min(initial=0.0) < -EPS_NORM:
        raise NumericError(f"operator is not positive semidefinite (eigenvalue {w.min()!r})")
    w = np.where(w > EIG_CLIP, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho: DensityOp, sigma: DensityOp) -> float:
    """Squared-convention fidelity (Tr|sqrt(rho) sqrt(sigma)|)^2."""
    _check_same_layout(rho.layout, sigma.layout)
    sv = np.linalg.svd(_psd_sqrt(rho.matrix) @ _psd_sqrt(sigma.matrix), compute_uv=False)
    return float(min(1.0, max(0.0, sv.sum() ** 2)))


def trace_distance(rho: DensityOp, sigma: DensityOp) -> float:
    """Half the trace norm of rho - sigma."""
    _check_same_layout(rho.layout, sigma.layout)
    w = np.linalg.eigvalsh(rho.matrix - sigma.matrix)
    return float(min(1.0, max(0.0, 0.5 * np.abs(w).sum())))


def measure_probabilities(s: QState, register: str) -> np.ndarray:
    pos = s.layout.position(register)
    t = np.moveaxis(s.tensor_view(), pos, 0)
    p = np.sum(np.abs(t.reshape(t.shape[0], -1)) ** 2, axis=1)
    return p / p.sum()


def collapse(s: QState, register: str, outcome: int) -> QState:
    """Post-measurement state for ``outcome`` on ``register`` (renormalized)."""
    d = s.layout.dim_of(register)
    if not 0 <= outcome < d:
        raise DimensionError(f"outcome {outcome} out of range for register {register!r}")
    pos = s.layout.position(register)
    t = s.tensor_view().copy()
    mask = np.zeros(d, dtype=bool)
    mask[outcome] = True
    shape = [1] * len(s.layout)
    shape[pos] = d
    t = t * mask.reshape(shape)
    norm = np.linalg.norm(t)
    if norm < 1e-12:
        raise CollapseError(f"outcome {outcome} on {register!r} has probability zero")
    return QState(s.layout, t.reshape(-1) / norm)


def sample_measurement(s: QState, register: str, rng: np.random.Generator) -> tuple[int, QState]:
    """Seeded computational-basis measurement of one register."""
    p = measure_probabilities(s, register)
    outcome = sample_index(p, rng)
    return outcome, collapse(s, register, outcome)


def sample_index(p: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from a probability vector (one uniform per call)."""
    cdf = np.cumsum(p)
    i = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), len(p) - 1)
    if p[i] == 0:
        # rounding pushed the draw onto a zero-probability tail entry
        i = int(np.flatnonzero(p[: i + 1])[-1])
    return i


def drop_register(s: QState, register: str) -> QState:
    """Remove a register that is in a basis state (e.g. after measuring it)."""
    pos = s.layout.position(register)
    t = np.moveaxis(s.tensor_view(), pos, 0)
    weights = np.sum(np.abs(t.reshape(t.shape[0], -1)) ** 2, axis=1)
    nz = np.flatnonzero(weights > 1e-24)
    if len(nz) != 1:
        raise CollapseError(f"register {register!r} is not in a basis state")
    rest = s.layout.sub([n for n in s.layout.names if n != register])
    return QState(rest, t[nz[0]].reshape(-1))


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def gate(register: str, matrix: np.ndarray, dim: int | None = None) -> UnitaryOp:
    """Single-register gate."""
    matrix = np.asarray(matrix, dtype=complex)
    return UnitaryOp(RegisterLayout(((register, dim or matrix.shape[0]),)), matrix)


def _require_qubit(s: QState, register: str):
    if s.layout.dim_of(register) != 2:
        raise LayoutError(f"register {register!r} must have dimension 2")


def hadamard_measure(s: QState, register: str) -> float:
    """Probability of outcome 1 (the |-> projector) on a qubit register."""
    _require_qubit(s, register)
    return float(measure_probabilities(apply(gate(register, HADAMARD), s), register)[1])


def hadamard_collapse(s: QState, register: str, outcome: int) -> QState:
    """Post-measurement state for a Hadamard-basis outcome, in the |±> frame."""
    _require_qubit(s, register)
    h = gate(register, HADAMARD)
    return apply(h, collapse(apply(h, s), register, outcome))


def random_state(layout: RegisterLayout, rng: np.random.Generator) -> QState:
    """Haar-random pure state (normalized complex Gaussian)."""
    layout = _as_layout(layout)
    v = rng.normal(size=layout.total_dim) + 1j * rng.normal(size=layout.total_dim)
    return QState.from_vector(layout, v)


def random_unitary(targets: RegisterLayout, rng: np.random.Generator) -> UnitaryOp:
    """Haar-random unitary on ``targets``."""
    targets = _as_layout(targets)
    d = targets.total_dim
    m = unitary_group.rvs(d, random_state=rng) if d > 1 else np.exp(2j * np.pi * rng.random()) * np.eye(1)
    return UnitaryOp(targets, m)
