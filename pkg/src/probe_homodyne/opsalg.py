"""Dense operator algebra on finite tensor-product Hilbert spaces.

Subsystem order is fixed: probe qubits first, then bosonic modes. Qubit basis
index 0 is the ground state |g>, index 1 the excited state |e>. Units are
hbar = g = 1, so evolution times are the dimensionless tau = g t.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BadSubsystem, InvalidState, NotHermitian, ShapeMismatch

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-8

QUBIT = "qubit"
MODE = "mode"


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of qubits and truncated bosonic modes."""

    dims: tuple[int, ...]
    kinds: tuple[str, ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise BadSubsystem("a Hilbert space needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise BadSubsystem(f"every subsystem dimension must be >= 2, got {dims}")
        kinds = tuple(self.kinds) or tuple(QUBIT if d == 2 else MODE for d in dims)
        if len(kinds) != len(dims):
            raise BadSubsystem("kinds and dims have different lengths")
        for k, d in zip(kinds, dims):
            if k not in (QUBIT, MODE):
                raise BadSubsystem(f"unknown subsystem kind {k!r}")
            if k == QUBIT and d != 2:
                raise BadSubsystem("qubit subsystems have dimension 2")
        if MODE in kinds and QUBIT in kinds[kinds.index(MODE):]:
            raise BadSubsystem("probe qubits must precede field modes")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "kinds", kinds)

    @classmethod
    def build(cls, n_qubits: int = 0, modes: Sequence[int] = ()) -> "HilbertSpace":
        return cls((2,) * n_qubits + tuple(modes), (QUBIT,) * n_qubits + (MODE,) * len(modes))

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_qubits(self) -> int:
        return self.kinds.count(QUBIT)

    @property
    def mode_dims(self) -> tuple[int, ...]:
        return tuple(d for d, k in zip(self.dims, self.kinds) if k == MODE)

    def __mul__(self, other: "HilbertSpace") -> "HilbertSpace":
        return HilbertSpace(self.dims + other.dims, self.kinds + other.kinds)

    def subspace(self, keep: Sequence[int]) -> "HilbertSpace":
        return HilbertSpace(tuple(self.dims[i] for i in keep), tuple(self.kinds[i] for i in keep))


@dataclass(frozen=True)
class Operator:
    space: HilbertSpace
    entries: np.ndarray

    def __post_init__(self):
        m = _frozen(self.entries)
        d = self.space.total_dim
        if m.shape != (d, d):
            raise ShapeMismatch(f"operator shape {m.shape} does not match space dim {d}")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.space.total_dim

    @property
    def dag(self) -> "Operator":
        return Operator(self.space, self.entries.conj().T)

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_space(self, other)
        return Operator(self.space, self.entries @ other.entries)

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_space(self, other)
        return Operator(self.space, self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_space(self, other)
        return Operator(self.space, self.entries - other.entries)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.space, self.entries * scalar)

    __rmul__ = __mul__

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return self.hermiticity_error() <= tol * max(1.0, self.max_abs())

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.entries), initial=0.0))


def _check_same_space(a: Operator, b: Operator) -> None:
    if a.space.dims != b.space.dims:
        raise ShapeMismatch(f"spaces differ: {a.space.dims} vs {b.space.dims}")


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace, positive operator.

    ``meta`` carries provenance such as the truncation leakage measured before
    renormalization.
    """

    op: Operator
    hermiticity_tol: float = HERMITICITY_TOL
    trace_tol: float = TRACE_TOL
    positivity_tol: float = POSITIVITY_TOL
    meta: Mapping = field(default_factory=dict, compare=False)
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if self.validate:
            self.check()

    def check(self) -> None:
        m = self.op.entries
        herm = self.op.hermiticity_error()
        if herm > self.hermiticity_tol:
            raise InvalidState(f"density matrix not Hermitian (max deviation {herm:.3e})")
        tr = np.trace(m)
        if abs(tr - 1.0) > self.trace_tol:
            raise InvalidState(f"density matrix trace {tr.real:.12f} differs from 1")
        lam_min = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
        if lam_min < -self.positivity_tol:
            raise InvalidState(f"density matrix has negative eigenvalue {lam_min:.3e}")

    @classmethod
    def from_matrix(cls, space: HilbertSpace, matrix, meta=None, validate=True) -> "DensityOperator":
        return cls(Operator(space, matrix), meta=dict(meta or {}), validate=validate)

    @classmethod
    def pure(cls, space: HilbertSpace, vector, meta=None) -> "DensityOperator":
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls.from_matrix(space, np.outer(v, v.conj()), meta=meta)

    @property
    def space(self) -> HilbertSpace:
        return self.op.space

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    @property
    def dim(self) -> int:
        return self.op.dim


# ---------------------------------------------------------------------------
# elementary operators

def identity(space: HilbertSpace) -> Operator:
    return Operator(space, np.eye(space.total_dim))


def qubit_space() -> HilbertSpace:
    return HilbertSpace((2,), (QUBIT,))


def mode_space(n: int) -> HilbertSpace:
    return HilbertSpace((n,), (MODE,))


def sigma_minus() -> Operator:
    """Probe lowering operator |g><e|."""
    return Operator(qubit_space(), [[0, 1], [0, 0]])


def sigma_plus() -> Operator:
    return sigma_minus().dag


def sigma_x() -> Operator:
    return Operator(qubit_space(), [[0, 1], [1, 0]])


def sigma_z() -> Operator:
    """|e><e| - |g><g|."""
    return Operator(qubit_space(), [[-1, 0], [0, 1]])


def projector_g() -> Operator:
    return Operator(qubit_space(), [[1, 0], [0, 0]])


def projector_e() -> Operator:
    return Operator(qubit_space(), [[0, 0], [0, 1]])


def destroy(n: int) -> Operator:
    """Annihilation operator truncated hard at n levels (a^dag|n-1> = 0)."""
    return Operator(mode_space(n), np.diag(np.sqrt(np.arange(1, n)), 1))


def create(n: int) -> Operator:
    return destroy(n).dag


def number(n: int) -> Operator:
    return Operator(mode_space(n), np.diag(np.arange(n, dtype=float)))


def kron(a: Operator, b: Operator, *more: Operator) -> Operator:
    """Kronecker product in the fixed subsystem order (left factor first)."""
    out = Operator(a.space * b.space, np.kron(a.entries, b.entries))
    for c in more:
        out = kron(out, c)
    return out


def embed(op: Operator, space: HilbertSpace, index: int) -> Operator:
    """Lift a single-subsystem operator to act on subsystem ``index`` of ``space``."""
    if op.space.dims != (space.dims[index],):
        raise ShapeMismatch(f"operator dims {op.space.dims} do not fit subsystem {index} of {space.dims}")
    mats = [np.eye(d) for d in space.dims]
    mats[index] = op.entries
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return Operator(space, out)


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


# ---------------------------------------------------------------------------
# spectral machinery

def eig_hermitian(h: Operator, tol: float = HERMITICITY_TOL) -> tuple[np.ndarray, Operator]:
    """Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian operator.

    Raises:
        NotHermitian: if ``h`` deviates from its adjoint by more than ``tol``
            (relative to its largest entry).
    """
    if not h.is_hermitian(tol):
        raise NotHermitian(f"operator is not Hermitian (deviation {h.hermiticity_error():.3e})")
    m = h.entries
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return w, Operator(h.space, v)


class Propagator:
    """exp(-i tau h) from a single eigendecomposition, reused across tau values."""

    def __init__(self, h: Operator):
        self.space = h.space
        self.eigenvalues, vecs = eig_hermitian(h)
        self.vectors = vecs.entries

    def unitary(self, tau: float) -> np.ndarray:
        v = self.vectors
        return (v * np.exp(-1j * self.eigenvalues * tau)) @ v.conj().T

    def evolve(self, rho: DensityOperator, tau: float) -> DensityOperator:
        u = self.unitary(tau)
        m = u @ rho.matrix @ u.conj().T
        m = 0.5 * (m + m.conj().T)
        return DensityOperator(Operator(rho.space, m), meta=rho.meta, validate=False)

    def expectation_weights(self, rho: DensityOperator, observable) -> np.ndarray:
        """Matrix W with Tr[rho(tau) O] = sum_jk W_jk exp(-i (l_j - l_k) tau)."""
        o = observable.entries if isinstance(observable, Operator) else np.asarray(observable)
        v = self.vectors
        r = v.conj().T @ rho.matrix @ v
        p = v.conj().T @ o @ v
        return r * p.T

    def trace_series(self, weights: np.ndarray, taus) -> np.ndarray:
        """Evaluate sum_jk W_jk exp(-i (l_j - l_k) tau) for every tau."""
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        lam = self.eigenvalues
        out = np.empty(taus.shape, dtype=complex)
        for i, t in enumerate(taus):
            ph = np.exp(-1j * lam * t)
            out[i] = ph @ weights @ ph.conj()
        return out


def evolve(rho0: DensityOperator, h: Operator, tau: float) -> DensityOperator:
    """rho(tau) = exp(-i tau h) rho0 exp(+i tau h); tau may be negative."""
    if rho0.space.dims != h.space.dims:
        raise ShapeMismatch("state and Hamiltonian live on different spaces")
    return Propagator(h).evolve(rho0, tau)


def expectation(rho: DensityOperator, o: Operator, tol: float = 1e-12):
    """Tr(rho o). Returns a float when ``o`` is Hermitian, else a complex number."""
    if rho.space.dims != o.space.dims:
        raise ShapeMismatch(f"state dims {rho.space.dims} vs operator dims {o.space.dims}")
    val = complex(np.einsum("ij,ji->", rho.matrix, o.entries))
    if o.is_hermitian():
        if abs(val.imag) > max(tol, 1e-12 * o.max_abs() * rho.dim):
            raise NotHermitian(f"imaginary residue {val.imag:.3e} for Hermitian observable")
        return val.real
    return val


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Reduced state on the subsystems listed in ``keep`` (order preserved)."""
    dims = rho.space.dims
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep or any(k < 0 or k >= n for k in keep):
        raise BadSubsystem(f"invalid subsystem selection {keep} for {n} subsystems")
    if len(keep) == n:
        return rho
    t = rho.matrix.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = int(np.prod([dims[i] for i in keep]))
    sub = rho.space.subspace(keep)
    return DensityOperator(Operator(sub, reduced.reshape(d, d)), meta=rho.meta, validate=False)
