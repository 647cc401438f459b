"""Dense operator algebra and the bipartite data model.

Operators are plain complex numpy arrays. The constructors in this module
validate and symmetrize them; container types (:class:`Povm`,
:class:`MeasurementSet`, :class:`Assemblage`) hold read-only stacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from steerkit.errors import DimensionError, ValidationError

HERMITIAN_ATOL = 1e-6
PSD_ATOL = 1e-9
POVM_ATOL = 1e-8
NO_SIGNALLING_ATOL = 1e-8

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)
PAULI_BY_NAME = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def hermitian(m, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Return ``(M + M^dagger)/2`` after checking the anti-Hermitian residue."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"expected a non-empty square matrix, got shape {m.shape}")
    residue = np.max(np.abs(m - m.conj().T)) / 2 if m.size else 0.0
    if residue > atol:
        raise ValidationError(f"matrix is not Hermitian (residue {residue:.3g})")
    return _frozen((m + m.conj().T) / 2)


def min_eig(m) -> float:
    return float(np.linalg.eigvalsh(m)[0])


def is_psd(m, atol: float = PSD_ATOL) -> bool:
    return min_eig(m) >= -atol


def density_matrix(m, atol: float = PSD_ATOL) -> np.ndarray:
    """Validate a (possibly subnormalized) density operator."""
    h = hermitian(m)
    lo = min_eig(h)
    if lo < -atol:
        raise ValidationError(f"operator is not positive semidefinite (min eigenvalue {lo:.3g})")
    tr = float(np.trace(h).real)
    if not 0 < tr <= 1 + atol:
        raise ValidationError(f"trace {tr:.6g} outside (0, 1]")
    return h


def ket(*amplitudes) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=complex).ravel()
    return v / np.linalg.norm(v)


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    return np.outer(v, v.conj())


def kron(*ops) -> np.ndarray:
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def _split(dim: int, dims) -> tuple[int, int]:
    d_a, d_b = (int(x) for x in dims)
    if d_a < 1 or d_b < 1 or d_a * d_b != dim:
        raise DimensionError(f"dimension {dim} does not factor as {d_a}x{d_b}")
    return d_a, d_b


def partial_trace(m, dims, subsystem: str = "A") -> np.ndarray:
    """Trace out subsystem ``"A"`` or ``"B"`` of an operator on ``d_A * d_B``."""
    m = np.asarray(m, dtype=complex)
    d_a, d_b = _split(m.shape[0], dims)
    t = m.reshape(d_a, d_b, d_a, d_b)
    if subsystem == "A":
        return np.einsum("ijik->jk", t)
    if subsystem == "B":
        return np.einsum("ijkj->ik", t)
    raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")


def partial_transpose(m, dims, subsystem: str = "B") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    d_a, d_b = _split(m.shape[0], dims)
    t = m.reshape(d_a, d_b, d_a, d_b)
    if subsystem == "B":
        t = t.transpose(0, 3, 2, 1)
    elif subsystem == "A":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return t.reshape(d_a * d_b, d_a * d_b)


def min_eig_partial_transpose(rho, dims) -> float:
    """Smallest eigenvalue of ``rho^{T_B}``; negative values certify entanglement."""
    return min_eig(hermitian(partial_transpose(rho, dims)))


def swap_parties(rho, dims) -> np.ndarray:
    """Reorder ``A (x) B`` into ``B (x) A``."""
    rho = np.asarray(rho, dtype=complex)
    d_a, d_b = _split(rho.shape[0], dims)
    t = rho.reshape(d_a, d_b, d_a, d_b).transpose(1, 0, 3, 2)
    return t.reshape(d_a * d_b, d_a * d_b)


def operator_schmidt_coefficients(rho, d: int) -> np.ndarray:
    """Operator-Schmidt coefficients of ``rho`` on ``d x d``, nonincreasing.

    These are the singular values of the realigned matrix
    ``R[(i,k),(j,l)] = <ij|rho|kl>``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d * d, d * d):
        raise DimensionError(f"expected a {d * d}x{d * d} operator, got {rho.shape}")
    realigned = rho.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
    return np.linalg.svd(realigned, compute_uv=False)


def sqrtm_psd(m, power: float = 0.5, cutoff: float = 0.0) -> np.ndarray:
    """Matrix power of a PSD matrix; eigenvalues at or below ``cutoff`` map to zero."""
    w, v = np.linalg.eigh(np.asarray(m, dtype=complex))
    safe = np.where(w > cutoff, w, 1.0)
    wp = np.where(w > cutoff, safe**power, 0.0)
    return (v * wp) @ v.conj().T


def trace_distance(a, b) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(hermitian(np.asarray(a) - np.asarray(b))))))


@dataclass(frozen=True)
class BlochDecomposition:
    """``rho = (I + a.sigma (x) I + I (x) b.sigma + sum T_ij sigma_i (x) sigma_j) / 4``."""

    a: np.ndarray
    b: np.ndarray
    T: np.ndarray

    def to_matrix(self) -> np.ndarray:
        m = np.eye(4, dtype=complex)
        for i, s in enumerate(PAULIS):
            m += self.a[i] * np.kron(s, np.eye(2)) + self.b[i] * np.kron(np.eye(2), s)
            for j, t in enumerate(PAULIS):
                m += self.T[i, j] * np.kron(s, t)
        return m / 4


def bloch_decompose(rho) -> BlochDecomposition:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise DimensionError(f"expected a two-qubit operator, got shape {rho.shape}")
    eye = np.eye(2)
    a = np.array([np.trace(rho @ np.kron(s, eye)).real for s in PAULIS])
    b = np.array([np.trace(rho @ np.kron(eye, s)).real for s in PAULIS])
    T = np.array([[np.trace(rho @ np.kron(s, t)).real for t in PAULIS] for s in PAULIS])
    return BlochDecomposition(a, b, T)


def from_bloch(a, b, T) -> np.ndarray:
    return BlochDecomposition(np.asarray(a, float), np.asarray(b, float), np.asarray(T, float)).to_matrix()


@dataclass(frozen=True)
class Povm:
    """Effects stacked as an array of shape ``(q, d, d)``."""

    effects: np.ndarray

    def __post_init__(self):
        eff = np.asarray(self.effects, dtype=complex)
        if eff.ndim != 3 or eff.shape[0] < 1:
            raise DimensionError(f"effects must have shape (q, d, d), got {eff.shape}")
        eff = np.stack([hermitian(e) for e in eff])
        for e in eff:
            if min_eig(e) < -PSD_ATOL:
                raise ValidationError("POVM effect is not positive semidefinite")
        d = eff.shape[1]
        if np.max(np.abs(eff.sum(axis=0) - np.eye(d))) > POVM_ATOL:
            raise ValidationError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", _frozen(eff))

    @property
    def outcomes(self) -> int:
        return self.effects.shape[0]

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    def padded(self, q: int) -> "Povm":
        if q < self.outcomes:
            raise ValueError("cannot pad to fewer outcomes")
        extra = np.zeros((q - self.outcomes, self.dim, self.dim), dtype=complex)
        return Povm(np.concatenate([self.effects, extra]))

    def transpose(self) -> "Povm":
        return Povm(self.effects.transpose(0, 2, 1))


def projective_povm(observable) -> Povm:
    """Spectral projectors of an observable, ordered by decreasing eigenvalue."""
    w, v = np.linalg.eigh(hermitian(observable))
    effects = []
    for val in np.unique(np.round(w, 9))[::-1]:
        cols = v[:, np.abs(w - val) < 1e-9]
        effects.append(cols @ cols.conj().T)
    return Povm(np.stack(effects))


def dichotomic_povm(direction, bias: float = 0.0, length: float | None = None) -> Povm:
    """Qubit POVM ``E_+ = ((1 + bias) I + a.sigma)/2`` with ``a = length * n``."""
    n = np.asarray(direction, dtype=float)
    if length is not None:
        n = length * n / np.linalg.norm(n)
    plus = ((1 + bias) * np.eye(2) + sum(c * s for c, s in zip(n, PAULIS))) / 2
    return Povm(np.stack([plus, np.eye(2) - plus]))


@dataclass(frozen=True)
class MeasurementSet:
    """POVMs indexed by setting, padded to a common outcome count.

    ``effects[x, a]`` is the effect of outcome ``a`` for setting ``x``.
    """

    effects: np.ndarray

    def __post_init__(self):
        eff = np.asarray(self.effects, dtype=complex)
        if eff.ndim != 4:
            raise DimensionError(f"effects must have shape (m, q, d, d), got {eff.shape}")
        povms = [Povm(e) for e in eff]
        object.__setattr__(self, "effects", _frozen(np.stack([p.effects for p in povms])))

    @classmethod
    def from_povms(cls, povms) -> "MeasurementSet":
        povms = [p if isinstance(p, Povm) else Povm(p) for p in povms]
        if not povms:
            raise ValueError("need at least one setting")
        dims = {p.dim for p in povms}
        if len(dims) != 1:
            raise DimensionError(f"POVMs act on different dimensions {sorted(dims)}")
        q = max(p.outcomes for p in povms)
        return cls(np.stack([p.padded(q).effects for p in povms]))

    @classmethod
    def from_observables(cls, observables) -> "MeasurementSet":
        return cls.from_povms([projective_povm(o) for o in observables])

    @property
    def settings(self) -> int:
        return self.effects.shape[0]

    @property
    def outcomes(self) -> int:
        return self.effects.shape[1]

    @property
    def dim(self) -> int:
        return self.effects.shape[2]

    def povm(self, x: int) -> Povm:
        return Povm(self.effects[x])

    def transpose(self) -> "MeasurementSet":
        return MeasurementSet(self.effects.transpose(0, 1, 3, 2))

    def subset(self, settings) -> "MeasurementSet":
        return MeasurementSet(self.effects[list(settings)])


def pauli_measurements(axes: str = "xz") -> MeasurementSet:
    """Projective Pauli measurements; outcome 0 is ``+1``, outcome 1 is ``-1``."""
    return MeasurementSet.from_observables([PAULI_BY_NAME[c] for c in axes])


def axis_measurements(directions) -> MeasurementSet:
    return MeasurementSet.from_povms([dichotomic_povm(n / np.linalg.norm(n)) for n in np.atleast_2d(directions)])


@dataclass(frozen=True)
class Assemblage:
    """Subnormalized conditional states ``members[x, a]`` with common reduced state."""

    members: np.ndarray
    reduced: np.ndarray = field(default=None)

    def __post_init__(self):
        mem = np.asarray(self.members, dtype=complex)
        if mem.ndim != 4 or mem.shape[2] != mem.shape[3]:
            raise DimensionError(f"members must have shape (m, q, d, d), got {mem.shape}")
        mem = np.stack([[hermitian(r) for r in row] for row in mem])
        for row in mem:
            for r in row:
                if min_eig(r) < -PSD_ATOL:
                    raise ValidationError("assemblage member is not positive semidefinite")
        sums = mem.sum(axis=1)
        reduced = sums[0] if self.reduced is None else hermitian(self.reduced)
        if np.max(np.abs(sums - reduced)) > NO_SIGNALLING_ATOL:
            raise ValidationError("assemblage violates no-signalling: sum_a rho_{a|x} depends on x")
        object.__setattr__(self, "members", _frozen(mem))
        object.__setattr__(self, "reduced", density_matrix(reduced, atol=max(PSD_ATOL, NO_SIGNALLING_ATOL)))

    @property
    def settings(self) -> int:
        return self.members.shape[0]

    @property
    def outcomes(self) -> int:
        return self.members.shape[1]

    @property
    def dim(self) -> int:
        return self.members.shape[2]

    def mix(self, other: "Assemblage", p: float) -> "Assemblage":
        """``p * self + (1 - p) * other``."""
        return Assemblage(p * self.members + (1 - p) * other.members)

    def relabel(self, setting_perm=None, outcome_perms=None) -> "Assemblage":
        mem = self.members
        if setting_perm is not None:
            mem = mem[list(setting_perm)]
        if outcome_perms is not None:
            mem = np.stack([mem[x][list(p)] for x, p in enumerate(outcome_perms)])
        return Assemblage(mem)


def assemblage_from_state(rho, measurements: MeasurementSet, dims=None) -> Assemblage:
    """``rho_{a|x} = Tr_A[(E_{a|x} (x) I) rho]`` for Alice's measurements."""
    rho = np.asarray(rho, dtype=complex)
    d_a = measurements.dim
    if dims is None:
        if rho.shape[0] % d_a:
            raise DimensionError(f"Alice dimension {d_a} does not divide {rho.shape[0]}")
        dims = (d_a, rho.shape[0] // d_a)
    d_a2, d_b = _split(rho.shape[0], dims)
    if d_a2 != d_a:
        raise DimensionError(f"measurements act on dimension {d_a}, state has d_A = {d_a2}")
    t = rho.reshape(d_a, d_b, d_a, d_b)
    # Tr_A[(E (x) I) rho]_{jl} = sum_{ik} E_{ki} rho_{ij,kl}
    members = np.einsum("xaki,ijkl->xajl", measurements.effects, t)
    return Assemblage(members, reduced=partial_trace(rho, dims, "A"))
