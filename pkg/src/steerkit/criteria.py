"""Closed-form steering tests that need no conic solver.

All of these are sufficient conditions for steerability: a violation
certifies steering from Alice to Bob, while no violation proves nothing.
Entropies are in nats.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from steerkit.errors import DimensionError, ValidationError
from steerkit.operators import (
    PAULIS,
    MeasurementSet,
    assemblage_from_state,
    hermitian,
    operator_schmidt_coefficients,
    projective_povm,
)

CRITERION_TOL = 1e-10
GAUSSIAN_TOL = 1e-9
MAX_LINEAR_TERMS = 24


@dataclass
class CriterionResult:
    name: str
    value: float
    bound: float
    violated: bool
    tol: float
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "criterion": self.name,
            "value": self.value,
            "bound": self.bound,
            "violated": self.violated,
            "tol": self.tol,
            **self.details,
        }


@dataclass(frozen=True)
class CorrelationRecord:
    """Measured statistics of dichotomic (``+-1``) observables.

    ``correlations[x, y] = <A_x (x) B_y>``. The optional conditional table
    holds ``probs[x, a] = p(a|x)`` and ``conditional[x, a, y] = <B_y>|_a``,
    with ``a = 0`` the ``+1`` outcome.
    """

    correlations: np.ndarray
    alice_marginals: np.ndarray | None = None
    bob_marginals: np.ndarray | None = None
    probs: np.ndarray | None = None
    conditional: np.ndarray | None = None

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.correlations, dtype=float))
        if np.any(np.abs(c) > 1 + 1e-10):
            raise ValidationError("correlations of +-1 observables must lie in [-1, 1]")
        object.__setattr__(self, "correlations", c)
        if self.probs is not None:
            p = np.asarray(self.probs, dtype=float)
            if np.any(p < -1e-10) or np.max(np.abs(p.sum(axis=1) - 1)) > 1e-10:
                raise ValidationError("conditional probabilities p(a|x) must be normalized")
            object.__setattr__(self, "probs", p)
        if self.conditional is not None:
            object.__setattr__(self, "conditional", np.asarray(self.conditional, dtype=float))


def _expect(rho, op) -> float:
    return float(np.trace(rho @ op).real)


def correlation_record(rho, alice_observables, bob_observables, dims=None) -> CorrelationRecord:
    """Statistics of ``rho`` for dichotomic observables on both sides."""
    rho = hermitian(rho)
    d_a = np.asarray(alice_observables[0]).shape[0]
    d_b = np.asarray(bob_observables[0]).shape[0]
    if dims is None:
        dims = (d_a, d_b)
    if dims[0] * dims[1] != rho.shape[0]:
        raise DimensionError(f"state of size {rho.shape[0]} does not match {dims}")
    eye_a, eye_b = np.eye(dims[0]), np.eye(dims[1])
    corr = np.array([[_expect(rho, np.kron(a, b)) for b in bob_observables] for a in alice_observables])
    a_marg = np.array([_expect(rho, np.kron(a, eye_b)) for a in alice_observables])
    b_marg = np.array([_expect(rho, np.kron(eye_a, b)) for b in bob_observables])
    ms = MeasurementSet.from_povms([projective_povm(a) for a in alice_observables])
    asm = assemblage_from_state(rho, ms, dims)
    probs = np.einsum("xaii->xa", asm.members).real
    safe = np.where(probs > 1e-14, probs, 1.0)
    cond = np.einsum("xaij,yji->xay", asm.members, np.asarray(bob_observables)).real / safe[:, :, None]
    cond[probs <= 1e-14] = 0.0
    return CorrelationRecord(corr, a_marg, b_marg, probs, cond)


def linear_criterion(correlations, bob_observables, tol: float = CRITERION_TOL) -> CriterionResult:
    """``sum_k |<A_k B_k>| <= max_a lambda_max(sum_k a_k B_k)`` over signs ``a_k = +-1``."""
    corrs = np.asarray(correlations, dtype=float).ravel()
    obs = [hermitian(b) for b in bob_observables]
    n = len(obs)
    if n != len(corrs):
        raise DimensionError(f"{len(corrs)} correlations for {n} observables")
    if n > MAX_LINEAR_TERMS:
        raise ValidationError(f"sign enumeration over {n} terms exceeds the guard {MAX_LINEAR_TERMS}")
    bound = -np.inf
    # signs and their negation give the same spectrum up to sign, so fix a_1 = +1 and check both ends
    for tail in itertools.product((1.0, -1.0), repeat=n - 1):
        w = np.linalg.eigvalsh(sum(s * b for s, b in zip((1.0, *tail), obs)))
        bound = max(bound, w[-1], -w[0])
    lhs = float(np.sum(np.abs(corrs)))
    return CriterionResult("linear", lhs, float(bound), bool(lhs > bound + tol), tol, {"terms": n})


def three_pauli_criterion(rec: CorrelationRecord, tol: float = CRITERION_TOL) -> CriterionResult:
    """``T_x^(1) + T_y^(2) + T_z^(3) <= 1`` with ``T_k = sum_a p(a|k) <sigma_k>|_a^2``.

    The record must hold Alice settings 1..3 and Bob observables ``sigma_x,
    sigma_y, sigma_z`` in that order.
    """
    if rec.probs is None or rec.conditional is None:
        raise ValidationError("three-Pauli criterion needs conditional expectations")
    if rec.conditional.shape[0] < 3 or rec.conditional.shape[2] < 3:
        raise DimensionError("need three Alice settings and three Bob observables")
    value = float(sum(rec.probs[k] @ rec.conditional[k, :, k] ** 2 for k in range(3)))
    return CriterionResult("three-pauli", value, 1.0, bool(value > 1 + tol), tol)


def chsh_steering(correlations, tol: float = CRITERION_TOL) -> CriterionResult:
    """Full-correlation test for two settings per side, Bob's two measurements mutually unbiased."""
    c = np.asarray(correlations, dtype=float)
    if c.shape != (2, 2):
        raise DimensionError(f"expected a 2x2 table <A_i B_j>, got {c.shape}")
    plus, minus = c[0] + c[1], c[0] - c[1]
    value = float(np.linalg.norm(plus) + np.linalg.norm(minus))
    details = {"assumes": "Bob's measurements are mutually unbiased qubit projective; full correlations only"}
    return CriterionResult("chsh", value, 2.0, bool(value > 2 + tol), tol, details)


def max_overlap(b1, b2) -> float:
    """``Omega_B = max_ij |<v_i|w_j>|^2`` for eigenbases of ``b1`` and ``b2``."""
    _, v = np.linalg.eigh(hermitian(b1))
    _, w = np.linalg.eigh(hermitian(b2))
    return float(np.max(np.abs(v.conj().T @ w) ** 2))


def _conditional_entropy(joint) -> float:
    p = np.asarray(joint, dtype=float)
    if np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-10:
        raise ValidationError("joint table must be a probability distribution")
    p = np.clip(p, 0, None)
    pa = p.sum(axis=1)
    nz = p > 0
    h_ab = -np.sum(p[nz] * np.log(p[nz]))
    h_a = -np.sum(pa[pa > 0] * np.log(pa[pa > 0]))
    return float(h_ab - h_a)


def nats_to_bits(x: float) -> float:
    return x / np.log(2)


def bits_to_nats(x: float) -> float:
    return x * np.log(2)


def entropic_criterion(joint1, joint2, b1, b2, tol: float = CRITERION_TOL) -> CriterionResult:
    """``S(B1|A1) + S(B2|A2) >= -ln Omega_B``; ``joint[a, b]`` tables, rows indexed by Alice."""
    value = _conditional_entropy(joint1) + _conditional_entropy(joint2)
    bound = -np.log(max_overlap(b1, b2))
    return CriterionResult("entropic", value, float(bound), bool(value < bound - tol), tol, {"units": "nats"})


def joint_table(rho, alice_observable, bob_observable) -> np.ndarray:
    """``p(a, b)`` for projective measurements of two observables, outcomes by decreasing eigenvalue."""
    pa = projective_povm(alice_observable).effects
    pb = projective_povm(bob_observable).effects
    rho = np.asarray(rho)
    return np.array([[_expect(rho, np.kron(ea, eb)) for eb in pb] for ea in pa])


def ccnr_steering(rho, d: int, tol: float = CRITERION_TOL) -> CriterionResult:
    """Steerable from A to B if the operator-Schmidt coefficients sum above ``sqrt(d)``."""
    total = float(np.sum(operator_schmidt_coefficients(rho, d)))
    return CriterionResult("ccnr", total, float(np.sqrt(d)), bool(total > np.sqrt(d) + tol), tol)


def variance(rho, op) -> float:
    op = np.asarray(op)
    m = _expect(rho, op)
    return _expect(rho, op @ op) - m * m


def lur_observables(alice_ops, bob_ops) -> list:
    """``M_k = A_k (x) I + I (x) B_k``."""
    d_a, d_b = np.asarray(alice_ops[0]).shape[0], np.asarray(bob_ops[0]).shape[0]
    return [np.kron(a, np.eye(d_b)) + np.kron(np.eye(d_a), b) for a, b in zip(alice_ops, bob_ops)]


def lur_criterion(variances, c_b: float, tol: float = CRITERION_TOL) -> CriterionResult:
    """Unsteerable states obey ``sum_k var(M_k) >= C_B``; ``C_B = 2`` for the three Paulis on a qubit."""
    total = float(np.sum(variances))
    return CriterionResult("lur", total, float(c_b), bool(total < c_b - tol), tol)


def pauli_battery(rho, tol: float = CRITERION_TOL) -> list[CriterionResult]:
    """Every closed-form test on a two-qubit state, with Pauli observables on both sides.

    Alice's LUR observables carry the sign that minimizes each variance,
    ``-sign <sigma_k sigma_k>``; the other tests are blind to Alice's signs.
    """
    rho = hermitian(rho)
    if rho.shape != (4, 4):
        raise DimensionError("the Pauli battery needs a two-qubit state")
    rec = correlation_record(rho, PAULIS, PAULIS)
    signs = np.where(np.diag(rec.correlations) > 0, -1.0, 1.0)
    x, z = PAULIS[0], PAULIS[2]
    chsh_table = rec.correlations[np.ix_([0, 2], [0, 2])]
    m_ops = lur_observables([s * p for s, p in zip(signs, PAULIS)], PAULIS)
    return [
        linear_criterion(np.diag(rec.correlations), PAULIS, tol),
        three_pauli_criterion(rec, tol),
        chsh_steering(chsh_table, tol),
        entropic_criterion(joint_table(rho, x, x), joint_table(rho, z, z), x, z, tol),
        ccnr_steering(rho, 2, tol),
        lur_criterion([variance(rho, m) for m in m_ops], 2.0, tol),
    ]


def symplectic_form(n: int) -> np.ndarray:
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class GaussianCovariance:
    """Covariance ``V_ij = Tr[rho {R_i, R_j}]`` in the ordering ``(Q_1, P_1, ..., Q_n, P_n)``, Alice's modes first.

    With this convention the vacuum has ``V = I``.
    """

    modes: tuple[int, int]
    V: np.ndarray

    def __post_init__(self):
        n_a, n_b = (int(k) for k in self.modes)
        v = np.asarray(self.V, dtype=float)
        size = 2 * (n_a + n_b)
        if v.shape != (size, size):
            raise DimensionError(f"covariance for modes {self.modes} must be {size}x{size}, got {v.shape}")
        if np.max(np.abs(v - v.T)) > 1e-10:
            raise ValidationError("covariance matrix is not symmetric")
        v = (v + v.T) / 2
        lo = np.linalg.eigvalsh(v + 1j * symplectic_form(n_a + n_b))[0]
        if lo < -GAUSSIAN_TOL:
            raise ValidationError(f"V + i Omega is not positive semidefinite (min eigenvalue {lo:.3g})")
        v.setflags(write=False)
        object.__setattr__(self, "modes", (n_a, n_b))
        object.__setattr__(self, "V", v)

    def swapped(self) -> "GaussianCovariance":
        n_a, n_b = self.modes
        perm = np.r_[np.arange(2 * n_a, 2 * (n_a + n_b)), np.arange(2 * n_a)]
        return GaussianCovariance((n_b, n_a), self.V[np.ix_(perm, perm)])


@dataclass
class GaussianVerdict:
    steerable: bool
    direction: str
    min_eigenvalue: float
    tol: float

    def as_dict(self) -> dict:
        return {"steerable": self.steerable, "direction": self.direction, "min_eigenvalue": self.min_eigenvalue, "tol": self.tol}


def gaussian_steering(gc: GaussianCovariance, direction: str = "A->B", tol: float = GAUSSIAN_TOL) -> GaussianVerdict:
    """Steerable with Gaussian measurements iff ``V + i(0_A (+) Omega_B)`` is not PSD (for A->B)."""
    n_a, n_b = gc.modes
    if direction == "A->B":
        omega = np.zeros_like(gc.V)
        omega[2 * n_a :, 2 * n_a :] = symplectic_form(n_b)
    elif direction == "B->A":
        omega = np.zeros_like(gc.V)
        omega[: 2 * n_a, : 2 * n_a] = symplectic_form(n_a)
    else:
        raise ValidationError(f"direction must be 'A->B' or 'B->A', got {direction!r}")
    lo = float(np.linalg.eigvalsh(gc.V + 1j * omega)[0])
    return GaussianVerdict(bool(lo < -tol), direction, lo, tol)


def two_mode_squeezed_vacuum(r: float) -> GaussianCovariance:
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    z = np.diag([1.0, -1.0])
    v = np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])
    return GaussianCovariance((1, 1), v)


def vacuum(n_a: int = 1, n_b: int = 1) -> GaussianCovariance:
    return GaussianCovariance((n_a, n_b), np.eye(2 * (n_a + n_b)))
