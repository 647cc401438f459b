"""Joint measurability and its dictionary with steering.

A parent POVM only ever needs deterministic post-processings: a
probabilistic post-processing is a convex mixture of deterministic ones,
so the decomposition program of :mod:`steerkit.sdp` applies unchanged with
the identity in place of the reduced state.
"""

from __future__ import annotations

from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from steerkit import conic
from steerkit.errors import ValidationError
from steerkit.operators import (
    PAULI_BY_NAME,
    PAULIS,
    Assemblage,
    MeasurementSet,
    assemblage_from_state,
    hermitian,
    partial_trace,
    sqrtm_psd,
)
from steerkit.sdp import (
    DEFAULT_TOL,
    DeterministicStrategySet,
    SteeringInequality,
    _cached,
    _reproduces,
    _targets,
    decomposition_dual,
    decomposition_margin,
    enumerate_strategies,
)

PINV_CUTOFF = 1e-10
RADICAND_CLAMP = 1e-12


@dataclass(frozen=True)
class JointObservable:
    strategies: DeterministicStrategySet
    effects: np.ndarray  # G_lambda, (q**m, d, d)

    def reproduce(self) -> np.ndarray:
        s = self.strategies
        flat = np.einsum("kl,lij->kij", s.matrix, self.effects)
        return flat.reshape(s.m, s.q, *self.effects.shape[1:])


@dataclass
class JmResult:
    jointly_measurable: bool
    margin: float  # max mu with G_lambda >= mu I; >= -tol means JM
    joint: JointObservable | None
    witness: SteeringInequality | None
    diagnostics: dict

    def __bool__(self) -> bool:
        return self.jointly_measurable


def is_jointly_measurable(ms: MeasurementSet, tol: float = DEFAULT_TOL, solver: str | None = None) -> JmResult:
    effects = np.asarray(ms.effects)
    strat = enumerate_strategies(ms.settings, ms.outcomes)
    mu, parents, info = decomposition_margin(effects, solver)
    jm = mu >= -tol
    diag = {"primal": info.as_dict(), "tol": tol}
    if jm:
        return JmResult(True, mu, JointObservable(strat, parents), None, diag)
    coeffs, _, dual_info = decomposition_dual(effects, solver)
    diag["dual"] = dual_info.as_dict()
    return JmResult(False, mu, None, SteeringInequality(strat, coeffs), diag)


def _robustness_problem(m, q, d):
    def build():
        strat = enumerate_strategies(m, q)
        target = cp.Parameter((m * q, d * d))
        g = cp.Variable((strat.size, d * d))
        total = cp.sum(g, axis=0)
        tr = total @ conic.trace_weights(d)
        eye = conic.to_coords(np.eye(d))
        cons = [
            *conic.psd_rows(strat.matrix @ g - target, d),
            *conic.psd_rows(g, d),
            total == (tr / d) * eye,
        ]
        return cp.Problem(cp.Minimize(tr / d - 1), cons), target, g

    return _cached(("incompat-robustness", m, q, d), build)


def incompatibility_robustness(ms: MeasurementSet, solver: str | None = None) -> float:
    """Minimal ``t`` such that ``(A + t N)/(1 + t)`` is jointly measurable for some POVMs ``N``."""
    prob, target, _ = _robustness_problem(ms.settings, ms.outcomes, ms.dim)
    target.value = _targets(ms.effects)
    info = conic.solve(prob, solver)
    return max(info.value, 0.0)


def _visibility_problem(m, q, d):
    def build():
        strat = enumerate_strategies(m, q)
        signal = cp.Parameter((m * q, d * d))
        noise = cp.Parameter((m * q, d * d))
        g = cp.Variable((strat.size, d * d))
        eta = cp.Variable()
        cons = [*_reproduces(strat, g, noise + eta * (signal - noise)), *conic.psd_rows(g, d)]
        return cp.Problem(cp.Maximize(eta), cons), signal, noise

    return _cached(("jm-visibility", m, q, d), build)


def white_noise_threshold(ms: MeasurementSet, solver: str | None = None) -> float:
    """Largest ``eta`` for which ``eta A_{a|x} + (1 - eta) Tr(A_{a|x}) I/d`` is jointly measurable."""
    d = ms.dim
    weights = np.einsum("xaii->xa", ms.effects).real / d
    noise = weights[:, :, None, None] * np.eye(d)
    prob, signal, p_noise = _visibility_problem(ms.settings, ms.outcomes, d)
    signal.value = _targets(ms.effects)
    p_noise.value = _targets(noise)
    return conic.solve(prob, solver).value


def noisy_paulis(mu: float, axes: str = "xz") -> MeasurementSet:
    """``S^mu_{+-|k} = (I +- mu sigma_k)/2``."""
    povms = [np.stack([(np.eye(2) + s * mu * PAULI_BY_NAME[k]) / 2 for s in (1, -1)]) for k in axes]
    return MeasurementSet(np.stack(povms))


@dataclass(frozen=True)
class QubitDichotomicPair:
    """``A_{+|x} = ((1 + alpha_x) I + a_x.sigma)/2``, ``A_{-|x} = I - A_{+|x}``."""

    biases: tuple[float, float]
    vectors: np.ndarray  # (2, 3)

    def __post_init__(self):
        vec = np.asarray(self.vectors, dtype=float).reshape(2, 3)
        for alpha, a in zip(self.biases, vec):
            if not -1 <= alpha <= 1:
                raise ValidationError(f"bias {alpha} outside [-1, 1]")
            if np.linalg.norm(a) > 1 - abs(alpha) + 1e-12:
                raise ValidationError("effects are not positive: need |a| <= 1 - |alpha|")
        object.__setattr__(self, "vectors", vec)
        object.__setattr__(self, "biases", tuple(float(b) for b in self.biases))

    def measurements(self) -> MeasurementSet:
        povms = []
        for alpha, a in zip(self.biases, self.vectors):
            plus = ((1 + alpha) * np.eye(2) + sum(c * s for c, s in zip(a, PAULIS))) / 2
            povms.append(np.stack([plus, np.eye(2) - plus]))
        return MeasurementSet(np.stack(povms))

    @property
    def unbiased(self) -> bool:
        return self.biases == (0.0, 0.0)


def _sqrt_clamped(x: float) -> float:
    if x < 0:
        if x < -RADICAND_CLAMP:
            raise ValidationError(f"negative radicand {x:.3g}")
        return 0.0
    return float(np.sqrt(x))


def qubit_pair_margin(pair: QubitDichotomicPair) -> float:
    """Signed slack of the closed-form criterion; ``>= 0`` means jointly measurable."""
    a1, a2 = pair.vectors
    if pair.unbiased:
        return 2 - np.linalg.norm(a1 + a2) - np.linalg.norm(a1 - a2)
    fs, ratios = [], []
    for alpha, a in zip(pair.biases, pair.vectors):
        r = float(a @ a)
        f = 0.5 * (_sqrt_clamped((1 + alpha) ** 2 - r) + _sqrt_clamped((1 - alpha) ** 2 - r))
        fs.append(f)
        ratios.append(0.0 if alpha == 0 else alpha**2 / f**2 if f > 0 else np.inf)
    lhs = (1 - fs[0] ** 2 - fs[1] ** 2) * (1 - ratios[0] - ratios[1])
    rhs = (a1 @ a2 - pair.biases[0] * pair.biases[1]) ** 2
    return rhs - lhs


def qubit_pair_criterion(pair: QubitDichotomicPair) -> bool:
    return qubit_pair_margin(pair) >= 0


def normalize_assemblage(asm: Assemblage, cutoff: float = PINV_CUTOFF) -> MeasurementSet:
    """``rho_B^{-1/2} rho_{a|x} rho_B^{-1/2}``, pseudo-inverse off the support.

    On a rank-deficient ``rho_B`` the resulting effects resolve the projector
    onto the support; the complement is assigned to outcome 0 so that every
    setting is a POVM on the full space.
    """
    inv_sqrt = sqrtm_psd(asm.reduced, -0.5, cutoff)
    eff = np.einsum("ij,xajk,kl->xail", inv_sqrt, asm.members, inv_sqrt)
    support = inv_sqrt @ asm.reduced @ inv_sqrt
    eff[:, 0] += np.eye(asm.dim) - support
    return MeasurementSet(eff)


def _transpose_in_eigenbasis(ops, basis) -> np.ndarray:
    return basis @ np.swapaxes(basis.conj().T @ ops @ basis, -1, -2) @ basis.conj().T


def heisenberg_povm_map(rho, alice: MeasurementSet, dims=None, cutoff: float = PINV_CUTOFF) -> MeasurementSet:
    """Bob-side POVMs ``rho_B^{-1/2} Tr_A[(A_{a|x} (x) I) rho]^T rho_B^{-1/2}``.

    The transpose is taken in the eigenbasis of ``rho_B``.
    """
    rho = hermitian(rho)
    d_a = alice.dim
    dims = dims or (d_a, rho.shape[0] // d_a)
    asm = assemblage_from_state(rho, alice, dims)
    rho_b = partial_trace(rho, dims, "A")
    _, basis = np.linalg.eigh(rho_b)
    inv_sqrt = sqrtm_psd(rho_b, -0.5, cutoff)
    eff = inv_sqrt @ _transpose_in_eigenbasis(np.asarray(asm.members), basis) @ inv_sqrt
    support = inv_sqrt @ rho_b @ inv_sqrt
    eff[:, 0] += np.eye(dims[1]) - support
    return MeasurementSet(eff)


def transpose_in_eigenbasis(ms: MeasurementSet, reference) -> MeasurementSet:
    _, basis = np.linalg.eigh(reference)
    return MeasurementSet(_transpose_in_eigenbasis(np.asarray(ms.effects), basis))
