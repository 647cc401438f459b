"""Benchmark states, closed-form unsteerability thresholds and LHS simulators.

The simulators realize the hidden-state models for Werner and isotropic
states as explicit response functions over a finite ensemble of pure states
on Bob's space. Below the threshold the model is mixed with the product
assemblage, which is exact because both families are affine in ``eta``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from steerkit.errors import DimensionError, ValidationError
from steerkit.operators import (
    Assemblage,
    MeasurementSet,
    density_matrix,
    partial_trace,
    projector,
)

FAMILIES = ("werner", "isotropic")
MEASUREMENT_CLASSES = ("projective", "dichotomic", "povm-barrett")
MODELS = {
    "werner-projective": ("werner", "projective"),
    "isotropic-projective": ("isotropic", "projective"),
    "barrett-werner": ("werner", "povm-barrett"),
    "barrett-isotropic": ("isotropic", "povm-barrett"),
}
RANK1_CUTOFF = 1e-12
PROJECTIVE_ATOL = 1e-8


def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if not 0 <= value <= 1:
        raise ValidationError(f"{name} = {value} outside [0, 1]")
    return value


def _check_dim(d: int) -> int:
    if int(d) != d or d < 2:
        raise DimensionError(f"local dimension must be an integer >= 2, got {d}")
    return int(d)


def flip_operator(d: int) -> np.ndarray:
    """``V |i, j> = |j, i>``."""
    v = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            v[j * d + i, i * d + j] = 1
    return v


def max_entangled(d: int) -> np.ndarray:
    """``|psi_+> = sum_i |i, i> / sqrt(d)``."""
    return np.eye(d, dtype=complex).ravel() / np.sqrt(d)


def werner(d: int, eta: float) -> np.ndarray:
    d, eta = _check_dim(d), _check_unit("eta", eta)
    w = (d - 1 + eta) / (d - 1) * np.eye(d * d) / d**2 - eta / (d - 1) * flip_operator(d) / d
    return density_matrix(w)


def isotropic(d: int, eta: float) -> np.ndarray:
    d, eta = _check_dim(d), _check_unit("eta", eta)
    s = (1 - eta) * np.eye(d * d) / d**2 + eta * projector(max_entangled(d))
    return density_matrix(s)


def one_way_state(alpha: float, theta: float) -> np.ndarray:
    """``alpha |psi_theta><psi_theta| + (1 - alpha) I/2 (x) rho_B`` with ``|psi_theta> = cos t|00> + sin t|11>``."""
    alpha = _check_unit("alpha", alpha)
    if not 0 < theta <= np.pi / 4 + 1e-15:
        raise ValidationError(f"theta = {theta} outside (0, pi/4]")
    psi = np.array([np.cos(theta), 0, 0, np.sin(theta)], dtype=complex)
    pure = projector(psi)
    rho_b = partial_trace(pure, (2, 2), "A")
    return density_matrix(alpha * pure + (1 - alpha) * np.kron(np.eye(2) / 2, rho_b))


def one_way_reverse_margin(alpha: float, theta: float) -> float:
    """``cos^2(2 theta) - (2 alpha - 1)/((2 - alpha) alpha^3)``.

    Nonnegative values certify that Bob cannot steer Alice (uniform-ensemble
    model). This is a sufficient condition only.
    """
    if alpha == 0:
        return np.inf
    return np.cos(2 * theta) ** 2 - (2 * alpha - 1) / ((2 - alpha) * alpha**3)


def one_way_reverse_unsteerable(alpha: float, theta: float) -> bool:
    return one_way_reverse_margin(alpha, theta) >= 0


def harmonic(d: int) -> Fraction:
    return sum((Fraction(1, k) for k in range(1, d + 1)), Fraction(0))


@dataclass(frozen=True)
class ThresholdQuery:
    family: str
    measurement_class: str
    d: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.measurement_class not in MEASUREMENT_CLASSES:
            raise ValidationError(f"unknown measurement class {self.measurement_class!r}; choose from {MEASUREMENT_CLASSES}")
        _check_dim(self.d)


def threshold(query: ThresholdQuery) -> float:
    """Largest mixing parameter for which the state is known to be unsteerable.

    The projective and dichotomic values are exact; the ``povm-barrett``
    values come from explicit models and are sufficient only.
    """
    d = query.d
    match query.family, query.measurement_class:
        case "werner", "projective":
            return 1 - 1 / d
        case "werner", "dichotomic":
            return (d - 1) ** 2 * (1 - (1 - 1 / d) ** (1 / (d - 1)))
        case "isotropic", "projective":
            return float((harmonic(d) - 1) / (d - 1))
        case "isotropic", "dichotomic":
            return 1 - d ** (-1 / (d - 1))
        case "isotropic", "povm-barrett":
            return float(Fraction(3 * d - 1, d + 1) * Fraction((d - 1) ** (d - 1), d**d))
        case "werner", "povm-barrett":
            return float((1 + Fraction((d - 1) ** (d + 1), d**d)) / (d + 1))
    raise ValidationError(f"unsupported threshold query {query}")


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Gaussian matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt (or induced, for ``rank < d``) random state."""
    k = rank or d
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z * z)
    phi = np.pi * (3 - np.sqrt(5)) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _bloch_kets(vectors: np.ndarray) -> np.ndarray:
    x, y, z = vectors.T
    theta = np.arccos(np.clip(z, -1, 1))
    phi = np.arctan2(y, x)
    return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=1).astype(complex)


def _weyl_orbit(kets: np.ndarray) -> np.ndarray:
    """Images of each ket under the ``d^2`` Weyl-Heisenberg displacements."""
    d = kets.shape[1]
    omega = np.exp(2j * np.pi * np.arange(d) / d)
    out = []
    for s in range(d):
        shifted = np.roll(kets, s, axis=1)
        for k in range(d):
            out.append(shifted * omega**k)
    return np.concatenate(out)


@dataclass(frozen=True)
class LhsEnsembleGrid:
    """Pure hidden states ``points[n]`` with weights ``weights[n]``.

    Qubit grids are antipodally symmetric Fibonacci lattices; higher
    dimensions use Haar samples closed under the Weyl-Heisenberg group. In
    both cases ``sum_n w_n |n><n| = I/d`` holds exactly.
    """

    points: np.ndarray  # (N, d)
    weights: np.ndarray  # (N,)
    scheme: str

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or w.shape != (pts.shape[0],):
            raise DimensionError("points must be (N, d) with N weights")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValidationError("weights must be nonnegative and sum to 1")
        if np.max(np.abs(np.linalg.norm(pts, axis=1) - 1)) > 1e-12:
            raise ValidationError("grid points must be normalized")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @classmethod
    def fibonacci(cls, n: int) -> "LhsEnsembleGrid":
        half = _fibonacci_sphere(max(n // 2, 1))
        kets = _bloch_kets(np.concatenate([half, -half]))
        return cls(kets, np.full(len(kets), 1 / len(kets)), f"fibonacci-sphere:{len(kets)}")

    @classmethod
    def haar(cls, d: int, n: int, seed: int = 0) -> "LhsEnsembleGrid":
        rng = np.random.default_rng(seed)
        base = max(n // (d * d), 1)
        z = rng.standard_normal((base, d)) + 1j * rng.standard_normal((base, d))
        kets = _weyl_orbit(z / np.linalg.norm(z, axis=1, keepdims=True))
        return cls(kets, np.full(len(kets), 1 / len(kets)), f"haar:{len(kets)}:seed={seed}")

    @classmethod
    def default(cls, d: int, n: int, seed: int = 0) -> "LhsEnsembleGrid":
        return cls.fibonacci(n) if d == 2 else cls.haar(d, n, seed)

    def second_moment(self) -> np.ndarray:
        return (self.points.T * self.weights) @ self.points.conj()


def rank_one_pieces(ms: MeasurementSet, cutoff: float = RANK1_CUTOFF):
    """Per setting, a list of ``(outcome, weight, ket)`` with ``E_a = sum weight |ket><ket|``."""
    pieces = []
    for povm in ms.effects:
        row = []
        for a, e in enumerate(povm):
            w, v = np.linalg.eigh(e)
            row += [(a, float(w[k]), v[:, k]) for k in range(len(w)) if w[k] > cutoff]
        pieces.append(row)
    return pieces


def _is_projective(ms: MeasurementSet) -> bool:
    eff = np.asarray(ms.effects)
    return bool(np.max(np.abs(eff @ eff - eff)) <= PROJECTIVE_ATOL)


def _responses(model: str, overlaps: np.ndarray, weights: np.ndarray, d: int) -> np.ndarray:
    """Response probabilities per rank-one piece, shape ``(N, pieces)``."""
    n, k = overlaps.shape
    if model == "werner-projective":
        p = np.zeros((n, k))
        p[np.arange(n), np.argmin(overlaps, axis=1)] = 1
        return p
    if model == "isotropic-projective":
        p = np.zeros((n, k))
        p[np.arange(n), np.argmax(overlaps, axis=1)] = 1
        return p
    if model == "barrett-isotropic":
        core = weights * overlaps * (overlaps > 1 / d)
    else:
        core = weights / (d - 1) * (1 - overlaps) * (overlaps < 1 / d)
    return core + weights / d * (1 - core.sum(axis=1, keepdims=True))


@dataclass
class LhsSimulation:
    assemblage: Assemblage
    model: str
    eta: float
    threshold: float
    above_threshold: bool
    grid_scheme: str
    max_normalization_error: float
    warning: str | None = None


def lhs_simulate(
    model: str,
    d: int,
    eta: float,
    ms: MeasurementSet,
    grid: LhsEnsembleGrid | None = None,
    n: int = 10**5,
    seed: int = 0,
) -> LhsSimulation:
    """Assemblage produced by the hidden-state model ``model`` for mixing ``eta``.

    ``rho_{a|x} = sum_lambda w_lambda p(a|x, lambda) |lambda><lambda|`` with
    ``p = r p_model + (1 - r) Tr(E_{a|x})/d`` and ``r = eta / eta*``. Above
    the threshold ``r`` is clipped to 1 and a warning is attached.
    """
    if model not in MODELS:
        raise ValidationError(f"unknown model {model!r}; choose from {sorted(MODELS)}")
    d = _check_dim(d)
    eta = _check_unit("eta", eta)
    if ms.dim != d:
        raise DimensionError(f"measurements act on dimension {ms.dim}, model needs {d}")
    grid = grid or LhsEnsembleGrid.default(d, n, seed)
    if grid.dim != d:
        raise DimensionError(f"grid has dimension {grid.dim}, model needs {d}")
    if model.endswith("projective") and not _is_projective(ms):
        raise ValidationError(f"model {model!r} needs projective measurements")
    family, cls = MODELS[model]
    eta_star = threshold(ThresholdQuery(family, cls, d))
    above = eta > eta_star + 1e-12
    warning = None
    if above:
        warning = f"eta = {eta:.6g} exceeds the model threshold {eta_star:.6g}; simulating at the threshold"
        warnings.warn(warning, stacklevel=2)
    ratio = min(eta / eta_star, 1.0)

    lam = grid.points
    members = np.zeros((ms.settings, ms.outcomes, d, d), dtype=complex)
    worst = 0.0
    for x, row in enumerate(rank_one_pieces(ms)):
        outcomes = np.array([a for a, _, _ in row])
        alphas = np.array([w for _, w, _ in row])
        kets = np.stack([v for _, _, v in row], axis=1)
        if family == "isotropic":
            kets = kets.conj()
        overlaps = np.abs(lam.conj() @ kets) ** 2
        p_pieces = _responses(model, overlaps, alphas, d)
        p = np.zeros((grid.size, ms.outcomes))
        np.add.at(p.T, outcomes, p_pieces.T)
        flat = np.einsum("xaii->xa", ms.effects).real[x] / d
        p = ratio * p + (1 - ratio) * flat
        worst = max(worst, float(np.max(np.abs(p.sum(axis=1) - 1))))
        for a in range(ms.outcomes):
            members[x, a] = (lam.T * (grid.weights * p[:, a])) @ lam.conj()
    return LhsSimulation(
        assemblage=Assemblage(members),
        model=model,
        eta=eta,
        threshold=eta_star,
        above_threshold=above,
        grid_scheme=grid.scheme,
        max_normalization_error=worst,
        warning=warning,
    )
