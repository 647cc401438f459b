"""Critical radius of two-qubit states.

``R(rho)`` is the largest ``alpha`` for which
``alpha rho + (1 - alpha) I/2 (x) rho_B`` is unsteerable from Alice to Bob
with projective measurements; ``R >= 1`` means ``rho`` itself is
unsteerable. T-states have a closed form. For general states a finite set
of measurement axes gives an upper bound directly, and shrinking the sphere
into the convex hull of those axes turns the same number into a lower bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from steerkit.errors import DimensionError, ValidationError
from steerkit.operators import (
    axis_measurements,
    bloch_decompose,
    hermitian,
    kron,
    partial_trace,
    sqrtm_psd,
)
from steerkit.sdp import critical_alpha_result

GOLDEN = (1 + np.sqrt(5)) / 2
AXIS_ATOL = 1e-9
FULL_RANK_ATOL = 1e-12
DEFAULT_QUAD_POINTS = 10**4


def _canonical_axes(points) -> np.ndarray:
    """Unit vectors with antipodes identified (first nonzero coordinate positive), deduplicated."""
    out = []
    for p in np.asarray(points, dtype=float):
        p = p / np.linalg.norm(p)
        lead = p[np.argmax(np.abs(p) > AXIS_ATOL)]
        p = -p if lead < 0 else p
        if not any(np.linalg.norm(p - q) < AXIS_ATOL for q in out):
            out.append(p)
    return np.array(out)


def _cyclic(vectors) -> list:
    return [np.roll(v, k) for v in vectors for k in range(3)]


def icosahedron_axes() -> np.ndarray:
    """The 6 vertex axes of the regular icosahedron."""
    verts = _cyclic([(0, s1, s2 * GOLDEN) for s1 in (1, -1) for s2 in (1, -1)])
    return _canonical_axes(verts)


def icosidodecahedron_axes() -> np.ndarray:
    """The 15 axes through the icosahedron's edge midpoints (vertices of the icosidodecahedron)."""
    verts = _cyclic([(0, 0, GOLDEN), (0, 0, -GOLDEN)])
    verts += _cyclic(
        [(s1 * 0.5, s2 * GOLDEN / 2, s3 * GOLDEN**2 / 2) for s1 in (1, -1) for s2 in (1, -1) for s3 in (1, -1)]
    )
    return _canonical_axes(verts)


def fibonacci_axes(n: int) -> np.ndarray:
    """``n`` axes from the upper half of a ``2n``-point Fibonacci sphere."""
    if n < 1:
        raise ValidationError("need at least one axis")
    i = np.arange(n) + 0.5
    z = 1 - i / n
    r = np.sqrt(1 - z * z)
    phi = np.pi * (3 - np.sqrt(5)) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


@dataclass(frozen=True)
class DirectionSet:
    axes: np.ndarray  # (k, 3), antipodes implied
    scheme: str = "custom"

    def __post_init__(self):
        axes = np.atleast_2d(np.asarray(self.axes, dtype=float))
        if axes.ndim != 2 or axes.shape[1] != 3 or len(axes) == 0:
            raise DimensionError(f"axes must have shape (k, 3), got {axes.shape}")
        if np.max(np.abs(np.linalg.norm(axes, axis=1) - 1)) > 1e-12:
            raise ValidationError("axes must be unit vectors")
        for i in range(len(axes)):
            for j in range(i):
                if min(np.linalg.norm(axes[i] - axes[j]), np.linalg.norm(axes[i] + axes[j])) < AXIS_ATOL:
                    raise ValidationError(f"axes {j} and {i} coincide up to sign")
        axes.setflags(write=False)
        object.__setattr__(self, "axes", axes)

    @classmethod
    def from_scheme(cls, name: str) -> "DirectionSet":
        key = name.lower().replace("_", "-")
        if key in ("icosa6", "icosahedral-6", "icosa-6"):
            return cls(icosahedron_axes(), "icosahedral-6")
        if key in ("dodeca-icosa15", "dodeca-icosa-15", "icosidodeca15"):
            return cls(icosidodecahedron_axes(), "dodeca-icosa-15")
        if key.startswith("fib:") or key.startswith("fibonacci-"):
            n = int(key.split(":")[-1].split("-")[-1])
            return cls(fibonacci_axes(n), f"fibonacci-{n}")
        if set(key) <= set("xyz") and key:
            unit = {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}
            return cls(np.array([unit[c] for c in key], dtype=float), key)
        raise ValidationError(f"unknown direction scheme {name!r}")

    def __len__(self) -> int:
        return len(self.axes)

    def measurements(self):
        return axis_measurements(self.axes)

    def inradius(self) -> float:
        return inradius(self.axes)


def inradius(axes) -> float:
    """Radius of the largest origin-centred ball inside the hull of ``{+-n_i}``; 0 if the hull is flat."""
    pts = np.concatenate([axes, -np.asarray(axes)])
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return 0.0
    return float(max(0.0, np.min(-hull.equations[:, -1])))


@dataclass(frozen=True)
class FilterRecord:
    bob_filter: np.ndarray
    alice_unitary: np.ndarray
    norm: float


def canonical_filter_form(rho, alice_unitary=None) -> tuple[np.ndarray, FilterRecord]:
    """``(U_A (x) F_B) rho (U_A (x) F_B)^dagger / N`` with ``F_B = (2 rho_B)^{-1/2}``, so Bob's marginal is ``I/2``."""
    rho = hermitian(rho)
    if rho.shape != (4, 4):
        raise DimensionError(f"expected a two-qubit state, got shape {rho.shape}")
    rho_b = partial_trace(rho, (2, 2), "A")
    if np.linalg.eigvalsh(rho_b)[0] <= FULL_RANK_ATOL:
        raise ValidationError("Bob's reduced state is singular; the filter is not invertible")
    f_b = sqrtm_psd(2 * rho_b, -0.5)
    u_a = np.eye(2, dtype=complex) if alice_unitary is None else np.asarray(alice_unitary, dtype=complex)
    k = kron(u_a, f_b)
    out = k @ rho @ k.conj().T
    norm = float(np.trace(out).real)
    return hermitian(out / norm), FilterRecord(f_b, u_a, norm)


def tstate_critical_radius(
    T, n: int = DEFAULT_QUAD_POINTS, allow_singular: bool = False, atol: float = 1e-12
) -> float:
    """``R = 2 pi N_T |det T|`` with ``1/N_T`` the sphere integral of ``(n^T T^{-2} n)^{-2}``.

    Substituting ``n = |T^T| u / ||T^T u||`` turns this into
    ``R = 2 pi / int ||T^T u|| dS(u)``, whose integrand stays smooth when
    ``T`` is nearly singular; the integral is a Fibonacci-lattice average.
    A singular ``T`` raises unless ``allow_singular`` is set, in which case
    ``inf`` is returned.
    """
    T = np.asarray(T, dtype=float)
    if T.shape != (3, 3):
        raise DimensionError(f"T must be 3x3, got {T.shape}")
    det = abs(np.linalg.det(T))
    if det <= atol:
        if not allow_singular:
            raise ValidationError("T is singular; the closed form does not apply")
        warnings.warn("singular T: closed-form radius not applicable, returning inf", stacklevel=2)
        return math.inf
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z * z)
    phi = np.pi * (3 - np.sqrt(5)) * i
    pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    integral = 4 * np.pi * np.mean(np.linalg.norm(pts @ T, axis=1))
    return float(2 * np.pi / integral)


def tstate_radius_error(T, n: int = DEFAULT_QUAD_POINTS) -> float:
    """Quadrature error estimate ``|R_n - R_4n|``."""
    return abs(tstate_critical_radius(T, n) - tstate_critical_radius(T, 4 * n))


def is_tstate(rho, atol: float = 1e-10) -> bool:
    b = bloch_decompose(rho)
    return bool(np.max(np.abs(b.a)) < atol and np.max(np.abs(b.b)) < atol)


def _two_qubit(rho) -> np.ndarray:
    rho = hermitian(rho)
    if rho.shape != (4, 4):
        raise DimensionError(f"expected a two-qubit state, got shape {rho.shape}")
    if np.linalg.eigvalsh(partial_trace(rho, (2, 2), "A"))[0] <= FULL_RANK_ATOL:
        raise ValidationError("Bob's reduced state must have full rank")
    return rho


def radius_upper_result(rho, dirs: DirectionSet, tol: float = 1e-6, solver: str | None = None):
    rho = _two_qubit(rho)
    return critical_alpha_result(rho, dirs.measurements(), tol, alpha_max=None, dims=(2, 2), solver=solver)


def radius_upper(rho, dirs: DirectionSet, tol: float = 1e-6, solver: str | None = None) -> float:
    """Critical ``alpha`` for projective measurements along ``dirs`` (an upper bound on ``R``)."""
    return radius_upper_result(rho, dirs, tol, solver)[0]


def radius_lower(rho, dirs: DirectionSet, tol: float = 1e-6, solver: str | None = None, upper: float | None = None) -> float:
    """``s(dirs) * radius_upper``, with ``s`` the inradius of the hull of ``{+-n_i}``.

    Any qubit projective measurement depolarized by ``s`` is a mixture of the
    finite ones, and depolarizing Alice's measurements by ``s`` is the same
    as moving from ``rho^(alpha)`` to ``rho^(s alpha)``.
    """
    s = dirs.inradius()
    if s == 0:
        warnings.warn("axes are coplanar: the hull has no interior and the lower bound is 0", stacklevel=2)
        return 0.0
    if upper is None:
        upper = radius_upper(rho, dirs, tol, solver)
    return s * upper


@dataclass
class RadiusBracket:
    lower: float
    upper: float
    scheme: str
    axes: int
    inradius: float
    tol: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper:
            raise ValidationError(f"invalid bracket [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, r: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= r <= self.upper + slack

    def verdict(self) -> str:
        """``steerable`` if ``upper < 1``, ``unsteerable`` if ``lower >= 1``, else ``undecided``."""
        if self.upper < 1 - self.tol:
            return "steerable"
        if self.lower >= 1 + self.tol:
            return "unsteerable"
        return "undecided"

    def as_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "scheme": self.scheme,
            "axes": self.axes,
            "inradius": self.inradius,
            "tol": self.tol,
            "verdict": self.verdict(),
            **self.diagnostics,
        }


def radius_bracket(rho, dirs: DirectionSet, tol: float = 1e-6, solver: str | None = None) -> RadiusBracket:
    upper, diag = radius_upper_result(rho, dirs, tol, solver)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lower = radius_lower(rho, dirs, tol, solver, upper=upper)
    s = dirs.inradius()
    return RadiusBracket(lower, upper, dirs.scheme, len(dirs), s, tol, {"solver": diag.get("solver"), "status": diag.get("status")})
