"""JSON documents for states, assemblages, measurements, inequalities and covariances.

Every document carries ``version`` and a ``kind`` discriminator. Complex
matrices are nested row-major lists of ``[re, im]`` pairs and all shapes are
stated explicitly, so a document can be read without numpy conventions.
Serialization is canonical (sorted keys, fixed indentation): a document
that is parsed and written again is byte-identical.
"""

from __future__ import annotations

import json

import numpy as np

from steerkit.criteria import GaussianCovariance
from steerkit.errors import ValidationError
from steerkit.operators import Assemblage, MeasurementSet, density_matrix
from steerkit.sdp import SteeringInequality, enumerate_strategies

SCHEMA_VERSION = 1
KINDS = ("state", "assemblage", "measurements", "inequality", "covariance")


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(rows) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"matrix entries must be [re, im] pairs: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValidationError(f"expected rows of [re, im] pairs, got array of shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _encode_stack(ops) -> list:
    ops = np.asarray(ops)
    return [[encode_matrix(o) for o in row] for row in ops]


def _decode_stack(data, m: int, q: int, d: int) -> np.ndarray:
    if len(data) != m or any(len(row) != q for row in data):
        raise ValidationError(f"expected {m} settings of {q} outcomes")
    out = np.array([[decode_matrix(o) for o in row] for row in data])
    if out.shape != (m, q, d, d):
        raise ValidationError(f"operators have shape {out.shape[2:]}, declared dimension {d}")
    return out


def _header(kind: str) -> dict:
    return {"version": SCHEMA_VERSION, "kind": kind}


def state_document(rho, dims) -> dict:
    # symmetrize first so that reading the document back is an exact fixed point
    rho = density_matrix(rho)
    return {**_header("state"), "dims": [int(d) for d in dims], "matrix": encode_matrix(rho)}


def assemblage_document(asm: Assemblage) -> dict:
    return {
        **_header("assemblage"),
        "dims": {"settings": asm.settings, "outcomes": asm.outcomes, "d": asm.dim},
        "members": _encode_stack(asm.members),
    }


def measurements_document(ms: MeasurementSet) -> dict:
    return {
        **_header("measurements"),
        "dims": {"settings": ms.settings, "outcomes": ms.outcomes, "d": ms.dim},
        "effects": _encode_stack(ms.effects),
    }


def inequality_document(ineq: SteeringInequality) -> dict:
    m, q, d = ineq.coefficients.shape[:3]
    return {
        **_header("inequality"),
        "dims": {"settings": m, "outcomes": q, "d": d},
        "coefficients": _encode_stack(ineq.coefficients),
    }


def covariance_document(gc: GaussianCovariance) -> dict:
    return {**_header("covariance"), "modes": list(gc.modes), "V": [[float(v) for v in row] for row in gc.V]}


def to_document(obj, dims=None) -> dict:
    if isinstance(obj, Assemblage):
        return assemblage_document(obj)
    if isinstance(obj, MeasurementSet):
        return measurements_document(obj)
    if isinstance(obj, SteeringInequality):
        return inequality_document(obj)
    if isinstance(obj, GaussianCovariance):
        return covariance_document(obj)
    if isinstance(obj, np.ndarray) and obj.ndim == 2:
        if dims is None:
            raise ValidationError("a state document needs explicit dims")
        return state_document(obj, dims)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dims3(doc) -> tuple[int, int, int]:
    try:
        dims = doc["dims"]
        return int(dims["settings"]), int(dims["outcomes"]), int(dims["d"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"missing or malformed dims: {exc}") from exc


def from_document(doc: dict):
    """Inverse of :func:`to_document`; states come back as ``(rho, dims)``."""
    if not isinstance(doc, dict):
        raise ValidationError("document must be a JSON object")
    version = doc.get("version")
    if version is None:
        raise ValidationError("document has no version field")
    if version != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema version {version!r}")
    kind = doc.get("kind")
    try:
        if kind == "state":
            dims = tuple(int(d) for d in doc["dims"])
            rho = density_matrix(decode_matrix(doc["matrix"]))
            if int(np.prod(dims)) != rho.shape[0]:
                raise ValidationError(f"dims {dims} do not match a {rho.shape[0]}x{rho.shape[0]} matrix")
            return rho, dims
        if kind == "assemblage":
            m, q, d = _dims3(doc)
            return Assemblage(_decode_stack(doc["members"], m, q, d))
        if kind == "measurements":
            m, q, d = _dims3(doc)
            return MeasurementSet(_decode_stack(doc["effects"], m, q, d))
        if kind == "inequality":
            m, q, d = _dims3(doc)
            return SteeringInequality(enumerate_strategies(m, q), _decode_stack(doc["coefficients"], m, q, d))
        if kind == "covariance":
            return GaussianCovariance(tuple(doc["modes"]), np.asarray(doc["V"], dtype=float))
    except KeyError as exc:
        raise ValidationError(f"{kind} document is missing field {exc}") from exc
    raise ValidationError(f"unknown kind {kind!r}; expected one of {KINDS}")


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from exc


def read(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return from_document(loads(fh.read()))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc


def write(obj, path: str, dims=None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(to_document(obj, dims)))
