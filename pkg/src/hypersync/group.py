"""Compact-group algebra for SO(2) and SO(3).

Two layers live here.  The object layer (``GroupElement``, ``GroupTuple``,
``VertexPotential``) is what callers pass around.  The array layer works on
raw numpy stacks and is what the hot loops in the rest of the package use:

* SO2 stacks are arrays of angles with shape ``(...)``, normalized to (-pi, pi].
* SO3 stacks are arrays of rotation matrices with shape ``(..., 3, 3)``.

Distances are scaled so that every value lies in [0, 1].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DegenerateInputError, VariantMismatchError

TWO_PI = 2.0 * math.pi


class Variant(str, enum.Enum):
    SO2 = "SO2"
    SO3 = "SO3"

    @property
    def dim(self) -> int:
        return 2 if self is Variant.SO2 else 3

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, Variant):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown group variant {value!r}") from None


def _variant(v) -> Variant:
    return Variant.parse(v)


# ---------------------------------------------------------------------------
# array layer
# ---------------------------------------------------------------------------


def normalize_angle(theta):
    """Map angles to the half-open interval (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    out = theta - TWO_PI * np.ceil((theta - math.pi) / TWO_PI)
    if out.ndim == 0:
        return float(out)
    return out


def identity_array(variant, shape=()) -> np.ndarray:
    variant = _variant(variant)
    shape = tuple(np.atleast_1d(shape)) if shape != () else ()
    if variant is Variant.SO2:
        return np.zeros(shape)
    return np.broadcast_to(np.eye(3), shape + (3, 3)).copy()


def compose_array(variant, a, b) -> np.ndarray:
    if _variant(variant) is Variant.SO2:
        return normalize_angle(np.add(a, b))
    return np.matmul(a, b)


def inverse_array(variant, a) -> np.ndarray:
    if _variant(variant) is Variant.SO2:
        return normalize_angle(np.negative(a))
    return np.swapaxes(np.asarray(a), -1, -2)


def ratio_array(variant, a, b) -> np.ndarray:
    """Stack of products ``a_k * b_k^{-1}``."""
    if _variant(variant) is Variant.SO2:
        return normalize_angle(np.subtract(a, b))
    return np.matmul(a, np.swapaxes(np.asarray(b), -1, -2))


def rotation_angle_so3(r) -> np.ndarray:
    """Rotation angle in [0, pi] of each matrix in a stack.

    Uses ``atan2(|axial part|, (trace - 1) / 2)``, which agrees with the
    clamped ``arccos((trace - 1) / 2)`` on SO(3) but keeps full relative
    precision for angles near zero, where arccos loses half the digits.
    """
    r = np.asarray(r, dtype=float)
    cos = np.clip((np.trace(r, axis1=-2, axis2=-1) - 1.0) / 2.0, -1.0, 1.0)
    axial = np.stack(
        [
            r[..., 2, 1] - r[..., 1, 2],
            r[..., 0, 2] - r[..., 2, 0],
            r[..., 1, 0] - r[..., 0, 1],
        ],
        axis=-1,
    )
    sin = 0.5 * np.linalg.norm(axial, axis=-1)
    return np.arctan2(sin, cos)


def distance_array(variant, a, b) -> np.ndarray:
    """Bi-invariant distance scaled to [0, 1], broadcast over stacks."""
    if _variant(variant) is Variant.SO2:
        return np.abs(normalize_angle(np.subtract(a, b))) / math.pi
    return rotation_angle_so3(ratio_array(variant, a, b)) / math.pi


def distance_to_identity_array(variant, a) -> np.ndarray:
    if _variant(variant) is Variant.SO2:
        return np.abs(normalize_angle(a)) / math.pi
    return rotation_angle_so3(a) / math.pi


def tuple_distance_array(variant, a, b) -> np.ndarray:
    """Root-mean-square product metric over the component axis.

    For SO2 the component axis is the last axis; for SO3 it is the axis
    just before the two matrix axes.
    """
    d = distance_array(variant, a, b)
    return np.sqrt(np.mean(np.square(d), axis=-1))


def matrix_array(variant, a) -> np.ndarray:
    """Matrix form of a stack (SO2 angles become 2x2 rotations)."""
    if _variant(variant) is Variant.SO2:
        a = np.asarray(a, dtype=float)
        c, s = np.cos(a), np.sin(a)
        return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    return np.asarray(a, dtype=float)


def quaternion_to_matrix(q) -> np.ndarray:
    """Unit quaternions ``(w, x, y, z)`` to rotation matrices."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    return np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
            np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
            np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
        ],
        -2,
    )


def haar_array(rng: np.random.Generator, variant, shape=()) -> np.ndarray:
    """Haar-distributed stack of the given leading shape."""
    shape = tuple(np.atleast_1d(shape)) if shape != () else ()
    if _variant(variant) is Variant.SO2:
        return normalize_angle(rng.uniform(-math.pi, math.pi, size=shape))
    return quaternion_to_matrix(rng.standard_normal(shape + (4,)))


def project_matrix_array(variant, m) -> np.ndarray:
    """Nearest special-orthogonal matrix (Frobenius) for each block in a stack.

    Returns angles for SO2 and matrices for SO3.
    """
    variant = _variant(variant)
    m = np.asarray(m, dtype=float)
    d = variant.dim
    if m.shape[-2:] != (d, d):
        raise ValueError(f"expected {d}x{d} blocks for {variant.value}, got {m.shape[-2:]}")
    u, sv, vt = np.linalg.svd(m)
    if np.any(sv[..., -1] < 1e-12):
        raise DegenerateInputError("matrix is rank deficient; cannot project onto SO(d)")
    det = np.linalg.det(np.matmul(u, vt))
    u = u.copy()
    u[..., :, -1] *= np.where(det < 0, -1.0, 1.0)[..., None]
    r = np.matmul(u, vt)
    if variant is Variant.SO2:
        return normalize_angle(np.arctan2(r[..., 1, 0], r[..., 0, 0]))
    return r


def perturb_array(rng: np.random.Generator, variant, a, sigma: float) -> np.ndarray:
    """Add ``sigma`` times i.i.d. standard normal matrices and project back."""
    variant = _variant(variant)
    if sigma == 0:
        return np.array(a, copy=True)
    mats = matrix_array(variant, a)
    noise = rng.standard_normal(mats.shape)
    return project_matrix_array(variant, mats + sigma * noise)


def from_matrix_array(variant, m) -> np.ndarray:
    """Reinterpret exact rotation matrices without projecting."""
    if _variant(variant) is Variant.SO2:
        m = np.asarray(m, dtype=float)
        return normalize_angle(np.arctan2(m[..., 1, 0], m[..., 0, 0]))
    return np.asarray(m, dtype=float)


# ---------------------------------------------------------------------------
# object layer
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroupElement:
    """An element of SO(2) (stored as an angle) or SO(3) (stored as a matrix)."""

    variant: Variant
    value: object

    def __post_init__(self):
        variant = _variant(self.variant)
        object.__setattr__(self, "variant", variant)
        if variant is Variant.SO2:
            object.__setattr__(self, "value", normalize_angle(float(self.value)))
        else:
            r = np.array(self.value, dtype=float)
            if r.shape != (3, 3):
                raise ValueError("SO3 element needs a 3x3 matrix")
            r.setflags(write=False)
            object.__setattr__(self, "value", r)

    @classmethod
    def identity(cls, variant) -> "GroupElement":
        variant = _variant(variant)
        return cls(variant, 0.0 if variant is Variant.SO2 else np.eye(3))

    @classmethod
    def from_angle(cls, theta: float) -> "GroupElement":
        return cls(Variant.SO2, theta)

    @classmethod
    def from_matrix(cls, m) -> "GroupElement":
        m = np.asarray(m, dtype=float)
        if m.shape == (2, 2):
            return cls(Variant.SO2, math.atan2(m[1, 0], m[0, 0]))
        return cls(Variant.SO3, m)

    @property
    def matrix(self) -> np.ndarray:
        return matrix_array(self.variant, self.value)

    def is_valid(self, tol: float = 1e-10) -> bool:
        if self.variant is Variant.SO2:
            return -math.pi < self.value <= math.pi
        r = self.value
        ortho = np.max(np.abs(r.T @ r - np.eye(3)))
        return bool(ortho <= tol and abs(np.linalg.det(r) - 1.0) <= tol)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def __repr__(self):
        if self.variant is Variant.SO2:
            return f"GroupElement(SO2, {self.value!r})"
        return f"GroupElement(SO3, {self.value.tolist()!r})"


def _check_same(a: GroupElement, b: GroupElement) -> Variant:
    if a.variant is not b.variant:
        raise VariantMismatchError(f"cannot combine {a.variant.value} with {b.variant.value}")
    return a.variant


def identity(variant) -> GroupElement:
    return GroupElement.identity(variant)


def compose(a: GroupElement, b: GroupElement) -> GroupElement:
    variant = _check_same(a, b)
    return GroupElement(variant, compose_array(variant, a.value, b.value))


def inverse(a: GroupElement) -> GroupElement:
    return GroupElement(a.variant, inverse_array(a.variant, a.value))


def distance(a: GroupElement, b: GroupElement) -> float:
    variant = _check_same(a, b)
    return float(distance_array(variant, a.value, b.value))


def haar_sample(rng: np.random.Generator, variant) -> GroupElement:
    variant = _variant(variant)
    return GroupElement(variant, haar_array(rng, variant))


def project_to_group(m, variant=None) -> GroupElement:
    """Closest element of SO(d) to a d x d matrix in Frobenius norm."""
    m = np.asarray(m, dtype=float)
    if variant is None:
        variant = Variant.SO2 if m.shape == (2, 2) else Variant.SO3
    variant = _variant(variant)
    return GroupElement(variant, project_matrix_array(variant, m))


def perturb_gaussian(g: GroupElement, sigma: float, rng: np.random.Generator) -> GroupElement:
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    return GroupElement(g.variant, perturb_array(rng, g.variant, g.value, sigma))


@dataclass(frozen=True, eq=False)
class GroupTuple:
    """Ordered tuple of group elements of one variant (an element of G^k)."""

    elements: tuple

    def __post_init__(self):
        elems = tuple(self.elements)
        if not elems:
            raise ValueError("a group tuple needs at least one component")
        first = elems[0].variant
        for e in elems[1:]:
            if e.variant is not first:
                raise VariantMismatchError("all tuple components must share a variant")
        object.__setattr__(self, "elements", elems)

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def variant(self) -> Variant:
        return self.elements[0].variant

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, i) -> GroupElement:
        return self.elements[i]

    def __iter__(self):
        return iter(self.elements)

    def to_array(self) -> np.ndarray:
        return np.stack([np.asarray(e.value, dtype=float) for e in self.elements])

    @classmethod
    def from_array(cls, variant, arr) -> "GroupTuple":
        variant = _variant(variant)
        return cls(tuple(GroupElement(variant, a) for a in np.asarray(arr)))

    @classmethod
    def identity(cls, variant, order: int) -> "GroupTuple":
        return cls(tuple(GroupElement.identity(variant) for _ in range(order)))

    def __mul__(self, other: "GroupTuple") -> "GroupTuple":
        if self.order != other.order:
            raise VariantMismatchError("tuple orders differ")
        return GroupTuple(tuple(compose(a, b) for a, b in zip(self, other)))


def tuple_distance(a: GroupTuple, b: GroupTuple) -> float:
    """``sqrt(sum_i d(a_i, b_i)^2 / k)`` for tuples of order k."""
    if a.order != b.order:
        raise VariantMismatchError(f"tuple orders differ: {a.order} vs {b.order}")
    total = sum(distance(x, y) ** 2 for x, y in zip(a, b))
    return math.sqrt(total / a.order)


@dataclass(eq=False)
class VertexPotential:
    """Assignment of one group element per vertex, stored as an array stack."""

    variant: Variant
    values: np.ndarray

    def __post_init__(self):
        self.variant = _variant(self.variant)
        self.values = np.asarray(self.values, dtype=float)

    @classmethod
    def from_elements(cls, elements: Sequence[GroupElement]) -> "VertexPotential":
        elements = list(elements)
        variant = elements[0].variant
        for e in elements:
            if e.variant is not variant:
                raise VariantMismatchError("all vertex elements must share a variant")
        return cls(variant, np.stack([np.asarray(e.value, dtype=float) for e in elements]))

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, i) -> GroupElement:
        return GroupElement(self.variant, self.values[i])

    def __iter__(self) -> Iterable[GroupElement]:
        return (self[i] for i in range(len(self)))

    @property
    def elements(self) -> list:
        return list(self)

    def right_multiply(self, g: GroupElement) -> "VertexPotential":
        if g.variant is not self.variant:
            raise VariantMismatchError("variant mismatch")
        return VertexPotential(self.variant, compose_array(self.variant, self.values, g.value))

    def matrices(self) -> np.ndarray:
        return matrix_array(self.variant, self.values)
