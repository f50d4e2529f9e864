"""Shared geometric primitives.

Points of the closed upper half-space R^{n-1} x [0, inf) in boundary-adapted
coordinates (z tangential, t the normal distance), and trace-free symmetric
forms on the boundary tangent space. Everything downstream (bubble profiles,
the corrector reduction, the curvature functional) consumes these two types.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# validation tolerance for symmetry / trace, relative to the entry scale
_FORM_TOL = 1e-12


@dataclass
class HalfSpacePoint:
    """A point y = (z, t) with z in R^{n-1} and normal coordinate t >= 0."""

    z: np.ndarray
    t: float

    def __post_init__(self):
        self.z = np.atleast_1d(np.asarray(self.z, dtype=float))
        self.t = float(self.t)
        if self.z.ndim != 1:
            raise ValueError("tangential coordinate must be a flat vector")
        if self.t < 0:
            raise ValueError(f"normal coordinate must be >= 0, got {self.t}")

    @property
    def n(self) -> int:
        return self.z.size + 1

    @property
    def radius(self) -> float:
        """Euclidean distance |y| from the boundary origin."""
        return float(np.sqrt(self.z @ self.z + self.t * self.t))

    def scaled(self, factor: float) -> "HalfSpacePoint":
        return HalfSpacePoint(self.z * factor, self.t * factor)


@dataclass
class TracelessSymmetricForm:
    """A symmetric trace-free bilinear form on R^{n-1}.

    Models the trace-free second fundamental form of the boundary at a point;
    the squared Frobenius norm is the quantity the reduced energy sees.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("form entries must be a square matrix")
        scale = max(float(np.max(np.abs(a))), 1.0)
        if np.max(np.abs(a - a.T)) > _FORM_TOL * scale:
            raise ValueError("form must be symmetric")
        if abs(float(np.trace(a))) > _FORM_TOL * a.shape[0] * scale:
            raise ValueError("form must be trace-free")
        self.entries = 0.5 * (a + a.T)

    @property
    def dim(self) -> int:
        """Boundary dimension n-1."""
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[0] + 1

    @property
    def norm_sq(self) -> float:
        return float(np.sum(self.entries * self.entries))

    def quadratic(self, z: np.ndarray) -> np.ndarray:
        """Evaluate z^T h z; z may be a vector or an array of row vectors."""
        z = np.asarray(z, dtype=float)
        return np.einsum("...i,ij,...j->...", z, self.entries, z)

    def scaled(self, c: float) -> "TracelessSymmetricForm":
        return TracelessSymmetricForm(c * self.entries)

    @classmethod
    def from_diagonal(cls, n: int, diag) -> "TracelessSymmetricForm":
        """Build diag(d_1, ..., d_k, 0, ..., 0) on R^{n-1}; entries must sum to 0."""
        d = np.asarray(diag, dtype=float)
        if d.size > n - 1:
            raise ValueError("too many diagonal entries for dimension")
        full = np.zeros(n - 1)
        full[: d.size] = d
        return cls(np.diag(full))

    @classmethod
    def zero(cls, n: int) -> "TracelessSymmetricForm":
        return cls(np.zeros((n - 1, n - 1)))


def random_traceless(n: int, rng: np.random.Generator) -> TracelessSymmetricForm:
    """A generic trace-free symmetric form, for sampling-based checks."""
    m = rng.standard_normal((n - 1, n - 1))
    s = 0.5 * (m + m.T)
    s -= np.eye(n - 1) * (np.trace(s) / (n - 1))
    return TracelessSymmetricForm(s)
