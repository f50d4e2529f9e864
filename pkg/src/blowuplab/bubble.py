"""The half-space bubble, its scalings, kernel functions, and cut-off.

U(z,t) = ((1+t)^2 + |z|^2)^{-(n-2)/2} is harmonic on the open half-space and
satisfies the nonlinear boundary condition dU/dt = -(n-2) U^{n/(n-2)} on
t = 0. Its concentration rescalings U_delta and the kernel of the linearized
boundary condition (tangential derivatives plus the scaling generator) are
evaluated in closed form; all derivatives here are analytic expressions,
finite differences are reserved for test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import HalfSpacePoint


def _base(n: int, z: np.ndarray, t) -> np.ndarray:
    """A = (1+t)^2 + |z|^2, broadcasting over trailing shapes."""
    z = np.asarray(z, dtype=float)
    return (1.0 + np.asarray(t, dtype=float)) ** 2 + np.sum(z * z, axis=-1)


def U(n: int, p: HalfSpacePoint) -> float:
    """Bubble value at a half-space point."""
    return float(_base(n, p.z, p.t) ** (-(n - 2) / 2.0))


def U_gradient(n: int, p: HalfSpacePoint) -> np.ndarray:
    """Gradient (d/dz_1, ..., d/dz_{n-1}, d/dt), length n."""
    A = _base(n, p.z, p.t)
    g = np.empty(n)
    g[:-1] = -(n - 2) * p.z * A ** (-n / 2.0)
    g[-1] = -(n - 2) * (1.0 + p.t) * A ** (-n / 2.0)
    return g


def U_hessian(n: int, p: HalfSpacePoint) -> np.ndarray:
    """Second derivatives in the same coordinate order as the gradient."""
    A = _base(n, p.z, p.t)
    y = np.append(p.z, 1.0 + p.t)
    H = n * (n - 2) * np.outer(y, y) * A ** (-(n + 2) / 2.0)
    H -= (n - 2) * A ** (-n / 2.0) * np.eye(n)
    return H


def U_scaled(n: int, delta: float, p: HalfSpacePoint) -> float:
    """Concentration rescaling delta^{-(n-2)/2} U(y/delta)."""
    if delta <= 0:
        raise ValueError(f"concentration scale must be > 0, got {delta}")
    return delta ** (-(n - 2) / 2.0) * U(n, p.scaled(1.0 / delta))


def kernel_j(n: int, b: int, p: HalfSpacePoint) -> float:
    """Kernel functions of the linearized boundary condition.

    b = 1..n-1 are the tangential derivatives of U; b = n is the generator of
    the concentration family, (n-2)/2 U + y . grad U. Each is harmonic and
    satisfies d(phi)/dt + n U^{2/(n-2)} phi = 0 on t = 0.
    """
    if not 1 <= b <= n:
        raise ValueError(f"kernel index must lie in 1..{n}, got {b}")
    g = U_gradient(n, p)
    if b < n:
        return float(g[b - 1])
    y = np.append(p.z, p.t)
    return float((n - 2) / 2.0 * U(n, p) + y @ g)


@dataclass(frozen=True)
class Bubble:
    """The bubble at a fixed concentration scale."""

    n: int
    delta: float = 1.0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"dimension must be >= 3, got {self.n}")
        if self.delta <= 0:
            raise ValueError(f"concentration scale must be > 0, got {self.delta}")

    def value(self, p: HalfSpacePoint) -> float:
        return U_scaled(self.n, self.delta, p)

    @property
    def sup(self) -> float:
        """Maximum over the half-space, attained at the boundary origin."""
        return self.delta ** (-(self.n - 2) / 2.0)


@dataclass(frozen=True)
class CutOff:
    """Radial C^2 cut-off: 1 on [0, R/2], 0 outside [0, R].

    The transition is a quintic smoothstep, so the first two derivatives
    vanish at both junctions and are available in closed form.
    """

    R: float = 1.0

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError(f"support radius must be > 0, got {self.R}")

    def _u(self, s):
        return (np.asarray(s, dtype=float) - self.R / 2.0) / (self.R / 2.0)

    def value(self, s):
        s = np.asarray(s, dtype=float)
        u = np.clip(self._u(s), 0.0, 1.0)
        return 1.0 - u**3 * (6.0 * u * u - 15.0 * u + 10.0)

    def d1(self, s):
        s = np.asarray(s, dtype=float)
        u = self._u(s)
        inside = (u > 0.0) & (u < 1.0)
        u = np.where(inside, u, 0.0)
        out = -(30.0 * u**4 - 60.0 * u**3 + 30.0 * u * u) * (2.0 / self.R)
        return np.where(inside, out, 0.0)

    def d2(self, s):
        s = np.asarray(s, dtype=float)
        u = self._u(s)
        inside = (u > 0.0) & (u < 1.0)
        u = np.where(inside, u, 0.0)
        out = -(120.0 * u**3 - 180.0 * u * u + 60.0 * u) * (2.0 / self.R) ** 2
        return np.where(inside, out, 0.0)


def transplant_W(n: int, delta: float, cutoff: CutOff, p: HalfSpacePoint) -> float:
    """Cut-off bubble W = U_delta * chi(|y|), the transplanted profile."""
    if delta > cutoff.R / 10.0:
        raise ValueError(
            f"concentration scale {delta} too large for cut-off radius "
            f"{cutoff.R}; need delta <= R/10"
        )
    chi = float(cutoff.value(p.radius))
    if chi == 0.0:
        return 0.0
    return chi * U_scaled(n, delta, p)
