"""Exact exponent bookkeeping for the supercritical boundary problem.

The trace exponent s_eps = 2(n-1)/(n-2) + n*eps and the auxiliary regularity
pair (q, r) are kept as exact rationals so that the two defining identities

    (n-1) q / (n - 2q) = s_eps
    (n-1) q / (n - q) + r = (2(n-1) + n(n-2) eps) / (n + (n-2) eps)

can be asserted with no floating-point slack. eps = 0 is the critical case
(r = 0), admitted and flagged rather than rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

RationalLike = Union[int, str, Fraction]


def _as_fraction(x: RationalLike, name: str) -> Fraction:
    if isinstance(x, float):
        raise TypeError(
            f"{name} must be an exact rational (int, Fraction, or 'p/q' string), "
            f"not float; write Fraction(1, 100) instead of 0.01"
        )
    try:
        return Fraction(x)
    except (TypeError, ValueError) as exc:
        raise TypeError(f"cannot interpret {name}={x!r} as a rational") from exc


@dataclass(frozen=True)
class SobolevExponents:
    n: int
    eps: Fraction
    s_eps: Fraction
    q_nittka: Fraction
    r_nittka: Fraction

    def identity_residuals(self) -> tuple[Fraction, Fraction]:
        """Exact residuals of the two defining identities (both must be 0)."""
        n, q, r = self.n, self.q_nittka, self.r_nittka
        first = Fraction(n - 1) * q / (n - 2 * q) - self.s_eps
        rhs = Fraction(2 * (n - 1) + n * (n - 2) * self.eps, 1) / (
            n + (n - 2) * self.eps
        )
        second = Fraction(n - 1) * q / (n - q) + r - rhs
        return first, second


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    lower_margin: Fraction      # q - 2n/(n+2), >= 0 required
    upper_margin: Fraction      # n/2 - q, > 0 required
    r_margin: Fraction          # r itself, > 0 required (0 allowed at eps = 0)
    critical_case: bool         # eps = 0, r sits exactly on the boundary

    def __str__(self) -> str:
        lines = [
            f"admissible: {self.admissible}",
            f"  q - 2n/(n+2) = {self.lower_margin} (need >= 0)",
            f"  n/2 - q      = {self.upper_margin} (need > 0)",
            f"  r            = {self.r_margin} (need > 0"
            + (", boundary case at eps = 0)" if self.critical_case else ")"),
        ]
        return "\n".join(lines)


def exponents_for(n: int, eps: RationalLike) -> SobolevExponents:
    """Closed-form (s_eps, q, r) in exact rational arithmetic.

    q = (2n + n^2 (n-2)/(n-1) eps) / (n+2 + 2n (n-2)/(n-1) eps) and r is the
    gap left by q in the second identity above.
    """
    if not isinstance(n, int) or n < 3:
        raise ValueError(f"dimension must be an integer >= 3, got {n!r}")
    e = _as_fraction(eps, "eps")
    if e < 0:
        raise ValueError(f"eps must be >= 0, got {e}")

    s = Fraction(2 * (n - 1), n - 2) + n * e
    kappa = Fraction(n - 2, n - 1) * e
    q = (2 * n + n * n * kappa) / (n + 2 + 2 * n * kappa)
    if 2 * q >= n:
        # unreachable for q as defined (the gap n/2 - q is a positive rational
        # for every eps >= 0), kept as a guard on the regularity hypothesis
        raise ValueError("supercriticality out of admissible range")
    rhs = Fraction(2 * (n - 1) + n * (n - 2) * e, 1) / (n + (n - 2) * e)
    r = rhs - Fraction(n - 1) * q / (n - q)
    return SobolevExponents(n=n, eps=e, s_eps=s, q_nittka=q, r_nittka=r)


def check_admissible(e: SobolevExponents) -> AdmissibilityReport:
    """Margins of 2n/(n+2) <= q < n/2 and r > 0 (r = 0 tolerated at eps = 0)."""
    n, q, r = e.n, e.q_nittka, e.r_nittka
    lower = q - Fraction(2 * n, n + 2)
    upper = Fraction(n, 2) - q
    critical = e.eps == 0
    ok = lower >= 0 and upper > 0 and (r > 0 or (critical and r == 0))
    return AdmissibilityReport(
        admissible=ok,
        lower_margin=lower,
        upper_margin=upper,
        r_margin=r,
        critical_case=critical,
    )
