"""Oracle for closed-form derivatives of the half-space bubble.

U(z,t) = ((1+t)^2 + |z|^2)^{-(n-2)/2} on R^{n-1} x [0, inf).

Checks symbolically (n = 7, generic point) and prints the expected formulas:

  dU/dz_i    = -(n-2) z_i A^{-n/2}
  dU/dt      = -(n-2)(1+t) A^{-n/2}
  d2U/dzidzj = -(n-2) delta_ij A^{-n/2} + n(n-2) z_i z_j A^{-(n+2)/2}
  d2U/dzidt  = n(n-2) z_i (1+t) A^{-(n+2)/2}
  d2U/dt2    = -(n-2) A^{-n/2} + n(n-2)(1+t)^2 A^{-(n+2)/2}

plus harmonicity Delta U = 0 and the nonlinear boundary condition
dU/dt|_{t=0} = -(n-2) U^{n/(n-2)}|_{t=0}, and the kernel elements

  j_i = dU/dy_i (i < n),   j_n = (n-2)/2 U + sum_b y_b dU/dy_b,

each satisfying the linearized Robin condition
d(phi)/dt + n U^{2/(n-2)} phi = 0 on t = 0, with j_n(0,0) = (n-2)/2.

Run directly:  python tests/oracles/bubble_derivatives.py
"""

import sympy as sp


def main():
    nn = 7
    zs = sp.symbols(f"z1:{nn}", real=True)
    t = sp.Symbol("t", nonnegative=True)
    A = (1 + t) ** 2 + sum(z**2 for z in zs)
    U = A ** (-sp.Rational(nn - 2, 2))

    checks = {}
    checks["dU/dz_1"] = sp.diff(U, zs[0]) - (-(nn - 2) * zs[0] * A ** (-sp.Rational(nn, 2)))
    checks["dU/dt"] = sp.diff(U, t) - (-(nn - 2) * (1 + t) * A ** (-sp.Rational(nn, 2)))
    checks["d2U/dz1dz1"] = sp.diff(U, zs[0], 2) - (
        -(nn - 2) * A ** (-sp.Rational(nn, 2))
        + nn * (nn - 2) * zs[0] ** 2 * A ** (-sp.Rational(nn + 2, 2)))
    checks["d2U/dz1dz2"] = sp.diff(U, zs[0], zs[1]) - (
        nn * (nn - 2) * zs[0] * zs[1] * A ** (-sp.Rational(nn + 2, 2)))
    checks["d2U/dz1dt"] = sp.diff(U, zs[0], t) - (
        nn * (nn - 2) * zs[0] * (1 + t) * A ** (-sp.Rational(nn + 2, 2)))
    checks["d2U/dt2"] = sp.diff(U, t, 2) - (
        -(nn - 2) * A ** (-sp.Rational(nn, 2))
        + nn * (nn - 2) * (1 + t) ** 2 * A ** (-sp.Rational(nn + 2, 2)))
    checks["Delta U"] = sum(sp.diff(U, z, 2) for z in zs) + sp.diff(U, t, 2)
    checks["Robin(U)"] = (sp.diff(U, t) + (nn - 2) * U ** sp.Rational(nn, nn - 2)).subs(t, 0)

    for name, expr in checks.items():
        print(f"{name}: {sp.simplify(expr)}")

    # kernel elements and their linearized boundary condition
    lin_bc = lambda phi: sp.simplify(
        (sp.diff(phi, t) + nn * U ** sp.Rational(2, nn - 2) * phi).subs(t, 0))
    j1 = sp.diff(U, zs[0])
    print(f"lin Robin(j_1): {lin_bc(j1)}")

    jn = sp.Rational(nn - 2, 2) * U + sum(z * sp.diff(U, z) for z in zs) + t * sp.diff(U, t)
    print(f"lin Robin(j_n): {lin_bc(jn)}")
    print(f"j_n(0,0) = {jn.subs({**{z: 0 for z in zs}, t: 0})}  "
          f"(expect {sp.Rational(nn - 2, 2)})")

    # harmonicity of the kernel elements (derivatives of harmonic + scaling field)
    print(f"Delta j_1: {sp.simplify(sum(sp.diff(j1, z, 2) for z in zs) + sp.diff(j1, t, 2))}")
    print(f"Delta j_n: {sp.simplify(sum(sp.diff(jn, z, 2) for z in zs) + sp.diff(jn, t, 2))}")


if __name__ == "__main__":
    main()
