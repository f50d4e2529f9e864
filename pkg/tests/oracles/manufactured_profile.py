"""Oracle for the exact auxiliary profile used to validate the 2-D solver.

The corrector ansatz v = P(z) w(r,t) with P a traceless quadratic form reduces
the half-space problem to

    -[w_rr + ((n+2)/r) w_r + w_tt] = S(r,t),
    S(r,t) = 2 n (n-2) t ((1+t)^2 + r^2)^{-(n+2)/2},

with Robin condition w_t(r,0) + n w(r,0)/(1+r^2) = 0 on t = 0.

Claim checked here symbolically:

    w_part(r,t) = (n-2)/2 * (t - 1) * ((1+t)^2 + r^2)^{-n/2}

solves the interior equation exactly, and its Robin residual on t = 0 equals

    (n-2)/2 * (1 + r^2)^{-n/2}.

So w_part is NOT the corrector profile (wrong boundary condition), but solving
the same PDE with Robin right-hand side (n-2)/2 (1+r^2)^{-n/2} must reproduce
w_part exactly, which pins down solver correctness including the boundary row.

Also verifies the reduction itself in Cartesian coordinates for n = 7:
-Delta[P(z) w(|z|,t)] = P(z) S(|z|,t) for the full corrector source, i.e.
2 h_ij t d2U/dz_i dz_j = P(z) S with P = h_ij z_i z_j.

Run directly:  python tests/oracles/manufactured_profile.py
"""

import sympy as sp


def main():
    n = sp.Symbol("n", positive=True, integer=True)
    r, t = sp.symbols("r t", positive=True)
    A = (1 + t) ** 2 + r**2

    w_part = sp.Rational(1, 2) * (n - 2) * (t - 1) * A ** (-n / 2)
    S = 2 * n * (n - 2) * t * A ** (-(n + 2) / 2)

    L = -(sp.diff(w_part, r, 2) + (n + 2) / r * sp.diff(w_part, r)
          + sp.diff(w_part, t, 2))
    interior = sp.simplify(L - S)
    print(f"interior residual of w_part: {interior}")

    robin = sp.diff(w_part, t).subs(t, 0) + n / (1 + r**2) * w_part.subs(t, 0)
    robin_target = sp.Rational(1, 2) * (n - 2) * (1 + r**2) ** (-n / 2)
    print(f"Robin residual minus (n-2)/2 (1+r^2)^(-n/2): "
          f"{sp.simplify(robin - robin_target)}")

    # Cartesian check of the symmetry reduction itself, n = 7
    nn = 7
    zs = sp.symbols(f"z1:{nn}", real=True)
    tt = sp.Symbol("t", positive=True)
    Az = (1 + tt) ** 2 + sum(z**2 for z in zs)
    U = Az ** (-sp.Rational(nn - 2, 2))
    h = sp.zeros(nn - 1, nn - 1)
    h[0, 0], h[1, 1] = 1, -1
    P = sum(h[i, j] * zs[i] * zs[j] for i in range(nn - 1) for j in range(nn - 1))
    source_cart = 2 * tt * sum(h[i, j] * sp.diff(U, zs[i], zs[j])
                               for i in range(nn - 1) for j in range(nn - 1))
    rr = sp.sqrt(sum(z**2 for z in zs))
    S7 = 2 * nn * (nn - 2) * tt * ((1 + tt) ** 2 + rr**2) ** (-sp.Rational(nn + 2, 2))
    print(f"cartesian source minus P*S: {sp.simplify(source_cart - P * S7)}")

    # and that Delta[P w] = P * (w_rr + ((n+2)/r) w_r + w_tt) for a concrete
    # w(r,t), evaluated at a random rational point
    w_concrete = sp.exp(-rr) * sp.cos(tt) * rr**2
    expr = P * w_concrete
    lap = sum(sp.diff(expr, z, 2) for z in zs) + sp.diff(expr, tt, 2)
    point = {zs[0]: sp.Rational(3, 10), zs[1]: sp.Rational(-1, 5),
             zs[2]: sp.Rational(1, 2), zs[3]: sp.Rational(2, 7),
             zs[4]: sp.Rational(-3, 11), zs[5]: sp.Rational(1, 13),
             tt: sp.Rational(4, 9)}
    lap_val = lap.subs(point).evalf(30)

    rsym, tsym = sp.symbols("rs ts", positive=True)
    wc = sp.exp(-rsym) * sp.cos(tsym) * rsym**2
    red = (sp.diff(wc, rsym, 2) + (nn + 2) / rsym * sp.diff(wc, rsym)
           + sp.diff(wc, tsym, 2))
    rval = sp.sqrt(sum(v**2 for k, v in point.items() if k != tt))
    red_val = (P.subs(point) * red.subs({rsym: rval, tsym: point[tt]})).evalf(30)
    print(f"Laplacian reduction check (numeric): {float(abs(lap_val - red_val)):.3e}")


if __name__ == "__main__":
    main()
