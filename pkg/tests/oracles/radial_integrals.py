"""High-precision oracle for the radial integrals and their log-weighted variants.

Evaluates  int_0^inf rho^alpha (1+rho^2)^(-m) drho  and
           int_0^inf rho^alpha (1+rho^2)^(-m) ln(1+rho^2) drho
by 50-digit mpmath quadrature, against the Beta / digamma closed forms

    I(m, alpha)    = (1/2) B((alpha+1)/2, m-(alpha+1)/2)
    Ilog(m, alpha) = (1/2) B(a, b) (psi(a+b) - psi(b)),  a=(alpha+1)/2, b=m-a

(the second obtained by differentiating the Beta integral in its second
parameter).  Run directly:

    python tests/oracles/radial_integrals.py
"""

import mpmath as mp

mp.mp.dps = 50


def I_quad(m, alpha):
    return mp.quad(lambda r: r**alpha / (1 + r * r) ** m, [0, 1, 10, mp.inf])


def I_closed(m, alpha):
    a = (alpha + 1) / mp.mpf(2)
    return mp.beta(a, m - a) / 2


def Ilog_quad(m, alpha):
    return mp.quad(lambda r: r**alpha / (1 + r * r) ** m * mp.log(1 + r * r), [0, 1, 10, mp.inf])


def Ilog_closed(m, alpha):
    a = (alpha + 1) / mp.mpf(2)
    b = m - a
    return mp.beta(a, b) * (mp.digamma(a + b) - mp.digamma(b)) / 2


def main():
    print("== plain integrals: quadrature vs closed form ==")
    for m, alpha in [(1, 0), (2, 1), (6, 7), (6, 5), (7, 8), (9, 10), (6.5, 4.2), (3.3, 1.1)]:
        q, c = I_quad(mp.mpf(m), mp.mpf(alpha)), I_closed(mp.mpf(m), mp.mpf(alpha))
        print(f"I({m},{alpha}) quad={mp.nstr(q, 25)} closed={mp.nstr(c, 25)} rel={mp.nstr(abs(q - c) / c, 3)}")

    print("\n== special values ==")
    print("I(1,0)  =", mp.nstr(I_closed(1, 0), 30), " (pi/2 =", mp.nstr(mp.pi / 2, 30), ")")
    print("I(2,1)  =", mp.nstr(I_closed(2, 1), 30))
    print("I(6,7)  =", mp.nstr(I_closed(6, 7), 30), " (1/40 expected)")
    print("I(6,5)  =", mp.nstr(I_closed(6, 5), 30), " (1/60 expected)")

    print("\n== log-weighted integrals: quadrature vs closed form ==")
    for m, alpha in [(6, 5), (7, 6), (4, 2.5), (9, 7)]:
        q, c = Ilog_quad(mp.mpf(m), mp.mpf(alpha)), Ilog_closed(mp.mpf(m), mp.mpf(alpha))
        print(f"Ilog({m},{alpha}) quad={mp.nstr(q, 25)} closed={mp.nstr(c, 25)} rel={mp.nstr(abs(q - c) / c, 3)}")

    # n = 7 boundary-profile integrals used by the energy coefficients:
    # the boundary trace (1+rho^2)^{-(n-1)} integrated over R^{n-1} reduces to
    # I(n-1, n-2); its ln U weighting to -(n-2)/2 * Ilog(n-1, n-2).
    print("\n== n=7 derived values ==")
    w6 = 2 * mp.pi**3  # area of S^5... computed below properly
    # area of unit sphere S^{k-1} in R^k: 2 pi^{k/2} / Gamma(k/2); here k = 6
    area6 = 2 * mp.pi**3 / mp.gamma(3)
    print("area(S^5 in R^6) =", mp.nstr(area6, 30), " (pi^3 =", mp.nstr(mp.pi**3, 30), ")")
    print("I(6,5)*area      =", mp.nstr(area6 * I_closed(6, 5), 30), " (= pi^3/60)")
    print("Ilog(6,5)        =", mp.nstr(Ilog_closed(6, 5), 30), " (47/3600 =", mp.nstr(mp.mpf(47) / 3600, 30), ")")
    bint = area6 * I_closed(6, 5)            # integral of U^{12/5} over R^6
    blog = -mp.mpf(5) / 2 * area6 * Ilog_closed(6, 5)   # integral of U^{12/5} ln U
    print("int U^{12/5}      =", mp.nstr(bint, 30))
    print("int U^{12/5} lnU  =", mp.nstr(blog, 30), " (-47 pi^3/1440 =", mp.nstr(-47 * mp.pi**3 / 1440, 30), ")")


if __name__ == "__main__":
    main()
