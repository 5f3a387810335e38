"""Check that the four second-order PDEs reduce to one ODE in the cross-ratio.

Run with ``python docs/derive_reduced_ode.py``; needs sympy.  For
Z = (x2 - x1)^-1 (x4 - x3)^-1 G(z) each PDE, written as a linear form in
(G, G', G''), is checked to be a multiple of

    3 z (z - 1)^2 G'' + 2 (z^2 - 1) G' - 2 z G

at exact rational points.
"""
import sympy as sp

X = sp.symbols("x1:5")
g0, g1, g2 = sp.symbols("g0 g1 g2")
kappa, h = sp.Integer(3), sp.Rational(1, 2)
P = 1 / ((X[1] - X[0]) * (X[3] - X[2]))
z = (X[1] - X[0]) * (X[3] - X[2]) / ((X[2] - X[0]) * (X[3] - X[1]))
u = sp.Symbol("z")
reduced = 3 * u * (u - 1) ** 2 * g2 + 2 * (u**2 - 1) * g1 - 2 * u * g0


def d1(i):
    return sp.diff(P, X[i]) * g0 + P * sp.diff(z, X[i]) * g1


def d2(i):
    return (sp.diff(P, X[i], 2) * g0 + 2 * sp.diff(P, X[i]) * sp.diff(z, X[i]) * g1
            + P * sp.diff(z, X[i], 2) * g1 + P * sp.diff(z, X[i]) ** 2 * g2)


def pde(j):
    e = kappa / 2 * d2(j)
    for i in range(4):
        if i != j:
            e += 2 / (X[i] - X[j]) * d1(i) - 2 * h / (X[i] - X[j]) ** 2 * P * g0
    return e


points = [
    (0, sp.Rational(2, 7), sp.Rational(5, 3), sp.Rational(19, 4)),
    (-1, sp.Rational(1, 3), 2, 11),
]
for pt in points:
    sub = dict(zip(X, pt))
    zval = z.subs(sub)
    for j in range(4):
        e = pde(j)
        ratios = {sp.simplify(sp.diff(e, g).subs(sub) / sp.diff(reduced, g).subs(u, zval)) for g in (g0, g1, g2)}
        assert len(ratios) == 1, (pt, j, ratios)
        print(f"x = {pt}, equation {j + 1}: multiple {ratios.pop()} of the reduced ODE")
