# Numerical check of the sign and scale linking the k = N-1 displays to the
# harmonic balance: display_1 = -c Im E, display_2 = c Re E, c = 2N / L^((N-2)/2).
import random

import sympy as sp

x, y = sp.symbols("x y", real=True)
random.seed(1)


def rf():
    return sum(sp.Rational(random.randint(-9, 9), 10) * t for t in [1, sp.sin(x), sp.cos(y), sp.sin(x + 2 * y)])


for N in [2, 3, 4]:
    L = 2 + sp.cos(x) / 3 + sp.sin(y) / 4
    f = {k: rf() for k in range(N - 1)}
    g = {k: rf() for k in range(1, N - 1)}
    psi = rf()
    f[N - 1] = sp.diff(psi, y)
    g[N - 1] = -sp.diff(psi, x)
    g[0] = 0
    f[N] = 1
    g[N] = 0

    def a(j):
        return L ** sp.Rational(j, 2) * (f[j] + sp.I * g[j])

    al = sp.diff(L, y) / (2 * L)
    be = sp.diff(L, x) / (2 * L)
    Om = (sp.diff(g[N - 1], x) - sp.diff(f[N - 1], y)) / (2 * N)
    k = N - 1
    am, ap, ak = a(k - 1), a(k + 1), a(k)
    E = (
        al * (sp.I * (k - 1) * am + sp.I * (k + 1) * ap) / 2
        - be * (sp.I * (k - 1) * am - sp.I * (k + 1) * ap) / (2 * sp.I)
        + (sp.diff(am, x) + sp.diff(ap, x)) / 2
        + (sp.diff(am, y) - sp.diff(ap, y)) / (2 * sp.I)
        - sp.I * k * Om * ak / sp.sqrt(L)
    )
    F, G, F2, G2 = f[N - 1], g[N - 1], f[N - 2], g[N - 2]
    d1 = (N - 1) * F * (sp.diff(G, x) - sp.diff(F, y)) + N * (sp.diff(F2, y) - sp.diff(G2, x) - N * sp.diff(L, y))
    d2 = (N - 1) * G * (sp.diff(G, x) - sp.diff(F, y)) + N * (sp.diff(F2, x) + sp.diff(G2, y) + N * sp.diff(L, x))
    for pt in [(0.3, 0.7), (1.1, -0.4)]:
        s = {x: pt[0], y: pt[1]}
        e = complex(E.subs(s).evalf(30))
        c = 2 * N / float(L.subs(s)) ** ((N - 2) / 2)
        print(N, float(d1.subs(s).evalf(30)) / (c * e.imag), float(d2.subs(s).evalf(30)) / (c * e.real))

# Signs relating the conservation laws to the displays, symbolically.
n = sp.Symbol("n")
Fs, Gs, F2s, G2s, Ls = [sp.Function(s)(x, y) for s in ["f", "g", "f2", "g2", "L"]]
R = (n - 1) * Fs * Gs - n * G2s
Gf = (n - 1) / 2 * (Gs**2 - Fs**2) - n**2 * Ls + n * F2s
Hf = (n - 1) / 2 * (Fs**2 - Gs**2) - n**2 * Ls - n * F2s
div = sp.diff(Fs, x) + sp.diff(Gs, y)
law1 = sp.diff(R, x) + sp.diff(Gf, y)
law2 = sp.diff(R, y) + sp.diff(Hf, x)
D1 = (n - 1) * Fs * (sp.diff(Gs, x) - sp.diff(Fs, y)) + n * (sp.diff(F2s, y) - sp.diff(G2s, x) - n * sp.diff(Ls, y))
D2 = (n - 1) * Gs * (sp.diff(Gs, x) - sp.diff(Fs, y)) + n * (sp.diff(F2s, x) + sp.diff(G2s, y) + n * sp.diff(Ls, x))
for s1 in [1, -1]:
    if sp.simplify(law1 - s1 * D1 - (n - 1) * Gs * div) == 0:
        print("s1 =", s1)
for s2 in [1, -1]:
    if sp.simplify(law2 - s2 * D2 - (n - 1) * Fs * div) == 0:
        print("s2 =", s2)
