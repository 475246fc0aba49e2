"""The admissibility hypotheses (i)-(viii) for the model class.

Every rejection anywhere in the package names one of these, so the text
lives in one place.  The equation under study is

    -div( B'(H(grad u)) grad H(grad u) ) = f(u)

with H a norm as in finsler.py and B a scalar profile as in material.py;
barriers additionally use an absorption term g.
"""

HYPOTHESES = {
    "i": "(i) H is an even 1-homogeneous norm on R^n, positive away from the "
         "origin and C^3 there",
    "ii": "(ii) B is C^1 on [0, inf) and C^2 on (0, inf) with B(0) = B'(0) = 0 "
          "and B' positive and strictly increasing on (0, inf)",
    "iii": "(iii) there exist p > 1, k in [0, 1] and 0 < gamma <= Gamma with "
           "gamma (k+t)^(p-2) t <= B'(t) <= Gamma (k+t)^(p-2) t and "
           "gamma (k+t)^(p-2) <= B''(t) <= Gamma (k+t)^(p-2) for t > 0",
    "iv": "(iv) H is comparable to the Euclidean norm: lambda1 |xi| <= H(xi) "
          "<= lambda2 |xi| with 0 < lambda1 <= lambda2",
    "v": "(v) the unit ball of H is strictly convex",
    "vi": "(vi) the unit sphere of H is uniformly elliptic: the tangential "
          "Hessian of H has a positive lower bound lambda on it",
    "vii": "(vii) f is locally Lipschitz and positive on [0, inf)",
    "viii": "(viii) g is locally Lipschitz with g(0) = 0 and f + g >= 0, and "
            "either g vanishes identically near 0 or the barrier integral "
            "int_0 ds / L^{-1}(G(s)) diverges (Keller-Osserman condition)",
}


def violation(tag, detail):
    """One-line message naming hypothesis ``tag`` plus what went wrong."""
    return f"hypothesis {HYPOTHESES[tag]} violated: {detail}"
