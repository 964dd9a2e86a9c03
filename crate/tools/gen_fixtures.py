"""Regenerate the committed newform fixtures with PARI/GP (via the `cypari` wheel).

    pip install cypari
    python3 tools/gen_fixtures.py fixtures/

Each form is checked before it is written: unique eigenform in the space,
a_1 = 1, a_p^2 * eps(p)^-1 rational for p not dividing N (so F = Q), and the
complex-conjugation inner twist a_p^conj = a_p * chi(p) with chi = eps^-1.
"""
import json
import sys
from fractions import Fraction

from cypari import pari

pari.allocatemem(10**9)

BOUND = 500

# (label, level, weight, conrey index, disc of Hecke field, field variable)
FORMS = [
    ("20.3", 20, 3, 13, -1, "t"),
    ("36.5", 36, 5, 17, -2, "y"),
    ("24.3", 24, 3, 17, -2, "y"),
]


def coords(x, var):
    """Coordinates of a PARI field element in the basis (1, sqrt d)."""
    x = pari.lift(pari.lift(x))
    v = pari(var)
    return [Fraction(str(pari.polcoef(x, 0, v))), Fraction(str(pari.polcoef(x, 1, v)))]


def rat(q):
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def mul(x, y, d):
    return [x[0] * y[0] + d * x[1] * y[1], x[0] * y[1] + x[1] * y[0]]


def root_of_unity(num, den, d):
    """e(num/den) in Q(sqrt d) for den in {1, 2, 4}."""
    e = Fraction(num, den) % 1
    table = {Fraction(0): [1, 0], Fraction(1, 2): [-1, 0]}
    if d == -1:
        table[Fraction(1, 4)] = [0, 1]
        table[Fraction(3, 4)] = [0, -1]
    return [Fraction(v) for v in table[e]]


def main(outdir):
    for label, n_level, k, conrey, disc, var in FORMS:
        pari(f"mf=mfinit([{n_level},{k},Mod({conrey},{n_level})],0); L=mfeigenbasis(mf);"
             f"G=znstar({n_level},1); chi=znconreychar(G,{conrey}); co=mfcoefs(L[1],{BOUND})")
        assert int(pari("#L")) == 1, label
        assert int(pari("mfisCM(L[1])")) == 0, label
        an = [coords(pari("co")[n], var) for n in range(BOUND + 1)]
        assert an[1] == [1, 0]
        for p in pari(f"primes([2,{BOUND}])"):
            p = int(p)
            if n_level % p == 0:
                continue
            e = pari(f"chareval(G,chi,{p})")
            eps = root_of_unity(int(pari.numerator(e)), int(pari.denominator(e)), disc)
            eps_inv = [eps[0], -eps[1]]
            a = an[p]
            adj = mul(mul(a, a, disc), eps_inv, disc)
            assert adj[1] == 0, (label, p, adj)
            assert [a[0], -a[1]] == mul(a, eps_inv, disc), (label, p)
        inv = int(pari(f"lift(Mod({conrey},{n_level})^-1)"))
        fixture = {
            "label": label,
            "level": n_level,
            "weight": k,
            "char": {"modulus": n_level, "conrey": conrey},
            "hecke_field": {"degree": 2, "disc": disc},
            "an": [{"n": n, "a": [rat(an[n][0]), rat(an[n][1])]} for n in range(1, BOUND + 1)],
            "coeff_bound": BOUND,
            "inner_twists": [
                {"auto": "id", "char": {"modulus": n_level, "conrey": 1}, "ramified": False},
                {"auto": "conj", "char": {"modulus": n_level, "conrey": inv}, "ramified": True},
            ],
            "F": {"degree": 1, "disc": 1},
            "is_cm": False,
            "is_p_minimal": {"2": True},
        }
        with open(f"{outdir}/{label}.json", "w") as fh:
            json.dump(fixture, fh, indent=1)
            fh.write("\n")
        print(label, "a_2 =", an[2], "written")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "fixtures")
