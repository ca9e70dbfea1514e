"""High-precision reference values for the Mittag-Leffler function.

Two independent routes:
  * truncated Taylor series in multiprecision arithmetic, with the working
    precision raised above the size of the largest term and an explicit
    geometric bound on the discarded tail;
  * for large negative arguments, the algebraic asymptotic expansion summed
    at high precision up to its smallest term.

Output is written to ml_oracle.json next to this script and consumed by
tests/ml_oracle.rs. Re-run with `python3 ml_oracle.py`.
"""

import json
from fractions import Fraction
from pathlib import Path

import mpmath as mp


def series(alpha, beta, z, tol_digits=40):
    """Taylor series with rational-alpha Gamma recurrence."""
    a = Fraction(alpha).limit_denominator(100)
    p, q = a.numerator, a.denominator
    absz = abs(complex(z))
    # size of the largest term ~ exp(|z|^(1/alpha))
    big = float(absz) ** (1.0 / float(a)) / 2.302585 if absz > 0 else 0.0
    dps = int(big) + tol_digits + 20
    with mp.workdps(dps):
        al = mp.mpf(p) / q
        be = mp.mpf(beta)
        zz = mp.mpc(z)
        # Gamma(n*al + be) for n = 0..q-1, then recurrence by +p in argument
        gam = [mp.gamma(n * al + be) for n in range(q)]
        total = mp.mpc(0)
        zpow = mp.mpc(1)
        n = 0
        tail_ok = 0
        while True:
            k = n % q
            term = zpow / gam[k]
            total += term
            # advance gamma chain for index n + q
            x = n * al + be
            g = gam[k]
            for i in range(p):
                g *= x + i
            gam[k] = g
            zpow *= zz
            n += 1
            if n > 10 and abs(term) < mp.mpf(10) ** (-(tol_digits + 5)) * max(abs(total), mp.mpf(10) ** -300):
                tail_ok += 1
                # the ratio of consecutive terms is non-increasing (log-convex Gamma)
                if tail_ok > q + 2:
                    break
            else:
                tail_ok = 0
        return complex(total)


def asymptotic(alpha, beta, z, dps=60):
    """-sum_{k>=1} z^{-k}/Gamma(beta - alpha k), truncated at the smallest term."""
    with mp.workdps(dps):
        fa = Fraction(alpha).limit_denominator(100)
        al = mp.mpf(fa.numerator) / fa.denominator
        be = mp.mpf(beta)
        zz = mp.mpc(z)
        total = mp.mpc(0)
        best = None
        for k in range(1, 2000):
            x = be - al * k
            # envelope of |1/Gamma(x)|: Gamma(1-x)/pi for x < 0, which bounds the
            # oscillating reciprocal and is monotone in k
            env = abs(zz) ** (-k) * (mp.gamma(1 - x) / mp.pi if x < 0 else mp.rgamma(x) + 1)
            if best is not None and env > best:
                break
            best = env if best is None else min(best, env)
            total += -zz ** (-k) * mp.rgamma(x)
        return complex(total)


def main():
    rows = []

    def add(alpha, beta, z, route):
        if route == "series":
            v = series(alpha, beta, z)
        else:
            v = asymptotic(alpha, beta, z)
        rows.append(
            {
                "alpha": alpha,
                "beta": beta,
                "z_re": complex(z).real,
                "z_im": complex(z).imag,
                "re": v.real,
                "im": v.imag,
                "route": route,
            }
        )

    # |z| <= 5 series grid
    zs_small = [-5, -3, -1, -0.5, 0.25, 0.5, 1, 2, 3, 5,
                complex(2, 2), complex(-3, 1), complex(0, 4), complex(-1, -4),
                complex(0.3, 0.2), complex(-4.5, 0.5)]
    for alpha in (0.3, 0.5, 0.8):
        for beta in (1.0, alpha, alpha + 1.0, alpha + 2.0, 0.5, 2.5):
            for z in zs_small:
                add(alpha, beta, z, "series")

    # moderate negative arguments, series still feasible
    for alpha in (0.5, 0.8, 0.95):
        for beta in (1.0, alpha, alpha + 1.0, alpha + 2.0):
            for z in (-8, -12, -20, -35):
                add(alpha, beta, z, "series")
    # complex points up to |z| = 20 for alpha >= 0.5
    for alpha in (0.5, 0.8):
        for beta in (1.0, alpha):
            for z in (complex(-10, 10), complex(5, -12), complex(-18, 3), complex(0, 15)):
                add(alpha, beta, z, "series")

    # large negative arguments via the asymptotic expansion
    for alpha in (0.3, 0.5, 0.8):
        for beta in (1.0, alpha, alpha + 1.0, alpha + 2.0):
            for z in (-50, -100):
                add(alpha, beta, z, "asymptotic")
    # alpha = 0.3 moderate negative through the series (high precision)
    for beta in (1.0, 0.3, 1.3):
        for z in (-8, -10):
            add(0.3, beta, z, "series")

    out = Path(__file__).with_name("ml_oracle.json")
    out.write_text(json.dumps(rows, indent=1))
    print(f"wrote {len(rows)} rows to {out}")

    # closed-form cross-check: E_{1/2,1}(z) = exp(z^2) erfc(-z)
    with mp.workdps(50):
        for z in (-1, -5, 2.5):
            a = series(0.5, 1.0, z)
            b = complex(mp.exp(mp.mpf(z) ** 2) * mp.erfc(-mp.mpf(z)))
            assert abs(a - b) <= 1e-14 * abs(b), (z, a, b)
    print("erfc cross-check passed")


if __name__ == "__main__":
    main()
