"""Reference values for the equidistribution and recurrence tests.

Phases use exact integer arithmetic: an irrational c is replaced by
floor(c * 2^256), so c*n^j mod 1 is exact to far below double precision.
Exponentials are taken with numpy. The recurrence scan measures
intersections by sorting all arc endpoints and testing the midpoint of every
elementary piece, with Fractions throughout.
"""
from fractions import Fraction
from math import isqrt

import numpy as np

B = 256
MOD = 1 << B


def fx(num_sq, sub=0):
    """floor((sqrt(num_sq) - sub) * 2^B) mod 2^B."""
    return (isqrt(num_sq << (2 * B)) - (sub << B)) % MOD


SQRT2 = fx(2)
SQRT3 = fx(3)
ALPHA = fx(2, 1)  # sqrt(2) - 1
BETA = fx(3, 1)  # sqrt(3) - 1


def e_of(ints):
    # top 53 bits are plenty for a double
    t = np.array([v >> (B - 53) for v in ints], dtype=np.float64) / 2.0**53
    return np.exp(2j * np.pi * t)


def weyl(coeff_fixed, degree, M, N):
    ph = [(coeff_fixed * n**degree) % MOD for n in range(M, N)]
    return e_of(ph).mean()


print("weyl sqrt(2) n^2, [0, 1e5):", repr(weyl(SQRT2, 2, 0, 10**5)))
print("weyl sqrt(2) n^2, [0, 1e3):", repr(weyl(SQRT2, 2, 0, 10**3)))
print("weyl sqrt(3) n^3, [100, 2100):", repr(weyl(SQRT3, 3, 100, 2100)))

# n alpha, K = 5, N = 1e6: closed form |sin(pi N k a)| / (N |sin(pi k a)|)
from mpmath import mp, mpf, sqrt, sin, pi  # noqa: E402

mp.dps = 50
a = sqrt(2) - 1
N = 10**6
mags = [abs(sin(pi * N * k * a)) / (N * abs(sin(pi * k * a))) for k in range(1, 6)]
print("n(sqrt2-1) K=5 N=1e6 magnitudes:", [float(m) for m in mags])
print("  worst k =", 1 + max(range(5), key=lambda i: mags[i]), "value", float(max(mags)))


def joint_worst(x_fixed, u_fixed, N, K):
    """(x + n alpha, u n^2) on T^2, frequencies up to sign."""
    px = np.array([((x_fixed + n * ALPHA) % MOD) >> (B - 64) for n in range(N)], dtype=object)
    pu = np.array([((u_fixed * n * n) % MOD) >> (B - 64) for n in range(N)], dtype=object)
    best, arg = -1.0, None
    for k1 in range(-K, K + 1):
        for k2 in range(-K, K + 1):
            if (k1, k2) == (0, 0) or k1 < 0 or (k1 == 0 and k2 < 0):
                continue
            ph = (k1 * px + k2 * pu) % (1 << 64)
            t = np.array([int(v) >> 11 for v in ph], dtype=np.float64) / 2.0**53
            m = abs(np.exp(2j * np.pi * t).mean())
            if m > best:
                best, arg = m, (k1, k2)
    return best, arg


X13 = (MOD // 3)  # floor(2^B / 3)
print("joint (1/3 + n a, sqrt3 n^2), N=1e5, K=3:", joint_worst(X13, SQRT3, 10**5, 3))
print("joint (0 + n a, sqrt3 n^2), N=1e5, K=3:", joint_worst(0, SQRT3, 10**5, 3))
rng = np.random.default_rng(7)
worst = 0.0
for _ in range(10):
    x = int(rng.integers(0, 2**63)) << (B - 63)
    w, _k = joint_worst(x, SQRT3, 10**5, 3)
    worst = max(worst, w)
print("joint, 10 random x, N=1e5, K=3: worst", worst)


# ---------------------------------------------------------------------------
# Recurrence scans. A = [0, 3/10); offsets t_i(n) = p_i(n) * b_i mod 1 with
# the 2^-B truncated b_i.

def circle_measure(lo, hi, offsets):
    """Measure of [lo,hi) ∩ ([lo,hi) - t) for all t, by a breakpoint sweep."""
    pts = {Fraction(0), Fraction(1), lo % 1, hi % 1}
    shifted = []
    for t in offsets:
        s = (lo - t) % 1
        pts.add(s)
        pts.add((s + (hi - lo)) % 1)
        shifted.append(s)
    pts = sorted(pts)
    total = Fraction(0)
    for u, v in zip(pts, pts[1:]):
        mid = (u + v) / 2
        if not (lo <= mid < hi):
            continue
        if all((mid - s) % 1 < hi - lo for s in shifted):
            total += v - u
    return total


def scan(bs, polys, eps, n_max, lo=Fraction(0), hi=Fraction(3, 10)):
    thr = (hi - lo) ** (len(bs) + 1) - eps
    q = []
    for n in range(n_max + 1):
        offs = [Fraction((b * p(n)) % MOD, MOD) for b, p in zip(bs, polys)]
        if circle_measure(lo, hi, offs) >= thr:
            q.append(n)
    gaps = [b - a for a, b in zip(q, q[1:])]
    return q, (max(gaps) if gaps else None)


def summary(name, q, g):
    print(f"{name}: count={len(q)} first={q[:12]} last={q[-5:]} max_gap={g} sum={sum(q)}")


lin = lambda n: n  # noqa: E731
sq = lambda n: n * n  # noqa: E731
summary("l=2 (n, n^2) eps=1/20 N=5000", *scan([ALPHA, BETA], [lin, sq], Fraction(1, 20), 5000))
summary("l=2 (n, n^2) eps=0 N=5000", *scan([ALPHA, BETA], [lin, sq], Fraction(0), 5000))
summary("l=1 n eps=1/100 N=5000", *scan([ALPHA], [lin], Fraction(1, 100), 5000))
summary("l=1 n eps=0 N=5000", *scan([ALPHA], [lin], Fraction(0), 5000))
q, g = scan([ALPHA, BETA], [lin, sq], Fraction(0), 300)
print("l=2 eps=0 N=300 set:", q)
# rational rotation 1/8, n and n^2 dilated by r = 2: A=[0,1/4)
ROT8 = MOD // 8
q, g = scan([ROT8, ROT8], [lambda n: 2 * n, lambda n: 4 * n * n], Fraction(0), 40, Fraction(0), Fraction(1, 4))
print("rot 1/8, r=2, A=[0,1/4), eps=0, N=40:", q, g)
