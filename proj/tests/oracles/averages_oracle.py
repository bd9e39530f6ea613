"""Reference values for the averages tests and the decay acceptance check.

Phases are reduced mod 1 with mpmath (40 digits) before going to floating
point, so the sums are accurate to well below 1e-12.
"""
import math
from mpmath import mp, mpf, sqrt, floor

mp.dps = 40
alpha = sqrt(2) - 1
beta = sqrt(3) - 1


def frac(v):
    return float(v - floor(v))


def mean_e(phases):
    re = sum(math.cos(2 * math.pi * t) for t in phases)
    im = sum(math.sin(2 * math.pi * t) for t in phases)
    n = len(phases)
    return complex(re / n, im / n)


# |(1/N) sum_{n<N} e(n alpha + n^2 beta)|: the l2 norm of the two-map average
# with f = e(x), g = e(y), p1 = n, p2 = n^2 (independent of the point).
for N in (1000, 100000):
    v = mean_e([frac(n * alpha + n * n * beta) for n in range(N)])
    print(f"joint N={N}: {abs(v):.15f}")

# (1/N) sum e(n alpha) (-1)^n = (1/N) sum e(n (alpha + 1/2)), N = 1e5
v = mean_e([frac(n * (alpha + mpf(1) / 2)) for n in range(100000)])
print(f"weighted (-1)^n: {abs(v):.15f}")

# weights e(n beta) against e(n alpha), window [0, 1e5)
v = mean_e([frac(n * (alpha + beta)) for n in range(100000)])
print(f"weighted e(n beta): {abs(v):.15f}")

# shifted window [500, 1500) of e(n alpha + n^2 beta) starting at x = (1/3, 1/7)
v = mean_e([frac(mpf(1) / 3 + mpf(1) / 7 + n * alpha + n * n * beta) for n in range(500, 1500)])
print(f"shifted window value: {v.real:.15f} {v.imag:.15f}")
