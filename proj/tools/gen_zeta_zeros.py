#!/usr/bin/env python3
"""Generate a table of the first K nontrivial zeta-zero ordinates.

Zeros of the Hardy Z function are bracketed on a fine grid and polished by
bisection, both using a vectorized Riemann-Siegel evaluation with the C0, C1
and C2 remainder corrections. The smallest ordinates come straight from
mpmath.zetazero, the total count is checked against mpmath.nzeros, and a
sample of ordinates is compared with mpmath.zetazero before anything is
written.

    python3 tools/gen_zeta_zeros.py 10000 > tests/data/zeta_zeros_10k.txt
"""
import sys

import mpmath
import numpy as np

EXACT_HEAD = 100
STEP = 0.01
BLOCK = 200.0


def _psi_taylor(order=60):
    # Taylor coefficients of cos(2 pi (p^2 - p - 1/16)) / cos(2 pi p) about p = 1/2.
    mpmath.mp.dps = 50
    psi = lambda p: mpmath.cos(2 * mpmath.pi * (p * p - p - mpmath.mpf(1) / 16)) / mpmath.cos(2 * mpmath.pi * p)
    coeffs = mpmath.taylor(psi, mpmath.mpf(1) / 2, order)
    mpmath.mp.dps = 15
    return [float(c) for c in coeffs]


PSI = np.array(_psi_taylor())


def psi_derivative(p, k):
    x = p - 0.5
    coeffs = [PSI[n] * np.prod(np.arange(n - k + 1, n + 1, dtype=float)) for n in range(k, len(PSI))]
    out = np.zeros_like(p)
    for c in reversed(coeffs):
        out = out * x + c
    return out


def theta(t):
    return t / 2 * np.log(t / (2 * np.pi)) - t / 2 - np.pi / 8 + 1 / (48 * t) + 7 / (5760 * t**3)


def z_rs(t):
    t = np.asarray(t, dtype=float)
    a = np.sqrt(t / (2 * np.pi))
    big_n = np.floor(a)
    th = theta(t)
    total = np.zeros_like(t)
    for k in range(1, int(big_n.max()) + 1):
        total += np.where(k <= big_n, np.cos(th - t * np.log(k)) / np.sqrt(k), 0.0)
    p = a - big_n
    c0 = psi_derivative(p, 0)
    c1 = -psi_derivative(p, 3) / (96 * np.pi**2)
    c2 = psi_derivative(p, 2) / (64 * np.pi**2) + psi_derivative(p, 6) / (18432 * np.pi**4)
    sign = np.where(big_n % 2 == 1, 1.0, -1.0)
    return 2 * total + sign * a**-0.5 * (c0 + c1 / a + c2 / a**2)


def refine(lo, hi, iters=45):
    flo = z_rs(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = z_rs(mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def main():
    count = int(sys.argv[1]) if len(sys.argv) > 1 else 10000
    zeros = [float(mpmath.zetazero(i).imag) for i in range(1, min(count, EXACT_HEAD) + 1)]
    lo = zeros[-1] + 0.5 * (float(mpmath.zetazero(EXACT_HEAD + 1).imag) - zeros[-1])
    while len(zeros) < count:
        grid = np.arange(lo, lo + BLOCK + STEP / 2, STEP)
        vals = z_rs(grid)
        idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
        zeros.extend(refine(grid[idx], grid[idx + 1]).tolist())
        lo = grid[-1]
        print(f"{len(zeros)} zeros below {lo:.1f}", file=sys.stderr)
    zeros = sorted(zeros)[:count]
    expected = int(mpmath.nzeros(zeros[-1] + 1e-6))
    if expected != count:
        sys.exit(f"count check failed: nzeros={expected}, found={count}")
    for n in sorted({EXACT_HEAD + 1, count // 10, count // 2, count}):
        ref = float(mpmath.zetazero(n).imag)
        err = abs(ref - zeros[n - 1])
        print(f"check zero {n}: {zeros[n - 1]:.9f} vs {ref:.9f} (err {err:.1e})", file=sys.stderr)
        if err > 5e-8:
            sys.exit("ordinate check failed")
    for z in zeros:
        print(f"{z:.9f}")


if __name__ == "__main__":
    main()
