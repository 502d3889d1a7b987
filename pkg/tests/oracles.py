"""Slow, literal reference implementations used as test oracles.

Nothing here imports the package: the formulas are re-derived from scratch
with explicit loops, string bit manipulation and high-precision arithmetic.
"""

import functools
import math

import mpmath

mpmath.mp.dps = 50


def bilinear_mp(grid, x, y):
    """Four-term bilinear interpolation at (x, y) in 50-digit arithmetic."""
    x0, y0 = int(mpmath.floor(x)), int(mpmath.floor(y))
    dx, dy = x - x0, y - y0

    def px(xx, yy):
        if 0 <= yy < len(grid) and 0 <= xx < len(grid[0]):
            return mpmath.mpf(int(grid[yy][xx]))
        return mpmath.mpf(0)

    return ((1 - dx) * (1 - dy) * px(x0, y0) + dx * (1 - dy) * px(x0 + 1, y0)
            + (1 - dx) * dy * px(x0, y0 + 1) + dx * dy * px(x0 + 1, y0 + 1))


@functools.lru_cache(maxsize=None)
def _offsets_mp(P, R):
    out = []
    for k in range(P):
        a = 2 * mpmath.pi * k / P
        ox, oy = R * mpmath.cos(a), -R * mpmath.sin(a)
        # snap the 1e-50 residue so lattice points stay on the lattice
        ox = mpmath.nint(ox) if abs(ox - mpmath.nint(ox)) < mpmath.mpf("1e-40") else ox
        oy = mpmath.nint(oy) if abs(oy - mpmath.nint(oy)) < mpmath.mpf("1e-40") else oy
        out.append((ox, oy))
    return tuple(out)


def neighbors_mp(grid, x, y, P, R):
    return [bilinear_mp(grid, x + ox, y + oy) for ox, oy in _offsets_mp(P, R)]


def sign_bits(grid, x, y, P, R, strict=False):
    """List of P bits, bit k = [f_k >= f_c] (or > when strict)."""
    c = mpmath.mpf(int(grid[y][x]))
    bits = []
    for f in neighbors_mp(grid, x, y, P, R):
        d = f - c
        if abs(d) < mpmath.mpf("1e-30"):
            d = mpmath.mpf(0)
        bits.append(1 if (d > 0 if strict else d >= 0) else 0)
    return bits


def code_of(bits):
    return sum(b * 2**k for k, b in enumerate(bits))


def transitions_str(code, P):
    """Uniformity via the binary string: count adjacent unequal characters on the ring."""
    s = format(code, f"0{P}b")
    return sum(1 for i in range(P) if s[i] != s[(i + 1) % P])


def riu_oracle(code, P, u_t):
    if transitions_str(code, P) <= u_t:
        return format(code, "b").count("1")
    return P + 1


def lsv_float(plane, x, y, P, R, signed=False):
    """Double-loop LSV with plain floats and the four-term bilinear form."""
    c = float(plane[y][x])
    total = 0.0
    for k in range(P):
        a = 2 * math.pi * k / P
        nx = x + R * math.cos(a)
        ny = y - R * math.sin(a)
        x0, y0 = math.floor(nx + 1e-12), math.floor(ny + 1e-12)
        dx, dy = nx - x0, ny - y0
        if abs(dx) < 1e-12:
            dx = 0.0
        if abs(dy) < 1e-12:
            dy = 0.0

        def px(xx, yy):
            if 0 <= yy < len(plane) and 0 <= xx < len(plane[0]):
                return float(plane[yy][xx])
            return 0.0

        f = ((1 - dx) * (1 - dy) * px(x0, y0) + dx * (1 - dy) * px(x0 + 1, y0)
             + (1 - dx) * dy * px(x0, y0 + 1) + dx * dy * px(x0 + 1, y0 + 1))
        total += (f - c) if signed else abs(f - c)
    return total / P


def lsv_gsv_mask(plane, P, R, signed=False):
    h, w = len(plane), len(plane[0])
    values = {}
    for y in range(R, h - R):
        for x in range(R, w - R):
            values[(x, y)] = lsv_float(plane, x, y, P, R, signed)
    g = sum(values.values()) / len(values)
    mask = [[values[(x, y)] > g for x in range(R, w - R)] for y in range(R, h - R)]
    if not any(any(row) for row in mask):
        mask = [[True] * (w - 2 * R) for _ in range(h - 2 * R)]
    return values, g, mask
