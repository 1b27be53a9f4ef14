"""Hot numerical kernels for base-map orbits, roof evaluation and the flow.

Everything in this module is written in the numba-compatible subset of
Python.  When numba is importable and the environment variable ``LAB_NUMBA``
is not set to ``0``/``false``, the functions are JIT compiled with
``@njit(cache=True, nogil=True)``; otherwise the plain Python definitions run
unchanged, so the package still works (slower) without a functional numba.
``benchmarks/bench_kernels.py`` times the two paths against each other.

Conventions
-----------
Base transformations are dispatched on an integer family code:

    0  block rotation        (dyadic blocks, 2-interval rotation per block)
    1  block swap            (the two halves of each dyadic block swapped)
    2  odometer              (von Neumann-Kakutani adding machine)
    3  explicit table        (finite table + dyadic identity tail)

Base points are fiber coordinates ``(interval index i, offset u)`` with
``0 <= u < length(i)``.  Offsets are never converted to absolute
coordinates inside kernels, so relative precision is uniform however close
the interval sits to the accumulation point at 1.

Orbit kernels report integer status codes (see ``errors``):
0 ok, 1 singularity band, 2 truncation exceeded, 3 inconsistent data.
"""

import math
import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via LAB_NUMBA=0 instead
    numba = None
    _HAVE_NUMBA = False


def _env_wants_numba() -> bool:
    value = os.environ.get("LAB_NUMBA", "").strip().lower()
    return value not in ("0", "false", "off", "no")


#: True when the kernels below are JIT compiled in this process.
NUMBA_ENABLED = _HAVE_NUMBA and _env_wants_numba()


def kernel(func):
    """JIT compile ``func`` when enabled, otherwise return it unchanged."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True, nogil=True)(func)
    return func


FAM_ROTATION = 0
FAM_SWAP = 1
FAM_ODOMETER = 2
FAM_EXPLICIT = 3

OK = 0
SINGULARITY = 1
TRUNCATION = 2
INCONSISTENT = 3


# ---------------------------------------------------------------------------
# smooth bump used by the roof blend
# ---------------------------------------------------------------------------


@kernel
def smooth_sigma(t):
    """exp(-1/t) extended by 0 for t <= 0 (flat to all orders at 0)."""
    if t <= 1e-6:
        # exp(-1/t) underflows below t ~ 1.4e-3; cutting early keeps the
        # derivative formula free of 0 * inf.
        return 0.0
    return math.exp(-1.0 / t)


@kernel
def smooth_sigma_prime(t):
    if t <= 1e-6:
        return 0.0
    return math.exp(-1.0 / t) / (t * t)


@kernel
def smooth_step(t):
    """Decreasing C^inf step on [0, 1]: value 1 at t<=0, 0 at t>=1.

    Returns ``(alpha(t), alpha'(t))`` for
    alpha(t) = sigma(1-t) / (sigma(t) + sigma(1-t)), sigma(s) = exp(-1/s).
    """
    if t <= 0.0:
        return 1.0, 0.0
    if t >= 1.0:
        return 0.0, 0.0
    num = smooth_sigma(1.0 - t)
    oth = smooth_sigma(t)
    den = num + oth
    dnum = -smooth_sigma_prime(1.0 - t)
    doth = smooth_sigma_prime(t)
    a = num / den
    da = (dnum * den - num * (doth + dnum)) / (den * den)
    return a, da


# ---------------------------------------------------------------------------
# roof function: value and derivative in fiber coordinates
# ---------------------------------------------------------------------------


@kernel
def roof_eval(u, b, l, flat):
    """Roof value and derivative at offset ``u`` in an interval of length ``l``.

    The interval splits at b/2, b, l-b, l-b/2 into five pieces: logarithmic
    spikes at both ends, blend pieces driven by the smooth step, and a flat
    middle at height 1.  ``b`` is the blend width (0 < b < l/2).  ``flat``
    selects the diagnostic constant roof r = 1.

    Returns ``(r, dr, piece)`` with piece in 1..5.  Offsets at or outside the
    interval ends return infinities instead of raising so that the JIT and
    plain paths behave identically.
    """
    if flat != 0:
        return 1.0, 0.0, 3
    if u <= 0.0:
        return math.inf, -math.inf, 1
    if u >= l:
        return math.inf, math.inf, 5
    half = 0.5 * b
    if u < half:
        return 1.0 - math.log(u / b), -1.0 / u, 1
    if u < b:
        t = u / b
        a, da = smooth_step(2.0 * t - 1.0)
        fm1 = -math.log(t)
        return 1.0 + a * fm1, da * (2.0 / b) * fm1 - a / u, 2
    v = l - u
    if v > b:
        return 1.0, 0.0, 3
    if v > half:
        t = v / b
        a, da = smooth_step(2.0 * t - 1.0)
        fm1 = -math.log(t)
        return 1.0 + a * fm1, -da * (2.0 / b) * fm1 + a / v, 4
    return 1.0 - math.log(v / b), 1.0 / v, 5


@kernel
def roof_eval_batch(idx, off, lengths, bs, flat, out_r, out_dr):
    for k in range(idx.shape[0]):
        i = idx[k]
        r, dr, piece = roof_eval(off[k], bs[i], lengths[i], flat)
        out_r[k] = r
        out_dr[k] = dr
    return 0


# ---------------------------------------------------------------------------
# dyadic block bookkeeping
# ---------------------------------------------------------------------------


@kernel
def dyadic_block(x):
    """Block index n and offset w for the partition [1-2^-n, 1-2^-n-1).

    Exact for every float x in [0, 1): for x >= 0.5 the gap g = 1 - x is a
    Sterbenz-exact subtraction and w = 2^-n - g is again exact because both
    operands lie within a factor of two.
    """
    if x < 0.5:
        return 0, x
    g = 1.0 - x
    m, e = math.frexp(g)
    if m == 0.5:
        n = 1 - e
    else:
        n = -e
    w = math.ldexp(1.0, -n) - g
    return n, w


@kernel
def scaled_dyadic_block(x, start):
    """Block index and offset for dyadic blocks of [start, 1): the m-th block
    is [1 - G 2^-m, 1 - G 2^-m-1) with G = 1 - start."""
    big = 1.0 - start
    g = 1.0 - x
    ratio = g / big
    if ratio > 1.0:
        ratio = 1.0
    m, e = math.frexp(ratio)
    if m == 0.5:
        n = 1 - e
    else:
        n = -e
    w = math.ldexp(big, -n) - g
    if w < 0.0:
        w = 0.0
    return n, w


# ---------------------------------------------------------------------------
# base transformation: lengths, forward and inverse steps
# ---------------------------------------------------------------------------


@kernel
def iet_length(fam, theta, xs, i):
    """Length of interval ``i`` for the given family."""
    if fam == FAM_ROTATION:
        n = i >> 1
        block = math.ldexp(1.0, int(-n - 1))
        cut = (1.0 - theta) * block
        if (i & 1) == 0:
            return cut
        return block - cut
    if fam == FAM_SWAP:
        return math.ldexp(1.0, int(-(i >> 1) - 2))
    if fam == FAM_ODOMETER:
        return math.ldexp(1.0, int(-i - 1))
    nfinite = xs.shape[0] - 1
    if i < nfinite:
        return xs[i + 1] - xs[i]
    return math.ldexp(1.0 - xs[nfinite], int(-(i - nfinite) - 1))


@kernel
def explicit_locate(xs, x):
    """Locate absolute ``x`` within an explicit table (finite part + tail)."""
    nfinite = xs.shape[0] - 1
    tail_start = xs[nfinite]
    if x >= tail_start:
        m, w = scaled_dyadic_block(x, tail_start)
        return nfinite + m, w, OK
    lo = 0
    hi = nfinite
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if x < xs[mid]:
            hi = mid
        else:
            lo = mid
    return lo, x - xs[lo], OK


@kernel
def iet_step(fam, theta, xs, aa, ys, yl, yi, i, u):
    """One forward step of the base map in fiber coordinates.

    Returns ``(j, v, status)``.
    """
    if fam == FAM_ROTATION:
        n = i >> 1
        block = math.ldexp(1.0, int(-n - 1))
        cut = (1.0 - theta) * block
        top = block - cut
        if (i & 1) == 0:
            w = u + top
            if w < cut:
                return i, w, OK
            return i + 1, w - cut, OK
        if u < cut:
            return i - 1, u, OK
        return i, u - cut, OK
    if fam == FAM_SWAP:
        if (i & 1) == 0:
            return i + 1, u, OK
        return i - 1, u, OK
    if fam == FAM_ODOMETER:
        if i == 0:
            x = 0.5 + u
            n, w = dyadic_block(x)
            return n, w, OK
        x = math.ldexp(1.0, int(-i - 1)) + u
        n, w = dyadic_block(x)
        return n, w, OK
    # explicit table
    nfinite = xs.shape[0] - 1
    if i >= nfinite:
        return i, u, OK
    x = xs[i] + aa[i] + u
    if x < 0.0 or x >= 1.0:
        return i, u, INCONSISTENT
    return explicit_locate(xs, x)


@kernel
def iet_step_inv(fam, theta, xs, aa, ys, yl, yi, i, u):
    """One backward step of the base map in fiber coordinates."""
    if fam == FAM_ROTATION:
        n = i >> 1
        block = math.ldexp(1.0, int(-n - 1))
        cut = (1.0 - theta) * block
        w = u if (i & 1) == 0 else cut + u
        w = w + cut
        if w >= block:
            w = w - block
        if w < cut:
            return (n << 1), w, OK
        return (n << 1) + 1, w - cut, OK
    if fam == FAM_SWAP:
        if (i & 1) == 0:
            return i + 1, u, OK
        return i - 1, u, OK
    if fam == FAM_ODOMETER:
        if i == 0:
            if u <= 0.0:
                return i, u, INCONSISTENT
            m, e = math.frexp(u)
            k = -e
            return k, u - math.ldexp(1.0, int(-k - 1)), OK
        v = (0.5 - math.ldexp(1.0, int(-i))) + u
        return 0, v, OK
    # explicit table
    nfinite = xs.shape[0] - 1
    if nfinite == 0:
        return i, u, OK
    tail_start = xs[nfinite]
    x = xs[i] + u if i < nfinite else 1.0 - math.ldexp(1.0 - tail_start, int(-(i - nfinite))) + u
    if x >= tail_start:
        if i >= nfinite:
            return i, u, OK
        m, w = scaled_dyadic_block(x, tail_start)
        return nfinite + m, w, OK
    lo = 0
    hi = nfinite
    found = -1
    # ys holds the sorted image starts of the finite intervals
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if x < ys[mid]:
            hi = mid
        else:
            lo = mid
    if x >= ys[lo] and x < ys[lo] + yl[lo]:
        found = lo
    if found < 0:
        return i, u, INCONSISTENT
    j = yi[found]
    return j, x - ys[found], OK


# ---------------------------------------------------------------------------
# suspension flow: time-one map, canonical form, orbit accumulators
# ---------------------------------------------------------------------------


@kernel
def time_one(fam, theta, xs, aa, ys, yl, yi, lengths, bs, flat, band, ntr, i, u, y):
    """Time-one map of the unit-speed vertical flow.

    Returns ``(i, u, y, m21_increment, crossed, status)``.  A crossing
    contributes ``-2 r'(x)`` to the lower-left cocycle entry.
    """
    l = lengths[i]
    if u < band * l or u > l - band * l:
        return i, u, y, 0.0, 0, SINGULARITY
    r, dr, piece = roof_eval(u, bs[i], l, flat)
    if y + 1.0 < r:
        return i, u, y + 1.0, 0.0, 0, OK
    j, v, st = iet_step(fam, theta, xs, aa, ys, yl, yi, i, u)
    if st != OK:
        return i, u, y, 0.0, 0, st
    if j >= ntr:
        return i, u, y, 0.0, 0, TRUNCATION
    return j, v, y + 1.0 - 2.0 * r, -2.0 * dr, 1, OK


@kernel
def canonicalize_k(fam, theta, xs, aa, ys, yl, yi, lengths, bs, flat, band, ntr, i, u, y, max_glue):
    """Apply the gluing relation until y lies in [-r(T^-1 x), r(x)).

    Returns ``(i, u, y, status)``.
    """
    for _ in range(max_glue):
        l = lengths[i]
        if u < band * l or u > l - band * l:
            return i, u, y, SINGULARITY
        r, dr, piece = roof_eval(u, bs[i], l, flat)
        if y >= r:
            j, v, st = iet_step(fam, theta, xs, aa, ys, yl, yi, i, u)
            if st != OK:
                return i, u, y, st
            if j >= ntr:
                return i, u, y, TRUNCATION
            i = j
            u = v
            y = y - 2.0 * r
            continue
        j, v, st = iet_step_inv(fam, theta, xs, aa, ys, yl, yi, i, u)
        if st != OK:
            return i, u, y, st
        if j >= ntr:
            return i, u, y, TRUNCATION
        lj = lengths[j]
        if v < band * lj or v > lj - band * lj:
            return i, u, y, SINGULARITY
        rp, drp, piecep = roof_eval(v, bs[j], lj, flat)
        if y < -rp:
            i = j
            u = v
            y = y + 2.0 * rp
            continue
        return i, u, y, OK
    return i, u, y, INCONSISTENT


@kernel
def lyap_orbit(fam, theta, xs, aa, ys, yl, yi, lengths, bs, flat, band, ntr,
               i, u, y, cps, out_a, out_b, out_c, out_d, out_k,
               out_i, out_u, out_y, out_fail):
    """Iterate the time-one map, multiplying the flow Jacobians on the left.

    The cocycle matrix (a, b; c, d) starts at the identity; a crossing at
    base point x multiplies by (1, 0; -2 r'(x), 1) on the left.  At each
    checkpoint ``cps[ci]`` (a strictly increasing int64 array of step counts)
    the current matrix, crossing count and state are stored.  On failure the
    offending step index lands in ``out_fail[0]``.
    """
    a = 1.0
    bb = 0.0
    c = 0.0
    d = 1.0
    k = 0
    step = 0
    out_fail[0] = -1
    for ci in range(cps.shape[0]):
        target = cps[ci]
        while step < target:
            l = lengths[i]
            if u < band * l or u > l - band * l:
                out_fail[0] = step
                return SINGULARITY
            r, dr, piece = roof_eval(u, bs[i], l, flat)
            if y + 1.0 < r:
                y = y + 1.0
            else:
                j, v, st = iet_step(fam, theta, xs, aa, ys, yl, yi, i, u)
                if st != OK:
                    out_fail[0] = step
                    return st
                if j >= ntr:
                    out_fail[0] = step
                    return TRUNCATION
                s = -2.0 * dr
                c = s * a + c
                d = s * bb + d
                i = j
                u = v
                y = y + 1.0 - 2.0 * r
                k += 1
            step += 1
        out_a[ci] = a
        out_b[ci] = bb
        out_c[ci] = c
        out_d[ci] = d
        out_k[ci] = k
        out_i[ci] = i
        out_u[ci] = u
        out_y[ci] = y
    return OK


@kernel
def birkhoff_h_orbit(fam, theta, xs, aa, ys, yl, yi, lengths, bs, flat, band, ntr,
                     i, u, cps, out_sum, h_const):
    """Birkhoff sums of h = 2 + 2|r'| along the base orbit.

    ``out_sum[ci]`` receives sum_{m < cps[ci]} h(T^m x).  A positive
    ``h_const`` replaces h by that constant (diagnostic hook).
    """
    tot = 0.0
    step = 0
    for ci in range(cps.shape[0]):
        target = cps[ci]
        while step < target:
            if h_const > 0.0:
                tot += h_const
            else:
                l = lengths[i]
                if u < band * l or u > l - band * l:
                    return SINGULARITY
                r, dr, piece = roof_eval(u, bs[i], l, flat)
                tot += 2.0 + 2.0 * abs(dr)
            j, v, st = iet_step(fam, theta, xs, aa, ys, yl, yi, i, u)
            if st != OK:
                return st
            if j >= ntr:
                return TRUNCATION
            i = j
            u = v
            step += 1
        out_sum[ci] = tot
    return OK


@kernel
def flow_time_one_batch(fam, theta, xs, aa, ys, yl, yi, lengths, bs, flat, band, ntr,
                        idx, off, hei, status):
    """Apply the time-one map in place to arrays of points.

    Per-point status codes are written to ``status``; returns the number of
    failures.
    """
    bad = 0
    for kk in range(idx.shape[0]):
        i, u, y, ds, crossed, st = time_one(
            fam, theta, xs, aa, ys, yl, yi, lengths, bs, flat, band, ntr,
            idx[kk], off[kk], hei[kk])
        status[kk] = st
        if st == OK:
            idx[kk] = i
            off[kk] = u
            hei[kk] = y
        else:
            bad += 1
    return bad


@kernel
def code_orbit(fam, theta, xs, aa, ys, yl, yi, ntr, i, u, alphabet, out):
    """Symbolic coding of the base orbit: symbol = min(index, alphabet - 1)."""
    for step in range(out.shape[0]):
        if i < alphabet - 1:
            out[step] = i
        else:
            out[step] = alphabet - 1
        j, v, st = iet_step(fam, theta, xs, aa, ys, yl, yi, i, u)
        if st != OK:
            return st
        if j >= ntr:
            return TRUNCATION
        i = j
        u = v
    return OK


@kernel
def base_step_batch(fam, theta, xs, aa, ys, yl, yi, ntr, idx, off, status):
    """One base-map step applied in place to arrays of fiber points."""
    bad = 0
    for k in range(idx.shape[0]):
        j, v, st = iet_step(fam, theta, xs, aa, ys, yl, yi, idx[k], off[k])
        if st == OK and j >= ntr:
            st = TRUNCATION
        status[k] = st
        if st == OK:
            idx[k] = j
            off[k] = v
        else:
            bad += 1
    return bad


@kernel
def base_orbit_steps(fam, theta, xs, aa, ys, yl, yi, ntr, i, u, nsteps):
    """Advance ``nsteps`` base-map steps; returns ``(i, u, status)``."""
    for _ in range(nsteps):
        j, v, st = iet_step(fam, theta, xs, aa, ys, yl, yi, i, u)
        if st != OK:
            return i, u, st
        if j >= ntr:
            return i, u, TRUNCATION
        i = j
        u = v
    return i, u, OK
