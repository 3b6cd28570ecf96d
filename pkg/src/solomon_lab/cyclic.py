"""Cyclotomic working ring Z/p^N[x]/(x^f - 1) and a deterministic place above p.

This is the engine behind the Solomon-element and regulator computations at
conductors too large for a generic unramified context.  A place w | p of
Q_p(zeta_f) is pinned by one monic degree-d factor h_w of x^f - 1 over Z/p^N
(d = ord of p mod f).  Products of cyclotomic factors whose exponent multiset
is stable under multiplication by p are Frobenius-fixed, so their reduction
mod h_w is a constant, i.e. an honest element of Z_p.

For d within the context degree cap the factor is derived from the canonical
PadicContext, so place values agree exactly with the embedding
zeta_f -> teich_gen^((p^d-1)/f).  Beyond the cap the factor is the one
isolated by a deterministic cascade of invariant-gcd splits of Phi_f mod p.
"""

from __future__ import annotations

import json
import os
from functools import lru_cache

import numpy as np
import sympy

from . import padic
from .errors import PrecisionError, SolomonLabError

DEFAULT_DEGREE_CAP = 24


# ---------------------------------------------------------------------------
# F_p polynomial helpers (numpy int64 arrays, lowest coefficient first)


def _np_trim(a):
    nz = np.nonzero(a)[0]
    return a[: nz[-1] + 1] if len(nz) else a[:0]


def _np_mul(a, b, p):
    if len(a) == 0 or len(b) == 0:
        return np.zeros(0, dtype=np.int64)
    return np.convolve(a, b) % p


def _np_divmod(a, b, p):
    b = _np_trim(b % p)
    if len(b) == 0:
        raise ZeroDivisionError("polynomial division by zero")
    a = (a % p).astype(np.int64).copy()
    db = len(b) - 1
    inv = pow(int(b[-1]), -1, p)
    if len(a) - 1 < db:
        return np.zeros(0, dtype=np.int64), _np_trim(a)
    q = np.zeros(len(a) - db, dtype=np.int64)
    for i in range(len(a) - 1, db - 1, -1):
        c = a[i] % p
        if c:
            c = (c * inv) % p
            q[i - db] = c
            a[i - db : i + 1] = (a[i - db : i + 1] - c * b) % p
    return q, _np_trim(a)


def _np_gcd(a, b, p):
    a, b = _np_trim(a % p), _np_trim(b % p)
    while len(b):
        _, r = _np_divmod(a, b, p)
        a, b = b, r
    if len(a):
        a = (a * pow(int(a[-1]), -1, p)) % p
    return a


def _np_powmod(base, e, mod, p):
    result = np.array([1], dtype=np.int64)
    _, base = _np_divmod(base % p, mod, p)
    while e:
        if e & 1:
            _, result = _np_divmod(_np_mul(result, base, p), mod, p)
        e >>= 1
        if e:
            _, base = _np_divmod(_np_mul(base, base, p), mod, p)
    return result


def _np_xgcd(a, b, p):
    """(g, s, t) with s*a + t*b = g over F_p."""
    a0, b0 = _np_trim(a % p), _np_trim(b % p)
    s0, s1 = np.array([1], dtype=np.int64), np.zeros(0, dtype=np.int64)
    t0, t1 = np.zeros(0, dtype=np.int64), np.array([1], dtype=np.int64)
    while len(b0):
        q, r = _np_divmod(a0, b0, p)
        a0, b0 = b0, r
        s0, s1 = s1, _np_trim((_pad_sub(s0, _np_mul(q, s1, p))) % p)
        t0, t1 = t1, _np_trim((_pad_sub(t0, _np_mul(q, t1, p))) % p)
    if len(a0):
        inv = pow(int(a0[-1]), -1, p)
        a0, s0, t0 = (a0 * inv) % p, (s0 * inv) % p, (t0 * inv) % p
    return a0, s0, t0


def _pad_sub(a, b):
    n = max(len(a), len(b))
    out = np.zeros(n, dtype=np.int64)
    out[: len(a)] += a
    out[: len(b)] -= b
    return out


@lru_cache(maxsize=None)
def _cyclotomic_mod_p(f: int, p: int):
    """Phi_f over F_p, via Phi_f = prod over d|f of (x^d - 1)^mu(f/d)."""
    num = np.array([1], dtype=np.int64)
    dens = []
    for div in sympy.divisors(f):
        mu = sympy.mobius(f // div)
        if mu == 0:
            continue
        xd = np.zeros(div + 1, dtype=np.int64)
        xd[0], xd[div] = p - 1, 1
        if mu == 1:
            num = _np_mul(num, xd, p)
        else:
            dens.append(xd)
    for xd in dens:
        q, r = _np_divmod(num, xd, p)
        if len(r):
            raise SolomonLabError("cyclotomic polynomial division was not exact")
        num = q
    return num


# ---------------------------------------------------------------------------
# deterministic factor isolation


def _orbit(t: int, p: int, f: int):
    seen = [t % f]
    x = (t * p) % f
    while x != seen[0]:
        seen.append(x)
        x = (x * p) % f
    return seen


def split_canonical_factor(f: int, p: int):
    """One monic irreducible degree-d factor of Phi_f mod p, deterministically.

    Cascade: reduce orbit-sum polynomials (invariants of the Frobenius) mod the
    current factor product and split off gcd(F, Q - c) pieces, smallest degree
    first.  If invariants stall, fall back to deterministic equal-degree
    splitting with shifted powmods.
    """
    d = int(sympy.n_order(p, f))
    F = _cyclotomic_mod_p(f, p)
    if len(F) - 1 == d:
        return F, d

    def split_with(R):
        nonlocal F
        _, R = _np_divmod(R, F, p)
        if len(R) == 0:
            R = np.zeros(1, dtype=np.int64)
        progressed = False
        for c in range(p):
            Rc = R.copy()
            Rc[0] = (Rc[0] - c) % p
            g = _np_gcd(F, Rc, p)
            dg = len(g) - 1
            if 0 < dg < len(F) - 1 and dg % d == 0:
                F = g
                progressed = True
                if dg == d:
                    return True
        return progressed

    for t in range(2, f):
        if len(F) - 1 == d:
            break
        orb = _orbit(t, p, f)
        Q = np.zeros(f, dtype=np.int64)
        for j in orb:
            Q[j] += 1
        if split_with(_np_trim(Q % p)) and len(F) - 1 == d:
            break
    # deterministic equal-degree fallback
    s = 0
    while len(F) - 1 > d:
        base = np.array([s % p, 1], dtype=np.int64)
        T = _np_powmod(base, (p ** d - 1) // 2, F, p)
        T = T.copy()
        if len(T) == 0:
            T = np.zeros(1, dtype=np.int64)
        T[0] = (T[0] - 1) % p
        g = _np_gcd(F, T, p)
        dg = len(g) - 1
        if 0 < dg < len(F) - 1:
            F = g
        s += 1
        if s > 4 * p * d + 20:
            raise SolomonLabError(f"equal-degree splitting stalled for f={f}, p={p}")
    return F, d


# ---------------------------------------------------------------------------
# Kronecker-packed multiplication over Z (nonnegative coefficients)


def _pack(coeffs, slotbytes):
    return int.from_bytes(
        b"".join(int(c).to_bytes(slotbytes, "little") for c in coeffs), "little"
    )


def _unpack(n, slotbytes, count):
    raw = n.to_bytes(slotbytes * count + 8, "little")
    return [
        int.from_bytes(raw[i * slotbytes : (i + 1) * slotbytes], "little")
        for i in range(count)
    ]


def poly_mul_big(a, b, bound):
    """Exact product of integer polynomials with 0 <= coeffs < bound."""
    if not a or not b:
        return []
    slotbits = 2 * bound.bit_length() + (min(len(a), len(b))).bit_length() + 1
    slotbytes = (slotbits + 7) // 8
    prod = _pack(a, slotbytes) * _pack(b, slotbytes)
    return _unpack(prod, slotbytes, len(a) + len(b) - 1)


def cyc_mul(a, b, f, pk):
    """Product in Z/pk[x]/(x^f - 1); a, b are length-f lists of ints in [0, pk)."""
    full = poly_mul_big(a, b, pk)
    out = [0] * f
    for i, c in enumerate(full):
        j = i % f
        out[j] += c
    return [c % pk for c in out]


def cyc_product(factors, f, pk):
    """Balanced product tree over the cyclic ring."""
    items = [fac for fac in factors]
    if not items:
        return [1] + [0] * (f - 1)
    while len(items) > 1:
        nxt = []
        for i in range(0, len(items) - 1, 2):
            nxt.append(cyc_mul(items[i], items[i + 1], f, pk))
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return [c % pk for c in items[0]]


def one_minus_x_power(a, f, pk):
    vec = [0] * f
    vec[0] = 1
    vec[a % f] = (vec[a % f] - 1) % pk
    vec[0] %= pk
    return vec


# ---------------------------------------------------------------------------
# Hensel lift of the chosen factor


def lift_factor(f: int, p: int, N: int, h_bar):
    """Monic h over Z/p^N with h = h_bar mod p and h | x^f - 1 mod p^N."""
    d = len(h_bar) - 1
    xf1 = np.zeros(f + 1, dtype=np.int64)
    xf1[0], xf1[f] = p - 1, 1
    g_bar, r = _np_divmod(xf1, h_bar, p)
    if len(r):
        raise SolomonLabError("h_bar does not divide x^f - 1 mod p")
    g0, s, t = _np_xgcd(h_bar, g_bar, p)
    if len(g0) != 1:
        raise SolomonLabError("factor and cofactor are not coprime mod p")

    h = [int(c) for c in h_bar] + [0] * 0
    g = [int(c) for c in g_bar]
    target = [0] * (f + 1)
    target[0], target[f] = -1, 1
    for k in range(1, N):
        pk1 = p ** (k + 1)
        prod = poly_mul_big([c % pk1 for c in h], [c % pk1 for c in g], pk1)
        e_np = np.zeros(f + 1, dtype=np.int64)
        for i in range(f + 1):
            diff = (target[i] - (prod[i] if i < len(prod) else 0)) % pk1
            if diff % p ** k:
                raise SolomonLabError("Hensel invariant violated")
            e_np[i] = (diff // p ** k) % p
        e_np = _np_trim(e_np)
        if len(e_np) == 0:
            continue
        te = _np_mul(t, e_np, p)
        _, u = _np_divmod(te, h_bar, p)
        num = _pad_sub(e_np, _np_mul(u, g_bar, p)) % p
        v, rem = _np_divmod(_np_trim(num), h_bar, p)
        if len(rem):
            raise SolomonLabError("Hensel correction failed to divide")
        pk = p ** k
        for i, c in enumerate(u):
            h[i] = (h[i] + pk * int(c)) % pk1
        for i, c in enumerate(v):
            g[i] = (g[i] + pk * int(c)) % pk1
    pN = p ** N
    h = [c % pN for c in h]
    # verification: h * g = x^f - 1 mod p^N
    prod = poly_mul_big(h, [c % pN for c in g], pN)
    for i in range(f + 1):
        want = (pN - 1) if i == 0 else (1 if i == f else 0)
        if (prod[i] if i < len(prod) else 0) % pN != want % pN:
            raise SolomonLabError("lifted factorization failed verification")
    if any(c % pN for c in prod[f + 1 :]):
        raise SolomonLabError("lifted factorization has spurious high terms")
    assert h[d] == 1 and all(c == 0 for c in h[d + 1 :])
    return h[: d + 1]


# ---------------------------------------------------------------------------
# the place


class CyclotomicPlace:
    """A fixed place w | p of Q_p(zeta_f) with residue degree d = ord_f(p).

    value() maps Frobenius-stable elements of Z/p^N[x]/(x^f - 1) to their
    w-adic value in Z/p^N.  The embedding exponent e (coprime to f) twists
    zeta_f to theta^e and is applied as an exponent permutation.
    """

    def __init__(self, f: int, p: int, N: int, degree_cap: int = DEFAULT_DEGREE_CAP):
        if f < 2:
            raise SolomonLabError("conductor must be at least 2 for a cyclotomic place")
        if f % p == 0:
            raise SolomonLabError(f"p={p} divides f={f}; the place would be ramified")
        self.f, self.p, self.N = f, p, N
        self.pN = p ** N
        self.d = int(sympy.n_order(p, f))
        self.context_backed = self.d <= degree_cap
        if self.context_backed:
            self.hw = self._hw_from_context()
        else:
            cached = _cache_get(f, p, N)
            if cached is not None:
                self.hw = cached
            else:
                h_bar, _ = split_canonical_factor(f, p)
                self.hw = tuple(lift_factor(f, p, N, h_bar))
                _cache_put(f, p, N, self.hw)

    def _hw_from_context(self):
        ctx = padic.make_context(self.p, self.d, self.N)
        theta = ctx.teich_gen ** ((self.p ** self.d - 1) // self.f)
        poly = [ctx.one]
        conj = theta
        for _ in range(self.d):
            new = [ctx.zero] * (len(poly) + 1)
            for i, c in enumerate(poly):
                new[i + 1] = new[i + 1] + c
                new[i] = new[i] - c * conj
            poly = new
            conj = conj.frobenius()
        return tuple(c.as_int() for c in poly)

    def value(self, coeffs, e: int = 1):
        """w-adic value (an int mod p^N) of sum coeffs[j] * zeta_f^(e*j).

        The element must be rational at w (Frobenius-stable); a non-constant
        remainder raises, it is never silently truncated.
        """
        f, pN = self.f, self.pN
        if e % f != 1:
            permuted = [0] * f
            for j, c in enumerate(coeffs):
                if c:
                    permuted[(j * e) % f] = (permuted[(j * e) % f] + c) % pN
            coeffs = permuted
        rem = self._reduce(coeffs)
        for c in rem[1:]:
            if c % pN:
                raise SolomonLabError(
                    "place value is not rational: element is not Frobenius-stable"
                )
        return rem[0] % pN if rem else 0

    def _reduce(self, coeffs):
        d, pN = self.d, self.pN
        hw = self.hw
        work = [c % pN for c in coeffs]
        for i in range(len(work) - 1, d - 1, -1):
            c = work[i]
            if c:
                work[i] = 0
                for j in range(d):
                    work[i - d + j] = (work[i - d + j] - c * hw[j]) % pN
        return work[:d] if len(work) >= d else work + [0] * (d - len(work))

    def norm_orbit_product(self, a: int, e: int = 1):
        """prod over the Frobenius orbit of a of (1 - zeta_f^(e*j)), as a Z_p value."""
        orb = _orbit(a, self.p, self.f)
        vec = cyc_product(
            [one_minus_x_power(j, self.f, self.pN) for j in orb], self.f, self.pN
        )
        return self.value(vec, e)


@lru_cache(maxsize=None)
def get_place(f: int, p: int, N: int, degree_cap: int = DEFAULT_DEGREE_CAP):
    return CyclotomicPlace(f, p, N, degree_cap)


# ---------------------------------------------------------------------------
# optional on-disk cache for lifted factors (SOLOMON_LAB_CACHE)


def _cache_path(f, p, N):
    root = os.environ.get("SOLOMON_LAB_CACHE")
    if not root:
        return None
    return os.path.join(root, f"hw_f{f}_p{p}_N{N}.json")


def _cache_get(f, p, N):
    path = _cache_path(f, p, N)
    if not path or not os.path.exists(path):
        return None
    try:
        with open(path) as fh:
            data = json.load(fh)
        return tuple(int(c) for c in data["hw"])
    except (OSError, ValueError, KeyError):
        return None


def _cache_put(f, p, N, hw):
    path = _cache_path(f, p, N)
    if not path:
        return
    os.makedirs(os.path.dirname(path), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump({"f": f, "p": p, "N": N, "hw": [int(c) for c in hw]}, fh)
    os.replace(tmp, path)
