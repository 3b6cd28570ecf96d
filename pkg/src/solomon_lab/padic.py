"""Fixed-precision arithmetic in Z_p and its unramified extensions Z_{p^d}.

Elements are polynomials in a Teichmueller generator, stored as coefficient
vectors over Z/p^prec with the absolute precision tracked per element.
Contexts are deterministic: the same (p, d, N) always produces bit-identical
modulus and generator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import sympy

from .errors import ContextTooSmallError, PrecisionError, SolomonLabError

# ---------------------------------------------------------------------------
# scalar helpers (Z/p^k), shared with the cyclotomic fast path


def val_int(x: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if x == 0:
        raise ValueError("valuation of 0 is undefined")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def inv_mod_pk(a: int, p: int, k: int) -> int:
    """Inverse of a unit modulo p^k."""
    if a % p == 0:
        raise ZeroDivisionError(f"{a} is not a unit mod {p}^{k}")
    return pow(a, -1, p ** k)


def teich_scalar(a: int, p: int, k: int) -> int:
    """Teichmueller lift of a mod p to Z/p^k (fixed point of x -> x^p)."""
    x = a % p ** k
    if x % p == 0:
        raise ValueError("Teichmueller lift of 0 is undefined")
    for _ in range(k):
        x = pow(x, p, p ** k)
    return x


def _log_series_bound(p: int, prec: int):
    """Largest series index needed and the digit loss for log at precision prec.

    A term t^k/k with v(t) >= 1 has valuation >= k - log_p(k), which is
    monotone in k, so the cutoff uses the log bound rather than v_p(k).
    """
    kmax = 1
    loss = 0
    k = 1
    while True:
        logk = 0
        while p ** (logk + 1) <= k:
            logk += 1
        if k > 1 and k - logk >= prec:
            break
        kmax = k
        if k % p == 0:
            loss = max(loss, val_int(k, p))
        k += 1
    return kmax, loss


def log1p_scalar(t: int, p: int, prec: int):
    """log(1+t) for v_p(t) >= 1, computed mod p^(prec - loss).

    Returns (value, loss) where loss counts guard digits consumed by the
    denominators of the series.
    """
    pk = p ** prec
    t %= pk
    if t % p != 0:
        raise PrecisionError("log series needs a principal unit argument")
    kmax, loss = _log_series_bound(p, prec)
    acc = 0
    power = 1
    for k in range(1, kmax + 1):
        power = (power * t) % pk
        vk = val_int(k, p) if k % p == 0 else 0
        if vk:
            if power % p ** vk:
                raise PrecisionError("log series term lost too many digits")
            term = (power // p ** vk) * inv_mod_pk(k // p ** vk, p, prec)
        else:
            term = power * inv_mod_pk(k, p, prec)
        acc = acc + term if k % 2 == 1 else acc - term
        acc %= pk
    return acc % p ** (prec - loss), loss


def iwasawa_log_scalar(x: int, p: int, prec: int):
    """Iwasawa logarithm of a nonzero element of Z/p^prec, log_p(p) = 0.

    Returns (value, result_prec). Kills the Teichmueller part, so the
    result is log of the principal-unit part of x / p^v.
    """
    x %= p ** prec
    if x == 0:
        raise PrecisionError("log of 0 at this precision")
    v = val_int(x, p)
    u = x // p ** v
    uprec = prec - v
    if uprec < 2:
        raise PrecisionError("not enough digits left after removing p-power")
    omega = teich_scalar(u, p, uprec)
    u = (u * inv_mod_pk(omega, p, uprec)) % p ** uprec
    value, loss = log1p_scalar(u - 1, p, uprec)
    return value, uprec - loss


# ---------------------------------------------------------------------------
# F_p / Z polynomial helpers used by context construction (lists, LSC first)


def _poly_trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mulmod(a, b, modpoly, p):
    # modpoly monic, coefficients mod p
    d = len(modpoly) - 1
    res = [0] * (len(a) + len(b) - 1) if a and b else []
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                res[i + j] = (res[i + j] + ai * bj) % p
    for i in range(len(res) - 1, d - 1, -1):
        c = res[i]
        if c:
            res[i] = 0
            for j in range(d):
                res[i - d + j] = (res[i - d + j] - c * modpoly[j]) % p
    return res[:d] + [0] * max(0, d - len(res))


def _poly_powmod(base, e, modpoly, p):
    d = len(modpoly) - 1
    result = [1] + [0] * (d - 1)
    b = base[:]
    while e:
        if e & 1:
            result = _poly_mulmod(result, b, modpoly, p)
        b = _poly_mulmod(b, b, modpoly, p)
        e >>= 1
    return result


def _poly_gcd_fp(a, b, p):
    a = _poly_trim([x % p for x in a])
    b = _poly_trim([x % p for x in b])
    while b:
        # a mod b
        inv = pow(b[-1], -1, p)
        r = a[:]
        while len(r) >= len(b) and _poly_trim(r[:]):
            if len(r) < len(b):
                break
            c = (r[-1] * inv) % p
            shift = len(r) - len(b)
            for j in range(len(b)):
                r[shift + j] = (r[shift + j] - c * b[j]) % p
            _poly_trim(r)
        a, b = b, r
    return a


def _is_irreducible(m0, p, d):
    if d == 1:
        return True
    x = [0, 1]
    xq = _poly_powmod(x, p ** d, m0, p)
    if _poly_trim([(xq[i] - x[i] if i < len(x) else xq[i]) % p for i in range(len(xq))]):
        return False
    for q in sympy.primefactors(d):
        xe = _poly_powmod(x, p ** (d // q), m0, p)
        diff = [(xe[i] - (x[i] if i < len(x) else 0)) % p for i in range(len(xe))]
        if not _poly_trim(diff):
            return False
        if len(_poly_gcd_fp(diff, m0, p)) > 1:
            return False
    return True


@lru_cache(maxsize=None)
def _factor_group_order(p: int, d: int):
    """Prime factors of p^d - 1, via its cyclotomic pieces."""
    primes = set()
    for e in sympy.divisors(d):
        primes.update(sympy.primefactors(int(sympy.cyclotomic_poly(e, p))))
    return tuple(sorted(primes))


def _is_primitive(m0, p, d):
    order = p ** d - 1
    x = [0, 1]
    for q in _factor_group_order(p, d):
        xe = _poly_powmod(x, order // q, m0, p)
        if xe == [1] + [0] * (d - 1):
            return False
    return True


def _smallest_primitive_poly(p, d):
    """Smallest-lexicographic monic degree-d polynomial over F_p whose root
    generates F_{p^d}^x.  Coefficient tuples (c_{d-1},...,c_0) are counted
    upward like base-p integers."""
    for counter in itertools.count(0):
        digits = []
        c = counter
        for _ in range(d):
            digits.append(c % p)
            c //= p
        if c:
            raise SolomonLabError(f"no primitive polynomial found for p={p}, d={d}")
        # digits are (c_0, ..., c_{d-1}) from the low end of the counter being
        # the constant term of the *reversed* tuple; the counter's most
        # significant base-p digit is c_{d-1}
        coeffs = digits[::-1]  # now (c_{d-1}, ..., c_0) msd-first
        m0 = list(reversed(coeffs)) + [1]  # LSC-first monic
        if m0[0] == 0:
            continue
        if not _is_irreducible(m0, p, d):
            continue
        if not _is_primitive(m0, p, d):
            continue
        return m0


# ---------------------------------------------------------------------------
# contexts and elements


@dataclass(frozen=True)
class PadicContext:
    """Ambient ring Z_{p^d} at absolute precision p^N.

    modulus is monic of degree d over Z/p^N, LSC first, and divides
    x^(p^d - 1) - 1, so the class of x is a Teichmueller generator.
    """

    p: int
    d: int
    N: int
    modulus: tuple
    _redrows: tuple  # x^(d+i) mod modulus for i in range(d-1)
    _frob_pows: tuple  # (t^p)^i for i in range(d), as coefficient tuples

    @property
    def pN(self) -> int:
        return self.p ** self.N

    def element(self, value, prec=None) -> "PadicElement":
        prec = self.N if prec is None else min(prec, self.N)
        if isinstance(value, PadicElement):
            if value.ctx is not self:
                raise SolomonLabError("element belongs to a different context")
            return value
        if isinstance(value, int):
            coeffs = (value % self.p ** prec,) + (0,) * (self.d - 1)
        else:
            coeffs = tuple(int(c) % self.p ** prec for c in value)
            if len(coeffs) != self.d:
                raise SolomonLabError(f"coefficient vector must have length {self.d}")
        return PadicElement(self, coeffs, prec)

    @property
    def one(self):
        return self.element(1)

    @property
    def zero(self):
        return self.element(0)

    @property
    def teich_gen(self):
        return self.element((0, 1) + (0,) * (self.d - 2)) if self.d > 1 else self.element(
            (-int(self.modulus[0])) % self.pN
        )

    def _mul_vec(self, a, b, mod):
        d = self.d
        if d == 1:
            return ((a[0] * b[0]) % mod,)
        full = [0] * (2 * d - 1)
        for i in range(d):
            ai = a[i]
            if ai:
                for j in range(d):
                    full[i + j] += ai * b[j]
        res = full[:d]
        for i in range(d - 1):
            c = full[d + i] % mod
            if c:
                row = self._redrows[i]
                for j in range(d):
                    res[j] += c * row[j]
        return tuple(x % mod for x in res)

    def __repr__(self):
        return f"PadicContext(p={self.p}, d={self.d}, N={self.N})"


class PadicElement:
    """Immutable element of a PadicContext, known to absolute precision p^prec."""

    __slots__ = ("ctx", "coeffs", "prec")

    def __init__(self, ctx, coeffs, prec):
        self.ctx = ctx
        self.prec = prec
        m = ctx.p ** prec
        self.coeffs = tuple(c % m for c in coeffs)

    # -- basic ring structure -------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, PadicElement):
            if other.ctx is not self.ctx:
                raise SolomonLabError("mixed p-adic contexts")
            return other
        if isinstance(other, int):
            return self.ctx.element(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        prec = min(self.prec, o.prec)
        return PadicElement(self.ctx, tuple(a + b for a, b in zip(self.coeffs, o.coeffs)), prec)

    __radd__ = __add__

    def __neg__(self):
        return PadicElement(self.ctx, tuple(-a for a in self.coeffs), self.prec)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        prec = min(self.prec, o.prec)
        return PadicElement(self.ctx, tuple(a - b for a, b in zip(self.coeffs, o.coeffs)), prec)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        prec = min(self.prec, o.prec)
        vec = self.ctx._mul_vec(self.coeffs, o.coeffs, self.ctx.p ** prec)
        return PadicElement(self.ctx, vec, prec)

    __rmul__ = __mul__

    def __pow__(self, e):
        if e < 0:
            return self.inverse() ** (-e)
        result = self.ctx.element(1, self.prec)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.ctx.element(other)
        if not isinstance(other, PadicElement) or other.ctx is not self.ctx:
            return NotImplemented
        prec = min(self.prec, other.prec)
        m = self.ctx.p ** prec
        return all((a - b) % m == 0 for a, b in zip(self.coeffs, other.coeffs))

    __hash__ = None

    def __repr__(self):
        return f"PadicElement({list(self.coeffs)}, p={self.ctx.p}, d={self.ctx.d}, prec={self.prec})"

    # -- p-adic structure -----------------------------------------------------

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def valuation(self) -> int:
        """min of coefficient valuations; defined for elements nonzero at precision."""
        if self.is_zero():
            raise PrecisionError(
                "element is 0 at its known precision; valuation undetermined",
                available=self.prec,
            )
        p = self.ctx.p
        return min(val_int(c, p) for c in self.coeffs if c)

    def is_unit(self) -> bool:
        return not self.is_zero() and self.valuation() == 0

    def unit_part(self):
        """(u, v) with self = p^v * u and u a unit; u keeps prec - v digits."""
        v = self.valuation()
        pv = self.ctx.p ** v
        return (
            PadicElement(self.ctx, tuple(c // pv for c in self.coeffs), self.prec - v),
            v,
        )

    def inverse(self):
        if not self.is_unit():
            raise PrecisionError("inverse of a non-unit")
        ctx, p = self.ctx, self.ctx.p
        # invert mod p by brute linear algebra via Fermat in F_{p^d}
        z = self._powmod_modp(p ** ctx.d - 2)
        z = ctx.element(z, 1)
        prec = 1
        while prec < self.prec:
            prec = min(2 * prec, self.prec)
            z = PadicElement(ctx, z.coeffs, prec)
            z = z * (ctx.element(2, prec) - PadicElement(ctx, self.coeffs, prec) * z)
        return z

    def _powmod_modp(self, e):
        ctx = self.ctx
        result = (1,) + (0,) * (ctx.d - 1)
        base = tuple(c % ctx.p for c in self.coeffs)
        while e:
            if e & 1:
                result = ctx._mul_vec(result, base, ctx.p)
            base = ctx._mul_vec(base, base, ctx.p)
            e >>= 1
        return result

    def residue(self):
        """coefficient vector mod p (the image in F_{p^d})."""
        return tuple(c % self.ctx.p for c in self.coeffs)

    def teichmuller_part(self):
        """The Teichmueller representative congruent to self mod p (unit input)."""
        if not self.is_unit():
            raise SolomonLabError("Teichmueller part needs a unit")
        x = self
        q = self.ctx.p ** self.ctx.d
        for _ in range(self.prec):
            x = x ** q
        return x

    def frobenius(self):
        """The ring automorphism lifting a -> a^p (identity on the Z_p subring)."""
        ctx = self.ctx
        acc = [0] * ctx.d
        m = ctx.p ** self.prec
        for i, c in enumerate(self.coeffs):
            if c:
                row = ctx._frob_pows[i]
                for j in range(ctx.d):
                    acc[j] += c * row[j]
        return PadicElement(ctx, tuple(a % m for a in acc), self.prec)

    def digits(self):
        """Base-p digit strings per coefficient, least significant first."""
        out = []
        for c in self.coeffs:
            ds = []
            for _ in range(self.prec):
                c, r = divmod(c, self.ctx.p)
                ds.append(str(r))
            out.append(",".join(ds))
        return out

    def as_int(self, _tol_digits=0):
        """The value as an integer mod p^prec, if the element is rational.

        Non-constant coefficients must vanish to the element's precision
        (minus an optional tolerance used by audited callers).
        """
        m = self.ctx.p ** max(1, self.prec - _tol_digits)
        for c in self.coeffs[1:]:
            if c % m:
                raise SolomonLabError("element is not Frobenius-rational")
        return self.coeffs[0]


# ---------------------------------------------------------------------------
# construction


@lru_cache(maxsize=None)
def make_context(p: int, d: int, N: int) -> PadicContext:
    """Deterministic context for Z_{p^d} at precision p^N.

    The modulus is the smallest-lexicographic primitive polynomial mod p,
    Hensel-lifted so that its root is exactly the Teichmueller generator.
    """
    if p == 2 or not sympy.isprime(p):
        raise SolomonLabError(f"p must be an odd prime, got {p}")
    if d < 1:
        raise SolomonLabError("extension degree must be >= 1")
    if N < 2:
        raise SolomonLabError("precision too small to Hensel-lift (need N >= 2)")
    pN = p ** N

    if d == 1:
        # smallest c0 with -c0 a generator of F_p^x
        for c0 in range(p):
            r = (-c0) % p
            if r == 0:
                continue
            if _is_primitive_root(r, p):
                g = teich_scalar(r, p, N)
                modulus = ((-g) % pN, 1)
                return _finish_context(p, d, N, modulus)
        raise SolomonLabError("unreachable: F_p^x is cyclic")

    m0 = _smallest_primitive_poly(p, d)

    # provisional ring Z/p^N[x]/(m0 lifted with 0..p-1 coefficients)
    prov = _finish_context(p, d, N, tuple(m0[:d]) + (1,), check=False)
    t = prov.element((0, 1) + (0,) * (d - 2))
    q = p ** d
    for _ in range(N):
        t = t ** q
    # minimal polynomial of the Teichmueller unit: product of (x - t^(p^i))
    conj = t
    factors = []
    for _ in range(d):
        factors.append(conj)
        conj = conj ** p
    poly = [prov.element(1)]  # coefficients in prov, LSC first, current poly = 1
    for root in factors:
        new = [prov.element(0)] * (len(poly) + 1)
        for i, c in enumerate(poly):
            new[i + 1] = new[i + 1] + c
            new[i] = new[i] - c * root
        poly = new
    modulus = []
    for c in poly:
        for extra in c.coeffs[1:]:
            if extra % pN:
                raise SolomonLabError("modulus lift failed: non-rational coefficient")
        modulus.append(c.coeffs[0])
    assert modulus[-1] == 1
    return _finish_context(p, d, N, tuple(modulus))


def _is_primitive_root(r, p):
    return all(pow(r, (p - 1) // q, p) != 1 for q in _factor_group_order(p, 1))


def _finish_context(p, d, N, modulus, check=True):
    pN = p ** N
    redrows = []
    if d > 1:
        # x^d = -modulus[:d]; extend to x^(2d-2)
        cur = [(-modulus[j]) % pN for j in range(d)]
        redrows.append(tuple(cur))
        for _ in range(d - 2):
            nxt = [0] + cur[: d - 1]
            c = cur[d - 1]
            if c:
                for j in range(d):
                    nxt[j] = (nxt[j] - c * modulus[j]) % pN
            cur = [x % pN for x in nxt]
            redrows.append(tuple(cur))
    ctx = PadicContext(p, d, N, tuple(x % pN for x in modulus), tuple(redrows), ())
    # frobenius power table
    if d > 1:
        t = ctx.element((0, 1) + (0,) * (d - 2))
        tp = t ** p
        rows = [ctx.element(1).coeffs]
        cur = ctx.element(1)
        for _ in range(d - 1):
            cur = cur * tp
            rows.append(cur.coeffs)
        object.__setattr__(ctx, "_frob_pows", tuple(rows))
    else:
        object.__setattr__(ctx, "_frob_pows", ((1,),))
    if check and d > 1:
        tg = ctx.teich_gen
        if not (tg ** (p ** d - 1) == ctx.one):
            raise SolomonLabError("teich_gen does not have the expected order")
    return ctx


# ---------------------------------------------------------------------------
# the four public operations


def teichmuller(ctx: PadicContext, a) -> PadicElement:
    """Teichmueller lift of a nonzero residue-field element.

    a may be an int (prime-field element), a length-d coefficient vector
    over F_p, or a PadicElement (reduced mod p first).
    """
    if isinstance(a, PadicElement):
        x = ctx.element(a.residue())
    elif isinstance(a, int):
        x = ctx.element(a % ctx.p)
    else:
        x = ctx.element(tuple(int(c) % ctx.p for c in a))
    if all(c == 0 for c in x.coeffs):
        raise SolomonLabError("Teichmueller lift of 0 is undefined")
    q = ctx.p ** ctx.d
    for _ in range(ctx.N):
        x = x ** q
    return x


def iwasawa_log(x: PadicElement) -> PadicElement:
    """Iwasawa logarithm with the branch log_p(p) = 0.

    Writes x = p^v * omega * u with u = 1 mod p and returns log(u) from the
    alternating series.  Signals PrecisionError when the precision budget
    cannot support the series.
    """
    ctx = x.ctx
    if x.is_zero():
        raise PrecisionError("log of 0 at this precision", available=x.prec)
    u, _v = x.unit_part()
    if u.prec < 2:
        raise PrecisionError("not enough digits for the log series", available=u.prec)
    omega = u.teichmuller_part()
    u = u * omega.inverse()
    t = u - ctx.element(1, u.prec)
    prec = t.prec
    kmax, loss = _log_series_bound(ctx.p, prec)
    acc = ctx.element(0, prec)
    power = ctx.element(1, prec)
    for k in range(1, kmax + 1):
        power = power * t
        if power.is_zero():
            break  # all remaining terms vanish at this precision
        vk = val_int(k, ctx.p) if k % ctx.p == 0 else 0
        if vk:
            num, shift = power.unit_part()
            if shift < vk:
                raise PrecisionError("log series term lost too many digits")
            term = PadicElement(ctx, num.coeffs, prec) * ctx.element(
                ctx.p ** (shift - vk) * inv_mod_pk(k // ctx.p ** vk, ctx.p, prec)
            )
        else:
            term = power * ctx.element(inv_mod_pk(k, ctx.p, prec))
        acc = acc + term if k % 2 == 1 else acc - term
    return PadicElement(ctx, acc.coeffs, prec - loss)


def frobenius(x: PadicElement) -> PadicElement:
    return x.frobenius()
