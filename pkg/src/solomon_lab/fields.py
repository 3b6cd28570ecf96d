"""Real abelian fields as conductor-subgroup pairs, with subfield lattices,
Frobenius classes, splitting tests and characters of the Galois group."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gcd

import sympy

from .errors import DataError, SolomonLabError


def _unit_group(f: int):
    if f == 1:
        return (1,)
    return tuple(a for a in range(1, f) if gcd(a, f) == 1)


def _close_subgroup(f: int, gens) -> frozenset:
    """Subgroup of (Z/f)^x generated by gens."""
    if f == 1:
        return frozenset({1})
    elems = {1}
    frontier = [1]
    gens = [g % f for g in gens]
    for g in gens:
        if gcd(g, f) != 1:
            raise DataError(f"generator {g} is not a unit mod {f}")
    while frontier:
        x = frontier.pop()
        for g in gens:
            y = (x * g) % f
            if y not in elems:
                elems.add(y)
                frontier.append(y)
    return frozenset(elems)


def _reduction_kernel(f: int, m: int) -> frozenset:
    """Kernel of (Z/f)^x -> (Z/m)^x for m | f."""
    if m == 1:
        return frozenset(_unit_group(f))
    return frozenset(a for a in _unit_group(f) if a % m == 1)


class AbelianFieldSpec:
    """A real abelian field F = fixed field of H <= (Z/f)^x inside Q(zeta_f).

    f must be the true conductor (no proper divisor works), -1 must lie in H
    so that F is totally real, and f is never 2 mod 4.
    """

    __slots__ = ("f", "H", "units", "G", "_rep_index", "_coset_of", "n", "_mul", "_inv")

    def __init__(self, f: int, H_gens, _validated=False):
        if f < 1 or f % 4 == 2:
            raise DataError(f"invalid conductor {f} (must be positive, not 2 mod 4)")
        self.f = f
        H = _close_subgroup(f, H_gens) if H_gens else _close_subgroup(f, [1])
        if f > 2 and (f - 1) not in H:
            raise DataError(
                f"-1 mod {f} is not in the subgroup generated by {sorted(H_gens)}; "
                "the field would not be totally real"
            )
        self.H = H
        self.units = _unit_group(f)
        if len(self.units) % len(H) != 0:
            raise SolomonLabError("subgroup order does not divide phi(f)")
        # cosets, smallest nonnegative representative
        coset_of = {}
        reps = []
        for a in self.units:
            if a in coset_of:
                continue
            coset = sorted((a * h) % f for h in H) if f > 1 else [1]
            rep = coset[0]
            reps.append(rep)
            for c in coset:
                coset_of[c] = rep
        self.G = tuple(sorted(reps))
        self._rep_index = {r: i for i, r in enumerate(self.G)}
        self._coset_of = coset_of
        self.n = len(self.G)
        # conductor minimality
        if not _validated and f > 1:
            for m in sympy.divisors(f)[:-1]:
                if _reduction_kernel(f, m) <= H:
                    raise DataError(
                        f"conductor {f} is not minimal: the field already lives in Q(zeta_{m})"
                    )
        self._mul = None
        self._inv = None

    # -- group structure -------------------------------------------------------

    def coset(self, a: int) -> int:
        """Smallest representative of the coset aH (a coprime to f)."""
        if self.f == 1:
            return 1
        a %= self.f
        if gcd(a, self.f) != 1:
            raise SolomonLabError(f"{a} is not a unit mod {self.f}")
        return self._coset_of[a]

    def index(self, rep: int) -> int:
        return self._rep_index[self.coset(rep)]

    def mul(self, i: int, j: int) -> int:
        if self._mul is None:
            n = self.n
            self._mul = [
                [self.index(self.G[i] * self.G[j]) for j in range(n)] for i in range(n)
            ]
        return self._mul[i][j]

    def inv(self, i: int) -> int:
        if self._inv is None:
            self._inv = [None] * self.n
            for a in range(self.n):
                for b in range(self.n):
                    if self.mul(a, b) == self.identity_index:
                        self._inv[a] = b
        return self._inv[i]

    @property
    def identity_index(self) -> int:
        return self._rep_index[1]

    @property
    def degree(self) -> int:
        return self.n

    def coset_members(self, rep: int):
        """All integers mod f in the coset of rep."""
        if self.f == 1:
            return (1,)
        r = self.coset(rep)
        return tuple(sorted((r * h) % self.f for h in self.H))

    def __eq__(self, other):
        return isinstance(other, AbelianFieldSpec) and self.f == other.f and self.H == other.H

    def __hash__(self):
        return hash((self.f, self.H))

    def __repr__(self):
        if self.f == 1:
            return "AbelianFieldSpec(Q)"
        return f"AbelianFieldSpec(f={self.f}, H=<{len(self.H)} elts>, degree={self.n})"

    def label(self) -> str:
        gens = subgroup_generators(self.f, self.H)
        return f"f={self.f};H={','.join(map(str, gens))}"


def subgroup_generators(f: int, H: frozenset):
    """A short generating set for H, greedily chosen (deterministic)."""
    if f == 1 or H == {1}:
        return (1,)
    gens = []
    have = frozenset({1})
    for a in sorted(H):
        if a in have:
            continue
        gens.append(a)
        have = _close_subgroup(f, gens)
        if have == H:
            break
    return tuple(gens)


def rationals() -> AbelianFieldSpec:
    return AbelianFieldSpec(1, [1])


@lru_cache(maxsize=None)
def quadratic_field_spec(D: int) -> AbelianFieldSpec:
    """The real quadratic field of fundamental discriminant D > 0 as (f, H)."""
    if D <= 1 or not _is_fundamental(D):
        raise DataError(f"{D} is not a fundamental discriminant > 1")
    f = D
    H = frozenset(a for a in _unit_group(f) if _kronecker(D, a) == 1)
    return AbelianFieldSpec(f, sorted(H))


def _is_fundamental(D: int) -> bool:
    if D % 4 == 1:
        return sympy.factorint(D) and all(e == 1 for e in sympy.factorint(D).values())
    if D % 4 == 0:
        m = D // 4
        if m % 4 in (2, 3):
            return all(e == 1 for e in sympy.factorint(m).values())
    return False


def _kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for n >= 1."""
    from sympy.functions.combinatorial.numbers import jacobi_symbol

    if n % 2 == 1:
        return int(jacobi_symbol(a % n if n > 1 else 0, n)) if n > 1 else 1
    if a % 2 == 0:
        return 0
    result = 1
    while n % 2 == 0:
        n //= 2
        if a % 8 in (3, 5):
            result = -result
    if n == 1:
        return result
    return result * int(jacobi_symbol(a % n, n))


# ---------------------------------------------------------------------------
# subfield lattice


def _all_subgroups(spec: AbelianFieldSpec):
    """All subgroups of G = (Z/f)^x / H, returned as subsets of G-indices."""
    n = spec.n
    identity = spec.identity_index
    seen = set()
    out = []
    frontier = [frozenset({identity})]
    seen.add(frozenset({identity}))
    while frontier:
        K = frontier.pop()
        out.append(K)
        for g in range(n):
            if g in K:
                continue
            # close K u {g}
            elems = set(K)
            stack = [g]
            elems.add(g)
            while stack:
                x = stack.pop()
                for y in list(elems):
                    for z in (spec.mul(x, y), spec.mul(y, x)):
                        if z not in elems:
                            elems.add(z)
                            stack.append(z)
            K2 = frozenset(elems)
            if K2 not in seen:
                seen.add(K2)
                frontier.append(K2)
    return out


@lru_cache(maxsize=None)
def subfields(spec: AbelianFieldSpec):
    """All subfields of F, each with its true (minimal) conductor; includes Q and F."""
    if spec.f == 1:
        return (spec,)
    out = []
    for K in _all_subgroups(spec):
        # pull back to a subgroup of (Z/f)^x
        Hp = set()
        for idx in K:
            Hp.update(spec.coset_members(spec.G[idx]))
        Hp = frozenset(Hp)
        m = spec.f
        for div in sympy.divisors(spec.f):
            if div % 4 == 2:
                continue
            if _reduction_kernel(spec.f, div) <= Hp:
                m = div
                break
        if m == 1:
            out.append(rationals())
            continue
        Hm = frozenset(a % m for a in Hp)
        out.append(AbelianFieldSpec(m, sorted(Hm), _validated=False))
    out.sort(key=lambda M: (M.degree, M.f, tuple(sorted(M.H))))
    return tuple(out)


# ---------------------------------------------------------------------------
# Frobenius and splitting


def frobenius_class(ell: int, M: AbelianFieldSpec) -> int:
    """The coset of ell in G_M (the Frobenius of an unramified prime ell)."""
    if M.f == 1:
        return 1
    if ell % M.f == 0 or gcd(ell, M.f) != 1:
        raise SolomonLabError(f"{ell} ramifies in the field of conductor {M.f}")
    return M.coset(ell)


def is_totally_split(p: int, F: AbelianFieldSpec) -> bool:
    """True iff the Frobenius of p is trivial, i.e. p mod f lies in H."""
    if F.f == 1:
        return True
    if F.f % p == 0:
        raise SolomonLabError(f"p={p} divides the conductor {F.f} (ramified case unsupported)")
    return (p % F.f) in F.H


# ---------------------------------------------------------------------------
# characters


@dataclass(frozen=True)
class CharacterSpec:
    """A character of G = Gal(F/Q), chi(g) = zeta_order ^ exponents[index(g)]."""

    field: AbelianFieldSpec
    order: int
    exponents: tuple  # indexed by G position, values in Z/order
    conductor: int
    galois_class: int  # index shared by Galois-conjugate characters

    def exponent(self, a: int) -> int:
        """Exponent k with chi(a) = zeta_order^k, for a coprime to f."""
        return self.exponents[self.field.index(a)]

    @property
    def is_trivial(self) -> bool:
        return self.order == 1

    def exponent_primitive(self, a: int) -> int:
        """chi viewed as a primitive character mod its conductor, evaluated at a.

        a must be coprime to the conductor; a lift coprime to f is chosen.
        """
        fx = self.conductor
        if fx == 1:
            return 0
        if gcd(a, fx) != 1:
            raise SolomonLabError(f"{a} is not coprime to the conductor {fx}")
        f = self.field.f
        rest = 1
        for q in sympy.primefactors(f):
            if fx % q != 0:
                rest *= q ** sympy.multiplicity(q, f)
        b = _crt(a % fx, fx, 1, rest)
        return self.exponent(b)

    def kernel_field(self) -> AbelianFieldSpec:
        """The field cut out by chi (fixed field of ker chi), at its conductor."""
        F = self.field
        if self.order == 1:
            return rationals()
        ker = set()
        for i, rep in enumerate(F.G):
            if self.exponents[i] % self.order == 0:
                ker.update(F.coset_members(rep))
        Hx = frozenset(a % self.conductor for a in ker)
        return AbelianFieldSpec(self.conductor, sorted(Hx))


def _crt(a1, m1, a2, m2):
    if m2 == 1:
        return a1 % m1 if m1 > 1 else 1
    if m1 == 1:
        return a2 % m2
    r, _ = sympy.ntheory.modular.crt([m1, m2], [a1, a2])
    return int(r)


def _component_generators(f: int):
    """Generators of (Z/f)^x via CRT over prime powers, with their orders."""
    gens = []
    for q, e in sorted(sympy.factorint(f).items()):
        qe = q ** e
        rest = f // qe
        if q == 2:
            if e == 1:
                continue
            locs = [(qe - 1, 2)] if e == 2 else [(qe - 1, 2), (5, 2 ** (e - 2))]
        else:
            g = sympy.primitive_root(qe)
            locs = [(int(g), qe - qe // q)]
        for loc, order in locs:
            gens.append((_crt(loc, qe, 1, rest), order))
    return gens


@lru_cache(maxsize=None)
def characters(F: AbelianFieldSpec):
    """All characters of G, grouped into Galois-conjugacy classes."""
    if F.f == 1:
        triv = CharacterSpec(F, 1, (0,), 1, 0)
        return (triv,)
    gens = _component_generators(F.f)
    M = 1
    for _, order in gens:
        M = M * order // gcd(M, order)

    # decompose every unit over the generator system by breadth-first closure
    exps = {1: tuple(0 for _ in gens)}
    frontier = [1]
    while frontier:
        x = frontier.pop()
        for i, (g, order) in enumerate(gens):
            y = (x * g) % F.f
            if y not in exps:
                e = list(exps[x])
                e[i] = (e[i] + 1) % order
                exps[y] = tuple(e)
                frontier.append(y)

    chars = []
    from itertools import product as iproduct

    for evec in iproduct(*[range(order) for _, order in gens]):
        # character with chi(gen_i) = zeta_{order_i}^{evec_i}; value exponent in Z/M
        def kM(a, evec=evec):
            e = exps[a]
            t = 0
            for ei, (c, (_, order)) in zip(evec, zip(e, gens)):
                t += ei * c * (M // order)
            return t % M
        if any(kM(h) != 0 for h in F.H):
            continue
        ordchi = M // gcd(M, gcd(*(kM(a) for a in F.units)) or M)
        step = M // ordchi
        exponents = tuple((kM(rep) // step) % ordchi for rep in F.G)
        # conductor
        cond = F.f
        for div in sympy.divisors(F.f):
            if div % 4 == 2:
                continue
            if all(kM(a) == 0 for a in _reduction_kernel(F.f, div)):
                cond = div
                break
        chars.append((ordchi, exponents, cond))

    # Galois classes: chi ~ chi^t, gcd(t, ord) = 1
    keyed = {}
    for ordchi, exponents, cond in chars:
        conj = []
        for t in range(1, ordchi + 1):
            if gcd(t, ordchi) == 1:
                conj.append(tuple((t * e) % ordchi for e in exponents))
        key = (ordchi, min(conj), cond)
        keyed.setdefault(key, []).append((ordchi, exponents, cond))
    out = []
    class_ids = {}
    for key in sorted(keyed):
        class_ids[key] = len(class_ids)
    for ordchi, exponents, cond in sorted(chars):
        conj = min(
            tuple((t * e) % ordchi for e in exponents)
            for t in range(1, ordchi + 1)
            if gcd(t, ordchi) == 1
        )
        out.append(
            CharacterSpec(F, ordchi, exponents, cond, class_ids[(ordchi, conj, cond)])
        )
    return tuple(sorted(out, key=lambda c: (c.order, c.exponents)))


def characters_prime_to_p(F: AbelianFieldSpec, p: int):
    """Characters of G whose order is coprime to p (the evaluable ones)."""
    return tuple(c for c in characters(F) if gcd(c.order, p) == 1)


# ---------------------------------------------------------------------------
# catalog files


def parse_catalog(path) -> tuple:
    """Field catalog, one field per line: `f=<int> H=<comma-separated generators>`."""
    specs = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                parts = dict(kv.split("=", 1) for kv in line.split())
                f = int(parts["f"])
                gens = [int(x) for x in parts["H"].split(",") if x]
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: cannot parse field line: {raw!r}") from exc
            specs.append(AbelianFieldSpec(f, gens))
    return tuple(specs)
