"""Exact truncated jets and formal Laurent series in nu.

Coefficients are Gaussian rationals (``ExactComplex``).  A ``Jet`` is a
polynomial in the five variable groups ``z, zbar, eta, etabar, zeta`` (each of
size ``dim``) truncated at a total degree ``max_degree``; ``trusted_degree``
records the degree up to which the stored coefficients are exact for the
function being represented (``math.inf`` for a polynomial that was never
truncated).  A ``FormalScalar`` is a finite map ``nu power -> Jet`` together
with ``nu_cap``, the highest nu power known exactly.

Internally a monomial is packed into one integer: base ``B = max_degree + 1``
digits hold the exponents, and the most significant digit holds the total
degree.  Monomial multiplication is then integer addition and the degree
truncation is a single comparison.
"""

from __future__ import annotations

import math
from enum import IntEnum
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterator, Mapping, Sequence

from gmpy2 import mpq

__all__ = [
    "CapError",
    "DegenerateMetricError",
    "ExactComplex",
    "FormalScalar",
    "Jet",
    "UntrustedCoefficientError",
    "VarGroup",
    "as_exact",
    "index_arrangements",
    "jet_matrix_invert",
    "matrix_inverse",
    "sorted_indices",
]

INF = math.inf


class CapError(ValueError):
    """Operands disagree on dimension or truncation caps, or caps are too small."""


class UntrustedCoefficientError(ValueError):
    """A coefficient was requested beyond what the truncation determines."""


class DegenerateMetricError(ValueError):
    """The constant term of a matrix to invert is singular."""


def _q(x) -> mpq:
    if isinstance(x, str):
        return mpq(x.strip())
    if isinstance(x, float):
        raise TypeError("floats are not accepted in exact arithmetic")
    return mpq(x)


class ExactComplex:
    """Gaussian rational ``re + i*im`` with exact field operations."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _q(re)
        self.im = _q(im)

    @classmethod
    def _raw(cls, re: mpq, im: mpq) -> "ExactComplex":
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    def __add__(self, other):
        o = as_exact(other)
        return ExactComplex._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = as_exact(other)
        return ExactComplex._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return as_exact(other) - self

    def __neg__(self):
        return ExactComplex._raw(-self.re, -self.im)

    def __mul__(self, other):
        o = as_exact(other)
        return ExactComplex._raw(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def inverse(self) -> "ExactComplex":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("division by exact zero")
        return ExactComplex._raw(self.re / n, -self.im / n)

    def __truediv__(self, other):
        return self * as_exact(other).inverse()

    def __rtruediv__(self, other):
        return as_exact(other) * self.inverse()

    def __pow__(self, n: int) -> "ExactComplex":
        if n < 0:
            return self.inverse() ** -n
        out, base = ONE, self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            base = base * base
        return out

    def conjugate(self) -> "ExactComplex":
        return ExactComplex._raw(self.re, -self.im)

    def __eq__(self, other):
        try:
            o = as_exact(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def is_real(self) -> bool:
        return self.im == 0

    def __repr__(self):
        if self.im == 0:
            return f"ExactComplex({self.re})"
        return f"ExactComplex({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"

    def to_pair(self) -> list[str]:
        return [str(self.re), str(self.im)]


def as_exact(x) -> ExactComplex:
    if isinstance(x, ExactComplex):
        return x
    if isinstance(x, (int, Fraction, str)) or type(x).__name__ == "mpq":
        return ExactComplex._raw(_q(x), mpq(0))
    if isinstance(x, (tuple, list)) and len(x) == 2:
        return ExactComplex(x[0], x[1])
    raise TypeError(f"cannot convert {type(x).__name__} to ExactComplex")


ZERO = ExactComplex(0)
ONE = ExactComplex(1)
I_UNIT = ExactComplex(0, 1)


class VarGroup(IntEnum):
    Z = 0
    ZBAR = 1
    ETA = 2
    ETABAR = 3
    ZETA = 4


NGROUPS = len(VarGroup)
_NILPOTENT = (VarGroup.ETA, VarGroup.ETABAR, VarGroup.ZETA)


def sorted_indices(dim: int, length: int) -> Iterator[tuple[int, ...]]:
    """All sorted multi-indices of the given length over ``range(dim)``."""
    return combinations_with_replacement(range(dim), length)


def index_arrangements(index: Sequence[int]) -> int:
    """Number of tuples whose sorted form is ``index`` (|I|! / prod alpha!)."""
    n = math.factorial(len(index))
    for k in set(index):
        n //= math.factorial(index.count(k))
    return n


class _Packing:
    """Integer encoding of monomials for a fixed (dim, max_degree)."""

    __slots__ = ("dim", "max_degree", "base", "nvars", "deg_unit", "limit", "units")

    _cache: dict = {}

    def __new__(cls, dim: int, max_degree: int):
        key = (dim, max_degree)
        hit = cls._cache.get(key)
        if hit is not None:
            return hit
        obj = super().__new__(cls)
        obj.dim = dim
        obj.max_degree = max_degree
        obj.base = max_degree + 1
        obj.nvars = NGROUPS * dim
        obj.deg_unit = obj.base ** obj.nvars
        obj.limit = (max_degree + 1) * obj.deg_unit
        obj.units = tuple(obj.base ** i for i in range(obj.nvars))
        cls._cache[key] = obj
        return obj

    def pack(self, mono: Sequence[int]) -> int:
        key = 0
        for e, u in zip(mono, self.units):
            key += e * u
        return key + sum(mono) * self.deg_unit

    def unpack(self, key: int) -> tuple[int, ...]:
        key %= self.deg_unit
        out = []
        b = self.base
        for _ in range(self.nvars):
            key, e = divmod(key, b)
            out.append(e)
        return tuple(out)

    def degree(self, key: int) -> int:
        return key // self.deg_unit

    def exponent(self, key: int, pos: int) -> int:
        return (key // self.units[pos]) % self.base


def _conv(x: dict, y: dict, limit: int) -> dict:
    out: dict = {}
    if not x or not y:
        return out
    ys = sorted(y.items())
    get = out.get
    for ka, ca in x.items():
        lim = limit - ka
        for kb, cb in ys:
            if kb >= lim:
                break
            k = ka + kb
            out[k] = get(k, 0) + ca * cb
    return {k: v for k, v in out.items() if v}


def _add(x: dict, y: dict, sign: int = 1) -> dict:
    out = dict(x)
    for k, v in y.items():
        s = out.get(k, 0) + (v if sign > 0 else -v)
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


class Jet:
    """Truncated polynomial in (z, zbar, eta, etabar, zeta) with exact coefficients.

    Instances are immutable; all operations return new jets.
    """

    __slots__ = ("dim", "max_degree", "trusted_degree", "_re", "_im", "_pk")

    def __init__(self, dim: int, max_degree: int, coefficients: Mapping | None = None,
                 trusted_degree: float = INF):
        if dim < 1 or max_degree < 0:
            raise ValueError("dim must be >= 1 and max_degree >= 0")
        self.dim = dim
        self.max_degree = max_degree
        self._pk = _Packing(dim, max_degree)
        re: dict = {}
        im: dict = {}
        nvars = self._pk.nvars
        truncated = False
        for mono, c in (coefficients or {}).items():
            mono = tuple(mono)
            if len(mono) != nvars or any(e < 0 for e in mono):
                raise ValueError(f"monomial {mono} does not have {nvars} nonnegative exponents")
            c = as_exact(c)
            if not c:
                continue
            if sum(mono) > max_degree:
                truncated = True
                continue
            k = self._pk.pack(mono)
            if c.re:
                re[k] = re.get(k, 0) + c.re
            if c.im:
                im[k] = im.get(k, 0) + c.im
        self._re = {k: v for k, v in re.items() if v}
        self._im = {k: v for k, v in im.items() if v}
        trusted = trusted_degree
        if truncated:
            trusted = min(trusted, max_degree)
        if trusted != INF and trusted > max_degree:
            raise ValueError("trusted_degree cannot exceed max_degree for a truncated jet")
        self.trusted_degree = trusted

    @classmethod
    def _make(cls, dim, max_degree, re, im, trusted) -> "Jet":
        obj = object.__new__(cls)
        obj.dim = dim
        obj.max_degree = max_degree
        obj._pk = _Packing(dim, max_degree)
        obj._re = re
        obj._im = im
        obj.trusted_degree = trusted
        return obj

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, dim: int, max_degree: int) -> "Jet":
        return cls._make(dim, max_degree, {}, {}, INF)

    @classmethod
    def constant(cls, dim: int, max_degree: int, value=1) -> "Jet":
        c = as_exact(value)
        pk = _Packing(dim, max_degree)
        key = pk.pack((0,) * pk.nvars)
        return cls._make(dim, max_degree, {key: c.re} if c.re else {},
                         {key: c.im} if c.im else {}, INF)

    @classmethod
    def monomial(cls, dim: int, max_degree: int, exponents: Mapping[tuple[int, int], int],
                 coeff=1) -> "Jet":
        """Jet of ``coeff * prod var**e`` with ``exponents`` keyed by (group, index)."""
        mono = [0] * (NGROUPS * dim)
        for (group, idx), e in exponents.items():
            if not 0 <= idx < dim:
                raise ValueError(f"variable index {idx} out of range for dim {dim}")
            mono[int(group) * dim + idx] += e
        return cls(dim, max_degree, {tuple(mono): coeff})

    @classmethod
    def variable(cls, dim: int, max_degree: int, group: VarGroup, index: int) -> "Jet":
        return cls.monomial(dim, max_degree, {(group, index): 1})

    # -- inspection ---------------------------------------------------
    def _check(self, other: "Jet") -> None:
        if self.dim != other.dim or self.max_degree != other.max_degree:
            raise CapError(
                f"jet mismatch: dim {self.dim} vs {other.dim}, "
                f"max_degree {self.max_degree} vs {other.max_degree}")

    def is_zero(self) -> bool:
        return not self._re and not self._im

    def is_exact(self) -> bool:
        return self.trusted_degree == INF

    def is_real(self) -> bool:
        return not self._im

    @property
    def coefficients(self) -> dict[tuple[int, ...], ExactComplex]:
        keys = set(self._re) | set(self._im)
        zero = mpq(0)
        return {self._pk.unpack(k): ExactComplex._raw(self._re.get(k, zero), self._im.get(k, zero))
                for k in sorted(keys)}

    def items(self) -> Iterator[tuple[tuple[int, ...], ExactComplex]]:
        return iter(self.coefficients.items())

    def degree(self) -> int:
        keys = list(self._re) + list(self._im)
        return max((self._pk.degree(k) for k in keys), default=-1)

    def valuation(self) -> int:
        keys = list(self._re) + list(self._im)
        return min((self._pk.degree(k) for k in keys), default=self.max_degree + 1)

    def coefficient(self, mono: Sequence[int]) -> ExactComplex:
        if sum(mono) > self.max_degree:
            raise UntrustedCoefficientError(f"monomial {tuple(mono)} exceeds max_degree")
        if sum(mono) > self.trusted_degree:
            raise UntrustedCoefficientError(
                f"monomial {tuple(mono)} is beyond trusted degree {self.trusted_degree}")
        k = self._pk.pack(mono)
        return ExactComplex._raw(self._re.get(k, mpq(0)), self._im.get(k, mpq(0)))

    def constant_term(self) -> ExactComplex:
        return self.coefficient((0,) * self._pk.nvars)

    def __repr__(self):
        terms = ", ".join(f"{m}: {c}" for m, c in self.items())
        return f"Jet(dim={self.dim}, D={self.max_degree}, trusted={self.trusted_degree}, {{{terms}}})"

    # -- ring operations ----------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Jet):
            other = Jet.constant(self.dim, self.max_degree, other)
        self._check(other)
        return Jet._make(self.dim, self.max_degree, _add(self._re, other._re),
                         _add(self._im, other._im), min(self.trusted_degree, other.trusted_degree))

    __radd__ = __add__

    def __neg__(self):
        return Jet._make(self.dim, self.max_degree, {k: -v for k, v in self._re.items()},
                         {k: -v for k, v in self._im.items()}, self.trusted_degree)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Jet":
        c = as_exact(c)
        if not c:
            return Jet._make(self.dim, self.max_degree, {}, {}, self.trusted_degree)
        if c.im == 0:
            r = c.re
            return Jet._make(self.dim, self.max_degree, {k: v * r for k, v in self._re.items()},
                             {k: v * r for k, v in self._im.items()}, self.trusted_degree)
        re = _add({k: v * c.re for k, v in self._re.items()},
                  {k: v * c.im for k, v in self._im.items()}, -1)
        im = _add({k: v * c.im for k, v in self._re.items()},
                  {k: v * c.re for k, v in self._im.items()})
        return Jet._make(self.dim, self.max_degree, re, im, self.trusted_degree)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scale(other)
        self._check(other)
        lim = self._pk.limit
        re = _conv(self._re, other._re, lim)
        im: dict = {}
        if self._im or other._im:
            re = _add(re, _conv(self._im, other._im, lim), -1)
            im = _add(_conv(self._re, other._im, lim), _conv(self._im, other._re, lim))
        trusted = min(self.trusted_degree, other.trusted_degree)
        if trusted == INF and not (self.is_zero() or other.is_zero()):
            if self.degree() + other.degree() > self.max_degree:
                trusted = self.max_degree
        return Jet._make(self.dim, self.max_degree, re, im, trusted)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not supported")
        out = Jet.constant(self.dim, self.max_degree, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    # -- calculus and restructuring -------------------------------------
    def diff(self, group: VarGroup, index: int, times: int = 1) -> "Jet":
        """Partial derivative; trusted degree decreases by one per derivative."""
        if not 0 <= index < self.dim:
            raise ValueError(f"variable index {index} out of range for dim {self.dim}")
        out = self
        for _ in range(times):
            out = out._diff1(int(group) * self.dim + index)
        return out

    def _diff1(self, pos: int) -> "Jet":
        pk = self._pk
        unit = pk.units[pos] + pk.deg_unit

        def d(src):
            out = {}
            for k, v in src.items():
                e = pk.exponent(k, pos)
                if e:
                    out[k - unit] = v * e
            return out

        return Jet._make(self.dim, self.max_degree, d(self._re), d(self._im),
                         self.trusted_degree - 1 if self.trusted_degree != INF else INF)

    def diff_multi(self, group: VarGroup, index: Sequence[int]) -> "Jet":
        out = self
        for k in index:
            out = out._diff1(int(group) * self.dim + k)
        return out

    def _map_monomials(self, fn, trusted=None) -> "Jet":
        """Rebuild from ``fn(mono) -> iterable of (mono, coeff)`` (coeff multiplies)."""
        coeffs: dict = {}
        for mono, c in self.items():
            for m2, f in fn(mono):
                coeffs[m2] = coeffs.get(m2, ZERO) + c * f
        t = self.trusted_degree if trusted is None else trusted
        return Jet(self.dim, self.max_degree, coeffs, trusted_degree=t)

    def set_zero(self, *groups: VarGroup) -> "Jet":
        """Substitute 0 for every variable in the given groups."""
        pos = [int(g) * self.dim + i for g in groups for i in range(self.dim)]
        pk = self._pk

        def keep(src):
            return {k: v for k, v in src.items() if all(pk.exponent(k, p) == 0 for p in pos)}

        return Jet._make(self.dim, self.max_degree, keep(self._re), keep(self._im), self.trusted_degree)

    def shift(self, group: VarGroup, by: VarGroup) -> "Jet":
        """Substitute ``x -> x + y`` for x in ``group`` and y in ``by`` (same index).

        The substitution preserves total degree, so truncation commutes with it.
        """
        dim = self.dim
        g0, b0 = int(group) * dim, int(by) * dim

        def expand(mono):
            parts = [((), ONE)]
            for i in range(dim):
                e = mono[g0 + i]
                if e == 0:
                    continue
                parts = [(sub + ((i, j),), c * math.comb(e, j)) for sub, c in parts for j in range(e + 1)]
            for sub, c in parts:
                m2 = list(mono)
                for i, j in sub:
                    m2[g0 + i] -= j
                    m2[b0 + i] += j
                yield tuple(m2), c

        return self._map_monomials(expand)

    def truncate(self, degree: int) -> "Jet":
        pk = self._pk
        lim = (degree + 1) * pk.deg_unit

        def keep(src):
            return {k: v for k, v in src.items() if k < lim}

        dropped = any(k >= lim for k in list(self._re) + list(self._im))
        trusted = self.trusted_degree
        if dropped or (trusted != INF and trusted > degree):
            trusted = min(trusted, degree)
        return Jet._make(self.dim, self.max_degree, keep(self._re), keep(self._im), trusted)

    def with_trusted(self, trusted: float) -> "Jet":
        return Jet._make(self.dim, self.max_degree, self._re, self._im,
                         min(trusted, self.trusted_degree))

    def agrees_with(self, other: "Jet", degree: float | None = None) -> tuple[int, ...] | None:
        """First monomial (by degree) where the jets differ up to the common trust.

        Returns ``None`` when they agree.
        """
        self._check(other)
        horizon = min(self.trusted_degree, other.trusted_degree, self.max_degree)
        if degree is not None:
            horizon = min(horizon, degree)
        diff = self - other
        for mono, c in diff.items():
            if sum(mono) <= horizon and c:
                return mono
        return None

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return (self.dim == other.dim and self.max_degree == other.max_degree
                and self._re == other._re and self._im == other._im)

    def __hash__(self):
        return hash((self.dim, self.max_degree, frozenset(self._re.items()), frozenset(self._im.items())))

    def _nilpotent_degrees(self) -> Iterator[int]:
        pk = self._pk
        pos = [int(g) * self.dim + i for g in _NILPOTENT for i in range(self.dim)]
        for k in list(self._re) + list(self._im):
            yield sum(pk.exponent(k, p) for p in pos)

    def has_nilpotent_constant(self) -> bool:
        """True if some monomial involves none of eta, etabar, zeta."""
        return any(d == 0 for d in self._nilpotent_degrees())

    def nilpotent_valuation(self) -> int:
        return min(self._nilpotent_degrees(), default=self.max_degree + 1)


class FormalScalar:
    """Laurent series ``sum_s nu**s * jet_s`` exact for ``s <= nu_cap``."""

    __slots__ = ("dim", "max_degree", "terms", "nu_cap")

    def __init__(self, dim: int, max_degree: int, terms: Mapping[int, Jet] | None = None,
                 nu_cap: int = 0):
        self.dim = dim
        self.max_degree = max_degree
        self.nu_cap = nu_cap
        clean = {}
        for s, jet in (terms or {}).items():
            if jet.dim != dim or jet.max_degree != max_degree:
                raise CapError("all jets of a FormalScalar must share dim and max_degree")
            if s <= nu_cap and not jet.is_zero():
                clean[s] = jet
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def from_jet(cls, jet: Jet, nu_cap: int, nu_power: int = 0) -> "FormalScalar":
        return cls(jet.dim, jet.max_degree, {nu_power: jet}, nu_cap)

    @classmethod
    def constant(cls, dim: int, max_degree: int, nu_cap: int, value=1) -> "FormalScalar":
        return cls.from_jet(Jet.constant(dim, max_degree, value), nu_cap)

    @property
    def min_order(self) -> int:
        """Lowest nu power with a nonzero stored term (``nu_cap + 1`` if none)."""
        return next(iter(self.terms), self.nu_cap + 1)

    def _check(self, other: "FormalScalar") -> None:
        if self.dim != other.dim or self.max_degree != other.max_degree:
            raise CapError(
                f"series mismatch: dim {self.dim} vs {other.dim}, "
                f"max_degree {self.max_degree} vs {other.max_degree}")

    def _zero(self) -> Jet:
        return Jet.zero(self.dim, self.max_degree)

    def __getitem__(self, s: int) -> Jet:
        if s > self.nu_cap:
            raise UntrustedCoefficientError(f"nu power {s} is beyond nu_cap {self.nu_cap}")
        return self.terms.get(s, self._zero())

    def is_zero(self) -> bool:
        return not self.terms

    def _lift(self, other) -> "FormalScalar":
        if isinstance(other, FormalScalar):
            return other
        if isinstance(other, Jet):
            return FormalScalar.from_jet(other, self.nu_cap)
        return FormalScalar.constant(self.dim, self.max_degree, self.nu_cap, other)

    def __add__(self, other):
        other = self._lift(other)
        self._check(other)
        cap = min(self.nu_cap, other.nu_cap)
        terms = dict(self.terms)
        for s, jet in other.terms.items():
            terms[s] = terms[s] + jet if s in terms else jet
        return FormalScalar(self.dim, self.max_degree, terms, cap)

    __radd__ = __add__

    def __neg__(self):
        return FormalScalar(self.dim, self.max_degree, {s: -j for s, j in self.terms.items()}, self.nu_cap)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "FormalScalar":
        return FormalScalar(self.dim, self.max_degree, {s: j.scale(c) for s, j in self.terms.items()},
                            self.nu_cap)

    def shift_nu(self, k: int) -> "FormalScalar":
        """Multiply by ``nu**k``."""
        return FormalScalar(self.dim, self.max_degree, {s + k: j for s, j in self.terms.items()},
                            self.nu_cap + k)

    def __mul__(self, other):
        if not isinstance(other, (FormalScalar, Jet)):
            return self.scale(other)
        other = self._lift(other)
        self._check(other)
        ma = min(self.min_order, self.nu_cap + 1)
        mb = min(other.min_order, other.nu_cap + 1)
        # Unknown terms above a cap can reach lower orders through a polar part.
        cap = min(self.nu_cap, other.nu_cap, self.nu_cap + mb, other.nu_cap + ma)
        terms: dict[int, Jet] = {}
        for s1, j1 in self.terms.items():
            for s2, j2 in other.terms.items():
                s = s1 + s2
                if s > cap:
                    continue
                p = j1 * j2
                terms[s] = terms[s] + p if s in terms else p
        return FormalScalar(self.dim, self.max_degree, terms, cap)

    __rmul__ = __mul__

    def diff(self, group: VarGroup, index: int, times: int = 1) -> "FormalScalar":
        return FormalScalar(self.dim, self.max_degree,
                            {s: j.diff(group, index, times) for s, j in self.terms.items()}, self.nu_cap)

    def diff_multi(self, group: VarGroup, index: Sequence[int]) -> "FormalScalar":
        return FormalScalar(self.dim, self.max_degree,
                            {s: j.diff_multi(group, index) for s, j in self.terms.items()}, self.nu_cap)

    def map_jets(self, fn) -> "FormalScalar":
        return FormalScalar(self.dim, self.max_degree, {s: fn(j) for s, j in self.terms.items()},
                            self.nu_cap)

    def truncate_nu(self, nu_cap: int) -> "FormalScalar":
        if nu_cap > self.nu_cap:
            raise CapError(f"cannot raise nu_cap from {self.nu_cap} to {nu_cap}")
        return FormalScalar(self.dim, self.max_degree, self.terms, nu_cap)

    def exp(self) -> "FormalScalar":
        """``sum a**n / n!`` for ``a`` nilpotent in (eta, etabar, zeta).

        Every monomial of ``a`` carries at least ``v`` nilpotent variables, so
        ``a**n`` vanishes under the degree cap once ``n * v > max_degree``.
        """
        v = self.max_degree + 1
        for jet in self.terms.values():
            if jet.has_nilpotent_constant():
                raise ValueError("series_exp requires every monomial to contain eta, etabar or zeta")
            v = min(v, jet.nilpotent_valuation())
        out = FormalScalar.constant(self.dim, self.max_degree, self.nu_cap)
        term = out
        for n in range(1, self.max_degree // v + 1):
            term = (term * self).scale(Fraction(1, n))
            out = out + term
        return out

    def coefficient_at(self, nu_power: int, monomial: Sequence[int]) -> ExactComplex:
        if nu_power > self.nu_cap:
            raise UntrustedCoefficientError(f"nu power {nu_power} is beyond nu_cap {self.nu_cap}")
        jet = self.terms.get(nu_power)
        if jet is None:
            if sum(monomial) > self.max_degree:
                raise UntrustedCoefficientError(f"monomial {tuple(monomial)} exceeds max_degree")
            return ZERO
        return jet.coefficient(monomial)

    def trusted_degree(self) -> float:
        return min((j.trusted_degree for j in self.terms.values()), default=INF)

    def first_difference(self, other: "FormalScalar", nu_cap: int | None = None,
                         degree: float | None = None) -> tuple[int, tuple[int, ...]] | None:
        """First (nu power, monomial) where the two series differ, or ``None``."""
        self._check(other)
        cap = min(self.nu_cap, other.nu_cap)
        if nu_cap is not None:
            cap = min(cap, nu_cap)
        for s in sorted(set(self.terms) | set(other.terms)):
            if s > cap:
                break
            bad = self[s].agrees_with(other[s], degree)
            if bad is not None:
                return s, bad
        return None

    def __repr__(self):
        body = ", ".join(f"nu^{s}: {j.coefficients}" for s, j in self.terms.items())
        return f"FormalScalar(cap={self.nu_cap}, {{{body}}})"


def matrix_inverse(a: Sequence[Sequence]) -> list[list[ExactComplex]]:
    """Exact Gauss-Jordan inverse; raises ``ZeroDivisionError`` if singular."""
    n = len(a)
    m = [[as_exact(x) for x in row] + [ONE if i == j else ZERO for j in range(n)]
         for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[col], m[piv] = m[piv], m[col]
        inv = m[col][col].inverse()
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def jet_matrix_invert(h: Sequence[Sequence[Jet]]) -> list[list[Jet]]:
    """Inverse of a matrix of jets by a Neumann series around its constant term."""
    n = len(h)
    if n == 0 or any(len(row) != n for row in h):
        raise ValueError("jet_matrix_invert needs a nonempty square matrix")
    dim, deg = h[0][0].dim, h[0][0].max_degree
    const = [[h[i][j].constant_term() for j in range(n)] for i in range(n)]
    try:
        c_inv = matrix_inverse(const)
    except ZeroDivisionError:
        raise DegenerateMetricError("degenerate pseudo-Kahler metric at base point") from None

    def jc(x):
        return Jet.constant(dim, deg, x)

    def matmul(a, b):
        return [[sum((a[i][k] * b[k][j] for k in range(n)), Jet.zero(dim, deg)) for j in range(n)]
                for i in range(n)]

    c_inv_j = [[jc(x) for x in row] for row in c_inv]
    # h = c (1 + nil) with nil = c^{-1}(h - c), nilpotent modulo the degree cap.
    rest = [[h[i][j] - jc(const[i][j]) for j in range(n)] for i in range(n)]
    nil = matmul(c_inv_j, rest)
    trusted = min(x.trusted_degree for row in h for x in row)
    if any(not x.is_zero() for row in nil for x in row):
        trusted = min(trusted, deg)
    ident = [[jc(1 if i == j else 0) for j in range(n)] for i in range(n)]
    total = ident
    power = ident
    for _ in range(deg):
        power = matmul(power, nil)
        power = [[-x for x in row] for row in power]
        if all(x.is_zero() for row in power for x in row):
            break
        total = [[total[i][j] + power[i][j] for j in range(n)] for i in range(n)]
    result = matmul(total, c_inv_j)
    return [[x.with_trusted(trusted) for x in row] for row in result]
