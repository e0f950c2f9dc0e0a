"""Truncated arithmetic in the universal Novikov ring over a prime field.

A :class:`NovikovScalar` is a finite sum ``sum c_i T^{e_i}`` with rational
exponents and coefficients in ``F_p``, known modulo ``T^precision``.  The
subring ``Lambda_0`` is the set of scalars with non-negative valuation.
:class:`LaurentNovikovScalar` adjoins a formal variable ``u`` (truncated at
``u^U``) for the two-variable ring ``Lambda_0[u^-1, u]]``.
"""
from __future__ import annotations

from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Mapping, Optional, Union

Rational = Union[int, Fraction]
Precision = Optional[Fraction]  # None means exact (infinite precision)


class NovikovError(Exception):
    """Base class for errors raised by this package."""


class ModulusMismatch(NovikovError):
    pass


class NotInvertible(NovikovError):
    pass


class PrecisionExhausted(NovikovError):
    """A quantity needed for the answer is not determined at the working precision."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (tuple, list)):
        return Fraction(int(x[0]), int(x[1]))
    if isinstance(x, float):
        raise TypeError("floating point exponents are not accepted; use Fraction")
    return Fraction(x)


def _prec_min(a: Precision, b: Precision) -> Precision:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _prec_add(a: Precision, b: Optional[Fraction]) -> Precision:
    if a is None or b is None:
        return None
    return a + b


@total_ordering
class FieldElement:
    """Residue class modulo a prime."""

    __slots__ = ("p", "value")

    def __init__(self, value: int, p: int):
        self.p = p
        self.value = value % p

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.p != self.p:
                raise ModulusMismatch(f"F_{self.p} vs F_{other.p}")
            return other.value
        return int(other) % self.p

    def __add__(self, other):
        return FieldElement(self.value + self._coerce(other), self.p)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement(self.value - self._coerce(other), self.p)

    def __rsub__(self, other):
        return FieldElement(self._coerce(other) - self.value, self.p)

    def __mul__(self, other):
        return FieldElement(self.value * self._coerce(other), self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.p)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise NotInvertible("zero has no inverse")
        return FieldElement(pow(self.value, -1, self.p), self.p)

    def __truediv__(self, other):
        return self * FieldElement(self._coerce(other), self.p).inverse()

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.p == other.p and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.p
        return NotImplemented

    def __lt__(self, other):
        return self.value < self._coerce(other)

    def __hash__(self):
        return hash((self.p, self.value))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"FieldElement({self.value}, p={self.p})"


class NovikovScalar:
    """Element of Lambda known modulo ``T^precision``.

    ``terms`` is a tuple of ``(exponent, coefficient)`` pairs with strictly
    increasing exponents, coefficients in ``1..p-1`` and every exponent below
    the precision.  Instances are immutable.
    """

    __slots__ = ("p", "terms", "precision")

    def __init__(self, p: int, terms: Union[Mapping, Iterable] = (), precision=None):
        prec = None if precision is None else as_fraction(precision)
        acc: dict = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for e, c in items:
            e = as_fraction(e)
            acc[e] = (acc.get(e, 0) + int(c)) % p
        self.p = p
        self.precision = prec
        self.terms = tuple(
            (e, c) for e, c in sorted(acc.items()) if c and (prec is None or e < prec)
        )

    @classmethod
    def _raw(cls, p, terms, precision):
        obj = cls.__new__(cls)
        obj.p = p
        obj.terms = terms
        obj.precision = precision
        return obj

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls, p: int, precision=None) -> "NovikovScalar":
        return cls(p, (), precision)

    @classmethod
    def one(cls, p: int, precision=None) -> "NovikovScalar":
        return cls(p, ((0, 1),), precision)

    @classmethod
    def monomial(cls, c: int, e, p: int, precision=None) -> "NovikovScalar":
        return cls(p, ((e, c),), precision)

    # basic queries ----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def valuation(self) -> Optional[Fraction]:
        """Smallest exponent, or None for the zero element (valuation +inf)."""
        return self.terms[0][0] if self.terms else None

    def leading_coefficient(self) -> int:
        return self.terms[0][1] if self.terms else 0

    def coefficient(self, e) -> int:
        e = as_fraction(e)
        for ee, c in self.terms:
            if ee == e:
                return c
        return 0

    def in_lambda0(self) -> bool:
        return not self.terms or self.terms[0][0] >= 0

    def _check(self, other: "NovikovScalar"):
        if self.p != other.p:
            raise ModulusMismatch(f"F_{self.p} vs F_{other.p}")

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, int):
            other = NovikovScalar.monomial(other, 0, self.p)
        self._check(other)
        prec = _prec_min(self.precision, other.precision)
        acc = dict(self.terms)
        for e, c in other.terms:
            acc[e] = (acc.get(e, 0) + c) % self.p
        return NovikovScalar._raw(
            self.p,
            tuple((e, c) for e, c in sorted(acc.items()) if c and (prec is None or e < prec)),
            prec,
        )

    __radd__ = __add__

    def __neg__(self):
        p = self.p
        return NovikovScalar._raw(p, tuple((e, (-c) % p) for e, c in self.terms), self.precision)

    def __sub__(self, other):
        if isinstance(other, int):
            other = NovikovScalar.monomial(other, 0, self.p)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            c = other % self.p
            if c == 0:
                return NovikovScalar.zero(self.p, self.precision)
            return NovikovScalar._raw(
                self.p, tuple((e, (x * c) % self.p) for e, x in self.terms), self.precision
            )
        self._check(other)
        prec = _prec_min(
            _prec_add(self.precision, other.valuation() if other.terms else None)
            if self.precision is not None
            else None,
            _prec_add(other.precision, self.valuation() if self.terms else None)
            if other.precision is not None
            else None,
        )
        # zero operands with finite precision: a*0 is known modulo T^(E_0 + v(a))
        if self.precision is not None and not other.terms and other.precision is None:
            prec = None
        if other.precision is not None and not self.terms and self.precision is None:
            prec = None
        if not self.terms and self.precision is not None and other.terms:
            prec = _prec_min(prec, self.precision + other.valuation())
        if not other.terms and other.precision is not None and self.terms:
            prec = _prec_min(prec, other.precision + self.valuation())
        if not self.terms and not other.terms:
            prec = _prec_min(self.precision, other.precision)
        p = self.p
        acc: dict = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = e1 + e2
                if prec is not None and e >= prec:
                    continue
                acc[e] = (acc.get(e, 0) + c1 * c2) % p
        return NovikovScalar._raw(p, tuple((e, c) for e, c in sorted(acc.items()) if c), prec)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, int):
            other = NovikovScalar.monomial(other, 0, self.p)
        if not isinstance(other, NovikovScalar):
            return NotImplemented
        return self.p == other.p and self.terms == other.terms and self.precision == other.precision

    def __hash__(self):
        return hash((self.p, self.terms, self.precision))

    def agrees_with(self, other: "NovikovScalar", E=None) -> bool:
        """Equality of all terms below ``E`` (default: the common precision)."""
        self._check(other)
        bound = _prec_min(self.precision, other.precision)
        if E is not None:
            bound = _prec_min(bound, as_fraction(E))
        a = tuple(t for t in self.terms if bound is None or t[0] < bound)
        b = tuple(t for t in other.terms if bound is None or t[0] < bound)
        return a == b

    def truncate(self, E) -> "NovikovScalar":
        E = None if E is None else as_fraction(E)
        prec = _prec_min(self.precision, E)
        return NovikovScalar._raw(
            self.p, tuple(t for t in self.terms if prec is None or t[0] < prec), prec
        )

    def with_precision(self, E) -> "NovikovScalar":
        """Reinterpret an exact value as known modulo ``T^E``."""
        return self.truncate(E)

    def shift(self, e) -> "NovikovScalar":
        """Multiply by ``T^e`` (exact)."""
        e = as_fraction(e)
        return NovikovScalar._raw(
            self.p,
            tuple((x + e, c) for x, c in self.terms),
            None if self.precision is None else self.precision + e,
        )

    def scale_exponents(self, factor) -> "NovikovScalar":
        f = as_fraction(factor)
        return NovikovScalar._raw(
            self.p,
            tuple((x * f, c) for x, c in self.terms),
            None if self.precision is None else self.precision * f,
        )

    def invert(self, E=None) -> "NovikovScalar":
        return ns_invert(self, E)

    def __repr__(self):
        if not self.terms:
            body = "0"
        else:
            parts = []
            for e, c in self.terms:
                parts.append(f"{c}" if e == 0 else f"{c}*T^{e}")
            body = " + ".join(parts)
        if self.precision is not None:
            body += f" + O(T^{self.precision})"
        return f"<{body} over F_{self.p}>"

    # serialization ----------------------------------------------------
    def to_json(self) -> dict:
        out = {"terms": [[c, e.numerator, e.denominator] for e, c in self.terms]}
        if self.precision is not None:
            out["precision"] = [self.precision.numerator, self.precision.denominator]
        return out

    @classmethod
    def from_json(cls, obj, p: int) -> "NovikovScalar":
        terms = [(Fraction(int(n), int(d)), int(c)) for c, n, d in obj.get("terms", [])]
        prec = obj.get("precision")
        return cls(p, terms, None if prec is None else Fraction(int(prec[0]), int(prec[1])))


# functional aliases ------------------------------------------------------


def ns_add(a: NovikovScalar, b: NovikovScalar) -> NovikovScalar:
    return a + b


def ns_mul(a: NovikovScalar, b: NovikovScalar) -> NovikovScalar:
    return a * b


def ns_invert(a: NovikovScalar, E=None) -> NovikovScalar:
    """Inverse of ``a`` in Lambda.

    Writes ``a = T^v * w`` with ``w`` a unit of Lambda_0 and returns
    ``T^-v * w^-1`` where ``w^-1`` is the geometric series truncated below
    ``T^E``.  If ``w`` is a constant and ``a`` is exact the answer is exact and
    ``E`` may be omitted.
    """
    if a.is_zero():
        raise NotInvertible("zero is not invertible")
    p = a.p
    v = a.valuation()
    c0 = a.leading_coefficient()
    c0inv = pow(c0, -1, p)
    unit_prec = None if a.precision is None else a.precision - v
    rest = [(e - v, c) for e, c in a.terms[1:]]
    if not rest and unit_prec is None and E is None:
        return NovikovScalar._raw(p, ((-v, c0inv),), None)
    bound = _prec_min(unit_prec, None if E is None else as_fraction(E))
    if bound is None:
        raise PrecisionExhausted("inverse of a non-monomial unit needs a precision E")
    # w = c0 (1 + r), r has positive valuation; w^-1 = c0^-1 sum (-r)^k
    r = NovikovScalar(p, [(e, c * c0inv) for e, c in rest], bound)
    term = NovikovScalar.one(p, bound)
    total = NovikovScalar.one(p, bound)
    minus_r = -r
    while True:
        term = term * minus_r
        term = term.truncate(bound)
        if term.is_zero():
            break
        total = total + term
    total = NovikovScalar._raw(p, tuple((e, (c * c0inv) % p) for e, c in total.terms), bound)
    return total.shift(-v)


def rp_rescale(a: NovikovScalar, p: int) -> NovikovScalar:
    """The map induced by ``T -> T^(1/p)``."""
    return a.scale_exponents(Fraction(1, p))


def frobenius_scale(a: NovikovScalar, p: int) -> NovikovScalar:
    """Inverse of :func:`rp_rescale`: ``T -> T^p``."""
    return a.scale_exponents(p)


class LaurentNovikovScalar:
    """Element of ``Lambda_0[u^-1, u]]`` known modulo ``(T^E, u^U)``.

    ``u_terms`` maps integer u-degrees (all below ``u_precision``) to nonzero
    :class:`NovikovScalar` values sharing the T-precision ``precision``.
    """

    __slots__ = ("p", "u_terms", "u_precision", "precision")

    def __init__(self, p: int, u_terms: Mapping[int, NovikovScalar], u_precision: int, precision=None):
        prec = None if precision is None else as_fraction(precision)
        clean = {}
        for k, v in u_terms.items():
            if k >= u_precision:
                continue
            if v.p != p:
                raise ModulusMismatch(f"F_{v.p} vs F_{p}")
            v = v.truncate(prec)
            if not v.is_zero():
                clean[int(k)] = NovikovScalar._raw(p, v.terms, prec)
        self.p = p
        self.u_terms = dict(sorted(clean.items()))
        self.u_precision = int(u_precision)
        self.precision = prec

    @classmethod
    def from_scalar(cls, a: NovikovScalar, u_degree: int, u_precision: int) -> "LaurentNovikovScalar":
        return cls(a.p, {u_degree: a}, u_precision, a.precision)

    def _check(self, other):
        if self.p != other.p:
            raise ModulusMismatch(f"F_{self.p} vs F_{other.p}")

    def u_valuation(self) -> Optional[int]:
        return min(self.u_terms) if self.u_terms else None

    def is_zero(self) -> bool:
        return not self.u_terms

    def __getitem__(self, k: int) -> NovikovScalar:
        return self.u_terms.get(k, NovikovScalar.zero(self.p, self.precision))

    def __add__(self, other):
        self._check(other)
        U = min(self.u_precision, other.u_precision)
        prec = _prec_min(self.precision, other.precision)
        keys = set(self.u_terms) | set(other.u_terms)
        out = {k: (self[k] + other[k]).truncate(prec) for k in keys}
        return LaurentNovikovScalar(self.p, out, U, prec)

    def __neg__(self):
        return LaurentNovikovScalar(
            self.p, {k: -v for k, v in self.u_terms.items()}, self.u_precision, self.precision
        )

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        self._check(other)
        prec = _prec_min(self.precision, other.precision)
        lo_a = self.u_valuation()
        lo_b = other.u_valuation()
        if lo_a is None or lo_b is None:
            U = min(self.u_precision + (lo_b or 0), other.u_precision + (lo_a or 0))
            return LaurentNovikovScalar(self.p, {}, U, prec)
        U = min(self.u_precision + lo_b, other.u_precision + lo_a)
        out: dict = {}
        for i, a in self.u_terms.items():
            for j, b in other.u_terms.items():
                if i + j >= U:
                    continue
                term = (a * b).truncate(prec)
                out[i + j] = out[i + j] + term if i + j in out else term
        return LaurentNovikovScalar(self.p, out, U, prec)

    def __eq__(self, other):
        if not isinstance(other, LaurentNovikovScalar):
            return NotImplemented
        return (
            self.p == other.p
            and self.u_precision == other.u_precision
            and self.precision == other.precision
            and {k: v.terms for k, v in self.u_terms.items()}
            == {k: v.terms for k, v in other.u_terms.items()}
        )

    def __repr__(self):
        body = " + ".join(f"({v})u^{k}" for k, v in self.u_terms.items()) or "0"
        return f"<{body} + O(u^{self.u_precision})>"


def ln_add(a: LaurentNovikovScalar, b: LaurentNovikovScalar) -> LaurentNovikovScalar:
    return a + b


def ln_mul(a: LaurentNovikovScalar, b: LaurentNovikovScalar) -> LaurentNovikovScalar:
    return a * b
