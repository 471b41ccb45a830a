"""Exact JSON encodings: rationals as "p/q" strings, complex numbers as [re, im]."""

from __future__ import annotations

from typing import Mapping, Sequence

from gmpy2 import mpq

from .series import ZERO, ExactComplex, FormalScalar, Jet, as_exact

__all__ = ["format_complex", "format_rational", "jet_from_json", "jet_to_json",
           "parse_complex", "parse_rational", "scalar_to_json"]


def parse_rational(x) -> mpq:
    if isinstance(x, bool) or isinstance(x, float):
        raise ValueError(f"expected an integer or a 'p/q' string, got {x!r}")
    if isinstance(x, int):
        return mpq(x)
    if isinstance(x, str):
        try:
            return mpq(x.strip())
        except ValueError:
            raise ValueError(f"not a rational number: {x!r}") from None
    raise ValueError(f"expected an integer or a 'p/q' string, got {x!r}")


def format_rational(q) -> str:
    return str(mpq(q))


def parse_complex(x) -> ExactComplex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError(f"complex values are [re, im] pairs, got {x!r}")
        return ExactComplex(parse_rational(x[0]), parse_rational(x[1]))
    return ExactComplex(parse_rational(x))


def format_complex(c) -> list[str]:
    c = as_exact(c)
    return [format_rational(c.re), format_rational(c.im)]


def jet_from_json(data: Mapping, max_degree: int, base_point: Sequence | None = None) -> Jet:
    """``{"dim": m, "terms": [{"zdeg": [...], "zbardeg": [...], "coeff": [re, im]}]}``.

    With ``base_point`` the polynomial is re-expanded in ``w = z - base_point``,
    the coordinates used by ``PotentialSpec`` jets.
    """
    from .potential import _shift_poly

    dim = int(data["dim"])
    poly: dict = {}
    for t in data["terms"]:
        a = tuple(int(e) for e in t["zdeg"])
        b = tuple(int(e) for e in t["zbardeg"])
        if len(a) != dim or len(b) != dim or min(a + b, default=0) < 0:
            raise ValueError(f"bad monomial {list(a)}, {list(b)} for dim {dim}")
        poly[(a, b)] = poly.get((a, b), ZERO) + parse_complex(t["coeff"])
    if base_point is not None:
        if len(base_point) != dim:
            raise ValueError("function and potential dimensions differ")
        poly = _shift_poly(poly, [as_exact(x) for x in base_point])
    coeffs = {a + b + (0,) * (3 * dim): c for (a, b), c in poly.items()}
    return Jet(dim, max_degree, coeffs)


def jet_to_json(j: Jet) -> list:
    """``[[[zdeg...], [zbardeg...]], re, im]`` entries sorted by monomial."""
    m = j.dim
    out = []
    for mono, c in sorted(j.items()):
        out.append([[list(mono[:m]), list(mono[m:2 * m])], format_rational(c.re), format_rational(c.im)])
    return out


def scalar_to_json(s: FormalScalar, upto: int) -> dict:
    return {str(k): jet_to_json(s[k]) for k in range(s.min_order, upto + 1) if not s[k].is_zero()}
