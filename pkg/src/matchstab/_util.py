from fractions import Fraction
from math import lcm

from .errors import InputError


def to_fraction(x) -> Fraction:
    """Exact rational from int, Fraction, str ('3/4', '0.25') or float (via its repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise InputError(f"not a number: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"not a rational number: {x!r}") from None
    raise InputError(f"not a number: {x!r}")


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def edge_label(u, v) -> str:
    return f"{u}-{v}"


def common_scale(values) -> tuple[int, list[int]]:
    """Least common denominator ``L`` and the integers ``L * v``."""
    fr = [Fraction(v) for v in values]
    den = lcm(*(f.denominator for f in fr)) if fr else 1
    return den, [f.numerator * (den // f.denominator) for f in fr]
