"""Scalar search helpers shared by the free-time solver and the cross-check."""
import math

from .errors import BracketExhausted

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def expand_bracket(f, x0, lo=0.0, hi=math.inf, grow=2.0, max_steps=60):
    """Find ``a < b < c`` with ``f(b) <= min(f(a), f(c))`` on ``(lo, hi]``.

    Steps geometrically away from ``x0``.  Raises BracketExhausted if the
    function keeps decreasing up to ``hi`` or down to ``lo``.  Infinite
    values (infeasible points) push the search upward.
    Returns ``((a, fa), (b, fb), (c, fc))``.
    """
    b = x0
    a, c = b / grow, b * grow
    fa, fb, fc = f(a), f(b), f(c)
    for _ in range(max_steps):
        if fb <= fa and fb <= fc and math.isfinite(fb):
            return (a, fa), (b, fb), (c, fc)
        if fa < fb and fa <= fc:
            if a / grow <= lo:
                raise BracketExhausted(
                    f"objective still decreasing at the lower limit {a:.4g}")
            c, fc, b, fb = b, fb, a, fa
            a = a / grow
            fa = f(a)
        else:
            if c * grow > hi:
                raise BracketExhausted(
                    f"objective still decreasing at the bracket cap {hi:.4g}")
            a, fa, b, fb = b, fb, c, fc
            c = c * grow
            fc = f(c)
    raise BracketExhausted("no bracket found within the step limit")


def golden_section(f, bracket, rtol=1e-4, max_iter=200):
    """Golden-section refinement of a bracket from :func:`expand_bracket`.

    Returns ``(x_best, f_best, (a, c))``.
    """
    (a, fa), (b, fb), (c, fc) = bracket
    # place the second interior point in the larger sub-interval
    for _ in range(max_iter):
        if c - a <= rtol * abs(b):
            break
        if c - b > b - a:
            x = b + (1 - INVPHI) * (c - b)
            fx = f(x)
            if fx <= fb:
                a, fa, b, fb = b, fb, x, fx
            else:
                c, fc = x, fx
        else:
            x = b - (1 - INVPHI) * (b - a)
            fx = f(x)
            if fx <= fb:
                c, fc, b, fb = b, fb, x, fx
            else:
                a, fa = x, fx
    return b, fb, (a, c)
