"""Independent reference computations shared by the test modules."""
import math
from fractions import Fraction


def exact_binomial_cdf(n, p):
    """Whole binomial CDF by big-integer summation; p is taken exactly as a dyadic fraction."""
    frac = Fraction(p)
    a, den = frac.numerator, frac.denominator
    b = den - a
    b_pow = [1]
    for _ in range(n):
        b_pow.append(b_pow[-1] * b)
    scale = den**n
    out, running, a_pow = [], 0, 1
    for j in range(n + 1):
        running += math.comb(n, j) * a_pow * b_pow[n - j]
        a_pow *= a
        out.append(running / scale)  # int true division is correctly rounded
    return out
