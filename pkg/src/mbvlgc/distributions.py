"""Tail probabilities for the F, chi-square and standard normal distributions.

The incomplete beta and gamma functions are evaluated with the classic
continued-fraction / power-series pair (modified Lentz for the fractions).
"""
import math

from .errors import InvalidArgument

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000

#: floor applied to p-values before taking logarithms
P_FLOOR = 1e-300


def _betacf(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a, b, x):
    """Regularized incomplete beta ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise InvalidArgument("betainc needs a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise InvalidArgument(f"betainc needs 0 <= x <= 1, got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _gamma_series(a, x):
    # P(a, x) by its power series; valid for x < a + 1
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_cf(a, x):
    # Q(a, x) by continued fraction; valid for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def gammaincc(a, x):
    """Regularized upper incomplete gamma ``Q(a, x)``."""
    if a <= 0:
        raise InvalidArgument("gammaincc needs a > 0")
    if x < 0:
        raise InvalidArgument(f"gammaincc needs x >= 0, got {x}")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)


def f_sf(f, d1, d2):
    """``P(F > f)`` for an F distribution with ``(d1, d2)`` degrees of freedom."""
    if d1 < 1 or d2 < 1:
        raise InvalidArgument(f"degrees of freedom must be >= 1, got ({d1}, {d2})")
    if not f >= 0:
        raise InvalidArgument(f"F statistic must be >= 0, got {f}")
    if f == 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    x = d2 / (d2 + d1 * f)
    return min(1.0, max(0.0, betainc(0.5 * d2, 0.5 * d1, x)))


def chi2_sf(x, k):
    """``P(chi2_k > x)``. Even ``k`` uses the exact finite Poisson sum."""
    if k < 1:
        raise InvalidArgument(f"degrees of freedom must be >= 1, got {k}")
    if not x >= 0:
        raise InvalidArgument(f"chi-square statistic must be >= 0, got {x}")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    half = 0.5 * x
    if k % 2 == 0 and k <= 200:
        term = 1.0
        total = 1.0
        for i in range(1, k // 2):
            term *= half / i
            total += term
        if half < 700:
            return min(1.0, math.exp(-half) * total)
        # exp(-half) underflows; work in logs
        return math.exp(-half + math.log(total))
    return min(1.0, max(0.0, gammaincc(0.5 * k, half)))


def normal_sf(z):
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def normal_cdf(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


# Acklam's rational approximation, refined below by Halley steps
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)


def normal_quantile(p):
    """Inverse standard normal CDF: ``normal_cdf(normal_quantile(p)) == p``."""
    if not 0.0 < p < 1.0:
        raise InvalidArgument(f"quantile needs 0 < p < 1, got {p}")
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        z = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        z = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    else:
        q = math.sqrt(-2.0 * math.log1p(-p))
        z = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    for _ in range(2):
        # residual evaluated in the tail that keeps full relative precision
        if z < 0:
            e = normal_cdf(z) - p
        else:
            e = (1.0 - p) - normal_sf(z)
        u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * z * z)
        z = z - u / (1.0 + 0.5 * z * u)
    return z


def normal_isf(p):
    """Inverse survival function: ``normal_sf(normal_isf(p)) == p``."""
    return -normal_quantile(p)
