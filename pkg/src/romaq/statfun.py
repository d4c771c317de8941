"""Scalar distribution functions: regularized incomplete gamma, chi-square
CDF/quantile, standard-normal CDF/quantile.

The chi-square quantile inverts the regularized lower incomplete gamma with
a bracketed Newton iteration; the normal quantile uses a rational initial
guess refined by Halley steps on erfc.  Both are accurate to ~1e-12, checked
in the tests against independent oracles.
"""

import math


def _gamma_series(a, x, eps=1e-16, itmax=500):
    # lower regularized gamma P(a, x) by series, valid for x < a + 1
    ap = a
    summ = 1.0 / a
    delta = summ
    for _ in range(itmax):
        ap += 1.0
        delta *= x / ap
        summ += delta
        if abs(delta) < abs(summ) * eps:
            break
    return summ * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a, x, eps=1e-16, itmax=500):
    # upper regularized gamma Q(a, x) by continued fraction, for x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, itmax + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammainc_lower(a, x):
    """Regularized lower incomplete gamma P(a, x)."""
    if x < 0.0 or a <= 0.0:
        raise ValueError("gammainc_lower requires x >= 0 and a > 0")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cf(a, x)


def chi2_cdf(x, dof):
    return gammainc_lower(0.5 * dof, 0.5 * x)


def _chi2_pdf(x, dof):
    if x <= 0.0:
        return 0.0
    k = 0.5 * dof
    return math.exp((k - 1.0) * math.log(x) - 0.5 * x - k * math.log(2.0) - math.lgamma(k))


def chi2_quantile(dof, p):
    """Quantile of the chi-square distribution with ``dof`` degrees of freedom.

    Bracketed Newton on the CDF; |CDF(q) - p| <= 1e-10 on return.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("probability must lie strictly between 0 and 1")
    if dof <= 0:
        raise ValueError("degrees of freedom must be positive")
    # Wilson-Hilferty starting point
    z = normal_quantile(p)
    h = 2.0 / (9.0 * dof)
    x = dof * (1.0 - h + z * math.sqrt(h)) ** 3
    if x <= 0.0:
        x = 0.5 * dof
    lo, hi = 0.0, float(dof)
    while chi2_cdf(hi, dof) < p:
        hi *= 2.0
        if hi > 1e12:
            break
    for _ in range(200):
        f = chi2_cdf(x, dof) - p
        if abs(f) <= 1e-14:
            break
        if f > 0.0:
            hi = min(hi, x)
        else:
            lo = max(lo, x)
        dpdf = _chi2_pdf(x, dof)
        if dpdf > 0.0:
            step = f / dpdf
            xn = x - step
        else:
            xn = 0.5 * (lo + hi)
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-13 * max(1.0, x):
            x = xn
            break
        x = xn
    return x


def normal_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


_ACKLAM_A = (-3.969683028665376e+01, 2.209460984245205e+02,
             -2.759285104469687e+02, 1.383577518672690e+02,
             -3.066479806614716e+01, 2.506628277459239e+00)
_ACKLAM_B = (-5.447609879822406e+01, 1.615858368580409e+02,
             -1.556989798598866e+02, 6.680131188771972e+01,
             -1.328068155288572e+01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01,
             -2.400758277161838e+00, -2.549732539343734e+00,
             4.374664141464968e+00, 2.938163982698783e+00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01,
             2.445134137142996e+00, 3.754408661907416e+00)


def normal_quantile(p):
    """Inverse standard-normal CDF, refined to ~1e-14."""
    if not 0.0 < p < 1.0:
        raise ValueError("probability must lie strictly between 0 and 1")
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    plow, phigh = 0.02425, 1.0 - 0.02425
    if p < plow:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    elif p <= phigh:
        q = p - 0.5
        r = q * q
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    # two Halley refinements against the exact CDF
    for _ in range(2):
        e = normal_cdf(x) - p
        u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
        x = x - u / (1.0 + 0.5 * x * u)
    return x
