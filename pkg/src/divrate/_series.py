"""Certified summation of sum_{i >= start} f(i) for eventually convex, decreasing |f|.

The explicit partial sum is extended in doubling chunks. Once the terms are
locally one-signed with |f| decreasing and convex, the remainder is estimated by the
trapezoid identity

    sum_{i >= N} f(i) = int_N^inf f(x) dx + f(N)/2 + E,   0 <= E <= |f'(N)|/8,

and |f'(N)| <= f(N-1) - f(N) for convex decreasing f (signs flip for a
negative tail). Summation stops when
half of that bracket plus the quadrature error is below ``rtol`` times the
running total.
"""

import math
import warnings

import numpy as np
from scipy import integrate

MAX_TERMS = 2**27


class DivergentSeriesError(ArithmeticError):
    """A tail sum could not be certified within the term budget."""


def _tail_shape_ok(last):
    # last: four consecutive terms f(N-4..N-1); the tail must be one-signed,
    # shrinking in magnitude, with |f| convex
    if not np.all(np.isfinite(last)):
        return False
    mag = -last if last[-1] < 0 else last
    if np.any(mag < 0) or not np.all(np.diff(mag) <= 0):
        return False
    return bool(np.all(mag[:-2] - 2 * mag[1:-1] + mag[2:] >= 0))


def _remainder_integral(f, lower, atol, window=8.0, max_windows=400):
    """int_lower^inf f(x) dx, integrated over windows of fixed width in ln x.

    Heavy tails such as x^-1.1 need the upper limit pushed out to e^hundreds;
    in log coordinates every window is a smooth, bounded integrand.
    """
    def g(s):
        x = np.exp(np.float64(s))
        with np.errstate(over="ignore", under="ignore"):
            return float(f(x) * x)

    total, err, prev = 0.0, 0.0, math.inf
    a = math.log(lower)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for _ in range(max_windows):
            piece, piece_err = integrate.quad(g, a, a + window, epsabs=0.0,
                                              epsrel=1e-13, limit=200)
            total += piece
            err += piece_err
            a += window
            ratio = abs(piece) / prev if 0 < prev < math.inf else 1.0
            prev = abs(piece)
            if ratio < 1.0:
                # past the peak the pieces shrink geometrically
                rest = abs(piece) * ratio / (1.0 - ratio)
                if rest <= atol:
                    return total + rest / 2, err + rest / 2
            if a + window > 700.0:
                break
    raise DivergentSeriesError("remainder integral does not settle before x = e^700")


def certified_sum(term, term_cont, start, rtol=1e-12, first_chunk=256,
                  max_terms=MAX_TERMS):
    """Return sum_{i >= start} term(i) with relative error at most ``rtol``.

    Parameters
    ----------
    term : callable
        Vectorized map from an int64 array of indices to term values.
    term_cont : callable
        Scalar continuous extension of ``term`` used for the remainder
        integral; must agree with ``term`` on integers.
    start : int
        First index of the sum.
    rtol : float
        Target relative error.

    Raises
    ------
    DivergentSeriesError
        If the remainder cannot be certified before ``max_terms`` terms.
    """
    partials = []
    N = int(start)
    chunk = int(first_chunk)
    while N - start < max_terms:
        idx = np.arange(N, N + chunk, dtype=np.int64)
        vals = np.asarray(term(idx), dtype=float)
        partials.append(math.fsum(vals))
        N += chunk
        chunk = min(2 * chunk, 2**22)
        if vals[-1] == 0.0 and vals[-2] == 0.0:
            # Underflowed; for decreasing nonnegative terms the rest is < tiny.
            if np.all(vals[-4:] == 0.0):
                return math.fsum(partials)
        if not _tail_shape_ok(vals[-4:]):
            continue
        head = math.fsum(partials)
        f_N = float(term(np.array([N], dtype=np.int64))[0])
        slope_bound = (float(vals[-1]) - f_N) / 8.0
        integral, quad_err = _remainder_integral(term_cont, N, rtol * abs(head))
        if not (np.isfinite(integral) and np.isfinite(quad_err)):
            continue
        total = head + integral + 0.5 * f_N + 0.5 * slope_bound
        err = 0.5 * abs(slope_bound) + quad_err
        if err <= rtol * abs(total) or total == 0.0:
            return total
    raise DivergentSeriesError(
        f"tail sum from index {start} not certified within {max_terms} terms")
