"""Scalar optimization, Laplace-transform quadrature, and shared numeric utilities.

The capacity formulas only ever need one-dimensional unimodal extremization and
one improper integral, so the kernels here stay deliberately small. Randomness
policy for the whole package also lives here: numpy Generator (PCG64) seeded
through SeedSequence, so independent substreams can be split off a single seed.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/golden ratio, the section step


class QuadratureError(RuntimeError):
    """Adaptive quadrature could not reach the requested error target."""

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


def as_rng(seed):
    """Coerce a seed (int, SeedSequence, Generator, or None) into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_rngs(seed, k):
    """Split one seed into k independent generators (stable child order)."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(k)]


def batch_means(x, batch_size=None):
    """Mean and standard error of a correlated series via batch means.

    Splits x into batches of ceil(sqrt(n)) so batch averages decorrelate for
    Markov-dependent inputs (waiting-time functionals). Returns
    (mean, std_error, n_batches).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("batch_means needs at least one sample")
    if np.ptp(x) == 0.0:
        return float(x[0]), 0.0, 1
    if batch_size is None:
        batch_size = math.ceil(math.sqrt(n))
    m = n // batch_size
    if m < 2:
        se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return float(x.mean()), se, 1
    means = x[: m * batch_size].reshape(m, batch_size).mean(axis=1)
    return float(x.mean()), float(means.std(ddof=1) / math.sqrt(m)), m


@dataclass(frozen=True)
class OptimizationResult:
    """Outcome of a 1-D golden-section search."""

    argopt: float
    value: float
    iterations: int
    bracket: tuple
    converged: bool
    boundary: bool = False


def golden_section_extremize(f, lo, hi, tol=1e-8, mode="max"):
    """Golden-section search for the extremum of a unimodal f on [lo, hi].

    Args:
        f: scalar function, evaluable on the closed bracket.
        lo, hi: bracket endpoints, lo < hi.
        tol: stop when the bracket width falls below this.
        mode: "max" or "min".

    Returns an OptimizationResult. If an endpoint value beats the interior
    optimum (monotone f), the endpoint is reported with boundary=True.
    """
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    if mode not in ("max", "min"):
        raise ValueError("mode must be 'max' or 'min'")
    sign = 1.0 if mode == "max" else -1.0

    def g(x):
        v = sign * f(x)
        if not math.isfinite(v):
            raise ValueError(f"objective returned a non-finite value at x={x!r}")
        return v

    a, b = float(lo), float(hi)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    gc, gd = g(c), g(d)
    iterations = 2
    while (b - a) > tol and iterations < 10_000:
        if gc > gd:
            b, d, gd = d, c, gc
            c = b - INVPHI * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + INVPHI * (b - a)
            gd = g(d)
        iterations += 1
    x = 0.5 * (a + b)
    gx = g(x)
    # monotone objectives end up pinned to an edge; report the edge itself
    glo, ghi = g(lo), g(hi)
    boundary = False
    if glo > gx or ghi > gx:
        x, gx = (lo, glo) if glo >= ghi else (hi, ghi)
        boundary = True
    return OptimizationResult(
        argopt=float(x),
        value=sign * gx,
        iterations=iterations,
        bracket=(a, b),
        converged=(b - a) <= tol,
        boundary=boundary,
    )


def quadrature_laplace(p, u, target=1e-9):
    """Laplace transform of p: integral of exp(-u*x) p(x) over x in [0, inf).

    Substitutes t = exp(-u*x), turning the improper integral into
    (1/u) * integral over (0, 1] of p(-ln(t)/u) dt, which handles the tail
    without truncation. Raises QuadratureError (carrying the achieved error
    estimate) if the absolute error target cannot be met.
    """
    if u <= 0:
        raise ValueError("u must be positive")

    def g(t):
        return p(-math.log(t) / u)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        raw, raw_err = integrate.quad(g, 0.0, 1.0, epsabs=target / 10.0, epsrel=1e-12, limit=200)
    value = raw / u
    err = raw_err / u
    if not math.isfinite(value) or err > target:
        raise QuadratureError(
            f"quadrature stalled at error estimate {err:.3e} (target {target:.1e})",
            value=value,
            error_estimate=err,
        )
    return value
