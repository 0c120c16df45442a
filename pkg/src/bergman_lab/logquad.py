"""Log-domain integration of positive integrands and closed-form tail oracles.

Everything here works with natural logarithms of positive quantities, so the
norm integrals of high tensor powers (which span thousands of orders of
magnitude) never leave double precision.  Infinite tails are cut off where a
concave tail bound certifies that the remaining relative mass is below 1e-16.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import (
    BadParams,
    ConfigError,
    NoDecayCertificate,
    NonNegativeSlope,
    ToleranceNotMet,
)

LOG_ZERO = -math.inf

#: Relative tail mass treated as fully captured when truncating infinite ends.
_TAIL_EPS_LOG = math.log(1e-16)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)

_MAX_DEPTH = 48
_MAX_EXTENSION_STEPS = 100_000


@dataclass(frozen=True)
class LogValue:
    """A nonnegative quantity stored as its natural log; -inf encodes zero.

    Addition and scaling stay in the log domain (max-shifted log-sum-exp),
    so values like exp(-5000) combine without underflow.
    """

    log: float

    @staticmethod
    def zero() -> "LogValue":
        return LogValue(LOG_ZERO)

    @staticmethod
    def from_value(v: float) -> "LogValue":
        if v < 0.0:
            raise ValueError("LogValue encodes nonnegative quantities")
        return LogValue(math.log(v)) if v > 0.0 else LogValue.zero()

    def __add__(self, other: "LogValue") -> "LogValue":
        return LogValue(float(np.logaddexp(self.log, other.log)))

    def scaled(self, c: float) -> "LogValue":
        """Multiply the underlying value by a positive constant."""
        if c <= 0.0:
            raise ValueError("scale factor must be positive")
        return LogValue(self.log + math.log(c))

    def value(self) -> float:
        """Materialize the value; refuses when exp would overflow."""
        if self.log > 700.0:
            raise OverflowError("value too large to materialize; keep it in log form")
        return math.exp(self.log)


def logsumexp(arr) -> float:
    """Max-shifted log-sum-exp of an array of logs; -inf for an empty sum."""
    a = np.asarray(arr, dtype=float)
    if a.size == 0:
        return LOG_ZERO
    m = np.max(a)
    if not np.isfinite(m):
        return float(m) if m == math.inf else LOG_ZERO
    return float(m + np.log(np.sum(np.exp(a - m))))


def log_diff_exp(a: float, b: float) -> float:
    """log(e^a - e^b) for a >= b."""
    if b > a:
        raise ValueError("log_diff_exp needs a >= b")
    if b == a:
        return LOG_ZERO
    if b == LOG_ZERO:
        return a
    return a + math.log1p(-math.exp(b - a))


class _VecFun:
    """Wrap a callable so it reliably maps float arrays to float arrays."""

    def __init__(self, g):
        self._g = g
        self._vectorized = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self._vectorized is None:
            try:
                out = np.asarray(self._g(t), dtype=float)
                if out.shape == t.shape:
                    self._vectorized = True
                    return out
            except Exception:
                pass
            self._vectorized = False
        if self._vectorized:
            return np.asarray(self._g(t), dtype=float)
        flat = t.ravel()
        out = np.array([float(self._g(float(v))) for v in flat])
        return out.reshape(t.shape)

    def at(self, t: float) -> float:
        return float(self(np.array([t]))[0])


def _panel_log_integral(gv: _VecFun, a: float, b: float, sink) -> float:
    """log of the 16-node Gauss-Legendre estimate of int_a^b e^g."""
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * _GL_NODES
    vals = gv(nodes)
    if sink is not None:
        sink.append(nodes)
    m = np.max(vals)
    if not np.isfinite(m):
        return LOG_ZERO if m == LOG_ZERO else float(m)
    s = float(np.sum(_GL_WEIGHTS * np.exp(vals - m)))
    return float(m + math.log(s * half))


def _adaptive_log_integral(gv, lo, hi, rel_tol, sink) -> float:
    """Adaptive composite GL16 bisection; panels combined in ascending order."""
    n0 = int(min(4096, max(8, math.ceil(hi - lo))))
    edges = np.linspace(lo, hi, n0 + 1)
    coarse = [_panel_log_integral(gv, edges[i], edges[i + 1], sink) for i in range(n0)]
    total0 = logsumexp(coarse)
    # Panels this far below the total cannot move the result at rel_tol.
    floor = total0 + math.log(rel_tol) - math.log(n0) - math.log(1e4)
    tol = 0.25 * rel_tol

    accepted = []

    def refine(a, b, whole, depth):
        mid = 0.5 * (a + b)
        left = _panel_log_integral(gv, a, mid, sink)
        right = _panel_log_integral(gv, mid, b, sink)
        split = float(np.logaddexp(left, right))
        if split == LOG_ZERO and whole == LOG_ZERO:
            accepted.append(LOG_ZERO)
            return
        if abs(split - whole) <= tol or max(split, whole) < floor:
            accepted.append(left)
            accepted.append(right)
            return
        if depth >= _MAX_DEPTH:
            raise ToleranceNotMet(
                f"refinement stalled on [{a:.6g}, {b:.6g}] at depth {depth}"
            )
        refine(a, mid, left, depth + 1)
        refine(mid, b, right, depth + 1)

    for i in range(n0):
        refine(edges[i], edges[i + 1], coarse[i], 0)
    return logsumexp(accepted)


def _locate_peak(gv, lo, hi, seed) -> float:
    """Rough maximizer of g on [lo, hi]; exact location is not needed."""
    span_lo = lo if math.isfinite(lo) else seed - 1e6
    span_hi = hi if math.isfinite(hi) else seed + 1e6
    t = min(max(seed, span_lo), span_hi)
    if gv.at(t) == LOG_ZERO:
        # walk a coarse grid looking for any finite value
        probes = t + np.concatenate([[0.0], 2.0 ** np.arange(0, 40), -(2.0 ** np.arange(0, 40))])
        probes = probes[(probes >= span_lo) & (probes <= span_hi)]
        vals = gv(probes)
        if not np.any(np.isfinite(vals)):
            return math.nan  # integrand is numerically zero everywhere probed
        t = float(probes[int(np.argmax(vals))])

    step = 1.0
    g_t = gv.at(t)
    for _ in range(500):
        up = min(t + step, span_hi)
        dn = max(t - step, span_lo)
        g_up, g_dn = gv.at(up), gv.at(dn)
        if g_t >= g_up and g_t >= g_dn:
            break
        if g_up > g_dn:
            t, g_t = up, g_up
        else:
            t, g_t = dn, g_dn
        if t in (span_lo, span_hi):
            break
        step = min(step * 2.0, 1e100)
    else:
        raise ToleranceNotMet("could not bracket the integrand's maximum")

    # golden-section polish inside [t - step, t + step]
    a = max(t - step, span_lo)
    b = min(t + step, span_hi)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    gc, gd = gv.at(c), gv.at(d)
    for _ in range(80):
        if b - a < 1e-3 * (1.0 + abs(a) + abs(b)):
            break
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - invphi * (b - a)
            gc = gv.at(c)
        else:
            a, c, gc = c, d, gd
            d = a + invphi * (b - a)
            gd = gv.at(d)
    return 0.5 * (a + b)


def _tail_certified(gv, t, running, side) -> bool:
    """Check the concave tail bound at a cut point against the running total."""
    g_t = gv.at(t)
    if g_t == LOG_ZERO:
        return True
    h = 1e-3
    slope = (gv.at(t + h) - gv.at(t - h)) / (2.0 * h)
    if side == "right":
        if slope >= 0.0 or not math.isfinite(slope):
            return False
        bound = g_t - math.log(-slope)
    else:
        if slope <= 0.0 or not math.isfinite(slope):
            return False
        bound = g_t - math.log(slope)
    return bound <= running + _TAIL_EPS_LOG


def log_integrate(
    g,
    lo: float,
    hi: float,
    rel_tol: float = 1e-12,
    *,
    concave_tails: bool = False,
    peak_hint: float | None = None,
    node_sink: list | None = None,
) -> LogValue:
    """log of int_lo^hi e^{g(t)} dt by adaptive composite Gauss-Legendre.

    Panels (16 nodes each) are bisected until their contributions agree to
    ``rel_tol`` and combined by log-sum-exp in ascending-t order, so the
    result is deterministic.  Infinite endpoints require ``concave_tails``:
    the caller certifies that g is eventually concave with negative slope
    toward that end, and the tail is cut where the concave tail bound
    e^{g(c)}/|g'(c)| falls below 1e-16 of the running total.

    Parameters
    ----------
    g : callable
        Maps a float array of t values to an array of g(t); scalar-only
        callables are wrapped automatically.  -inf values are allowed and
        encode an integrand that underflowed to zero.
    lo, hi : float
        Integration bounds, possibly infinite.
    rel_tol : float
        Target relative error of the integral (not of its log).
    concave_tails : bool
        Certificate for infinite endpoints.
    peak_hint : float, optional
        Approximate maximizer of g, used to seed the peak search.
    node_sink : list, optional
        If given, every array of quadrature nodes used is appended to it.

    Raises
    ------
    NoDecayCertificate
        An infinite endpoint was requested without ``concave_tails``.
    ToleranceNotMet
        Refinement stalled, or a tail refused to certify.
    """
    if math.isnan(lo) or math.isnan(hi):
        raise ConfigError("integration bounds must not be NaN")
    if lo > hi:
        raise ConfigError("need lo <= hi")
    if lo == hi:
        return LogValue.zero()
    if rel_tol <= 0.0:
        raise ConfigError("rel_tol must be positive")
    rel_tol = max(rel_tol, 1e-14)

    gv = _VecFun(g)
    infinite = math.isinf(lo) or math.isinf(hi)
    if not infinite:
        return LogValue(_adaptive_log_integral(gv, lo, hi, rel_tol, node_sink))
    if not concave_tails:
        raise NoDecayCertificate(
            "infinite endpoints need the caller's eventual-concavity certificate"
        )

    if peak_hint is not None:
        seed = peak_hint
    elif math.isfinite(lo):
        seed = lo + 1.0
    elif math.isfinite(hi):
        seed = hi - 1.0
    else:
        seed = 0.0
    t_peak = _locate_peak(gv, lo, hi, seed)
    if math.isnan(t_peak):
        return LogValue.zero()

    # Grow a finite window [A, B] around the peak until both tails certify.
    A = max(lo, t_peak - 1.0)
    B = min(hi, t_peak + 1.0)
    running = _panel_log_integral(gv, A, B, None)
    for _ in range(3):
        steps = 0
        while B < hi and not _tail_certified(gv, B, running, "right"):
            running = float(np.logaddexp(running, _panel_log_integral(gv, B, B + 1.0, None)))
            B += 1.0
            steps += 1
            if steps > _MAX_EXTENSION_STEPS:
                raise ToleranceNotMet("right tail failed to certify")
        steps = 0
        while A > lo and not _tail_certified(gv, A, running, "left"):
            running = float(np.logaddexp(running, _panel_log_integral(gv, A - 1.0, A, None)))
            A -= 1.0
            steps += 1
            if steps > _MAX_EXTENSION_STEPS:
                raise ToleranceNotMet("left tail failed to certify")
        total = _adaptive_log_integral(gv, A, B, rel_tol, node_sink)
        # re-check the cuts against the refined total, in case the coarse
        # window pass overestimated the mass
        ok_r = B >= hi or _tail_certified(gv, B, total, "right")
        ok_l = A <= lo or _tail_certified(gv, A, total, "left")
        if ok_r and ok_l:
            return LogValue(total)
        running = total
    raise ToleranceNotMet("tail certification did not stabilize")


def concave_tail_bound(f_val_at_x0: float, f_slope_at_x0: float) -> LogValue:
    """Upper bound for int_{x0}^inf e^f when f is concave past x0.

    The bound is e^{f(x0)} / (-f'(x0)); it is exact for linear f.  The
    caller asserts concavity; only the negative slope is checked here.
    """
    if not f_slope_at_x0 < 0.0:
        raise NonNegativeSlope(f"slope {f_slope_at_x0:g} is not negative")
    return LogValue(f_val_at_x0 - math.log(-f_slope_at_x0))


# -- closed-form tail oracles -------------------------------------------------

def _log_poisson_pmf(j, lam: float):
    j = np.asarray(j, dtype=float)
    return -lam + j * math.log(lam) - gammaln(j + 1.0)


def log_poisson_upper(n: int, lam: float) -> float:
    """log P(Poisson(lam) >= n), summed in the smaller tail in log domain."""
    if lam < 0.0:
        raise BadParams("Poisson rate must be nonnegative")
    n = int(n)
    if n <= 0:
        return 0.0
    if lam == 0.0:
        return LOG_ZERO
    if n <= lam:
        lower = logsumexp(_log_poisson_pmf(np.arange(0, n), lam))
        return math.log1p(-math.exp(lower))
    out = LOG_ZERO
    j0 = n
    chunk = 512
    while True:
        j = np.arange(j0, j0 + chunk)
        block = logsumexp(_log_poisson_pmf(j, lam))
        out = float(np.logaddexp(out, block))
        j0 += chunk
        last = float(_log_poisson_pmf(j0 - 1, lam))
        if j0 > lam + 1.0:
            # geometric remainder:  sum_{j>=j0} pmf <= pmf(j0-1) * j0/(j0-lam)
            rem = last + math.log(j0 / (j0 - lam))
            if rem < out - 60.0:
                return out
        if j0 - n > 50_000_000:
            raise ToleranceNotMet("Poisson tail summation did not terminate")


def log_poisson_lower(n: int, lam: float) -> float:
    """log P(Poisson(lam) <= n)."""
    if lam < 0.0:
        raise BadParams("Poisson rate must be nonnegative")
    n = int(n)
    if n < 0:
        return LOG_ZERO
    if lam == 0.0:
        return 0.0
    if n < lam:
        return logsumexp(_log_poisson_pmf(np.arange(0, n + 1), lam))
    upper = log_poisson_upper(n + 1, lam)
    return math.log1p(-math.exp(upper))


def _log_binomial_pmf(j, k: int, p: float):
    j = np.asarray(j, dtype=float)
    return (
        gammaln(k + 1.0)
        - gammaln(j + 1.0)
        - gammaln(k - j + 1.0)
        + j * math.log(p)
        + (k - j) * math.log1p(-p)
    )


def log_binomial_upper(n: int, k: int, p: float) -> float:
    """log P(Binomial(k, p) >= n), summed in the smaller tail."""
    if not 0.0 <= p <= 1.0:
        raise BadParams("binomial success probability must lie in [0, 1]")
    if k < 0:
        raise BadParams("binomial trial count must be nonnegative")
    n = int(n)
    if n > k:
        raise BadParams(f"threshold {n} exceeds trial count {k}")
    if n <= 0:
        return 0.0
    if p == 0.0:
        return LOG_ZERO
    if p == 1.0:
        return 0.0
    mean = k * p
    if n > mean:
        return logsumexp(_log_binomial_pmf(np.arange(n, k + 1), k, p))
    lower = logsumexp(_log_binomial_pmf(np.arange(0, n), k, p))
    return math.log1p(-math.exp(lower))


def log_binomial_lower(n: int, k: int, p: float) -> float:
    """log P(Binomial(k, p) <= n)."""
    if not 0.0 <= p <= 1.0:
        raise BadParams("binomial success probability must lie in [0, 1]")
    if n < 0:
        return LOG_ZERO
    if n >= k:
        return 0.0
    upper = log_binomial_upper(n + 1, k, p)
    return math.log1p(-math.exp(upper))


def oracle_tail(kind: str, threshold: int, *, rate=None, trials=None, p=None) -> LogValue:
    """Closed-form upper-tail oracles used as independent ground truth.

    ``poisson-upper`` returns log P(Poisson(rate) >= threshold); for integer
    threshold >= 1 this equals the regularized lower incomplete gamma
    gamma(threshold, rate)/Gamma(threshold).  ``binomial-upper`` returns
    log P(Binomial(trials, p) >= threshold).  Absolute error in probability
    is far below 1e-14 (log-domain summation in the smaller tail).
    """
    if threshold < 0:
        raise BadParams("threshold must be a nonnegative integer")
    if kind == "poisson-upper":
        if rate is None:
            raise BadParams("poisson-upper needs rate=")
        return LogValue(log_poisson_upper(int(threshold), float(rate)))
    if kind == "binomial-upper":
        if trials is None or p is None:
            raise BadParams("binomial-upper needs trials= and p=")
        return LogValue(log_binomial_upper(int(threshold), int(trials), float(p)))
    raise BadParams(f"unknown oracle kind {kind!r}")
