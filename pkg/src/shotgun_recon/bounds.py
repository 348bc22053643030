"""Threshold formulas and certified counting bounds.

Counting quantities such as the number of possible grid decks are far beyond
floating point range, so they are carried as base-2 logarithms with a
rigorous error radius (:class:`LogQuantity`).  Log-gamma is evaluated by the
Stirling series in interval arithmetic (mpmath ``iv``) with the standard
remainder bound added explicitly; exact big-integer evaluation serves as the
test oracle for small arguments.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import mpmath
from mpmath import iv

from .grid import InvalidParameter

MARGIN_BITS = 20
MAX_BITS = 20000       # beyond this argument size only the crude bracket is used
STIRLING_TERMS = 12
STIRLING_MIN_X = 40


# --- LogQuantity --------------------------------------------------------------

@dataclass(frozen=True)
class LogQuantity:
    """A positive quantity known through log2 to within +- radius."""
    log2: float
    radius: float
    lo_exact: object = None   # mpf interval endpoints (full precision)
    hi_exact: object = None

    @classmethod
    def from_interval(cls, x) -> "LogQuantity":
        with mpmath.workprec(max(iv.prec, 64)):
            lo, hi = mpmath.mpf(x.a), mpmath.mpf(x.b)
            mid = (lo + hi) / 2
            rad = max(hi - mid, mid - lo)
        return cls(float(mid), float(rad) * (1 + 1e-12) + 1e-300, lo, hi)

    @property
    def lower(self):
        return self.lo_exact if self.lo_exact is not None else mpmath.mpf(self.log2) - self.radius

    @property
    def upper(self):
        return self.hi_exact if self.hi_exact is not None else mpmath.mpf(self.log2) + self.radius

    def widened(self, factor: float) -> "LogQuantity":
        return LogQuantity(self.log2, self.radius * factor)

    def compare(self, other, margin: float = 0.0) -> str:
        """'lt' if certainly self < other - margin, 'gt' if certainly self > other + margin,
        otherwise 'inconclusive'.  ``other`` may be a number or a LogQuantity."""
        with mpmath.workprec(1024):
            if isinstance(other, LogQuantity):
                olo, ohi = other.lower, other.upper
            else:
                olo = ohi = mpmath.mpf(other)
            if self.upper < olo - margin:
                return "lt"
            if self.lower > ohi + margin:
                return "gt"
            return "inconclusive"

    def contains(self, value, slack: float = 0.0) -> bool:
        with mpmath.workprec(1024):
            return self.lower - slack <= value <= self.upper + slack


# --- certified log-gamma and binomials ---------------------------------------------

def _prec_for(x_bits: int) -> int:
    return 80 + x_bits + 2 * max(1, x_bits).bit_length()


def _stirling_lngamma(x, terms: int = STIRLING_TERMS):
    """ln Gamma(x) for an interval x >= STIRLING_MIN_X, remainder included."""
    half_ln_2pi = iv.log(2 * iv.pi) / 2
    s = (x - iv.mpf(0.5)) * iv.log(x) - x + half_ln_2pi
    xinv = 1 / x
    x2inv = xinv * xinv
    pw = xinv
    for j in range(1, terms + 1):
        p, q = mpmath.bernfrac(2 * j)
        s += iv.mpf(p) / (q * (2 * j) * (2 * j - 1)) * pw
        pw = pw * x2inv
    p, q = mpmath.bernfrac(2 * terms + 2)
    rem = abs(iv.mpf(p) / (q * (2 * terms + 2) * (2 * terms + 1))) * pw
    rb = rem.b
    return s + iv.mpf([-rb, rb])


def ln_gamma_int(m: int):
    """Certified interval for ln Gamma(m) = ln((m-1)!) for an integer m >= 1.

    Small arguments are shifted up to the Stirling range; the shift product is
    an exact integer.
    """
    if m < 1:
        raise InvalidParameter("ln_gamma_int needs m >= 1")
    if m <= STIRLING_MIN_X:
        return iv.log(iv.mpf(math.factorial(m - 1)))
    return _stirling_lngamma(iv.mpf(m))


def log2_factorial(m: int) -> LogQuantity:
    iv.prec = _prec_for(max(m, 2).bit_length())
    return LogQuantity.from_interval(ln_gamma_int(m + 1) / iv.log(2))


def _log2_binom_crude(log2_a, b: int):
    """Interval for log2 C(a, b) from (a/b)^b <= C(a, b) <= (e a / b)^b, with
    log2 a given as an interval (valid for 1 <= b <= a)."""
    lb = iv.log(iv.mpf(b)) / iv.log(2)
    lo = b * (log2_a - lb)
    hi = b * (log2_a - lb + 1 / iv.log(2))
    return iv.mpf([lo.a, hi.b])


def log2_binomial(a: int, b: int, max_bits: int = MAX_BITS) -> LogQuantity:
    """Certified log2 of C(a, b) for integers 0 <= b <= a."""
    if not 0 <= b <= a:
        raise InvalidParameter(f"need 0 <= b <= a, got a={a}, b={b}")
    b = min(b, a - b)
    if b == 0:
        return LogQuantity(0.0, 0.0, mpmath.mpf(0), mpmath.mpf(0))
    bits = a.bit_length()
    old = iv.prec
    try:
        if bits > max_bits:
            iv.prec = 256
            log2_a = iv.log(iv.mpf(a)) / iv.log(2)
            return LogQuantity.from_interval(_log2_binom_crude(log2_a, b))
        iv.prec = _prec_for(bits)
        ln = ln_gamma_int(a + 1) - ln_gamma_int(b + 1) - ln_gamma_int(a - b + 1)
        val = ln / iv.log(2)
        # C(a, b) >= 1, so the lower end can be clipped at 0
        if val.a < 0:
            val = iv.mpf([0, max(val.b, 0)])
        return LogQuantity.from_interval(val)
    finally:
        iv.prec = old


def exact_log2(x: int) -> mpmath.mpf:
    """log2 of a positive integer to about 2^-60 absolute accuracy (oracle)."""
    with mpmath.workprec(x.bit_length() + 96):
        return mpmath.log(mpmath.mpf(x), 2)


def exact_log2_binomial(a: int, b: int) -> mpmath.mpf:
    return exact_log2(math.comb(a, b))


# --- grid thresholds -------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdReport:
    k_th: float
    k0: float
    k1: float
    eps: float
    colour_bounds: tuple      # (sqrt(2 log2 n), 2 log2 n + 8)
    graph_bounds: tuple       # (2 sqrt(log2 n), 2 log2 n + 11)


def graph_bounds(n: int) -> tuple:
    l2 = math.log2(n)
    return (math.sqrt(2 * l2), 2 * l2 + 8), (2 * math.sqrt(l2), 2 * l2 + 11)


def grid_threshold(d: int, r: int, n: int, eps: float = 0.1) -> ThresholdReport:
    if d < 2 or r < 2 or n < 2:
        raise InvalidParameter("need d >= 2, r >= 2, n >= 2")
    with mpmath.workdps(40):
        k_th = mpmath.power(d * mpmath.log(n) / mpmath.log(r), mpmath.mpf(1) / d)
    k_th = float(k_th)
    cb, gb = graph_bounds(n)
    return ThresholdReport(k_th, k_th - eps, k_th + 1.0 / d + eps, eps, cb, gb)


class ZeroVerdict(enum.Enum):
    NON_RECONSTRUCTIBLE_WHP = "NonReconstructibleWhp"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class GridZeroReport:
    verdict: ZeroVerdict
    log2_decks: LogQuantity
    log2_colourings: float     # n^d log2 r
    margin: float


def log2_grid_decks(d: int, r: int, n: int, k: int, max_bits: int = MAX_BITS) -> LogQuantity:
    """log2 C(r^(k^d) + (n-k+1)^d - 1, (n-k+1)^d): the number of possible decks."""
    if min(d, r, n, k) < 1 or k > n:
        raise InvalidParameter("need positive parameters with k <= n")
    N = (n - k + 1) ** d
    kd = k ** d
    if kd * math.log2(max(r, 2)) <= max_bits:
        return log2_binomial(r ** kd + N - 1, N, max_bits)
    # r^(k^d) too large to materialise: log2(M + N - 1) lies in [k^d log2 r, k^d log2 r + 1]
    old = iv.prec
    try:
        iv.prec = 256
        l2m = kd * iv.log(iv.mpf(r)) / iv.log(2)
        return LogQuantity.from_interval(_log2_binom_crude(iv.mpf([l2m.a, (l2m + 1).b]), N))
    finally:
        iv.prec = old


def grid_zero_report(d: int, r: int, n: int, k: int, margin: float = MARGIN_BITS) -> GridZeroReport:
    decks = log2_grid_decks(d, r, n, k)
    target = (n ** d) * mpmath.log(r, 2)
    verdict = ZeroVerdict.NON_RECONSTRUCTIBLE_WHP if decks.compare(target, margin) == "lt" \
        else ZeroVerdict.INCONCLUSIVE
    return GridZeroReport(verdict, decks, float(target), margin)


def grid_zero_statement_certified(d: int, r: int, n: int, k: int,
                                  margin: float = MARGIN_BITS) -> ZeroVerdict:
    """NonReconstructibleWhp iff the number of decks is certainly below
    r^(n^d) / 2^margin."""
    return grid_zero_report(d, r, n, k, margin).verdict


# --- graph deck counts ----------------------------------------------------------------------

@dataclass(frozen=True)
class GraphCountReport:
    n: int
    k: int
    r: int
    log2_F: LogQuantity           # coloured deck count
    log2_F_tilde: LogQuantity     # uncoloured deck count
    colour_excess: LogQuantity    # log2(F r^-n)
    graph_excess: LogQuantity     # log2(n! F~ 2^-C(n,2))
    colour_verdict: str           # "certified-small" | "inconclusive"
    graph_verdict: str


def _ceil_classes(k: int, r: int | None, max_bits: int):
    """ceil((e r)^k / k^k * 2^C(k,2)) (r=None drops the r^k factor).

    Returns ("int", A) when A is small enough to pin down exactly, else
    ("log2", interval for log2 A).
    """
    c2 = k * (k - 1) // 2
    rr = 1 if r is None else r
    est_bits = c2 + k * math.log2(math.e * rr / k) + 2
    if est_bits <= max_bits:
        prec = _prec_for(max(int(est_bits), 1))
        for _ in range(6):
            old = iv.prec
            try:
                iv.prec = prec
                x = iv.exp(iv.mpf(k)) * iv.mpf(rr) ** k * iv.mpf(2) ** c2 / iv.mpf(k) ** k
                lo, hi = int(mpmath.ceil(x.a)), int(mpmath.ceil(x.b))
            finally:
                iv.prec = old
            if lo == hi:
                return "int", lo
            prec *= 2
        raise ArithmeticError("could not resolve the ceiling")
    old = iv.prec
    try:
        iv.prec = 256
        l2 = k * (1 + iv.log(iv.mpf(rr)) - iv.log(iv.mpf(k))) / iv.log(2) + c2
        # A = ceil(X) lies in [X, X + 1]; X >= 2^max_bits so log2 grows by < 2^-max_bits
        return "log2", iv.mpf([l2.a, (l2 + iv.mpf(2) ** -100).b])
    finally:
        iv.prec = old


def _log2_deck_count(s: int, A, max_bits: int) -> LogQuantity:
    """log2 C(s + A, A) where A is ("int", value) or ("log2", interval)."""
    kind, val = A
    if kind == "int":
        return log2_binomial(s + val, val, max_bits)
    # C(s + A, A) = C(s + A, s); A >= 2^max_bits >> s, so log2(s+A) <= log2 A + s/A/ln 2 < log2 A + 1
    old = iv.prec
    try:
        iv.prec = 256
        return LogQuantity.from_interval(_log2_binom_crude(iv.mpf([val.a, (val + 1).b]), s))
    finally:
        iv.prec = old


def graph_deck_count_bounds(n: int, k: int, r: int, margin: float = MARGIN_BITS,
                            max_bits: int = MAX_BITS) -> GraphCountReport:
    if not 1 <= k <= n or r < 1:
        raise InvalidParameter("need 1 <= k <= n and r >= 1")
    s = math.comb(n, k)
    F = _log2_deck_count(s, _ceil_classes(k, r, max_bits), max_bits)
    Ft = _log2_deck_count(s, _ceil_classes(k, None, max_bits), max_bits)
    lr = mpmath.log(r, 2) if r > 1 else mpmath.mpf(0)
    c_lo = F.lower - n * lr
    c_hi = F.upper - n * lr
    colour = LogQuantity(float((c_lo + c_hi) / 2), float((c_hi - c_lo) / 2) + 1e-9, c_lo, c_hi)
    nf = log2_factorial(n)
    g_lo = nf.lower + Ft.lower - math.comb(n, 2)
    g_hi = nf.upper + Ft.upper - math.comb(n, 2)
    graph = LogQuantity(float((g_lo + g_hi) / 2), float((g_hi - g_lo) / 2) + 1e-9, g_lo, g_hi)
    cv = "certified-small" if colour.compare(-margin) == "lt" else "inconclusive"
    gv = "certified-small" if graph.compare(-margin) == "lt" else "inconclusive"
    return GraphCountReport(n, k, r, F, Ft, colour, graph, cv, gv)


# --- induced path window ------------------------------------------------------------

def path_length_window(n: int) -> tuple:
    """(l0, l0 + 1) with l0 = floor(2 log2 n + 0.9), computed exactly.

    l0 is the largest integer L with 2^(L - 0.9) <= n^2, i.e. 2^(10L - 9) <= n^20.
    """
    if n < 2:
        raise InvalidParameter("need n >= 2")
    target = n ** 20
    L = (20 * (n.bit_length())) // 10 + 2
    while (1 << max(10 * L - 9, 0)) > target:
        L -= 1
    return L, L + 1
