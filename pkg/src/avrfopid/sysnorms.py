"""H-infinity and H2 norms of stable SISO rational systems.

Both norms work from frequency-response evaluation, so factored and mirrored
systems never have their coefficients expanded.  `h2_norm_lyapunov` is an
independent state-space route kept as a cross-check.

An unbounded norm is reported by raising `InfiniteNorm` rather than by
returning ``inf``; callers decide what a diverging objective is worth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from .ratfun import (
    BIPROPER,
    IMPROPER,
    STRICTLY_PROPER,
    FactoredTF,
    MirroredTF,
    Polynomial,
    RationalTF,
    System,
    poly_roots,
    roots_stable,
    tf_to_ss,
)


class InfiniteNorm(ArithmeticError):
    """The requested system norm is unbounded."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class NormGrid:
    omega_min: float = 1e-6
    omega_max: float = 1e6
    points_per_decade: int = 40
    refine_tol: float = 1e-6

    def __post_init__(self):
        if not (0 < self.omega_min < self.omega_max):
            raise ValueError("need 0 < omega_min < omega_max")
        if self.points_per_decade < 20:
            raise ValueError("points_per_decade must be >= 20")
        if self.refine_tol <= 0:
            raise ValueError("refine_tol must be positive")

    def omega(self) -> np.ndarray:
        lo, hi = math.log10(self.omega_min), math.log10(self.omega_max)
        n = int(round((hi - lo) * self.points_per_decade)) + 1
        return np.logspace(lo, hi, n)


DEFAULT_GRID = NormGrid()


def _poles(h: System) -> np.ndarray:
    if isinstance(h, FactoredTF):
        return h.poles_array()
    rat = h.rational if isinstance(h, MirroredTF) else h
    return rat.poles()


def _check(h: System, strictly_proper: bool) -> np.ndarray:
    kind = h.properness()
    if kind == IMPROPER:
        raise InfiniteNorm("improper system")
    if strictly_proper and kind != STRICTLY_PROPER:
        raise InfiniteNorm("H2 norm of a system with direct feedthrough")
    poles = _poles(h)
    if not roots_stable(poles):
        raise InfiniteNorm("unstable system")
    return poles


def _feedthrough(h: System) -> float:
    """``|H(j inf)|`` for a biproper system."""
    if isinstance(h, FactoredTF):
        return abs(h.gain)
    rat = h.rational if isinstance(h, MirroredTF) else h
    return abs(rat.num.leading / rat.den.leading)


def _mag(h: System, omega) -> np.ndarray:
    return np.abs(h.freqresp(np.asarray(omega, dtype=float)))


def _scan_grid(poles, grid: NormGrid) -> np.ndarray:
    w = grid.omega()
    # corner and resonance frequencies of the system itself
    extra = np.abs(poles)
    extra = extra[(extra > grid.omega_min) & (extra < grid.omega_max)]
    return np.unique(np.concatenate([w, extra]))


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, a: float, b: float, tol: float, max_iter: int = 200):
    """Maximize unimodal `f` on [a, b]; returns ``(x, f(x))``."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    best_prev = max(fc, fd)
    for _ in range(max_iter):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        best = max(fc, fd)
        if abs(best - best_prev) <= tol * abs(best) and (b - a) < 1e-10 + tol:
            break
        best_prev = best
    return (c, fc) if fc >= fd else (d, fd)


def hinf_norm(h: System, grid: NormGrid = DEFAULT_GRID) -> float:
    """Peak gain ``max_w |H(jw)|`` of a stable proper system.

    A log-spaced scan (augmented with the pole magnitudes) locates the peak;
    golden-section search on ``log10 w`` between the neighbours of the best
    sample refines it.  The DC value and, for biproper systems, the
    high-frequency limit are also candidates.

    Raises
    ------
    InfiniteNorm
        If `h` is unstable or improper.
    """
    poles = _check(h, strictly_proper=False)
    w = _scan_grid(poles, grid)
    mag = _mag(h, w)
    if not np.all(np.isfinite(mag)):
        raise InfiniteNorm("non-finite frequency response on the scan grid")
    i = int(np.argmax(mag))
    best = float(mag[i])

    u = np.log10(w)
    lo, hi = u[max(i - 1, 0)], u[min(i + 1, len(u) - 1)]
    if hi > lo:
        _, peak = _golden_max(lambda x: float(_mag(h, 10.0**x)), lo, hi, grid.refine_tol)
        best = max(best, peak)

    with np.errstate(all="ignore"):
        dc = float(np.abs(h.freqresp(np.zeros(1)))[0])
    if np.isfinite(dc):
        best = max(best, dc)
    if h.properness() == BIPROPER:
        best = max(best, _feedthrough(h))
    return best


# Gauss-Kronrod 7/15 nodes and weights on [-1, 1]
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.zeros(15)
_WG[1::2] = [
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
    0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
]


def _gk_integrate(f, a: np.ndarray, b: np.ndarray, rel_tol: float, max_rounds: int = 40, max_segments: int = 4096):
    """Vectorized adaptive Gauss-Kronrod over the segments ``[a_i, b_i]``.

    `f` maps an array of abscissae to integrand values.  Segments whose
    Kronrod/Gauss disagreement exceeds their share of the tolerance are
    bisected until everything converges, the disagreement reaches rounding
    level, or more than `max_segments` remain unconverged.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    width_all = float(np.sum(b - a))
    done = 0.0
    for _ in range(max_rounds):
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        x = mid[:, None] + half[:, None] * _XK[None, :]
        fx = f(x.ravel()).reshape(x.shape)
        k = half * (fx @ _WK)
        g = half * (fx @ _WG)
        err = np.abs(k - g)
        scale = abs(done + float(np.sum(k)))
        ok = err <= rel_tol * max(scale, 1e-300) * (b - a) / width_all + 1e-300
        # differences at rounding level cannot be resolved by splitting
        ok |= err <= 1e3 * np.finfo(float).eps * half * (np.abs(fx) @ _WK)
        done += float(np.sum(k[ok]))
        if np.all(ok):
            return done
        if np.count_nonzero(~ok) > max_segments:
            return done + float(np.sum(k[~ok]))
        a, b = a[~ok], b[~ok]
        m = 0.5 * (a + b)
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
    return done + float(np.sum(k[~ok]))


def _log_slope(h: System, w: float) -> float:
    """``d ln |H|^2 / d ln w`` by a central difference."""
    e = 1e-3
    m1, m2 = _mag(h, [w * math.exp(-e), w * math.exp(e)])
    return float((2 * math.log(m2) - 2 * math.log(m1)) / (2 * e))


def h2_norm_quadrature(h: System, grid: NormGrid = DEFAULT_GRID, rel_tol: float = 1e-11) -> float:
    """H2 norm ``sqrt((1/pi) int_0^inf |H(jw)|^2 dw)`` by adaptive quadrature.

    Integrates in ``u = ln w`` over whole decades, then extends the range
    downward and upward until the analytic tail estimate falls below 1e-8 of
    the accumulated integral, and adds that tail estimate.

    Raises
    ------
    InfiniteNorm
        If `h` is unstable or not strictly proper.
    """
    poles = _check(h, strictly_proper=True)

    def f(u):
        w = np.exp(u)
        return np.abs(h.freqresp(w)) ** 2 * w

    pm = np.abs(poles[poles != 0]) if poles.size else np.zeros(0)
    lo = min(grid.omega_min, pm.min() / 1e3) if pm.size else grid.omega_min
    hi = max(grid.omega_max, pm.max() * 1e3) if pm.size else grid.omega_max
    lo_d, hi_d = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    edges = np.arange(lo_d, hi_d + 1) * math.log(10.0)
    total = _gk_integrate(f, edges[:-1], edges[1:], rel_tol)
    if not np.isfinite(total):
        raise InfiniteNorm("non-finite integrand")

    ln10 = math.log(10.0)
    for _ in range(60):
        w_lo = 10.0**lo_d
        m = float(_mag(h, w_lo)) ** 2
        slope = _log_slope(h, w_lo) if m > 0 else 0.0
        tail_lo = m * w_lo / (1.0 + slope) if slope > -1 else math.inf
        if tail_lo <= 1e-8 * total:
            break
        total += _gk_integrate(f, np.array([(lo_d - 2) * ln10]), np.array([lo_d * ln10]), rel_tol)
        lo_d -= 2
    else:
        raise InfiniteNorm("H2 integrand does not decay toward w = 0")

    for _ in range(60):
        w_hi = 10.0**hi_d
        m = float(_mag(h, w_hi)) ** 2
        slope = _log_slope(h, w_hi) if m > 0 else -math.inf
        tail_hi = m * w_hi / (-slope - 1.0) if slope < -1 else math.inf
        if tail_hi <= 1e-8 * total:
            break
        total += _gk_integrate(f, np.array([hi_d * ln10]), np.array([(hi_d + 2) * ln10]), rel_tol)
        hi_d += 2
    else:
        raise InfiniteNorm("H2 integrand does not decay as w -> inf")

    return math.sqrt((total + tail_lo + tail_hi) / math.pi)


def h2_norm_lyapunov(h: RationalTF) -> float:
    """H2 norm from the controllability Gramian ``A P + P A' + B B' = 0``."""
    if isinstance(h, MirroredTF):
        h = h.rational
    elif isinstance(h, FactoredTF):
        h = h.to_rational()
    _check(h, strictly_proper=True)
    ss = tf_to_ss(h)
    if ss.A.shape[0] == 0:
        return 0.0
    P = solve_continuous_lyapunov(ss.A, -ss.B @ ss.B.T)
    val = float((ss.C @ P @ ss.C.T).item())
    return math.sqrt(max(val, 0.0))


def _deflate(p: Polynomial, r: complex) -> Polynomial:
    """Divide `p` by ``(s - r)`` for a root near the origin, dropping the remainder."""
    c = p.coeffs
    if c[0] == 0.0:
        return Polynomial(c[1:])
    r = float(np.real(r))
    n = len(c) - 1
    q = np.zeros(n)
    q[n - 1] = c[n]
    for k in range(n - 1, 0, -1):
        q[k - 1] = c[k] + r * q[k]
    return Polynomial(q)


def _origin_root(p: Polynomial, tol: float):
    if p.degree < 1:
        return None
    if p.coeffs[0] == 0.0:
        return 0.0
    r = poly_roots(p)
    i = int(np.argmin(np.abs(r)))
    return r[i] if abs(r[i]) < tol else None


def cancel_origin(h, tol: float = 1e-7):
    """Remove matched zero/pole pairs sitting at the origin.

    Works on `RationalTF` and on the rational part of a `MirroredTF` (whose
    pointwise evaluator is unaffected for w > 0).  Systems without a matching
    pair come back unchanged.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if isinstance(h, MirroredTF):
        return h.with_rational(cancel_origin(h.rational, tol))
    num, den = h.num, h.den
    changed = False
    while True:
        rz = _origin_root(num, tol)
        if rz is None:
            break
        rp = _origin_root(den, tol)
        if rp is None:
            break
        num, den = _deflate(num, rz), _deflate(den, rp)
        changed = True
    return RationalTF(num, den) if changed else h
