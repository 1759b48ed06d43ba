"""Oustaloup rationalization of s^alpha and the filtered FOPID controller.

The controller is

    C(s) = Kp + Ki / s^lam + Kd s^mu / (1 + Tf s^mu)

with each fractional power replaced by a rational zero/pole ladder.  Orders
above one are split into an exact integer monomial times a ladder for the
fractional remainder, so an integral order in (1, 2] keeps its exact pole at
the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ratfun import FactoredTF, MirroredTF, Polynomial, RationalTF, tf_connect


class RealizationError(ValueError):
    """The controller could not be realized as a rational transfer function."""


@dataclass(frozen=True)
class OustaloupConfig:
    """Fitting band ``[omega_b, omega_h]`` (rad/s) and ladder half-order N.

    The ladder has 2N+1 zero/pole pairs.  N=5 is the default because it is
    the setting that reproduces the published best-compromise objective
    values; N=2 (a fifth-order filter) is the other common reading.
    """

    omega_b: float = 1e-4
    omega_h: float = 1e4
    half_order: int = 5

    def __post_init__(self):
        if not (0 < self.omega_b < self.omega_h):
            raise ValueError("need 0 < omega_b < omega_h")
        if int(self.half_order) != self.half_order or self.half_order < 1:
            raise ValueError("half_order must be an integer >= 1")


def oustaloup(alpha: float, cfg: OustaloupConfig = OustaloupConfig()) -> FactoredTF:
    """Rational approximation of ``s**alpha`` for ``|alpha| < 1``.

    Returns ``K * prod_k (s + w'_k) / (s + w_k)``, ``k = -N..N``, with
    ``K = omega_h**alpha`` and the zero and pole corner frequencies spread
    geometrically over the fitting band.
    """
    if not abs(alpha) < 1:
        raise ValueError(f"Oustaloup approximation needs |alpha| < 1, got {alpha}")
    wb, wh, n = cfg.omega_b, cfg.omega_h, cfg.half_order
    k = np.arange(-n, n + 1)
    ratio = wh / wb
    w_zero = wb * ratio ** ((k + n + (1 - alpha) / 2) / (2 * n + 1))
    w_pole = wb * ratio ** ((k + n + (1 + alpha) / 2) / (2 * n + 1))
    return FactoredTF(wh**alpha, tuple(-w_zero), tuple(-w_pole))


def frac_power(alpha: float, cfg: OustaloupConfig = OustaloupConfig()) -> FactoredTF:
    """``s**alpha`` for alpha in (0, 2]: exact monomial times a ladder."""
    if not (0 < alpha <= 2):
        raise ValueError(f"fractional order must lie in (0, 2], got {alpha}")
    whole = math.floor(alpha)
    rest = alpha - whole
    mono = FactoredTF(1.0, (0.0,) * whole, ())
    if rest == 0:
        return mono
    return mono * oustaloup(rest, cfg)


@dataclass(frozen=True)
class FopidParams:
    kp: float
    ki: float
    kd: float
    tf_filter: float
    lam: float = 1.0
    mu: float = 1.0

    GENE_NAMES = ("kp", "ki", "kd", "tf_filter", "lam", "mu")

    def __post_init__(self):
        for name in ("kp", "ki", "kd", "tf_filter"):
            v = getattr(self, name)
            if not (0.0 <= v <= 10.0):
                raise ValueError(f"{name}={v} outside [0, 10]")
        for name in ("lam", "mu"):
            v = getattr(self, name)
            if not (0.0 < v <= 2.0):
                raise ValueError(f"{name}={v} outside (0, 2]")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, g) for g in self.GENE_NAMES], dtype=float)

    @classmethod
    def from_array(cls, x) -> "FopidParams":
        return cls(*(float(v) for v in x))

    def as_dict(self) -> dict:
        return {g: getattr(self, g) for g in self.GENE_NAMES}


@dataclass(frozen=True)
class Regime:
    """Controller family: allowed ranges for the integral and derivative orders.

    Bounds are half-open ``(lo, hi]``; PID pins both orders to exactly 1.
    """

    tag: str
    lam_bounds: tuple = (1.0, 1.0)
    mu_bounds: tuple = (1.0, 1.0)

    @property
    def fixed_orders(self) -> bool:
        return self.lam_bounds[0] == self.lam_bounds[1] and self.mu_bounds[0] == self.mu_bounds[1]

    def contains(self, p: FopidParams) -> bool:
        def inside(v, b):
            return v == b[0] if b[0] == b[1] else b[0] < v <= b[1]

        return inside(p.lam, self.lam_bounds) and inside(p.mu, self.mu_bounds)


REGIMES = {
    "pid": Regime("PID"),
    "fopid1": Regime("FOPID1", (0.0, 1.0), (0.0, 1.0)),
    "fopid2": Regime("FOPID2", (1.0, 2.0), (0.0, 1.0)),
    "fopid3": Regime("FOPID3", (0.0, 1.0), (1.0, 2.0)),
    "fopid4": Regime("FOPID4", (1.0, 2.0), (1.0, 2.0)),
}


def get_regime(name: str) -> Regime:
    try:
        return REGIMES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown regime {name!r}; choose from {sorted(REGIMES)}") from None


@dataclass(frozen=True)
class RealizedController:
    """Rational form of a FOPID controller plus its factored building blocks."""

    rational: RationalTF
    integral: FactoredTF  # 1 / R_lam(s)
    derivative: FactoredTF  # R_mu(s)
    params: FopidParams = field(repr=False)

    def properness(self) -> str:
        return self.rational.properness()

    def freqresp(self, omega):
        """``C(j omega)`` evaluated from the factored operators."""
        p = self.params
        omega = np.asarray(omega, dtype=float)
        out = np.full(omega.shape, p.kp, dtype=complex)
        if p.ki != 0.0:
            out = out + p.ki * self.integral.freqresp(omega)
        if p.kd != 0.0:
            r = self.derivative.freqresp(omega)
            with np.errstate(invalid="ignore", divide="ignore"):
                out = out + p.kd * r / (1.0 + p.tf_filter * r)
        return out

    def mirrored(self) -> MirroredTF:
        return MirroredTF(self.rational, self.freqresp)


def fopid_realize(p: FopidParams, cfg: OustaloupConfig = OustaloupConfig()) -> RealizedController:
    """Assemble the filtered FOPID controller over a common denominator.

    Terms with a zero gain are dropped before combining, so e.g. a pure
    proportional controller stays a constant.
    """
    integral = frac_power(p.lam, cfg).reciprocal()
    derivative = frac_power(p.mu, cfg)

    total = RationalTF.constant(p.kp)
    if p.ki != 0.0:
        total = tf_connect("parallel", total, integral.to_rational() * p.ki)
    if p.kd != 0.0:
        r = derivative.to_rational()
        # Kd R / (1 + Tf R) with R = N/D  ->  Kd N / (D + Tf N)
        den = r.den + r.num * p.tf_filter
        if den.is_zero:
            raise RealizationError("derivative filter denominator vanished")
        total = tf_connect("parallel", total, RationalTF(r.num * p.kd, den))
    if total.den.is_zero:
        raise RealizationError("controller denominator vanished")
    return RealizedController(total, integral, derivative, p)


def integer_pid(p: FopidParams) -> RationalTF:
    """Direct filtered PID ``Kp + Ki/s + Kd s/(1 + Tf s)`` built without any ladder."""
    kp, ki, kd, tf = p.kp, p.ki, p.kd, p.tf_filter
    num = Polynomial([0.0, 1.0]) * Polynomial([1.0, tf]) * kp
    num = num + Polynomial([1.0, tf]) * ki + Polynomial([0.0, 0.0, kd])
    return RationalTF(num, Polynomial([0.0, 1.0]) * Polynomial([1.0, tf]))
