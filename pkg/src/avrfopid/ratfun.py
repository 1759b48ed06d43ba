"""Polynomial and rational transfer-function algebra for SISO continuous-time systems.

Three interchangeable system representations live here:

* `RationalTF` -- ratio of real polynomials in monic-denominator normal form.
  Used for structural questions (properness, poles, stability, realization).
* `FactoredTF` -- gain plus zero/pole lists.  Evaluated as a product of
  first-order ratios, so high-order Oustaloup ladders never get expanded
  into badly scaled coefficients.
* `MirroredTF` -- a `RationalTF` paired with an independent pointwise
  evaluator of its frequency response.  Closed-loop maps built from factored
  pieces use this: structure comes from the rational part, numbers from the
  mirror.

No operation here cancels poles against zeros.  That is left to
`avrfopid.sysnorms.cancel_origin`, which has to be called explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.linalg import matrix_balance

# Roots with real part in [-STABILITY_MARGIN, inf) are classified unstable.
STABILITY_MARGIN = 1e-9

STRICTLY_PROPER = "strictly_proper"
BIPROPER = "biproper"
IMPROPER = "improper"


class DegenerateLoopError(ValueError):
    """An interconnection produced an identically zero denominator."""


def _as_coeffs(x) -> np.ndarray:
    if isinstance(x, Polynomial):
        return x.coeffs
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError("polynomial coefficients must be one-dimensional")
    return arr


class Polynomial:
    """Real polynomial with coefficients in ascending powers of s.

    ``Polynomial([1, 2, 3])`` is ``1 + 2s + 3s^2``.  Exact trailing zeros are
    dropped so the leading coefficient is nonzero; the zero polynomial is
    stored as ``[0.0]`` and has degree -1.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = np.array(_as_coeffs(coeffs), dtype=float)
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be finite")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1)
        c.setflags(write=False)
        self._c = c

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        return -1 if self.is_zero else len(self._c) - 1

    @property
    def is_zero(self) -> bool:
        return len(self._c) == 1 and self._c[0] == 0.0

    @property
    def leading(self) -> float:
        return float(self._c[-1])

    @classmethod
    def from_roots(cls, roots: Sequence[complex], gain: float = 1.0) -> "Polynomial":
        """Expand ``gain * prod(s - r)``; conjugate pairs give real coefficients."""
        roots = np.asarray(roots, dtype=complex)
        c = np.array([1.0 + 0j])
        for r in roots:
            c = np.convolve(c, [-r, 1.0])
        return cls(gain * c.real)

    def __call__(self, s):
        return np.polyval(self._c[::-1], s)

    def __repr__(self):
        return f"Polynomial({self._c.tolist()})"

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return np.array_equal(self._c, other._c)

    def __hash__(self):
        return hash(self._c.tobytes())

    def __neg__(self):
        return Polynomial(-self._c)

    def __add__(self, other):
        b = _as_coeffs(other)
        n = max(len(self._c), len(b))
        return Polynomial(np.pad(self._c, (0, n - len(self._c))) + np.pad(b, (0, n - len(b))))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-Polynomial(other))

    def __rsub__(self, other):
        return Polynomial(other) - self

    def __mul__(self, other):
        if np.isscalar(other):
            return Polynomial(self._c * float(other))
        return poly_mul(self, Polynomial(other))

    __rmul__ = __mul__

    def roots(self) -> np.ndarray:
        return poly_roots(self)


def poly_mul(a: Polynomial, b: Polynomial) -> Polynomial:
    """Product of two polynomials (coefficient convolution)."""
    return Polynomial(np.convolve(a.coeffs, b.coeffs))


def poly_roots(p: Polynomial) -> np.ndarray:
    """All roots of `p`, with multiplicity.

    Exact zero low-order coefficients are peeled off as exact roots at the
    origin.  The remaining roots are the eigenvalues of the balanced
    companion matrix of the monic polynomial.

    Raises
    ------
    ValueError
        If `p` is the zero polynomial or a nonzero constant.
    """
    if p.degree < 1:
        raise ValueError("poly_roots needs a polynomial of degree >= 1")
    c = p.coeffs
    n_origin = int(np.flatnonzero(c)[0])
    a = c[n_origin:] / c[-1]
    n = len(a) - 1
    out = np.zeros(n_origin, dtype=complex)
    if n == 0:
        return out
    if n == 1:
        return np.concatenate([out, [-a[0] + 0j]])
    comp = np.zeros((n, n))
    comp[0, :] = -a[-2::-1]
    comp[np.arange(1, n), np.arange(n - 1)] = 1.0
    # the unused permutation output can trip a NaN-to-int cast warning
    with np.errstate(invalid="ignore"):
        bal, _ = matrix_balance(comp, permute=False)
    return np.concatenate([out, np.linalg.eigvals(bal).astype(complex)])


def roots_stable(roots, margin: float = STABILITY_MARGIN) -> bool:
    """True iff every root lies strictly left of ``Re = -margin``."""
    roots = np.asarray(roots)
    return bool(np.all(roots.real < -margin)) if roots.size else True


def poly_is_hurwitz(p: Polynomial, margin: float = STABILITY_MARGIN) -> bool:
    """Strict open-left-half-plane test on the roots of `p`.

    A nonzero constant has no roots and counts as stable.
    """
    if p.is_zero:
        raise ValueError("the zero polynomial has no stability classification")
    if p.degree == 0:
        return True
    return roots_stable(poly_roots(p), margin)


def _properness(rel_degree: int) -> str:
    if rel_degree > 0:
        return STRICTLY_PROPER
    return BIPROPER if rel_degree == 0 else IMPROPER


class RationalTF:
    """SISO transfer function ``num(s) / den(s)`` in monic-denominator form."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=1.0):
        num = num if isinstance(num, Polynomial) else Polynomial(num)
        den = den if isinstance(den, Polynomial) else Polynomial(den)
        if den.is_zero:
            raise DegenerateLoopError("transfer function denominator is identically zero")
        lead = den.leading
        if lead != 1.0:
            # overflow surfaces as a non-finite-coefficient ValueError
            with np.errstate(over="ignore"):
                num = Polynomial(num.coeffs / lead)
                den = Polynomial(den.coeffs / lead)
        self.num = num
        self.den = den

    @classmethod
    def constant(cls, k: float) -> "RationalTF":
        return cls([k], [1.0])

    def __repr__(self):
        return f"RationalTF(num={self.num.coeffs.tolist()}, den={self.den.coeffs.tolist()})"

    def normalized(self) -> "RationalTF":
        return RationalTF(self.num, self.den)

    @property
    def relative_degree(self) -> int:
        if self.num.is_zero:
            return self.den.degree + 1
        return self.den.degree - self.num.degree

    def properness(self) -> str:
        return _properness(self.relative_degree)

    def evaluate(self, s):
        """Value at complex `s`; a zero denominator yields complex infinity."""
        n = self.num(s)
        d = self.den(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(d == 0, complex(np.inf, 0.0), n / np.where(d == 0, 1.0, d))

    def freqresp(self, omega):
        return self.evaluate(1j * np.asarray(omega, dtype=float))

    def poles(self) -> np.ndarray:
        return poly_roots(self.den) if self.den.degree >= 1 else np.zeros(0, complex)

    def zeros(self) -> np.ndarray:
        return poly_roots(self.num) if self.num.degree >= 1 else np.zeros(0, complex)

    def is_stable(self) -> bool:
        return is_stable(self)

    def to_ss(self) -> "StateSpace":
        return tf_to_ss(self)

    def __neg__(self):
        return RationalTF(-self.num, self.den)

    def __mul__(self, other):
        if np.isscalar(other):
            return RationalTF(self.num * float(other), self.den)
        if isinstance(other, RationalTF):
            return tf_connect("series", self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __add__(self, other):
        if np.isscalar(other):
            other = RationalTF.constant(float(other))
        if isinstance(other, RationalTF):
            return tf_connect("parallel", self, other)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def feedback(self, other=1.0) -> "RationalTF":
        if np.isscalar(other):
            other = RationalTF.constant(float(other))
        return tf_connect("feedback", self, other)


@dataclass(frozen=True)
class FactoredTF:
    """``gain * prod(s - z) / prod(s - p)``.

    Zeros and poles are stored in the order given; evaluation pairs
    ``zeros[i]`` with ``poles[i]`` so that matched ladder factors stay close
    to unity and the running product does not overflow.
    """

    gain: float
    zeros: tuple = ()
    poles: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "gain", float(self.gain))
        object.__setattr__(self, "zeros", tuple(complex(z) for z in self.zeros))
        object.__setattr__(self, "poles", tuple(complex(p) for p in self.poles))

    @property
    def relative_degree(self) -> int:
        if self.gain == 0.0:
            return len(self.poles) + 1
        return len(self.poles) - len(self.zeros)

    def properness(self) -> str:
        return _properness(self.relative_degree)

    def evaluate(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.full(s.shape, self.gain, dtype=complex)
        z = self.zeros
        p = self.poles
        m = min(len(z), len(p))
        with np.errstate(divide="ignore", invalid="ignore"):
            for zk, pk in zip(z[:m], p[:m]):
                out = out * ((s - zk) / (s - pk))
            for zk in z[m:]:
                out = out * (s - zk)
            for pk in p[m:]:
                out = out / (s - pk)
        return out

    def freqresp(self, omega):
        return self.evaluate(1j * np.asarray(omega, dtype=float))

    def reciprocal(self) -> "FactoredTF":
        if self.gain == 0.0:
            raise ZeroDivisionError("reciprocal of the zero system")
        return FactoredTF(1.0 / self.gain, self.poles, self.zeros)

    def __mul__(self, other):
        if np.isscalar(other):
            return FactoredTF(self.gain * float(other), self.zeros, self.poles)
        if isinstance(other, FactoredTF):
            return FactoredTF(self.gain * other.gain, self.zeros + other.zeros, self.poles + other.poles)
        return NotImplemented

    __rmul__ = __mul__

    def poles_array(self) -> np.ndarray:
        return np.asarray(self.poles, dtype=complex)

    def is_stable(self) -> bool:
        return roots_stable(self.poles_array())

    def to_rational(self) -> RationalTF:
        return RationalTF(
            Polynomial.from_roots(self.zeros, self.gain), Polynomial.from_roots(self.poles)
        )


class MirroredTF:
    """Rational system with an independent frequency-response evaluator.

    Parameters
    ----------
    rational : RationalTF
        Cancellation-free rational form, used for poles and properness.
    response : callable
        ``response(omega) -> H(j omega)`` for a float array `omega`.  It must
        describe the same function as `rational`; it is typically assembled
        from factored pieces and is far better conditioned.
    """

    __slots__ = ("rational", "response")

    def __init__(self, rational: RationalTF, response: Callable[[np.ndarray], np.ndarray]):
        self.rational = rational
        self.response = response

    @classmethod
    def wrap(cls, h: "System") -> "MirroredTF":
        if isinstance(h, MirroredTF):
            return h
        if isinstance(h, FactoredTF):
            return cls(h.to_rational(), h.freqresp)
        return cls(h, h.freqresp)

    def freqresp(self, omega):
        return self.response(np.asarray(omega, dtype=float))

    @property
    def relative_degree(self) -> int:
        return self.rational.relative_degree

    def properness(self) -> str:
        return self.rational.properness()

    def poles(self) -> np.ndarray:
        return self.rational.poles()

    def is_stable(self) -> bool:
        return is_stable(self.rational)

    def with_rational(self, rational: RationalTF) -> "MirroredTF":
        return MirroredTF(rational, self.response)

    def __mul__(self, other):
        if np.isscalar(other):
            k = float(other)
            f = self.response
            return MirroredTF(self.rational * k, lambda w: k * f(w))
        other = MirroredTF.wrap(other)
        f, g = self.response, other.response
        return MirroredTF(self.rational * other.rational, lambda w: f(w) * g(w))

    __rmul__ = __mul__


System = Union[RationalTF, FactoredTF, MirroredTF]


@dataclass(frozen=True)
class StateSpace:
    """Single-input single-output realization ``(A, B, C, D)``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float

    def freqresp(self, omega) -> np.ndarray:
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        n = self.A.shape[0]
        eye = np.eye(n)
        out = np.empty(omega.shape, dtype=complex)
        for i, w in enumerate(omega):
            if n:
                x = np.linalg.solve(1j * w * eye - self.A, self.B)
                out[i] = (self.C @ x).item() + self.D
            else:
                out[i] = self.D
        return out


def tf_eval(h: System, omega):
    """Frequency response ``H(j omega)``.

    Factored and mirrored systems are evaluated without coefficient
    expansion.  Evaluation exactly at an imaginary-axis pole returns complex
    infinity rather than raising.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be nonnegative")
    out = h.freqresp(omega)
    return out.item() if np.ndim(out) == 0 else out


def tf_connect(kind: str, a: RationalTF, b: RationalTF) -> RationalTF:
    """Series, parallel or negative-feedback interconnection.

    ``feedback(a, b) = a / (1 + a b)`` expanded over the common denominator
    ``den_a den_b + num_a num_b``.  Common factors are kept.
    """
    if kind == "series":
        return RationalTF(a.num * b.num, a.den * b.den)
    if kind == "parallel":
        return RationalTF(a.num * b.den + b.num * a.den, a.den * b.den)
    if kind == "feedback":
        den = a.den * b.den + a.num * b.num
        if den.is_zero:
            raise DegenerateLoopError("1 + a*b is identically zero")
        return RationalTF(a.num * b.den, den)
    raise ValueError(f"unknown interconnection {kind!r}")


def tf_properness(h: System) -> str:
    return h.properness()


def is_stable(h: RationalTF) -> bool:
    """Strict left-half-plane test of the denominator roots."""
    return poly_is_hurwitz(h.den)


def tf_to_ss(h: RationalTF) -> StateSpace:
    """Controllable-canonical realization of a proper transfer function."""
    if h.properness() == IMPROPER:
        raise ValueError("cannot realize an improper transfer function")
    den = h.den.coeffs  # monic
    n = len(den) - 1
    num = np.pad(h.num.coeffs, (0, n + 1 - len(h.num.coeffs)))
    d = float(num[n]) if n >= 0 else 0.0
    rem = num[:n] - d * den[:n]
    A = np.zeros((n, n))
    if n:
        A[np.arange(n - 1), np.arange(1, n)] = 1.0
        A[-1, :] = -den[:n]
    B = np.zeros((n, 1))
    if n:
        B[-1, 0] = 1.0
    C = rem.reshape(1, n).copy()
    return StateSpace(A, B, C, d)
