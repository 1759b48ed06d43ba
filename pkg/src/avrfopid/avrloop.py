"""AVR control loop: plant, sensor, effective unity-feedback plant and margins.

With ``G = Ng/Dg``, ``C = Nc/Dc``, ``H = Nh/Dh`` every closed-loop map is
formed directly from the six polynomials:

    Q     = Dc Dg Dh + Nc Ng (Nh - Dh)       (denominator of G_eff)
    Delta = Dc Dg Dh + Nc Ng Nh              (characteristic polynomial)

    G_eff = Ng Dc Dh / Q        L = C G_eff = Nc Ng Dh / Q
    S = Q / Delta               T = Nc Ng Dh / Delta
    S_u = Nc Q / (Dc Delta)
    S_d = Ng Dc Dh / Delta      (disturbance through G_eff, the default)
    S_d = Ng Q / (Dg Delta)     (``disturbance="plant"``)

Factors such as Dg in ``G / (1 + CGH - CG)`` divide out identically in this
algebra and are never formed; no root-based cancellation happens here.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .ratfun import (
    DegenerateLoopError,
    FactoredTF,
    MirroredTF,
    Polynomial,
    RationalTF,
    System,
    poly_is_hurwitz,
)
from .sysnorms import DEFAULT_GRID, NormGrid

DISTURBANCE_MODES = ("effective", "plant")


@dataclass(frozen=True)
class AvrModel:
    """Amplifier, exciter, generator and sensor, each ``K / (1 + T s)``.

    The defaults are the usual AVR benchmark numbers.  Only the product
    ``ka * ke * kg`` and the four time constants matter to the loop.
    """

    ka: float = 10.0
    ta: float = 0.1
    ke: float = 1.0
    te: float = 0.4
    kg: float = 1.0
    tg: float = 1.0
    ks: float = 1.0
    ts: float = 0.01

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"AVR parameter {f.name} must be a positive number, got {v!r}")

    def plant_factored(self) -> FactoredTF:
        gain = self.ka * self.ke * self.kg / (self.ta * self.te * self.tg)
        return FactoredTF(gain, (), (-1 / self.ta, -1 / self.te, -1 / self.tg))

    def sensor_factored(self) -> FactoredTF:
        return FactoredTF(self.ks / self.ts, (), (-1 / self.ts,))

    def plant(self) -> RationalTF:
        """``G(s)``: amplifier, exciter and generator in series."""
        lag = lambda k, t: RationalTF([k], [1.0, t])  # noqa: E731
        return lag(self.ka, self.ta) * lag(self.ke, self.te) * lag(self.kg, self.tg)

    def sensor(self) -> RationalTF:
        return RationalTF([self.ks], [1.0, self.ts])

    def plant_mirrored(self) -> MirroredTF:
        return MirroredTF(self.plant(), self.plant_factored().freqresp)

    def sensor_mirrored(self) -> MirroredTF:
        return MirroredTF(self.sensor(), self.sensor_factored().freqresp)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AvrModel":
        keys = {f.name for f in fields(cls)}
        unknown = set(d) - keys
        if unknown:
            raise ValueError(f"unknown plant keys: {sorted(unknown)}")
        missing = keys - set(d)
        if missing:
            raise ValueError(f"missing plant keys: {sorted(missing)}")
        return cls(**{k: float(d[k]) for k in keys})

    @classmethod
    def from_json(cls, path) -> "AvrModel":
        with open(Path(path)) as fh:
            return cls.from_dict(json.load(fh))


def _parts(x: System):
    m = MirroredTF.wrap(x)
    return m.rational.num, m.rational.den, m.response


def effective_plant(g: System, h: System, c: System) -> RationalTF:
    """``G_eff = G / (1 + C G H - C G)`` as ``Ng Dc Dh / Q``."""
    ng, dg, _ = _parts(g)
    nh, dh, _ = _parts(h)
    nc, dc, _ = _parts(c)
    q = dc * dg * dh + nc * ng * (nh - dh)
    if q.is_zero:
        raise DegenerateLoopError("1 + CGH - CG is identically zero")
    return RationalTF(ng * dc * dh, q)


def characteristic_polynomial(g: System, c: System, h: System) -> Polynomial:
    ng, dg, _ = _parts(g)
    nc, dc, _ = _parts(c)
    nh, dh, _ = _parts(h)
    return ng * nc * nh + dg * dc * dh


def internal_stability(g: System, c: System, h: System) -> bool:
    """All roots of ``Ng Nc Nh + Dg Dc Dh`` strictly in the left half-plane."""
    p = characteristic_polynomial(g, c, h)
    if p.is_zero:
        raise DegenerateLoopError("characteristic polynomial is identically zero")
    return poly_is_hurwitz(p)


@dataclass(frozen=True)
class SensitivitySet:
    """Closed-loop maps of the equivalent unity-feedback loop.

    Each member is a `MirroredTF`: cancellation-free rational form plus a
    pointwise evaluator built from the factored plant, sensor and controller.
    """

    S: MirroredTF
    T: MirroredTF
    Sd: MirroredTF
    Su: MirroredTF
    L: MirroredTF
    G_eff: MirroredTF
    disturbance: str = "effective"


def sensitivity_set(g: System, h: System, c: System, disturbance: str = "effective") -> SensitivitySet:
    """Build S, T, S_d and S_u for plant `g`, sensor `h` and controller `c`.

    Parameters
    ----------
    disturbance : {"effective", "plant"}
        Which plant multiplies ``1/(1+L)`` in the disturbance map.
        ``"effective"`` gives ``G_eff/(1+L)``, identical to the physical
        disturbance-to-output map ``G/(1+CGH)`` of the original loop;
        ``"plant"`` gives ``G/(1+L)`` with the original plant.
    """
    if disturbance not in DISTURBANCE_MODES:
        raise ValueError(f"disturbance must be one of {DISTURBANCE_MODES}")
    ng, dg, gf = _parts(g)
    nh, dh, hf = _parts(h)
    nc, dc, cf = _parts(c)
    q = dc * dg * dh + nc * ng * (nh - dh)
    if q.is_zero:
        raise DegenerateLoopError("1 + CGH - CG is identically zero")
    delta = q + nc * ng * dh
    if delta.is_zero:
        raise DegenerateLoopError("1 + L is identically zero")

    def pieces(w):
        cv, gv, hv = cf(w), gf(w), hf(w)
        with np.errstate(all="ignore"):
            geff = gv / (1.0 + cv * gv * hv - cv * gv)
            lv = cv * geff
            sv = 1.0 / (1.0 + lv)
        return cv, gv, geff, lv, sv

    def s_resp(w):
        return pieces(w)[4]

    def t_resp(w):
        _, _, _, lv, sv = pieces(w)
        return lv * sv

    def su_resp(w):
        cv, _, _, _, sv = pieces(w)
        return cv * sv

    if disturbance == "effective":
        sd_rat = RationalTF(ng * dc * dh, delta)

        def sd_resp(w):
            _, _, geff, _, sv = pieces(w)
            return geff * sv
    else:
        sd_rat = RationalTF(ng * q, dg * delta)

        def sd_resp(w):
            _, gv, _, _, sv = pieces(w)
            return gv * sv

    def l_resp(w):
        return pieces(w)[3]

    def geff_resp(w):
        return pieces(w)[2]

    return SensitivitySet(
        S=MirroredTF(RationalTF(q, delta), s_resp),
        T=MirroredTF(RationalTF(nc * ng * dh, delta), t_resp),
        Sd=MirroredTF(sd_rat, sd_resp),
        Su=MirroredTF(RationalTF(nc * q, dc * delta), su_resp),
        L=MirroredTF(RationalTF(nc * ng * dh, q), l_resp),
        G_eff=MirroredTF(RationalTF(ng * dc * dh, q), geff_resp),
        disturbance=disturbance,
    )


@dataclass(frozen=True)
class GpmMetrics:
    """Gain/phase margins of an open loop.

    Angles are in radians.  A missing crossover leaves its frequency as NaN,
    the gain margin infinite (no phase crossover) or the phase margin NaN (no
    gain crossover), and clears the matching ``has_*`` flag.
    """

    phase_margin: float
    gain_crossover: float
    gain_margin: float
    phase_crossover: float
    has_gain_crossover: bool
    has_phase_crossover: bool
    n_gain_crossings: int = 0
    n_phase_crossings: int = 0


def _unwrapped_response(l: System, w: np.ndarray, max_depth: int = 12):
    """Sample ``L(jw)`` with extra points wherever the phase moves faster than pi/2."""
    resp = l.freqresp(w)
    for _ in range(max_depth):
        dphi = np.abs(np.angle(resp[1:] / resp[:-1]))
        bad = np.flatnonzero(dphi > math.pi / 2)
        if bad.size == 0:
            break
        mids = np.sqrt(w[bad] * w[bad + 1])
        w = np.sort(np.concatenate([w, mids]))
        resp = l.freqresp(w)
    phase = np.angle(resp[0]) + np.concatenate([[0.0], np.cumsum(np.angle(resp[1:] / resp[:-1]))])
    return w, resp, phase


def _bisect_log(fun, a: float, b: float, fa: float, iters: int = 80) -> float:
    """Root of `fun` on ``[a, b]`` (rad/s) by bisection in log frequency."""
    la, lb = math.log(a), math.log(b)
    for _ in range(iters):
        m = 0.5 * (la + lb)
        fm = fun(math.exp(m))
        if fm == 0.0:
            return math.exp(m)
        if (fm > 0) == (fa > 0):
            la, fa = m, fm
        else:
            lb = m
        if lb - la < 1e-15:
            break
    return math.exp(0.5 * (la + lb))


def gpm_metrics(l: System, grid: NormGrid = DEFAULT_GRID) -> GpmMetrics:
    """Phase margin, gain margin and the two crossover frequencies of `l`.

    The gain crossover is the lowest frequency where ``|L|`` crosses 1 and
    the phase crossover the lowest frequency where the unwrapped phase
    crosses ``-pi``; both are refined by bisection.
    """
    w, resp, phase = _unwrapped_response(l, grid.omega())
    logmag = np.log(np.abs(resp))

    def resp_at(x):
        return complex(l.freqresp(np.array([x]))[0])

    def phase_near(x, i):
        # continuous phase at x, anchored at sample i
        return phase[i] + float(np.angle(resp_at(x) / resp[i]))

    gsgn = np.sign(logmag)
    gcross = np.flatnonzero(gsgn[:-1] * gsgn[1:] < 0)
    exact_g = np.flatnonzero(logmag == 0.0)
    psgn = np.sign(phase + math.pi)
    pcross = np.flatnonzero(psgn[:-1] * psgn[1:] < 0)
    exact_p = np.flatnonzero(phase + math.pi == 0.0)

    if gcross.size or exact_g.size:
        cand = []
        if gcross.size:
            i = int(gcross[0])
            wgc = _bisect_log(lambda x: math.log(abs(resp_at(x))), w[i], w[i + 1], logmag[i])
            cand.append((wgc, i))
        if exact_g.size:
            cand.append((float(w[exact_g[0]]), int(exact_g[0])))
        wgc, i = min(cand)
        pm = math.pi + phase_near(wgc, i)
        has_gc = True
    else:
        wgc, pm, has_gc = math.nan, math.nan, False

    if pcross.size or exact_p.size:
        cand = []
        if pcross.size:
            i = int(pcross[0])
            wpc = _bisect_log(lambda x: phase_near(x, i) + math.pi, w[i], w[i + 1], phase[i] + math.pi)
            cand.append((wpc, i))
        if exact_p.size:
            cand.append((float(w[exact_p[0]]), int(exact_p[0])))
        wpc, i = min(cand)
        gm = 1.0 / abs(resp_at(wpc))
        has_pc = True
    else:
        wpc, gm, has_pc = math.nan, math.inf, False

    return GpmMetrics(
        phase_margin=pm,
        gain_crossover=wgc,
        gain_margin=gm,
        phase_crossover=wpc,
        has_gain_crossover=has_gc,
        has_phase_crossover=has_pc,
        n_gain_crossings=int(gcross.size + exact_g.size),
        n_phase_crossings=int(pcross.size + exact_p.size),
    )
