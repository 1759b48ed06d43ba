"""Design objectives for the AVR loop and the twelve trade-off cases.

    J_d     = || (1/s) S_d ||_inf       step load-disturbance rejection
    J_u     = || S_u ||_inf             control effort
    J_ST    = || W_S S ||_inf + || W_T T ||_inf
    J_track = || (1/s) S ||_2           step set-point tracking

Cases 11 and 12 maximize gain/phase-margin quantities instead; their values
are stored negated so every objective vector is minimized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .avrloop import AvrModel, SensitivitySet, gpm_metrics, internal_stability, sensitivity_set
from .fracops import (
    FopidParams,
    OustaloupConfig,
    RealizationError,
    Regime,
    fopid_realize,
    get_regime,
)
from .ratfun import (
    IMPROPER,
    DegenerateLoopError,
    FactoredTF,
    MirroredTF,
    RationalTF,
    is_stable,
    tf_connect,
)
from .sysnorms import DEFAULT_GRID, InfiniteNorm, NormGrid, cancel_origin, h2_norm_quadrature, hinf_norm

PENALTY = 1e10

INTEGRATOR = FactoredTF(1.0, (), (0.0,))

J_D, J_ST, J_TRACK, J_U = "J_d", "J_ST", "J_track", "J_u"
PHASE_MARGIN, GAIN_CROSSOVER, GAIN_MARGIN = "Phi_m", "w_gc", "G_m"
MAXIMIZED = frozenset({PHASE_MARGIN, GAIN_CROSSOVER, GAIN_MARGIN})

CASE_OBJECTIVES = {
    1: (J_D, J_ST),
    2: (J_D, J_TRACK),
    3: (J_D, J_U),
    4: (J_ST, J_TRACK),
    5: (J_U, J_ST),
    6: (J_U, J_TRACK),
    7: (J_D, J_U, J_ST),
    8: (J_D, J_U, J_TRACK),
    9: (J_U, J_ST, J_TRACK),
    10: (J_D, J_ST, J_TRACK),
    11: (PHASE_MARGIN, GAIN_CROSSOVER),
    12: (PHASE_MARGIN, GAIN_MARGIN),
}


@dataclass(frozen=True)
class WeightingFilters:
    w_s: RationalTF = field(default_factory=lambda: RationalTF([0.025, 0.25], [1000.0, 0.4, 1.0]))
    w_t: RationalTF = field(
        default_factory=lambda: RationalTF([1.25, 1.2025, 0.0125], [100.0, 20.0, 1.0])
    )


@dataclass(frozen=True)
class CaseSpec:
    case_id: int
    objectives: tuple
    regime: Regime

    @property
    def senses(self) -> tuple:
        return tuple("max" if o in MAXIMIZED else "min" for o in self.objectives)

    @property
    def n_obj(self) -> int:
        return len(self.objectives)


def case_spec(case_id: int, regime="pid") -> CaseSpec:
    if case_id not in CASE_OBJECTIVES:
        raise ValueError(f"unknown case {case_id}; cases are 1..12")
    if isinstance(regime, str):
        regime = get_regime(regime)
    return CaseSpec(case_id, CASE_OBJECTIVES[case_id], regime)


@dataclass(frozen=True)
class ObjectiveVector:
    """Objective values in minimization sense (maximized quantities negated)."""

    values: tuple
    feasible: bool
    penalty_applied: bool = False
    reason: str = ""

    @classmethod
    def penalty(cls, n: int, reason: str) -> "ObjectiveVector":
        return cls((PENALTY,) * n, False, True, reason)


def _mirror(x):
    return MirroredTF.wrap(x)


def eval_jd(sens: SensitivitySet, grid: NormGrid = DEFAULT_GRID) -> float:
    return hinf_norm(cancel_origin(_mirror(sens.Sd) * INTEGRATOR), grid)


def eval_ju(sens: SensitivitySet, grid: NormGrid = DEFAULT_GRID) -> float:
    # S_u = Nc Q / (Dc Delta) carries the integrator pole against Q's origin zero
    return hinf_norm(cancel_origin(_mirror(sens.Su)), grid)


def eval_jst(sens: SensitivitySet, w: WeightingFilters = WeightingFilters(), grid: NormGrid = DEFAULT_GRID) -> float:
    return hinf_norm(_mirror(sens.S) * w.w_s, grid) + hinf_norm(_mirror(sens.T) * w.w_t, grid)


def eval_jtrack(sens: SensitivitySet, grid: NormGrid = DEFAULT_GRID) -> float:
    return h2_norm_quadrature(cancel_origin(_mirror(sens.S) * INTEGRATOR), grid)


@dataclass(frozen=True)
class LoopDesign:
    """A realized controller closed around the AVR model, with its gate results."""

    params: FopidParams
    controller: object
    sens: SensitivitySet | None
    failed_gate: str = ""

    @property
    def feasible(self) -> bool:
        return not self.failed_gate


def build_loop(
    p: FopidParams,
    model: AvrModel = AvrModel(),
    cfg: OustaloupConfig = OustaloupConfig(),
    disturbance: str = "effective",
) -> LoopDesign:
    """Realize the controller, close the loop and run the three feasibility gates.

    Gates, in order: properness of controller and open loop; stability of
    the rationalized closed loop ``L / (1 + L)``; internal stability of the
    original loop.  The first failing gate is named in ``failed_gate``.
    """
    try:
        ctrl = fopid_realize(p, cfg)
    except (RealizationError, ValueError) as exc:
        return LoopDesign(p, None, None, f"realization: {exc}")
    c = ctrl.mirrored()
    g = model.plant_mirrored()
    h = model.sensor_mirrored()
    try:
        sens = sensitivity_set(g, h, c, disturbance)
    except DegenerateLoopError as exc:
        return LoopDesign(p, ctrl, None, f"degenerate loop: {exc}")
    except ValueError as exc:
        # coefficient overflow, e.g. from a vanishing filter constant
        return LoopDesign(p, ctrl, None, f"realization: {exc}")
    if ctrl.properness() == IMPROPER or sens.L.properness() == IMPROPER:
        return LoopDesign(p, ctrl, sens, "properness")
    try:
        closed = tf_connect("feedback", sens.L.rational, RationalTF.constant(1.0))
        if not is_stable(closed):
            return LoopDesign(p, ctrl, sens, "closed-loop stability")
        if not internal_stability(g, c, h):
            return LoopDesign(p, ctrl, sens, "internal stability")
    except DegenerateLoopError as exc:
        return LoopDesign(p, ctrl, sens, f"degenerate loop: {exc}")
    except ValueError as exc:
        return LoopDesign(p, ctrl, sens, f"realization: {exc}")
    return LoopDesign(p, ctrl, sens)


def margin_objectives(spec: CaseSpec, sens: SensitivitySet, grid: NormGrid = DEFAULT_GRID):
    """Negated margin objectives, or None when a margin constraint fails.

    Both crossovers must exist, the phase margin must be positive, the gain
    margin finite and above 1, and the phase crossover above the gain
    crossover.
    """
    m = gpm_metrics(sens.L, grid)
    ok = (
        m.has_gain_crossover
        and m.has_phase_crossover
        and math.isfinite(m.gain_margin)
        and m.phase_margin > 0
        and m.gain_margin > 1.0
        and m.phase_crossover > m.gain_crossover
    )
    if not ok:
        return None
    table = {PHASE_MARGIN: m.phase_margin, GAIN_CROSSOVER: m.gain_crossover, GAIN_MARGIN: m.gain_margin}
    return tuple(-table[o] for o in spec.objectives)


def evaluate_objective(tag: str, sens: SensitivitySet, weights: WeightingFilters, grid: NormGrid) -> float:
    if tag == J_D:
        return eval_jd(sens, grid)
    if tag == J_U:
        return eval_ju(sens, grid)
    if tag == J_ST:
        return eval_jst(sens, weights, grid)
    if tag == J_TRACK:
        return eval_jtrack(sens, grid)
    raise ValueError(f"{tag!r} is not a norm objective")


def evaluate_case(
    p: FopidParams,
    spec: CaseSpec,
    model: AvrModel = AvrModel(),
    cfg: OustaloupConfig = OustaloupConfig(),
    grid: NormGrid = DEFAULT_GRID,
    weights: WeightingFilters = WeightingFilters(),
    disturbance: str = "effective",
) -> ObjectiveVector:
    """Objective vector of `p` for one trade-off case.

    Any failed gate, unbounded norm or (cases 11-12) violated margin
    constraint gives the all-penalty vector.
    """
    n = spec.n_obj
    loop = build_loop(p, model, cfg, disturbance)
    if not loop.feasible:
        return ObjectiveVector.penalty(n, loop.failed_gate)
    if spec.case_id in (11, 12):
        vals = margin_objectives(spec, loop.sens, grid)
        if vals is None:
            return ObjectiveVector.penalty(n, "margin constraints")
        return ObjectiveVector(vals, True)
    try:
        vals = tuple(evaluate_objective(t, loop.sens, weights, grid) for t in spec.objectives)
    except InfiniteNorm as exc:
        return ObjectiveVector.penalty(n, f"infinite norm: {exc.reason}")
    if not all(math.isfinite(v) for v in vals):
        return ObjectiveVector.penalty(n, "non-finite objective")
    return ObjectiveVector(vals, True)


@dataclass(frozen=True)
class CaseEvaluator:
    """Picklable bundle of everything `evaluate_case` needs besides the genome."""

    spec: CaseSpec
    model: AvrModel = AvrModel()
    cfg: OustaloupConfig = OustaloupConfig()
    grid: NormGrid = DEFAULT_GRID
    weights: WeightingFilters = field(default_factory=WeightingFilters)
    disturbance: str = "effective"

    def __call__(self, p: FopidParams) -> ObjectiveVector:
        return evaluate_case(p, self.spec, self.model, self.cfg, self.grid, self.weights, self.disturbance)
