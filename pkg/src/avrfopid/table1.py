"""Published best-compromise designs and their recomputation.

Each row holds a tabulated genome together with the objective values printed
for it.  `compare_rows` realizes the genome, evaluates the same objectives
and reports the relative error of every value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .avrloop import AvrModel
from .fracops import FopidParams, OustaloupConfig
from .objectives import J_D, J_ST, J_TRACK, J_U, WeightingFilters, build_loop, evaluate_objective
from .sysnorms import DEFAULT_GRID, InfiniteNorm, NormGrid

STRUCTURES = ("pid", "fopid2", "fopid4")
COLUMNS = (J_D, J_ST, J_TRACK, J_U)


@dataclass(frozen=True)
class TableRow:
    case_id: int
    structure: str
    values: dict  # objective tag -> tabulated value
    genome: FopidParams


# (case, structure, (J_d, J_ST, J_track, J_u), (Kp, Ki, Kd, Tf, lam, mu)); None = not tabulated
_RAW = [
    (1, "pid", (2.0413, 0.8449, None, None), (0.16736, 0.64860, 0.03387, 0.00062, 1, 1)),
    (1, "fopid2", (1.3446, 0.8996, None, None), (0.22981, 1.05204, 0.04274, 0.00030, 1.02388, 0.99819)),
    (1, "fopid4", (2.9257, 0.7781, None, None), (0.17148, 0.34768, 0.01163, 0.01920, 1.08619, 1.32913)),
    (2, "pid", (1.4947, None, 0.2862, None), (0.22325, 1.41079, 0.10224, 0.00006, 1, 1)),
    (2, "fopid2", (1.0765, None, 0.3014, None), (0.27722, 1.78206, 0.10294, 0.00008, 1.00123, 0.99907)),
    (2, "fopid4", (0.3085, None, 0.1024, None), (3.66876, 3.56893, 0.05366, 0.00002, 1.38923, 1.77811)),
    (3, "pid", (6.0668, None, None, 0.3491), (0.07098, 0.21113, 0.01414, 0.05652, 1, 1)),
    (3, "fopid2", (6.4869, None, None, 0.4051), (0.05027, 0.24080, 0.02527, 0.07952, 1.03402, 0.77364)),
    (3, "fopid4", (0.5163, None, None, 4.5370), (0.54962, 2.27603, 0.03127, 0.00839, 1.03814, 1.23752)),
    (4, "pid", (None, 0.6980, 0.3888, None), (0.03274, 0.03316, 0.01235, 0.00174, 1, 1)),
    (4, "fopid2", (None, 0.6910, 0.4086, None), (0.03181, 0.02779, 0.01095, 0.00235, 1.02931, 0.97011)),
    (4, "fopid4", (None, 0.1165, 0.1203, None), (1.08832, 0.26349, 0.05783, 0.00006, 1.57625, 1.76203)),
    (5, "pid", (None, 0.6376, None, 0.0058), (0.00344, 0.00355, 0.00001, 0.87218, 1, 1)),
    (5, "fopid2", (None, 0.6375, None, 0.0059), (0.00134, 0.00243, 0.00004, 1.22557, 1.00019, 0.79441)),
    (5, "fopid4", (None, 0.2208, None, 564.0656), (0.07369, 0.01748, 0.05572, 0.00029, 1.44578, 1.65018)),
    (6, "pid", (None, None, 0.2584, 123.8108), (0.06576, 0.15121, 0.08178, 0.00066, 1, 1)),
    (6, "fopid2", (None, None, 0.2703, 23.0614), (0.06738, 0.14761, 0.07520, 0.00317, 1.00595, 0.99997)),
    (6, "fopid4", (None, None, 0.1446, 225.7610), (0.61998, 0.21681, 0.04230, 0.00032, 1.59033, 1.56197)),
    (7, "pid", (10.5974, 0.7242, None, 0.2951), (0.04617, 0.15251, 0.01527, 0.06133, 1, 1)),
    (7, "fopid2", (91.1058, 0.6508, None, 0.0162), (0.00245, 0.01158, 0.02428, 2.54075, 1.03605, 0.35031)),
    (7, "fopid4", (1.7149, 0.3745, None, 265.4168), (0.57796, 1.08846, 0.03805, 0.00038, 1.34777, 1.64559)),
    (8, "pid", (1.0495, None, 0.3222, 485.0246), (0.35298, 1.03791, 0.08675, 0.00018, 1, 1)),
    (8, "fopid2", (7.3254, None, 0.2813, 22.3467), (0.08438, 0.30675, 0.08970, 0.00393, 1.00966, 0.99988)),
    (8, "fopid4", (0.5964, None, 0.1486, 501.9223), (1.55567, 1.54129, 0.03338, 0.00022, 1.18960, 1.70488)),
    (9, "pid", (None, 0.6815, 0.5120, 0.1029), (0.01373, 0.03074, 0.01246, 0.18237, 1, 1)),
    (9, "fopid2", (None, 0.6454, 0.7118, 0.0213), (0.00505, 0.01037, 0.00767, 0.47019, 1.05315, 0.70102)),
    (9, "fopid4", (None, 0.1620, 0.1111, 3219.3000), (0.97572, 0.41926, 0.04109, 0.00005, 1.46161, 1.77477)),
    (10, "pid", (16.2302, 0.9290, 0.2715, None), (0.05548, 0.09149, 0.06325, 0.00350, 1, 1)),
    (10, "fopid2", (2.7332, 0.9218, 0.2972, None), (0.14796, 0.64427, 0.05958, 0.00279, 1.01723, 0.99589)),
    (10, "fopid4", (1.5262, 0.0862, 0.1000, None), (1.27345, 0.66635, 0.04448, 0.00001, 1.46676, 1.86088)),
    (11, "pid", (48.7582, 0.9970, 0.2841, 348.0719), (0.01543, 0.14547, 0.08077, 0.00023, 1, 1)),
    (11, "fopid2", (69.8134, 0.9863, 0.2947, 139.2903), (0.03051, 0.08119, 0.07790, 0.00046, 1.13694, 0.99992)),
    (11, "fopid4", (22.8839, 0.3199, 0.1973, 1583.5000), (0.10711, 0.03393, 0.02066, 0.00005, 1.28477, 1.79596)),
    (12, "pid", (41841.0000, 0.6377, 10.7061, 206.3096), (0.00047, 0.00002, 0.00007, 0.00000, 1, 1)),
    (12, "fopid2", (25630.0000, 0.6382, 7.8955, 2.4230), (0.00139, 0.00004, 0.00027, 0.00001, 1.00372, 0.99998)),
    (12, "fopid4", (22446.0000, 0.6376, 8.2693, 2.2829), (0.00004, 0.00004, 0.00003, 0.00002, 1.01080, 1.07051)),
]

ROWS = tuple(
    TableRow(c, st, {k: v for k, v in zip(COLUMNS, vals) if v is not None}, FopidParams(*map(float, gen)))
    for c, st, vals, gen in _RAW
)


def get_rows(cases=None, structures=STRUCTURES) -> list[TableRow]:
    cases = set(range(1, 13) if cases is None else cases)
    bad = cases - set(range(1, 13))
    if bad:
        raise ValueError(f"unknown case(s) {sorted(bad)}; cases are 1..12")
    return [r for r in ROWS if r.case_id in cases and r.structure in structures]


@dataclass(frozen=True)
class Comparison:
    case_id: int
    structure: str
    objective: str
    tabulated: float
    recomputed: float
    rel_error: float
    passed: bool
    note: str = ""


def recompute_row(
    row: TableRow,
    model: AvrModel,
    cfg: OustaloupConfig = OustaloupConfig(),
    grid: NormGrid = DEFAULT_GRID,
    disturbance: str = "effective",
) -> tuple[dict, str]:
    """Recompute the tabulated objectives of `row`.

    Returns ``(values, note)``; values are NaN (failed gate) or inf
    (unbounded norm) where no finite number exists, and `note` says why.
    """
    loop = build_loop(row.genome, model, cfg, disturbance)
    if not loop.feasible:
        return {k: math.nan for k in row.values}, loop.failed_gate
    out, notes = {}, []
    weights = WeightingFilters()
    for tag in row.values:
        try:
            out[tag] = evaluate_objective(tag, loop.sens, weights, grid)
        except InfiniteNorm as exc:
            out[tag] = math.inf
            notes.append(f"{tag}: {exc.reason}")
    return out, "; ".join(notes)


def compare_rows(
    rows,
    model: AvrModel,
    tol: float = 0.05,
    cfg: OustaloupConfig = OustaloupConfig(),
    grid: NormGrid = DEFAULT_GRID,
    disturbance: str = "effective",
) -> list[Comparison]:
    result = []
    for row in rows:
        values, note = recompute_row(row, model, cfg, grid, disturbance)
        for tag, ref in row.values.items():
            got = values[tag]
            err = abs(got - ref) / abs(ref) if math.isfinite(got) else math.inf
            result.append(Comparison(row.case_id, row.structure, tag, ref, got, err, err <= tol, note))
    return result
