"""Command-line front end.

    avrfopid run --case N --regime R [--pop P --gens G --seed S --paper-scale] --plant FILE --out DIR
    avrfopid run --manifest DIR/manifest.json --out DIR2
    avrfopid respond --genome kp=..,ki=..,kd=..,tf=..[,lam=..,mu=..] --regime R --plant FILE --out FILE
    avrfopid table1 [--rows 1-6] [--tol 0.05] --plant FILE --out FILE

``--plant`` takes a JSON file or one of the bundled names ``benchmark`` and
``calibrated``.  Exit codes: 0 success, 1 usage or I/O error, 2 infeasible
input, 3 validation failure.  Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, data_path
from .avrloop import AvrModel
from .fracops import REGIMES, FopidParams, OustaloupConfig, get_regime
from .moo import DESK_SCALE, PAPER_SCALE, MooConfig, best_compromise, nondominated_sort, nsga2_run, soo_weighted_run
from .objectives import MAXIMIZED, CaseEvaluator, build_loop, case_spec, eval_jtrack
from .sysnorms import InfiniteNorm
from .table1 import STRUCTURES, compare_rows, get_rows

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_VALIDATION = 0, 1, 2, 3

BUNDLED_PLANTS = {"benchmark": "benchmark.json", "calibrated": "calibrated.json"}
GENOME_ALIASES = {"tf": "tf_filter", "lambda": "lam"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _num(x: float) -> str:
    """Round-trip decimal text for CSV/JSON output."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_num(x: float):
    x = float(x)
    return x if math.isfinite(x) else _num(x)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def load_plant(spec: str) -> AvrModel:
    path = Path(spec)
    if not path.exists() and spec in BUNDLED_PLANTS:
        path = Path(str(data_path(BUNDLED_PLANTS[spec])))
    try:
        return AvrModel.from_json(path)
    except OSError as exc:
        raise UsageError(f"cannot read plant file {spec!r}: {exc.strerror or exc}") from None
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad plant file {spec!r}: {exc}") from None


def parse_genome(text: str, regime) -> FopidParams:
    vals = {}
    for item in filter(None, (t.strip() for t in text.split(","))):
        if "=" not in item:
            raise UsageError(f"genome entry {item!r} is not key=value")
        k, v = (s.strip() for s in item.split("=", 1))
        k = GENOME_ALIASES.get(k, k)
        if k not in FopidParams.GENE_NAMES:
            raise UsageError(f"unknown genome key {k!r}; expected {', '.join(FopidParams.GENE_NAMES)}")
        try:
            vals[k] = float(v)
        except ValueError:
            raise UsageError(f"genome value for {k} is not a number: {v!r}") from None
    for k, b in (("lam", regime.lam_bounds), ("mu", regime.mu_bounds)):
        if k not in vals and b[0] == b[1]:
            vals[k] = b[0]
    missing = [g for g in FopidParams.GENE_NAMES if g not in vals]
    if missing:
        raise UsageError(f"genome is missing {', '.join(missing)}")
    try:
        p = FopidParams(**vals)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not regime.contains(p):
        raise UsageError(f"orders lam={p.lam}, mu={p.mu} lie outside regime {regime.tag}")
    return p


def parse_rows(text: str) -> list[int]:
    out = []
    try:
        for part in filter(None, (t.strip() for t in text.split(","))):
            if "-" in part:
                a, b = (int(x) for x in part.split("-", 1))
                out.extend(range(a, b + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise UsageError(f"cannot parse row list {text!r}") from None
    bad = [r for r in out if not 1 <= r <= 12]
    if bad or not out:
        raise UsageError(f"rows must lie in 1..12, got {text!r}")
    return sorted(set(out))


def _ora(args) -> OustaloupConfig:
    return OustaloupConfig(half_order=args.ora_n)


def _natural(tag: str, v: float) -> float:
    return -v if tag in MAXIMIZED else v


# -- run ----------------------------------------------------------------------------


def _run_settings(args):
    if args.manifest:
        try:
            man = json.loads(Path(args.manifest).read_text())
            moo = dict(man["moo"])
            moo["workers"] = args.workers or moo.get("workers", 1)
            return (
                int(man["case_id"]),
                man["regime"],
                MooConfig(**moo),
                AvrModel.from_dict(man["plant"]),
                OustaloupConfig(**man["ora"]),
                man.get("disturbance", "effective"),
            )
        except OSError as exc:
            raise UsageError(f"cannot read manifest: {exc}") from None
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad manifest {args.manifest!r}: {exc}") from None
    if args.case is None:
        raise UsageError("run needs --case (or --manifest)")
    scale = PAPER_SCALE if args.paper_scale else DESK_SCALE
    try:
        cfg = MooConfig(
            population=args.pop or scale["population"],
            generations=args.gens if args.gens is not None else scale["generations"],
            seed=args.seed,
            workers=args.workers or 1,
        )
        ora = _ora(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return args.case, args.regime, cfg, load_plant(args.plant), ora, args.disturbance


def cmd_run(args) -> int:
    case_id, regime_name, cfg, model, ora, disturbance = _run_settings(args)
    try:
        spec = case_spec(case_id, regime_name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.soo and spec.case_id not in (11, 12):
        raise UsageError("--soo applies to cases 11 and 12 only")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {str(out)!r}: {exc.strerror}") from None

    t0 = time.perf_counter()
    evaluator = CaseEvaluator(spec, model, ora, disturbance=disturbance)
    front = nsga2_run(spec, cfg, model, ora, evaluator)
    feasible = [ind for ind in front if ind.objectives.feasible]
    soo = soo_weighted_run(spec, cfg, model, ora, evaluator) if args.soo else None
    duration = time.perf_counter() - t0

    members = sorted(feasible, key=lambda ind: ind.objectives.values)
    fronts = nondominated_sort([m.objectives for m in members])
    if len(fronts) > 1:
        raise RuntimeError("exported front is not mutually non-dominated")

    tags = spec.objectives
    try:
        with open(out / "pareto.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([*FopidParams.GENE_NAMES, *tags, "rank", "crowding"])
            for m in members:
                nat = [_natural(t, v) for t, v in zip(tags, m.objectives.values)]
                w.writerow([*map(_num, m.genome.as_array()), *map(_num, nat), m.rank, _num(m.crowding)])

        report = {"case_id": spec.case_id, "regime": spec.regime.tag, "objectives": list(tags)}
        if members:
            cr = best_compromise([m.objectives for m in members])
            best = members[cr.selected]
            report.update(
                selected_index=cr.selected,
                genome={k: _json_num(v) for k, v in best.genome.as_dict().items()},
                objective_values={t: _json_num(_natural(t, v)) for t, v in zip(tags, best.objectives.values)},
                memberships=[[_json_num(x) for x in row] for row in cr.memberships],
                satisfaction=[_json_num(x) for x in cr.satisfaction],
            )
        else:
            report.update(selected_index=None, reason="no feasible design in the final front")
        if soo is not None:
            report["soo"] = {
                "feasible": soo.objectives.feasible,
                "genome": {k: _json_num(v) for k, v in soo.genome.as_dict().items()},
                "objective_values": {t: _json_num(_natural(t, v)) for t, v in zip(tags, soo.objectives.values)},
            }
        (out / "compromise.json").write_text(json.dumps(report, indent=2) + "\n")

        manifest = {
            "tool": "avrfopid",
            "version": __version__,
            "case_id": spec.case_id,
            "regime": regime_name,
            "moo": asdict(cfg),
            "plant": model.to_dict(),
            "ora": asdict(ora),
            "disturbance": disturbance,
            "duration_s": duration,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        raise UsageError(f"cannot write outputs to {str(out)!r}: {exc.strerror}") from None

    if not members:
        _log(f"case {spec.case_id} {spec.regime.tag}: no feasible design found")
        return EXIT_INFEASIBLE
    _log(f"case {spec.case_id} {spec.regime.tag}: {len(members)} front members, {duration:.1f} s")
    return EXIT_OK


# -- respond -------------------------------------------------------------------------


def response_grid() -> np.ndarray:
    return np.logspace(-4.0, 4.0, 8 * 40 + 1)


def cmd_respond(args) -> int:
    regime = get_regime(args.regime)
    p = parse_genome(args.genome, regime)
    model = load_plant(args.plant)
    loop = build_loop(p, model, _ora(args), args.disturbance)
    if not loop.feasible:
        _log(f"infeasible genome: failed gate: {loop.failed_gate}")
        return EXIT_INFEASIBLE
    sens = loop.sens
    w = response_grid()
    jw = 1j * w
    cols = {
        "omega": w,
        "mag_S": np.abs(sens.S.freqresp(w)),
        "mag_T": np.abs(sens.T.freqresp(w)),
        "mag_step_dist": np.abs(sens.Sd.freqresp(w) / jw),
        "mag_Su": np.abs(sens.Su.freqresp(w)),
        "mag_step_track": np.abs(sens.S.freqresp(w) / jw),
    }
    try:
        with open(args.out, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(cols)
            for row in zip(*cols.values()):
                wr.writerow(map(_num, row))
    except OSError as exc:
        raise UsageError(f"cannot write {args.out!r}: {exc.strerror}") from None
    try:
        eval_jtrack(sens)
    except InfiniteNorm as exc:
        _log(f"warning: J_track is infinite ({exc.reason}); the step-tracking error does not decay")
    return EXIT_OK


# -- table1 --------------------------------------------------------------------------


def cmd_table1(args) -> int:
    rows = parse_rows(args.rows)
    structures = tuple(s.strip().lower() for s in args.structures.split(","))
    bad = [s for s in structures if s not in STRUCTURES]
    if bad:
        raise UsageError(f"unknown structure(s) {bad}; choose from {list(STRUCTURES)}")
    if not args.tol >= 0:
        raise UsageError("--tol must be nonnegative")
    model = load_plant(args.plant)
    result = compare_rows(get_rows(rows, structures), model, args.tol, _ora(args), disturbance=args.disturbance)
    try:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["case", "structure", "objective", "tabulated", "recomputed", "rel_error", "passed", "note"])
            for c in result:
                w.writerow(
                    [c.case_id, c.structure, c.objective, _num(c.tabulated), _num(c.recomputed),
                     _num(c.rel_error), "pass" if c.passed else "fail", c.note]
                )
    except OSError as exc:
        raise UsageError(f"cannot write {args.out!r}: {exc.strerror}") from None
    n_pass = sum(c.passed for c in result)
    _log(f"{n_pass}/{len(result)} comparisons within {args.tol:g} relative")
    return EXIT_OK if n_pass == len(result) else EXIT_VALIDATION


# -- entry point -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="avrfopid", description="FOPID loop shaping for AVR systems")
    parser.add_argument("--version", action="version", version=f"avrfopid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = _Parser(add_help=False)
    common.add_argument("--plant", default="benchmark", help="plant JSON file, or 'benchmark' / 'calibrated'")
    common.add_argument("--ora-n", type=int, default=OustaloupConfig().half_order, help="Oustaloup half-order N")
    common.add_argument("--disturbance", choices=("effective", "plant"), default="effective")

    run = sub.add_parser("run", parents=[common], help="optimize one trade-off case")
    run.add_argument("--case", type=int)
    run.add_argument("--regime", choices=sorted(REGIMES), default="pid")
    run.add_argument("--pop", type=int)
    run.add_argument("--gens", type=int)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--paper-scale", action="store_true", help="population 100, 1200 generations")
    run.add_argument("--workers", type=int, help="parallel evaluation processes (results do not depend on it)")
    run.add_argument("--soo", action="store_true", help="also run the weighted single-objective baseline")
    run.add_argument("--manifest", help="rerun from a manifest.json")
    run.add_argument("--out", required=True)
    run.set_defaults(func=cmd_run)

    resp = sub.add_parser("respond", parents=[common], help="export frequency responses of one design")
    resp.add_argument("--genome", required=True, help="kp=..,ki=..,kd=..,tf=..[,lam=..,mu=..]")
    resp.add_argument("--regime", choices=sorted(REGIMES), default="pid")
    resp.add_argument("--out", required=True)
    resp.set_defaults(func=cmd_respond)

    tab = sub.add_parser("table1", parents=[common], help="recompute the published best-compromise designs")
    tab.add_argument("--rows", default="1-12")
    tab.add_argument("--structures", default=",".join(STRUCTURES))
    tab.add_argument("--tol", type=float, default=0.05)
    tab.add_argument("--out", required=True)
    tab.set_defaults(func=cmd_table1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        _log(f"avrfopid {args.command}: error: {exc}")
        return EXIT_USAGE
