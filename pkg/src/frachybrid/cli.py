"""``frachybrid`` command-line interface.

Exit codes: 0 stable / SPR / non-empty range, 2 inconclusive / not SPR /
empty range, 1 runtime failure, 64 usage or input error.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, hybridsim, scenarios, stability
from .fileio import (
    InputError,
    build_system,
    events_csv,
    hbeta_csv,
    load_document,
    sweep_csv,
    trajectory_csv,
    write_csv,
    write_json,
)
from .matfun import MatrixFunctionError
from .sysmodel import (
    FractionalLTI,
    PseudoPolynomial,
    Reference,
    ResetClosedLoop,
    SwitchingSystem,
    pade_delay,
    realize_commensurate,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_NEGATIVE = 2
EXIT_USAGE = 64

SCENARIOS = ("example3", "smartwheel", "servo-fpci", "multicontroller", "fore", "ci", "fci")
RESET_BUILTINS = ("fore", "ci", "fci")
SIM_BUILTINS = ("scalar-half",)

# flags that name output locations are excluded from the input digest
_OUTPUT_FLAGS = {"out_dir", "json_report", "func", "command"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunReport:
    command: str
    inputs_digest: str
    verdict: str
    margin: object = None
    range: object = None
    artifact_paths: list = field(default_factory=list)
    wall_time: float = 0.0
    details: dict = field(default_factory=dict)


class _Run:
    """Collects artifacts and summary values for one command invocation."""

    def __init__(self, args):
        self.args = args
        self.out_dir = args.out_dir
        self.artifacts = []
        self.details = {}
        self.margin = None
        self.range = None

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def csv(self, name, header, columns):
        self.artifacts.append(write_csv(self.path(name), header, columns))

    def add(self, path):
        self.artifacts.append(path)
        return path


def _finite(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"value must be finite, got {text!r}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("value must be >= 1")
    return v


def _alpha_sweep(text):
    try:
        start, stop, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected start:stop:step") from None
    if not (step > 0 and stop >= start > 0):
        raise argparse.ArgumentTypeError("need 0 < start <= stop and step > 0")
    count = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + k * step, 12) for k in range(count + 1)]


def _digest(args):
    h = hashlib.sha256()
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in _OUTPUT_FLAGS}
    h.update(json.dumps([args.command, flags], sort_keys=True, default=str).encode())
    for key in ("system", "poly"):
        path = getattr(args, key, None)
        if path and os.path.isfile(path):
            with open(path, "rb") as fh:
                h.update(fh.read())
    return h.hexdigest()


def _grid(args):
    try:
        return stability.FrequencyGrid(args.wmin, args.wmax, args.points)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _sim_config(args, default_memory=4000):
    memory = default_memory if args.memory is None else (None if args.memory == 0 else args.memory)
    try:
        return hybridsim.SimConfig(h=args.h, T=args.tfinal, memory=memory, scheme=args.scheme,
                                   reset_memory_policy=args.reset_memory)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(path, kind):
    doc = load_document(path)
    if doc["kind"] != kind:
        raise InputError(f"{path}: expected a {kind!r} description, got {doc['kind']!r}")
    return build_system(doc)


def _safe(label):
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in label)


# --------------------------------------------------------------------------
# switching


def _switching(run, system, alpha, mode, form, prefix=""):
    sys_ = SwitchingSystem(alpha, tuple(zip(system.labels, system.matrices)))
    grid = _grid(run.args)
    reports, verdict = stability.multi_check(sys_, mode, form, grid)
    pairs = []
    for r in reports:
        name = f"{prefix}sweep_{_safe(r.labels[0])}_{_safe(r.labels[1])}.csv"
        run.add(sweep_csv(run.path(name), r))
        pairs.append({"labels": list(r.labels), "max_delta_rad": r.max_delta, "margin_rad": r.margin,
                      "verdict": r.verdict, "refined": r.refined, "reason": r.reason})
    margins = [r.margin for r in reports]
    margin = min(margins) if margins else None
    return verdict, margin, pairs


def cmd_check_switching(run):
    a = run.args
    system = _load(a.system, "switching")
    alpha = system.alpha if a.alpha is None else a.alpha
    if not 0 < alpha < 2:
        raise UsageError(f"alpha must lie in (0, 2), got {alpha}")
    verdict, margin, pairs = _switching(run, system, alpha, a.mode, a.form)
    run.margin = margin
    run.details = {"alpha": alpha, "mode": a.mode, "form": a.form or stability.default_form(alpha),
                   "pairs": pairs}
    return verdict == stability.STABLE


# --------------------------------------------------------------------------
# reset


def _reset_target(run):
    a = run.args
    if a.builtin and a.system:
        raise UsageError("give either --system or --builtin, not both")
    if a.system:
        return _load(a.system, "reset"), "file"
    if a.builtin == "fore":
        return scenarios.fore_hbeta_family(a.b), "fore"
    if a.builtin == "ci":
        return scenarios.fore_hbeta_family(0.0), "ci"
    if a.builtin == "fci":
        return scenarios.fci_loop(), "fci"
    raise UsageError("a reset system is required: --system FILE or --builtin {fore,ci,fci}")


def _reset_check(run, target, beta, name="hbeta_phase.csv"):
    rep = stability.reset_stability(target, beta, run.args.P_R, _grid(run.args))
    if rep.phase is not None:
        run.add(hbeta_csv(run.path(name), rep))
    return rep


def cmd_check_reset(run):
    target, kind = _reset_target(run)
    rep = _reset_check(run, target, run.args.beta)
    run.margin = None if not math.isfinite(rep.max_abs_phase) else math.pi / 2 - rep.max_abs_phase
    run.details = {"system": kind, "beta": rep.beta, "max_abs_phase_rad": rep.max_abs_phase,
                   "verdict": rep.verdict, "reason": rep.reason}
    return rep.spr


def _beta_range(run, target):
    a = run.args
    if not a.beta_min < a.beta_max:
        raise UsageError("need --beta-min < --beta-max")
    if not a.beta_step > 0:
        raise UsageError("--beta-step must be positive")
    intervals = stability.beta_range(target, a.beta_min, a.beta_max, a.beta_step,
                                     _grid(run.args), a.P_R)
    run.range = [iv.to_dict() for iv in intervals]
    run.details["intervals"] = [str(iv) for iv in intervals]
    run.details["scan"] = {"beta_min": a.beta_min, "beta_max": a.beta_max, "step": a.beta_step}
    return intervals


def cmd_beta_range(run):
    target, kind = _reset_target(run)
    run.details["system"] = kind
    return bool(_beta_range(run, target))


# --------------------------------------------------------------------------
# scenarios


def _scenario_example3(run):
    a = run.args
    family = scenarios.build_example3_pair()
    if a.alpha_sweep:
        rows = []
        for alpha in a.alpha_sweep:
            verdict, margin, pairs = _switching(run, family, alpha, "consecutive", a.form,
                                                prefix=f"alpha_{alpha:g}_")
            rows.append((alpha, pairs[0]["max_delta_rad"], margin, verdict))
        run.csv("alpha_sweep.csv", ["alpha", "max_delta_rad", "margin_rad", "verdict"],
                [np.array([r[0] for r in rows]), np.array([r[1] for r in rows]),
                 np.array([r[2] for r in rows]), np.array([r[3] for r in rows], dtype=object)])
        run.details["alpha_sweep"] = [{"alpha": r[0], "max_delta_rad": r[1], "margin_rad": r[2],
                                       "verdict": r[3]} for r in rows]
        run.margin = [r[2] for r in rows]
        return None
    alpha = 0.5 if a.alpha is None else a.alpha
    verdict, margin, pairs = _switching(run, family, alpha, "consecutive", a.form)
    run.margin = margin
    run.details.update(alpha=alpha, pairs=pairs)
    return verdict == stability.STABLE


def _scenario_smartwheel(run):
    a = run.args
    family = scenarios.build_smartwheel_family(a.pade_order, a.paper_rounded)
    verdict, margin, pairs = _switching(run, family, family.alpha, "consecutive", "thm3")
    run.margin = margin
    run.details.update(alpha=family.alpha, pade_order=a.pade_order, dimension=family.n, pairs=pairs)
    return verdict == stability.STABLE


def _simulation_artifacts(run, traj, reference):
    run.add(trajectory_csv(run.path("trajectory.csv"), traj))
    run.add(events_csv(run.path("events.csv"), traj))
    m = hybridsim.metrics(traj, reference)
    run.details["metrics"] = asdict(m)
    run.details["events"] = len(traj.events)


def _scenario_servo(run):
    a = run.args
    rcl = scenarios.servo_fpci_augmented(a.paper_rounded)
    cfg = _sim_config(a, default_memory=None)
    traj = hybridsim.simulate_reset(rcl, a.reference, cfg)
    _simulation_artifacts(run, traj, a.reference)
    run.details.update(dimension=rcl.n, alpha=rcl.alpha, memory=cfg.memory)
    return None


def _scenario_multicontroller(run):
    a = run.args
    scen = scenarios.build_multicontroller(*scenarios.DEFAULT_MULTICONTROLLER, eps=a.eps,
                                           reference=Reference("step", a.reference))
    cfg = _sim_config(a)
    traj = hybridsim.simulate_switched(scen, cfg)
    _simulation_artifacts(run, traj, a.reference)
    run.details.update(eps=a.eps, memory=cfg.memory)
    return None


def _scenario_reset(run):
    a = run.args
    a.builtin = a.name
    a.system = None
    target, kind = _reset_target(run)
    run.details["system"] = kind
    if a.beta is not None:
        rep = _reset_check(run, target, a.beta)
        run.details.update(beta=rep.beta, beta_verdict=rep.verdict,
                           max_abs_phase_rad=rep.max_abs_phase)
    return bool(_beta_range(run, target))


def cmd_scenario(run):
    handlers = {
        "example3": _scenario_example3,
        "smartwheel": _scenario_smartwheel,
        "servo-fpci": _scenario_servo,
        "multicontroller": _scenario_multicontroller,
        "fore": _scenario_reset,
        "ci": _scenario_reset,
        "fci": _scenario_reset,
    }
    run.details["scenario"] = run.args.name
    return handlers[run.args.name](run)


# --------------------------------------------------------------------------
# realize / pade / simulate


def cmd_realize(run):
    poly = _load(run.args.poly, "pseudo_poly")
    lti = realize_commensurate(poly)
    path = write_json(run.path("realization.json"), {
        "alpha": lti.alpha, "A": lti.A, "B": lti.B, "C": lti.C, "D": lti.D})
    run.add(path)
    run.details["dimension"] = lti.n
    return None


def cmd_pade(run):
    a = run.args
    if a.delay < 0:
        raise UsageError("--delay must be non-negative")
    tf = pade_delay(a.delay, a.order)
    run.add(write_json(run.path("pade.json"), {
        "delay": a.delay, "order": a.order, "num": list(tf.num), "den": list(tf.den),
        "ordering": "ascending powers of s"}))
    run.details.update(num=list(tf.num), den=list(tf.den))
    return None


def cmd_simulate(run):
    a = run.args
    if a.system in SIM_BUILTINS:
        lti = FractionalLTI(0.5, [[-1.0]], [[0.0]], [[1.0]], [[0.0]])
        cfg = _sim_config(a, default_memory=None)
        traj = hybridsim.simulate_fractional_lti(lti, None, [1.0] if a.x0 is None else a.x0, cfg)
        run.add(trajectory_csv(run.path("trajectory.csv"), traj))
        run.details.update(system=a.system, memory=cfg.memory)
        return None
    doc = load_document(a.system)
    system = build_system(doc)
    cfg = _sim_config(a)
    if isinstance(system, ResetClosedLoop):
        traj = hybridsim.simulate_reset(system, a.reference, cfg, a.x0)
        _simulation_artifacts(run, traj, a.reference)
    elif isinstance(system, PseudoPolynomial):
        lti = realize_commensurate(system)
        traj = hybridsim.simulate_fractional_lti(lti, a.reference, a.x0, cfg)
        run.add(trajectory_csv(run.path("trajectory.csv"), traj))
    else:
        raise InputError("simulate accepts reset or pseudo_poly descriptions")
    run.details.update(system=doc["kind"], memory=cfg.memory)
    return None


# --------------------------------------------------------------------------
# parser


def _common():
    """Shared flags; defaults are applied after parsing so they work before or after the subcommand."""
    p = argparse.ArgumentParser(add_help=False)
    d = argparse.SUPPRESS
    p.add_argument("--out-dir", default=d, help="directory for artifacts (default: .)")
    p.add_argument("--json-report", default=d, help="report path (default: OUT_DIR/report.json)")
    p.add_argument("--seed", type=int, default=d, help="reserved; no command is stochastic")
    p.add_argument("--paper-rounded", action="store_true", default=d,
                   help="use the published rounded constants")
    p.add_argument("--wmin", type=_finite, default=d, help="lowest grid frequency (1e-4)")
    p.add_argument("--wmax", type=_finite, default=d, help="highest grid frequency (1e4)")
    p.add_argument("--points", type=int, default=d, help="grid points (4000)")
    return p


_GLOBAL_DEFAULTS = {"out_dir": ".", "json_report": None, "seed": 0, "paper_rounded": False,
                    "wmin": 1e-4, "wmax": 1e4, "points": 4000}


def _sim_flags(p, tfinal=20.0):
    p.add_argument("--tfinal", type=_finite, default=tfinal)
    p.add_argument("--h", type=_finite, default=1e-3, help="step size")
    p.add_argument("--memory", type=int, default=None,
                   help="short-memory length in steps; 0 keeps the full history")
    p.add_argument("--scheme", choices=("explicit", "implicit"), default="explicit")
    p.add_argument("--reset-memory", choices=("clear", "retain"), default="clear")
    p.add_argument("--reference", type=_finite, default=1.0, help="step reference amplitude")


def _reset_flags(p):
    p.add_argument("--system", help="reset system JSON")
    p.add_argument("--builtin", choices=RESET_BUILTINS)
    p.add_argument("--b", type=_finite, default=1.0, help="FORE pole (builtin fore)")
    p.add_argument("--P-R", dest="P_R", type=_finite, default=None, help="scalar P_R > 0")


def _range_flags(p):
    p.add_argument("--beta-min", type=_finite, default=0.01)
    p.add_argument("--beta-max", type=_finite, default=5.0)
    p.add_argument("--beta-step", type=_finite, default=0.01)


def build_parser():
    common = _common()
    parser = _Parser(prog="frachybrid", parents=[common],
                     description="Stability analysis and simulation of fractional-order hybrid systems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)
    kw = {"parents": [common]}

    p = sub.add_parser("check-switching", help="pairwise phase-difference test", **kw)
    p.add_argument("--system", required=True, help="switching system JSON")
    p.add_argument("--alpha", type=_finite, default=None, help="override the file's alpha")
    p.add_argument("--mode", choices=("consecutive", "all_pairs"), default="consecutive")
    p.add_argument("--form", choices=("thm3", "thm4"), default=None)
    p.set_defaults(func=cmd_check_switching)

    p = sub.add_parser("check-reset", help="H_beta strict positive realness at one beta", **kw)
    _reset_flags(p)
    p.add_argument("--beta", type=_finite, required=True)
    p.set_defaults(func=cmd_check_reset)

    p = sub.add_parser("beta-range", help="beta intervals satisfying the H_beta condition", **kw)
    _reset_flags(p)
    _range_flags(p)
    p.set_defaults(func=cmd_beta_range)

    p = sub.add_parser("scenario", help="run a built-in scenario", **kw)
    p.add_argument("name", help="one of: " + ", ".join(SCENARIOS))
    p.add_argument("--alpha", type=_finite, default=None)
    p.add_argument("--alpha-sweep", type=_alpha_sweep, default=None, metavar="START:STOP:STEP")
    p.add_argument("--form", choices=("thm3", "thm4"), default=None)
    p.add_argument("--pade-order", type=_positive_int, default=3)
    p.add_argument("--eps", type=_finite, default=0.05, help="hysteresis band")
    p.add_argument("--beta", type=_finite, default=None)
    p.add_argument("--b", type=_finite, default=1.0)
    p.add_argument("--P-R", dest="P_R", type=_finite, default=None)
    _range_flags(p)
    _sim_flags(p)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("realize", help="companion realization of a pseudo-polynomial", **kw)
    p.add_argument("--poly", required=True, help="pseudo-polynomial JSON")
    p.set_defaults(func=cmd_realize)

    p = sub.add_parser("pade", help="diagonal Padé approximant of a delay", **kw)
    p.add_argument("--delay", type=_finite, required=True)
    p.add_argument("--order", type=_positive_int, default=3)
    p.set_defaults(func=cmd_pade)

    p = sub.add_parser("simulate", help="Grünwald-Letnikov simulation", **kw)
    p.add_argument("--system", required=True, help="'scalar-half' or a reset / pseudo_poly JSON")
    p.add_argument("--x0", type=_finite, nargs="+", default=None)
    _sim_flags(p)
    p.set_defaults(func=cmd_simulate)
    return parser


_VERDICTS = {
    "check-switching": ("stable", "inconclusive"),
    "check-reset": ("spr", "not-spr"),
    "beta-range": ("spr", "not-spr"),
}


def _verdict(command, name, outcome):
    if outcome is None:
        return "n/a"
    if command == "scenario":
        pos, neg = ("spr", "not-spr") if name in RESET_BUILTINS else ("stable", "inconclusive")
    else:
        pos, neg = _VERDICTS[command]
    return pos if outcome else neg


def main(argv=None):
    t0 = time.perf_counter()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        for k, v in _GLOBAL_DEFAULTS.items():
            if not hasattr(args, k):
                setattr(args, k, v)
        if args.command == "scenario" and args.name not in SCENARIOS:
            raise UsageError(f"unknown scenario {args.name!r}; valid names: {', '.join(SCENARIOS)}")
        if getattr(args, "P_R", None) is not None and not args.P_R > 0:
            raise UsageError("--P-R must be positive")
        run = _Run(args)
        digest = _digest(args)
        outcome = args.func(run)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help / --version
        return int(exc.code or 0)
    except (MatrixFunctionError, stability.SingularityOnGrid, hybridsim.SimulationError,
            ValueError, ArithmeticError, NotImplementedError, np.linalg.LinAlgError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    verdict = _verdict(args.command, getattr(args, "name", None), outcome)
    report = RunReport(args.command, digest, verdict, run.margin, run.range,
                       list(run.artifacts), round(time.perf_counter() - t0, 6), run.details)
    report_path = args.json_report or os.path.join(args.out_dir, "report.json")
    try:
        write_json(report_path, asdict(report))
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    summary = f"{args.command}: {verdict}"
    if run.margin is not None and not isinstance(run.margin, list):
        summary += f" (margin {run.margin:.6g} rad)"
    if run.range is not None:
        summary += " " + (", ".join(run.details["intervals"]) or "empty")
    print(summary)
    if outcome is None:
        return EXIT_OK
    return EXIT_OK if outcome else EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())
