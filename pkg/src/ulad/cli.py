"""Command-line experiment runner.

Subcommands: ``sense`` (run the detector on one block), ``roc``,
``pd-vs-snr``, ``total-error``, ``table2`` (optimal thresholds) and
``calibrate``. Results go to CSV or JSON; JSON embeds the full configuration
and can be fed back with ``--config`` to reproduce a run.

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 sample file
parse error, 4 numeric infeasibility.
"""

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .analytic import PdMode, h1_moments, pd_ulad, threshold_from_pf
from .detectors import BASELINES, ULAD, Detector, DetectorKind, decide, ulad_statistic
from .exceptions import InfeasibleThresholdError, ParameterError, SampleFileError
from .gof import z_transform
from .montecarlo import (
    ExperimentPlan,
    Stream,
    calibrate_threshold,
    estimate_rate,
    pd_vs_snr,
    roc_sweep,
    total_error_sweep,
)
from .signalgen import Hypothesis, NoiseParams, SampleBlock, SignalSpec, db_to_linear, make_block
from .threshold import optimal_threshold, total_error_rate
from .validation import check_count, check_positive, check_probability

SEED_ENV = "ULAD_SEED"
EXIT_IO, EXIT_CONFIG, EXIT_PARSE, EXIT_INFEASIBLE = 1, 2, 3, 4
DEFAULT_PF_GRID = (0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5)
# keys excluded from the provenance record
_NOT_CONFIG = {"config", "out", "format", "func", "n_given"}


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _grid(values, name):
    start, stop, step = values
    if not step > 0 or stop < start:
        raise ParameterError(f"{name} needs start <= stop and step > 0")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


def read_samples(path):
    """Read one real per line; blank lines and ``#`` comments are skipped."""
    values = []
    try:
        handle = sys.stdin if path == "-" else open(path, encoding="utf-8")
    except OSError as exc:
        raise SampleFileError(f"cannot open {path}: {exc.strerror}") from None
    with handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                value = float(text)
            except ValueError:
                raise SampleFileError(f"not a real number: {text!r}", lineno) from None
            if not math.isfinite(value):
                raise SampleFileError(f"non-finite sample: {text!r}", lineno)
            values.append(value)
    if not values:
        raise SampleFileError(f"{path} contains no samples")
    return np.array(values)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_rows(rows, columns, args, stream=None):
    if args.format == "json":
        payload = {
            "version": __version__,
            "subcommand": args.subcommand,
            "config": config_of(args),
            "columns": list(columns),
            "rows": [{c: _json_value(r.get(c)) for c in columns} for r in rows],
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_fmt(r.get(c)) for c in columns])
        text = buf.getvalue()
    if args.out in (None, "-"):
        (stream or sys.stdout).write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _json_value(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def config_of(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}


def _kinds(args):
    kinds = []
    for name in args.detector:
        if name.lower() == "all":
            kinds.extend((ULAD,) + BASELINES)
        else:
            kinds.append(DetectorKind.parse(name, args.pom_p))
    return tuple(dict.fromkeys(kinds))


def _noise(args):
    if args.noise_var is None:
        if args.subcommand == "sense":
            raise ParameterError("--noise-var is required: the detector needs the noise variance")
        return NoiseParams(1.0)
    return NoiseParams(args.noise_var)


def _plan(args, snr_db=None, detector=ULAD):
    snr = 0.0 if snr_db is None else db_to_linear(snr_db)
    signal = SignalSpec(args.signal, snr, args.sine_freq)
    return ExperimentPlan(
        noise=_noise(args),
        signal=signal,
        n=args.n,
        trials=args.trials,
        detector=detector,
        seed=args.seed,
        calib_trials=args.calib_trials,
        chunk_size=args.chunk_size,
        workers=args.workers,
    )


def _validate(args):
    """Check every numeric option before any computation starts."""
    check_count(args.n, "--n")
    check_count(args.trials, "--trials")
    check_count(args.calib_trials, "--calib-trials")
    check_count(args.k_max, "--k-max")
    check_count(args.chunk_size, "--chunk-size")
    check_count(args.workers, "--workers")
    if args.noise_var is not None:
        check_positive(args.noise_var, "--noise-var")
    for p in args.pf or ():
        check_probability(p, "--pf")
    check_probability(args.zeta_pf, "--zeta-pf")
    if not 0 <= args.seed < 2**64:
        raise ParameterError("--seed must be a 64-bit unsigned integer")
    if args.snr_grid is not None:
        args.snr_db = _grid(args.snr_grid, "--snr-grid")
        args.snr_grid = None
    if args.gamma_grid is not None:
        _grid(args.gamma_grid, "--gamma-grid")
    _kinds(args)
    _noise(args)
    SignalSpec(args.signal, 0.0, args.sine_freq)


def _bpsk_moments(args, noise, snr_db):
    if args.signal != "bpsk" or snr_db is None:
        return None
    return h1_moments(db_to_linear(snr_db), noise, args.k_max)


def cmd_sense(args):
    noise = _noise(args)
    pfs = args.pf or [0.05]
    if len(pfs) != 1:
        raise ParameterError("sense takes a single --pf")
    if args.input is not None:
        samples = read_samples(args.input)
        if args.n_given and args.n != samples.size:
            raise ParameterError(f"--n {args.n} does not match the {samples.size} samples read")
        block, source = SampleBlock(samples, Hypothesis.H0), args.input
    else:
        truth = Hypothesis(args.truth)
        snr_db = args.snr_db[0] if args.snr_db else None
        if truth is Hypothesis.H1 and snr_db is None:
            raise ParameterError("generating an H1 block needs --snr-db")
        signal = SignalSpec(args.signal, 0.0 if snr_db is None else db_to_linear(snr_db), args.sine_freq)
        rng = np.random.default_rng(np.random.SeedSequence(args.seed))
        block, source = make_block(noise, signal, truth, args.n, rng), f"generated:{truth.value}"
    # Algorithm: |Y| -> z -> B_n -> threshold -> verdict
    stat = ulad_statistic(z_transform(block, noise))
    gamma = threshold_from_pf(pfs[0], block.n)
    decision = decide(stat, gamma)
    row = {
        "source": source,
        "n": block.n,
        "noise_var": noise.variance_w,
        "pf": pfs[0],
        "statistic": stat.value,
        "threshold": gamma,
        "verdict": decision.verdict.value,
    }
    write_rows([row], list(row), args)


def cmd_roc(args):
    kinds = _kinds(args)
    pfs = args.pf or list(DEFAULT_PF_GRID)
    rows = []
    for snr_db in args.snr_db or [-14.0]:
        plan = _plan(args, snr_db)
        moments = _bpsk_moments(args, plan.noise, snr_db)
        for pt in roc_sweep(plan, pfs, kinds, analytic_ulad=not args.calibrate_ulad):
            exact = approx = None
            if pt.detector.tag is Detector.ULAD and moments is not None:
                exact = float(pd_ulad(pt.threshold, plan.n, moments, PdMode.EXACT))
                approx = float(pd_ulad(pt.threshold, plan.n, moments, PdMode.APPROX))
            rows.append({
                "snr_db": snr_db, "n": plan.n, "detector": str(pt.detector),
                "target_pf": pt.target_pf, "threshold": pt.threshold,
                "pd": pt.pd.p_hat, "pd_std_err": pt.pd.std_err,
                "pd_analytic_exact": exact, "pd_analytic_approx": approx,
            })
    write_rows(rows, ["snr_db", "n", "detector", "target_pf", "threshold", "pd", "pd_std_err",
                      "pd_analytic_exact", "pd_analytic_approx"], args)


def cmd_pd_vs_snr(args):
    kinds = _kinds(args)
    grid = args.snr_db or _grid((-18.0, -8.0, 1.0), "snr grid")
    plan = _plan(args)
    rows = []
    for pf in args.pf or [0.05]:
        for pt in pd_vs_snr(plan, grid, pf, kinds, analytic_ulad=not args.calibrate_ulad):
            analytic = None
            if pt.detector.tag is Detector.ULAD and args.signal == "bpsk" and pt.snr_db is not None:
                m = h1_moments(db_to_linear(pt.snr_db), plan.noise, args.k_max)
                analytic = float(pd_ulad(pt.threshold, plan.n, m, PdMode.EXACT))
            rows.append({
                "snr_db": pt.snr_db, "n": plan.n, "detector": str(pt.detector), "target_pf": pf,
                "threshold": pt.threshold, "pd": pt.pd.p_hat, "pd_std_err": pt.pd.std_err,
                "pd_analytic": analytic,
            })
    write_rows(rows, ["snr_db", "n", "detector", "target_pf", "threshold", "pd", "pd_std_err",
                      "pd_analytic"], args)


def cmd_total_error(args):
    grid = _grid(args.gamma_grid or (-80.0, 180.0, 1.0), "--gamma-grid")
    rows = []
    for snr_db in args.snr_db or [-14.0, -13.0, -12.0, -11.0]:
        plan = _plan(args, snr_db)
        moments = _bpsk_moments(args, plan.noise, snr_db)
        for pt in total_error_sweep(plan, grid):
            rows.append({
                "snr_db": snr_db, "n": plan.n, "gamma": pt.gamma, "pf": pt.pf.p_hat,
                "pd": pt.pd.p_hat, "p_error": pt.p_error,
                "p_error_analytic": None if moments is None
                else float(total_error_rate(pt.gamma, plan.n, moments)),
            })
    write_rows(rows, ["snr_db", "n", "gamma", "pf", "pd", "p_error", "p_error_analytic"], args)


def cmd_table2(args):
    noise = _noise(args)
    rows = []
    for snr_db in args.snr_db or [-14.0, -13.0, -12.0, -11.0]:
        opt = optimal_threshold(db_to_linear(snr_db), args.n, noise, args.zeta_pf, args.k_max)
        rows.append({
            "snr_db": snr_db, "n": args.n, "zeta_pf": args.zeta_pf, "gamma_min": opt.gamma_min,
            "gamma_star": opt.gamma_star, "pf": opt.pf_at_gamma_star,
            "constraint_binds": opt.constraint_binds, "alpha": opt.alpha, "beta": opt.beta,
            "mu": opt.mu, "delta": opt.delta,
        })
    write_rows(rows, ["snr_db", "n", "zeta_pf", "gamma_min", "gamma_star", "pf",
                      "constraint_binds", "alpha", "beta", "mu", "delta"], args)


def cmd_calibrate(args):
    rows = []
    for kind in _kinds(args):
        plan = _plan(args, detector=kind)
        for pf in args.pf or [0.05]:
            gamma = calibrate_threshold(plan, pf)
            check = estimate_rate(plan, Hypothesis.H0, gamma)
            rows.append({
                "detector": str(kind), "n": plan.n, "target_pf": pf, "threshold": gamma,
                "analytic_threshold": threshold_from_pf(pf, plan.n) if kind.tag is Detector.ULAD else None,
                "pf_check": check.p_hat, "pf_check_std_err": check.std_err,
            })
    write_rows(rows, ["detector", "n", "target_pf", "threshold", "analytic_threshold",
                      "pf_check", "pf_check_std_err"], args)


COMMANDS = {
    "sense": cmd_sense,
    "roc": cmd_roc,
    "pd-vs-snr": cmd_pd_vs_snr,
    "total-error": cmd_total_error,
    "table2": cmd_table2,
    "calibrate": cmd_calibrate,
}

HELP = {
    "sense": "run the ULAD detector on one block (file or generated)",
    "roc": "Monte Carlo ROC curves, with analytic ULAD curves for BPSK",
    "pd-vs-snr": "detection probability against SNR at fixed Pf",
    "total-error": "empirical and analytic total error rate against the threshold",
    "table2": "closed-form optimal thresholds under the Pf constraint",
    "calibrate": "empirical H0 thresholds for any detector",
}


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"{SEED_ENV}={raw!r} is not an integer") from None


def build_parser(default_seed=0):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config (or a JSON result file) supplying defaults")
    common.add_argument("--n", type=int, default=1000, help="samples per block")
    common.add_argument("--noise-var", type=float, default=None, help="noise variance (default 1; required by sense)")
    common.add_argument("--snr-db", type=float, nargs="+", default=None, help="SNR value(s) in dB")
    common.add_argument("--snr-grid", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    common.add_argument("--pf", type=float, nargs="+", default=None, help="target false-alarm probability(ies)")
    common.add_argument("--zeta-pf", type=float, default=0.1, help="false-alarm constraint for the optimal threshold")
    common.add_argument("--trials", type=int, default=100_000)
    common.add_argument("--calib-trials", type=int, default=100_000)
    common.add_argument("--seed", type=int, default=default_seed, help=f"RNG seed (default ${SEED_ENV} or 0)")
    common.add_argument("--detector", nargs="+", default=["ulad"],
                        help="ulad, ks, cm, ad, ed, avc, pom[:p] or all")
    common.add_argument("--pom-p", type=float, default=None, help="POM exponent for a bare 'pom'")
    common.add_argument("--calibrate-ulad", action="store_true",
                        help="calibrate ULAD empirically instead of the closed form")
    common.add_argument("--signal", choices=["bpsk", "gauss", "sine"], default="bpsk")
    common.add_argument("--sine-freq", type=float, default=0.05)
    common.add_argument("--k-max", type=int, default=1000, help="dilogarithm series terms")
    common.add_argument("--gamma-grid", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    common.add_argument("--input", help="sample file for sense, one real per line ('-' for stdin)")
    common.add_argument("--truth", choices=["H0", "H1"], default="H0", help="hypothesis of a generated block")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--chunk-size", type=int, default=1024)
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")

    parser = _ArgumentParser(prog="ulad", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_ArgumentParser)
    for name, func in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=HELP[name])
        sp.set_defaults(func=func)
    return parser


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParameterError(f"config {path} is not valid JSON: {exc}") from None
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]
    if not isinstance(data, dict):
        raise ParameterError(f"config {path} must be a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items() if k not in _NOT_CONFIG}


def parse_args(argv):
    parser = build_parser(_default_seed())
    args = parser.parse_args(argv)
    if args.config:
        defaults = _load_config(args.config)
        defaults.pop("subcommand", None)
        defaults.pop("n_given", None)
        sub = parser._subparsers._group_actions[0].choices[args.subcommand]
        known = {a.dest for a in sub._actions}
        unknown = set(defaults) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {', '.join(sorted(unknown))}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    args.n_given = any(a == "--n" or a.startswith("--n=") for a in argv)
    return args


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        try:
            args = parse_args(argv)
        except SystemExit as exc:  # argparse usage errors and --help
            return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
        _validate(args)
        args.func(args)
    except ParameterError as exc:
        print(f"ulad: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SampleFileError as exc:
        print(f"ulad: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleThresholdError as exc:
        print(f"ulad: numeric infeasibility: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"ulad: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
