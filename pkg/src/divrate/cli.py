"""Command-line front end: ``divrate {estimate,theta,conditions,rate,oracle}``.

Exit codes: 0 success, 1 input error, 2 infeasible configuration.
"""

import argparse
import csv
from datetime import datetime, timezone
import io
import json
import math
import os
from pathlib import Path
import re
import sys

from . import __version__
from ._series import DivergentSeriesError
from .distributions import THEOREMS, check_conditions, from_config, is_triangular
from .estimators import DEFAULT_LEVEL, Estimate, estimate
from .indices import parse_index, population_summary
from .montecarlo import DegenerateConfigError, ExperimentConfig, run_experiment
from .oracle import OracleGuardError, exact_estimator_law, exact_kolmogorov
from .validation import SampleCounts

SEED_ENV = "DIVRATE_SEED"
EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2


class InputError(ValueError):
    pass


class Infeasible(ValueError):
    pass


# -- K(n) expressions ---------------------------------------------------------

_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:/\d+(?:\.\d*)?)?"


def _number(text):
    text = text.strip().strip("()")
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


class KExpression:
    """Integer-valued K(n) from the grammar  [ceil|floor]( c * n^a * ln n ).

    Any of the three factors may be omitted; ``c`` and ``a`` are decimals or
    ratios such as ``1/5``. Rounding defaults to ceil.

    >>> KExpression("ceil(n^(1/5))")(1000)
    4
    >>> KExpression("floor(2*ln n)")(100)
    9
    """

    def __init__(self, text):
        self.text = text
        body = text.strip().replace(" ", "")
        self.rounding = math.ceil
        m = re.fullmatch(r"(ceil|floor)\((.*)\)", body)
        if m:
            self.rounding = math.ceil if m.group(1) == "ceil" else math.floor
            body = m.group(2)
        self.coef, self.power, self.log = 1.0, 0.0, False
        if not body:
            raise ValueError(f"empty K expression {text!r}")
        for factor in body.split("*"):
            if re.fullmatch(r"\(?" + _NUM + r"\)?", factor):
                self.coef *= _number(factor)
            elif re.fullmatch(r"n(\^(\(?" + _NUM + r"\)?))?", factor):
                self.power += _number(factor[2:]) if "^" in factor else 1.0
            elif re.fullmatch(r"(ln|log)(n|\(n\))", factor):
                if self.log:
                    raise ValueError(f"ln n may appear once in {text!r}")
                self.log = True
            else:
                raise ValueError(f"cannot parse factor {factor!r} in K expression {text!r}")

    def __call__(self, n):
        value = self.coef * n ** self.power * (math.log(n) if self.log else 1.0)
        # guard against 3.0000000000000004 rounding up to 4
        return int(self.rounding(round(value, 9)))

    def __repr__(self):
        return f"KExpression({self.text!r})"


# -- input parsing --------------------------------------------------------------

def _read_text(path):
    if path in (None, "-"):
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def parse_tokens(text):
    tokens = text.split()
    if not tokens:
        raise InputError("input contains no symbols")
    return SampleCounts.from_observations(tokens)


def parse_count_csv(text):
    """Parse ``symbol,count`` lines; an optional ``symbol,count`` header is skipped."""
    tally = {}
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise InputError(f"line {lineno}: expected 'symbol,count', got {len(row)} fields")
        symbol, raw = row[0].strip(), row[1].strip()
        if lineno == 1 and (symbol.lower(), raw.lower()) == ("symbol", "count"):
            continue
        if not symbol:
            raise InputError(f"line {lineno}: empty symbol")
        if not re.fullmatch(r"\d+", raw):
            raise InputError(f"line {lineno}: count {raw!r} is not a nonnegative integer")
        tally[symbol] = tally.get(symbol, 0) + int(raw)
    if sum(tally.values()) == 0:
        raise InputError("input contains no observations")
    return SampleCounts.from_mapping(tally)


def _load_json(value):
    text = value.strip()
    if not text.startswith(("{", "[")):
        text = _read_text(value)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {value!r}: line {exc.lineno}: {exc.msg}") from None


# -- output ---------------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj):
    # json writes floats with repr: shortest string that round-trips exactly
    return json.dumps(_clean(obj), indent=2, sort_keys=False) + "\n"


def _estimate_csv(est):
    record = est.to_dict()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(record)
    writer.writerow(repr(v) if isinstance(v, float) else v for v in record.values())
    return buf.getvalue()


class _Run:
    """Collects outputs of one invocation and writes them plus a manifest."""

    def __init__(self, args, argv):
        self.args, self.argv = args, argv
        self.started = datetime.now(timezone.utc).isoformat()
        self.outputs = {}
        self.config = {}

    def emit(self, name, text, stdout=True):
        if stdout:
            sys.stdout.write(text)
        self.outputs[name] = text

    def finish(self):
        out_dir = getattr(self.args, "out_dir", None)
        if not out_dir:
            return
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, text in self.outputs.items():
            (out / name).write_text(text)
            paths.append(str(out / name))
        manifest = {
            "subcommand": self.args.command,
            "argv": self.argv,
            "config": self.config,
            "seed": self.args.seed,
            "version": __version__,
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "outputs": paths,
        }
        (out / "manifest.json").write_text(dumps(manifest))


# -- subcommands ----------------------------------------------------------------------

def cmd_estimate(args, run):
    text = _read_text(args.input)
    counts = parse_tokens(text) if args.format == "tokens" else parse_count_csv(text)
    spec = parse_index(args.index)
    est = estimate(counts, spec, args.estimator, args.level)
    run.config = {"input": args.input, "format": args.format, "index": spec.to_config(),
                  "estimator": args.estimator, "level": args.level}
    if args.csv:
        run.emit("estimate.csv", _estimate_csv(est))
    else:
        run.emit("estimate.json", dumps(est.to_dict()))


def cmd_theta(args, run):
    config = _load_json(args.config)
    if is_triangular(config):
        raise InputError("perturbed-uniform needs an explicit n for population values")
    dist = from_config(config)
    spec = parse_index(args.index)
    summary = population_summary(dist, spec)
    run.config = {"distribution": dist.to_config(), "index": spec.to_config()}
    run.emit("theta.json", dumps({"distribution": dist.to_config(), **summary.to_dict()}))


def _grid(text):
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"cannot parse grid {text!r}") from None


def cmd_conditions(args, run):
    config = _load_json(args.config)
    grid = _grid(args.grid)
    K = KExpression(args.K) if args.K else None
    dist = (lambda n: from_config(config, n)) if is_triangular(config) else from_config(config)
    try:
        report = check_conditions(dist, args.theorem, delta=args.delta, eps=args.eps,
                                  K_fn=K, n_grid=grid, beta=args.beta)
    except ValueError as exc:
        raise Infeasible(str(exc)) from None
    run.config = {"distribution": config, "theorem": args.theorem, "delta": args.delta,
                  "eps": args.eps, "K": args.K, "grid": grid, "beta": args.beta}
    run.emit("conditions.json", dumps(report.to_dict()))


def cmd_rate(args, run):
    record = _load_json(args.config)
    if not isinstance(record, dict):
        raise InputError("experiment config must be a JSON object")
    if args.seed_given:
        record["master_seed"] = args.seed
    record.setdefault("master_seed", args.seed)
    try:
        config = ExperimentConfig.from_dict(record)
    except TypeError as exc:
        raise InputError(f"bad experiment config: {exc}") from None
    report = run_experiment(config, n_jobs=args.workers)
    run.config = config.to_dict()
    run.emit("rate.json", dumps(report.to_dict()))
    run.emit("rate.csv", report.to_csv(), stdout=False)


def cmd_oracle(args, run):
    try:
        probs = [float(v) for v in args.probs.split(",")]
    except ValueError:
        raise InputError(f"cannot parse probabilities {args.probs!r}") from None
    spec = parse_index(args.index)
    law = exact_estimator_law(probs, args.n, args.estimator, spec)
    summary = population_summary(from_config({"family": "finite", "probs": probs}), spec)
    distance = None
    if summary.sigma_sq > 0:
        distance = exact_kolmogorov(law, summary.value, math.sqrt(summary.sigma_sq / args.n))
    run.config = {"probs": probs, "n": args.n, "estimator": args.estimator,
                  "index": spec.to_config()}
    rows = io.StringIO()
    writer = csv.writer(rows, lineterminator="\n")
    writer.writerow(["value", "probability"])
    for v, p in law.to_rows():
        writer.writerow([repr(v), repr(p)])
    result = {"probs": probs, "n": args.n, "estimator": args.estimator,
              "index": spec.name, "atoms": law.to_rows(), "mean": law.mean(),
              "var": law.var(), "truth": summary.value, "sigma_sq": summary.sigma_sq,
              "kolmogorov_distance": distance}
    if args.csv:
        run.emit("law.csv", rows.getvalue())
        sys.stderr.write(f"kolmogorov_distance={distance!r}\n")
        run.emit("oracle.json", dumps(result), stdout=False)
    else:
        run.emit("oracle.json", dumps(result))
        run.emit("law.csv", rows.getvalue(), stdout=False)


# -- parser -------------------------------------------------------------------------------

def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV}={raw!r} is not an integer") from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="divrate",
        description="Diversity index / entropy estimation and Berry-Esseen rate experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", help="write outputs and manifest.json here")
    common.add_argument("--seed", type=int, default=None,
                        help=f"master seed (default: ${SEED_ENV} or 0)")
    common.add_argument("--csv", action="store_true", help="tabular output where supported")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[common], help="estimate an index from data")
    p.add_argument("--input", default="-", help="data file ('-' for stdin)")
    p.add_argument("--format", choices=["tokens", "csv"], default="tokens")
    p.add_argument("--index", default="shannon", help="shannon | simpson | power:mu,nu")
    p.add_argument("--estimator", choices=["plugin", "mm", "jk"], default="plugin")
    p.add_argument("--level", type=float, default=DEFAULT_LEVEL)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("theta", parents=[common], help="population value, sigma^2, beta, gamma")
    p.add_argument("--config", required=True, help="distribution JSON (file or inline)")
    p.add_argument("--index", default="shannon")
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("conditions", parents=[common], help="check a theorem's hypotheses")
    p.add_argument("--config", required=True, help="distribution JSON (file or inline)")
    p.add_argument("--theorem", choices=THEOREMS, default="3.1")
    p.add_argument("--delta", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--K", help="K(n) expression, e.g. 'ceil(n^(1/5))' or 'ceil(ln n)'")
    p.add_argument("--grid", default="100,1000,10000,100000,1000000")
    p.set_defaults(func=cmd_conditions)

    p = sub.add_parser("rate", parents=[common], help="Monte Carlo rate experiment")
    p.add_argument("--config", required=True, help="experiment JSON (file or inline)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("oracle", parents=[common], help="exact law by enumeration")
    p.add_argument("--probs", required=True, help="comma-separated probabilities")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--estimator", choices=["plugin", "mm", "jk"], default="plugin")
    p.add_argument("--index", default="shannon")
    p.set_defaults(func=cmd_oracle)
    return parser


def _resolved_argv(args, argv):
    out = list(argv)
    if "--seed" not in out:
        out += ["--seed", str(args.seed)]
    return out


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.seed_given = args.seed is not None
        if args.seed is None:
            args.seed = _default_seed()
        run = _Run(args, _resolved_argv(args, argv))
        args.func(args, run)
        run.finish()
    except (Infeasible, DegenerateConfigError, OracleGuardError, DivergentSeriesError) as exc:
        sys.stderr.write(f"divrate {args.command}: infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except (InputError, ValueError) as exc:
        sys.stderr.write(f"divrate {args.command}: error: {exc}\n")
        return EXIT_INPUT
    return EXIT_OK


def replay(manifest_path):
    """Re-run the invocation recorded in a manifest."""
    manifest = json.loads(Path(manifest_path).read_text())
    return main(manifest["argv"])


if __name__ == "__main__":
    sys.exit(main())
