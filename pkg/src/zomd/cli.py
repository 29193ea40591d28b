"""Command-line experiment runner.

Verbs:
  zomd run     one configuration, replicated over seeds, one result row
  zomd sweep   the same configuration across a list of dimensions
  zomd verify  Monte-Carlo verification suites (statistical identities)
  zomd bench   time the compiled kernels against the vectorized fallback

Results are written as CSV (or JSON lines) with the fixed header

  experiment,n,scheme,delta,N,gap_mean,gap_se,bound,bound_ok,oracle_calls,seconds

Identical invocations produce byte-identical output; the seconds column is
0.0 unless --timing is passed, precisely so that timing jitter never breaks
that guarantee. Option precedence: command line > --config file > built-in
default. Exit code is 0 iff every requested check (bound flags, verify
rows) passed.
"""

import argparse
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimators import EstimatorConfig, Family
from .oracle import NoiseChannel
from .problems import ProblemKind, make_problem
from .rng import RngStream
from .sampling import Scheme
from .solver import Schedule, make_schedule, run
from .verify import verify_suite

CSV_HEADER = ("experiment,n,scheme,delta,N,gap_mean,gap_se,"
              "bound,bound_ok,oracle_calls,seconds")

ESTIMATORS = {
    "p1": (Family.SMOOTHED_TWO_POINT, Scheme.L1_SPHERE),
    "p2": (Family.SMOOTHED_TWO_POINT, Scheme.L2_SPHERE),
    "pinf": (Family.SMOOTHED_TWO_POINT, Scheme.LINF_SPHERE),
    "directional-p1": (Family.DIRECTIONAL_EXACT, Scheme.L1_SPHERE),
    "directional-p2": (Family.DIRECTIONAL_EXACT, Scheme.L2_SPHERE),
    "directional-pinf": (Family.DIRECTIONAL_EXACT, Scheme.LINF_SPHERE),
    "rademacher": (Family.Z_SCHEME, Scheme.RADEMACHER),
    "coordinate": (Family.Z_SCHEME, Scheme.COORDINATE),
    "gaussian": (Family.Z_SCHEME, Scheme.SCALED_GAUSSIAN),
    "rademacher-fd": (Family.Z_FINITE_DIFF, Scheme.RADEMACHER),
    "coordinate-fd": (Family.Z_FINITE_DIFF, Scheme.COORDINATE),
    "gaussian-fd": (Family.Z_FINITE_DIFF, Scheme.SCALED_GAUSSIAN),
    "subgradient": (Family.SUBGRADIENT, Scheme.L2_SPHERE),
}

_DEFAULTS = {
    "problem": "linear", "n": "10", "estimator": "p2", "mu": "auto",
    "tau": "0.01", "noise": "none", "delta": "0", "bits": "8",
    "schedule": "thm1", "N": "auto", "eps": None, "sigma": None,
    "beta": None, "seed": "0", "reps": "2", "threads": "0",
    "out": None, "format": "csv", "timing": False, "config": None,
    "suite": "all", "qbar": "inf",
}


def _fmt(v: float) -> str:
    return f"{v:.10g}"


@dataclass
class ResultRow:
    experiment: str
    n: int
    scheme: str
    delta: float
    N: int
    gap_mean: float
    gap_se: float          # None when a single replication was run
    bound: float           # None for the manual schedule
    bound_ok: bool         # None when bound is None
    oracle_calls: int
    seconds: float

    def csv_line(self) -> str:
        se = "" if self.gap_se is None else _fmt(self.gap_se)
        bound = "" if self.bound is None else _fmt(self.bound)
        ok = "" if self.bound_ok is None else ("true" if self.bound_ok else "false")
        secs = _fmt(self.seconds) if self.seconds else "0.0"
        return ",".join([self.experiment, str(self.n), self.scheme,
                         _fmt(self.delta), str(self.N), _fmt(self.gap_mean),
                         se, bound, ok, str(self.oracle_calls), secs])

    def json_obj(self) -> dict:
        return {"experiment": self.experiment, "n": self.n,
                "scheme": self.scheme, "delta": self.delta, "N": self.N,
                "gap_mean": self.gap_mean, "gap_se": self.gap_se,
                "bound": self.bound, "bound_ok": self.bound_ok,
                "oracle_calls": self.oracle_calls, "seconds": self.seconds}


@dataclass
class ExperimentSpec:
    problem: str = "linear"
    n_list: tuple = (10,)
    estimator: str = "p2"
    mu: str = "auto"
    tau: float = 0.01
    noise: str = "none"
    delta: float = 0.0
    bits: int = 8
    schedule: str = "thm1"
    N: str = "auto"
    eps: float = None
    sigma: float = None
    beta: float = None
    qbar: str = "inf"
    seed: int = 0
    reps: int = 2
    threads: int = 0
    out: str = None
    fmt: str = "csv"
    timing: bool = False


def _load_config(path: str) -> dict:
    cfg = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line (need key=value): {raw!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            cfg[key] = val
    unknown = set(cfg) - set(_DEFAULTS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _get(args, cfg: dict, key: str):
    flag = getattr(args, key, None)
    if flag is not None and flag is not False:
        return flag
    if key in cfg:
        val = cfg[key]
        if key == "timing":
            return str(val).strip().lower() in ("1", "true", "yes", "on")
        return val
    return _DEFAULTS[key]


def _int_list(text) -> tuple:
    return tuple(int(part) for part in str(text).split(",") if part.strip())


def _opt_float(v):
    return None if v is None else float(v)


def _spec_from_args(args) -> ExperimentSpec:
    cfg = _load_config(args.config) if getattr(args, "config", None) else {}
    g = lambda key: _get(args, cfg, key)
    return ExperimentSpec(
        problem=str(g("problem")), n_list=_int_list(g("n")),
        estimator=str(g("estimator")), mu=str(g("mu")),
        tau=float(g("tau")), noise=str(g("noise")), delta=float(g("delta")),
        bits=int(g("bits")), schedule=str(g("schedule")), N=str(g("N")),
        eps=_opt_float(g("eps")), sigma=_opt_float(g("sigma")),
        beta=_opt_float(g("beta")), qbar=str(g("qbar")), seed=int(g("seed")),
        reps=int(g("reps")), threads=int(g("threads")), out=g("out"),
        fmt=str(g("format")), timing=bool(g("timing")))


def _one_row(spec: ExperimentSpec, n: int) -> ResultRow:
    if spec.estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {spec.estimator!r}; "
                         f"choices: {', '.join(sorted(ESTIMATORS))}")
    family, scheme = ESTIMATORS[spec.estimator]
    problem = make_problem(spec.problem, n)
    channel = NoiseChannel(spec.noise, spec.delta, spec.bits)
    schedule = make_schedule(spec.schedule, problem, eps=spec.eps,
                             sigma=spec.sigma, qbar=spec.qbar,
                             beta_const=spec.beta)

    mu = None
    if family == Family.SMOOTHED_TWO_POINT:
        if spec.mu == "auto":
            mu = schedule.mu
            if mu is None:
                raise ValueError(
                    "--mu auto needs a tuned schedule (thm2/thm3); "
                    "give an explicit --mu")
        else:
            mu = float(spec.mu)
    tau = spec.tau if family == Family.Z_FINITE_DIFF else None
    config = EstimatorConfig(family, scheme, mu=mu, tau=tau)

    if spec.N == "auto":
        N = schedule.N
        if N is None:
            raise ValueError("--N auto needs a tuned schedule (thm2/thm3); "
                             "give an explicit --N")
    else:
        N = int(spec.N)

    seeds = [spec.seed + i for i in range(spec.reps)]
    t0 = time.perf_counter()

    def _one(sd):
        return run(problem, channel, config, schedule, N, RngStream(sd))

    if spec.threads > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            reports = list(pool.map(_one, seeds))
    else:
        reports = [_one(sd) for sd in seeds]
    wall = time.perf_counter() - t0

    gaps = np.array([rep.final_gap for rep in reports])
    gap_mean = float(gaps.mean())
    gap_se = (float(gaps.std(ddof=1) / math.sqrt(len(gaps)))
              if len(gaps) >= 2 else None)
    if schedule.kind == "thm1":
        bound = 2.0 * problem.M * math.sqrt(math.log(n) / N)
    elif schedule.kind in ("thm2", "thm3"):
        bound = schedule.eps
    else:
        bound = None
    bound_ok = None if bound is None else bool(gap_mean <= bound)
    exp_id = (f"{spec.problem}:{spec.estimator}:{spec.schedule}:{spec.noise}"
              f":n={n}:N={N}:delta={spec.delta:g}:seed={spec.seed}")
    return ResultRow(exp_id, n, spec.estimator, channel.delta, N, gap_mean,
                     gap_se, bound, bound_ok, reports[0].oracle_calls,
                     wall if spec.timing else 0.0)


def run_experiment(spec: ExperimentSpec) -> list:
    """Execute the spec and write its rows; returns the rows."""
    rows = [_one_row(spec, n) for n in spec.n_list]
    rows.sort(key=lambda row: row.experiment)
    _write_rows(rows, spec.out, spec.fmt)
    return rows


def _write_rows(rows, out, fmt):
    if fmt == "jsonl":
        text = "".join(json.dumps(r.json_obj(), sort_keys=True) + "\n"
                       for r in rows)
    else:
        text = CSV_HEADER + "\n" + "".join(r.csv_line() + "\n" for r in rows)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_common(sub):
    sub.add_argument("--problem", choices=["linear", "distl1", "quad", "maxlin"])
    sub.add_argument("--n", help="dimension (sweep: comma list)")
    sub.add_argument("--estimator")
    sub.add_argument("--mu", help="smoothing radius, or 'auto' for the tuned value")
    sub.add_argument("--tau", help="finite-difference step")
    sub.add_argument("--noise", choices=["none", "uniform", "sign", "mantissa"])
    sub.add_argument("--delta", help="noise channel magnitude bound")
    sub.add_argument("--bits", help="mantissa channel bit count")
    sub.add_argument("--schedule", choices=["thm1", "thm2", "thm3", "manual"])
    sub.add_argument("--N", help="iteration count, or 'auto' for the tuned value")
    sub.add_argument("--eps", help="target accuracy for tuned schedules")
    sub.add_argument("--sigma", help="failure probability (high-probability tuning)")
    sub.add_argument("--beta", help="step constant for the manual schedule")
    sub.add_argument("--qbar", choices=["2", "inf"])
    sub.add_argument("--seed", help="base seed; replication i uses seed+i")
    sub.add_argument("--reps", help="replication count")
    sub.add_argument("--threads", help="worker threads (0 = serial)")
    sub.add_argument("--out", help="output path (default stdout)")
    sub.add_argument("--format", choices=["csv", "jsonl"])
    sub.add_argument("--timing", action="store_true", default=None,
                     help="record wall time in the seconds column")
    sub.add_argument("--config", help="key=value defaults file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zomd",
        description="Gradient-free mirror descent on the simplex: "
                    "experiment runner and verification harness.")
    subs = parser.add_subparsers(dest="verb", required=True)
    for verb, text in (("run", "replicated runs of one configuration"),
                       ("sweep", "the configuration across dimensions")):
        _add_common(subs.add_parser(verb, help=text))
    ver = subs.add_parser("verify", help="Monte-Carlo verification suites")
    ver.add_argument("--suite",
                     choices=["unbiasedness", "variance", "volume",
                              "moments", "all"])
    ver.add_argument("--n", help="comma list of dimensions")
    ver.add_argument("--seed")
    ver.add_argument("--threads")
    ver.add_argument("--config", help="key=value defaults file")
    ben = subs.add_parser("bench", help="compiled kernels vs numpy fallback")
    ben.add_argument("--problem", choices=["linear", "distl1", "quad", "maxlin"])
    ben.add_argument("--n")
    ben.add_argument("--estimator")
    ben.add_argument("--N")
    ben.add_argument("--seed")
    ben.add_argument("--config", help="key=value defaults file")
    return parser


def _cmd_verify(args) -> int:
    cfg = _load_config(args.config) if getattr(args, "config", None) else {}
    suite = str(_get(args, cfg, "suite"))
    seed = int(_get(args, cfg, "seed"))
    n_raw = getattr(args, "n", None) or cfg.get("n")
    n_list = _int_list(n_raw) if n_raw else None
    rows = verify_suite(suite, n_list, seed)
    for row in rows:
        print(row)
    failed = [row for row in rows if not row.passed]
    print(f"{len(rows) - len(failed)}/{len(rows)} checks passed")
    return 1 if failed else 0


def _cmd_bench(args) -> int:
    from .backend import HAS_NUMBA
    cfg = _load_config(args.config) if getattr(args, "config", None) else {}
    g = lambda key, dv: getattr(args, key, None) or cfg.get(key, dv)
    spec = ExperimentSpec(
        problem=str(g("problem", "quad")), n_list=(int(g("n", "20")),),
        estimator=str(g("estimator", "p2")), mu="0.1",
        schedule="manual", beta=1.0, N=str(g("N", "200000")),
        seed=int(g("seed", "0")), reps=1, timing=True)
    backends = ["numba", "numpy"] if HAS_NUMBA else ["numpy"]
    results = {}
    prior = os.environ.get("ZOMD_BACKEND")
    try:
        for backend in backends:
            os.environ["ZOMD_BACKEND"] = backend
            if backend == "numba":  # compile outside the timed region
                _one_row(spec, spec.n_list[0])
            t0 = time.perf_counter()
            row = _one_row(spec, spec.n_list[0])
            results[backend] = (time.perf_counter() - t0, row.gap_mean)
    finally:
        if prior is None:
            os.environ.pop("ZOMD_BACKEND", None)
        else:
            os.environ["ZOMD_BACKEND"] = prior
    print(f"workload: {spec.problem} n={spec.n_list[0]} "
          f"{spec.estimator} N={spec.N}")
    for backend, (secs, gap) in results.items():
        print(f"  {backend:6s} {secs:9.3f} s   final gap {gap:.6g}")
    if len(results) == 2:
        gaps = [results[b][1] for b in backends]
        agree = abs(gaps[0] - gaps[1]) <= 1e-9 + 1e-6 * abs(gaps[0])
        print(f"  backends agree: {'yes' if agree else 'NO'}")
        return 0 if agree else 1
    return 0


def _dedup_showwarning(emit):
    # the "once" filter dedupes through a registry that any filter mutation
    # (e.g. a jit compile) invalidates, so replicated runs would repeat
    # identical warnings; dedupe by message text instead
    seen = set()

    def show(message, category, filename, lineno, file=None, line=None):
        key = (str(message), category.__name__)
        if key not in seen:
            seen.add(key)
            emit(message, category, filename, lineno, file, line)
    return show


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with warnings.catch_warnings():
        warnings.simplefilter("always", RuntimeWarning)
        warnings.showwarning = _dedup_showwarning(warnings.showwarning)
        if args.verb == "verify":
            return _cmd_verify(args)
        if args.verb == "bench":
            return _cmd_bench(args)
        spec = _spec_from_args(args)
        rows = run_experiment(spec)
    bad = [row for row in rows if row.bound_ok is False]
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
