"""Entropic mirror descent on the simplex, in dual-averaging form.

The state is the running sum s of gradient surrogates. The primal iterate
is the exponential-weights image

    x_i = exp(-s_i / beta_{t+1}) / sum_l exp(-s_l / beta_{t+1}),

with beta_t = beta_eff * sqrt(t). Gradients are centered before summation
(their mean over coordinates is subtracted); the softmax is invariant to
that shift in exact arithmetic, and centering keeps s bounded so the
invariance survives tens of millions of floating-point steps.

Step-size constants: the subgradient schedule uses M / sqrt(ln n), the
noisy two-point schedule 2Mn / sqrt(ln n), and the smooth schedule
M2 * sqrt(5), each multiplying sqrt(t).
"""

import math
import time
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .estimators import (EstimatorConfig, FAMILY_CODES, Family,
                         GradientEstimate, TWO_POINT_FAMILIES)
from .oracle import CHANNEL_CODES, DomainError, NoiseChannel
from .problems import KIND_CODES, StochasticProblem
from .rng import RngStream
from .sampling import SCHEME_CODES, Scheme

SCHEDULE_KINDS = ("thm1", "thm2", "thm3", "manual")

# worst-case l2 norm of a direction draw, per scheme
_DIR_L2_SUP = {
    Scheme.L1_SPHERE: lambda n: 1.0,
    Scheme.L2_SPHERE: lambda n: 1.0,
    Scheme.LINF_SPHERE: lambda n: math.sqrt(n),
    Scheme.LINF_BALL: lambda n: math.sqrt(n),
    Scheme.RADEMACHER: lambda n: math.sqrt(n),
    Scheme.COORDINATE: lambda n: math.sqrt(n),
    Scheme.L1_BALL: lambda n: 1.0,
    Scheme.SCALED_GAUSSIAN: lambda n: math.sqrt(n),
}


class TuneResult(NamedTuple):
    mu: float
    delta_max: float
    N: int
    beta_const: float


def tune_theorem2(M: float, n: int, eps: float, sigma: float = None,
                  mu0: float = 1.0) -> TuneResult:
    """Smoothing radius, admissible noise, and iteration count for the
    nonsmooth noisy two-point setting (guarantee in expectation, or with
    probability 1 - sigma when sigma is given)."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if M <= 0.0:
        raise ValueError("M must be positive")
    mu = eps / (2.0 * M)
    if mu > mu0:
        raise DomainError(
            f"smoothing radius {mu:g} exceeds the problem neighborhood "
            f"{mu0:g}; decrease eps or enlarge mu0")
    if sigma is None:
        N = math.ceil(64.0 * M * M * n * n * math.log(n) / (eps * eps))
    else:
        if not 0.0 < sigma < 1.0:
            raise ValueError("sigma must lie in (0, 1)")
        N = math.ceil(128.0 * M * M * n * n / (eps * eps)
                      * (math.log(n) + 8.0 * math.log(1.0 / sigma)))
    return TuneResult(mu, eps / 4.0, N, 2.0 * M * n)


def tune_theorem3(M2: float, L2: float, n: int, eps: float,
                  qbar="inf") -> TuneResult:
    """Tuning for the smooth noisy two-point setting on l2-sphere
    directions. qbar is the norm in which the estimator's second moment
    was bounded: 'inf' (the simplex setup) or 2."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if not (np.isfinite(L2) and L2 > 0.0):
        raise ValueError(
            "finite positive gradient Lipschitz constant required; "
            "nonsmooth problems take the theorem-2 tuning instead")
    q = str(qbar).strip().lower()
    if q in ("inf", "oo"):
        cap = (M2 / L2) * math.sqrt(1.0 / (6.0 * n))
        dnorm = math.sqrt(96.0 * n)
    elif q == "2":
        cap = (M2 / L2) * math.sqrt(4.0 / (3.0 * n))
        dnorm = math.sqrt(12.0 * n)
    else:
        raise ValueError(f"qbar must be 2 or inf, got {qbar!r}")
    mu = min(max(eps / (2.0 * M2), math.sqrt(eps / L2)), cap)
    N = math.ceil(80.0 * M2 * M2 * math.log(n) ** 2 / (eps * eps))
    return TuneResult(mu, M2 * mu / dnorm, N, M2 * math.sqrt(5.0))


@dataclass(frozen=True)
class Schedule:
    kind: str
    beta_eff: float          # beta_t = beta_eff * sqrt(t)
    const: float             # dual constant before any 1/sqrt(ln n)
    mu: float = None
    delta_max: float = None
    N: int = None
    eps: float = None


def make_schedule(kind: str, problem: StochasticProblem = None, *,
                  eps: float = None, sigma: float = None, qbar="inf",
                  beta_const: float = None, N: int = None) -> Schedule:
    kind = str(kind).strip().lower()
    if kind not in SCHEDULE_KINDS:
        raise ValueError(f"unknown schedule {kind!r}")
    if kind == "manual":
        if beta_const is None or beta_const <= 0.0:
            raise ValueError("manual schedule needs beta_const > 0")
        return Schedule("manual", beta_const, beta_const, N=N)
    if problem is None:
        raise ValueError(f"schedule {kind} derives its constant from a problem")
    root_ln = math.sqrt(math.log(problem.n))
    if kind == "thm1":
        return Schedule("thm1", problem.M / root_ln, problem.M, N=N, eps=eps)
    if kind == "thm2":
        if eps is None:
            raise ValueError("thm2 schedule needs eps")
        mu, dmax, n_auto, const = tune_theorem2(problem.M, problem.n, eps,
                                                sigma, problem.mu0)
        return Schedule("thm2", const / root_ln, const, mu, dmax,
                        N if N is not None else n_auto, eps)
    if eps is None:
        raise ValueError("thm3 schedule needs eps")
    mu, dmax, n_auto, const = tune_theorem3(problem.M2, problem.L2,
                                            problem.n, eps, qbar)
    return Schedule("thm3", const, const, mu, dmax,
                    N if N is not None else n_auto, eps)


@dataclass
class DualState:
    s: np.ndarray
    beta_eff: float
    t: int = 0

    @classmethod
    def fresh(cls, n: int, beta_eff: float) -> "DualState":
        return cls(np.zeros(n), float(beta_eff))

    def primal(self) -> np.ndarray:
        beta = self.beta_eff * math.sqrt(self.t + 1.0)
        w = np.exp(-(self.s - self.s.min()) / beta)
        return w / w.sum()


def md_step(state: DualState, g) -> np.ndarray:
    """Absorb one gradient surrogate and return the next iterate."""
    g = g.g if isinstance(g, GradientEstimate) else np.asarray(g, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient estimate has non-finite entries")
    state.s += g - g.mean()
    state.t += 1
    return state.primal()


@dataclass
class RunReport:
    x_bar: np.ndarray
    gap_trace: list          # (t, f(mean of first t iterates) - f*)
    jensen_trace: list       # (t, mean of f over first t iterates - f*)
    oracle_calls: int
    config: dict
    wall_time: float
    warnings: list
    max_sum_dev: float
    min_coord: float

    @property
    def final_gap(self) -> float:
        return self.gap_trace[-1][1]


def trace_grid(N: int) -> np.ndarray:
    ts = []
    t = 1
    while t < N:
        ts.append(t)
        t *= 2
    ts.append(N)
    return np.asarray(ts, dtype=np.int64)


def _check_perturbation_reach(config: EstimatorConfig,
                              problem: StochasticProblem):
    if config.family == Family.SMOOTHED_TWO_POINT:
        step = config.mu
    elif config.family == Family.Z_FINITE_DIFF:
        step = config.tau
    else:
        return
    reach = step * _DIR_L2_SUP[config.scheme](problem.n)
    if reach > problem.mu0 + 1e-9:
        raise DomainError(
            f"perturbation reach {reach:g} exceeds the mu0="
            f"{problem.mu0:g} neighborhood for scheme {config.scheme.value}")


def run(problem: StochasticProblem, channel, config: EstimatorConfig,
        schedule: Schedule, N: int, rng) -> RunReport:
    """Execute N mirror-descent steps from the uniform start.

    rng may be an RngStream (its seed and stream id name the run's random
    sequence) or a bare integer seed. One estimator draw per step; the
    iterate average and the analytic optimality gap are traced on a
    doubling grid of step counts.
    """
    if N is None:
        N = schedule.N
    if N is None or N <= 0:
        raise ValueError(f"iteration count must be positive, got {N}")
    if isinstance(rng, RngStream):
        seed, stream = rng.seed, rng.stream
    else:
        seed, stream = int(rng), 0
    if channel is None:
        channel = NoiseChannel()
    _check_perturbation_reach(config, problem)

    warns = []
    if (schedule.delta_max is not None and channel.delta > schedule.delta_max
            and config.family in TWO_POINT_FAMILIES):
        warns.append(
            f"channel delta {channel.delta:g} exceeds the schedule's "
            f"admissible level {schedule.delta_max:g}; guarantee void")
    if (schedule.mu is not None and config.mu is not None
            and abs(config.mu - schedule.mu) > 1e-12):
        warns.append(
            f"estimator mu {config.mu:g} differs from the schedule's "
            f"tuned value {schedule.mu:g}")
    for w in warns:
        warnings.warn(w, RuntimeWarning, stacklevel=2)

    grid = trace_grid(N)
    t0 = time.perf_counter()
    xbar_snaps, favg_snaps, max_dev, min_coord = kernels.run_md(
        problem.n, int(N), FAMILY_CODES[config.family],
        SCHEME_CODES[config.scheme], config.mu, config.tau,
        KIND_CODES[problem.kind], problem.param, problem.noise_r,
        CHANNEL_CODES[channel.kind], channel.delta, schedule.beta_eff,
        seed, stream, grid)
    wall = time.perf_counter() - t0

    gap_trace = [(int(t), problem.f(xbar_snaps[i]) - problem.f_star)
                 for i, t in enumerate(grid)]
    jensen_trace = [(int(t), float(favg_snaps[i]) - problem.f_star)
                    for i, t in enumerate(grid)]
    calls = 2 * int(N) if config.family in TWO_POINT_FAMILIES else 0
    echo = {
        "problem": problem.kind.value, "n": problem.n,
        "family": config.family.value, "scheme": config.scheme.value,
        "mu": config.mu, "tau": config.tau,
        "channel": channel.kind.value, "delta": channel.delta,
        "schedule": schedule.kind, "beta_eff": schedule.beta_eff,
        "N": int(N), "seed": seed, "stream": stream,
    }
    return RunReport(xbar_snaps[-1].copy(), gap_trace, jensen_trace, calls,
                     echo, wall, warns, float(max_dev), float(min_coord))
