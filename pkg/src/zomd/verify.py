"""Monte-Carlo verification suites behind `zomd verify`.

Each suite measures a statistical identity or bound the estimators are
supposed to satisfy and reports one row per check: the measured value, the
reference it is held against, the tolerance, and whether it passed.
Tolerances are multiples of the Monte-Carlo standard error, so a failure
means a genuine violation, not sampling luck.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .estimators import FAMILY_CODES, Family, l1_volume_ratio, smoothed_gradient_fd
from .oracle import CHANNEL_CODES, ChannelKind
from .problems import KIND_CODES, ProblemKind, make_problem, random_simplex_point
from .rng import RngStream
from .sampling import SCHEME_CODES, Scheme
from .solver import tune_theorem3

_F = FAMILY_CODES
_S = SCHEME_CODES
_K = KIND_CODES
_C = CHANNEL_CODES


@dataclass
class CheckRow:
    suite: str
    name: str
    measured: float
    reference: float
    tolerance: float
    passed: bool

    def __str__(self):
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] {self.suite:12s} {self.name:42s} "
                f"measured={self.measured:12.6g} reference={self.reference:12.6g} "
                f"tol={self.tolerance:.3g}")


def _interior_point(n: int) -> np.ndarray:
    x = np.arange(1.0, n + 1.0)
    return x / x.sum()


def _mean_and_se(count, n, family, scheme, mu, tau, kind, param, r,
                 chan, delta, seed, stream, x):
    out = kernels.mc_estimator_moments(count, n, family, scheme, mu, tau,
                                       kind, param, r, chan, delta,
                                       seed, stream, x)
    sum_g, sum_g2 = out[0], out[1]
    mean = sum_g / count
    var = np.maximum(sum_g2 / count - mean * mean, 0.0)
    return mean, np.sqrt(var / count), out


def unbiasedness_suite(n_list=(2, 4, 8), seed=2024, draws=400000):
    """Two-point estimator mean against the finite-difference gradient of
    the ball-averaged objective, with and without value perturbation."""
    rows = []
    mu = 0.25
    fd_draws = max(draws // 4, 50000)
    configs = [(Scheme.L1_SPHERE, "l1"), (Scheme.L2_SPHERE, "l2")]
    for n in n_list:
        problem = make_problem(ProblemKind.QUADRATIC, n)
        x = _interior_point(n)
        for scheme, ball in configs:
            ref, ref_se = smoothed_gradient_fd(
                problem, x, mu, ball, fd_draws,
                RngStream(seed, 7000 + 13 * n + _S[scheme]))
            for chan, delta in ((ChannelKind.NONE, 0.0),
                                (ChannelKind.UNIFORM, 0.01)):
                mean, se, _ = _mean_and_se(
                    draws, n, _F[Family.SMOOTHED_TWO_POINT], _S[scheme],
                    mu, 0.0, _K[problem.kind], problem.param, problem.noise_r,
                    _C[chan], delta, seed, 100 + 13 * n + _S[scheme] + 7 * _C[chan], x)
                comb = np.sqrt(se**2 + ref_se**2)
                z = float(np.max(np.abs(mean - ref) / comb))
                rows.append(CheckRow(
                    "unbiasedness",
                    f"{scheme.value} n={n} delta={delta:g} max|z|",
                    z, 0.0, 4.0, z <= 4.0))
    return rows


def variance_bounds_suite(n_list=(4, 8, 16), seed=2024, draws=200000):
    """Rademacher Z-scheme max-norm second moment against the M2^2 cap,
    on every problem fixture."""
    rows = []
    for n in n_list:
        for kind in ProblemKind:
            problem = make_problem(kind, n)
            x = random_simplex_point(n, RngStream(seed, 500 + _K[kind]))
            _, _, out = _mean_and_se(
                draws, n, _F[Family.Z_SCHEME], _S[Scheme.RADEMACHER],
                0.0, 0.0, _K[kind], problem.param, problem.noise_r,
                0, 0.0, seed, 900 + 17 * n + _K[kind], x)
            sinf, sinfsq = out[4], out[5]
            m = sinf / draws
            se = math.sqrt(max(sinfsq / draws - m * m, 0.0) / draws)
            bound = problem.M2**2
            rows.append(CheckRow(
                "variance", f"rademacher {kind.value} n={n} E|g|inf^2",
                m, bound, 3.0 * se, m <= bound + 3.0 * se))
    return rows


def volume_ratio_suite(n_list=(2, 3, 4, 5, 6), seed=2024, draws=300000):
    """Tabulates the l1 ball-to-surface ratio and checks the constant it
    implies: the l1 directional estimator must recover a linear gradient
    in expectation with no leftover scale factor."""
    rows = []
    for n in n_list:
        ratio = l1_volume_ratio(n, 1.0)
        rows.append(CheckRow(
            "volume-ratio", f"n={n} mu/(n sqrt(n))",
            ratio, 1.0 / (n * math.sqrt(n)), 0.0, True))
        problem = make_problem(ProblemKind.LINEAR, n)
        x = _interior_point(n)
        mean, se, _ = _mean_and_se(
            draws, n, _F[Family.DIRECTIONAL_EXACT], _S[Scheme.L1_SPHERE],
            0.0, 0.0, _K[problem.kind], problem.param, problem.noise_r,
            0, 0.0, seed, 1200 + n, x)
        z = float(np.max(np.abs(mean - problem.c) / se))
        rows.append(CheckRow(
            "volume-ratio", f"n={n} mean recovery max|z|",
            z, 0.0, 4.0, z <= 4.0))
    return rows


def second_moment_bounds(n: int, M2: float, L2: float, mu: float, delta: float):
    """The two displayed caps for the noisy smoothed estimator on
    l2-sphere directions: (l2 cap, max-norm cap)."""
    lnn = math.log(n)
    b2 = 3.0 * n * M2**2 + 0.75 * n**2 * L2**2 * mu**2 \
        + 12.0 * n**2 * delta**2 / mu**2
    binf = 4.0 * lnn * M2**2 + 3.0 * n * lnn * L2**2 * mu**2 \
        + 48.0 * n * lnn * delta**2 / mu**2
    return b2, binf


def moment_bounds_suite(n_list=(8, 32), seed=2024, draws=200000, eps=0.15):
    """Measured second moments of the noisy smoothed estimator under the
    tuned (mu, delta_max) against the displayed caps, 10% slack plus MC
    error."""
    rows = []
    for n in n_list:
        problem = make_problem(ProblemKind.QUADRATIC, n)
        mu, dmax, _, _ = tune_theorem3(problem.M2, problem.L2, n, eps)
        x = _interior_point(n)
        _, _, out = _mean_and_se(
            draws, n, _F[Family.SMOOTHED_TWO_POINT], _S[Scheme.L2_SPHERE],
            mu, 0.0, _K[problem.kind], problem.param, problem.noise_r,
            _C[ChannelKind.UNIFORM], dmax, seed, 1500 + n, x)
        b2, binf = second_moment_bounds(n, problem.M2, problem.L2, mu, dmax)
        for label, sums, sumsq, bound in (
                ("E|g|2^2", out[2], out[3], b2),
                ("E|g|inf^2", out[4], out[5], binf)):
            m = sums / draws
            se = math.sqrt(max(sumsq / draws - m * m, 0.0) / draws)
            tol = 0.10 * bound + 3.0 * se
            rows.append(CheckRow(
                "moment-bounds", f"n={n} {label} (mu={mu:.4g} d={dmax:.4g})",
                m, bound, tol, m <= bound + tol))
    return rows


_SUITES = {
    "unbiasedness": unbiasedness_suite,
    "variance": variance_bounds_suite,
    "volume": volume_ratio_suite,
    "moments": moment_bounds_suite,
}

_ALIASES = {
    "unbiasedness": "unbiasedness",
    "variancebounds": "variance",
    "variance": "variance",
    "variance-bounds": "variance",
    "volumeratio": "volume",
    "volume": "volume",
    "volume-ratio": "volume",
    "momentbounds": "moments",
    "moments": "moments",
    "moment-bounds": "moments",
}


def verify_suite(which, n_list=None, seed=2024):
    """Run one named suite (or 'all') and return its check rows."""
    token = str(which).strip().lower().replace("_", "-")
    if token == "all":
        rows = []
        for fn in _SUITES.values():
            rows.extend(fn(seed=seed) if n_list is None
                        else fn(n_list=tuple(n_list), seed=seed))
        return rows
    if token not in _ALIASES:
        raise ValueError(f"unknown verification suite {which!r}")
    fn = _SUITES[_ALIASES[token]]
    return fn(seed=seed) if n_list is None else fn(n_list=tuple(n_list), seed=seed)
