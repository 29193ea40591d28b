"""Gradient surrogates built from function values or stochastic gradients.

The two-point family perturbs x along a random sphere direction e, asks the
oracle for both values on one realization, and scales the difference by the
surface-to-volume ratio of the sphere times the unit outward normal:

    g = (ratio / mu) * (f(x + mu e) - f(x)) * normal(e)

For the l1 sphere the ratio is n*sqrt(n) and the normal is the sign pattern
over sqrt(n), so the product reduces to (n/mu) * difference * sign(e). For
l2 and linf the ratio is n. The directional family is the mu -> 0 limit of
the same formula with the true stochastic gradient in place of the
difference quotient; the Z family uses unnormalized directions with
E[Z Z^T] = I.

Every estimator draw consumes a fixed uniform budget:
direction slots + n slots for the realization + 2 perturbation slots,
whether or not a channel is attached. This keeps draw k of any two
configurations on common random numbers.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .oracle import NoiseChannel, Oracle
from .problems import StochasticProblem
from .rng import RngStream
from .sampling import (Scheme, SPHERE_SCHEMES, as_scheme,
                       gaussians_from_uniforms, sample_direction,
                       sample_directions, surface_normal, uniform_draws_needed)


class Family(str, Enum):
    SUBGRADIENT = "subgradient"
    SMOOTHED_TWO_POINT = "smoothed_two_point"
    DIRECTIONAL_EXACT = "directional_exact"
    Z_SCHEME = "z_scheme"
    Z_FINITE_DIFF = "z_finite_diff"


FAMILY_CODES = {
    Family.SUBGRADIENT: 0,
    Family.SMOOTHED_TWO_POINT: 1,
    Family.DIRECTIONAL_EXACT: 2,
    Family.Z_SCHEME: 3,
    Family.Z_FINITE_DIFF: 4,
}

TWO_POINT_FAMILIES = (Family.SMOOTHED_TWO_POINT, Family.Z_FINITE_DIFF)

Z_KINDS = (Scheme.RADEMACHER, Scheme.SCALED_GAUSSIAN, Scheme.COORDINATE)


@dataclass(frozen=True)
class EstimatorConfig:
    family: Family
    scheme: Scheme = Scheme.L2_SPHERE
    mu: float = None
    tau: float = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(str(self.family).lower())
                           if not isinstance(self.family, Family) else self.family)
        object.__setattr__(self, "scheme", as_scheme(self.scheme))
        if self.family == Family.SMOOTHED_TWO_POINT:
            if self.mu is None or self.mu <= 0.0:
                raise ValueError("smoothed two-point estimator needs mu > 0")
            if self.scheme not in SPHERE_SCHEMES:
                raise ValueError(f"no sphere geometry for scheme {self.scheme.value}")
        if self.family == Family.DIRECTIONAL_EXACT and self.scheme not in SPHERE_SCHEMES:
            raise ValueError(f"no sphere geometry for scheme {self.scheme.value}")
        if self.family in (Family.Z_SCHEME, Family.Z_FINITE_DIFF):
            if self.scheme not in Z_KINDS:
                raise ValueError(f"{self.scheme.value} is not a Z direction kind")
        if self.family == Family.Z_FINITE_DIFF and (self.tau is None or self.tau <= 0.0):
            raise ValueError("finite-difference estimator needs tau > 0")


@dataclass
class GradientEstimate:
    g: np.ndarray
    scheme: Scheme
    prefactor: float


def surface_to_volume(scheme: Scheme, n: int) -> float:
    """Vol(S)/Vol(B) for the unit sphere of the scheme."""
    scheme = as_scheme(scheme)
    if scheme == Scheme.L1_SPHERE:
        return n * math.sqrt(n)
    if scheme in (Scheme.L2_SPHERE, Scheme.LINF_SPHERE):
        return float(n)
    raise ValueError(f"no sphere geometry for scheme {scheme.value}")


def draws_per_estimate(family, scheme, n: int) -> int:
    """Uniform slots one estimator draw consumes (fixed per configuration)."""
    family = Family(family) if not isinstance(family, Family) else family
    n_dir = 0 if family == Family.SUBGRADIENT else uniform_draws_needed(scheme, n)
    return n_dir + n + 2


def _as_oracle(problem, channel) -> Oracle:
    if isinstance(channel, Oracle):
        return channel
    return Oracle(problem, channel)


def _skip_noise_slots(rng: RngStream):
    # keep the uniform budget identical with and without a channel
    rng.counter += 2


def smoothed_two_point(config: EstimatorConfig, problem: StochasticProblem,
                       channel, x: np.ndarray, rng: RngStream) -> GradientEstimate:
    mu = float(config.mu)
    if mu > problem.mu0:
        raise ValueError(f"mu={mu:g} exceeds the problem neighborhood {problem.mu0:g}")
    oracle = _as_oracle(problem, channel)
    e = sample_direction(config.scheme, problem.n, rng)
    resp = oracle.query_pair(x + mu * e.coords, x, rng)
    c = surface_to_volume(config.scheme, problem.n) / mu
    g = c * (resp.value_a - resp.value_b) * surface_normal(e)
    return GradientEstimate(g, e.scheme, c)


def directional_exact(scheme, problem: StochasticProblem, x: np.ndarray,
                      rng: RngStream) -> GradientEstimate:
    """mu -> 0 limit: surface ratio times directional derivative times normal."""
    scheme = as_scheme(scheme)
    e = sample_direction(scheme, problem.n, rng)
    eta = problem.draw_eta(rng)
    _skip_noise_slots(rng)
    c = surface_to_volume(scheme, problem.n)
    slope = float(problem.grad(x, eta) @ e.coords)
    return GradientEstimate(c * slope * surface_normal(e), scheme, c)


def z_scheme(problem: StochasticProblem, x: np.ndarray, z_kind,
             rng: RngStream) -> GradientEstimate:
    z_kind = as_scheme(z_kind)
    if z_kind not in Z_KINDS:
        raise ValueError(f"{z_kind.value} is not a Z direction kind")
    z = sample_direction(z_kind, problem.n, rng)
    eta = problem.draw_eta(rng)
    _skip_noise_slots(rng)
    slope = float(problem.grad(x, eta) @ z.coords)
    return GradientEstimate(slope * z.coords, z_kind, 1.0)


def z_finite_diff(problem: StochasticProblem, channel, x: np.ndarray, z_kind,
                  tau: float, rng: RngStream) -> GradientEstimate:
    z_kind = as_scheme(z_kind)
    if z_kind not in Z_KINDS:
        raise ValueError(f"{z_kind.value} is not a Z direction kind")
    tau = float(tau)
    if not 0.0 < tau <= problem.mu0:
        raise ValueError(f"tau={tau:g} outside (0, {problem.mu0:g}]")
    oracle = _as_oracle(problem, channel)
    z = sample_direction(z_kind, problem.n, rng)
    resp = oracle.query_pair(x + tau * z.coords, x, rng)
    g = ((resp.value_a - resp.value_b) / tau) * z.coords
    return GradientEstimate(g, z_kind, 1.0 / tau)


def subgradient(problem: StochasticProblem, x: np.ndarray,
                rng: RngStream) -> GradientEstimate:
    """Exact stochastic subgradient, placed on the same uniform budget."""
    eta = problem.draw_eta(rng)
    _skip_noise_slots(rng)
    return GradientEstimate(problem.grad(x, eta), Scheme.L2_SPHERE, 1.0)


def estimate(config: EstimatorConfig, problem: StochasticProblem, channel,
             x: np.ndarray, rng: RngStream) -> GradientEstimate:
    """Single dispatch point used by the solver."""
    if config.family == Family.SUBGRADIENT:
        return subgradient(problem, x, rng)
    if config.family == Family.SMOOTHED_TWO_POINT:
        return smoothed_two_point(config, problem, channel, x, rng)
    if config.family == Family.DIRECTIONAL_EXACT:
        return directional_exact(config.scheme, problem, x, rng)
    if config.family == Family.Z_SCHEME:
        return z_scheme(problem, x, config.scheme, rng)
    return z_finite_diff(problem, channel, x, config.scheme, config.tau, rng)


def l2_ball_points(n: int, rng: RngStream, count: int) -> np.ndarray:
    """Uniform draws from the unit l2 ball (Gaussian direction, U^(1/n) radius)."""
    block = n + (n & 1) + 1
    u = rng.uniforms(count * block).reshape(count, block)
    a = gaussians_from_uniforms(u[:, :block - 1])[:, :n]
    a /= np.sqrt(np.sum(a * a, axis=1, keepdims=True))
    return a * (u[:, -1] ** (1.0 / n))[:, None]


def _ball_points(ball, n: int, rng: RngStream, count: int) -> np.ndarray:
    name = ball.value if isinstance(ball, Scheme) else str(ball).strip().lower()
    if name in ("l1", "l1_ball"):
        return sample_directions(Scheme.L1_BALL, n, rng, count)
    if name in ("l2", "l2_ball"):
        return l2_ball_points(n, rng, count)
    raise ValueError(f"unknown smoothing ball {ball!r}")


def smoothed_value(problem: StochasticProblem, x: np.ndarray, mu: float,
                   scheme="l1", n_mc: int = 100000, rng: RngStream = None):
    """Monte-Carlo estimate of the ball-averaged objective at x.

    Returns (estimate, standard error). The average runs over both the
    ball perturbation and the noise realization.
    """
    if not 0.0 < mu <= problem.mu0:
        raise ValueError(f"mu={mu:g} outside (0, {problem.mu0:g}]")
    if rng is None:
        rng = RngStream(0)
    P = _ball_points(scheme, problem.n, rng, n_mc)
    U = rng.uniforms(n_mc * problem.n).reshape(n_mc, problem.n)
    H = problem.noise_r * (2.0 * U - 1.0)
    vals = problem.eval_batch(x + mu * P, H)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_mc))


def smoothed_gradient_fd(problem: StochasticProblem, x: np.ndarray, mu: float,
                         scheme="l1", n_mc: int = 200000, rng: RngStream = None,
                         h: float = 1e-4):
    """Central-difference gradient of the ball-averaged objective.

    One shared batch of (perturbation, realization) draws serves both sides
    of every coordinate difference, so the quotient's Monte-Carlo error
    comes only from the genuine spread of the pathwise slopes. Returns
    (gradient, per-coordinate standard error).
    """
    if rng is None:
        rng = RngStream(0)
    n = problem.n
    P = mu * _ball_points(scheme, n, rng, n_mc)
    U = rng.uniforms(n_mc * n).reshape(n_mc, n)
    H = problem.noise_r * (2.0 * U - 1.0)
    g = np.empty(n)
    se = np.empty(n)
    base = x + P
    step = np.zeros(n)
    for i in range(n):
        step[i] = h
        d = (problem.eval_batch(base + step, H)
             - problem.eval_batch(base - step, H)) / (2.0 * h)
        g[i] = d.mean()
        se[i] = d.std(ddof=1) / math.sqrt(n_mc)
        step[i] = 0.0
    return g, se


def l1_volume_ratio(n: int, mu: float) -> float:
    """Ball-to-surface volume ratio of the l1 sphere of radius mu."""
    if n < 2:
        raise ValueError(f"dimension must be at least 2, got {n}")
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    return mu / (n * math.sqrt(n))
