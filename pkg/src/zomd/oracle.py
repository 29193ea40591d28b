"""Inexact two-point function-value oracle.

One query evaluates the objective at two points on the SAME noise
realization eta, then perturbs each value independently through a bounded
noise channel. Every emitted perturbation satisfies |d| <= delta and its law
never depends on the query point.

A query always consumes n + 2 uniform slots (eta, then one perturbation
slot per value), whatever the channel kind, so runs with different channels
share common random numbers.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .problems import StochasticProblem, l2_dist_to_simplex
from .rng import RngStream

DOMAIN_SLACK = 1e-9


class DomainError(ValueError):
    """Query point outside the mu0-neighborhood of the simplex."""


class ChannelKind(str, Enum):
    NONE = "none"
    UNIFORM = "uniform"
    SIGN = "sign"
    MANTISSA = "mantissa"


CHANNEL_CODES = {
    ChannelKind.NONE: 0,
    ChannelKind.UNIFORM: 1,
    ChannelKind.SIGN: 2,
    ChannelKind.MANTISSA: 3,
}


def as_channel_kind(value) -> ChannelKind:
    if isinstance(value, ChannelKind):
        return value
    return ChannelKind(str(value).strip().lower())


@dataclass(frozen=True)
class NoiseChannel:
    """Value perturbation with a hard magnitude bound delta.

    uniform: additive, uniform on [-delta, delta].
    sign: additive, +-delta with equal probability (worst admissible case).
    mantissa: value rounded down to a 2^-bits grid plus uniform dither of
    one grid step, so delta is 2^-bits by construction.
    """

    kind: ChannelKind = ChannelKind.NONE
    delta: float = 0.0
    bits: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", as_channel_kind(self.kind))
        if self.kind == ChannelKind.MANTISSA:
            if self.bits < 1:
                raise ValueError("mantissa channel needs bits >= 1")
            object.__setattr__(self, "delta", 2.0 ** (-self.bits))
        elif self.delta < 0.0:
            raise ValueError("delta must be nonnegative")

    def perturb(self, value: float, u: float) -> float:
        """Apply the channel to one value using one uniform in (0,1)."""
        if self.kind == ChannelKind.NONE:
            return value
        if self.kind == ChannelKind.UNIFORM:
            return value + self.delta * (2.0 * u - 1.0)
        if self.kind == ChannelKind.SIGN:
            return value - self.delta if u < 0.5 else value + self.delta
        q = self.delta
        return np.floor(value / q) * q + u * q


@dataclass(frozen=True)
class OracleResponse:
    value_a: float
    value_b: float
    eta_id: int
    calls_charged: int = 2


class Oracle:
    """Stateful wrapper charging 2 calls per two-point query."""

    def __init__(self, problem: StochasticProblem, channel: NoiseChannel = None):
        self.problem = problem
        self.channel = channel if channel is not None else NoiseChannel()
        self.calls = 0
        self.eta_draws = 0

    def _check_domain(self, x: np.ndarray, label: str):
        d = l2_dist_to_simplex(x)
        if d > self.problem.mu0 + DOMAIN_SLACK:
            raise DomainError(
                f"query point {label} lies {d:.6g} from the simplex, "
                f"beyond the mu0={self.problem.mu0:g} neighborhood")

    def query_pair(self, x_a: np.ndarray, x_b: np.ndarray,
                   rng: RngStream) -> OracleResponse:
        self._check_domain(x_a, "a")
        self._check_domain(x_b, "b")
        eta = self.problem.draw_eta(rng)
        u = rng.uniforms(2)
        va = self.channel.perturb(self.problem.eval(x_a, eta), float(u[0]))
        vb = self.channel.perturb(self.problem.eval(x_b, eta), float(u[1]))
        self.calls += 2
        self.eta_draws += 1
        return OracleResponse(va, vb, self.eta_draws)


def query_pair(problem: StochasticProblem, channel: NoiseChannel,
               x_a: np.ndarray, x_b: np.ndarray, rng: RngStream) -> OracleResponse:
    """One-shot form; use an Oracle instance when call counts matter."""
    return Oracle(problem, channel).query_pair(x_a, x_b, rng)


def call_count(oracle: Oracle) -> int:
    return oracle.calls
