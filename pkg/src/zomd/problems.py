"""Synthetic stochastic objectives on the simplex.

Each fixture knows its exact minimum, a minimizer, and Lipschitz constants
valid on the whole mu0-neighborhood of the simplex, so convergence tests can
measure true optimality gaps and tuning rules can be fed honest constants.

Noise realizations eta are uniform on [-r, r]^n, so the gradient bound M
holds with probability 1, not just in expectation.

Fixtures (eta terms omitted):
  linear   f(x) = <c, x>                   nonsmooth constants, L2 = 0
  distl1   f(x) = ||x - x*||_1             L2 = inf
  quad     f(x) = 0.5 ||x - x*||_2^2       L2 = 1
  maxlin   f(x) = -min_i x_i               L2 = inf
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .rng import RngStream

MU0 = 1.0


class ProblemKind(str, Enum):
    LINEAR = "linear"
    DIST_L1 = "distl1"
    QUADRATIC = "quad"
    MAX_LINEAR = "maxlin"


KIND_CODES = {
    ProblemKind.LINEAR: 0,
    ProblemKind.DIST_L1: 1,
    ProblemKind.QUADRATIC: 2,
    ProblemKind.MAX_LINEAR: 3,
}


def as_kind(value) -> ProblemKind:
    if isinstance(value, ProblemKind):
        return value
    return ProblemKind(str(value).strip().lower())


def uniform_point(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def random_simplex_point(n: int, rng: RngStream) -> np.ndarray:
    # normalized exponentials give the flat Dirichlet
    a = -np.log(rng.uniforms(n))
    return a / a.sum()


def project_to_simplex(x: np.ndarray) -> np.ndarray:
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    j = np.arange(1, x.shape[0] + 1)
    rho = np.max(np.where(u - css / j > 0.0, j, 0))
    theta = css[rho - 1] / rho
    return np.maximum(x - theta, 0.0)


def l2_dist_to_simplex(x: np.ndarray) -> float:
    return float(np.linalg.norm(x - project_to_simplex(x)))


@dataclass
class StochasticProblem:
    """Objective with sampler f(x; eta) and exact optimum metadata.

    M is the almost-sure bound on the max-norm of the stochastic
    subgradient; M2 and Minf the corresponding l2 and l1 bounds; L2 the
    gradient Lipschitz constant in l2 (inf when nonsmooth). All hold on
    the mu0-neighborhood of the simplex.
    """

    kind: ProblemKind
    n: int
    c: np.ndarray
    x_star: np.ndarray
    noise_r: float
    f_star: float
    M: float
    M2: float
    Minf: float
    L2: float
    mu0: float = MU0
    M1: float = field(init=False)

    def __post_init__(self):
        self.M1 = self.M

    @property
    def param(self) -> np.ndarray:
        """Vector the evaluation kernels need: c for linear, x* otherwise."""
        return self.c if self.kind == ProblemKind.LINEAR else self.x_star

    def f(self, x: np.ndarray) -> float:
        """Analytic expectation E_eta[f(x; eta)]."""
        if self.kind == ProblemKind.LINEAR:
            return float(self.c @ x)
        if self.kind == ProblemKind.DIST_L1:
            return float(np.sum(np.abs(x - self.x_star)))
        if self.kind == ProblemKind.QUADRATIC:
            d = x - self.x_star
            return 0.5 * float(d @ d) + self.n * self.noise_r**2 / 6.0
        return -float(np.min(x))

    def eval(self, x: np.ndarray, eta: np.ndarray) -> float:
        if self.kind == ProblemKind.LINEAR:
            return float((self.c + eta) @ x)
        if self.kind == ProblemKind.DIST_L1:
            return float(np.sum(np.abs(x - self.x_star)) + eta @ x)
        if self.kind == ProblemKind.QUADRATIC:
            d = x - self.x_star + eta
            return 0.5 * float(d @ d)
        return float(-np.min(x) + eta @ x)

    def grad(self, x: np.ndarray, eta: np.ndarray) -> np.ndarray:
        """Stochastic subgradient; deterministic selector at kinks."""
        if self.kind == ProblemKind.LINEAR:
            return self.c + eta
        if self.kind == ProblemKind.DIST_L1:
            return np.where(x - self.x_star < 0.0, -1.0, 1.0) + eta
        if self.kind == ProblemKind.QUADRATIC:
            return x - self.x_star + eta
        g = eta.copy()
        g[int(np.argmin(x))] -= 1.0
        return g

    def draw_eta(self, rng: RngStream) -> np.ndarray:
        return self.noise_r * (2.0 * rng.uniforms(self.n) - 1.0)

    def eval_batch(self, X: np.ndarray, H: np.ndarray) -> np.ndarray:
        """Realization values for rows of X under noise rows H."""
        if self.kind == ProblemKind.LINEAR:
            return X @ self.c + np.sum(X * H, axis=1)
        if self.kind == ProblemKind.DIST_L1:
            return np.sum(np.abs(X - self.x_star), axis=1) + np.sum(X * H, axis=1)
        if self.kind == ProblemKind.QUADRATIC:
            D = X - self.x_star + H
            return 0.5 * np.sum(D * D, axis=1)
        return -np.min(X, axis=1) + np.sum(X * H, axis=1)

    def grad_batch(self, X: np.ndarray, H: np.ndarray) -> np.ndarray:
        if self.kind == ProblemKind.LINEAR:
            return self.c + H
        if self.kind == ProblemKind.DIST_L1:
            return np.where(X - self.x_star < 0.0, -1.0, 1.0) + H
        if self.kind == ProblemKind.QUADRATIC:
            return X - self.x_star + H
        G = H.copy()
        G[np.arange(X.shape[0]), np.argmin(X, axis=1)] -= 1.0
        return G


def _quad_constants(x_star: np.ndarray, r: float, n: int):
    # suprema of ||y - x*|| over the simplex are attained at vertices;
    # the mu0 inflation covers off-simplex queries admitted by the oracle
    v_inf = float(np.max(np.maximum(x_star, 1.0 - x_star)))
    v_two = float(np.sqrt(np.max(np.sum((np.eye(n) - x_star) ** 2, axis=1))))
    v_one = 2.0 * (1.0 - float(np.min(x_star)))
    rn = np.sqrt(float(n))
    m1 = v_inf + MU0 + r
    m2 = v_two + MU0 + r * rn
    minf = v_one + rn * MU0 + n * r
    return m1, m2, minf


def make_problem(kind, n: int, rng: RngStream = None, *, c=None,
                 x_star=None, noise=None) -> StochasticProblem:
    """Build a fixture.

    Without rng the canonical deterministic instance is returned; with rng
    the cost vector / minimizer are randomized. Keyword overrides pin
    individual pieces (noise is the half-width r, default 0.1).
    """
    kind = as_kind(kind)
    if n < 2:
        raise ValueError(f"problem dimension must be at least 2, got {n}")
    r = 0.1 if noise is None else float(noise)
    if r < 0.0:
        raise ValueError("noise half-width must be nonnegative")

    if kind == ProblemKind.LINEAR:
        if c is None:
            c = rng.uniforms(n) if rng is not None else np.linspace(0.0, 1.0, n)
        c = np.asarray(c, dtype=np.float64)
        x_star = np.zeros(n)
        x_star[int(np.argmin(c))] = 1.0
        b = np.abs(c) + r
        return StochasticProblem(kind, n, c, x_star, r, float(np.min(c)),
                                 M=float(np.max(b)), M2=float(np.linalg.norm(b)),
                                 Minf=float(np.sum(b)), L2=0.0)

    if x_star is None:
        if kind == ProblemKind.MAX_LINEAR:
            x_star = uniform_point(n)
        elif rng is not None:
            x_star = random_simplex_point(n, rng)
        elif kind == ProblemKind.DIST_L1:
            x_star = np.arange(1.0, n + 1.0)
            x_star /= x_star.sum()
        else:
            x_star = np.zeros(n)
            x_star[0] = 1.0
    x_star = np.asarray(x_star, dtype=np.float64)

    if kind == ProblemKind.DIST_L1:
        return StochasticProblem(kind, n, np.zeros(n), x_star, r, 0.0,
                                 M=1.0 + r, M2=np.sqrt(n) * (1.0 + r),
                                 Minf=n * (1.0 + r), L2=np.inf)

    if kind == ProblemKind.QUADRATIC:
        m1, m2, minf = _quad_constants(x_star, r, n)
        return StochasticProblem(kind, n, np.zeros(n), x_star, r,
                                 n * r**2 / 6.0, M=m1, M2=m2, Minf=minf, L2=1.0)

    # maxlin: f = max_i <-e_i, x>, minimized at the uniform point
    m2 = float(np.sqrt((1.0 + r) ** 2 + (n - 1) * r**2))
    return StochasticProblem(kind, n, np.zeros(n), x_star, r, -1.0 / n,
                             M=1.0 + r, M2=m2, Minf=1.0 + n * r, L2=np.inf)


def optimality_gap(problem: StochasticProblem, x: np.ndarray) -> float:
    return problem.f(x) - problem.f_star
