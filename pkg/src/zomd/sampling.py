"""Random direction generators.

Every estimator draws its perturbation direction here. Each scheme consumes a
fixed number of uniforms per draw (see uniform_draws_needed), so a draw is
addressable by its index in the underlying counter-based stream and batches
can be produced without replaying the sequence.

Constructions:
  l1_sphere       n i.i.d. Laplace(0,1) entries, normalized to unit l1 norm
  l2_sphere       n i.i.d. standard Gaussians, normalized to unit l2 norm
  linf_sphere     uniform face of the cube: one coordinate forced to +-1,
                  the rest i.i.d. uniform on [-1,1]
  linf_ball       n i.i.d. uniform on [-1,1]
  rademacher      n i.i.d. uniform on {-1,+1}
  coordinate      sqrt(n) * e_i with i uniform
  l1_ball         l1_sphere draw scaled by U^(1/n)
  scaled_gaussian sqrt(n) * (a / ||a||_2), a standard Gaussian
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .rng import RngStream


class Scheme(str, Enum):
    L1_SPHERE = "l1_sphere"
    L2_SPHERE = "l2_sphere"
    LINF_SPHERE = "linf_sphere"
    LINF_BALL = "linf_ball"
    RADEMACHER = "rademacher"
    COORDINATE = "coordinate"
    L1_BALL = "l1_ball"
    SCALED_GAUSSIAN = "scaled_gaussian"


SCHEME_CODES = {
    Scheme.L1_SPHERE: 0,
    Scheme.L2_SPHERE: 1,
    Scheme.LINF_SPHERE: 2,
    Scheme.LINF_BALL: 3,
    Scheme.RADEMACHER: 4,
    Scheme.COORDINATE: 5,
    Scheme.L1_BALL: 6,
    Scheme.SCALED_GAUSSIAN: 7,
}

SPHERE_SCHEMES = (Scheme.L1_SPHERE, Scheme.L2_SPHERE, Scheme.LINF_SPHERE)


def as_scheme(value) -> Scheme:
    if isinstance(value, Scheme):
        return value
    return Scheme(str(value).strip().lower())


def uniform_draws_needed(scheme, n: int) -> int:
    """Uniform slots one draw consumes. Gaussian schemes round up to pairs."""
    scheme = as_scheme(scheme)
    if scheme == Scheme.L1_SPHERE:
        return n
    if scheme == Scheme.L2_SPHERE:
        return n + (n & 1)
    if scheme == Scheme.LINF_SPHERE:
        return 1 + n
    if scheme == Scheme.LINF_BALL:
        return n
    if scheme == Scheme.RADEMACHER:
        return n
    if scheme == Scheme.COORDINATE:
        return 1
    if scheme == Scheme.L1_BALL:
        return n + 1
    return n + (n & 1)  # scaled_gaussian


@dataclass
class Direction:
    coords: np.ndarray
    scheme: Scheme

    @property
    def n(self) -> int:
        return self.coords.shape[0]


def laplace_from_uniforms(u: np.ndarray) -> np.ndarray:
    """Inverse CDF of Laplace(0,1); u strictly inside (0,1)."""
    t = 2.0 * u - 1.0
    return np.copysign(np.log1p(-np.abs(t)), t)


def gaussians_from_uniforms(u: np.ndarray) -> np.ndarray:
    """Box-Muller on consecutive pairs; u.shape[-1] must be even."""
    u1 = u[..., 0::2]
    u2 = u[..., 1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * np.pi * u2
    out = np.empty_like(u)
    out[..., 0::2] = r * np.cos(ang)
    out[..., 1::2] = r * np.sin(ang)
    return out


def _directions_from_uniforms(scheme: Scheme, n: int, u: np.ndarray) -> np.ndarray:
    """u has shape (count, block); returns (count, n)."""
    if scheme == Scheme.L1_SPHERE:
        a = laplace_from_uniforms(u)
        return a / np.sum(np.abs(a), axis=1, keepdims=True)
    if scheme == Scheme.L2_SPHERE:
        a = gaussians_from_uniforms(u)[:, :n]
        return a / np.sqrt(np.sum(a * a, axis=1, keepdims=True))
    if scheme == Scheme.LINF_SPHERE:
        face = np.minimum((u[:, 0] * (2 * n)).astype(np.int64), 2 * n - 1)
        e = 2.0 * u[:, 1:] - 1.0
        rows = np.arange(u.shape[0])
        e[rows, face >> 1] = np.where(face & 1, -1.0, 1.0)
        return e
    if scheme == Scheme.LINF_BALL:
        return 2.0 * u - 1.0
    if scheme == Scheme.RADEMACHER:
        return np.where(u < 0.5, -1.0, 1.0)
    if scheme == Scheme.COORDINATE:
        idx = np.minimum((u[:, 0] * n).astype(np.int64), n - 1)
        e = np.zeros((u.shape[0], n))
        e[np.arange(u.shape[0]), idx] = np.sqrt(float(n))
        return e
    if scheme == Scheme.L1_BALL:
        a = laplace_from_uniforms(u[:, :n])
        a /= np.sum(np.abs(a), axis=1, keepdims=True)
        radius = u[:, n] ** (1.0 / n)
        return a * radius[:, None]
    a = gaussians_from_uniforms(u)[:, :n]
    a /= np.sqrt(np.sum(a * a, axis=1, keepdims=True))
    return a * np.sqrt(float(n))


def sample_direction(scheme, n: int, rng: RngStream) -> Direction:
    scheme = as_scheme(scheme)
    if n < 2:
        raise ValueError(f"direction dimension must be at least 2, got {n}")
    u = rng.uniforms(uniform_draws_needed(scheme, n)).reshape(1, -1)
    return Direction(_directions_from_uniforms(scheme, n, u)[0], scheme)


def sample_directions(scheme, n: int, rng: RngStream, count: int) -> np.ndarray:
    """Batch of draws as a (count, n) matrix; consumes count blocks."""
    scheme = as_scheme(scheme)
    if n < 2:
        raise ValueError(f"direction dimension must be at least 2, got {n}")
    block = uniform_draws_needed(scheme, n)
    u = rng.uniforms(count * block).reshape(count, block)
    return _directions_from_uniforms(scheme, n, u)


def surface_normal(e: Direction) -> np.ndarray:
    """Estimator direction vector of the sphere at e.

    l1: sign pattern normalized to unit l2 norm, sign(0) taken as +1.
    l2: e itself. linf: the basis vector at the largest entry (largest
    signed value, first index on ties); on the simplex this makes the
    two-point estimator unbiased for the gradient up to a shift of the
    all-ones vector, which exponential weights ignore. Estimator
    prefactors are applied by the caller.
    """
    if e.scheme == Scheme.L1_SPHERE:
        signs = np.where(e.coords < 0.0, -1.0, 1.0)
        return signs / np.sqrt(float(e.n))
    if e.scheme == Scheme.L2_SPHERE:
        return e.coords.copy()
    if e.scheme == Scheme.LINF_SPHERE:
        out = np.zeros(e.n)
        out[int(np.argmax(e.coords))] = 1.0
        return out
    raise ValueError(f"surface normal undefined for scheme {e.scheme.value}")
