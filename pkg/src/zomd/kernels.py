"""Hot loops: the mirror-descent iteration and Monte-Carlo sweeps.

Each kernel exists twice: a compiled scalar-loop version and a vectorized
numpy twin. Both read the same counter-addressed uniform stream, so given
identical arguments they consume identical random words and agree to float
rounding. active_backend() picks which one runs.

Per-iteration uniform budget (one block per step or per MC draw):

    [ direction slots | n realization slots | 2 perturbation slots ]

The realization and perturbation slots are consumed by every family, with
or without a noise channel, so different configurations stay on common
random numbers draw for draw.

All kernels take plain integer codes (see SCHEME_CODES, KIND_CODES,
CHANNEL_CODES, FAMILY_CODES) and flat float64 arrays; translation from the
object layer happens in the solver.
"""

import math

import numpy as np

from .backend import njit, active_backend
from .rng import GAMMA, MIX_A, MIX_B, TWO_NEG53, derive_base, uniforms_at
from .sampling import Scheme, _directions_from_uniforms, uniform_draws_needed

_GAMMA = np.uint64(GAMMA)
_MA = np.uint64(MIX_A)
_MB = np.uint64(MIX_B)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)

_CODE_TO_SCHEME = (Scheme.L1_SPHERE, Scheme.L2_SPHERE, Scheme.LINF_SPHERE,
                   Scheme.LINF_BALL, Scheme.RADEMACHER, Scheme.COORDINATE,
                   Scheme.L1_BALL, Scheme.SCALED_GAUSSIAN)


@njit(cache=True, nogil=True)
def _u01(base, k):
    z = base + np.uint64(k + 1) * _GAMMA
    z = (z ^ (z >> _S30)) * _MA
    z = (z ^ (z >> _S27)) * _MB
    z = z ^ (z >> _S31)
    return (np.float64(z >> _S11) + 0.5) * TWO_NEG53


@njit(cache=True, nogil=True)
def _draw_direction(scheme, n, base, k0, e):
    if scheme == 0:  # unit l1 sphere via normalized Laplace draws
        s = 0.0
        for i in range(n):
            t = 2.0 * _u01(base, k0 + i) - 1.0
            a = math.copysign(math.log1p(-abs(t)), t)
            e[i] = a
            s += abs(a)
        for i in range(n):
            e[i] /= s
    elif scheme == 1 or scheme == 7:  # unit l2 sphere / sqrt(n)-scaled
        npad = n + (n & 1)
        for j in range(0, npad, 2):
            u1 = _u01(base, k0 + j)
            u2 = _u01(base, k0 + j + 1)
            rad = math.sqrt(-2.0 * math.log(u1))
            ang = 2.0 * math.pi * u2
            e[j] = rad * math.cos(ang)
            if j + 1 < n:
                e[j + 1] = rad * math.sin(ang)
        s = 0.0
        for i in range(n):
            s += e[i] * e[i]
        s = math.sqrt(s)
        if scheme == 7:
            s /= math.sqrt(float(n))
        for i in range(n):
            e[i] /= s
    elif scheme == 2:  # cube surface: forced face coordinate
        face = int(_u01(base, k0) * 2 * n)
        if face >= 2 * n:
            face = 2 * n - 1
        for i in range(n):
            e[i] = 2.0 * _u01(base, k0 + 1 + i) - 1.0
        e[face >> 1] = -1.0 if (face & 1) == 1 else 1.0
    elif scheme == 3:  # cube interior
        for i in range(n):
            e[i] = 2.0 * _u01(base, k0 + i) - 1.0
    elif scheme == 4:
        for i in range(n):
            e[i] = -1.0 if _u01(base, k0 + i) < 0.5 else 1.0
    elif scheme == 5:
        idx = int(_u01(base, k0) * n)
        if idx >= n:
            idx = n - 1
        for i in range(n):
            e[i] = 0.0
        e[idx] = math.sqrt(float(n))
    else:  # l1 ball: sphere draw times U^(1/n)
        s = 0.0
        for i in range(n):
            t = 2.0 * _u01(base, k0 + i) - 1.0
            a = math.copysign(math.log1p(-abs(t)), t)
            e[i] = a
            s += abs(a)
        rad = _u01(base, k0 + n) ** (1.0 / n)
        for i in range(n):
            e[i] = e[i] / s * rad


@njit(cache=True, nogil=True)
def _f_mean(kind, param, r, n, x):
    if kind == 0:
        s = 0.0
        for i in range(n):
            s += param[i] * x[i]
        return s
    if kind == 1:
        s = 0.0
        for i in range(n):
            s += abs(x[i] - param[i])
        return s
    if kind == 2:
        s = 0.0
        for i in range(n):
            d = x[i] - param[i]
            s += d * d
        return 0.5 * s + n * r * r / 6.0
    m = x[0]
    for i in range(1, n):
        if x[i] < m:
            m = x[i]
    return -m


@njit(cache=True, nogil=True)
def _eval_noisy(kind, param, r, n, x, base, keta):
    # realization slots are re-read on every call, so evaluating two
    # points against the same keta shares one eta draw exactly
    if kind == 0:
        s = 0.0
        for i in range(n):
            s += (param[i] + r * (2.0 * _u01(base, keta + i) - 1.0)) * x[i]
        return s
    if kind == 1:
        s = 0.0
        for i in range(n):
            s += abs(x[i] - param[i]) + r * (2.0 * _u01(base, keta + i) - 1.0) * x[i]
        return s
    if kind == 2:
        s = 0.0
        for i in range(n):
            d = x[i] - param[i] + r * (2.0 * _u01(base, keta + i) - 1.0)
            s += d * d
        return 0.5 * s
    m = x[0]
    for i in range(1, n):
        if x[i] < m:
            m = x[i]
    s = -m
    for i in range(n):
        s += r * (2.0 * _u01(base, keta + i) - 1.0) * x[i]
    return s


@njit(cache=True, nogil=True)
def _grad_noisy(kind, param, r, n, x, base, keta, g):
    if kind == 0:
        for i in range(n):
            g[i] = param[i] + r * (2.0 * _u01(base, keta + i) - 1.0)
    elif kind == 1:
        for i in range(n):
            sg = -1.0 if x[i] - param[i] < 0.0 else 1.0
            g[i] = sg + r * (2.0 * _u01(base, keta + i) - 1.0)
    elif kind == 2:
        for i in range(n):
            g[i] = x[i] - param[i] + r * (2.0 * _u01(base, keta + i) - 1.0)
    else:
        mi = 0
        for i in range(1, n):
            if x[i] < x[mi]:
                mi = i
        for i in range(n):
            g[i] = r * (2.0 * _u01(base, keta + i) - 1.0)
        g[mi] -= 1.0


@njit(cache=True, nogil=True)
def _perturb(chan, delta, v, u):
    if chan == 0:
        return v
    if chan == 1:
        return v + delta * (2.0 * u - 1.0)
    if chan == 2:
        return v - delta if u < 0.5 else v + delta
    return math.floor(v / delta) * delta + u * delta


@njit(cache=True, nogil=True)
def _estimate(family, scheme, mu, tau, kind, param, r, chan, delta,
              n, x, base, k0, n_dir, e, g, xa):
    keta = k0 + n_dir
    knoise = keta + n
    if family == 0:
        _grad_noisy(kind, param, r, n, x, base, keta, g)
        return
    _draw_direction(scheme, n, base, k0, e)
    if family == 1 or family == 4:
        step = mu if family == 1 else tau
        for i in range(n):
            xa[i] = x[i] + step * e[i]
        va = _perturb(chan, delta, _eval_noisy(kind, param, r, n, xa, base, keta),
                      _u01(base, knoise))
        vb = _perturb(chan, delta, _eval_noisy(kind, param, r, n, x, base, keta),
                      _u01(base, knoise + 1))
        diff = va - vb
        if family == 4:
            fac = diff / tau
            for i in range(n):
                g[i] = fac * e[i]
            return
        fac = diff * float(n) / mu
        if scheme == 0:
            for i in range(n):
                g[i] = -fac if e[i] < 0.0 else fac
        elif scheme == 1:
            for i in range(n):
                g[i] = fac * e[i]
        else:
            mi = 0
            for i in range(1, n):
                if e[i] > e[mi]:
                    mi = i
            for i in range(n):
                g[i] = 0.0
            g[mi] = fac
        return
    # exact-gradient families share the slope <grad, e>
    _grad_noisy(kind, param, r, n, x, base, keta, g)
    slope = 0.0
    for i in range(n):
        slope += g[i] * e[i]
    if family == 3:
        for i in range(n):
            g[i] = slope * e[i]
        return
    fac = slope * float(n)
    if scheme == 0:
        for i in range(n):
            g[i] = -fac if e[i] < 0.0 else fac
    elif scheme == 1:
        for i in range(n):
            g[i] = fac * e[i]
    else:
        mi = 0
        for i in range(1, n):
            if e[i] > e[mi]:
                mi = i
        for i in range(n):
            g[i] = 0.0
        g[mi] = fac


@njit(cache=True, nogil=True)
def _run_md_nb(n, N, family, scheme, mu, tau, kind, param, r, chan, delta,
               beta_eff, base, n_dir, trace_t):
    block = n_dir + n + 2
    x = np.full(n, 1.0 / n)
    s = np.zeros(n)
    xbar = np.zeros(n)
    e = np.empty(n)
    g = np.empty(n)
    xa = np.empty(n)
    w = np.empty(n)
    k_tr = trace_t.shape[0]
    xbar_snaps = np.empty((k_tr, n))
    favg_snaps = np.empty(k_tr)
    fsum = 0.0
    j = 0
    max_dev = 0.0
    min_coord = 1.0
    for t in range(1, N + 1):
        for i in range(n):
            xbar[i] += x[i]
        fsum += _f_mean(kind, param, r, n, x)
        _estimate(family, scheme, mu, tau, kind, param, r, chan, delta,
                  n, x, base, (t - 1) * block, n_dir, e, g, xa)
        gm = 0.0
        for i in range(n):
            gm += g[i]
        gm /= n
        for i in range(n):
            s[i] += g[i] - gm
        if j < k_tr and t == trace_t[j]:
            inv = 1.0 / t
            for i in range(n):
                xbar_snaps[j, i] = xbar[i] * inv
            favg_snaps[j] = fsum * inv
            j += 1
        beta = beta_eff * math.sqrt(t + 1.0)
        smin = s[0]
        for i in range(1, n):
            if s[i] < smin:
                smin = s[i]
        tot = 0.0
        for i in range(n):
            wi = math.exp(-(s[i] - smin) / beta)
            w[i] = wi
            tot += wi
        sx = 0.0
        mc = 1.0
        for i in range(n):
            xi = w[i] / tot
            x[i] = xi
            sx += xi
            if xi < mc:
                mc = xi
        dev = abs(sx - 1.0)
        if dev > max_dev:
            max_dev = dev
        if mc < min_coord:
            min_coord = mc
    return xbar_snaps, favg_snaps, max_dev, min_coord


@njit(cache=True, nogil=True)
def _mc_moments_nb(count, n, family, scheme, mu, tau, kind, param, r,
                   chan, delta, base, n_dir, x, thresh):
    block = n_dir + n + 2
    sum_g = np.zeros(n)
    sum_g2 = np.zeros(n)
    e = np.empty(n)
    g = np.empty(n)
    xa = np.empty(n)
    s2 = 0.0
    s2sq = 0.0
    sinf = 0.0
    sinfsq = 0.0
    mx = 0.0
    viol = 0
    for k in range(count):
        _estimate(family, scheme, mu, tau, kind, param, r, chan, delta,
                  n, x, base, k * block, n_dir, e, g, xa)
        nrm2 = 0.0
        nrminf = 0.0
        for i in range(n):
            gi = g[i]
            sum_g[i] += gi
            sum_g2[i] += gi * gi
            nrm2 += gi * gi
            a = abs(gi)
            if a > nrminf:
                nrminf = a
        s2 += nrm2
        s2sq += nrm2 * nrm2
        i2 = nrminf * nrminf
        sinf += i2
        sinfsq += i2 * i2
        if nrminf > mx:
            mx = nrminf
        if nrminf > thresh:
            viol += 1
    return sum_g, sum_g2, s2, s2sq, sinf, sinfsq, mx, viol


@njit(cache=True, nogil=True)
def _fuzz_shift_nb(n, N, beta_eff, g_scale, shift_scale, base):
    block = n + 1
    s1 = np.zeros(n)
    s2 = np.zeros(n)
    g = np.empty(n)
    w = np.empty(n)
    x1 = np.empty(n)
    x2 = np.empty(n)
    max_dx = 0.0
    max_dev = 0.0
    min_coord = 1.0
    for t in range(1, N + 1):
        k0 = (t - 1) * block
        for i in range(n):
            g[i] = g_scale * (2.0 * _u01(base, k0 + i) - 1.0)
        c = shift_scale * (2.0 * _u01(base, k0 + n) - 1.0)
        gm = 0.0
        for i in range(n):
            gm += g[i]
        gm /= n
        gm2 = 0.0
        for i in range(n):
            gm2 += g[i] + c
        gm2 /= n
        for i in range(n):
            s1[i] += g[i] - gm
            s2[i] += (g[i] + c) - gm2
        beta = beta_eff * math.sqrt(t + 1.0)
        for rep in range(2):
            s = s1 if rep == 0 else s2
            xcur = x1 if rep == 0 else x2
            smin = s[0]
            for i in range(1, n):
                if s[i] < smin:
                    smin = s[i]
            tot = 0.0
            for i in range(n):
                wi = math.exp(-(s[i] - smin) / beta)
                w[i] = wi
                tot += wi
            sx = 0.0
            for i in range(n):
                xi = w[i] / tot
                xcur[i] = xi
                sx += xi
                if xi < min_coord:
                    min_coord = xi
            dev = abs(sx - 1.0)
            if dev > max_dev:
                max_dev = dev
        for i in range(n):
            d = abs(x1[i] - x2[i])
            if d > max_dx:
                max_dx = d
    return max_dx, max_dev, min_coord


# ---------------------------------------------------------------------------
# vectorized twins


def _eval_batch_np(kind, param, X, H):
    if kind == 0:
        return X @ param + np.sum(X * H, axis=1)
    if kind == 1:
        return np.sum(np.abs(X - param), axis=1) + np.sum(X * H, axis=1)
    if kind == 2:
        D = X - param + H
        return 0.5 * np.sum(D * D, axis=1)
    return -np.min(X, axis=1) + np.sum(X * H, axis=1)


def _grad_batch_np(kind, param, X, H):
    if kind == 0:
        return param + H
    if kind == 1:
        return np.where(X - param < 0.0, -1.0, 1.0) + H
    if kind == 2:
        return X - param + H
    G = H.copy()
    G[np.arange(X.shape[0]), np.argmin(X, axis=1)] -= 1.0
    return G


def _perturb_np(chan, delta, v, u):
    if chan == 0:
        return v
    if chan == 1:
        return v + delta * (2.0 * u - 1.0)
    if chan == 2:
        return v + np.where(u < 0.5, -delta, delta)
    return np.floor(v / delta) * delta + u * delta


def _normals_np(scheme, E):
    n = E.shape[1]
    if scheme == 0:
        return np.where(E < 0.0, -1.0, 1.0) / np.sqrt(float(n))
    if scheme == 1:
        return E
    NB = np.zeros_like(E)
    NB[np.arange(E.shape[0]), np.argmax(E, axis=1)] = 1.0
    return NB


def _estimate_batch_np(family, scheme, mu, tau, kind, param, r,
                       chan, delta, n, x, U, n_dir):
    """U is (m, block); returns the (m, n) batch of estimates."""
    m = U.shape[0]
    H = r * (2.0 * U[:, n_dir:n_dir + n] - 1.0)
    X = np.broadcast_to(x, (m, n))
    if family == 0:
        return _grad_batch_np(kind, param, X, H)
    E = _directions_from_uniforms(_CODE_TO_SCHEME[scheme], n, U[:, :n_dir])
    if family in (1, 4):
        step = mu if family == 1 else tau
        va = _perturb_np(chan, delta, _eval_batch_np(kind, param, x + step * E, H),
                         U[:, n_dir + n])
        vb = _perturb_np(chan, delta, _eval_batch_np(kind, param, X, H),
                         U[:, n_dir + n + 1])
        diff = va - vb
        if family == 4:
            return (diff / tau)[:, None] * E
        if scheme == 0:
            fac = diff * float(n) / mu
            return fac[:, None] * np.where(E < 0.0, -1.0, 1.0)
        if scheme == 1:
            return (diff * float(n) / mu)[:, None] * E
        G = np.zeros((m, n))
        G[np.arange(m), np.argmax(E, axis=1)] = diff * float(n) / mu
        return G
    slope = np.sum(_grad_batch_np(kind, param, X, H) * E, axis=1)
    if family == 3:
        return slope[:, None] * E
    if scheme == 0:
        return (slope * float(n))[:, None] * np.where(E < 0.0, -1.0, 1.0)
    if scheme == 1:
        return (slope * float(n))[:, None] * E
    G = np.zeros((m, n))
    G[np.arange(m), np.argmax(E, axis=1)] = slope * float(n)
    return G


def _run_md_np(n, N, family, scheme, mu, tau, kind, param, r, chan, delta,
               beta_eff, base, n_dir, trace_t):
    block = n_dir + n + 2
    x = np.full(n, 1.0 / n)
    s = np.zeros(n)
    xbar = np.zeros(n)
    k_tr = trace_t.shape[0]
    xbar_snaps = np.empty((k_tr, n))
    favg_snaps = np.empty(k_tr)
    fsum = 0.0
    j = 0
    max_dev = 0.0
    min_coord = 1.0
    X1 = np.empty((1, n))
    Z0 = np.zeros((1, n))
    for t in range(1, N + 1):
        xbar += x
        X1[0] = x
        fsum += float(_eval_batch_np(kind, param, X1, Z0)[0])
        if kind == 2:
            fsum += n * r * r / 6.0
        U = uniforms_at(base, (t - 1) * block, block).reshape(1, block)
        g = _estimate_batch_np(family, scheme, mu, tau, kind, param, r,
                               chan, delta, n, x, U, n_dir)[0]
        s += g - g.mean()
        if j < k_tr and t == trace_t[j]:
            xbar_snaps[j] = xbar / t
            favg_snaps[j] = fsum / t
            j += 1
        beta = beta_eff * math.sqrt(t + 1.0)
        w = np.exp(-(s - s.min()) / beta)
        x = w / w.sum()
        max_dev = max(max_dev, abs(float(x.sum()) - 1.0))
        min_coord = min(min_coord, float(x.min()))
    return xbar_snaps, favg_snaps, max_dev, min_coord


def _mc_moments_np(count, n, family, scheme, mu, tau, kind, param, r,
                   chan, delta, base, n_dir, x, thresh):
    block = n_dir + n + 2
    sum_g = np.zeros(n)
    sum_g2 = np.zeros(n)
    s2 = s2sq = sinf = sinfsq = mx = 0.0
    viol = 0
    chunk = 65536
    done = 0
    while done < count:
        m = min(chunk, count - done)
        U = uniforms_at(base, done * block, m * block).reshape(m, block)
        G = _estimate_batch_np(family, scheme, mu, tau, kind, param, r,
                               chan, delta, n, x, U, n_dir)
        sum_g += G.sum(axis=0)
        sum_g2 += (G * G).sum(axis=0)
        nrm2 = np.sum(G * G, axis=1)
        nrminf = np.max(np.abs(G), axis=1)
        s2 += float(nrm2.sum())
        s2sq += float((nrm2 * nrm2).sum())
        i2 = nrminf * nrminf
        sinf += float(i2.sum())
        sinfsq += float((i2 * i2).sum())
        mx = max(mx, float(nrminf.max()))
        viol += int(np.count_nonzero(nrminf > thresh))
        done += m
    return sum_g, sum_g2, s2, s2sq, sinf, sinfsq, mx, viol


def _fuzz_shift_np(n, N, beta_eff, g_scale, shift_scale, base):
    block = n + 1
    s1 = np.zeros(n)
    s2 = np.zeros(n)
    max_dx = 0.0
    max_dev = 0.0
    min_coord = 1.0
    for t in range(1, N + 1):
        u = uniforms_at(base, (t - 1) * block, block)
        g = g_scale * (2.0 * u[:n] - 1.0)
        c = shift_scale * (2.0 * u[n] - 1.0)
        s1 += g - g.mean()
        s2 += (g + c) - (g + c).mean()
        beta = beta_eff * math.sqrt(t + 1.0)
        w1 = np.exp(-(s1 - s1.min()) / beta)
        x1 = w1 / w1.sum()
        w2 = np.exp(-(s2 - s2.min()) / beta)
        x2 = w2 / w2.sum()
        max_dx = max(max_dx, float(np.max(np.abs(x1 - x2))))
        max_dev = max(max_dev, abs(float(x1.sum()) - 1.0),
                      abs(float(x2.sum()) - 1.0))
        min_coord = min(min_coord, float(x1.min()), float(x2.min()))
    return max_dx, max_dev, min_coord


# ---------------------------------------------------------------------------
# dispatchers


def _prep(param):
    return np.ascontiguousarray(param, dtype=np.float64)


def _dir_slots(family, scheme, n):
    return 0 if family == 0 else uniform_draws_needed(_CODE_TO_SCHEME[scheme], n)


def run_md(n, N, family, scheme, mu, tau, kind, param, r, chan, delta,
           beta_eff, seed, stream, trace_t):
    base = np.uint64(derive_base(seed, stream))
    trace_t = np.ascontiguousarray(trace_t, dtype=np.int64)
    fn = _run_md_nb if active_backend() == "numba" else _run_md_np
    return fn(n, N, family, scheme, float(mu or 0.0), float(tau or 0.0), kind,
              _prep(param), float(r), chan, float(delta), float(beta_eff),
              base, _dir_slots(family, scheme, n), trace_t)


def mc_estimator_moments(count, n, family, scheme, mu, tau, kind, param, r,
                         chan, delta, seed, stream, x, thresh=np.inf):
    base = np.uint64(derive_base(seed, stream))
    fn = _mc_moments_nb if active_backend() == "numba" else _mc_moments_np
    return fn(count, n, family, scheme, float(mu or 0.0), float(tau or 0.0),
              kind, _prep(param), float(r), chan, float(delta), base,
              _dir_slots(family, scheme, n), _prep(x), float(thresh))


def fuzz_dual_shift(n, N, beta_eff, g_scale, shift_scale, seed, stream):
    base = np.uint64(derive_base(seed, stream))
    fn = _fuzz_shift_nb if active_backend() == "numba" else _fuzz_shift_np
    return fn(n, N, float(beta_eff), float(g_scale), float(shift_scale), base)
