"""Remainder semigroup of a stable law and the Stein-equation solver.

Self-decomposability gives, for each t >= 0, a remainder law Y_t with

    cf_X(xi) / cf_X(e^-t xi) = E exp(i xi Y_t),
    Y_t  =  a_t + b_t X0,   a_t = gamma_alpha (1 - e^-t),
                            b_t = (1 - e^-(alpha t))^(1/alpha),

where X0 is the zero-location member of the same stable family (same d,
theta).  The operators

    P_t h(x) = E h(e^-t x + Y_t)

form a Markov semigroup whose generator is the stable Stein operator acting
on h', and f_h = -int_0^inf (P_t h - E h(X)) dt solves the Stein equation.
The affine structure means a *single* standardized density p0 serves every t.

Two independent evaluation routes are kept deliberately separate:

* `semigroup_apply` -- literal quadrature of h against the shifted remainder
  density: p0 on an alias-safe FFT grid for the body plus a power-series
  tail model (for symmetric targets the full series
  p0(z) ~ (1/pi) sum_k (-1)^(k+1) Gamma(k alpha + 1)/k! sin(k pi alpha/2)
  d^k |z|^(-k alpha - 1), whose k=1 term is exactly the Levy tail
  m |z|^(-1-alpha); for skewed targets the first-order tails m1/m2 only).
  Quadrature weights are mass-normalized, so P_t 1 = 1 holds by
  construction up to the closed-form/numeric split of the tail mass.
* `solve_stein` -- a spectral route: P_t h and its first two x-derivatives
  come from inverse FFTs of hhat(xi) * cf ratio * (1, i xi, -xi^2), and the
  t-integral is a trapezoid over {0} union a geometric grid on [1e-3, 20]
  (64 nodes).  The residual is then checked with the *operator* machinery,
  never with the solver's own internals.

alpha = 1 lacks the affine self-decomposability used throughout (the
remainder is not a rescaled copy of the same law), so context construction
raises AlphaOneError; the command-line layer maps it to its own exit code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .numerics import GridSpec, QuadratureSpec, RngStream, fourier_invert, integrate
from .operators import SteinOpResult, _effective_radius, apply_stable
from .stable import (DerivedParams, StableParams, derive_params,
                     sd_ratio_cf, sample)
from .testfunctions import TestFunction, derivative_tf

__all__ = [
    "AlphaOneError", "SemigroupContext", "SteinSolution", "make_context",
    "remainder_density", "semigroup_apply", "semigroup_law_check",
    "generator_apply", "generator_limit_check", "expectation_spectral",
    "solve_stein", "derivative_bound_report", "const_one",
]


class AlphaOneError(ValueError):
    """The semigroup route needs alpha != 1."""


def _t_quadrature(alpha: float, *, t0: float = 1e-3, panels: int = 10,
                  order: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for int_0^T F(t) dt, T = 25/min(1,alpha): one short
    Gauss panel on [0,t0] plus composite Gauss-Legendre in log t beyond.
    The time integrands of the equation solver are smooth in log t and
    decay like exp(-min(1,alpha) t), so the horizon truncates at ~e^-25
    and the panel rule converges spectrally; a plain trapezoid on a
    geometric grid would bottleneck the whole solver at ~1e-1."""
    T = 25.0 / min(1.0, alpha)
    xg4, wg4 = np.polynomial.legendre.leggauss(4)
    nodes = [0.5 * t0 * (xg4 + 1.0)]
    weights = [0.5 * t0 * wg4]
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(math.log(t0), math.log(T), panels + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        t = np.exp(mid + half * xg)
        nodes.append(t)
        weights.append(half * wg * t)
    return np.concatenate(nodes), np.concatenate(weights)


def _log_cf_closed(params: StableParams, dp: DerivedParams, xi: np.ndarray):
    """log of the closed-form cf, vectorized (alpha != 1 only)."""
    a = params.alpha
    xi = np.asarray(xi, dtype=float)
    return (1j * xi * dp.gamma_alpha
            - dp.d_alpha * np.abs(xi) ** a
            * (1.0 - 1j * dp.theta * np.sign(xi) * math.tan(math.pi * a / 2)))


def const_one() -> TestFunction:
    """The constant test function 1 (used for conservation checks)."""
    return TestFunction(
        name="one",
        value=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        d1=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        d2=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        sup_norms={0: 1.0, 1: 0.0, 2: 0.0},
        envelope=lambda r: 1.0,
        decay_order=0.0,
        tail_limits=(1.0, 1.0))


@dataclass
class SemigroupContext:
    """Precomputed machinery for one stable target (alpha != 1).

    y0/p0: standardized zero-location density on the alias-safe FFT grid;
    y2: body/tail cutover radius (grid values inside, series model outside);
    tail_k / tail_c_pos / tail_c_neg: exponents k*alpha and per-side series
    coefficients of the tail model p0(z) ~ sum_k c_k |z|^(-k alpha - 1).
    """

    params: StableParams
    derived: DerivedParams
    t_grid: np.ndarray
    t_weights: np.ndarray
    y0: np.ndarray
    p0: np.ndarray
    dy0: float
    y2: float
    scale0: float
    tail_k: np.ndarray
    tail_c_pos: np.ndarray
    tail_c_neg: np.ndarray
    symmetric: bool
    _eh_cache: dict = field(default_factory=dict, repr=False)

    def ab(self, t: float) -> tuple[float, float]:
        a = self.derived.gamma_alpha * (1.0 - math.exp(-t))
        b = (1.0 - math.exp(-self.params.alpha * t)) ** (1.0 / self.params.alpha)
        return a, b


def _tail_coefficients(params: StableParams, dp: DerivedParams, y2: float):
    """Series coefficients of the standardized density's tails.

    Symmetric case: the classical expansion for cf exp(-d |xi|^alpha); terms
    are kept while they keep shrinking at the cutover radius (the series is
    convergent for alpha < 1, asymptotic for alpha > 1).  The k = 1 term
    reproduces the Levy tail m |z|^(-1-alpha) exactly.  Skewed case: the
    first-order Levy tails only."""
    a = params.alpha
    if params.m1 != params.m2:
        return (np.array([a]), np.array([params.m1]), np.array([params.m2]))
    ks, cs = [], []
    prev = math.inf
    for k in range(1, 11):
        c = ((-1.0) ** (k + 1) / math.pi * math.gamma(k * a + 1.0)
             / math.factorial(k) * math.sin(k * math.pi * a / 2.0)
             * dp.d_alpha ** k)
        size = abs(c) * y2 ** (-k * a)
        if size >= prev:
            break
        ks.append(k * a)
        cs.append(c)
        prev = size
    ks = np.array(ks)
    cs = np.array(cs)
    return ks, cs, cs.copy()


def make_context(params: StableParams,
                 t_grid: np.ndarray | None = None) -> SemigroupContext:
    """Build the semigroup context: standardized density grid, tail model,
    default t-quadrature from _t_quadrature (a supplied t_grid
    falls back to trapezoid weights)."""
    if params.alpha == 1.0:
        raise AlphaOneError(
            "semigroup approach unavailable at alpha=1: the remainder law "
            "is not an affine copy of the target there")
    dp = derive_params(params)
    a = params.alpha
    params0 = StableParams(alpha=a, beta=params.beta - dp.gamma_alpha,
                           m1=params.m1, m2=params.m2)
    dp0 = derive_params(params0)
    if abs(dp0.gamma_alpha) > 1e-9:
        raise RuntimeError("standardization failed to zero the location")

    scale0 = dp.d_alpha ** (1.0 / a)
    msum = params.m1 + params.m2
    half_w = max(64.0 * scale0, (msum * 3e6) ** (1.0 / (1.0 + a)), 64.0)
    xi_max = (23.0 / dp.d_alpha) ** (1.0 / a)
    n = max(2.0 * half_w * xi_max / math.pi, 20.0 * half_w / scale0)
    n = int(2 ** min(23, max(12, math.ceil(math.log2(n)))))
    grid = GridSpec(-half_w, half_w, n)

    def cf0(xi):
        return np.exp(_log_cf_closed(params0, dp0, xi))

    y0, p0 = fourier_invert(cf0, grid)
    y2 = min(40.0 * scale0, 0.45 * half_w)
    tail_k, c_pos, c_neg = _tail_coefficients(params, dp, y2)

    if t_grid is None:
        t_nodes, t_w = _t_quadrature(a)
    else:
        t_nodes = np.asarray(t_grid, dtype=float)
        t_w = np.zeros_like(t_nodes)
        d = np.diff(t_nodes)
        t_w[:-1] += 0.5 * d
        t_w[1:] += 0.5 * d
    return SemigroupContext(
        params=params, derived=dp, t_grid=t_nodes, t_weights=t_w,
        y0=y0, p0=p0, dy0=grid.dx, y2=y2, scale0=scale0,
        tail_k=tail_k, tail_c_pos=c_pos, tail_c_neg=c_neg,
        symmetric=params.m1 == params.m2)


def remainder_density(params: StableParams, t: float, grid: GridSpec):
    """Density of the remainder law Y_t on `grid`, by direct FFT inversion
    of the cf ratio.  (For very small t the ratio is nearly flat over any
    affordable frequency window and the AliasWarning will fire; the
    semigroup machinery itself never inverts per-t, it rescales p0.)"""
    if t <= 0:
        raise ValueError("t must be positive")
    eta = math.exp(-t)
    return fourier_invert(lambda xi: sd_ratio_cf(params, eta, xi), grid)


# ---------------------------------------------------------------------------
# Quadrature route: P_t h by integration against the shifted remainder law
# ---------------------------------------------------------------------------

def _h_scale(h: TestFunction) -> float:
    """Characteristic length of h's features, from its norm certificates."""
    n0 = h.sup_norms.get(0)
    if not n0:
        return 0.5
    cands = []
    n1 = h.sup_norms.get(1)
    n2 = h.sup_norms.get(2)
    if n1:
        cands.append(n0 / n1)
    if n2:
        cands.append(math.sqrt(n0 / n2))
    if not cands:
        return 0.5
    return float(min(5.0, max(0.1, min(cands))))


def _side_tail_mass(ctx: SemigroupContext, side: int, b: float,
                    w_from: float) -> float:
    """Mass of the tail model of Y_t's standardized part beyond w_from > 0
    on one side: int_{w_from}^inf sum_k c_k b^(k alpha) w^(-k alpha - 1) dw."""
    cs = ctx.tail_c_pos if side > 0 else ctx.tail_c_neg
    ka = ctx.tail_k
    return float(np.sum(cs * b ** ka * w_from ** (-ka) / ka))


def _series_panels(w_lo: float, w_hi: float, fine_hi: float,
                   fine_len: float):
    """Gauss-Legendre panels on [w_lo, w_hi]: geometric growth (factor
    1.25), with panel length capped at fine_len while w < fine_hi (the
    region where the integrand still has h-scale structure) and free log
    growth beyond."""
    gx, gw = np.polynomial.legendre.leggauss(8)
    xs, ws = [], []
    w = w_lo
    while w < w_hi:
        step = w * 0.25
        if w < fine_hi:
            step = min(step, fine_len)
        nxt = min(w + max(step, 1e-300), w_hi)
        xs.append(0.5 * (nxt - w) * gx + 0.5 * (nxt + w))
        ws.append(0.5 * (nxt - w) * gw)
        w = nxt
        if len(xs) > 4000:
            raise RuntimeError("tail panel construction ran away")
    return np.concatenate(xs), np.concatenate(ws)


def semigroup_apply(ctx: SemigroupContext, h: TestFunction, t: float, x):
    """P_t h(x) = E h(e^-t x + Y_t) by quadrature of h against the shifted
    remainder density (grid body + series tails), mass-normalized so that
    the constant function is preserved exactly up to the tiny closed-form /
    panel-quadrature mismatch of the tail mass.  x may be a scalar or a 1-d
    array."""
    scalar = np.isscalar(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        out = np.asarray(h.value(x), dtype=float)
        return float(out[0]) if scalar else out

    a_t, b_t = ctx.ab(t)
    c = math.exp(-t) * x + a_t
    sh = _h_scale(h)

    # body: strided trapezoid on the p0 grid over |y| <= y2
    dy_target = min(ctx.scale0 / 8.0, sh / (8.0 * b_t))
    stride = max(1, int(dy_target / ctx.dy0))
    n = len(ctx.y0)
    j_mid = n // 2
    j_half = int(ctx.y2 / (ctx.dy0 * stride)) * stride
    idx = np.arange(j_mid - j_half, j_mid + j_half + 1, stride)
    ysub = ctx.y0[idx]
    psub = ctx.p0[idx]
    dy_eff = ctx.dy0 * stride
    tw = np.full(len(idx), dy_eff)
    tw[0] *= 0.5
    tw[-1] *= 0.5
    pw = psub * tw
    body_mass = float(np.sum(pw))

    args = c[:, None] + b_t * ysub[None, :]
    vals = np.asarray(h.value(args), dtype=float) @ pw

    # tails: series model beyond w1 = b_t * (edge of the body window)
    y_edge = float(ysub[-1])
    w1 = b_t * y_edge
    r_h = _effective_radius(h, tiny=1e-15)
    c_max = float(np.max(np.abs(c)))
    mass = body_mass
    for side in (+1, -1):
        cs = ctx.tail_c_pos if side > 0 else ctx.tail_c_neg
        side_mass = _side_tail_mass(ctx, side, b_t, w1)
        mass += side_mass
        if math.isinf(r_h):
            w_dead = math.inf
        else:
            w_dead = r_h + c_max + 2.0 * sh
        if w_dead <= w1:
            lim = h.tail_limits[1] if side > 0 else h.tail_limits[0]
            vals += lim * side_mass
            continue
        w_hi = min(w_dead, max(1e7, 100.0 * w1))
        r_fine = min(r_h, 96.0)
        wn, ww = _series_panels(w1, w_hi, fine_hi=c_max + r_fine + 10.0 * sh,
                                fine_len=0.5 * sh)
        dens = np.zeros_like(wn)
        for ka, cc in zip(ctx.tail_k, cs):
            dens += cc * b_t ** ka * wn ** (-ka - 1.0)
        hw = np.asarray(h.value(c[:, None] + side * wn[None, :]),
                        dtype=float)
        vals += hw @ (ww * dens)
        # beyond the evaluated panels: limit value times leftover mass
        lim = h.tail_limits[1] if side > 0 else h.tail_limits[0]
        vals += lim * _side_tail_mass(ctx, side, b_t, w_hi)

    out = vals / mass
    return float(out[0]) if scalar else out


def expectation_spectral(params: StableParams, h: TestFunction,
                         half_span: float = 16384.0,
                         n: int = 2 ** 20) -> float:
    """E h(X) = (1/2pi) int hhat(xi) cf(xi) dxi on a discrete frequency
    grid (trapezoid-in-frequency == periodization in x; the half-span keeps
    the folded tail mass negligible)."""
    if params.alpha == 1.0:
        raise AlphaOneError("spectral expectation uses the closed cf form "
                            "with alpha != 1 here")
    dp = derive_params(params)
    dy = 2.0 * half_span / n
    y = -half_span + dy * np.arange(n)
    hy = np.asarray(h.value(y), dtype=float)
    xi = np.arange(n // 2 + 1) * (math.pi / half_span)
    hhat = dy * np.exp(1j * xi * half_span) * np.fft.rfft(hy)
    psi = np.exp(_log_cf_closed(params, dp, xi))
    prod = hhat * psi
    dxi = math.pi / half_span
    total = prod[0].real + 2.0 * np.sum(prod[1:-1].real) + prod[-1].real
    return float(dxi / (2.0 * math.pi) * total)


def semigroup_law_check(ctx: SemigroupContext, h: TestFunction, t: float,
                        s: float, probes) -> dict:
    """Numerical check of the defining semigroup laws at the probe points.

    Returns max absolute deviations: 'identity' (P_{t->0} h vs h, driven
    through the full quadrature path at t = 1e-9), 'composition'
    (P_t P_s h vs P_{t+s} h), 'conservation' (P_t 1 vs 1 at t, s, t+s), and
    'equilibrium' (P_20 h vs the spectral E h(X))."""
    probes = np.asarray(probes, dtype=float)
    out = {}
    out["identity"] = float(np.max(np.abs(
        semigroup_apply(ctx, h, 1e-9, probes)
        - np.asarray(h.value(probes), dtype=float))))

    # P_s h sampled on a wide grid, wrapped as a test function with an
    # honest polynomial-tail envelope, then pushed through P_t
    grid_x = np.linspace(-64.0, 64.0, 6401)
    psh = semigroup_apply(ctx, h, s, grid_x)
    spl = CubicSpline(grid_x, psh)
    a = ctx.params.alpha
    c_tail = max(abs(psh[0]) * 64.0 ** (1 + a),
                 abs(psh[-1]) * 64.0 ** (1 + a), 1e-300)
    absg = np.abs(grid_x)
    order = np.argsort(absg)
    env_r = absg[order]
    env_v = np.maximum.accumulate(np.abs(psh)[order][::-1])[::-1]

    def wrap_env(r, _er=env_r, _ev=env_v, _c=c_tail, _a=a):
        if r >= 64.0:
            return _c * r ** (-1.0 - _a)
        i = np.searchsorted(_er, r)
        return float(_ev[min(i, len(_ev) - 1)])

    def wrap_val(y, _spl=spl, _c=c_tail, _a=a):
        y = np.asarray(y, dtype=float)
        inside = np.abs(y) <= 64.0
        out_v = np.zeros_like(y)
        if inside.any():
            out_v[inside] = _spl(y[inside])
        return out_v

    psh_tf = TestFunction(
        name=f"P_{s:g}({h.name})", value=wrap_val,
        d1=lambda y: np.zeros_like(np.asarray(y, dtype=float)),
        d2=lambda y: np.zeros_like(np.asarray(y, dtype=float)),
        sup_norms={0: float(np.max(np.abs(psh))),
                   1: h.sup_norms.get(1, 1.0),
                   2: h.sup_norms.get(2, 1.0)},
        envelope=wrap_env, decay_order=1.0 + a)

    lhs = semigroup_apply(ctx, psh_tf, t, probes)
    rhs = semigroup_apply(ctx, h, t + s, probes)
    out["composition"] = float(np.max(np.abs(lhs - rhs)))

    one = const_one()
    dev1 = 0.0
    for tv in (t, s, t + s):
        v = semigroup_apply(ctx, one, tv, probes)
        dev1 = max(dev1, float(np.max(np.abs(v - 1.0))))
    out["conservation"] = dev1

    eh = expectation_spectral(ctx.params, h)
    out["equilibrium"] = float(np.max(np.abs(
        semigroup_apply(ctx, h, 20.0, probes) - eh)))
    return out


# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------

def generator_apply(params: StableParams, f: TestFunction,
                    x: float) -> float:
    """Generator of the semigroup at f: -x f'(x) + Gamma_alpha f'(x)
    + int f'(x+u) u nu_alpha(du) (compensated for alpha > 1), i.e. minus
    the stable Stein operator applied to f'."""
    g = derivative_tf(f)
    res = apply_stable(g, float(x), params)
    return -res.value


def generator_limit_check(ctx: SemigroupContext, f: TestFunction, ts,
                          xs) -> np.ndarray:
    """dev[i, j] = | (P_{t_i} f(x_j) - f(x_j)) / t_i - (generator f)(x_j) |.
    For small t this behaves like (t/2) |generator^2 f|, so successive
    halvings of t should roughly halve the deviation."""
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    gen = np.array([generator_apply(ctx.params, f, xv) for xv in xs])
    fx = np.asarray(f.value(xs), dtype=float)
    out = np.empty((len(ts), len(xs)))
    for i, tv in enumerate(ts):
        ptf = semigroup_apply(ctx, f, float(tv), xs)
        out[i] = np.abs((ptf - fx) / tv - gen)
    return out


# ---------------------------------------------------------------------------
# Stein-equation solver (spectral route)
# ---------------------------------------------------------------------------

@dataclass
class SteinSolution:
    """Solution f of (generator) f = h - E h for one target/test function.

    x/f/fp/fpp/residual: export grid arrays (residual from the independent
    operator route); eh/eh_mc/eh_mc_se: the two expectation estimates;
    core_y/core_fp/core_fpp: dense internal arrays used for sup-norm
    reporting and residual evaluation."""

    params: StableParams
    h_name: str
    x: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    residual: np.ndarray
    eh: float
    eh_mc: float
    eh_mc_se: float
    t_grid: np.ndarray
    core_y: np.ndarray
    core_fp: np.ndarray
    core_fpp: np.ndarray
    h_sup_norms: dict


def _residual_route(ctx: SemigroupContext, fp_spline, eh: float,
                    x: np.ndarray, h: TestFunction, core_lim: float,
                    far_c: tuple[float, float] = (0.0, 0.0)):
    """Residual of the Stein equation on the export grid, evaluated with
    the operator machinery: fixed desingularized/panel rules on the spline
    region plus adaptive far-field pieces under the model
    f'(y) ~ k/y + c |y|^(-1-alpha), with per-side coefficients far_c
    fitted at the core edge.  The drift coefficient is
    k = eh - lim h on each side (matching -y f'(y) -> h(y) - eh at
    infinity); for decaying h this is just eh.  (The bare k/y model
    approaches its asymptote only like |y|^-alpha, far too slowly for
    alpha < 1.)"""
    p = ctx.params
    a = p.alpha
    dp = ctx.derived
    compensated = a >= 1.0

    # head rule on (0, 1]
    gx_leg, gw_leg = np.polynomial.legendre.leggauss(64)
    wn = 0.5 * gx_leg + 0.5
    ww = 0.5 * gw_leg
    s = (a - 1.0) if compensated else a
    s = max(s, 0.0)
    q = 1.0 / (1.0 - s) if s > 0 else 1.0
    head_v = wn ** q
    head_w = ww * q * wn ** (q - 1.0) * head_v ** (-a)
    # mid rule on [1, v_mid]
    v_mid = core_lim - 12.0 - 1.0
    edges = np.linspace(1.0, v_mid, int(math.ceil((v_mid - 1.0) / 1.5)) + 1)
    gx9, gw9 = np.polynomial.legendre.leggauss(9)
    mv, mw = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mv.append(0.5 * (hi - lo) * gx9 + 0.5 * (hi + lo))
        mw.append(0.5 * (hi - lo) * gw9)
    mid_v = np.concatenate(mv)
    mid_w = np.concatenate(mw) * mid_v ** (-a)

    drift = (eh - h.tail_limits[1], eh - h.tail_limits[0])
    fp_x = fp_spline(x)
    integral = np.zeros_like(x)
    qs = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-9)
    for side, m in ((+1, p.m1), (-1, p.m2)):
        if m == 0.0:
            continue
        k = drift[0] if side > 0 else drift[1]
        hv = fp_spline(x[:, None] + side * head_v[None, :])
        if compensated:
            hv = hv - fp_x[:, None]
        acc = hv @ head_w
        acc = acc + fp_spline(x[:, None] + side * mid_v[None, :]) @ mid_w

        # far pieces, per export point: spline out to the core edge, then
        # the corrected far-field model
        cc = far_c[0] if side > 0 else far_c[1]
        far = np.zeros_like(x)
        for i, xv in enumerate(x):
            v_edge = core_lim - 1.0 - abs(xv)
            if v_edge > v_mid:
                far[i] += integrate(
                    lambda v, _x=xv, _s=side: float(fp_spline(_x + _s * v))
                    * v ** (-a), v_mid, v_edge, spec=qs)
            if k != 0.0 or cc != 0.0:
                far[i] += integrate(
                    lambda v, _x=xv, _s=side, _k=k:
                    (_k / (_x + _s * v)
                     + cc * abs(_x + _s * v) ** (-1.0 - a)) * v ** (-a),
                    max(v_edge, v_mid), math.inf, spec=qs)
        integral += side * m * (acc + far)

    tf_val = -((x - dp.Gamma_alpha) * fp_x - integral)
    return tf_val - (np.asarray(h.value(x), dtype=float) - eh)


def solve_stein(ctx: SemigroupContext, h: TestFunction, *,
                x_max: float = 12.0, n_x: int = 961,
                half_span: float = 16384.0, n_fft: int = 2 ** 20,
                core_lim: float = 72.0, mc_n: int = 200000,
                mc_seed: int = 777) -> SteinSolution:
    """Solve the Stein equation for target `ctx.params` and data `h`.

    Spectral construction: hhat from one FFT of h; for every t-node the
    inverse FFT of hhat(xi) * [cf(xi)/cf(e^-t xi)] * (1, i xi, -xi^2) gives
    P_t h and its first two derivatives on the y-grid; f, f', f'' follow by
    the weighted t-quadrature.  E h(X) is computed spectrally and
    cross-checked against a Monte Carlo mean (3 SE agreement enforced).
    The residual column is evaluated through the independent operator
    route (`_residual_route`)."""
    p = ctx.params
    dp = ctx.derived
    dy = 2.0 * half_span / n_fft
    y = -half_span + dy * np.arange(n_fft)
    hy = np.asarray(h.value(y), dtype=float)
    xi = np.arange(n_fft // 2 + 1) * (math.pi / half_span)
    hhat = dy * np.exp(1j * xi * half_span) * np.fft.rfft(hy)
    lcf = _log_cf_closed(p, dp, xi)
    psi = np.exp(lcf)

    prod = hhat * psi
    dxi = math.pi / half_span
    eh = float(dxi / (2.0 * math.pi)
               * (prod[0].real + 2.0 * np.sum(prod[1:-1].real)
                  + prod[-1].real))

    # Monte Carlo cross-check of the expectation
    zs = sample(p, mc_n, RngStream(mc_seed, 2001))
    hz = np.asarray(h.value(zs), dtype=float)
    eh_mc = float(np.mean(hz))
    eh_se = float(np.std(hz, ddof=1) / math.sqrt(mc_n))
    if abs(eh - eh_mc) > 3.0 * eh_se + 1e-6:
        raise RuntimeError(
            f"expectation routes disagree: spectral {eh:.6g} vs MC "
            f"{eh_mc:.6g} +- {eh_se:.2g}")

    x_out = np.linspace(-x_max, x_max, n_x)
    core = np.abs(y) <= core_lim
    ycore = y[core]

    t_nodes = ctx.t_grid
    n_t = len(t_nodes)
    v0x = np.empty((n_t, n_x))
    v1x = np.empty((n_t, n_x))
    v2x = np.empty((n_t, n_x))
    v1c = np.empty((n_t, len(ycore)))
    v2c = np.empty((n_t, len(ycore)))

    phase = np.exp(-1j * xi * half_span)
    for i, tv in enumerate(t_nodes):
        if tv == 0.0:
            v0x[i] = np.asarray(h.value(x_out), dtype=float)
            v1x[i] = np.asarray(h.d1(x_out), dtype=float)
            v2x[i] = np.asarray(h.d2(x_out), dtype=float)
            v1c[i] = np.asarray(h.d1(ycore), dtype=float)
            v2c[i] = np.asarray(h.d2(ycore), dtype=float)
            continue
        ratio = np.exp(lcf - _log_cf_closed(p, dp, math.exp(-tv) * xi))
        g0 = hhat * ratio
        z = math.exp(-tv) * x_out
        zc = math.exp(-tv) * ycore   # core rows need the same rescaled
        for order, mult in ((0, None), (1, 1j * xi), (2, -xi * xi)):
            gm = g0 if mult is None else g0 * mult
            vals = np.fft.irfft(gm * phase, n_fft) / dy
            spl = CubicSpline(ycore, vals[core])
            if order == 0:
                v0x[i] = spl(z)
            elif order == 1:
                v1x[i] = spl(z)
                v1c[i] = spl(zc)
            else:
                v2x[i] = spl(z)
                v2c[i] = spl(zc)

    decay0 = np.exp(-t_nodes)[:, None]
    tw = ctx.t_weights[:, None]
    f = -np.sum(tw * (v0x - eh), axis=0)
    fp = -np.sum(tw * decay0 * v1x, axis=0)
    fpp = -np.sum(tw * decay0 ** 2 * v2x, axis=0)
    fp_core = -np.sum(tw * decay0 * v1c, axis=0)
    fpp_core = -np.sum(tw * decay0 ** 2 * v2c, axis=0)

    fp_spline = CubicSpline(ycore, fp_core)
    # per-side next-order far-field coefficients, fitted at the core edge
    # (drift k as in _residual_route: eh minus h's tail limit on that side)
    al = p.alpha
    far_c = []
    for sgn, lim in ((+1.0, h.tail_limits[1]), (-1.0, h.tail_limits[0])):
        win = (sgn * ycore >= 0.75 * core_lim) \
            & (sgn * ycore <= core_lim - 2.0)
        far_c.append(float(np.median(
            (fp_core[win] - (eh - lim) / ycore[win])
            * np.abs(ycore[win]) ** (1.0 + al))))
    residual = _residual_route(ctx, fp_spline, eh, x_out, h, core_lim,
                               far_c=tuple(far_c))

    return SteinSolution(
        params=p, h_name=h.name, x=x_out, f=f, fp=fp, fpp=fpp,
        residual=residual, eh=eh, eh_mc=eh_mc, eh_mc_se=eh_se,
        t_grid=t_nodes, core_y=ycore, core_fp=fp_core, core_fpp=fpp_core,
        h_sup_norms=dict(h.sup_norms))


def derivative_bound_report(sol: SteinSolution) -> dict:
    """Sup norms of f', f'' over the dense core and their ratios to the
    theoretical gradient bounds ||f'|| <= ||h'|| and (for alpha in (1,2))
    ||f''|| <= ||h''|| / 2."""
    a = sol.params.alpha
    sup_fp = float(np.max(np.abs(sol.core_fp)))
    sup_fpp = float(np.max(np.abs(sol.core_fpp)))
    out = {
        "alpha": a,
        "sup_fp": sup_fp,
        "sup_fpp": sup_fpp,
        "h_d1_norm": sol.h_sup_norms.get(1, math.nan),
        "h_d2_norm": sol.h_sup_norms.get(2, math.nan),
        "ratio_fp": sup_fp / sol.h_sup_norms[1],
    }
    if a > 1.0 and 2 in sol.h_sup_norms:
        out["ratio_fpp"] = sup_fpp / (0.5 * sol.h_sup_norms[2])
    return out
