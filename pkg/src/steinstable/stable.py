"""Stable and infinitely divisible parameterizations and their transforms.

A stable law here is parameterized by (alpha, beta, m1, m2): stability index
alpha in (0,2), a location input beta, and one-sided Levy weights m1 (positive
jumps) and m2 (negative jumps), i.e. Levy density

    nu(u) = m1 * u^(-1-alpha) on u > 0,   m2 * |u|^(-1-alpha) on u < 0.

Two characteristic function routes are implemented and must agree:

* `cf_stable`        -- direct quadrature of the (compensated) Levy integral
                        exp{ i t Gamma_alpha + Z_alpha(t) }, with the
                        compensation i t u 1_{|u|<=1} switched on for
                        alpha >= 1;
* `cf_stable_closed` -- the closed form
                        exp{ i t gamma_alpha
                             - d_alpha |t|^alpha (1 - i theta sgn(t) tan(pi alpha/2)) }
                        for alpha != 1, and the log-corrected variant
                        exp{ i t gamma_1 - d_1 |t| (1 + i theta (2/pi) sgn(t) log|t|) }
                        at alpha = 1.

`derive_params` computes (Gamma_alpha, gamma_alpha, d_alpha, theta) from
(alpha, beta, m1, m2) by quadrature.  The location maps are

    alpha in (0,1):  Gamma = gamma = beta - (m1-m2) * I0,
                     I0 = int_0^inf u^-alpha / (1+u^2) du
    alpha = 1:       Gamma = beta   (the two correction integrals cancel),
                     gamma = beta + (m1-m2) * c1,
                     c1 = int_0^inf ( sin(u)/u^2 - 1/(u(1+u^2)) ) du
    alpha in (1,2):  Gamma = beta + (m1-m2) * (2 J1 - J2)   with
                     J1 = int_0^1 u^(2-alpha)/(1+u^2) du,
                     J2 = J1 + int_1^inf u^-alpha/(1+u^2) du,
                     gamma = beta + (m1-m2) * int_0^inf u^(2-alpha)/(1+u^2) du

(the signs of the gamma rows for alpha >= 1 were fixed against the direct
quadrature route; they satisfy gamma - Gamma = (m1-m2)/(alpha-1) for
alpha > 1, which is the mean of the law), and the scales are

    alpha != 1:  d = -(m1+m2) cos(pi alpha/2) * int_0^inf (e^-u - 1 [+ u]) u^(-1-alpha) du
                 (the + u compensation enters for alpha > 1)
    alpha = 1:   d = (m1+m2) * pi/2.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .numerics import (GridSpec, NonIntegrable, QuadratureSpec, RngStream,
                       fourier_invert, integrate)

__all__ = [
    "StableParams", "DerivedParams", "LevySpec", "IDDTriplet",
    "MomentEstimate", "stable_levy", "tempered_cauchy_levy",
    "uniform_jump_levy", "stable_triplet", "derive_params", "cf_stable",
    "cf_stable_closed", "cf_idd", "density", "sample", "fractional_moment",
    "sd_ratio_cf", "to_kv", "from_kv", "KV_KEYS",
]


@dataclass(frozen=True)
class StableParams:
    """Stable law S(alpha, beta, m1, m2); see module docstring."""

    alpha: float
    beta: float
    m1: float
    m2: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError(f"alpha must lie in (0,2), got {self.alpha}")
        if not (math.isfinite(self.beta)):
            raise ValueError("beta must be finite")
        if self.m1 < 0.0 or self.m2 < 0.0:
            raise ValueError("m1, m2 must be nonnegative")
        if self.m1 + self.m2 <= 0.0:
            raise ValueError("m1 + m2 must be positive")


@dataclass(frozen=True)
class DerivedParams:
    """Derived constants of a stable law: the drift Gamma_alpha of the
    Levy-integral form, the closed-form location gamma_alpha, the scale
    d_alpha > 0, and the skewness theta = (m1-m2)/(m1+m2) in [-1,1]."""

    Gamma_alpha: float
    gamma_alpha: float
    d_alpha: float
    theta: float


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo moment estimate; finite=False marks a divergent moment
    (then value is +inf and se is meaningless)."""

    value: float
    se: float
    n: int
    finite: bool = True


@dataclass(frozen=True)
class LevySpec:
    """A one-dimensional Levy measure with classification metadata.

    density: pointwise Levy density, vectorized over numpy arrays; must
        accept any nonzero float and return 0 outside the support.
    idd_type: 'A' (finite total mass), 'B' (finite small-jump first moment
        int_{|u|<=1} |u| nu(du) < inf), or 'C' (general).
    small_u_order: p with nu(u) ~ |u|^-p as u -> 0 (0 for bounded densities);
        drives singular-endpoint quadrature hints.
    tail_order: q with nu(u) ~ |u|^-q as |u| -> inf; math.inf for
        exponentially tempered or compactly supported measures.  Used to
        decide whether an operator integral converges against a given test
        function's decay.
    pos_support/neg_support: (lo, hi) ranges of |u| carrying mass on each
        side, or None for an empty side.
    """

    density: Callable[[np.ndarray], np.ndarray]
    idd_type: str
    small_u_moment_finite: bool
    total_mass_finite: bool
    small_u_order: float = 0.0
    tail_order: float = math.inf
    pos_support: tuple[float, float] | None = (0.0, math.inf)
    neg_support: tuple[float, float] | None = (0.0, math.inf)
    name: str = "levy"

    def __post_init__(self):
        if self.idd_type not in ("A", "B", "C"):
            raise ValueError("idd_type must be 'A', 'B' or 'C'")
        if self.idd_type == "A" and not self.total_mass_finite:
            raise ValueError("type A requires finite total mass")
        if self.idd_type == "B" and not self.small_u_moment_finite:
            raise ValueError("type B requires a finite small-jump moment")
        if not self.small_u_moment_finite and self.idd_type != "C":
            raise ValueError("infinite small-jump moment forces type C")


@dataclass(frozen=True)
class IDDTriplet:
    """Generating triplet (beta, sigma2, levy) of an infinitely divisible
    law in the truncated form: cf = exp{ i t beta - sigma2 t^2 / 2
    + int (e^{itu} - 1 - i t u 1_{|u|<=1}) nu(du) }."""

    beta: float
    sigma2: float
    levy: LevySpec | None

    def __post_init__(self):
        if self.sigma2 < 0.0:
            raise ValueError("sigma2 must be nonnegative")
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")


# ---------------------------------------------------------------------------
# Levy measure constructors
# ---------------------------------------------------------------------------

def stable_levy(alpha: float, m1: float, m2: float) -> LevySpec:
    """Levy measure of S(alpha, ., m1, m2).  Type B below alpha = 1
    (small jumps have a finite first moment), type C from alpha = 1 on."""
    if not (0.0 < alpha < 2.0):
        raise ValueError("alpha must lie in (0,2)")

    def dens(u, _a=alpha, _m1=m1, _m2=m2):
        u = np.asarray(u, dtype=float)
        out = np.where(u > 0, _m1, _m2) * np.abs(u) ** (-1.0 - _a)
        return np.where(u == 0.0, np.inf, out)

    return LevySpec(
        density=dens,
        idd_type="B" if alpha < 1.0 else "C",
        small_u_moment_finite=alpha < 1.0,
        total_mass_finite=False,
        small_u_order=1.0 + alpha,
        tail_order=1.0 + alpha,
        pos_support=(0.0, math.inf) if m1 > 0 else None,
        neg_support=(0.0, math.inf) if m2 > 0 else None,
        name=f"stable(alpha={alpha:g},m1={m1:g},m2={m2:g})",
    )


def tempered_cauchy_levy(gamma: float, m1: float, m2: float) -> LevySpec:
    """Exponentially tempered alpha=1 Levy measure
    nu(u) = m1 e^{-gamma u} u^-2 (u>0) + m2 e^{-gamma|u|} |u|^-2 (u<0).

    The tempering controls the tails but not the u^-2 blow-up at the origin,
    so the small-jump first moment is still infinite and the measure is
    type C.  As gamma -> 0 it recovers the alpha = 1 stable measure."""
    if gamma <= 0.0:
        raise ValueError("tempering rate gamma must be positive")

    def dens(u, _g=gamma, _m1=m1, _m2=m2):
        u = np.asarray(u, dtype=float)
        au = np.abs(u)
        out = np.where(u > 0, _m1, _m2) * np.exp(-_g * au)
        with np.errstate(divide="ignore"):
            out = out / np.where(au == 0.0, np.nan, au) ** 2
        return np.where(au == 0.0, np.inf, out)

    return LevySpec(
        density=dens,
        idd_type="C",
        small_u_moment_finite=False,
        total_mass_finite=False,
        small_u_order=2.0,
        pos_support=(0.0, math.inf) if m1 > 0 else None,
        neg_support=(0.0, math.inf) if m2 > 0 else None,
        name=f"tempered_cauchy(gamma={gamma:g},m1={m1:g},m2={m2:g})",
    )


def uniform_jump_levy(rate: float = 1.0) -> LevySpec:
    """Finite-activity (type A) fixture: compound-Poisson measure with
    intensity `rate` and U(0,1] jump sizes, nu(du) = rate * 1_(0,1](u) du."""
    if rate <= 0.0:
        raise ValueError("rate must be positive")

    def dens(u, _r=rate):
        u = np.asarray(u, dtype=float)
        return np.where((u > 0.0) & (u <= 1.0), _r, 0.0)

    return LevySpec(
        density=dens,
        idd_type="A",
        small_u_moment_finite=True,
        total_mass_finite=True,
        small_u_order=0.0,
        pos_support=(0.0, 1.0),
        neg_support=None,
        name=f"uniform_jump(rate={rate:g})",
    )


def stable_triplet(params: StableParams) -> IDDTriplet:
    """The generating triplet of a stable law, in the truncated form used by
    `cf_idd`/IDDTriplet.  For alpha >= 1 the triplet drift equals
    Gamma_alpha; for alpha < 1 the change of compensation shifts it by
    int_{|u|<=1} u nu(du) = (m1-m2)/(1-alpha)."""
    dp = derive_params(params)
    if params.alpha < 1.0:
        beta_lk = dp.Gamma_alpha + (params.m1 - params.m2) / (1.0 - params.alpha)
    else:
        beta_lk = dp.Gamma_alpha
    return IDDTriplet(beta=beta_lk, sigma2=0.0,
                      levy=stable_levy(params.alpha, params.m1, params.m2))


# ---------------------------------------------------------------------------
# Derived parameters
# ---------------------------------------------------------------------------

_QS = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-11)


def _qs_sing(s: float) -> QuadratureSpec:
    return QuadratureSpec(abs_tol=1e-12, rel_tol=1e-11, singularity_exponent=s)


# Cancellation-free kernels.  The desingularizing substitutions push
# quadrature nodes arbitrarily close to 0, where the naive differences
# cos(x)-1, sin(x)-x, exp(-u)-1+u lose all significant digits and the
# adaptive rule sees spurious spikes.

def _cosm1(x: float) -> float:
    """cos(x) - 1 without cancellation."""
    s = math.sin(0.5 * x)
    return -2.0 * s * s


def _sinmx(x: float) -> float:
    """sin(x) - x without cancellation."""
    if abs(x) < 0.05:
        x2 = x * x
        return -x * x2 * (1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0)
    return math.sin(x) - x


def _em1pu(u: float) -> float:
    """exp(-u) - 1 + u without cancellation (u >= 0)."""
    if u < 1e-3:
        u2 = u * u
        return u2 * (0.5 - u / 6.0 + u2 / 24.0 - u2 * u / 120.0)
    return math.expm1(-u) + u


@functools.lru_cache(maxsize=256)
def derive_params(params: StableParams) -> DerivedParams:
    """Derived constants (Gamma_alpha, gamma_alpha, d_alpha, theta); see the
    module docstring for the defining integrals."""
    a, beta, m1, m2 = params.alpha, params.beta, params.m1, params.m2
    dm = m1 - m2
    sm = m1 + m2
    theta = dm / sm

    if a < 1.0:
        i0 = integrate(lambda u: u ** (-a) / (1.0 + u * u), 0.0, math.inf,
                       spec=_qs_sing(a))
        gam_big = beta - dm * i0
        gam_small = gam_big
        # tail split: int_1^inf (e^-u - 1) u^(-1-a) du
        #           = int_1^inf e^-u u^(-1-a) du - 1/a.
        # Leaving the -1 inside gives a u^(-1-a) tail that the adaptive
        # rule cannot push to 1e-12 for small a.
        e_int = (integrate(lambda u: math.expm1(-u) * u ** (-1.0 - a),
                           0.0, 1.0, spec=_qs_sing(a))
                 + integrate(lambda u: math.exp(-u) * u ** (-1.0 - a),
                             1.0, math.inf, spec=_QS)
                 - 1.0 / a)
        d = -sm * math.cos(math.pi * a / 2.0) * e_int
    elif a == 1.0:
        gam_big = beta
        c1 = (integrate(lambda u: math.sin(u) / (u * u)
                        - 1.0 / (u * (1.0 + u * u)), 0.0, 1.0, spec=_QS)
              + integrate(lambda u: 1.0 / (u * u), 1.0, math.inf,
                          spec=_QS, weight=("sin", 1.0))
              - integrate(lambda u: 1.0 / (u * (1.0 + u * u)), 1.0, math.inf,
                          spec=_QS))
        gam_small = beta + dm * c1
        d = sm * math.pi / 2.0
    else:
        j1 = integrate(lambda u: u ** (2.0 - a) / (1.0 + u * u), 0.0, 1.0,
                       spec=_QS)
        j2 = j1 + integrate(lambda u: u ** (-a) / (1.0 + u * u), 1.0,
                            math.inf, spec=_QS)
        gam_big = beta + dm * (2.0 * j1 - j2)
        # u^(2-a)/(1+u^2) = u^-a - u^-a/(1+u^2): integrate the elementary
        # u^-a tail exactly and leave only the u^(-a-2) remainder to the
        # adaptive rule (the raw u^-a tail stalls it near a = 1)
        i2 = (j1 + 1.0 / (a - 1.0)
              - integrate(lambda u: u ** (-a) / (1.0 + u * u), 1.0,
                          math.inf, spec=_QS))
        gam_small = beta + dm * i2
        # same treatment: int_1^inf (e^-u - 1 + u) u^(-1-a) du
        #   = int_1^inf e^-u u^(-1-a) du + 1/(a-1) - 1/a
        e_int = (integrate(lambda u: _em1pu(u) * u ** (-1.0 - a),
                           0.0, 1.0, spec=_qs_sing(a - 1.0))
                 + integrate(lambda u: math.exp(-u) * u ** (-1.0 - a),
                             1.0, math.inf, spec=_QS)
                 + 1.0 / (a - 1.0) - 1.0 / a)
        d = -sm * math.cos(math.pi * a / 2.0) * e_int

    return DerivedParams(Gamma_alpha=gam_big, gamma_alpha=gam_small,
                         d_alpha=d, theta=theta)


# ---------------------------------------------------------------------------
# Characteristic functions
# ---------------------------------------------------------------------------

def _z_stable_pos_t(a: float, m1: float, m2: float, t: float) -> complex:
    """Z_alpha(t) = int (e^{itu} - 1 - itu 1_{alpha>=1} 1_{|u|<=1}) nu(du)
    for t > 0, by quadrature (real/imaginary parts separately); the
    one-sided integrals for the m2 side follow by u -> -u, i.e. t -> -t."""

    def one_side(tt: float) -> complex:
        # int_0^inf (e^{i tt u} - 1 - i tt u 1_{alpha>=1} 1_{u<=1}) u^(-1-a) du
        s = 1.0 if tt >= 0 else -1.0
        w = abs(tt)
        if w == 0.0:
            return 0.0 + 0.0j
        # head (0,1]
        re_head = integrate(
            lambda u: _cosm1(w * u) * u ** (-1.0 - a),
            0.0, 1.0,
            spec=_qs_sing(a - 1.0) if a > 1.0 else _QS)
        if a < 1.0:
            im_head = integrate(
                lambda u: math.sin(w * u) * u ** (-1.0 - a),
                0.0, 1.0, spec=_qs_sing(a))
        else:
            im_head = integrate(
                lambda u: _sinmx(w * u) * u ** (-1.0 - a),
                0.0, 1.0, spec=_QS)
        # tail (1, inf): e^{i w u} - 1 against u^(-1-a), Fourier weights
        re_tail = integrate(lambda u: u ** (-1.0 - a), 1.0, math.inf,
                            spec=_QS, weight=("cos", w)) - 1.0 / a
        im_tail = integrate(lambda u: u ** (-1.0 - a), 1.0, math.inf,
                            spec=_QS, weight=("sin", w))
        return complex(re_head + re_tail, s * (im_head + im_tail))

    return m1 * one_side(t) + m2 * one_side(-t)


def cf_stable(params: StableParams, t) -> complex | np.ndarray:
    """Characteristic function by direct quadrature of the Levy integral:
    exp{ i t Gamma_alpha + Z_alpha(t) }.  Accepts scalar or array t."""
    dp = derive_params(params)
    a = params.alpha

    def one(tv: float) -> complex:
        if tv == 0.0:
            return 1.0 + 0.0j
        w = abs(tv)
        z = _z_stable_pos_t(a, params.m1, params.m2, w)
        val = np.exp(1j * w * dp.Gamma_alpha + z)
        return val if tv > 0 else np.conj(val)

    if np.isscalar(t):
        return one(float(t))
    t = np.asarray(t, dtype=float)
    return np.array([one(float(tv)) for tv in t.ravel()]).reshape(t.shape)


def cf_stable_closed(params: StableParams, t,
                     derived: DerivedParams | None = None):
    """Closed-form characteristic function (vectorized over t)."""
    dp = derived or derive_params(params)
    a = params.alpha
    t = np.asarray(t, dtype=float)
    at = np.abs(t)
    sg = np.sign(t)
    if a != 1.0:
        expo = (1j * t * dp.gamma_alpha
                - dp.d_alpha * at ** a
                * (1.0 - 1j * dp.theta * sg * math.tan(math.pi * a / 2.0)))
    else:
        with np.errstate(divide="ignore"):
            lg = np.where(at > 0.0, np.log(np.where(at > 0.0, at, 1.0)), 0.0)
        expo = (1j * t * dp.gamma_alpha
                - dp.d_alpha * at
                * (1.0 + 1j * dp.theta * sg * (2.0 / math.pi) * lg))
    out = np.exp(expo)
    return out if out.shape else complex(out)


def _cf_idd_exponent_side(dens_abs, lo: float, hi: float, t: float,
                          sign: float, p: float) -> complex:
    """int over one side of (e^{i t u} - 1 - i t u 1_{|u|<=1}) nu(du), with
    u = sign * v, v in (lo, hi), dens_abs(v) = nu(sign v).  p is the
    small-v blow-up order of dens_abs."""
    w = t * sign  # effective frequency on this side
    re = 0.0
    im = 0.0
    # head piece (lo, min(hi,1)] carries the compensation
    h_hi = min(hi, 1.0)
    if h_hi > lo:
        s_re = max(0.0, p - 2.0)
        re += integrate(lambda v: _cosm1(w * v) * dens_abs(v),
                        lo, h_hi, spec=_qs_sing(s_re) if s_re > 0 else _QS)
        im += integrate(lambda v: _sinmx(w * v) * dens_abs(v),
                        lo, h_hi, spec=_QS)
    # tail piece (max(lo,1), hi): no compensation
    t_lo = max(lo, 1.0)
    if hi > t_lo:
        aw = abs(w)
        if math.isinf(hi):
            re += integrate(dens_abs, t_lo, math.inf, spec=_QS,
                            weight=("cos", aw))
            im += math.copysign(1.0, w) * integrate(
                dens_abs, t_lo, math.inf, spec=_QS, weight=("sin", aw))
            re -= integrate(dens_abs, t_lo, math.inf, spec=_QS)
        else:
            re += integrate(lambda v: _cosm1(w * v) * dens_abs(v),
                            t_lo, hi, spec=_QS)
            im += integrate(lambda v: math.sin(w * v) * dens_abs(v),
                            t_lo, hi, spec=_QS)
    return complex(re, im)


def cf_idd(triplet: IDDTriplet, t) -> complex | np.ndarray:
    """Characteristic function of an infinitely divisible law from its
    generating triplet, by quadrature of the truncated Levy integral.
    Accepts scalar or array t."""
    levy = triplet.levy

    def one(tv: float) -> complex:
        expo = 1j * tv * triplet.beta - 0.5 * triplet.sigma2 * tv * tv
        if tv != 0.0 and levy is not None:
            if levy.pos_support is not None:
                lo, hi = levy.pos_support
                expo += _cf_idd_exponent_side(
                    lambda v: float(levy.density(v)), lo, hi, tv, +1.0,
                    levy.small_u_order)
            if levy.neg_support is not None:
                lo, hi = levy.neg_support
                expo += _cf_idd_exponent_side(
                    lambda v: float(levy.density(-v)), lo, hi, tv, -1.0,
                    levy.small_u_order)
        return complex(np.exp(expo))

    if np.isscalar(t):
        return one(float(t))
    t = np.asarray(t, dtype=float)
    return np.array([one(float(tv)) for tv in t.ravel()]).reshape(t.shape)


# ---------------------------------------------------------------------------
# Density, sampling, moments
# ---------------------------------------------------------------------------

def _auto_window(params: StableParams, dp: DerivedParams):
    """Pick an FFT window wide/fine enough that aliasing stays near 1e-6:
    spatial half-width W with folded tail density (m1+m2) W^(-1-alpha)
    below ~1e-6, frequency half-width with |cf| below ~1e-8 at the edge."""
    a = params.alpha
    scale = dp.d_alpha ** (1.0 / a)
    w_tail = ((params.m1 + params.m2) * 1e6) ** (1.0 / (1.0 + a))
    half_w = max(64.0 * scale, w_tail, 64.0)
    xi_max = (18.42 / dp.d_alpha) ** (1.0 / a)
    n = 2.0 * half_w * xi_max / math.pi
    n = int(2 ** min(23, max(12, math.ceil(math.log2(max(n, 2.0))))))
    return half_w, n


def density(params: StableParams, grid: GridSpec | None = None):
    """Density of the stable law by FFT inversion of the closed-form cf.

    The transform always runs on an internal alias-safe window; the result
    is then restricted/interpolated to `grid` (or to a default window of
    +-30 scale units around gamma_alpha when grid is None).  Returns (x, p).
    """
    dp = derive_params(params)
    half_w, n = _auto_window(params, dp)
    center = dp.gamma_alpha
    big = GridSpec(center - half_w, center + half_w, n)
    xb, pb = fourier_invert(lambda xi: cf_stable_closed(params, xi, dp), big)
    if grid is None:
        scale = dp.d_alpha ** (1.0 / params.alpha)
        lo = center - 30.0 * scale
        hi = center + 30.0 * scale
        m = (xb >= lo) & (xb <= hi)
        return xb[m], pb[m]
    x = grid.points()
    if x[0] < xb[0] or x[-1] > xb[-1]:
        raise ValueError("requested grid extends beyond the alias-safe "
                         "window; widen the internal window instead")
    p = np.interp(x, xb, pb)
    return x, p


def sample(params: StableParams, n: int, stream: RngStream) -> np.ndarray:
    """Exact sampler (Chambers-Mallows-Stuck), matching cf_stable_closed.

    Draws U ~ Uniform(-pi/2, pi/2) and W ~ Exp(1); for alpha != 1 returns
    gamma_alpha + d^(1/alpha) * Z0 with Z0 the standard CMS variate of
    skewness theta; at alpha = 1 the scale enters with the classical
    (2/pi) theta d log d location correction."""
    dp = derive_params(params)
    a = params.alpha
    th = dp.theta
    g = stream.generator()
    u = g.uniform(-math.pi / 2.0, math.pi / 2.0, int(n))
    w = g.exponential(1.0, int(n))
    if a != 1.0:
        ta = math.tan(math.pi * a / 2.0)
        b0 = math.atan(th * ta) / a
        s0 = (1.0 + th * th * ta * ta) ** (1.0 / (2.0 * a))
        z0 = (s0 * np.sin(a * (u + b0)) / np.cos(u) ** (1.0 / a)
              * (np.cos(u - a * (u + b0)) / w) ** ((1.0 - a) / a))
        return dp.gamma_alpha + dp.d_alpha ** (1.0 / a) * z0
    hpi = math.pi / 2.0
    z0 = (2.0 / math.pi) * ((hpi + th * u) * np.tan(u)
                            - th * np.log((hpi * w * np.cos(u))
                                          / (hpi + th * u)))
    d = dp.d_alpha
    return d * z0 + dp.gamma_alpha + (2.0 / math.pi) * th * d * math.log(d)


def fractional_moment(params: StableParams, delta: float, n: int,
                      stream: RngStream) -> MomentEstimate:
    """MC estimate of E|X|^delta.  Finite iff delta < alpha; for
    delta >= alpha returns the infinite marker instead of a number."""
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    if delta >= params.alpha:
        return MomentEstimate(value=math.inf, se=math.nan, n=0, finite=False)
    x = np.abs(sample(params, n, stream)) ** delta
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(len(x)))
    return MomentEstimate(value=m, se=se, n=int(n), finite=True)


def sd_ratio_cf(params: StableParams, eta: float, t):
    """Self-decomposability ratio cf(t)/cf(eta t) for 0 < eta < 1; this is
    itself a characteristic function (of the remainder component)."""
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must lie in (0,1)")
    dp = derive_params(params)
    t = np.asarray(t, dtype=float)
    num = np.asarray(cf_stable_closed(params, t, dp))
    den = np.asarray(cf_stable_closed(params, eta * t, dp))
    out = num / den
    return out if out.shape else complex(out)


# ---------------------------------------------------------------------------
# key=value serialization
# ---------------------------------------------------------------------------

KV_KEYS = ("alpha", "beta", "m1", "m2",
           "gamma_alpha", "d_alpha", "theta", "Gamma_alpha")


def to_kv(params: StableParams,
          derived: DerivedParams | None = None) -> str:
    """Serialize params (and derived constants, computed if not supplied) as
    key=value lines with 17 significant digits."""
    dp = derived or derive_params(params)
    vals = {
        "alpha": params.alpha, "beta": params.beta,
        "m1": params.m1, "m2": params.m2,
        "gamma_alpha": dp.gamma_alpha, "d_alpha": dp.d_alpha,
        "theta": dp.theta, "Gamma_alpha": dp.Gamma_alpha,
    }
    return "\n".join(f"{k}={vals[k]:.17g}" for k in KV_KEYS) + "\n"


def from_kv(text: str) -> tuple[StableParams, DerivedParams | None]:
    """Parse the serialization produced by `to_kv`.  The four parameter keys
    are required; the four derived keys are optional but all-or-none."""
    got: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        k, _, v = line.partition("=")
        k = k.strip()
        if k not in KV_KEYS:
            raise ValueError(f"line {lineno}: unknown key {k!r}")
        if k in got:
            raise ValueError(f"line {lineno}: duplicate key {k!r}")
        got[k] = float(v)
    for k in ("alpha", "beta", "m1", "m2"):
        if k not in got:
            raise ValueError(f"missing required key {k!r}")
    params = StableParams(alpha=got["alpha"], beta=got["beta"],
                          m1=got["m1"], m2=got["m2"])
    dkeys = ("Gamma_alpha", "gamma_alpha", "d_alpha", "theta")
    have = [k for k in dkeys if k in got]
    if not have:
        return params, None
    if len(have) != len(dkeys):
        raise ValueError("derived keys must be given all together or not "
                         f"at all; got only {have}")
    return params, DerivedParams(Gamma_alpha=got["Gamma_alpha"],
                                 gamma_alpha=got["gamma_alpha"],
                                 d_alpha=got["d_alpha"], theta=got["theta"])
