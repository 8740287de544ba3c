"""Smooth test functions with certified sup-norms and decay metadata.

The operator and solver layers need more than a bare callable: tail
truncation requires a decay envelope, Stein-class membership requires
sup-norm certificates for h, h', h'', and heavy-tail validity checks need
the polynomial decay order.  `TestFunction` carries all of that.

Sup-norms are analytic where that is a one-liner (Gaussian bump, tanh) and
otherwise certified on a dense evaluation grid; every function here is
smooth with O(1) scale, so a grid with ~2e5 points over the active region
bounds the true sup to far better than the 1e-3 slack we leave."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "TestFunction", "gauss_bump", "odd_gauss", "cos_gauss", "sin_gauss",
    "compact_bump", "tanh_step", "tanh_gauss", "scale_tf", "derivative_tf",
    "operator_dictionary", "solver_h2_dictionary", "lipschitz_dictionary",
    "w2h_dictionary",
]


@dataclass(frozen=True)
class TestFunction:
    """A C^2 test function with metadata.

    value/d1/d2: vectorized callables (d2 may be None for dictionary members
        that are only ever integrated, but everything below provides it).
    sup_norms: {0: ||g||, 1: ||g'||, 2: ||g''||} certified upper bounds.
    envelope(r): upper bound for sup_{|y| >= r} |g(y)|.
    decay_order: polynomial decay order k (|g| <~ (1+|y|)^-k); math.inf for
        Gaussian/compact decay.
    tail_limits: (lim_{y->-inf} g, lim_{y->+inf} g).
    """

    __test__ = False  # keep pytest from collecting this as a test class

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    sup_norms: dict = field(default_factory=dict)
    envelope: Callable[[float], float] = lambda r: math.inf
    decay_order: float = 0.0
    tail_limits: tuple[float, float] = (0.0, 0.0)

    def __call__(self, x):
        return self.value(x)


def _grid_sup(fn, lo: float, hi: float, n: int = 200001) -> float:
    x = np.linspace(lo, hi, n)
    v = np.abs(np.asarray(fn(x), dtype=float))
    # pad the grid bound by a whisker so it is a genuine upper bound for
    # these O(1)-scale smooth functions
    return float(v.max()) * (1.0 + 1e-6) + 1e-12


def gauss_bump(center: float = 0.0, width: float = 1.0,
               amp: float = 1.0) -> TestFunction:
    """amp * exp(-(x-c)^2 / (2 w^2)); all norms analytic."""
    c, w, a = float(center), float(width), float(amp)

    def val(x):
        z = (np.asarray(x, dtype=float) - c) / w
        return a * np.exp(-0.5 * z * z)

    def d1(x):
        z = (np.asarray(x, dtype=float) - c) / w
        return -a * z / w * np.exp(-0.5 * z * z)

    def d2(x):
        z = (np.asarray(x, dtype=float) - c) / w
        return a / (w * w) * (z * z - 1.0) * np.exp(-0.5 * z * z)

    def env(r, _c=c, _w=w, _a=a):
        if r <= abs(_c):
            return _a
        z = (r - abs(_c)) / _w
        return _a * math.exp(-0.5 * z * z)

    norms = {0: a, 1: a * math.exp(-0.5) / w, 2: a / (w * w)}
    return TestFunction(
        name=f"gauss(c={c:g},w={w:g},a={a:g})", value=val, d1=d1, d2=d2,
        sup_norms=norms, envelope=env, decay_order=math.inf)


def odd_gauss(width: float = 1.0, amp: float = 1.0) -> TestFunction:
    """amp * (x/w) exp(-x^2/(2w^2)): odd, Gaussian decay."""
    w, a = float(width), float(amp)

    def val(x):
        z = np.asarray(x, dtype=float) / w
        return a * z * np.exp(-0.5 * z * z)

    def d1(x):
        z = np.asarray(x, dtype=float) / w
        return a / w * (1.0 - z * z) * np.exp(-0.5 * z * z)

    def d2(x):
        z = np.asarray(x, dtype=float) / w
        return a / (w * w) * z * (z * z - 3.0) * np.exp(-0.5 * z * z)

    def env(r, _w=w, _a=a):
        z = r / _w
        if z <= 1.0:
            return _a * math.exp(-0.5)
        return _a * z * math.exp(-0.5 * z * z)

    norms = {0: a * math.exp(-0.5), 1: a / w,
             2: _grid_sup(d2, -8 * w, 8 * w)}
    return TestFunction(
        name=f"odd_gauss(w={w:g},a={a:g})", value=val, d1=d1, d2=d2,
        sup_norms=norms, envelope=env, decay_order=math.inf)


def _windowed(name, base, base_d1, base_d2, width, amp):
    """base(x) * amp * exp(-x^2/(2 width^2)) with product-rule derivatives."""
    w, a = float(width), float(amp)

    def gauss(x):
        return np.exp(-0.5 * (x / w) ** 2)

    def val(x):
        x = np.asarray(x, dtype=float)
        return a * base(x) * gauss(x)

    def d1(x):
        x = np.asarray(x, dtype=float)
        g = gauss(x)
        return a * (base_d1(x) - base(x) * x / w ** 2) * g

    def d2(x):
        x = np.asarray(x, dtype=float)
        g = gauss(x)
        core = (base_d2(x) - 2.0 * base_d1(x) * x / w ** 2
                + base(x) * ((x / w ** 2) ** 2 - 1.0 / w ** 2))
        return a * core * g

    span = 10.0 * w
    norms = {0: _grid_sup(val, -span, span),
             1: _grid_sup(d1, -span, span),
             2: _grid_sup(d2, -span, span)}
    base_sup = _grid_sup(base, -span, span)

    def env(r, _w=w, _a=a, _b=base_sup):
        return _a * _b * math.exp(-0.5 * (r / _w) ** 2)

    return TestFunction(name=name, value=val, d1=d1, d2=d2, sup_norms=norms,
                        envelope=env, decay_order=math.inf)


def cos_gauss(omega: float, width: float = 1.5,
              amp: float = 1.0) -> TestFunction:
    om = float(omega)
    return _windowed(
        f"cos_gauss(om={om:g},w={width:g},a={amp:g})",
        lambda x: np.cos(om * x),
        lambda x: -om * np.sin(om * x),
        lambda x: -om * om * np.cos(om * x),
        width, amp)


def sin_gauss(omega: float, width: float = 1.5,
              amp: float = 1.0) -> TestFunction:
    om = float(omega)
    return _windowed(
        f"sin_gauss(om={om:g},w={width:g},a={amp:g})",
        lambda x: np.sin(om * x),
        lambda x: om * np.cos(om * x),
        lambda x: -om * om * np.sin(om * x),
        width, amp)


def tanh_gauss(slope_scale: float = 1.0, width: float = 2.0,
               amp: float = 1.0) -> TestFunction:
    s = float(slope_scale)
    return _windowed(
        f"tanh_gauss(s={s:g},w={width:g},a={amp:g})",
        lambda x: np.tanh(x / s),
        lambda x: 1.0 / (s * np.cosh(x / s) ** 2),
        lambda x: -2.0 * np.tanh(x / s) / (s * s * np.cosh(x / s) ** 2),
        width, amp)


def compact_bump(center: float = 0.0, radius: float = 3.0,
                 amp: float = 1.0) -> TestFunction:
    """amp * exp(1 - 1/(1-z^2)) on |z| < 1, z = (x-c)/R; identically zero
    outside.  Smooth with compact support [c-R, c+R]."""
    c, r0, a = float(center), float(radius), float(amp)

    def _phi_terms(x):
        z = (np.asarray(x, dtype=float) - c) / r0
        inside = np.abs(z) < 1.0 - 1e-12
        om = np.where(inside, 1.0 - z * z, 1.0)
        return z, inside, om

    def val(x):
        z, inside, om = _phi_terms(x)
        return np.where(inside, a * np.exp(1.0 - 1.0 / om), 0.0)

    def d1(x):
        z, inside, om = _phi_terms(x)
        core = -2.0 * z / om ** 2
        return np.where(inside, a * np.exp(1.0 - 1.0 / om) * core / r0, 0.0)

    def d2(x):
        z, inside, om = _phi_terms(x)
        p1 = (-2.0 * z / om ** 2) ** 2
        p2 = -2.0 * (1.0 + 3.0 * z * z) / om ** 3
        return np.where(inside,
                        a * np.exp(1.0 - 1.0 / om) * (p1 + p2) / r0 ** 2,
                        0.0)

    def env(r, _c=c, _r0=r0, _a=a):
        return _a if r < abs(_c) + _r0 else 0.0

    norms = {0: a,
             1: _grid_sup(d1, c - r0, c + r0),
             2: _grid_sup(d2, c - r0, c + r0)}
    return TestFunction(
        name=f"compact(c={c:g},R={r0:g},a={a:g})", value=val, d1=d1, d2=d2,
        sup_norms=norms, envelope=env, decay_order=math.inf)


_TANH_D2_SUP = 4.0 / (3.0 * math.sqrt(3.0))  # sup |(tanh)''| = 0.7698...


def tanh_step(scale: float = 1.0, amp: float = 1.0) -> TestFunction:
    """amp * tanh(x/a): bounded, non-decaying (limits -amp/+amp)."""
    s, a = float(scale), float(amp)

    def val(x):
        return a * np.tanh(np.asarray(x, dtype=float) / s)

    def d1(x):
        return a / (s * np.cosh(np.asarray(x, dtype=float) / s) ** 2)

    def d2(x):
        x = np.asarray(x, dtype=float) / s
        return -2.0 * a * np.tanh(x) / (s * s * np.cosh(x) ** 2)

    norms = {0: a, 1: a / s, 2: a * _TANH_D2_SUP / (s * s)}
    return TestFunction(
        name=f"tanh(s={s:g},a={a:g})", value=val, d1=d1, d2=d2,
        sup_norms=norms, envelope=lambda r, _a=a: _a, decay_order=0.0,
        tail_limits=(-a, a))


def scale_tf(tf: TestFunction, c: float) -> TestFunction:
    """c * tf, with norms/envelope scaled accordingly."""
    c = float(c)
    return TestFunction(
        name=f"{c:g}*{tf.name}",
        value=lambda x, _f=tf.value: c * _f(x),
        d1=lambda x, _f=tf.d1: c * _f(x),
        d2=lambda x, _f=tf.d2: c * _f(x),
        sup_norms={k: abs(c) * v for k, v in tf.sup_norms.items()},
        envelope=lambda r, _e=tf.envelope: abs(c) * _e(r),
        decay_order=tf.decay_order,
        tail_limits=(c * tf.tail_limits[0], c * tf.tail_limits[1]))


def _fit_to(tf: TestFunction, caps: dict) -> TestFunction:
    """Scale tf so that every listed sup-norm sits just under its cap."""
    c = min(cap / tf.sup_norms[k] for k, cap in caps.items())
    return scale_tf(tf, 0.999 * c)


def derivative_tf(tf: TestFunction, halfspan: float = 48.0,
                  n: int = 96001) -> TestFunction:
    """tf' wrapped as a test function of its own (the generator applies the
    Stein operator to f', and the operator layer needs decay metadata).

    The envelope is certified on a dense grid over [-halfspan, halfspan]
    via a running maximum from the outside in; the derivative must be
    numerically dead at the boundary or we refuse rather than guess."""
    yy = np.linspace(0.0, halfspan, n)
    vals = np.maximum(np.abs(np.asarray(tf.d1(yy), dtype=float)),
                      np.abs(np.asarray(tf.d1(-yy), dtype=float)))
    env_arr = np.maximum.accumulate(vals[::-1])[::-1]
    if env_arr[-1] > 1e-100:
        raise ValueError(
            f"{tf.name}: derivative is not negligible at |y| = {halfspan:g};"
            " cannot certify a decay envelope")

    def env(r, _y=yy, _e=env_arr, _span=halfspan):
        if r >= _span:
            return 0.0
        i = np.searchsorted(_y, r)
        return float(_e[max(min(i, len(_e) - 1) - 1, 0)])

    def _no_d2(x):
        raise NotImplementedError(
            "third derivative of the base function is not tracked")

    norms = {}
    if 1 in tf.sup_norms:
        norms[0] = tf.sup_norms[1]
    if 2 in tf.sup_norms:
        norms[1] = tf.sup_norms[2]
    return TestFunction(
        name=f"d({tf.name})", value=tf.d1, d1=tf.d2, d2=_no_d2,
        sup_norms=norms, envelope=env, decay_order=math.inf,
        tail_limits=(0.0, 0.0))


def operator_dictionary() -> list[TestFunction]:
    """Decaying dictionary for Monte Carlo Stein-identity checks: smooth,
    integrable against every Levy tail handled here (Gaussian or compact
    decay throughout)."""
    return [
        gauss_bump(0.0, 1.0),
        gauss_bump(1.5, 0.8),
        odd_gauss(1.0),
        cos_gauss(2.0, 1.5),
        compact_bump(0.0, 3.0),
        tanh_gauss(1.0, 2.0),
    ]


def solver_h2_dictionary() -> list[TestFunction]:
    """Decaying h with ||h|| <= 1, ||h'|| <= 1, ||h''|| <= 1 (second-order
    smooth class), for the Stein-equation solver."""
    caps = {0: 1.0, 1: 1.0, 2: 1.0}
    return [
        _fit_to(gauss_bump(0.0, 1.3), caps),
        _fit_to(odd_gauss(1.4), caps),
        _fit_to(gauss_bump(0.8, 1.6), caps),
    ]


def lipschitz_dictionary() -> list[TestFunction]:
    """Decaying h with ||h|| <= 1/2 and ||h'|| <= 1 (the first-order class
    used by the fractional-distance bounds)."""
    caps = {0: 0.5, 1: 1.0}
    return [
        _fit_to(gauss_bump(0.0, 1.0), caps),
        _fit_to(odd_gauss(1.0), caps),
        _fit_to(cos_gauss(1.0, 2.0), caps),
    ]


def w2h_dictionary() -> list[TestFunction]:
    """Bounded dictionary with all three norms <= 1, used as a practical
    proxy when comparing a sample to a target law: low-frequency waves at
    several scales plus localized bumps and a step."""
    out = []
    for om in (0.25, 0.5, 1.0, 2.0):
        c = 1.0 / max(1.0, om * om)
        out.append(_fit_to(sin_gauss(om, 8.0 / om, c), {0: 1, 1: 1, 2: 1}))
        out.append(_fit_to(cos_gauss(om, 8.0 / om, c), {0: 1, 1: 1, 2: 1}))
    out.append(_fit_to(tanh_step(1.5), {0: 1, 1: 1, 2: 1}))
    out.append(_fit_to(gauss_bump(0.0, 1.5), {0: 1, 1: 1, 2: 1}))
    out.append(_fit_to(gauss_bump(-2.0, 1.0), {0: 1, 1: 1, 2: 1}))
    return out
