import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from steinstable.numerics import GridSpec, RngStream
from steinstable.stable import (
    StableParams, cf_idd, cf_stable, cf_stable_closed, density,
    derive_params, fractional_moment, from_kv, sample, sd_ratio_cf,
    stable_levy, stable_triplet, tempered_cauchy_levy, to_kv,
    uniform_jump_levy,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)
EULER = float(np.euler_gamma)


def scale_oracle(alpha: float, m1: float, m2: float) -> float:
    """Closed form for the scale: -(m1+m2) Gamma(-alpha) cos(pi alpha / 2)
    for alpha != 1, (m1+m2) pi/2 at alpha = 1."""
    if alpha == 1.0:
        return (m1 + m2) * math.pi / 2.0
    return -(m1 + m2) * special.gamma(-alpha) * math.cos(
        math.pi * alpha / 2.0)


class TestDeriveParams:
    def test_symmetric_half(self):
        dp = derive_params(StableParams(0.5, 0.0, 1.0, 1.0))
        assert dp.Gamma_alpha == pytest.approx(0.0, abs=1e-12)
        assert dp.gamma_alpha == pytest.approx(0.0, abs=1e-12)
        # 2 sqrt(2 pi) = 5.0132565492620005
        assert dp.d_alpha == pytest.approx(2.0 * SQRT_2PI, rel=1e-10)
        assert dp.theta == 0.0

    def test_skewed_half(self):
        dp = derive_params(StableParams(0.5, 0.0, 2.0, 1.0))
        # location integral evaluates to -pi/sqrt(2) = -2.221441469079183
        assert dp.gamma_alpha == pytest.approx(-math.pi / math.sqrt(2.0),
                                               rel=1e-10)
        # below alpha = 1 there is no compensation, so the two location
        # conventions coincide
        assert dp.Gamma_alpha == pytest.approx(dp.gamma_alpha, rel=1e-10)
        assert dp.d_alpha == pytest.approx(3.0 * SQRT_2PI, rel=1e-10)
        assert dp.theta == pytest.approx(1.0 / 3.0)

    def test_skewed_three_halves(self):
        dp = derive_params(StableParams(1.5, 0.0, 2.0, 1.0))
        assert dp.gamma_alpha == pytest.approx(math.pi / math.sqrt(2.0),
                                               rel=1e-9)
        # gamma - Gamma = (m1 - m2)/(alpha - 1) above alpha = 1
        assert dp.gamma_alpha - dp.Gamma_alpha == pytest.approx(2.0,
                                                                rel=1e-9)
        assert dp.d_alpha == pytest.approx(scale_oracle(1.5, 2.0, 1.0),
                                           rel=1e-9)

    def test_alpha_one(self):
        dp = derive_params(StableParams(1.0, 0.5, 1.0, 2.0))
        assert dp.Gamma_alpha == pytest.approx(0.5, abs=1e-12)
        # gamma_1 = beta + (1 - euler_gamma)(m1 - m2)
        assert dp.gamma_alpha == pytest.approx(
            0.5 + (1.0 - EULER) * (1.0 - 2.0), rel=1e-10)
        assert dp.d_alpha == pytest.approx(1.5 * math.pi, rel=1e-12)
        assert dp.theta == pytest.approx(-1.0 / 3.0)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9, 1.2, 1.5, 1.9])
    def test_scale_closed_form(self, alpha):
        dp = derive_params(StableParams(alpha, 0.0, 1.3, 0.6))
        assert dp.d_alpha == pytest.approx(scale_oracle(alpha, 1.3, 0.6),
                                           rel=1e-9)

    def test_cauchy_normalization(self):
        # m1 = m2 = 1/pi gives the standard Cauchy: scale 1, location 0
        dp = derive_params(StableParams(1.0, 0.0, 1 / math.pi, 1 / math.pi))
        assert dp.d_alpha == pytest.approx(1.0, abs=1e-14)
        assert dp.gamma_alpha == pytest.approx(0.0, abs=1e-14)

    def test_parameter_validation(self):
        for bad in [dict(alpha=0.0), dict(alpha=2.0), dict(alpha=-0.5),
                    dict(m1=-1.0), dict(m1=0.0, m2=0.0),
                    dict(beta=math.inf)]:
            kw = dict(alpha=0.5, beta=0.0, m1=1.0, m2=1.0)
            kw.update(bad)
            with pytest.raises(ValueError):
                StableParams(**kw)


class TestCharacteristicFunction:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    @pytest.mark.parametrize("m", [(1.0, 1.0), (2.0, 1.0)])
    @pytest.mark.parametrize("beta", [0.0, 1.0])
    def test_levy_route_matches_closed_form(self, alpha, m, beta):
        p = StableParams(alpha, beta, m[0], m[1])
        t = np.linspace(-10.0, 10.0, 21)
        a = cf_stable(p, t)
        b = cf_stable_closed(p, t)
        assert np.max(np.abs(a - b)) < 1e-10

    def test_modulus(self):
        p = StableParams(1.5, 0.0, 2.0, 1.0)
        dp = derive_params(p)
        t = np.linspace(-5.0, 5.0, 41)
        v = cf_stable_closed(p, t)
        assert np.max(np.abs(np.abs(v)
                             - np.exp(-dp.d_alpha * np.abs(t) ** 1.5))) \
            < 1e-12

    def test_hermitian_symmetry_and_normalization(self):
        p = StableParams(0.9, 0.7, 1.0, 2.0)
        t = np.linspace(0.1, 4.0, 17)
        v = cf_stable_closed(p, t)
        w = cf_stable_closed(p, -t)
        assert np.max(np.abs(w - np.conj(v))) < 1e-14
        assert complex(cf_stable_closed(p, 0.0)) == pytest.approx(1.0)

    def test_cauchy_point_value(self):
        p = StableParams(1.0, 0.0, 1 / math.pi, 1 / math.pi)
        assert complex(cf_stable_closed(p, 1.0)) == pytest.approx(
            math.exp(-1.0), abs=1e-14)

    def test_triplet_route(self):
        p = StableParams(1.5, 0.0, 1.0, 1.0)
        tri = stable_triplet(p)
        for t in (0.5, 2.0):
            assert complex(cf_idd(tri, t)) == pytest.approx(
                complex(cf_stable(p, t)), abs=1e-8)

    @given(alpha=st.floats(0.2, 1.9).filter(lambda a: abs(a - 1) > 0.01),
           beta=st.floats(-2.0, 2.0),
           m1=st.floats(0.1, 3.0), m2=st.floats(0.1, 3.0),
           t=st.floats(-20.0, 20.0))
    @settings(max_examples=30, deadline=None)
    def test_cf_properties(self, alpha, beta, m1, m2, t):
        p = StableParams(alpha, beta, m1, m2)
        v = complex(cf_stable_closed(p, t))
        assert abs(v) <= 1.0 + 1e-12
        assert complex(cf_stable_closed(p, 0.0)) == pytest.approx(1.0)
        assert complex(cf_stable_closed(p, -t)) == pytest.approx(
            v.conjugate(), abs=1e-12)


class TestDensity:
    def test_cauchy_on_native_grid(self):
        p = StableParams(1.0, 0.0, 1 / math.pi, 1 / math.pi)
        x, pdf = density(p)
        mid = np.abs(x) <= 5.0
        exact = 1.0 / (np.pi * (1.0 + x[mid] ** 2))
        assert np.max(np.abs(pdf[mid] - exact)) < 1e-6

    def test_requested_grid_is_interpolated(self):
        p = StableParams(1.0, 0.0, 1 / math.pi, 1 / math.pi)
        x, pdf = density(p, GridSpec(-40.0, 40.0, 8192))
        exact = 1.0 / (np.pi * (1.0 + x ** 2))
        assert np.max(np.abs(pdf - exact)) < 2e-3

    def test_grid_beyond_safe_window_rejected(self):
        p = StableParams(1.0, 0.0, 1 / math.pi, 1 / math.pi)
        with pytest.raises(ValueError):
            density(p, GridSpec(-5000.0, 5000.0, 16384))

    def test_symmetry(self):
        x, pdf = density(StableParams(0.5, 0.0, 1.0, 1.0))
        # the native window is symmetric around gamma = 0
        assert np.max(np.abs(pdf - pdf[::-1])) < 1e-12
        assert pdf.min() > -1e-9


class TestSampling:
    def test_empirical_cf(self):
        p = StableParams(1.5, 0.0, 2.0, 1.0)
        z = sample(p, 200_000, RngStream(3, 9))
        for t in (0.3, 1.0):
            ecf = complex(np.mean(np.exp(1j * t * z)))
            tcf = complex(cf_stable_closed(p, t))
            se = math.sqrt(max(1.0 - abs(tcf) ** 2, 1e-12) / len(z))
            assert abs(ecf - tcf) < 3.0 * se + 1e-4

    def test_alpha_one_empirical_cf(self):
        p = StableParams(1.0, 0.3, 1.0, 2.0)
        z = sample(p, 200_000, RngStream(3, 11))
        t = 0.7
        ecf = complex(np.mean(np.exp(1j * t * z)))
        tcf = complex(cf_stable_closed(p, t))
        se = math.sqrt(max(1.0 - abs(tcf) ** 2, 1e-12) / len(z))
        assert abs(ecf - tcf) < 3.0 * se + 1e-4

    def test_one_sided_support(self):
        # totally right-skewed with alpha < 1: support bounded below
        p = StableParams(0.5, 0.0, 1.0, 0.0)
        z = sample(p, 50_000, RngStream(8, 0))
        dp = derive_params(p)
        assert z.min() > dp.gamma_alpha - 1e-9

    def test_moments(self):
        p = StableParams(1.0, 0.0, 1 / math.pi, 1 / math.pi)
        est = fractional_moment(p, 0.5, 200_000, RngStream(42, 1))
        # E |Cauchy|^(1/2) = sqrt(2)
        assert est.finite
        assert abs(est.value - math.sqrt(2.0)) < 4.0 * est.se
        inf_est = fractional_moment(p, 1.0, 100, RngStream(42, 2))
        assert not inf_est.finite
        assert math.isinf(inf_est.value)


class TestSelfDecomposability:
    def test_symmetric_ratio_closed_form(self):
        p = StableParams(1.2, 0.0, 1.0, 1.0)
        dp = derive_params(p)
        eta = 0.6
        t = np.linspace(-4.0, 4.0, 33)
        r = sd_ratio_cf(p, eta, t)
        expect = np.exp(-dp.d_alpha * (1.0 - eta ** 1.2) * np.abs(t) ** 1.2)
        assert np.max(np.abs(r - expect)) < 1e-12

    def test_ratio_is_cf_like(self):
        p = StableParams(0.7, 0.4, 2.0, 1.0)
        r = sd_ratio_cf(p, 0.35, np.linspace(-6, 6, 25))
        assert np.max(np.abs(r)) <= 1.0 + 1e-12
        assert complex(sd_ratio_cf(p, 0.35, 0.0)) == pytest.approx(1.0)

    def test_eta_range(self):
        p = StableParams(0.7, 0.0, 1.0, 1.0)
        for eta in (0.0, 1.0, 1.5):
            with pytest.raises(ValueError):
                sd_ratio_cf(p, eta, 1.0)


class TestLevyConstructors:
    def test_stable_types(self):
        assert stable_levy(0.5, 1.0, 1.0).idd_type == "B"
        assert stable_levy(1.0, 1.0, 1.0).idd_type == "C"
        assert stable_levy(1.5, 1.0, 1.0).idd_type == "C"

    def test_stable_density_values(self):
        lv = stable_levy(0.5, 2.0, 1.0)
        assert float(lv.density(np.array([4.0]))[0]) == pytest.approx(
            2.0 * 4.0 ** -1.5)
        assert float(lv.density(np.array([-4.0]))[0]) == pytest.approx(
            1.0 * 4.0 ** -1.5)

    def test_tempered_cauchy(self):
        lv = tempered_cauchy_levy(0.1, 1.0, 1.0)
        # the small-jump first moment diverges logarithmically, so this
        # sits in the general class
        assert lv.idd_type == "C"
        assert not lv.small_u_moment_finite
        assert float(lv.density(np.array([2.0]))[0]) == pytest.approx(
            math.exp(-0.2) / 4.0)

    def test_uniform_jump(self):
        lv = uniform_jump_levy(1.0)
        assert lv.idd_type == "A"
        assert lv.total_mass_finite


class TestSerialization:
    def test_round_trip(self):
        p = StableParams(1.5, 0.25, 2.0, 1.0)
        dp = derive_params(p)
        text = to_kv(p, dp)
        q, dq = from_kv(text)
        assert q == p
        assert dq == dp

    def test_derived_recomputed_when_missing(self):
        p = StableParams(0.5, 0.0, 1.0, 1.0)
        q, dq = from_kv("alpha=0.5\nbeta=0\nm1=1\nm2=1\n")
        assert q == p and dq is None

    def test_comments_and_blanks(self):
        q, _ = from_kv("# header\n\nalpha=0.5\nbeta=0\nm1=1\nm2=1\n")
        assert q.alpha == 0.5

    def test_errors(self):
        with pytest.raises(ValueError, match="unknown key"):
            from_kv("alpha=0.5\nbeta=0\nm1=1\nm2=1\nbogus=3\n")
        with pytest.raises(ValueError, match="duplicate"):
            from_kv("alpha=0.5\nalpha=0.7\nbeta=0\nm1=1\nm2=1\n")
        with pytest.raises(ValueError, match="missing required"):
            from_kv("alpha=0.5\nbeta=0\nm1=1\n")
        with pytest.raises(ValueError, match="all together"):
            from_kv("alpha=0.5\nbeta=0\nm1=1\nm2=1\nd_alpha=5.0\n")
        with pytest.raises(ValueError, match="key=value"):
            from_kv("alpha 0.5\n")
