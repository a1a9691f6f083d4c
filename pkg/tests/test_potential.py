import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wormhole_waveguide import DomainError, NumericalError, ScatterContext, WormholeGeometry
from wormhole_waveguide.potential import v_eff, v_fourier_closed, v_fourier_numeric

radii = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)
throats = st.floats(min_value=1e-2, max_value=1e2)
ells = st.integers(min_value=0, max_value=5)


class TestGeometry:
    def test_diameter(self):
        assert WormholeGeometry(1.5).diameter == 3.0

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan, "1", True])
    def test_invalid_b0(self, bad):
        with pytest.raises(DomainError):
            WormholeGeometry(bad)

    def test_context(self):
        ctx = ScatterContext(2.0, 1)
        assert ctx.energy == 4.0
        assert ctx.wavelength == pytest.approx(math.pi)
        with pytest.raises(DomainError):
            ScatterContext(-1.0)
        with pytest.raises(DomainError):
            ScatterContext(1.0, 1.5)
        with pytest.raises(DomainError):
            ScatterContext(1.0, -1)


class TestVeff:
    def test_throat_value(self, unit_throat):
        assert v_eff(0.0, unit_throat, 0) == 1.0

    def test_hand_value(self, unit_throat):
        # 2/2 + 1/4
        assert v_eff(1.0, unit_throat, 1) == pytest.approx(1.25, abs=1e-15)

    def test_far_field(self, unit_throat):
        assert v_eff(1e8, unit_throat, 0) < 1e-30

    def test_array_input(self, unit_throat):
        r = np.array([-1.0, 0.0, 1.0])
        np.testing.assert_allclose(v_eff(r, unit_throat, 0), [0.25, 1.0, 0.25])

    def test_rejects_nonfinite(self, unit_throat):
        with pytest.raises(DomainError):
            v_eff(math.nan, unit_throat)
        with pytest.raises(DomainError):
            v_eff([0.0, math.inf], unit_throat)

    @given(r=radii, b0=throats, L=ells)
    def test_even_and_positive(self, r, b0, L):
        g = WormholeGeometry(b0)
        assert v_eff(r, g, L) == v_eff(-r, g, L)
        assert v_eff(r, g, L) > 0

    @given(r=radii, b0=throats, L=ells)
    def test_scaling_law(self, r, b0, L):
        lhs = v_eff(r, WormholeGeometry(b0), L)
        rhs = v_eff(r / b0, WormholeGeometry(1.0), L) / b0**2
        assert lhs == pytest.approx(rhs, rel=1e-12)

    @given(b0=throats)
    def test_barrier_maximum_at_throat(self, b0):
        g = WormholeGeometry(b0)
        r = b0 * 0.01 * np.arange(-1000, 1001)
        v = v_eff(r, g, 0)
        assert r[np.argmax(v)] == 0.0
        assert v.max() == pytest.approx(g.barrier_height, rel=1e-14)


class TestFourierClosed:
    def test_zero_q(self, unit_throat):
        assert v_fourier_closed(0.0, unit_throat, 0) == pytest.approx(math.pi / 2, rel=1e-15)
        assert v_fourier_closed(0.0, unit_throat, 1) == pytest.approx(5 * math.pi / 2, rel=1e-15)

    def test_decays(self, unit_throat):
        assert v_fourier_closed(800.0, unit_throat, 2) < 1e-300
        assert v_fourier_closed(math.inf, unit_throat, 0) == 0.0

    def test_negative_q_rejected(self, unit_throat):
        with pytest.raises(DomainError):
            v_fourier_closed(-0.1, unit_throat, 0)

    def test_monotone_for_s_wave(self, unit_throat):
        q = np.linspace(0, 30, 301)
        vals = [v_fourier_closed(x, unit_throat, 0) for x in q]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert all(v > 0 for v in vals)


class TestFourierNumeric:
    # mpmath quadosc at 40 digits
    @pytest.mark.parametrize(
        "q, b0, L, expected",
        [
            (1.0, 1.0, 0, 1.1557273497909217179),
            (2.5, 2.0, 2, 0.09525548156671933529),
            (0.0, 1.0, 0, math.pi / 2),
        ],
    )
    def test_high_precision_values(self, q, b0, L, expected):
        est = v_fourier_numeric(q, WormholeGeometry(b0), L, tol=1e-10)
        assert est.value == pytest.approx(expected, rel=1e-10)
        assert est.error <= 1e-10 * abs(est.value)

    @pytest.mark.parametrize("b0", [0.5, 1.0, 3.0])
    @pytest.mark.parametrize("qb", [0, 0.1, 0.5, 1, 2, 5, 10])
    @pytest.mark.parametrize("L", [0, 1, 2])
    def test_matches_closed_form(self, b0, qb, L):
        g = WormholeGeometry(b0)
        q = qb / b0
        est = v_fourier_numeric(q, g, L)
        closed = v_fourier_closed(q, g, L)
        assert abs(est.value - closed) / closed <= 1e-6

    @pytest.mark.parametrize("q", [0.0, 0.01, 5.0])
    def test_split_point(self, q):
        # max(50 b0, 50/max(q, 1/b0)) never exceeds 50 b0
        assert v_fourier_numeric(q, WormholeGeometry(2.0), 1).r_cut == 100.0

    def test_unreachable_tolerance_raises_with_estimate(self, unit_throat):
        with pytest.raises(NumericalError) as info:
            v_fourier_numeric(1.0, unit_throat, 2, tol=1e-18)
        assert info.value.estimate == pytest.approx(v_fourier_closed(1.0, unit_throat, 2), rel=1e-8)

    def test_invalid_arguments(self, unit_throat):
        with pytest.raises(DomainError):
            v_fourier_numeric(-1.0, unit_throat)
        with pytest.raises(DomainError):
            v_fourier_numeric(1.0, unit_throat, tol=0.0)

    @settings(max_examples=25, deadline=None)
    @given(qb=st.floats(min_value=0, max_value=10), b0=st.floats(min_value=0.2, max_value=5), L=st.integers(0, 3))
    def test_oracle_agreement_random(self, qb, b0, L):
        g = WormholeGeometry(b0)
        q = qb / b0
        closed = v_fourier_closed(q, g, L)
        est = v_fourier_numeric(q, g, L, tol=1e-8)
        assert est.value == pytest.approx(closed, rel=1e-6)
