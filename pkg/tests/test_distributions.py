import numpy as np
import pytest
from scipy.special import ndtr, ndtri

from sobolsa.distributions import (MarginalSpec, quantile_discrete_uniform, quantile_normal, quantile_uniform,
                                   standard_normal_quantile, transform)
from sobolsa.errors import ConfigError, DomainError, InfiniteQuantileError


class TestStandardNormalQuantile:
    def test_known_values(self):
        assert standard_normal_quantile(0.5) == 0.0
        assert standard_normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-14)
        assert standard_normal_quantile(0.025) == pytest.approx(-1.959963984540054, abs=1e-14)

    def test_against_scipy_over_full_range(self):
        p = np.concatenate([np.logspace(-300, -1, 400), np.linspace(0.01, 0.99, 400),
                            1 - np.logspace(-16, -1, 100)])
        assert np.max(np.abs(standard_normal_quantile(p) - ndtri(p))) < 1e-12

    def test_round_trip_through_cdf(self):
        p = np.linspace(1e-6, 1 - 1e-6, 2001)
        assert np.max(np.abs(ndtr(standard_normal_quantile(p)) - p)) < 1e-9

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, np.nan])
    def test_outside_open_interval(self, p):
        with pytest.raises(InfiniteQuantileError):
            standard_normal_quantile(p)

    def test_scalar_returns_float(self):
        assert isinstance(standard_normal_quantile(0.3), float)


class TestQuantiles:
    def test_uniform(self):
        assert quantile_uniform(0.25, 2.0, 6.0) == 3.0
        with pytest.raises(DomainError):
            quantile_uniform(0.5, 1.0, 1.0)

    def test_normal(self):
        assert quantile_normal(0.5, 1.7, 0.3) == pytest.approx(1.7)
        with pytest.raises(DomainError):
            quantile_normal(0.5, 0.0, 0.0)

    def test_discrete_uniform(self):
        p = np.array([0.0, 0.24, 0.25, 0.99, 1.0])
        assert list(quantile_discrete_uniform(p, 1, 4)) == [1, 1, 2, 4, 4]


class TestMarginalSpec:
    def test_dict_round_trip(self):
        for spec in [{"name": "r", "dist": "normal", "mean": 1.7, "sd": 0.3},
                     {"name": "N0", "dist": "uniform", "min": 10.0, "max": 50.0},
                     {"name": "n", "dist": "discrete_uniform", "lo": 1.0, "hi": 5.0}]:
            assert MarginalSpec.from_dict(spec).to_dict() == spec

    def test_invalid(self):
        with pytest.raises(ConfigError):
            MarginalSpec("x", "uniform", (2.0, 1.0))
        with pytest.raises(ConfigError):
            MarginalSpec.from_dict({"name": "x", "dist": "normal", "mean": 0})
        with pytest.raises(ConfigError):
            MarginalSpec.from_dict({"name": "x", "dist": "gamma"})

    def test_transform_columns(self):
        u = np.array([[0.5, 0.5], [0.25, 0.75]])
        out = transform(u, [MarginalSpec("a", "uniform", (0, 4)), MarginalSpec("b", "normal", (10, 2))])
        assert out[1, 0] == 1.0
        assert out[0, 1] == pytest.approx(10.0)
        with pytest.raises(ConfigError):
            transform(u, [MarginalSpec("a", "uniform", (0, 1))])
