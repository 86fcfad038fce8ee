"""Two-sample statistics used by the detectors and the ground-truth oracle."""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DataError, EmptyInputError

__all__ = [
    "KsResult",
    "ZTestResult",
    "ecdf",
    "kolmogorov_sf",
    "ks_two_sample",
    "z_test_two_proportion",
    "drift_severity",
]

_SERIES_TERMS = 100
_SERIES_TOL = 1e-12
# below this the alternating series converges slowly; the Jacobi-theta
# complement form converges fast there instead
_SMALL_LAMBDA = 1.18


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    n_a: int
    n_b: int


@dataclass(frozen=True)
class ZTestResult:
    """Two-proportion Z-test on a training and a testing error rate.

    ``p_value`` is two-sided; ``p_value_greater`` is the one-sided p-value for
    the alternative "testing error is higher". ``drift`` is set only when the
    two-sided test rejects *and* the testing error went up.
    """

    z: float
    p_value: float
    p_value_greater: float
    eps_train: float
    eps_test: float
    n_train: int
    n_test: int
    pooled_error: float
    severity: float
    drift: bool
    degenerate: bool = False


def _as_sample(x, name):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size == 0:
        raise EmptyInputError(f"sample {name} is empty")
    if not np.isfinite(x).all():
        raise DataError(f"sample {name} contains NaN or infinite values")
    return x


def ecdf(sample, points):
    """Empirical CDF of ``sample`` evaluated at ``points`` (right-continuous)."""
    s = np.sort(_as_sample(sample, "sample"))
    return np.searchsorted(s, np.asarray(points, dtype=np.float64), side="right") / s.size


def kolmogorov_sf(x):
    """Survival function of the limiting Kolmogorov distribution, P(K > x)."""
    if x <= 0.0:
        return 1.0
    if x < _SMALL_LAMBDA:
        # 1 - sqrt(2 pi)/x * sum_k exp(-(2k-1)^2 pi^2 / (8 x^2))
        w = math.pi**2 / (8.0 * x * x)
        total = 0.0
        for k in range(1, _SERIES_TERMS + 1):
            term = math.exp(-((2 * k - 1) ** 2) * w)
            total += term
            if term < _SERIES_TOL * total:
                break
        p = 1.0 - math.sqrt(2.0 * math.pi) / x * total
    else:
        # 2 * sum_k (-1)^(k-1) exp(-2 k^2 x^2)
        total = 0.0
        for k in range(1, _SERIES_TERMS + 1):
            term = math.exp(-2.0 * k * k * x * x)
            total += term if k % 2 else -term
            if term < _SERIES_TOL:
                break
        p = 2.0 * total
    return min(1.0, max(0.0, p))


def ks_two_sample(a, b):
    """Two-sided two-sample Kolmogorov-Smirnov test.

    The statistic is the largest gap between the two empirical CDFs, checked
    at every observed point of either sample (which also covers ties). The
    p-value uses the asymptotic Kolmogorov distribution with effective size
    ``n_a * n_b / (n_a + n_b)``.
    """
    a = np.sort(_as_sample(a, "a"))
    b = np.sort(_as_sample(b, "b"))
    n_a, n_b = a.size, b.size
    points = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, points, side="right") / n_a
    cdf_b = np.searchsorted(b, points, side="right") / n_b
    statistic = float(np.max(np.abs(cdf_a - cdf_b)))
    en = n_a * n_b / (n_a + n_b)
    p_value = kolmogorov_sf(math.sqrt(en) * statistic)
    return KsResult(statistic=statistic, p_value=p_value, n_a=int(n_a), n_b=int(n_b))


def drift_severity(eps_train, eps_test):
    """Relative change of the error rate; NaN when the training error is 0."""
    if eps_train == 0:
        return math.nan
    return (eps_test - eps_train) / eps_train


def z_test_two_proportion(eps_train, eps_test, n_train, n_test, alpha=0.05):
    """Compare two error rates with a pooled two-proportion Z-test.

    A pooled error of exactly 0 or 1 has zero variance; the result then
    carries ``z = 0``, ``p = 1``, no drift and ``degenerate=True``.
    """
    for name, eps in (("eps_train", eps_train), ("eps_test", eps_test)):
        if not 0.0 <= eps <= 1.0:
            raise ConfigError(f"{name} must lie in [0, 1], got {eps}")
    if n_train < 1 or n_test < 1:
        raise ConfigError("sample sizes must be at least 1")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")

    pooled = (eps_train * n_train + eps_test * n_test) / (n_train + n_test)
    severity = drift_severity(eps_train, eps_test)
    var = pooled * (1.0 - pooled) * (1.0 / n_train + 1.0 / n_test)
    if var <= 0.0:
        return ZTestResult(
            z=0.0, p_value=1.0, p_value_greater=0.5,
            eps_train=eps_train, eps_test=eps_test,
            n_train=n_train, n_test=n_test, pooled_error=pooled,
            severity=severity, drift=False, degenerate=True,
        )
    z = (eps_test - eps_train) / math.sqrt(var)
    p_two = math.erfc(abs(z) / math.sqrt(2.0))
    p_greater = 0.5 * math.erfc(z / math.sqrt(2.0))
    return ZTestResult(
        z=z, p_value=p_two, p_value_greater=p_greater,
        eps_train=eps_train, eps_test=eps_test,
        n_train=n_train, n_test=n_test, pooled_error=pooled,
        severity=severity, drift=bool(p_two < alpha and eps_test > eps_train),
    )
