"""Gaussian score model: tail-mass law, design rule, and sampling.

For i.i.d. normal logits the softmax tail mass above a threshold converges
to a closed-form normal survival value, which inverts into a threshold and
an expected Top-k size for any target error.  The normal special functions
live here too so every theory column in the experiment harness flows
through one implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .truncation import ScoreVector

__all__ = [
    "GaussianScoreModel",
    "phi_cdf",
    "phi_survival",
    "phi_quantile",
    "limit_tail_mass",
    "threshold_for_eps",
    "k_eps",
    "keep_ratio",
    "sample_scores",
]


@dataclass(frozen=True)
class GaussianScoreModel:
    """i.i.d. normal logits: n draws with the given mean and deviation."""

    mu: float
    sigma: float
    n: int

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")


def phi_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def phi_survival(x: float) -> float:
    """Standard normal survival function, accurate deep into the tail."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


# Rational minimax approximations for the normal quantile (absolute error
# well under 1e-9 across (0, 1)); three regimes split on distance from the
# median.
_CENTRAL_NUM = (
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
)
_CENTRAL_DEN = (
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
    2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_MIDDLE_NUM = (
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
)
_MIDDLE_DEN = (
    1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
    1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_TAIL_NUM = (
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
)
_TAIL_DEN = (
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
    7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _rational(r: float, num: tuple, den: tuple) -> float:
    p = num[-1]
    for c in reversed(num[:-1]):
        p = p * r + c
    q = den[-1]
    for c in reversed(den[:-1]):
        q = q * r + c
    return p / q


def phi_quantile(p: float) -> float:
    """Inverse of the standard normal CDF on the open interval (0, 1)."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument must lie in (0, 1), got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _rational(r, _CENTRAL_NUM, _CENTRAL_DEN)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        x = _rational(r - 1.6, _MIDDLE_NUM, _MIDDLE_DEN)
    else:
        x = _rational(r - 5.0, _TAIL_NUM, _TAIL_DEN)
    return -x if q < 0 else x


def limit_tail_mass(model: GaussianScoreModel, t: float) -> float:
    """Long-run softmax mass above threshold t under the score model.

    The exponential weighting shifts the effective center of the normal law
    up by one variance, hence the (t - mu - sigma^2)/sigma argument.
    """
    return phi_survival((t - model.mu - model.sigma ** 2) / model.sigma)


def threshold_for_eps(model: GaussianScoreModel, epsilon: float) -> float:
    """Score threshold whose limiting tail mass is 1 - epsilon."""
    _check_eps(epsilon)
    return model.mu + model.sigma ** 2 + model.sigma * phi_quantile(epsilon)


class KEps(NamedTuple):
    expected: float
    size: int


def keep_ratio(sigma: float, epsilon: float) -> float:
    """Limiting fraction of keys needed for a tail mass of at most epsilon.

    Depends only on the score deviation and the budget; the mean and the
    sequence length cancel.
    """
    _check_eps(epsilon)
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return phi_survival(sigma + phi_quantile(epsilon))


def k_eps(model: GaussianScoreModel, epsilon: float) -> KEps:
    """Expected Top-k size achieving the target error, real and rounded up."""
    expected = model.n * keep_ratio(model.sigma, epsilon)
    return KEps(expected=expected, size=math.ceil(expected))


def sample_scores(model: GaussianScoreModel, seed: int) -> ScoreVector:
    """Draw one score vector from the model, reproducibly (PCG64)."""
    rng = np.random.default_rng(seed)
    return ScoreVector(rng.normal(model.mu, model.sigma, model.n))


def _check_eps(epsilon: float) -> None:
    if not 0.0 < float(epsilon) < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
