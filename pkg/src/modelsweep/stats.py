"""Contingency tables, the G-squared statistic, and interdependency tests.

The edge test compares two nested decomposable fits of the same data: its
statistic is the deviance difference, referred either to the asymptotic
chi-square distribution or to a Monte Carlo null obtained by parametric
bootstrap from the smaller model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import chdtrc

from .graphmodel import FittedModel, fit_ml_encoded


@dataclass(eq=False)
class ContingencyTable:
    """Dense joint counts over a small set of categorical variables."""

    variables: tuple[str, ...]
    levels: tuple[tuple[str, ...], ...]
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        expected_shape = tuple(len(values) for values in self.levels)
        if len(self.variables) != len(self.levels):
            raise ValueError("one level list per variable is required")
        if counts.shape != expected_shape:
            raise ValueError(
                f"counts shape {counts.shape} does not match levels {expected_shape}")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        self.counts = counts.astype(np.int64)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: int
    p_asymptotic: float
    p_exact: float | None = None
    mc_samples: int | None = None


def g2(observed, fitted) -> float:
    """Likelihood-ratio statistic 2 * sum O * ln(O/E) over cells with O > 0.

    Parameters
    ----------
    observed : ContingencyTable or ndarray
        Observed counts.
    fitted : ndarray
        Expected counts under the model being tested; must have the same
        shape and (within 1e-6) the same total as ``observed``.

    A cell with a positive observation but zero expectation makes the
    statistic infinite: the model rules out something that happened.
    """
    obs = np.asarray(getattr(observed, "counts", observed), dtype=np.float64)
    exp = np.asarray(fitted, dtype=np.float64)
    if obs.shape != exp.shape:
        raise ValueError(f"shape mismatch: {obs.shape} vs {exp.shape}")
    if np.any(exp < 0):
        raise ValueError("fitted values must be nonnegative")
    if abs(obs.sum() - exp.sum()) > 1e-6:
        raise ValueError("fitted values must sum to the observed total")
    mask = obs > 0
    if np.any(exp[mask] == 0):
        return math.inf
    return float(2.0 * np.sum(obs[mask] * np.log(obs[mask] / exp[mask])))


def chi2_sf(x: float, df: int) -> float:
    """Upper-tail probability of the chi-square distribution."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if x < 0:
        raise ValueError(f"statistic must be nonnegative, got {x}")
    return float(chdtrc(df, x))


def independence_test(counts) -> TestResult:
    """G-squared test of independence on a two-way table.

    Expected counts come from the product of the margins; degrees of freedom
    are (rows - 1) * (cols - 1). Rows or columns with zero margin contribute
    nothing to the statistic.
    """
    obs = np.asarray(counts, dtype=np.float64)
    if obs.ndim != 2:
        raise ValueError("a two-way table is required")
    if np.any(obs < 0):
        raise ValueError("counts must be nonnegative")
    total = obs.sum()
    if total == 0:
        raise ValueError("empty table")
    expected = obs.sum(axis=1, keepdims=True) * obs.sum(axis=0, keepdims=True) / total
    mask = obs > 0
    statistic = max(0.0, float(2.0 * np.sum(obs[mask] * np.log(obs[mask] / expected[mask]))))
    df = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    p = chi2_sf(statistic, df) if df >= 1 else 1.0
    return TestResult(statistic=statistic, df=df, p_asymptotic=p)


def _deviance_difference(model_with: FittedModel, model_without: FittedModel) -> float:
    # Both fits share the data, so G2(without) - G2(with) reduces to twice
    # the log-likelihood gap; clamp tiny negative rounding noise.
    return max(0.0, 2.0 * (model_with.log_likelihood() - model_without.log_likelihood()))


def _validate_nested(model_with: FittedModel, model_without: FittedModel) -> None:
    if model_with.form.variables != model_without.form.variables:
        raise ValueError("models must share the same variables")
    if model_with.form.tag != model_without.form.tag:
        raise ValueError("models must share the same tag variable")
    if model_with.levels != model_without.levels:
        raise ValueError("models must share the same value domains")
    if model_with.n != model_without.n:
        raise ValueError("models must be fitted on the same data")
    removed = model_with.form.edges - model_without.form.edges
    extra = model_without.form.edges - model_with.form.edges
    if extra or len(removed) != 1:
        raise ValueError("the smaller form must be the larger minus exactly one edge")


def edge_test_fitted(model_with: FittedModel, model_without: FittedModel,
                     mc_samples: int = 0,
                     seed: int | Sequence[int] = 0) -> TestResult:
    """Edge test given two already-fitted nested models; see ``edge_test``."""
    _validate_nested(model_with, model_without)
    statistic = _deviance_difference(model_with, model_without)
    df = model_with.dimension - model_without.dimension
    if df < 0:
        raise AssertionError("nested forms cannot lose parameters")
    p_asymptotic = chi2_sf(statistic, df) if df >= 1 else 1.0
    if mc_samples <= 0:
        return TestResult(statistic=statistic, df=df, p_asymptotic=p_asymptotic)

    base = tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)
    levels = model_without.levels
    hits = 0
    for i in range(mc_samples):
        rng = np.random.default_rng(base + (i,))
        codes = model_without.sample_codes(model_without.n, rng)
        replicate_with = fit_ml_encoded(model_with.form, codes, levels)
        replicate_without = fit_ml_encoded(model_without.form, codes, levels)
        if _deviance_difference(replicate_with, replicate_without) >= statistic:
            hits += 1
    p_exact = (hits + 1) / (mc_samples + 1)
    return TestResult(statistic=statistic, df=df, p_asymptotic=p_asymptotic,
                      p_exact=p_exact, mc_samples=mc_samples)


def edge_test(model_with: FittedModel, model_without: FittedModel, data,
              mc_samples: int = 0, seed: int | Sequence[int] = 0) -> TestResult:
    """Test how strongly one pairwise interdependency shows in the data.

    Parameters
    ----------
    model_with, model_without : FittedModel
        Nested fits of the same data whose forms differ by exactly one edge.
    data : sequence of FeatureVector
        The training data both models were fitted on (used for validation).
    mc_samples : int
        When positive, also estimate an exact p-value by parametric
        bootstrap: sample this many datasets of the same size from
        ``model_without``, refit both forms on each, and report the
        add-one-smoothed fraction whose deviance difference reaches the
        observed one. Replicate i uses the derived RNG stream (seed, i), so
        results are reproducible and order-independent.
    """
    if len(data) != model_with.n:
        raise ValueError("data size does not match the fitted models")
    return edge_test_fitted(model_with, model_without, mc_samples=mc_samples,
                            seed=seed)
