"""Backward stepwise simplification of the model form.

Starting from the saturated form, each step removes the feature-feature
edge whose interdependency is least apparent in the training data (largest
edge-test p-value), keeping every intermediate form chordal. Tag-feature
edges are never candidates, so the chain always terminates at the
conditional-independence (naive Bayes) form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import FeatureVector
from .graphmodel import (FittedModel, ModelForm, fit_ml_encoded, maximal_cliques,
                         remove_edge, saturated_form)
from .stats import edge_test_fitted
from .tables import Levels, encode_rows


@dataclass(frozen=True)
class TesterConfig:
    """How edge strength is scored during elimination.

    With ``mc_samples == 0`` the asymptotic chi-square p-value is used;
    otherwise the Monte Carlo exact p-value with that many replicates.
    """

    mc_samples: int = 0
    seed: int = 0


@dataclass(frozen=True)
class EliminationStep:
    removed_edge: tuple[str, str]
    p_value: float
    statistic: float
    resulting_form: ModelForm


@dataclass(eq=False)
class ChainEntry:
    form: ModelForm
    fitted: FittedModel
    step: EliminationStep | None


def removable_edges(form: ModelForm) -> list[tuple[str, str]]:
    """Feature-feature edges whose removal keeps the graph chordal.

    For a chordal graph those are exactly the edges lying in a single
    maximal clique. Tag-feature edges are never removable.
    """
    cliques = maximal_cliques(form)
    out = []
    for edge in sorted(form.edges):
        a, b = edge
        if form.tag in edge:
            continue
        containing = sum(1 for c in cliques if a in c and b in c)
        if containing == 1:
            out.append(edge)
    return out


def _next_step(current: FittedModel, codes: np.ndarray,
               config: TesterConfig) -> tuple[EliminationStep, FittedModel] | None:
    candidates = removable_edges(current.form)
    if not candidates:
        return None
    best_key = None
    best = None
    for index, edge in enumerate(candidates):
        reduced_form = remove_edge(current.form, edge)
        reduced = fit_ml_encoded(reduced_form, codes, current.levels)
        result = edge_test_fitted(
            current, reduced, mc_samples=config.mc_samples,
            seed=(config.seed, len(current.form.edges), index))
        p = result.p_exact if config.mc_samples > 0 else result.p_asymptotic
        key = (-p, result.statistic, edge)
        if best_key is None or key < best_key:
            best_key = key
            best = (EliminationStep(edge, p, result.statistic, reduced_form), reduced)
    return best


def next_model(current: FittedModel, data: Sequence[FeatureVector],
               config: TesterConfig = TesterConfig()
               ) -> tuple[EliminationStep, FittedModel] | None:
    """One elimination step, or None once the minimal form is reached.

    Every removable edge is re-tested against the current model; the edge
    with the largest p-value goes, ties broken by smaller statistic and then
    by edge name.
    """
    if len(data) != current.n:
        raise ValueError("data size does not match the fitted model")
    codes = encode_rows(data, current.levels, current.form.tag)
    return _next_step(current, codes, config)


def run_chain(train: Sequence[FeatureVector], levels: Levels,
              config: TesterConfig = TesterConfig(),
              tag_name: str | None = None) -> list[ChainEntry]:
    """The full elimination chain, saturated form first, minimal form last.

    Consecutive entries differ by exactly one feature-feature edge; with n
    features the chain holds C(n+1, 2) - n + 1 forms.
    """
    if not train:
        raise ValueError("empty training data")
    variables = tuple(levels)
    tag = variables[0] if tag_name is None else tag_name
    codes = encode_rows(train, levels, tag)
    form = saturated_form(variables, tag)
    fitted = fit_ml_encoded(form, codes, levels)
    entries = [ChainEntry(form=form, fitted=fitted, step=None)]
    while True:
        step = _next_step(entries[-1].fitted, codes, config)
        if step is None:
            return entries
        elimination, fitted = step
        entries.append(ChainEntry(form=elimination.resulting_form,
                                  fitted=fitted, step=elimination))
