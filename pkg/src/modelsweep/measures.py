"""Classifier performance measures over an explicit evaluation contract.

Each measure states where the form comes from, where the parameters come
from, and what test set is scored:

* overall -- train-fitted model, accuracy on the whole test set
  (unassignable contexts count as wrong);
* lower bound -- share of the most frequent test tag;
* recall -- fraction of the test set assigned any tag at all;
* precision (bookkeeping sense) -- 1 - (recall - overall); the plain ratio
  correct/assigned is reported alongside because the two differ whenever
  recall < 1;
* measure of form -- the same form refitted on the test set itself, which
  removes estimation error and always has recall 1;
* measure of the feature set -- the measure of form of the saturated form,
  i.e. per-context majority accuracy, the ceiling for every classifier on
  this feature set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import FeatureVector
from .graphmodel import FittedModel, ModelForm, fit_ml, saturated_form
from .tables import Levels, encode_feature_rows, encode_tags


class MeasureInvariantError(AssertionError):
    """A measure suite violated one of its defining identities."""


_TOL = 1e-12


@dataclass(frozen=True)
class Evaluation:
    overall: float
    recall: float
    precision_paper: float
    precision_ratio: float | None
    misclassification: float


@dataclass(frozen=True)
class MeasureSuite:
    overall: float
    lower_bound: float
    recall: float
    precision_paper: float
    precision_ratio: float | None
    misclassification: float
    form_measure: float
    featureset_measure: float

    def validate(self) -> None:
        values = {
            "overall": self.overall,
            "lower_bound": self.lower_bound,
            "recall": self.recall,
            "precision_paper": self.precision_paper,
            "misclassification": self.misclassification,
            "form_measure": self.form_measure,
            "featureset_measure": self.featureset_measure,
        }
        if self.precision_ratio is not None:
            values["precision_ratio"] = self.precision_ratio
        for name, value in values.items():
            if not 0.0 - _TOL <= value <= 1.0 + _TOL:
                raise MeasureInvariantError(f"{name}={value} outside [0, 1]")
        if abs(self.misclassification - (self.recall - self.overall)) > _TOL:
            raise MeasureInvariantError(
                "misclassification must equal recall - overall")
        if abs(self.precision_paper - (1.0 - self.misclassification)) > _TOL:
            raise MeasureInvariantError(
                "precision must equal 1 - misclassification")
        if self.overall > self.recall + _TOL:
            raise MeasureInvariantError("overall cannot exceed recall")
        if self.overall > self.featureset_measure + _TOL:
            raise MeasureInvariantError(
                "overall cannot exceed the feature-set measure")
        if self.form_measure > self.featureset_measure + _TOL:
            raise MeasureInvariantError(
                "form measure cannot exceed the feature-set measure")


def lower_bound(test: Sequence[FeatureVector]) -> float:
    """Share of the most frequent (correct) tag in the test set."""
    if not test:
        raise ValueError("empty test set")
    counts: dict[str, int] = {}
    for row in test:
        if row.tag is None:
            raise ValueError("test rows must carry tags")
        counts[row.tag] = counts.get(row.tag, 0) + 1
    return max(counts.values()) / len(test)


def evaluate(model: FittedModel, test: Sequence[FeatureVector]) -> Evaluation:
    """Score a fitted model on a tagged test set."""
    if not test:
        raise ValueError("empty test set")
    feature_codes = encode_feature_rows(test, model.levels, model.form.tag)
    true = encode_tags(test, model.levels, model.form.tag)
    predicted = model.classify_codes(feature_codes)
    n = len(test)
    assigned = int(np.sum(predicted >= 0))
    correct = int(np.sum((predicted >= 0) & (predicted == true)))
    overall = correct / n
    recall = assigned / n
    misclassification = recall - overall
    return Evaluation(
        overall=overall,
        recall=recall,
        precision_paper=1.0 - misclassification,
        precision_ratio=correct / assigned if assigned else None,
        misclassification=misclassification,
    )


def measure_of_form(form: ModelForm, test: Sequence[FeatureVector],
                    levels: Levels) -> float:
    """Accuracy of the form fitted on the test set itself.

    With parameters estimated from the data being tagged, estimation error
    vanishes and every context is assignable, so what remains measures the
    adequacy of the parametric form alone.
    """
    if not test:
        raise ValueError("empty test set")
    model = fit_ml(form, test, levels)
    result = evaluate(model, test)
    if result.recall != 1.0:
        raise AssertionError("a test-fitted model must assign every context")
    return result.overall


def measure_of_feature_set(test: Sequence[FeatureVector], levels: Levels,
                           tag_name: str | None = None) -> float:
    """Measure of form of the saturated form: the feature-set ceiling."""
    variables = tuple(levels)
    tag = variables[0] if tag_name is None else tag_name
    return measure_of_form(saturated_form(variables, tag), test, levels)


def suite(form: ModelForm, model: FittedModel, test: Sequence[FeatureVector],
          levels: Levels) -> MeasureSuite:
    """All measures for one complexity level, validated before returning."""
    if model.form != form:
        raise ValueError("model was not fitted with the given form")
    result = evaluate(model, test)
    measures = MeasureSuite(
        overall=result.overall,
        lower_bound=lower_bound(test),
        recall=result.recall,
        precision_paper=result.precision_paper,
        precision_ratio=result.precision_ratio,
        misclassification=result.misclassification,
        form_measure=measure_of_form(form, test, levels),
        featureset_measure=measure_of_feature_set(test, levels, form.tag),
    )
    measures.validate()
    return measures
