"""SOM pseudo-labelling followed by naive Bayes, plus label-agreement metrics.

The map clusters the training rows; each row's best-matching unit becomes
its class (1-based: unit 0 is class 1).  A naive Bayes classifier is then
fitted on those classes and used to label the test rows.  The metrics
compare two label lists, typically the pipeline's output against Klassen
quadrants.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from somnb.bayes import DEFAULT_EPSILON, NbModel, fit_nb, predict_many
from somnb.dataset import apply_normalizer, as_matrix, fit_normalizer
from somnb.errors import EmptyInput, EmptySomCluster, LengthMismatch, TooManyLabels
from somnb.klassen import classify_all
from somnb.som import SomConfig, SomModel, assign_labels, train_som

REPORT_SCHEMA = "somnb.evaluation-report/1"
MAX_ALIGN_LABELS = 8


@dataclass(frozen=True)
class PipelineConfig:
    som: SomConfig = field(default_factory=SomConfig)
    nb_epsilon: float = DEFAULT_EPSILON
    normalize: bool = False
    swap_roles: bool = False

    def to_dict(self) -> dict:
        return {
            "som": self.som.resolved().to_dict(),
            "nb_epsilon": self.nb_epsilon,
            "normalize": self.normalize,
            "swap_roles": self.swap_roles,
        }


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """Everything one pipeline run produces.

    ``train_rows``/``test_rows`` are the sets actually used after any role
    swap.  Labels are 1-based classes.
    """

    som: SomModel
    nb: NbModel
    train_rows: list
    test_rows: list
    train_labels: list[int]
    test_predictions: list[int]
    test_posteriors: np.ndarray
    empty_units: list[int]
    unpredicted_labels: list[int]
    diagnostics: list[str]

    @property
    def classes(self) -> list[int]:
        return list(range(1, self.som.n_units + 1))


def run_pipeline(train_rows, test_rows, config: PipelineConfig = PipelineConfig()) -> PipelineResult:
    if config.swap_roles:
        train_rows, test_rows = test_rows, train_rows
    train_rows, test_rows = list(train_rows), list(test_rows)
    if not train_rows:
        raise EmptyInput("training set is empty")

    norm = fit_normalizer(train_rows, enabled=config.normalize)
    som = train_som(train_rows, config.som, norm)
    train_labels = [u + 1 for u in assign_labels(som, train_rows)]

    x_train = apply_normalizer(norm, train_rows)
    nb = fit_nb(x_train, train_labels, config.nb_epsilon)
    predictions, posteriors = predict_many(nb, apply_normalizer(norm, as_matrix(test_rows)) if test_rows else [])

    diagnostics = []
    counts = Counter(train_labels)
    empty = [c for c in range(1, som.n_units + 1) if counts[c] == 0]
    if empty:
        msg = f"EmptySomCluster: class(es) {empty} received no training rows"
        warnings.warn(msg, EmptySomCluster, stacklevel=2)
        diagnostics.append(msg)
    used = set(predictions)
    unpredicted = [c for c in nb.labels if c not in used]
    if test_rows and unpredicted:
        diagnostics.append(f"empty predicted label: class(es) {unpredicted} never predicted on the test set")

    return PipelineResult(
        som=som,
        nb=nb,
        train_rows=train_rows,
        test_rows=test_rows,
        train_labels=train_labels,
        test_predictions=predictions,
        test_posteriors=posteriors,
        empty_units=empty,
        unpredicted_labels=unpredicted if test_rows else [],
        diagnostics=diagnostics,
    )


# -- agreement metrics ------------------------------------------------------


def _pair(a: Sequence[int], b: Sequence[int]) -> tuple[list[int], list[int]]:
    a, b = [int(v) for v in a], [int(v) for v in b]
    if len(a) != len(b):
        raise LengthMismatch(f"label lists differ in length: {len(a)} vs {len(b)}")
    return a, b


def raw_agreement(a, b) -> tuple[Fraction, list[int]]:
    """Share of positions where ``a`` and ``b`` carry the same label, and those 0-based positions."""
    a, b = _pair(a, b)
    if not a:
        raise EmptyInput("agreement of empty label lists")
    idx = [i for i, (p, q) in enumerate(zip(a, b)) if p == q]
    return Fraction(len(idx), len(a)), idx


def _label_space(*lists: list[int]) -> int:
    labels = [v for lst in lists for v in lst]
    if any(v < 1 for v in labels):
        raise ValueError("labels must be positive integers")
    return max([4, *labels])


def aligned_agreement(a, b) -> tuple[Fraction, dict[int, int]]:
    """Best agreement after relabelling ``b`` through an injective map.

    The map sends each distinct label of ``b`` to a distinct label in
    ``1..K`` (``K`` = max of 4, the largest label, and either side's label
    count).  Among maximizers the one whose image tuple, taken over the
    sorted labels of ``b``, is lexicographically lowest is returned.
    """
    a, b = _pair(a, b)
    if not a:
        raise EmptyInput("agreement of empty label lists")
    la, lb = sorted(set(a)), sorted(set(b))
    if len(la) > MAX_ALIGN_LABELS or len(lb) > MAX_ALIGN_LABELS:
        raise TooManyLabels(f"at most {MAX_ALIGN_LABELS} distinct labels per side, got {len(la)} and {len(lb)}")
    k = max(_label_space(a, b), len(la), len(lb))
    joint = Counter(zip(b, a))
    a_set = set(la)
    # optimistic bound on what the still-unassigned b labels can add
    best_each = [max(joint[(q, p)] for p in la) for q in lb]
    bound = [sum(best_each[i:]) for i in range(len(lb) + 1)]

    best_score, best_images = -1, ()
    images: list[int] = []
    used: set[int] = set()

    def search(pos: int, score: int) -> None:
        nonlocal best_score, best_images
        if score + bound[pos] <= best_score:
            return
        if pos == len(lb):
            best_score, best_images = score, tuple(images)
            return
        q = lb[pos]
        # targets outside a's labels score nothing and are interchangeable; the lowest free one suffices
        filler_tried = False
        for target in range(1, k + 1):
            if target in used:
                continue
            if target not in a_set:
                if filler_tried:
                    continue
                filler_tried = True
            used.add(target)
            images.append(target)
            search(pos + 1, score + joint[(q, target)])
            images.pop()
            used.discard(target)

    search(0, 0)
    return Fraction(best_score, len(a)), dict(zip(lb, best_images))


def confusion_matrix(a, b, size: int | None = None) -> np.ndarray:
    """Counts ``C[i-1, j-1]`` of positions with ``a == i`` and ``b == j``; at least 4x4."""
    a, b = _pair(a, b)
    k = max(_label_space(a, b), size or 0)
    m = np.zeros((k, k), dtype=np.int64)
    for p, q in zip(a, b):
        m[p - 1, q - 1] += 1
    return m


def format_percent(f: Fraction) -> str:
    return f"{float(round(f * 100, 2)):.2f}"


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    """Agreement between a reference labelling (left) and another (right)."""

    left_name: str
    right_name: str
    n_rows: int
    confusion: np.ndarray
    raw_matches: int
    aligned_matches: int
    permutation: dict[int, int]
    left_counts: dict[int, int]
    right_counts: dict[int, int]
    matching_rows: list[int]
    notes: list[str] = field(default_factory=list)

    @property
    def raw(self) -> Fraction:
        return Fraction(self.raw_matches, self.n_rows)

    @property
    def aligned(self) -> Fraction:
        return Fraction(self.aligned_matches, self.n_rows)

    @property
    def empty_left(self) -> list[int]:
        return [c for c, n in self.left_counts.items() if n == 0]

    @property
    def empty_right(self) -> list[int]:
        return [c for c, n in self.right_counts.items() if n == 0]

    def _agreement(self, matches: int) -> dict:
        f = Fraction(matches, self.n_rows)
        return {"rational": f"{matches}/{self.n_rows}", "fraction": float(f), "percent": format_percent(f)}

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "left": self.left_name,
            "right": self.right_name,
            "rows": self.n_rows,
            "raw_agreement": self._agreement(self.raw_matches),
            "aligned_agreement": {
                **self._agreement(self.aligned_matches),
                "permutation": {str(k): v for k, v in self.permutation.items()},
            },
            "confusion_matrix": {
                "labels": list(range(1, self.confusion.shape[0] + 1)),
                "rows_are": self.left_name,
                "cells": self.confusion.tolist(),
            },
            "label_counts": {
                "left": {str(k): v for k, v in self.left_counts.items()},
                "right": {str(k): v for k, v in self.right_counts.items()},
            },
            "empty_labels": {"left": self.empty_left, "right": self.empty_right},
            "matching_rows": self.matching_rows,
            "notes": list(self.notes),
        }


def evaluate(a, b, left_name: str = "left", right_name: str = "right") -> EvaluationReport:
    """Full comparison of two equal-length label lists.

    ``matching_rows`` in the report are 1-based row numbers.
    """
    a, b = _pair(a, b)
    if not a:
        raise EmptyInput("nothing to compare")
    cm = confusion_matrix(a, b)
    raw, idx = raw_agreement(a, b)
    aligned, perm = aligned_agreement(a, b)
    labels = range(1, cm.shape[0] + 1)
    return EvaluationReport(
        left_name=left_name,
        right_name=right_name,
        n_rows=len(a),
        confusion=cm,
        raw_matches=len(idx),
        aligned_matches=int(aligned * len(a)),
        permutation=perm,
        left_counts={c: int(cm[c - 1].sum()) for c in labels},
        right_counts={c: int(cm[:, c - 1].sum()) for c in labels},
        matching_rows=[i + 1 for i in idx],
    )


def compare_with_klassen(rows, predictions, right_name: str = "predictions") -> EvaluationReport:
    """Evaluate ``predictions`` against Klassen quadrants recomputed from ``rows``."""
    quadrants = [int(q) for q in classify_all(rows)]
    return evaluate(quadrants, predictions, "klassen (recomputed)", right_name)
