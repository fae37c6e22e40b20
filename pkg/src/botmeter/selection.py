"""Per-dataset feature ranking and the cross-dataset universal feature set.

Significance is the absolute weight of the shared logistic-regression
trainer fitted on standardized features; the universal set keeps every
canonical feature name selected by at least ``threshold`` of the per-dataset
top-k lists.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .classifiers import ModelSpec, fit
from .dataset import NAME_ALIASES, FeatureTable, normalize_feature_name
from .errors import ValidationError


@dataclass(frozen=True)
class StandardizationParams:
    mean: np.ndarray
    std: np.ndarray              # sample std; 0 marks a constant column
    constant: tuple[bool, ...]


@dataclass(frozen=True)
class RankedFeatureList:
    dataset: str
    ranked: tuple[tuple[str, float], ...]  # (canonical name, |weight|), descending

    def names(self) -> list[str]:
        return [name for name, _ in self.ranked]


@dataclass(frozen=True)
class UniversalFeatureSet:
    features: tuple[str, ...]
    counts: tuple[tuple[str, int], ...]
    threshold: int


def standardize(table: FeatureTable) -> tuple[FeatureTable, StandardizationParams]:
    """Center and scale every column to sample std 1.

    Constant columns become all-zeros and are flagged so ranking can skip
    them.
    """
    if table.n_rows == 0 or not table.columns:
        raise ValidationError("cannot standardize an empty table")
    mean = table.rows.mean(axis=0)
    std = table.rows.std(axis=0, ddof=1) if table.n_rows > 1 \
        else np.zeros(len(table.columns))
    constant = std == 0.0
    safe = np.where(constant, 1.0, std)
    rows = (table.rows - mean) / safe
    rows[:, constant] = 0.0
    params = StandardizationParams(mean, std, tuple(bool(c) for c in constant))
    return FeatureTable(list(table.columns), rows, table.labels), params


def rank_features_lr(table: FeatureTable, k: int = 10,
                     spec: ModelSpec | None = None,
                     dataset: str = "") -> RankedFeatureList:
    """Top-k features of a standardized, labeled table by |LR weight|.

    Constant columns never rank; |w| ties break by name.  Uses the same LR
    trainer (and seed) as the classifiers, so rankings are deterministic.
    """
    if table.labels is None:
        raise ValidationError("ranking needs a labeled table")
    spec = spec or ModelSpec(kind="LR")
    if spec.kind != "LR":
        raise ValidationError("feature ranking uses the LR trainer")
    variable = [i for i, name in enumerate(table.columns)
                if table.rows[:, i].std(ddof=1) > 0.0] if table.n_rows > 1 else []
    if k < 1 or k > len(variable):
        raise ValidationError(
            f"k={k} must be within the {len(variable)} non-constant features")
    model = fit(spec, table.rows, table.labels)
    scored = sorted(
        ((table.columns[i], float(abs(model.weights[i]))) for i in variable),
        key=lambda pair: (-pair[1], pair[0]))
    return RankedFeatureList(dataset, tuple(scored[:k]))


def derive_universal_set(lists, aliases: dict[str, str] = NAME_ALIASES,
                         threshold: int = 2) -> UniversalFeatureSet:
    """Frequency-count canonical names across ranked lists; keep those
    selected by at least ``threshold`` lists, ordered (count desc, name asc)."""
    if threshold < 1:
        raise ValidationError("threshold must be >= 1")
    lists = list(lists)
    if not lists:
        raise ValidationError("need at least one ranked list")
    counts: Counter[str] = Counter()
    for ranked in lists:
        names = ranked.names() if isinstance(ranked, RankedFeatureList) else ranked
        canonical = {normalize_feature_name(name, aliases)[0] for name in names}
        counts.update(canonical)
    selected = sorted(((name, n) for name, n in counts.items() if n >= threshold),
                      key=lambda pair: (-pair[1], pair[0]))
    return UniversalFeatureSet(
        features=tuple(name for name, _ in selected),
        counts=tuple(selected),
        threshold=threshold,
    )
