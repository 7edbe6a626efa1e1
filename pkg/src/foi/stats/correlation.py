"""Pearson correlation, significance, screening and correlation matrices."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import InvalidN, TooFewPairs, ValidationError, ZeroVariance
from .special import betainc


class MissingPolicy(str, enum.Enum):
    PAIRWISE = "pairwise"
    LISTWISE = "listwise"


def _complete_pairs(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError(f"vectors must be 1-D and of equal length, got {x.shape} and {y.shape}")
    keep = ~(np.isnan(x) | np.isnan(y))
    return x[keep], y[keep]


def pearson_r(x, y) -> float:
    """Sample Pearson correlation after pairwise deletion of missing entries."""
    x, y = _complete_pairs(x, y)
    if x.size < 3:
        raise TooFewPairs(f"{x.size} complete pairs; need >= 3")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("correlation undefined for a constant vector")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def corr_p_value(r: float, n: int) -> float:
    """Two-tailed p-value of the t-test for a Pearson correlation.

    With ``t = r * sqrt((n-2)/(1-r^2))`` and ``df = n-2`` the two-sided tail
    equals ``I_{df/(df+t^2)}(df/2, 1/2)``, and ``df/(df+t^2)`` reduces to ``1-r^2``.
    """
    if n < 3 or int(n) != n:
        raise InvalidN(f"n must be an integer >= 3, got {n}")
    if abs(r) > 1.0 + 1e-12:
        raise ValidationError(f"|r| must not exceed 1, got {r}")
    r2 = min(1.0, r * r)
    if r2 == 1.0:
        return 0.0
    return betainc((n - 2) / 2.0, 0.5, 1.0 - r2)


@dataclass(frozen=True)
class ScreenResult:
    variable: str
    r: float | None
    p_value: float | None
    n: int
    selected: bool
    alpha: float
    reason: str | None = None

    def to_dict(self) -> dict:
        return dict(vars(self))

    @classmethod
    def from_dict(cls, d) -> "ScreenResult":
        return cls(**d)


def screen_variables(
    data, target, labels: Sequence[str] | None = None, alpha: float = 0.05
) -> list[ScreenResult]:
    """Correlate every column of ``data`` (n x p) with ``target``.

    A variable is selected when its two-tailed p-value is at most ``alpha``.
    Columns for which the correlation is undefined are reported unselected
    with the error class name in ``reason``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    target = np.asarray(target, dtype=float)
    if labels is None:
        labels = [f"v{j}" for j in range(data.shape[1])]
    results = []
    for j, label in enumerate(labels):
        x, y = _complete_pairs(data[:, j], target)
        try:
            r = pearson_r(x, y)
        except (TooFewPairs, ZeroVariance) as exc:
            results.append(ScreenResult(label, None, None, int(x.size), False, alpha, type(exc).__name__))
            continue
        p = corr_p_value(r, x.size)
        results.append(ScreenResult(label, r, p, int(x.size), p <= alpha, alpha))
    return results


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple[str, ...]
    r: np.ndarray = field(repr=False)
    n_used: np.ndarray = field(repr=False)
    policy: MissingPolicy = MissingPolicy.LISTWISE

    @property
    def p(self) -> int:
        return len(self.labels)


def correlation_matrix(
    data, labels: Sequence[str] | None = None, policy: MissingPolicy | str = MissingPolicy.LISTWISE
) -> CorrelationMatrix:
    data = np.asarray(data, dtype=float)
    n, p = data.shape
    labels = tuple(labels) if labels is not None else tuple(f"v{j}" for j in range(p))
    policy = MissingPolicy(policy)
    if policy is MissingPolicy.LISTWISE:
        complete = ~np.isnan(data).any(axis=1)
        if complete.sum() < 3:
            raise TooFewPairs(f"only {int(complete.sum())} complete rows; need >= 3")
        data = data[complete]

    r = np.eye(p)
    n_used = np.zeros((p, p), dtype=int)
    for i in range(p):
        n_used[i, i] = int((~np.isnan(data[:, i])).sum())
        for j in range(i + 1, p):
            x, y = _complete_pairs(data[:, i], data[:, j])
            if x.size < 3:
                raise TooFewPairs(f"pair ({labels[i]!r}, {labels[j]!r}) has {x.size} complete rows")
            try:
                r[i, j] = r[j, i] = pearson_r(x, y)
            except ZeroVariance:
                raise ZeroVariance(f"pair ({labels[i]!r}, {labels[j]!r}) includes a constant variable") from None
            n_used[i, j] = n_used[j, i] = x.size
    return CorrelationMatrix(labels, r, n_used, policy)
