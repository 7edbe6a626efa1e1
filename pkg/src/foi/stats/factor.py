"""Principal-component factor extraction, varimax rotation, KMO and factor scores."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from ..errors import KmoUndefined, NoConvergence, NotPositiveSemidefinite, SingularMatrix, ValidationError
from .correlation import CorrelationMatrix, MissingPolicy, correlation_matrix
from .eigen import eig_sym, sym_inverse

PSD_TOL = 1e-8
VARIMAX_TOL = 1e-7
VARIMAX_MAX_SWEEPS = 100
ORTHOGONALITY_TOL = 1e-10


def _as_matrix(r) -> np.ndarray:
    return np.asarray(r.r if isinstance(r, CorrelationMatrix) else r, dtype=float)


def canonicalize_signs(loadings: np.ndarray) -> np.ndarray:
    """Flip columns so that each column's largest-magnitude entry is positive.

    Returns the +/-1 sign vector that was applied.
    """
    signs = np.ones(loadings.shape[1])
    for j in range(loadings.shape[1]):
        k = int(np.argmax(np.abs(loadings[:, j])))
        if loadings[k, j] < 0:
            signs[j] = -1.0
    return signs


def principal_axes(r) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending, tiny negatives clipped to 0) and eigenvectors of ``r``."""
    w, v = eig_sym(_as_matrix(r))
    if w.size and w[-1] < -PSD_TOL:
        raise NotPositiveSemidefinite(f"smallest eigenvalue {w[-1]:.3g} is below -{PSD_TOL}")
    return np.clip(w, 0.0, None), v


def _loadings(w: np.ndarray, v: np.ndarray, m: int) -> np.ndarray:
    loadings = v[:, :m] * np.sqrt(w[:m])
    return loadings * canonicalize_signs(loadings)


def extract_principal_factors(r, m: int) -> np.ndarray:
    """Unrotated principal-component loadings: column j is sqrt(lambda_j) * v_j."""
    p = _as_matrix(r).shape[0]
    if not 1 <= m <= p:
        raise ValidationError(f"factor count must be in [1, {p}], got {m}")
    w, v = principal_axes(r)
    return _loadings(w, v, m)


def kaiser_count(eigenvalues) -> int:
    """Number of eigenvalues greater than one."""
    return int(np.sum(np.asarray(eigenvalues) > 1.0))


def explained_variance(eigenvalues, p: int) -> float:
    """Share of total variance carried by the retained eigenvalues of a p-variable correlation matrix."""
    if p < 1:
        raise ValidationError("p must be >= 1")
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if np.any(eigenvalues < 0):
        raise ValidationError("eigenvalues must be nonnegative")
    return float(np.sum(eigenvalues)) / p


def communalities(loadings) -> np.ndarray:
    loadings = np.asarray(loadings, dtype=float)
    return np.sum(loadings * loadings, axis=1)


def _row_norms(loadings: np.ndarray) -> np.ndarray:
    h = np.sqrt(communalities(loadings))
    # zero rows stay out of the normalization and come back unchanged
    h[h == 0.0] = 1.0
    return h


def varimax_criterion(loadings, kaiser_normalize: bool = True) -> float:
    """Sum over factors of the variance of squared loadings."""
    b = np.asarray(loadings, dtype=float)
    if kaiser_normalize:
        b = b / _row_norms(b)[:, None]
    b2 = b * b
    return float(np.sum(np.mean(b2 * b2, axis=0) - np.mean(b2, axis=0) ** 2))


class Rotation(NamedTuple):
    loadings: np.ndarray
    matrix: np.ndarray
    sweeps: int


def varimax_rotate(
    loadings,
    kaiser_normalize: bool = True,
    tol: float = VARIMAX_TOL,
    max_sweeps: int = VARIMAX_MAX_SWEEPS,
) -> Rotation:
    """Varimax rotation by successive planar rotations of factor pairs.

    Each pair (i, j) is turned by the angle that maximizes the criterion in
    that plane.  Sweeps continue until the relative criterion change drops
    below ``tol``.  Returns the rotated loadings, the orthogonal rotation
    matrix ``T`` (rotated = loadings @ T) and the number of sweeps.
    """
    a = np.array(loadings, dtype=float)
    p, m = a.shape
    if m < 2:
        raise ValidationError("varimax needs at least two factors")
    h = _row_norms(a) if kaiser_normalize else np.ones(p)
    b = a / h[:, None]
    t = np.eye(m)

    def criterion(x):
        x2 = x * x
        return float(np.sum(np.mean(x2 * x2, axis=0) - np.mean(x2, axis=0) ** 2))

    current = criterion(b)
    sweeps = 0
    while True:
        if sweeps == max_sweeps:
            raise NoConvergence(f"varimax did not converge in {max_sweeps} sweeps")
        sweeps += 1
        for i in range(m - 1):
            for j in range(i + 1, m):
                x, y = b[:, i], b[:, j]
                u = x * x - y * y
                v = 2.0 * x * y
                su, sv = u.sum(), v.sum()
                num = 2.0 * (u @ v) - 2.0 * su * sv / p
                den = (u @ u) - (v @ v) - (su * su - sv * sv) / p
                phi = math.atan2(num, den) / 4.0
                c, s = math.cos(phi), math.sin(phi)
                plane = np.array([[c, -s], [s, c]])
                b[:, [i, j]] = b[:, [i, j]] @ plane
                t[:, [i, j]] = t[:, [i, j]] @ plane
        previous, current = current, criterion(b)
        if abs(current - previous) <= tol * max(abs(current), 1e-300):
            break

    signs = canonicalize_signs(b * h[:, None])
    t = t * signs
    if np.max(np.abs(t.T @ t - np.eye(m))) > ORTHOGONALITY_TOL:
        raise NoConvergence("accumulated rotation lost orthogonality")
    return Rotation(a @ t, t, sweeps)


def kmo_statistic(r) -> float:
    """Kaiser-Meyer-Olkin measure of sampling adequacy of a correlation matrix."""
    r = _as_matrix(r)
    if r.shape[0] < 2:
        raise ValidationError("KMO needs at least two variables")
    s = sym_inverse(r)
    d = np.sqrt(np.diag(s))
    anti = -s / np.outer(d, d)
    off = ~np.eye(r.shape[0], dtype=bool)
    r2 = float(np.sum(r[off] ** 2))
    a2 = float(np.sum(anti[off] ** 2))
    if r2 + a2 == 0.0 or r2 == 0.0:
        raise KmoUndefined("KMO is undefined when all off-diagonal correlations are zero")
    return r2 / (r2 + a2)


class FactorScores(NamedTuple):
    scores: np.ndarray
    weights: np.ndarray


def regression_factor_scores(loadings, r, data) -> FactorScores:
    """Regression-method factor scores ``Z @ R^-1 @ loadings``.

    ``Z`` standardizes each variable (mean 0, sample sd 1) over the rows that
    are complete; rows with any missing variable get an all-NaN score row.
    """
    loadings = np.asarray(loadings, dtype=float)
    data = np.asarray(data, dtype=float)
    rm = _as_matrix(r)
    if data.ndim != 2 or data.shape[1] != loadings.shape[0] or rm.shape[0] != loadings.shape[0]:
        raise ValidationError("loadings, correlation matrix and data disagree on the variable count")
    complete = ~np.isnan(data).any(axis=1)
    if complete.sum() < 2:
        raise ValidationError("need at least two complete rows to standardize")
    weights = sym_inverse(rm) @ loadings
    rows = data[complete]
    sd = rows.std(axis=0, ddof=1)
    if np.any(sd == 0):
        raise ValidationError("constant variable among complete rows")
    z = (rows - rows.mean(axis=0)) / sd
    scores = np.full((data.shape[0], loadings.shape[1]), np.nan)
    scores[complete] = z @ weights
    return FactorScores(scores, weights)


@dataclass
class FactorModel:
    variables: tuple[str, ...]
    countries: tuple[str, ...]
    loadings_unrotated: np.ndarray = field(repr=False)
    loadings_rotated: np.ndarray | None = field(repr=False)
    eigenvalues: np.ndarray
    all_eigenvalues: np.ndarray = field(repr=False)
    explained_variance_fraction: float
    kmo: float | None
    scores: np.ndarray = field(repr=False)
    score_weights: np.ndarray = field(repr=False)
    rotation_sweeps: int | None = None
    n_complete: int = 0

    @property
    def m(self) -> int:
        return self.loadings_unrotated.shape[1]

    @property
    def loadings(self) -> np.ndarray:
        return self.loadings_unrotated if self.loadings_rotated is None else self.loadings_rotated

    def flip_factor(self, j: int) -> None:
        """Reverse the orientation of factor ``j`` (loadings, weights and scores)."""
        for arr in (self.loadings_unrotated, self.loadings_rotated, self.score_weights, self.scores):
            if arr is not None:
                arr[:, j] *= -1.0

    def to_dict(self) -> dict:
        def arr(a):
            if a is None:
                return None
            return [[None if math.isnan(v) else float(v) for v in row] for row in np.atleast_2d(a)]

        return {
            "variables": list(self.variables),
            "countries": list(self.countries),
            "loadings_unrotated": arr(self.loadings_unrotated),
            "loadings_rotated": arr(self.loadings_rotated),
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "all_eigenvalues": [float(v) for v in self.all_eigenvalues],
            "explained_variance_fraction": self.explained_variance_fraction,
            "kmo": self.kmo,
            "scores": arr(self.scores),
            "score_weights": arr(self.score_weights),
            "rotation_sweeps": self.rotation_sweeps,
            "n_complete": self.n_complete,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FactorModel":
        def arr(a):
            if a is None:
                return None
            return np.array([[np.nan if v is None else v for v in row] for row in a], dtype=float)

        return cls(
            variables=tuple(d["variables"]),
            countries=tuple(d["countries"]),
            loadings_unrotated=arr(d["loadings_unrotated"]),
            loadings_rotated=arr(d["loadings_rotated"]),
            eigenvalues=np.array(d["eigenvalues"], dtype=float),
            all_eigenvalues=np.array(d["all_eigenvalues"], dtype=float),
            explained_variance_fraction=d["explained_variance_fraction"],
            kmo=d["kmo"],
            scores=arr(d["scores"]).reshape(len(d["countries"]), -1),
            score_weights=arr(d["score_weights"]),
            rotation_sweeps=d["rotation_sweeps"],
            n_complete=d["n_complete"],
        )


def fit_factor_model(
    data,
    variables: Sequence[str],
    countries: Sequence[str],
    m: int | None = None,
    rotate: bool = True,
    kaiser_normalize: bool = True,
) -> FactorModel:
    """Principal-component factor analysis on the listwise-complete correlation matrix.

    ``m=None`` retains the factors with eigenvalue above one (at least one).
    Varimax is applied when ``rotate`` and at least two factors are kept.
    """
    data = np.asarray(data, dtype=float)
    corr = correlation_matrix(data, variables, MissingPolicy.LISTWISE)
    w, v = principal_axes(corr)
    if m is None:
        m = max(1, kaiser_count(w))
    if not 1 <= m <= len(variables):
        raise ValidationError(f"factor count must be in [1, {len(variables)}], got {m}")
    unrotated = _loadings(w, v, m)
    rotated, sweeps = None, None
    if rotate and m >= 2:
        rotated, _, sweeps = varimax_rotate(unrotated, kaiser_normalize)
    try:
        kmo = kmo_statistic(corr)
    except (SingularMatrix, KmoUndefined):
        kmo = None
    scores, weights = regression_factor_scores(rotated if rotated is not None else unrotated, corr, data)
    return FactorModel(
        variables=tuple(variables),
        countries=tuple(countries),
        loadings_unrotated=unrotated,
        loadings_rotated=rotated,
        eigenvalues=w[:m].copy(),
        all_eigenvalues=w,
        explained_variance_fraction=explained_variance(w[:m], len(variables)),
        kmo=kmo,
        scores=scores,
        score_weights=weights,
        rotation_sweeps=sweeps,
        n_complete=int((~np.isnan(data).any(axis=1)).sum()),
    )
