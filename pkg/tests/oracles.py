"""Independent reference computations used by the tests.

None of these call into the package's numerical code paths.
"""

import itertools
import math

import numpy as np
from scipy import integrate


def naive_upgma(d):
    """Average linkage recomputing every inter-cluster mean from the leaf distances."""
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    clusters = {i: [i] for i in range(n)}
    merges = []
    next_id = n
    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(sorted(clusters), 2):
            cross = [d[i, j] for i in clusters[a] for j in clusters[b]]
            v = sum(cross) / len(cross)
            if best is None or v < best[0]:
                best = (v, a, b)
        v, a, b = best
        clusters[next_id] = clusters.pop(a) + clusters.pop(b)
        merges.append((a, b, v))
        next_id += 1
    return merges


def char_poly_eigenvalues(a):
    """Eigenvalues as roots of the characteristic polynomial (Faddeev-LeVerrier coefficients)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    coeffs = [1.0]
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(a @ m) / k)
    roots = np.roots(coeffs)
    return np.sort(roots.real)[::-1]


def t_two_sided_quad(t, df):
    """Two-sided Student-t tail by numerical integration of the density."""
    c = math.gamma((df + 1) / 2) / (math.sqrt(df * math.pi) * math.gamma(df / 2))
    pdf = lambda x: c * (1 + x * x / df) ** (-(df + 1) / 2)  # noqa: E731
    return 2 * integrate.quad(pdf, abs(t), math.inf, epsabs=1e-14, epsrel=1e-12)[0]


def inverse_3x3(m):
    """Adjugate / determinant inverse of a 3x3 matrix."""
    (a, b, c), (d, e, f), (g, h, i) = np.asarray(m, dtype=float)
    det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    adj = np.array([
        [e * i - f * h, c * h - b * i, b * f - c * e],
        [f * g - d * i, a * i - c * g, c * d - a * f],
        [d * h - e * g, b * g - a * h, a * e - b * d],
    ])
    return adj / det


def two_stage_mean(rows, groups):
    """Spreadsheet-style index: per-group mean of recoded cells, then mean over groups.

    ``rows``: list of dicts indicator -> recoded value; ``groups``: group -> indicator list.
    """
    out = []
    for row in rows:
        comps = []
        for members in groups.values():
            vals = [row[m] for m in members if row[m] is not None]
            comps.append(sum(vals) / len(vals) if vals else None)
        out.append(None if any(c is None for c in comps) else sum(comps) / len(comps))
    return out


def minmax_by_hand(values, higher_is_better=True):
    present = [v for v in values if v is not None]
    lo, hi = min(present), max(present)
    out = []
    for v in values:
        if v is None:
            out.append(None)
        elif higher_is_better:
            out.append(1 + 6 * (v - lo) / (hi - lo))
        else:
            out.append(1 + 6 * (hi - v) / (hi - lo))
    return out


def random_correlation_matrix(rng, p, n=None):
    n = n or p + 5 + int(rng.integers(0, 20))
    x = rng.standard_normal((n, p)) @ rng.standard_normal((p, p))
    return np.corrcoef(x, rowvar=False)


def haar_rotations_2d(rng, count):
    """``count`` Haar-distributed 2x2 orthogonal matrices (rotations and reflections)."""
    q, r = np.linalg.qr(rng.standard_normal((count, 2, 2)))
    signs = np.sign(np.einsum("kii->ki", r))
    return q * signs[:, None, :]


def varimax_value(b):
    b2 = b * b
    return np.sum(np.mean(b2 * b2, axis=-2) - np.mean(b2, axis=-2) ** 2, axis=-1)
