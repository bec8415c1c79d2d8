"""k-nearest-neighbour mutual-information estimation (KSG, max-norm).

:class:`KSGMutualInformation` follows the scikit-learn estimator protocol so
it can be cloned, grid-searched over ``k`` and used inside pipelines.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_consistent_length


@dataclass(frozen=True)
class MIEstimate:
    value: float        # nats
    std_error: float
    k: int
    n_samples: int

    def agrees_with(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.value - target) <= n_se * self.std_error


def _as_2d(a, name):
    a = check_array(a, ensure_2d=False, dtype=np.float64, input_name=name)
    if a.ndim == 1:
        a = a[:, None]
    return a


def _standardise(a, name):
    sd = a.std(axis=0)
    if np.any(sd <= 0):
        raise ValueError(f"degenerate data: a coordinate of {name} has zero variance")
    return (a - a.mean(axis=0)) / sd


def _jitter(a, scale, random_state):
    """Tie-breaking noise.  Seeded from the block contents so the same block
    receives the same jitter regardless of argument order."""
    if scale == 0:
        return a
    digest = hashlib.blake2b(np.ascontiguousarray(a).tobytes(), digest_size=8).digest()
    seed = np.random.SeedSequence([int(random_state), int.from_bytes(digest, "little")])
    rng = np.random.default_rng(seed)
    return a + scale * rng.standard_normal(a.shape)


def _count_within(points, radii):
    tree = cKDTree(points)
    # strictly inside the joint-space k-th neighbour distance; minus self
    r = np.nextafter(radii, 0)
    return tree.query_ball_point(points, r, p=np.inf, return_length=True, workers=-1) - 1


def ksg_value(x: np.ndarray, y: np.ndarray, k: int) -> float:
    """Raw KSG (algorithm 1) estimate for prepared 2-D arrays."""
    n = x.shape[0]
    joint = np.hstack([x, y])
    dist, _ = cKDTree(joint).query(joint, k + 1, p=np.inf, workers=-1)
    eps = dist[:, -1]
    nx = _count_within(x, eps)
    ny = _count_within(y, eps)
    return float(digamma(k) + digamma(n) - np.mean(digamma(nx + 1) + digamma(ny + 1)))


class KSGMutualInformation(BaseEstimator):
    """Kraskov-Stoegbauer-Grassberger estimator of I(X:Y) in nats.

    Parameters
    ----------
    k : int
        Neighbour count.
    n_folds : int
        Number of interleaved subsamples used for the standard error.
    jitter : float
        Relative scale of tie-breaking noise added after standardisation.
    random_state : int
        Seed for the jitter.

    After :meth:`fit`, ``mi_`` holds the full-sample estimate and
    ``std_error_`` the subsample standard error.
    """

    def __init__(self, k=4, n_folds=20, jitter=1e-10, random_state=0):
        self.k = k
        self.n_folds = n_folds
        self.jitter = jitter
        self.random_state = random_state

    def _prepare(self, X, y):
        X = _as_2d(X, "X")
        y = _as_2d(y, "y")
        check_consistent_length(X, y)
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if X.shape[0] < self.k + 1:
            raise ValueError(f"need at least k+1={self.k + 1} samples, got {X.shape[0]}")
        X = _jitter(_standardise(X, "X"), self.jitter, self.random_state)
        y = _jitter(_standardise(y, "y"), self.jitter, self.random_state)
        return X, y

    def fit(self, X, y):
        X, y = self._prepare(X, y)
        n = X.shape[0]
        self.mi_ = ksg_value(X, y, self.k)
        self.fold_values_ = self._fold_values(X, y)
        if self.fold_values_.size > 1:
            self.std_error_ = float(np.std(self.fold_values_, ddof=1) / math.sqrt(self.fold_values_.size))
        else:
            self.std_error_ = 0.0
        self.n_samples_ = n
        return self

    def _fold_values(self, X, y):
        n = X.shape[0]
        folds = min(self.n_folds, n // (self.k + 1))
        if folds < 2:
            return np.array([])
        return np.array([ksg_value(X[i::folds], y[i::folds], self.k) for i in range(folds)])

    def score(self, X=None, y=None):
        """The fitted estimate (``X``/``y`` are ignored; present for API parity)."""
        if not hasattr(self, "mi_"):
            raise NotFittedError("KSGMutualInformation is not fitted yet")
        return self.mi_

    @property
    def estimate_(self) -> MIEstimate:
        if not hasattr(self, "mi_"):
            raise NotFittedError("KSGMutualInformation is not fitted yet")
        return MIEstimate(self.mi_, self.std_error_, self.k, self.n_samples_)


def knn_mi(x, y, k: int = 4, *, n_folds: int = 20, jitter: float = 1e-10,
           random_state: int = 0) -> MIEstimate:
    """I(x:y) with a subsample standard error."""
    est = KSGMutualInformation(k=k, n_folds=n_folds, jitter=jitter, random_state=random_state)
    return est.fit(x, y).estimate_


def conditional_mi(x, y, z, k: int = 4, *, n_folds: int = 20, jitter: float = 1e-10,
                   random_state: int = 0) -> MIEstimate:
    """I(x:y | z) = I(x : (y, z)) - I(x : z).

    The standard error comes from the fold-wise differences, which keeps the
    positive correlation between the two terms.  The value may be slightly
    negative from noise and is reported unchanged.
    """
    y2, z2 = _as_2d(y, "y"), _as_2d(z, "z")
    check_consistent_length(y2, z2)
    yz = np.hstack([y2, z2])
    full = KSGMutualInformation(k, n_folds, jitter, random_state).fit(x, yz)
    part = KSGMutualInformation(k, n_folds, jitter, random_state).fit(x, z2)
    diffs = full.fold_values_ - part.fold_values_
    se = float(np.std(diffs, ddof=1) / math.sqrt(diffs.size)) if diffs.size > 1 else 0.0
    return MIEstimate(full.mi_ - part.mi_, se, k, full.n_samples_)


def combined_se(*estimates: MIEstimate) -> float:
    return math.sqrt(sum(e.std_error ** 2 for e in estimates))


def scaling_check(x, y, maps, k: int = 4, n_se: float = 3.0, **kwargs) -> bool:
    """True iff I(x:y) and I(phi_x(x) : phi_y(y)) agree within ``n_se`` combined
    standard errors.  ``maps`` is a pair of strictly monotone callables applied
    elementwise."""
    phi_x, phi_y = maps
    before = knn_mi(x, y, k, **kwargs)
    after = knn_mi(phi_x(np.asarray(x, dtype=float)), phi_y(np.asarray(y, dtype=float)), k, **kwargs)
    return abs(before.value - after.value) <= n_se * combined_se(before, after)
