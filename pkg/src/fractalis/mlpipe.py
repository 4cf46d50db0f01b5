"""Standardisation, an SMO-trained RBF SVM and the cross-validation protocols."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.model_selection import GroupKFold, StratifiedKFold
from sklearn.pipeline import Pipeline
from sklearn.preprocessing import StandardScaler
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .core import FractalisError

RATING_THRESHOLD = 5.0
PROTOCOLS = ("subject_dependent", "subject_independent")


class ConstantFeatureWarning(UserWarning):
    pass


class ConvergenceError(FractalisError):
    pass


def binarize_labels(ratings) -> np.ndarray:
    """High (True) iff the rating is strictly above 5."""
    r = np.asarray(ratings, dtype=float)
    if np.any((r < 1.0) | (r > 9.0)) or not np.all(np.isfinite(r)):
        raise FractalisError("ratings must lie in [1, 9]")
    return r > RATING_THRESHOLD


class Standardizer(StandardScaler):
    """``StandardScaler`` that warns when a column is constant.

    Constant columns get zero mean and unit scale, so they pass through unchanged.
    """

    def fit(self, X, y=None, sample_weight=None):
        X = check_array(X)
        if X.shape[0] < 2:
            raise FractalisError("need at least 2 rows to fit a scaler")
        super().fit(X, y, sample_weight)
        const = np.ptp(X, axis=0) == 0.0
        if const.any():
            self.scale_[const] = 1.0
            self.mean_[const] = 0.0
            warnings.warn(f"{const.sum()} constant feature column(s) left unscaled",
                          ConstantFeatureWarning, stacklevel=2)
        return self


@dataclass(frozen=True)
class ScalerState:
    mean: np.ndarray
    std: np.ndarray


def fit_scaler(rows) -> ScalerState:
    s = Standardizer().fit(rows)
    return ScalerState(s.mean_.copy(), s.scale_.copy())


def apply_scaler(state: ScalerState, rows) -> np.ndarray:
    return (np.atleast_2d(np.asarray(rows, dtype=float)) - state.mean) / state.std


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


class SMOClassifier(ClassifierMixin, BaseEstimator):
    """Binary RBF-kernel SVM trained by sequential minimal optimisation.

    Working pairs are chosen as the maximal violating pair; training stops
    once the KKT gap ``m(a) - M(a)`` drops below ``tol``.

    Parameters
    ----------
    C : float, default=1.0
        Box constraint on the dual coefficients.
    gamma : float or "scale", default="scale"
        RBF width; ``"scale"`` uses ``1 / (n_features * X.var())``.
    tol : float, default=1e-3
        KKT tolerance.
    max_iter : int, default=100000
        Iteration cap; exceeding it raises :class:`ConvergenceError`.
    """

    def __init__(self, C=1.0, gamma="scale", tol=1e-3, max_iter=100_000):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def _resolve_gamma(self, X):
        if self.gamma == "scale":
            var = X.var()
            return 1.0 / (X.shape[1] * var) if var > 0 else 1.0
        g = float(self.gamma)
        if g <= 0:
            raise FractalisError("gamma must be positive")
        return g

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = unique_labels(y)
        if self.classes_.size != 2:
            raise FractalisError(f"need exactly 2 classes, got {self.classes_.size}")
        ys = np.where(y == self.classes_[1], 1.0, -1.0)
        C = float(self.C)
        self.gamma_ = self._resolve_gamma(X)
        K = rbf_kernel(X, X, self.gamma_)
        Q = ys[:, None] * ys[None, :] * K
        n = X.shape[0]
        alpha = np.zeros(n)
        G = -np.ones(n)
        history = [0.0]
        it = 0
        while True:
            up = ((ys > 0) & (alpha < C)) | ((ys < 0) & (alpha > 0))
            low = ((ys < 0) & (alpha < C)) | ((ys > 0) & (alpha > 0))
            score = -ys * G
            i = int(np.argmax(np.where(up, score, -np.inf)))
            j = int(np.argmin(np.where(low, score, np.inf)))
            gap = score[i] - score[j]
            if gap < self.tol:
                break
            if it >= self.max_iter:
                raise ConvergenceError(f"SMO did not converge in {self.max_iter} iterations")
            it += 1
            ai, aj = alpha[i], alpha[j]
            quad = max(Q[i, i] + Q[j, j] - 2.0 * ys[i] * ys[j] * Q[i, j], 1e-12)
            if ys[i] != ys[j]:
                delta = (-G[i] - G[j]) / quad
                diff = ai - aj
                ai += delta
                aj += delta
                if diff > 0 and aj < 0:
                    aj, ai = 0.0, diff
                elif diff <= 0 and ai < 0:
                    ai, aj = 0.0, -diff
                if diff > 0 and ai > C:
                    ai, aj = C, C - diff
                elif diff <= 0 and aj > C:
                    aj, ai = C, C + diff
            else:
                delta = (G[i] - G[j]) / quad
                total = ai + aj
                ai -= delta
                aj += delta
                if total > C and ai > C:
                    ai, aj = C, total - C
                elif total <= C and aj < 0:
                    aj, ai = 0.0, total
                if total > C and aj > C:
                    aj, ai = C, total - C
                elif total <= C and ai < 0:
                    ai, aj = 0.0, total
            G += Q[:, i] * (ai - alpha[i]) + Q[:, j] * (aj - alpha[j])
            alpha[i], alpha[j] = ai, aj
            history.append(-0.5 * float(alpha @ (G - 1.0)))
        self.n_iter_ = it
        self.kkt_gap_ = float(gap)
        self.dual_objective_ = np.asarray(history)
        free = (alpha > 0) & (alpha < C)
        yG = ys * G
        if free.any():
            rho = float(yG[free].mean())
        else:
            at_upper = alpha >= C
            ub_set = (at_upper & (ys < 0)) | (~at_upper & (ys > 0))
            ub = yG[ub_set].min() if ub_set.any() else np.inf
            lb = yG[~ub_set].max() if (~ub_set).any() else -np.inf
            rho = 0.5 * (ub + lb) if np.isfinite(ub + lb) else float(np.clip(0.0, lb, ub))
        sv = alpha > 0
        self.support_ = np.flatnonzero(sv)
        self.support_vectors_ = X[sv]
        self.dual_coef_ = (alpha * ys)[sv]
        self.alpha_ = alpha
        self.intercept_ = -rho
        return self

    def decision_function(self, X):
        check_is_fitted(self, "support_vectors_")
        X = check_array(X)
        if self.support_vectors_.shape[0] == 0:
            return np.full(X.shape[0], self.intercept_)
        return rbf_kernel(X, self.support_vectors_, self.gamma_) @ self.dual_coef_ + self.intercept_

    def predict(self, X):
        return self.classes_[(self.decision_function(X) > 0).astype(int)]


def make_classifier(C=1.0, gamma="scale") -> Pipeline:
    """Standard scaler followed by the SMO SVM."""
    return Pipeline([("scaler", Standardizer()), ("svm", SMOClassifier(C=C, gamma=gamma))])


def train_svm(rows, labels, C=1.0, gamma="scale") -> SMOClassifier:
    return SMOClassifier(C=C, gamma=gamma).fit(rows, labels)


@dataclass
class CvReport:
    protocol: str
    label: str
    fold_accuracies: list[float]
    mean_accuracy: float
    subject_scores: dict = field(default_factory=dict)


def _normalize_protocol(protocol: str) -> str:
    p = {"dependent": "subject_dependent", "independent": "subject_independent"}.get(protocol, protocol)
    if p not in PROTOCOLS:
        raise FractalisError(f"unknown protocol {protocol!r}")
    return p


def _fold_accuracy(model, X, y, train, test) -> float:
    m = clone(model).fit(X[train], y[train])
    return float(np.mean(m.predict(X[test]) == y[test]))


def cross_validate(X, ratings, subjects, protocol="subject_dependent", label="arousal",
                   n_folds=5, C=1.0, gamma="scale", seed=0, binarize=True) -> CvReport:
    """Cross-validated accuracy of :func:`make_classifier`.

    ``subject_dependent`` runs a stratified ``n_folds`` split inside every
    subject and averages the per-subject scores. ``subject_independent``
    groups folds by subject, so no test subject contributes training rows.
    The scaler is refit on each training fold.
    """
    X = check_array(X)
    y = binarize_labels(ratings) if binarize else np.asarray(ratings)
    subjects = np.asarray(subjects)
    if y.shape[0] != X.shape[0] or subjects.shape[0] != X.shape[0]:
        raise FractalisError("X, ratings and subjects differ in length")
    protocol = _normalize_protocol(protocol)
    model = make_classifier(C, gamma)

    if protocol == "subject_dependent":
        per_fold = np.zeros(n_folds)
        scores = {}
        for subj in sorted(set(subjects.tolist()), key=str):
            rows = np.flatnonzero(subjects == subj)
            ys = y[rows]
            _, counts = np.unique(ys, return_counts=True)
            if counts.size < 2 or counts.min() < n_folds:
                raise FractalisError(
                    f"insufficient strata for subject {subj}: class counts {counts.tolist()}")
            skf = StratifiedKFold(n_splits=n_folds, shuffle=True, random_state=seed)
            accs = [_fold_accuracy(model, X[rows], ys, tr, te) for tr, te in skf.split(rows, ys)]
            per_fold += accs
            scores[subj] = float(np.mean(accs))
        per_fold /= len(scores)
        return CvReport(protocol, label, per_fold.tolist(), float(np.mean(list(scores.values()))),
                        scores)

    uniq = np.unique(subjects)
    if uniq.size < 2:
        raise FractalisError("subject-independent protocol needs at least 2 subjects")
    if uniq.size < n_folds:
        raise FractalisError(f"{uniq.size} subjects cannot fill {n_folds} group folds")
    accs = [_fold_accuracy(model, X, y, tr, te)
            for tr, te in GroupKFold(n_splits=n_folds).split(X, y, subjects)]
    return CvReport(protocol, label, accs, float(np.mean(accs)))
