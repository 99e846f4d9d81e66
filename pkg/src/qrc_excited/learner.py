"""Linear read-out: target scaling, least squares, augmented ridge, metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class ScalingParams:
    """Per-target min/max of the training set; maps ``[y_min, y_max]`` onto ``[-1, 1]``."""

    y_min: np.ndarray
    y_max: np.ndarray

    def apply(self, y: np.ndarray) -> np.ndarray:
        return 2.0 * (np.asarray(y, dtype=float) - self.y_min) / (self.y_max - self.y_min) - 1.0

    def invert(self, s: np.ndarray) -> np.ndarray:
        return (np.asarray(s, dtype=float) + 1.0) * (self.y_max - self.y_min) / 2.0 + self.y_min

    def to_dict(self) -> dict[str, list[float]]:
        return {"y_min": self.y_min.tolist(), "y_max": self.y_max.tolist()}


def fit_scaling(train_targets: np.ndarray) -> ScalingParams:
    y = np.atleast_2d(np.asarray(train_targets, dtype=float))
    if y.shape[0] == 1 and np.ndim(train_targets) == 1:
        y = y.T
    if y.size == 0:
        raise ValueError("no training targets")
    lo, hi = y.min(axis=0), y.max(axis=0)
    if np.any(hi <= lo):
        raise ValueError(f"degenerate target(s) at columns {np.flatnonzero(hi <= lo).tolist()}")
    return ScalingParams(lo, hi)


def apply_scaling(y: np.ndarray, params: ScalingParams) -> np.ndarray:
    return params.apply(y)


def invert_scaling(s: np.ndarray, params: ScalingParams) -> np.ndarray:
    return params.invert(s)


@dataclass(frozen=True)
class Standardizer:
    """Mean/std standardization fitted on training rows."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, data: np.ndarray) -> Standardizer:
        data = np.asarray(data, dtype=float)
        std = data.std(axis=0)
        if np.any(std == 0):
            raise ValueError("cannot standardize a constant column")
        return cls(data.mean(axis=0), std)

    def apply(self, data: np.ndarray) -> np.ndarray:
        return (np.asarray(data, dtype=float) - self.mean) / self.std

    def invert(self, data: np.ndarray) -> np.ndarray:
        return np.asarray(data, dtype=float) * self.std + self.mean


@dataclass(frozen=True)
class LinearFit:
    """Weights plus solver diagnostics."""

    weights: np.ndarray
    rank: int
    rank_deficient: bool

    def predict(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.weights


def fit_ols(v: np.ndarray, y: np.ndarray) -> LinearFit:
    """Least-squares weights ``argmin |V w - Y|^2`` without intercept.

    Solved by SVD (``numpy.linalg.lstsq``) which yields the minimum-norm
    solution when ``V`` is rank deficient.
    """
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    if v.ndim != 2 or v.shape[0] < 1:
        raise ValueError("design matrix must be 2-D with at least one row")
    if y.shape[0] != v.shape[0]:
        raise ValueError("design matrix and targets disagree on sample count")
    w, _, rank, sv = np.linalg.lstsq(v, y, rcond=RANK_RTOL)
    return LinearFit(w, int(rank), int(rank) < min(v.shape))


def augment(
    v: np.ndarray, y: np.ndarray, copies: int, sigma: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Stack ``copies`` Gaussian-jittered replicas of each training row."""
    if copies < 1:
        raise ValueError("copies must be >= 1")
    v_rep = np.tile(np.asarray(v, dtype=float), (copies, 1))
    y_rep = np.tile(np.asarray(y, dtype=float), (copies,) + (1,) * (np.ndim(y) - 1))
    if sigma > 0:
        v_rep = v_rep + rng.normal(0.0, sigma, size=v_rep.shape)
    return v_rep, y_rep


def solve_ridge(v: np.ndarray, y: np.ndarray, alpha: float) -> LinearFit:
    """Solve ``(V^T V + alpha I) w = V^T Y`` through a stacked least-squares system."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if alpha == 0:
        return fit_ols(v, y)
    d = v.shape[1]
    v_aug = np.vstack([v, np.sqrt(alpha) * np.eye(d)])
    y_aug = np.concatenate([y, np.zeros((d,) + np.shape(y)[1:])])
    w, _, rank, _ = np.linalg.lstsq(v_aug, y_aug, rcond=RANK_RTOL)
    return LinearFit(w, int(rank), int(rank) < d)


def fit_ridge_augmented(
    v: np.ndarray,
    y: np.ndarray,
    alpha: float = 1e-3,
    copies: int = 100,
    sigma: float = 2e-3,
    rng: np.random.Generator | int | None = None,
) -> LinearFit:
    """Ridge regression on ``copies`` noisy replicas of the training rows."""
    rng = np.random.default_rng(rng)
    v_rep, y_rep = augment(v, y, copies, sigma, rng)
    return solve_ridge(v_rep, y_rep, alpha)


@dataclass
class RegressionModel:
    """One weight vector per target, trained in scaled target units."""

    weights: np.ndarray  # (n_features, n_targets)
    alpha: float = 0.0
    copies: int = 1
    sigma: float = 0.0
    scaling: ScalingParams | None = None
    feature_standardizer: Standardizer | None = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def predict_scaled(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        if self.feature_standardizer is not None:
            x = self.feature_standardizer.apply(x)
        return x @ self.weights

    def predict(self, features: np.ndarray) -> np.ndarray:
        s = self.predict_scaled(features)
        return self.scaling.invert(s) if self.scaling is not None else s

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "weights": self.weights.T.tolist(),
            "alpha": self.alpha,
            "copies": self.copies,
            "sigma": self.sigma,
            "diagnostics": self.diagnostics,
        }
        if self.scaling is not None:
            out["scaling"] = self.scaling.to_dict()
        if self.feature_standardizer is not None:
            out["feature_mean"] = self.feature_standardizer.mean.tolist()
            out["feature_std"] = self.feature_standardizer.std.tolist()
        return out

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> RegressionModel:
        scaling = None
        if "scaling" in raw:
            scaling = ScalingParams(np.array(raw["scaling"]["y_min"]), np.array(raw["scaling"]["y_max"]))
        std = None
        if "feature_mean" in raw:
            std = Standardizer(np.array(raw["feature_mean"]), np.array(raw["feature_std"]))
        return cls(
            weights=np.array(raw["weights"], dtype=float).T,
            alpha=float(raw.get("alpha", 0.0)),
            copies=int(raw.get("copies", 1)),
            sigma=float(raw.get("sigma", 0.0)),
            scaling=scaling,
            feature_standardizer=std,
            diagnostics=dict(raw.get("diagnostics", {})),
        )


def train_model(
    features: np.ndarray,
    scaled_targets: np.ndarray,
    *,
    ridge: bool = False,
    alpha: float = 1e-3,
    copies: int = 100,
    sigma: float = 2e-3,
    standardize_features: bool = False,
    rng: np.random.Generator | int | None = None,
    scaling: ScalingParams | None = None,
) -> RegressionModel:
    """Fit every target column with OLS or augmented ridge.

    Each target gets its own augmentation draw from ``rng`` in column order.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(scaled_targets, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    std = Standardizer.fit(x) if standardize_features else None
    if std is not None:
        x = std.apply(x)
    rng = np.random.default_rng(rng)
    cols, ranks = [], []
    for k in range(y.shape[1]):
        if ridge:
            fit = fit_ridge_augmented(x, y[:, k], alpha=alpha, copies=copies, sigma=sigma, rng=rng)
        else:
            fit = fit_ols(x, y[:, k])
        cols.append(fit.weights)
        ranks.append(fit.rank)
    return RegressionModel(
        weights=np.column_stack(cols),
        alpha=alpha if ridge else 0.0,
        copies=copies if ridge else 1,
        sigma=sigma if ridge else 0.0,
        scaling=scaling,
        feature_standardizer=std,
        diagnostics={"rank": ranks, "n_features": x.shape[1], "n_train": x.shape[0]},
    )


def mae(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Mean absolute error over every sample and target."""
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    return float(np.mean(np.abs(p - t)))


def mse(predictions: np.ndarray, targets: np.ndarray) -> float:
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    return float(np.mean((p - t) ** 2))


def per_target_mae(predictions: np.ndarray, targets: np.ndarray) -> np.ndarray:
    p = np.atleast_2d(np.asarray(predictions, dtype=float))
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    return np.abs(p - t).mean(axis=0)
