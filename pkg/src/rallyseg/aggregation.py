"""Temporal feature aggregation: buffer building, mixture clustering,
fitness-gated outlier elimination, and score boosting.

The retrieval booster works in three steps. Top-2 heuristic candidates from
M uniformly spaced frames are pooled into a buffer of up to 2M re-id
vectors. The buffer is clustered with a diagonal-covariance Gaussian
mixture fitted by EM; clusters are ranked by the mean heuristic score of
their hard-assigned points, and the fitness ratio (second-best mean score /
best mean score) decides whether the two leading clusters are both player
clusters. While the fitness falls outside [t_l, t_h], the lowest-scoring
cluster's points are eliminated and the remainder re-clustered with two
components, capped at max_boost_rounds clustering passes. The two leading
centers then penalize each detection's heuristic score by kappa times the
distance to the nearest center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AggregationError
from .model import Detection, FrameDetections, PipelineParams, TableCenter
from .scoring import heuristic_score, top2

_EMPTY_SCORE = float("-inf")


# ---------------------------------------------------------------------------
# mixture model


@dataclass(frozen=True)
class ClusterModel:
    """Fitted diagonal-covariance mixture plus per-cluster mean heuristic score."""

    k: int
    means: np.ndarray        # (k, d)
    variances: np.ndarray    # (k, d), every entry >= variance floor
    weights: np.ndarray      # (k,), sums to 1
    mean_score: np.ndarray   # (k,), -inf for clusters with no hard-assigned points
    log_likelihood: float
    n_iter: int

    def log_prob(self, points: np.ndarray) -> np.ndarray:
        """(n, k) matrix of log(weight_k) + log N(x_n | mu_k, var_k)."""
        x = np.atleast_2d(points)
        out = np.empty((x.shape[0], self.k))
        with np.errstate(divide="ignore"):
            log_w = np.log(self.weights)
        for j in range(self.k):
            diff = x - self.means[j]
            out[:, j] = log_w[j] - 0.5 * np.sum(
                np.log(2.0 * np.pi * self.variances[j]) + diff * diff / self.variances[j],
                axis=1,
            )
        return out

    def responsibilities(self, points: np.ndarray) -> np.ndarray:
        lp = self.log_prob(points)
        return np.exp(lp - _logsumexp_rows(lp)[:, None])

    def assign(self, points: np.ndarray) -> np.ndarray:
        """Hard assignment: argmax responsibility per point."""
        return np.argmax(self.log_prob(points), axis=1)

    def to_payload(self) -> dict:
        return {
            "k": self.k,
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "weights": self.weights.tolist(),
            "mean_score": [None if math.isinf(s) else float(s) for s in self.mean_score],
            "log_likelihood": self.log_likelihood,
            "n_iter": self.n_iter,
        }

    @staticmethod
    def from_payload(payload: dict) -> "ClusterModel":
        return ClusterModel(
            k=int(payload["k"]),
            means=np.asarray(payload["means"], dtype=float),
            variances=np.asarray(payload["variances"], dtype=float),
            weights=np.asarray(payload["weights"], dtype=float),
            mean_score=np.asarray(
                [_EMPTY_SCORE if s is None else float(s) for s in payload["mean_score"]]
            ),
            log_likelihood=float(payload["log_likelihood"]),
            n_iter=int(payload["n_iter"]),
        )


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    m = np.max(a, axis=1)
    safe = np.where(np.isfinite(m), m, 0.0)
    out = safe + np.log(np.sum(np.exp(a - safe[:, None]), axis=1))
    return np.where(np.isfinite(m), out, m)


def _kmeans_pp_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Standard k-means++ seeding; degenerate (all-equal) inputs fall back to
    uniform picks."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[j] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    return centers


def _log_prob(
    x: np.ndarray, means: np.ndarray, variances: np.ndarray, weights: np.ndarray
) -> np.ndarray:
    out = np.empty((x.shape[0], means.shape[0]))
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    for j in range(means.shape[0]):
        diff = x - means[j]
        out[:, j] = log_w[j] - 0.5 * np.sum(
            np.log(2.0 * np.pi * variances[j]) + diff * diff / variances[j], axis=1
        )
    return out


def _e_step(lp: np.ndarray, mode: str) -> tuple[np.ndarray, np.ndarray]:
    """Responsibilities and per-point log-likelihood contribution."""
    if mode == "em":
        row_ll = _logsumexp_rows(lp)
        return np.exp(lp - row_ll[:, None]), row_ll
    hard = np.argmax(lp, axis=1)
    resp = np.zeros_like(lp)
    resp[np.arange(lp.shape[0]), hard] = 1.0
    return resp, lp[np.arange(lp.shape[0]), hard]


def _m_step(
    x: np.ndarray,
    resp: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
    variance_floor: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = x.shape[0]
    nk = resp.sum(axis=0)
    new_means = means.copy()
    new_vars = np.maximum(variances, variance_floor)
    for j in range(means.shape[0]):
        if nk[j] <= 1e-12:
            continue  # cluster lost all mass: freeze its parameters
        new_means[j] = resp[:, j] @ x / nk[j]
        diff = x - new_means[j]
        new_vars[j] = np.maximum(resp[:, j] @ (diff * diff) / nk[j], variance_floor)
    return new_means, new_vars, nk / n


def em_fit(
    points: np.ndarray,
    scores: np.ndarray,
    k: int,
    seed: int,
    variance_floor: float = 1e-6,
    max_iter: int = 100,
    tol: float = 1e-6,
    mode: str = "em",
) -> ClusterModel:
    """Fit a k-component diagonal mixture by (hard or soft) EM.

    Initialization is k-means++ seeding followed by one k-means assignment.
    The monitored log-likelihood (mixture LL for "em", classification LL for
    "kmeans") is checked to be non-decreasing with 1e-9 slack on every
    iteration; convergence is a relative change below tol, or max_iter.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    s = np.asarray(scores, dtype=float)
    n, d = x.shape
    if k < 1:
        raise AggregationError(f"need k >= 1, got {k}")
    if k > n:
        raise AggregationError(f"k={k} exceeds the {n} available points")
    if mode not in ("em", "kmeans"):
        raise AggregationError(f"unknown cluster mode {mode!r}")

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_centers(x, k, rng)
    dists = np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    resp = np.zeros((n, k))
    resp[np.arange(n), np.argmin(dists, axis=1)] = 1.0

    means, variances, weights = _m_step(
        x, resp, centers.copy(), np.ones((k, d)), variance_floor
    )

    prev_ll = -np.inf
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        lp = _log_prob(x, means, variances, weights)
        resp, row_ll = _e_step(lp, mode)
        ll = float(row_ll.sum())
        if ll < prev_ll - 1e-9:
            raise AggregationError(
                f"log-likelihood decreased from {prev_ll} to {ll} at iteration {n_iter}"
            )
        converged = np.isfinite(prev_ll) and abs(ll - prev_ll) < tol * abs(prev_ll)
        prev_ll = ll
        if converged:
            break
        means, variances, weights = _m_step(x, resp, means, variances, variance_floor)

    # final log-likelihood and hard assignment for the returned parameters
    lp = _log_prob(x, means, variances, weights)
    _, row_ll = _e_step(lp, mode)
    hard = np.argmax(lp, axis=1)
    mean_score = np.full(k, _EMPTY_SCORE)
    for j in range(k):
        members = hard == j
        if members.any():
            mean_score[j] = float(s[members].mean())

    return ClusterModel(
        k=k,
        means=means,
        variances=variances,
        weights=weights,
        mean_score=mean_score,
        log_likelihood=float(row_ll.sum()),
        n_iter=n_iter,
    )


# ---------------------------------------------------------------------------
# buffer + boosting


@dataclass(frozen=True)
class BoostContext:
    """The two dominant cluster centers plus everything needed to boost."""

    mu0: tuple[float, ...]
    mu1: tuple[float, ...]
    kappa: float
    fitness: float
    normalize_reid: bool
    eliminations: int = 0
    passes: int = 1
    warned: bool = False

    def to_payload(self) -> dict:
        return {
            "mu0": list(self.mu0),
            "mu1": list(self.mu1),
            "kappa": self.kappa,
            "fitness": self.fitness,
            "normalize_reid": self.normalize_reid,
            "eliminations": self.eliminations,
            "passes": self.passes,
            "warned": self.warned,
        }

    @staticmethod
    def from_payload(payload: dict) -> "BoostContext":
        return BoostContext(
            mu0=tuple(float(v) for v in payload["mu0"]),
            mu1=tuple(float(v) for v in payload["mu1"]),
            kappa=float(payload["kappa"]),
            fitness=float(payload["fitness"]),
            normalize_reid=bool(payload["normalize_reid"]),
            eliminations=int(payload["eliminations"]),
            passes=int(payload["passes"]),
            warned=bool(payload["warned"]),
        )


def _l2_normalize(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


def uniform_frame_indices(n_frames: int, m: int) -> list[int]:
    """M indices at uniform temporal spacing; a single sample takes the middle."""
    if m == 1:
        return [int(round((n_frames - 1) / 2.0))]
    return [int(round(i * (n_frames - 1) / (m - 1))) for i in range(m)]


def build_buffer(
    frames: list[FrameDetections],
    c: TableCenter,
    m: int,
    params: PipelineParams,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Pool top-2 heuristic candidates from m uniformly spaced frames.

    Returns (vectors, scores) with up to 2m rows; vectors are L2-normalized
    when params.normalize_reid is set. `seed` is accepted for interface
    stability but unused: uniform spacing is deterministic.
    """
    del seed
    n_frames = len(frames)
    if m < 1:
        raise AggregationError(f"need m >= 1, got {m}")
    if n_frames < m:
        raise AggregationError(f"stream has {n_frames} frames, need at least {m}")

    rows: list[np.ndarray] = []
    scores: list[float] = []
    for idx in uniform_frame_indices(n_frames, m):
        frame = frames[idx]
        for cand in top2(frame, c, params):
            vec = np.asarray(frame.detections[cand.detection_index].reid, dtype=float)
            if params.normalize_reid:
                vec = _l2_normalize(vec)
            rows.append(vec)
            scores.append(cand.score_h)

    if len(rows) < 2 or np.unique(np.asarray(rows), axis=0).shape[0] < 2:
        raise AggregationError("insufficient candidates: fewer than 2 distinct buffered vectors")
    return np.asarray(rows), np.asarray(scores)


def fit_boost(
    buffer: np.ndarray,
    scores: np.ndarray,
    params: PipelineParams,
    seed: int = 0,
) -> BoostContext:
    """Cluster the buffer and derive the two dominant player centers.

    The first pass uses params.n_max components; every re-fit after an
    elimination uses two. If the fitness never lands in [t_l, t_h] within
    params.max_boost_rounds clustering passes, the current top-2 clusters
    are returned with the warned flag set.
    """
    pts = np.atleast_2d(np.asarray(buffer, dtype=float))
    sc = np.asarray(scores, dtype=float)
    if pts.shape[0] != sc.shape[0]:
        raise AggregationError(
            f"buffer has {pts.shape[0]} vectors but {sc.shape[0]} scores"
        )

    k = params.n_max
    passes = 0
    eliminations = 0
    while True:
        model = em_fit(
            pts,
            sc,
            k,
            seed + passes,
            variance_floor=params.variance_floor,
            max_iter=params.em_max_iter,
            tol=params.em_tol,
            mode=params.cluster_mode,
        )
        passes += 1
        order = np.argsort(-model.mean_score, kind="stable")
        s0 = model.mean_score[order[0]]
        s1 = model.mean_score[order[1]]
        fitness = float(s1 / s0) if s0 > 0 and np.isfinite(s1) else _EMPTY_SCORE
        in_range = params.t_l <= fitness <= params.t_h

        if in_range or passes >= params.max_boost_rounds:
            return BoostContext(
                mu0=tuple(float(v) for v in model.means[order[0]]),
                mu1=tuple(float(v) for v in model.means[order[1]]),
                kappa=params.kappa,
                fitness=fitness,
                normalize_reid=params.normalize_reid,
                eliminations=eliminations,
                passes=passes,
                warned=not in_range,
            )

        keep = model.assign(pts) != order[-1]
        if keep.sum() < 2:
            raise AggregationError(
                "fewer than 2 points remain after eliminating the lowest-scoring cluster"
            )
        pts = pts[keep]
        sc = sc[keep]
        eliminations += 1
        k = 2


def boosted_score(
    d: Detection,
    c: TableCenter,
    ctx: BoostContext,
    params: PipelineParams,
) -> float:
    """Heuristic score minus kappa times the distance to the nearest dominant
    cluster center; never exceeds the heuristic score."""
    r = np.asarray(d.reid, dtype=float)
    mu0 = np.asarray(ctx.mu0, dtype=float)
    mu1 = np.asarray(ctx.mu1, dtype=float)
    if r.shape != mu0.shape:
        raise AggregationError(
            f"reid dimension {r.shape[0]} does not match boost context dimension {mu0.shape[0]}"
        )
    if ctx.normalize_reid:
        r = _l2_normalize(r)
    penalty = ctx.kappa * min(
        float(np.linalg.norm(r - mu0)), float(np.linalg.norm(r - mu1))
    )
    return heuristic_score(d, c, params.alpha, params.beta) - penalty
