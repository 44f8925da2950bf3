"""Per-detection heuristic score and top-2 ranking.

The heuristic combines the detector's person probability with proximity to
the table center:

    score = alpha * person_prob + beta * (1 - |bbox_center - c| / |c|)

Scores can go negative for detections farther from the table center than
the center is from the image origin; they are not clamped, since clamping
would destroy ranking information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ScoringError
from .model import Detection, FrameDetections, PipelineParams, TableCenter


@dataclass(frozen=True)
class ScoredCandidate:
    frame_index: int
    detection_index: int
    score_h: float
    score_boosted: float | None = None

    @property
    def ranking_score(self) -> float:
        return self.score_h if self.score_boosted is None else self.score_boosted


def heuristic_score(
    d: Detection, c: TableCenter, alpha: float = 0.5, beta: float = 0.5
) -> float:
    c_norm = math.hypot(c.cx, c.cy)
    if c_norm == 0.0:
        raise ScoringError("degenerate table center")
    bx, by = d.bbox.center()
    dist = math.hypot(bx - c.cx, by - c.cy)
    return alpha * d.person_prob + beta * (1.0 - dist / c_norm)


def top2(
    frame: FrameDetections,
    c: TableCenter,
    params: PipelineParams,
    boost_ctx=None,
) -> list[ScoredCandidate]:
    """Up to two highest-scoring candidates, score descending.

    Ties break toward the lower detection index. When a boost context is
    given, ranking uses the boosted score and both scores are reported.
    """
    from .aggregation import boosted_score  # local import to avoid a cycle

    candidates = []
    for k, d in enumerate(frame.detections):
        s_h = heuristic_score(d, c, params.alpha, params.beta)
        s_b = None
        if boost_ctx is not None:
            s_b = boosted_score(d, c, boost_ctx, params)
        candidates.append(ScoredCandidate(frame.frame_index, k, s_h, s_b))

    candidates.sort(key=lambda cand: (-cand.ranking_score, cand.detection_index))
    return candidates[:2]
