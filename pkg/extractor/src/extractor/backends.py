"""Pluggable model backends: person detection, table segmentation, re-id
embedding and whole-frame features.

Two backends ship by default:

  classical     cv2-only color/contour analysis; no model downloads, works
                offline. Persons are saturated non-table-colored blobs, the
                table is the largest blue region, embeddings are a seeded
                random projection of a downsampled crop.
  torchvision   COCO-pretrained detector (person class) and instance
                segmentation ("bench" class proxies the table), embeddings
                from a pretrained backbone. Requires downloadable or cached
                checkpoint weights.

Backends are looked up by name so new extractors can be registered without
touching the pipeline.
"""

from __future__ import annotations

import numpy as np

import cv2


class ExtractorError(Exception):
    pass


class Backend:
    """Interface: subclasses implement the three extraction primitives."""

    name = "base"

    def detect_persons(self, frame_bgr: np.ndarray) -> list[tuple[tuple[float, float, float, float], float]]:
        """[(bbox(x, y, w, h), person_prob), ...] for one frame."""
        raise NotImplementedError

    def embed(self, frame_bgr: np.ndarray, bbox: tuple[float, float, float, float]) -> np.ndarray:
        """Re-id embedding of the crop inside bbox; unit L2 norm."""
        raise NotImplementedError

    def table_mask(self, frame_bgr: np.ndarray) -> np.ndarray | None:
        """Binary HxW table mask, or None when no table is found."""
        raise NotImplementedError

    def frame_feature(self, frame_bgr: np.ndarray) -> np.ndarray:
        """Whole-frame feature vector for the frame-level baseline."""
        small = cv2.resize(frame_bgr, (8, 8), interpolation=cv2.INTER_AREA)
        vec = small.astype(np.float64).ravel() / 255.0
        return vec


class ClassicalBackend(Backend):
    """Color-segmentation extractor. Persons are saturated blobs whose hue
    differs from the table's blue band; suited to synthetic clips and simple
    fixed-camera footage."""

    name = "classical"

    # OpenCV hue is 0..179; the table band is blue
    TABLE_HUE = (100, 130)
    MIN_SATURATION = 90
    MIN_VALUE = 60

    def __init__(self, reid_dim: int = 64, min_area: int = 40):
        if reid_dim < 1:
            raise ExtractorError(f"reid_dim must be positive, got {reid_dim}")
        self.reid_dim = reid_dim
        self.min_area = min_area
        # fixed projection: same embedding space for every run
        rng = np.random.default_rng(20240 + reid_dim)
        self._projection = rng.standard_normal((16 * 16 * 3, reid_dim))

    def _colored_mask(self, frame_bgr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        hsv = cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2HSV)
        saturated = (hsv[:, :, 1] >= self.MIN_SATURATION) & (hsv[:, :, 2] >= self.MIN_VALUE)
        hue = hsv[:, :, 0]
        table_band = (hue >= self.TABLE_HUE[0]) & (hue <= self.TABLE_HUE[1])
        return saturated & ~table_band, saturated & table_band

    def detect_persons(self, frame_bgr):
        person_mask, _ = self._colored_mask(frame_bgr)
        contours, _ = cv2.findContours(
            person_mask.astype(np.uint8), cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE
        )
        out = []
        for contour in contours:
            x, y, w, h = cv2.boundingRect(contour)
            area = cv2.contourArea(contour)
            if w * h < self.min_area or w < 2 or h < 2:
                continue
            fill = float(area) / float(w * h)
            # solid upright blobs look most person-like to this heuristic
            upright = min(1.0, h / max(w, 1))
            prob = float(np.clip(0.35 + 0.45 * fill + 0.15 * upright, 0.05, 0.99))
            out.append(((float(x), float(y), float(w), float(h)), prob))
        out.sort(key=lambda item: (-item[1], item[0]))
        return out

    def embed(self, frame_bgr, bbox):
        x, y, w, h = (int(round(v)) for v in bbox)
        height, width = frame_bgr.shape[:2]
        x0, y0 = max(x, 0), max(y, 0)
        x1, y1 = min(x + w, width), min(y + h, height)
        if x1 <= x0 or y1 <= y0:
            raise ExtractorError(f"bbox {bbox} outside the frame")
        crop = cv2.resize(frame_bgr[y0:y1, x0:x1], (16, 16), interpolation=cv2.INTER_AREA)
        vec = crop.astype(np.float64).ravel() / 255.0
        emb = vec @ self._projection
        norm = np.linalg.norm(emb)
        return emb / norm if norm > 0 else emb

    def table_mask(self, frame_bgr):
        _, table = self._colored_mask(frame_bgr)
        table_u8 = table.astype(np.uint8)
        n_labels, labels = cv2.connectedComponents(table_u8)
        if n_labels <= 1:
            return None
        sizes = [(labels == lab).sum() for lab in range(1, n_labels)]
        best = int(np.argmax(sizes)) + 1
        if sizes[best - 1] < 4 * self.min_area:
            return None
        return (labels == best).astype(np.int64)


class TorchvisionBackend(Backend):
    """COCO-pretrained networks. Person boxes from a detection model, the
    table from an instance-segmentation model's "bench" class, embeddings
    from a classification backbone's penultimate layer. Weights must be
    downloadable or already cached."""

    name = "torchvision"

    COCO_PERSON = 1
    COCO_BENCH = 15

    def __init__(self, reid_dim: int = 256, score_floor: float = 0.3):
        self.reid_dim = reid_dim
        self.score_floor = score_floor
        try:
            import torch
            import torchvision
            from torchvision import models
        except ImportError as exc:
            raise ExtractorError(
                "torchvision backend requires torch and torchvision; "
                "install the [torch] extra"
            ) from exc
        self._torch = torch
        try:
            self._detector = models.detection.fasterrcnn_resnet50_fpn(weights="DEFAULT")
            self._segmenter = models.detection.maskrcnn_resnet50_fpn(weights="DEFAULT")
            embedder = models.resnet18(weights="DEFAULT")
        except Exception as exc:
            raise ExtractorError(
                f"could not load pretrained weights (network/cache unavailable): {exc}"
            ) from exc
        embedder.fc = torch.nn.Identity()
        self._embedder = embedder.eval()
        self._detector.eval()
        self._segmenter.eval()
        rng = np.random.default_rng(20240 + reid_dim)
        self._projection = rng.standard_normal((512, reid_dim))

    def _to_tensor(self, frame_bgr):
        rgb = cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2RGB)
        return self._torch.from_numpy(rgb).permute(2, 0, 1).float() / 255.0

    def detect_persons(self, frame_bgr):
        with self._torch.no_grad():
            pred = self._detector([self._to_tensor(frame_bgr)])[0]
        out = []
        for box, label, score in zip(pred["boxes"], pred["labels"], pred["scores"]):
            if int(label) != self.COCO_PERSON or float(score) < self.score_floor:
                continue
            x0, y0, x1, y1 = (float(v) for v in box)
            out.append(((x0, y0, x1 - x0, y1 - y0), float(score)))
        return out

    def embed(self, frame_bgr, bbox):
        x, y, w, h = (int(round(v)) for v in bbox)
        height, width = frame_bgr.shape[:2]
        x0, y0 = max(x, 0), max(y, 0)
        x1, y1 = min(x + w, width), min(y + h, height)
        if x1 <= x0 or y1 <= y0:
            raise ExtractorError(f"bbox {bbox} outside the frame")
        crop = cv2.resize(frame_bgr[y0:y1, x0:x1], (224, 224), interpolation=cv2.INTER_AREA)
        with self._torch.no_grad():
            feat = self._embedder(self._to_tensor(crop)[None])[0].numpy()
        emb = feat @ self._projection
        norm = np.linalg.norm(emb)
        return emb / norm if norm > 0 else emb

    def table_mask(self, frame_bgr):
        with self._torch.no_grad():
            pred = self._segmenter([self._to_tensor(frame_bgr)])[0]
        merged = None
        for mask, label, score in zip(pred["masks"], pred["labels"], pred["scores"]):
            if int(label) != self.COCO_BENCH or float(score) < self.score_floor:
                continue
            binary = (mask[0].numpy() >= 0.5).astype(np.int64)
            merged = binary if merged is None else (merged | binary)
        return merged


_BACKENDS = {
    ClassicalBackend.name: ClassicalBackend,
    TorchvisionBackend.name: TorchvisionBackend,
}


def make_backend(name: str, reid_dim: int) -> Backend:
    try:
        cls = _BACKENDS[name]
    except KeyError:
        raise ExtractorError(
            f"unknown backend {name!r}; available: {sorted(_BACKENDS)}"
        ) from None
    return cls(reid_dim=reid_dim)
