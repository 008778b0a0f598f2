"""Three-stage quadrat analysis: detect, box-prompted segment, classify.

Detections become box prompts for the segmenter; segmented instances keep
their detection confidence so overlap resolution can arbitrate contested
pixels; resolved instances are classified and handed to the ecology
metrics. Backends are pluggable transports speaking wire protocol v1.
"""

from __future__ import annotations

import base64
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from PIL import Image

from . import ecology, protocol
from .backends import BackendSet, InProcessBackend, TransportError
from .masks import decode, encode, instance_from_mask, resolve_overlaps
from .mocks import make_handler
from .model import BoundingBox, Detection, GenusLabel, ImageRef, QuadratReport, QuadratScene
from .protocol import ProtocolError

STAGES = ("detect", "segment", "classify")


class PipelineError(RuntimeError):
    """A stage failed for one quadrat; carries the stage name."""

    def __init__(self, stage: str, message: str, retriable: bool = False):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.retriable = retriable


@dataclass(frozen=True)
class PipelineConfig:
    detection_confidence_min: float = 0.25
    prompt_padding: int = 0
    classifier_crop: bool = False  # False: full image + mask; True: tight crop
    batch_parallelism: int = 1

    def __post_init__(self) -> None:
        if not 0.0 <= self.detection_confidence_min <= 1.0:
            raise ValueError("detection_confidence_min must be in [0, 1]")
        if self.prompt_padding < 0:
            raise ValueError("prompt_padding must be >= 0")
        if self.batch_parallelism < 1:
            raise ValueError("batch_parallelism must be >= 1")


def mock_backends(seed: int) -> BackendSet:
    """In-process deterministic backends; same seed, same outputs."""
    handler = make_handler(seed)
    return BackendSet(
        detector=InProcessBackend(handler),
        segmenter=InProcessBackend(handler),
        classifier=InProcessBackend(handler),
    )


def generate_box_prompts(
    detections: Sequence[Detection], image: ImageRef, config: PipelineConfig
) -> list[BoundingBox]:
    """Filter by confidence, pad, and clamp to the image; order preserved.

    Detections whose padded box no longer intersects the image are dropped
    along with the sub-threshold ones.
    """
    prompts = []
    pad = config.prompt_padding
    for det in detections:
        if det.confidence < config.detection_confidence_min:
            continue
        x0 = max(0, det.box.x_min - pad)
        y0 = max(0, det.box.y_min - pad)
        x1 = min(image.width, det.box.x_max + pad)
        y1 = min(image.height, det.box.y_max + pad)
        if x0 < x1 and y0 < y1:
            prompts.append(BoundingBox(x0, y0, x1, y1))
    return prompts


def load_image(path: str | Path) -> tuple[ImageRef, str]:
    """Open a PNG/JPEG quadrat photo; returns its reference and PNG base64."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            width, height = img.size
            buf = io.BytesIO()
            img.save(buf, format="PNG")
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot load image {path}: {exc}") from exc
    ref = ImageRef(id=path.name, width=width, height=height, source=str(path))
    return ref, base64.b64encode(buf.getvalue()).decode("ascii")


def _resolve_image(image) -> tuple[ImageRef, str]:
    if isinstance(image, ImageRef):
        return image, ""
    return load_image(image)


class _RequestIds:
    """Deterministic per-quadrat request ids; unique within a batch."""

    def __init__(self, prefix: str):
        self.prefix = prefix
        self.seq = 0
        self.issued: list[str] = []

    def next(self, stage: str) -> str:
        self.seq += 1
        rid = f"{self.prefix}-{stage}-{self.seq}"
        self.issued.append(rid)
        return rid


def _call(client, request: dict, stage: str) -> dict:
    try:
        response = client.request(request)
    except TransportError as exc:
        raise PipelineError(stage, str(exc), retriable=True) from exc
    response = protocol.check_reply(request, response)
    if "error" in response:
        err = response["error"]
        code = err.get("code") if isinstance(err, dict) else None
        message = err.get("message") if isinstance(err, dict) else str(err)
        raise PipelineError(stage, f"backend error {code!r}: {message}")
    return response


def _parse_detections(response: dict) -> list[Detection]:
    entries = response.get("detections")
    if not isinstance(entries, list):
        raise ProtocolError("detect response missing 'detections' list", response)
    detections = []
    for entry in entries:
        if not isinstance(entry, dict) or "box" not in entry or "confidence" not in entry:
            raise ProtocolError("bad detection entry", entry)
        box = protocol.parse_box(entry["box"], entry)
        confidence = entry["confidence"]
        if not isinstance(confidence, (int, float)) or not 0.0 <= confidence <= 1.0:
            raise ProtocolError("detection confidence out of range", entry)
        hint = entry.get("class_hint")
        detections.append(Detection(box=box, confidence=float(confidence), class_hint=hint))
    return detections


def _crop_payloads(image_ref: ImageRef, inst) -> tuple[dict, dict]:
    """Tight-crop classifier input: cropped image element plus cropped mask."""
    box = inst.box
    bitmap = decode(inst.mask)[box.y_min : box.y_max, box.x_min : box.x_max]
    cropped = encode(bitmap)
    crop_ref = ImageRef(
        id=f"{image_ref.id}#crop-{box.x_min}-{box.y_min}", width=box.width, height=box.height
    )
    return protocol.image_payload(crop_ref), protocol.mask_payload(cropped)


def analyze_quadrat(
    image,
    backends: BackendSet,
    config: PipelineConfig | None = None,
    request_prefix: str = "q0",
) -> QuadratReport:
    """Run the full cascade for one quadrat image and build its report.

    ``image`` may be a path (pixels are loaded and forwarded) or a bare
    ImageRef (mock-friendly; the wire image element carries no pixel data).
    Zero detections is a valid outcome, not an error.
    """
    config = config or PipelineConfig()
    image_ref, png_b64 = _resolve_image(image)
    image_element = protocol.image_payload(image_ref, png_b64)
    ids = _RequestIds(request_prefix)

    response = _call(
        backends.detector, protocol.detect_request(ids.next("detect"), image_element), "detect"
    )
    detections = _parse_detections(response)
    prompts = generate_box_prompts(detections, image_ref, config)

    instances = []
    if prompts:
        request = protocol.segment_request(
            ids.next("segment"), image_element, [p.as_list() for p in prompts]
        )
        response = _call(backends.segmenter, request, "segment")
        entries = response.get("masks")
        if not isinstance(entries, list) or len(entries) != len(prompts):
            raise ProtocolError(
                f"segment response must carry {len(prompts)} masks aligned with prompts", response
            )
        kept_detections = [d for d in detections if d.confidence >= config.detection_confidence_min]
        for entry, det in zip(entries, kept_detections):
            if isinstance(entry, dict) and "error" in entry:
                raise PipelineError("segment", f"per-prompt error: {entry['error']}")
            mask = protocol.parse_mask(entry, response)
            if (mask.width, mask.height) != (image_ref.width, image_ref.height):
                raise ProtocolError("segment mask dimensions do not match image", entry)
            if mask.area == 0:
                continue  # nothing segmented for this prompt; contributes no cover
            instances.append(instance_from_mask(mask, det.confidence))

    resolved = resolve_overlaps(instances)

    labeled = []
    for inst in resolved:
        if config.classifier_crop:
            img_el, mask_el = _crop_payloads(image_ref, inst)
        else:
            img_el, mask_el = image_element, protocol.mask_payload(inst.mask)
        request = protocol.classify_request(ids.next("classify"), img_el, mask_el)
        response = _call(backends.classifier, request, "classify")
        genus = response.get("genus")
        confidence = response.get("confidence")
        if not isinstance(genus, str) or not genus:
            raise ProtocolError("classify response missing genus", response)
        if not isinstance(confidence, (int, float)) or not 0.0 <= confidence <= 1.0:
            raise ProtocolError("classify confidence out of range", response)
        labeled.append(inst.with_genus(GenusLabel(name=genus, confidence=float(confidence))))

    scene = QuadratScene(image=image_ref, roi=None, instances=tuple(labeled))
    return ecology.build_report(scene)


@dataclass(frozen=True)
class BatchFailure:
    index: int
    image: str
    stage: str | None
    error: str


@dataclass(frozen=True)
class BatchResult:
    reports: tuple[QuadratReport, ...]  # successes, in input order
    failures: tuple[BatchFailure, ...]
    summary: dict = field(default_factory=dict)


def _image_label(image) -> str:
    if isinstance(image, ImageRef):
        return image.id
    return str(image)


def analyze_batch(
    images: Sequence, backends: BackendSet, config: PipelineConfig | None = None
) -> BatchResult:
    """Analyze many quadrats; one failure never aborts the batch.

    Results are assembled in input order regardless of execution order, so
    output is identical at any parallelism level.
    """
    config = config or PipelineConfig()
    if not images:
        raise ValueError("empty batch")

    def run_one(i: int):
        return analyze_quadrat(images[i], backends, config, request_prefix=f"q{i:04d}")

    outcomes: list = [None] * len(images)
    if config.batch_parallelism == 1:
        for i in range(len(images)):
            try:
                outcomes[i] = run_one(i)
            except Exception as exc:  # noqa: BLE001 - failure isolation is the contract
                outcomes[i] = exc
    else:
        with ThreadPoolExecutor(max_workers=config.batch_parallelism) as pool:
            futures = {i: pool.submit(run_one, i) for i in range(len(images))}
            for i, future in futures.items():
                try:
                    outcomes[i] = future.result()
                except Exception as exc:  # noqa: BLE001
                    outcomes[i] = exc

    reports = []
    failures = []
    for i, outcome in enumerate(outcomes):
        if isinstance(outcome, QuadratReport):
            reports.append(outcome)
        else:
            stage = outcome.stage if isinstance(outcome, PipelineError) else None
            failures.append(
                BatchFailure(index=i, image=_image_label(images[i]), stage=stage, error=str(outcome))
            )
    if not reports:
        raise PipelineError("batch", f"all {len(images)} quadrats failed")

    genera = sorted({row.genus for rep in reports for row in rep.per_genus})
    cover_means = {
        g: sum(
            next((row.cover for row in rep.per_genus if row.genus == g), 0.0) for rep in reports
        )
        / len(reports)
        for g in genera
    }
    summary = {
        "quadrats": len(images),
        "succeeded": len(reports),
        "failed": len(failures),
        "mean_total_cover": sum(r.total_cover for r in reports) / len(reports),
        "genus_cover_mean": cover_means,
    }
    return BatchResult(reports=tuple(reports), failures=tuple(failures), summary=summary)
