"""Deterministic stand-in backends for desk-scale runs and tests.

All randomness flows from one seed through a 32-bit linear congruential
generator, and every derived quantity is computed with plain integer
arithmetic (no language-specific hashing, no floating-point intermediate
state), so independent implementations of the wire protocol can reproduce
these outputs exactly.
"""

from __future__ import annotations

from typing import Sequence

from . import protocol
from .masks import rasterize_box
from .model import BoundingBox, RleMask, tight_bbox
from .taxonomy import canonical_taxonomy

_M32 = 2**32
_LCG_A = 1664525
_LCG_C = 1013904223
_SEED_SMALL_MOD = 65521  # keeps hash products well under 2**53


class Lcg:
    """Numerical-recipes LCG; all state fits double-precision integers."""

    def __init__(self, seed: int):
        self.state = seed % _M32

    def next(self) -> int:
        self.state = (_LCG_A * self.state + _LCG_C) % _M32
        return self.state

    def rand(self, n: int) -> int:
        return self.next() % n


def layout_boxes(seed: int, width: int, height: int) -> list[tuple[int, int, int, int, int]]:
    """Seeded 3x3 cell layout; returns (x0, y0, x1, y1, confidence_percent) tuples.

    Cells are visited row-major; each consumes one draw for presence and,
    when present, four more for size and jitter plus one for confidence.
    Jitter may push a box past its cell, so layouts can overlap.
    """
    rng = Lcg(seed)
    cell_w = max(1, width // 3)
    cell_h = max(1, height // 3)
    boxes = []
    for gy in range(3):
        for gx in range(3):
            if rng.rand(100) >= 60:
                continue
            bw = max(2, (cell_w * (40 + rng.rand(50))) // 100)
            bh = max(2, (cell_h * (40 + rng.rand(50))) // 100)
            span_x = max(1, cell_w - bw + max(1, cell_w // 4))
            span_y = max(1, cell_h - bh + max(1, cell_h // 4))
            x0 = gx * cell_w + rng.rand(span_x)
            y0 = gy * cell_h + rng.rand(span_y)
            x1 = min(width, x0 + bw)
            y1 = min(height, y0 + bh)
            conf = 50 + rng.rand(50)
            if x1 - x0 >= 2 and y1 - y0 >= 2:
                boxes.append((x0, y0, x1, y1, conf))
    return boxes


def dummy_detections(seed: int, width: int, height: int) -> list[dict]:
    return [
        {"box": [x0, y0, x1, y1], "confidence": conf / 100}
        for x0, y0, x1, y1, conf in layout_boxes(seed, width, height)
    ]


def _prompt_in_bounds(prompt: Sequence[int], width: int, height: int) -> bool:
    x0, y0, x1, y1 = prompt
    return 0 <= x0 < x1 <= width and 0 <= y0 < y1 <= height


def dummy_masks(seed: int, width: int, height: int, prompts: Sequence[Sequence[int]]) -> list[dict]:
    """One mask per prompt: the rasterized box, inset by 1px/side on odd seeds.

    Out-of-bounds prompts produce a per-entry error object instead of a mask.
    """
    inset = seed % 2 == 1
    entries: list[dict] = []
    for i, prompt in enumerate(prompts):
        if not _prompt_in_bounds(prompt, width, height):
            entries.append(
                {"error": {"code": "out_of_bounds", "message": f"prompt {i} out of bounds"}}
            )
            continue
        x0, y0, x1, y1 = (int(v) for v in prompt)
        if inset and x1 - x0 > 2 and y1 - y0 > 2:
            x0, y0, x1, y1 = x0 + 1, y0 + 1, x1 - 1, y1 - 1
        mask = rasterize_box(BoundingBox(x0, y0, x1, y1), width, height)
        entries.append(protocol.mask_payload(mask))
    return entries


def dummy_classification(seed: int, mask: RleMask) -> dict:
    """Genus picked by hashing the tight-box center into the taxonomy."""
    taxonomy = canonical_taxonomy()
    box = tight_bbox(mask)
    if box is None:
        return {"error": {"code": "empty_mask", "message": "mask has no foreground"}}
    cx = (box.x_min + box.x_max) // 2
    cy = (box.y_min + box.y_max) // 2
    s = seed % _SEED_SMALL_MOD
    n = len(taxonomy)
    idx = (cx * 48271 + cy * 69621 + s * 8191) % 1000003 % n
    conf = 55 + (cx * 31 + cy * 17 + s * 7) % 40
    idx2 = (idx + 1 + (cx + cy + s) % 7) % n
    conf2 = 30 + (cx * 13 + cy * 29 + s * 3) % 25
    idx3 = (idx2 + 1 + (cx * 3 + cy) % 5) % n
    conf3 = 10 + (cx * 7 + cy * 11 + s) % 20
    return {
        "genus": taxonomy[idx],
        "confidence": conf / 100,
        "alternates": [
            {"genus": taxonomy[idx2], "confidence": conf2 / 100},
            {"genus": taxonomy[idx3], "confidence": conf3 / 100},
        ],
    }


def _plain_int(value) -> bool:
    # bool is an int subclass in Python; the wire type must be a plain integer
    return isinstance(value, int) and not isinstance(value, bool)


def _image_dims(request: dict) -> tuple[int, int] | None:
    image = request.get("image")
    if not isinstance(image, dict):
        return None
    width, height = image.get("width"), image.get("height")
    if not _plain_int(width) or not _plain_int(height) or width < 1 or height < 1:
        return None
    return width, height


def make_handler(seed: int):
    """Request handler implementing wire protocol v1 over the dummy backends.

    Shared by the in-process mock transport and the stdio mock server, so
    both speak identically by construction.
    """
    seed = seed % _M32

    def handle(request) -> dict:
        if not isinstance(request, dict):
            return protocol.error_response("", protocol.ERROR_MALFORMED, "request is not an object")
        rid = request.get("request_id")
        if not isinstance(rid, str):
            return protocol.error_response("", protocol.ERROR_MALFORMED, "missing request_id")
        if request.get("protocol_version") != protocol.PROTOCOL_VERSION:
            return protocol.error_response(
                rid, protocol.ERROR_VERSION, "unsupported protocol_version"
            )
        op = request.get("op")
        if op not in protocol.OPS:
            return protocol.error_response(rid, protocol.ERROR_UNSUPPORTED_OP, "unsupported op")
        dims = _image_dims(request)
        if dims is None:
            return protocol.error_response(rid, protocol.ERROR_MALFORMED, "bad image element")
        width, height = dims
        if op == "detect":
            return {"request_id": rid, "detections": dummy_detections(seed, width, height)}
        if op == "segment":
            prompts = request.get("prompts")
            if not isinstance(prompts, list) or not all(
                isinstance(p, list) and len(p) == 4 and all(_plain_int(v) for v in p)
                for p in prompts
            ):
                return protocol.error_response(rid, protocol.ERROR_MALFORMED, "bad prompts element")
            return {"request_id": rid, "masks": dummy_masks(seed, width, height, prompts)}
        mask_obj = request.get("mask")
        if (
            not isinstance(mask_obj, dict)
            or not _plain_int(mask_obj.get("width"))
            or not _plain_int(mask_obj.get("height"))
            or not isinstance(mask_obj.get("counts"), list)
            or not all(_plain_int(c) for c in mask_obj["counts"])
        ):
            return protocol.error_response(rid, protocol.ERROR_MALFORMED, "bad mask element")
        try:
            mask = protocol.parse_mask(mask_obj)
        except protocol.ProtocolError:
            return protocol.error_response(rid, protocol.ERROR_MALFORMED, "bad mask element")
        if (mask.width, mask.height) != (width, height):
            return protocol.error_response(
                rid, protocol.ERROR_MALFORMED, "mask dimensions do not match image"
            )
        result = dummy_classification(seed, mask)
        if "error" in result:
            return protocol.error_response(
                rid, result["error"]["code"], result["error"]["message"]
            )
        return {
            "request_id": rid,
            "genus": result["genus"],
            "confidence": result["confidence"],
            "alternates": result["alternates"],
        }

    return handle
