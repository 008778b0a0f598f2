"""Backend wire protocol v1: newline-delimited JSON request/response pairs.

One message per line. Requests carry ``request_id``, ``op`` and
``protocol_version``; responses echo the ``request_id`` and carry either
the op-specific payload or an ``error`` object. Key order is fixed so that
conforming implementations can be compared byte for byte.
"""

from __future__ import annotations

import json
from typing import Any, Sequence

from .model import BoundingBox, ImageRef, RleMask

PROTOCOL_VERSION = 1

OPS = ("detect", "segment", "classify")

ERROR_VERSION = "version"
ERROR_UNSUPPORTED_OP = "unsupported_op"
ERROR_MALFORMED = "malformed"


class ProtocolError(RuntimeError):
    """A message violated the wire contract; carries an excerpt of the payload."""

    def __init__(self, message: str, payload: Any = None):
        excerpt = ""
        if payload is not None:
            text = payload if isinstance(payload, str) else json.dumps(payload, default=str)
            excerpt = f" (payload: {text[:200]})"
        super().__init__(f"{message}{excerpt}")
        self.payload = payload


def encode_line(message: dict) -> str:
    """Compact single-line JSON, the only accepted framing."""
    return json.dumps(message, separators=(",", ":"))


def image_payload(image: ImageRef, png_base64: str = "") -> dict:
    return {
        "id": image.id,
        "width": image.width,
        "height": image.height,
        "png_base64": png_base64,
    }


def mask_payload(mask: RleMask) -> dict:
    return {"width": mask.width, "height": mask.height, "counts": list(mask.counts)}


def detect_request(request_id: str, image: dict) -> dict:
    return {
        "request_id": request_id,
        "op": "detect",
        "protocol_version": PROTOCOL_VERSION,
        "image": image,
    }


def segment_request(request_id: str, image: dict, prompts: Sequence[Sequence[int]]) -> dict:
    return {
        "request_id": request_id,
        "op": "segment",
        "protocol_version": PROTOCOL_VERSION,
        "image": image,
        "prompts": [list(p) for p in prompts],
    }


def classify_request(request_id: str, image: dict, mask: dict) -> dict:
    return {
        "request_id": request_id,
        "op": "classify",
        "protocol_version": PROTOCOL_VERSION,
        "image": image,
        "mask": mask,
    }


def error_response(request_id: str, code: str, message: str) -> dict:
    return {"request_id": request_id, "error": {"code": code, "message": message}}


def _require(obj: dict, key: str, payload: Any) -> Any:
    if key not in obj:
        raise ProtocolError(f"response missing {key!r}", payload)
    return obj[key]


def check_reply(request: dict, response: Any) -> dict:
    """Validate the envelope of a response against its request."""
    if not isinstance(response, dict):
        raise ProtocolError("response is not a JSON object", response)
    rid = _require(response, "request_id", response)
    if rid != request["request_id"]:
        raise ProtocolError(
            f"request_id mismatch: sent {request['request_id']!r}, got {rid!r}", response
        )
    return response


def parse_mask(obj: Any, payload: Any = None) -> RleMask:
    try:
        return RleMask(
            width=int(obj["width"]),
            height=int(obj["height"]),
            counts=tuple(int(c) for c in obj["counts"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"bad mask in response: {exc}", payload or obj) from exc


def parse_box(values: Any, payload: Any = None) -> BoundingBox:
    try:
        x0, y0, x1, y1 = (int(v) for v in values)
        return BoundingBox(x0, y0, x1, y1)
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"bad box in response: {exc}", payload or values) from exc
