#!/usr/bin/env python3
"""Record the golden request/response transcript from the reference backend.

Builds 100 deterministic requests covering the three ops plus the error
paths, runs them through the in-process stdio server, and freezes both
sides. Any conforming adapter must reproduce the response lines byte for
byte when fed the request lines.

Usage: python tools/generate_transcript.py  (run from adapter/, with the
main package installed)
"""

from __future__ import annotations

import io
import json
from pathlib import Path

from reef_miner import protocol
from reef_miner.mock_server import serve
from reef_miner.mocks import layout_boxes
from reef_miner.model import ImageRef

SEED = 7
OUT_DIR = Path(__file__).parent.parent / "fixtures"


def image_element(tag: str, width: int, height: int) -> dict:
    return protocol.image_payload(ImageRef(id=f"{tag}-{width}x{height}.png", width=width, height=height))


def mask_element(width: int, height: int, counts: list[int]) -> dict:
    return {"width": width, "height": height, "counts": counts}


def build_requests() -> list[str]:
    lines: list[str] = []
    n = 0

    def add(obj) -> None:
        nonlocal n
        lines.append(obj if isinstance(obj, str) else protocol.encode_line(obj))
        n += 1

    sizes = [
        (100, 100), (64, 48), (33, 17), (1024, 768), (3, 3), (1, 1), (640, 480),
        (17, 251), (2048, 2048), (5, 7), (200, 100), (99, 101), (256, 256), (48, 64),
        (13, 13), (400, 300), (31, 97), (1000, 10), (10, 1000), (77, 77),
        (128, 128), (50, 50), (300, 200), (8, 8), (160, 90), (90, 160), (512, 512),
        (21, 34), (55, 89), (144, 233),
    ]
    for i, (w, h) in enumerate(sizes):  # 30 detect
        add(protocol.detect_request(f"det-{i:03d}", image_element("img", w, h)))

    segment_cases = []
    for i, (w, h) in enumerate(sizes[:18]):  # prompts straight from the layout rule
        boxes = [[x0, y0, x1, y1] for x0, y0, x1, y1, _ in layout_boxes(SEED + i, w, h)]
        segment_cases.append((w, h, boxes))
    segment_cases += [
        (10, 10, []),  # empty prompt list
        (10, 10, [[0, 0, 10, 10]]),  # full frame
        (10, 10, [[0, 0, 11, 10]]),  # out of bounds, per-entry error
        (10, 10, [[-1, 0, 5, 5]]),  # negative corner
        (10, 10, [[3, 3, 3, 8]]),  # empty extent
        (16, 16, [[4, 4, 6, 6], [0, 0, 16, 16], [7, 7, 16, 16]]),
        (9, 9, [[1, 1, 8, 8], [2, 2, 4, 4]]),
        (256, 256, [[0, 0, 2, 2], [254, 254, 256, 256], [100, 7, 200, 207]]),
        (33, 17, [[0, 0, 33, 17], [5, 5, 6, 6]]),
        (5, 7, [[1, 1, 4, 6], [0, 0, 5, 7]]),
        (1, 1, [[0, 0, 1, 1]]),
        (77, 77, [[10, 10, 70, 70], [11, 11, 69, 69], [12, 12, 68, 68]]),
        (2, 2, [[0, 0, 2, 2], [0, 0, 1, 1], [1, 1, 2, 2]]),
        (40, 40, [[0, 20, 40, 21], [20, 0, 21, 40]]),
        (12, 34, [[0, 0, 12, 34], [3, 3, 9, 31]]),
        (100, 100, [[x0, y0, x1, y1] for x0, y0, x1, y1, _ in layout_boxes(SEED, 100, 100)]),
        (64, 48, [[0, 0, 64, 48]]),
    ]
    for i, (w, h, prompts) in enumerate(segment_cases):  # 35 segment
        add(protocol.segment_request(f"seg-{i:03d}", image_element("img", w, h), prompts))

    classify_cases = []
    for i, (w, h) in enumerate(sizes[:15]):
        boxes = layout_boxes(SEED + i, w, h)
        if boxes:
            x0, y0, x1, y1, _ = boxes[0]
        else:
            x0, y0, x1, y1 = 0, 0, max(1, w // 2), max(1, h // 2)
        row_fg = x1 - x0
        counts = [y0 * w + x0]
        if row_fg == w:
            counts.append((y1 - y0) * w)
            trailing = (h - y1) * w
        else:
            gap = w - row_fg
            for _ in range(y1 - y0 - 1):
                counts += [row_fg, gap]
            counts.append(row_fg)
            trailing = (w - x1) + (h - y1) * w
        if trailing:
            counts.append(trailing)
        classify_cases.append((w, h, counts))
    classify_cases += [
        (4, 4, [0, 16]),  # full mask
        (4, 4, [15, 1]),  # single bottom-right pixel
        (4, 4, [0, 1, 14, 1]),  # two corners
        (4, 4, [16]),  # empty mask -> empty_mask error
        (10, 10, [0, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 50]),  # dashed rows
        (7, 3, [0, 21]),
        (3, 7, [10, 1, 9, 1]),
        (100, 100, [5050, 1, 4949]),
        (64, 48, [0, 3072]),
        (33, 17, [280, 1, 280]),
        (1, 1, [0, 1]),
        (2, 3, [1, 4, 1]),
        (50, 50, [0, 1249, 2, 1249]),
        (8, 8, [9, 6, 2, 6, 2, 6, 2, 6, 25]),
        (19, 23, [100, 37, 300]),
    ]
    for i, (w, h, counts) in enumerate(classify_cases):  # 30 classify
        add(
            protocol.classify_request(
                f"cls-{i:03d}", image_element("img", w, h), mask_element(w, h, counts)
            )
        )

    # 5 error-path lines
    bad_version = protocol.detect_request("err-000", image_element("img", 10, 10))
    bad_version["protocol_version"] = 2
    add(bad_version)
    add({"request_id": "err-001", "op": "translate", "protocol_version": 1,
         "image": {"id": "x", "width": 4, "height": 4, "png_base64": ""}})
    add({"request_id": "err-002", "op": "detect", "protocol_version": 1})
    add({"request_id": "err-003", "op": "segment", "protocol_version": 1,
         "image": {"id": "x", "width": 4, "height": 4, "png_base64": ""},
         "prompts": [[0, 0, 2]]})
    add("this line is not json")

    assert len(lines) == 100, len(lines)
    return lines


def main() -> None:
    requests = build_requests()
    out = io.StringIO()
    serve(io.StringIO("\n".join(requests) + "\n"), out, seed=SEED)
    responses = out.getvalue().splitlines()
    assert len(responses) == 100
    for req_line, resp_line in zip(requests, responses):
        try:
            rid = json.loads(req_line).get("request_id", "")
        except json.JSONDecodeError:
            rid = ""
        assert json.loads(resp_line)["request_id"] == (rid if isinstance(rid, str) else "")
    OUT_DIR.mkdir(exist_ok=True)
    (OUT_DIR / "transcript_requests.ndjson").write_text("\n".join(requests) + "\n")
    (OUT_DIR / "transcript_responses.ndjson").write_text("\n".join(responses) + "\n")
    print(f"wrote 100 request/response pairs to {OUT_DIR}")


if __name__ == "__main__":
    main()
