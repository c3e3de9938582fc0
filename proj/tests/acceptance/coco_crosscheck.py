"""Evaluates exported fixtures with pycocotools and prints per-cell AP as JSON.

Input (argv[1]): {"fixtures": [{"mode", "iou_thresholds", "area_ranges",
"classes", "images", "gts", "dts"}]}, masks as uncompressed column-major RLE.
Output: {"fixtures": [ap[area][class][threshold] or null]} on stdout.
"""
import contextlib
import io
import json
import sys

import numpy as np
from pycocotools import mask as mask_utils
from pycocotools.coco import COCO
from pycocotools.cocoeval import COCOeval


def compressed(seg):
    h, w = seg["size"]
    return mask_utils.frPyObjects({"size": [h, w], "counts": list(seg["counts"])}, h, w)


def make_coco(dataset):
    coco = COCO()
    coco.dataset = dataset
    with contextlib.redirect_stdout(io.StringIO()):
        coco.createIndex()
    return coco


def evaluate(fx):
    mode = fx["mode"]
    images = [{"id": i, "height": h, "width": w} for i, (h, w) in enumerate(fx["images"], start=1)]
    cats = [{"id": c + 1, "name": str(c)} for c in range(fx["classes"])]
    anns = []
    for k, g in enumerate(fx["gts"], start=1):
        seg = compressed(g["mask"])
        x, y, w, h = g["bbox"]
        area = w * h if mode == "bbox" else float(mask_utils.area(seg))
        anns.append({"id": k, "image_id": g["image"] + 1, "category_id": g["class"] + 1,
                     "segmentation": seg, "bbox": [x, y, w, h], "area": area, "iscrowd": 0})
    gt = make_coco({"images": images, "categories": cats, "annotations": anns})

    dts = []
    for d in fx["dts"]:
        entry = {"image_id": d["image"] + 1, "category_id": d["class"] + 1, "score": d["score"]}
        if mode == "bbox":
            entry["bbox"] = list(d["bbox"])
        else:
            entry["segmentation"] = compressed(d["mask"])
        dts.append(entry)
    with contextlib.redirect_stdout(io.StringIO()):
        if dts:
            dt = gt.loadRes(dts)
        else:
            dt = make_coco({"images": images, "categories": cats, "annotations": []})
        ev = COCOeval(gt, dt, mode)
        ev.params.imgIds = [im["id"] for im in images]
        ev.params.catIds = [c["id"] for c in cats]
        ev.params.iouThrs = np.array(fx["iou_thresholds"], dtype=np.float64)
        ev.params.maxDets = [fx.get("max_dets", 1000)]
        ev.params.areaRng = [[lo, hi] for _, lo, hi in fx["area_ranges"]]
        ev.params.areaRngLbl = [name for name, _, _ in fx["area_ranges"]]
        ev.evaluate()
        ev.accumulate()
    prec = ev.eval["precision"]  # [T, R, K, A, M]
    out = []
    for a in range(len(fx["area_ranges"])):
        per_class = []
        for k in range(fx["classes"]):
            row = []
            for t in range(len(fx["iou_thresholds"])):
                p = prec[t, :, k, a, 0]
                row.append(None if np.all(p == -1) else float(np.mean(p)))
            per_class.append(row)
        out.append(per_class)
    return out


def main():
    with open(sys.argv[1]) as f:
        doc = json.load(f)
    json.dump({"fixtures": [evaluate(fx) for fx in doc["fixtures"]]}, sys.stdout)


if __name__ == "__main__":
    main()
