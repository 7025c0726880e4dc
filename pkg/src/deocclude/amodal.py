"""Ordering-grounded amodal completion.

The full hidden extent of an object can lie under objects that do not touch
it directly, so the eraser for amodal completion is the union of modal masks
of ALL ancestors in the occlusion graph (every node with a directed path to
the target), not just direct occluders. Ancestor search is a reverse BFS
with a visited set, so cycles terminate; a node is never its own ancestor.
"""

from __future__ import annotations

import logging
from collections import deque

import numpy as np

from . import masks as mk
from .errors import LookupError_
from .ordering import OcclusionGraph

log = logging.getLogger(__name__)


def ancestors(graph: OcclusionGraph, node) -> set:
    """All nodes with a directed occlusion path to `node` (node excluded)."""
    if node not in graph.nodes:
        raise LookupError_(f"unknown node {node}")
    incoming = {}
    for i, j in graph.edges:
        incoming.setdefault(j, []).append(i)
    seen = {node}
    out = set()
    queue = deque([node])
    while queue:
        cur = queue.popleft()
        for parent in incoming.get(cur, ()):
            if parent not in seen:
                seen.add(parent)
                out.add(parent)
                queue.append(parent)
    return out


def amodal_complete_og(completer, modals, graph: OcclusionGraph, node, context=None) -> np.ndarray:
    """One-step completion with eraser = union of ancestors' modal masks."""
    anc = ancestors(graph, node)
    modal = modals[node]
    if not anc:
        return modal.copy()
    eraser = np.zeros_like(modal)
    for a in anc:
        eraser |= modals[a]
    return completer.complete_mask(modal, eraser, context)


def amodal_complete_og_iterative(completer, modals, graph: OcclusionGraph, node,
                                 context=None, max_rounds: int = 8) -> np.ndarray:
    """Comparison mode: complete against one ancestor at a time until stable."""
    anc = sorted(ancestors(graph, node))
    current = modals[node].copy()
    for _ in range(max_rounds):
        before = current
        for a in anc:
            current = completer.complete_mask(current, modals[a], context)
        if np.array_equal(before, current):
            break
    return current


def amodal_complete_nog(completer, modals, node, context=None, dilation_radius: int = 1) -> np.ndarray:
    """Ablation: eraser = union of ALL neighbors' modal masks, ordering ignored."""
    modal = modals[node]
    eraser = np.zeros_like(modal)
    found = False
    for i, m in enumerate(modals):
        if i == node:
            continue
        if mk.are_neighbors(modal, m, dilation_radius):
            eraser |= m
            found = True
    if not found:
        return modal.copy()
    return completer.complete_mask(modal, eraser, context)


def amodal_iou(pred: np.ndarray, gt: np.ndarray) -> float | None:
    """IoU of one predicted/true amodal pair; None when both are empty."""
    union_area = mk.area(pred | gt)
    if union_area == 0:
        return None
    return mk.area(pred & gt) / union_area


def amodal_miou(predicted, gt_amodals) -> float:
    """Mean IoU over aligned object lists; empty-union objects are skipped."""
    vals = []
    for k, (p, g) in enumerate(zip(predicted, gt_amodals)):
        iou = amodal_iou(p, g)
        if iou is None:
            log.warning("object %d skipped in mIoU: empty prediction and ground truth", k)
            continue
        vals.append(iou)
    return float(np.mean(vals)) if vals else 0.0
