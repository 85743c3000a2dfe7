"""Deterministic synthetic mannequin asset (~2k vertices, 24 joints).

Stands on y = 0, faces +x, +y up, left side toward +z. Built from capsule
tubes around each bone so the whole test suite runs without any licensed
body-model data. Geometry is procedural and reproducible bit-for-bit.
"""
from __future__ import annotations

import numpy as np

from .body import BodyModelAsset

JOINTS = [
    # name, parent, rest position (x, y, z)
    ("pelvis", -1, (0.00, 0.95, 0.00)),
    ("spine1", 0, (0.00, 1.05, 0.00)),
    ("spine2", 1, (0.00, 1.15, 0.00)),
    ("chest", 2, (0.00, 1.30, 0.00)),
    ("neck", 3, (0.00, 1.45, 0.00)),
    ("head", 4, (0.00, 1.55, 0.00)),
    ("left_collar", 3, (0.00, 1.40, 0.08)),
    ("left_shoulder", 6, (0.00, 1.40, 0.18)),
    ("left_elbow", 7, (0.00, 1.12, 0.22)),
    ("left_wrist", 8, (0.00, 0.86, 0.24)),
    ("left_hand", 9, (0.00, 0.74, 0.25)),
    ("right_collar", 3, (0.00, 1.40, -0.08)),
    ("right_shoulder", 11, (0.00, 1.40, -0.18)),
    ("right_elbow", 12, (0.00, 1.12, -0.22)),
    ("right_wrist", 13, (0.00, 0.86, -0.24)),
    ("right_hand", 14, (0.00, 0.74, -0.25)),
    ("left_hip", 0, (0.00, 0.90, 0.10)),
    ("left_knee", 16, (0.00, 0.50, 0.10)),
    ("left_ankle", 17, (0.00, 0.08, 0.10)),
    ("left_toe", 18, (0.14, 0.04, 0.10)),
    ("right_hip", 0, (0.00, 0.90, -0.10)),
    ("right_knee", 20, (0.00, 0.50, -0.10)),
    ("right_ankle", 21, (0.00, 0.08, -0.10)),
    ("right_toe", 22, (0.14, 0.04, -0.10)),
]

# Tube radius per bone (keyed by child joint name). The foot tubes reach
# exactly y = 0 so the rest template stands on the ground plane.
_RADII = {
    "spine1": 0.115,
    "spine2": 0.115,
    "chest": 0.125,
    "neck": 0.05,
    "head": 0.10,
    "left_collar": 0.05,
    "left_shoulder": 0.05,
    "left_elbow": 0.046,
    "left_wrist": 0.038,
    "left_hand": 0.034,
    "right_collar": 0.05,
    "right_shoulder": 0.05,
    "right_elbow": 0.046,
    "right_wrist": 0.038,
    "right_hand": 0.034,
    "left_hip": 0.075,
    "left_knee": 0.068,
    "left_ankle": 0.055,
    "left_toe": 0.04,
    "right_hip": 0.075,
    "right_knee": 0.068,
    "right_ankle": 0.055,
    "right_toe": 0.04,
}

_RING_SIDES = 10
_RING_SPACING = 0.028  # m between rings along a bone
_BLEND_FRACTION = 0.35  # trailing fraction of a bone blended toward the child joint


def _frame_for_axis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors orthogonal to `axis` (deterministic)."""
    ref = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 0.0, 1.0])
    u = np.cross(axis, ref)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    v /= np.linalg.norm(v)
    return u, v


def build_mannequin() -> BodyModelAsset:
    """Build the synthetic mannequin asset."""
    names = [j[0] for j in JOINTS]
    parents = np.array([j[1] for j in JOINTS], dtype=np.int64)
    rest = np.array([j[2] for j in JOINTS], dtype=np.float64)
    n_joints = len(JOINTS)

    vertices: list[np.ndarray] = []
    weights: list[np.ndarray] = []
    faces: list[tuple[int, int, int]] = []
    foot_ids: list[int] = []

    angles = 2.0 * np.pi * np.arange(_RING_SIDES) / _RING_SIDES
    cos_a, sin_a = np.cos(angles), np.sin(angles)

    for child in range(n_joints):
        parent = int(parents[child])
        if parent < 0:
            continue
        a, b = rest[parent], rest[child]
        axis = b - a
        length = float(np.linalg.norm(axis))
        axis = axis / length
        u, v = _frame_for_axis(axis)
        radius = _RADII[names[child]]
        n_rings = max(3, int(round(length / _RING_SPACING)) + 1)
        # head bone gets a bulged cap instead of a bare tube end
        is_head = names[child] == "head"
        base = len(vertices)
        for r in range(n_rings):
            t = r / (n_rings - 1)
            center = a + t * length * axis
            ring_r = radius
            if is_head:
                ring_r = radius * (0.55 + 0.9 * np.sin(np.pi * min(1.0, 0.15 + 0.85 * t)))
            ring = center[None, :] + ring_r * (cos_a[:, None] * u[None, :] + sin_a[:, None] * v[None, :])
            # blend the trailing end of the bone into the child joint
            blend_t = max(0.0, (t - (1.0 - _BLEND_FRACTION)) / _BLEND_FRACTION)
            w_child = 0.5 * blend_t
            row = np.zeros(n_joints)
            row[parent] = 1.0 - w_child
            row[child] = w_child
            for k in range(_RING_SIDES):
                vertices.append(ring[k])
                weights.append(row)
        for r in range(n_rings - 1):
            for k in range(_RING_SIDES):
                k2 = (k + 1) % _RING_SIDES
                i00 = base + r * _RING_SIDES + k
                i01 = base + r * _RING_SIDES + k2
                i10 = base + (r + 1) * _RING_SIDES + k
                i11 = base + (r + 1) * _RING_SIDES + k2
                faces.append((i00, i10, i01))
                faces.append((i01, i10, i11))
        if "toe" in names[child] or "ankle" in names[child]:
            foot_ids.extend(range(base, len(vertices)))

    template = np.array(vertices)
    weight_mat = np.array(weights)
    weight_mat /= weight_mat.sum(axis=1, keepdims=True)
    face_arr = np.array(faces, dtype=np.int64)

    # drop to the ground plane so the rest template has min y = 0 exactly
    drop = template[:, 1].min()
    template[:, 1] -= drop
    rest = rest.copy()
    rest[:, 1] -= drop
    sole_ids = np.array(
        sorted(i for i in set(foot_ids) if template[i, 1] < 0.03), dtype=np.int64
    )

    # child template: global 0.55 scale about the ground with an enlarged head
    head_center = rest[5]
    child_template = template * 0.55
    d = np.linalg.norm(template - head_center, axis=1)
    bulge = np.exp(-(d / 0.16) ** 2)[:, None]
    child_template = child_template + bulge * (template - head_center) * 0.35
    child_template[:, 1] -= child_template[:, 1].min()

    shape_dirs = _shape_directions(template)
    colors = _normalized_colors(template)

    return BodyModelAsset(
        template_vertices=template,
        faces=face_arr,
        joint_rest_positions=rest,
        joint_parents=parents,
        skinning_weights=weight_mat,
        semantic_vertex_colors=colors,
        hand_joint_ids=(9, 14),
        shape_directions=shape_dirs,
        child_template_vertices=child_template,
        foot_vertex_ids=sole_ids,
        finger_joint_ids=None,
        joint_names=tuple(names),
    )


def _shape_directions(template: np.ndarray, count: int = 10) -> np.ndarray:
    """Smooth synthetic blend-shape directions: height, girth, then low-frequency bumps."""
    v = template
    dirs = np.zeros((v.shape[0], 3, count))
    dirs[:, 1, 0] = 0.10 * v[:, 1]  # taller
    dirs[:, 0, 1] = 0.08 * v[:, 0]  # wider front-back
    dirs[:, 2, 1] = 0.08 * v[:, 2]  # wider side-side
    for s in range(2, count):
        freq = 1.5 + 0.9 * s
        phase = 0.61 * s
        dirs[:, 0, s] = 0.01 * np.sin(freq * v[:, 1] + phase)
        dirs[:, 1, s] = 0.008 * np.cos(freq * v[:, 0] - phase)
        dirs[:, 2, s] = 0.01 * np.sin(freq * v[:, 2] + 2.0 * phase)
    return dirs


def _normalized_colors(template: np.ndarray) -> np.ndarray:
    """Per-vertex rgb from min-max normalized rest coordinates."""
    lo = template.min(axis=0)
    hi = template.max(axis=0)
    return (template - lo) / np.where(hi - lo > 0, hi - lo, 1.0)
