"""Parametric skinned body: shape blending, forward kinematics, linear blend skinning.

The asset is an immutable bundle of template geometry, a joint tree and
skinning weights. Pose parameters follow the usual parametric-body split:
global translation and orientation, per-joint body pose, shape coefficients
and hand pose. All outputs are plain numpy arrays in meters.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ValidationError
from .io_formats import load_arrays, save_arrays, save_arrays_json
from .rotations import axis_angle_to_matrix

ROOT_PARENT = -1
WEIGHT_ROW_TOL = 1e-6


@dataclass(frozen=True)
class BodyModelAsset:
    """Immutable skinned-body asset.

    The template stands on the ground plane (min y = 0), faces +x with +y up.
    `joint_parents` uses -1 for the single root. `finger_joint_ids`, when
    present, lists the joints driven by hand pose (left 15 rows then right 15);
    every other non-root joint is driven by a body-pose row, in joint-id order.
    """

    template_vertices: np.ndarray  # (V, 3) m, rest pose
    faces: np.ndarray  # (F, 3) int
    joint_rest_positions: np.ndarray  # (J, 3) m
    joint_parents: np.ndarray  # (J,) int, root = -1
    skinning_weights: np.ndarray  # (V, J), rows sum to 1
    semantic_vertex_colors: np.ndarray  # (V, 3) in [0, 1]
    hand_joint_ids: tuple[int, int]  # (left wrist, right wrist)
    shape_directions: np.ndarray | None = None  # (V, 3, S) m per unit coefficient
    child_template_vertices: np.ndarray | None = None  # (V, 3) m
    foot_vertex_ids: np.ndarray | None = None  # subset used for grounding
    finger_joint_ids: np.ndarray | None = None  # joints driven by hand pose
    pose_corrective_directions: np.ndarray | None = None  # (V, 3, 9*(J-1)), learned data
    joint_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        v, j = self.vertex_count, self.joint_count
        w = self.skinning_weights
        if w.shape != (v, j):
            raise ValidationError(f"skinning weights shape {w.shape} != ({v}, {j})")
        if (w < -WEIGHT_ROW_TOL).any():
            raise ValidationError("skinning weights must be non-negative")
        rowsum = w.sum(axis=1)
        if np.abs(rowsum - 1.0).max() > WEIGHT_ROW_TOL:
            raise ValidationError("each skinning-weight row must sum to 1 within 1e-6")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= v):
            raise ValidationError("face indices out of range")
        parents = self.joint_parents
        roots = np.flatnonzero(parents == ROOT_PARENT)
        if len(roots) != 1:
            raise ValidationError(f"joint tree must have exactly one root, found {len(roots)}")
        if any(parents[i] >= i for i in range(j) if parents[i] != ROOT_PARENT):
            raise ValidationError("joint parents must precede children (topological order)")
        if self.child_template_vertices is not None and self.child_template_vertices.shape != (v, 3):
            raise ValidationError("child template must match the template vertex count")
        for wrist in self.hand_joint_ids:
            if not 0 <= wrist < j:
                raise ValidationError(f"hand joint id {wrist} out of range")

    @property
    def vertex_count(self) -> int:
        return self.template_vertices.shape[0]

    @property
    def joint_count(self) -> int:
        return self.joint_rest_positions.shape[0]

    @property
    def root_joint(self) -> int:
        return int(np.flatnonzero(self.joint_parents == ROOT_PARENT)[0])

    @property
    def shape_count(self) -> int:
        return 0 if self.shape_directions is None else self.shape_directions.shape[2]

    @property
    def body_joint_ids(self) -> np.ndarray:
        """Non-root joints driven by body-pose rows, in joint-id order."""
        fingers = set() if self.finger_joint_ids is None else set(int(i) for i in self.finger_joint_ids)
        return np.array(
            [j for j in range(self.joint_count) if j != self.root_joint and j not in fingers],
            dtype=np.int64,
        )

    @property
    def body_joint_count(self) -> int:
        return len(self.body_joint_ids)

    def joint_subtree(self, joint_id: int) -> np.ndarray:
        """All joint ids in the subtree rooted at `joint_id` (inclusive)."""
        keep = {int(joint_id)}
        for j in range(self.joint_count):
            if int(self.joint_parents[j]) in keep:
                keep.add(j)
        return np.array(sorted(keep), dtype=np.int64)

    def vertices_for_joints(self, joint_ids: Sequence[int], threshold: float = 0.5) -> np.ndarray:
        """Vertex ids whose summed skinning weight on `joint_ids` exceeds `threshold`."""
        total = self.skinning_weights[:, np.asarray(joint_ids, dtype=np.int64)].sum(axis=1)
        return np.flatnonzero(total > threshold)


@dataclass(frozen=True)
class FramePose:
    """Pose parameters of one frame.

    `expression` is an opaque payload carried through unchanged; it is never
    interpreted. `child_factor` interpolates toward the child template.
    """

    translation: np.ndarray  # (3,) m
    global_orientation: np.ndarray  # (3,) axis-angle rad
    body_pose: np.ndarray  # (J_body, 3) axis-angle rad
    shape: np.ndarray  # (S,)
    hand_pose: np.ndarray  # (2, 15, 3) axis-angle rad
    expression: Any = None
    child_factor: float = 0.0

    def __post_init__(self):
        for name in ("translation", "global_orientation", "body_pose", "shape", "hand_pose"):
            arr = getattr(self, name)
            if not np.isfinite(arr).all():
                raise ValidationError(f"pose field {name} contains non-finite values")
        if not 0.0 <= self.child_factor <= 1.0:
            raise ValidationError(f"child_factor {self.child_factor} outside [0, 1]")

    def validate_for(self, asset: BodyModelAsset) -> None:
        if self.body_pose.shape != (asset.body_joint_count, 3):
            raise ValidationError(
                f"body pose shape {self.body_pose.shape} != ({asset.body_joint_count}, 3)"
            )
        if self.shape.shape != (asset.shape_count,):
            raise ValidationError(f"shape length {self.shape.shape} != ({asset.shape_count},)")

    @staticmethod
    def rest(asset: BodyModelAsset) -> "FramePose":
        return FramePose(
            translation=np.zeros(3),
            global_orientation=np.zeros(3),
            body_pose=np.zeros((asset.body_joint_count, 3)),
            shape=np.zeros(asset.shape_count),
            hand_pose=np.zeros((2, 15, 3)),
        )

    def with_translation(self, translation: np.ndarray) -> "FramePose":
        return replace(self, translation=np.asarray(translation, dtype=np.float64))


@dataclass(frozen=True)
class MeshFrame:
    """Skinned vertices of one frame plus a reference to the asset's faces."""

    vertices: np.ndarray  # (V, 3) m
    faces: np.ndarray  # (F, 3) int, shared with the asset


def apply_shape(asset: BodyModelAsset, shape: np.ndarray, child_factor: float = 0.0) -> np.ndarray:
    """Shaped template: child-template interpolation first, then shape offsets.

    result = lerp(template, child_template, child_factor) + sum_s shape[s] * dirs[..., s]
    """
    shape = np.asarray(shape, dtype=np.float64)
    if shape.shape != (asset.shape_count,):
        raise ValidationError(f"shape vector length {shape.shape} != ({asset.shape_count},)")
    if not 0.0 <= child_factor <= 1.0:
        raise ValidationError(f"child_factor {child_factor} outside [0, 1]")
    base = asset.template_vertices
    if child_factor > 0.0:
        if asset.child_template_vertices is None:
            raise ValidationError("child_factor > 0 but the asset has no child template")
        base = (1.0 - child_factor) * base + child_factor * asset.child_template_vertices
    if asset.shape_count and shape.any():
        base = base + np.einsum("vds,s->vd", asset.shape_directions, shape)
    return np.array(base, dtype=np.float64)


def local_rotations(asset: BodyModelAsset, pose: FramePose) -> np.ndarray:
    """Per-joint local rotation matrices (J, 3, 3) assembled from the pose layout."""
    pose.validate_for(asset)
    aa = np.zeros((asset.joint_count, 3))
    aa[asset.root_joint] = pose.global_orientation
    aa[asset.body_joint_ids] = pose.body_pose
    if asset.finger_joint_ids is not None and len(asset.finger_joint_ids):
        flat = pose.hand_pose.reshape(-1, 3)
        ids = np.asarray(asset.finger_joint_ids, dtype=np.int64)
        aa[ids] = flat[: len(ids)]
    return axis_angle_to_matrix(aa)


def forward_kinematics(asset: BodyModelAsset, pose: FramePose) -> tuple[np.ndarray, np.ndarray]:
    """Global rigid transform per joint.

    Returns (rotations (J, 3, 3), translations (J, 3)) of the affine maps
    G_j : v -> R_j v + t_j expressed relative to the rest pose, so the
    zero pose yields G_j = (I, translation). Joint j's world position is
    G_j(rest_j).
    """
    locals_ = local_rotations(asset, pose)
    rest = asset.joint_rest_positions
    J = asset.joint_count
    R = np.empty((J, 3, 3))
    t = np.empty((J, 3))
    root = asset.root_joint
    # Rotation pivots at each joint's rest position; the root adds gamma.
    R[root] = locals_[root]
    t[root] = pose.translation + rest[root] - locals_[root] @ rest[root]
    for j in range(J):
        p = int(asset.joint_parents[j])
        if p == ROOT_PARENT:
            continue
        R[j] = R[p] @ locals_[j]
        # local map L_j : v -> R_loc (v - rest_j) + rest_j, composed onto parent
        local_t = rest[j] - locals_[j] @ rest[j]
        t[j] = R[p] @ local_t + t[p]
    return R, t


def joint_positions(asset: BodyModelAsset, pose: FramePose) -> np.ndarray:
    """World position of every joint (J, 3)."""
    R, t = forward_kinematics(asset, pose)
    return np.einsum("jab,jb->ja", R, asset.joint_rest_positions) + t


def skin_vertices(asset: BodyModelAsset, pose: FramePose) -> MeshFrame:
    """Linear blend skinning of the shaped template under the pose.

    When the asset carries learned pose correctives, they are added to the
    shaped template before skinning, driven by the flattened deviation of
    each non-root local rotation from the identity; absent correctives are
    simply skipped.
    """
    shaped = apply_shape(asset, pose.shape, pose.child_factor)
    if asset.pose_corrective_directions is not None:
        locals_ = local_rotations(asset, pose)
        non_root = [j for j in range(asset.joint_count) if j != asset.root_joint]
        feature = (locals_[non_root] - np.eye(3)).reshape(-1)
        shaped = shaped + asset.pose_corrective_directions @ feature
    R, t = forward_kinematics(asset, pose)
    W = asset.skinning_weights
    blended_R = np.einsum("vj,jab->vab", W, R)
    blended_t = W @ t
    out = np.einsum("vab,vb->va", blended_R, shaped) + blended_t
    return MeshFrame(vertices=out, faces=asset.faces)


def chain_global_rotation(asset: BodyModelAsset, pose: FramePose, joint_id: int) -> np.ndarray:
    """Product of local rotations from the root down to `joint_id` (inclusive)."""
    if not 0 <= joint_id < asset.joint_count:
        raise ValidationError(f"joint id {joint_id} out of range")
    locals_ = local_rotations(asset, pose)
    chain = []
    j = int(joint_id)
    while j != ROOT_PARENT:
        chain.append(j)
        j = int(asset.joint_parents[j])
    out = np.eye(3)
    for j in reversed(chain):
        out = out @ locals_[j]
    return out


# ---------------------------------------------------------------------------
# Asset file I/O
# ---------------------------------------------------------------------------

def save_asset(path: str | Path, asset: BodyModelAsset, json_variant: bool = False) -> None:
    """Write an asset to the array container (or its JSON twin)."""
    arrays = {
        "template_vertices": asset.template_vertices,
        "faces": asset.faces,
        "joint_rest_positions": asset.joint_rest_positions,
        "joint_parents": asset.joint_parents,
        "skinning_weights": asset.skinning_weights,
        "semantic_vertex_colors": asset.semantic_vertex_colors,
    }
    if asset.shape_directions is not None:
        arrays["shape_directions"] = asset.shape_directions
    if asset.child_template_vertices is not None:
        arrays["child_template_vertices"] = asset.child_template_vertices
    if asset.foot_vertex_ids is not None:
        arrays["foot_vertex_ids"] = asset.foot_vertex_ids
    if asset.finger_joint_ids is not None:
        arrays["finger_joint_ids"] = asset.finger_joint_ids
    if asset.pose_corrective_directions is not None:
        arrays["pose_corrective_directions"] = asset.pose_corrective_directions
    meta = {
        "kind": "body-asset/1",
        "hand_joint_ids": [int(i) for i in asset.hand_joint_ids],
        "joint_names": list(asset.joint_names),
    }
    if json_variant or str(path).endswith(".json"):
        save_arrays_json(path, arrays, meta)
    else:
        save_arrays(path, arrays, meta)


def load_asset(path: str | Path) -> BodyModelAsset:
    arrays, meta = load_arrays(path)
    if meta.get("kind") != "body-asset/1":
        raise ValidationError(f"{path}: not a body asset (kind={meta.get('kind')!r})")

    def opt(name):
        return arrays.get(name)

    return BodyModelAsset(
        template_vertices=arrays["template_vertices"],
        faces=arrays["faces"].astype(np.int64),
        joint_rest_positions=arrays["joint_rest_positions"],
        joint_parents=arrays["joint_parents"].astype(np.int64).reshape(-1),
        skinning_weights=arrays["skinning_weights"],
        semantic_vertex_colors=arrays["semantic_vertex_colors"],
        hand_joint_ids=tuple(int(i) for i in meta["hand_joint_ids"]),
        shape_directions=opt("shape_directions"),
        child_template_vertices=opt("child_template_vertices"),
        foot_vertex_ids=None if opt("foot_vertex_ids") is None else arrays["foot_vertex_ids"].astype(np.int64).reshape(-1),
        finger_joint_ids=None if opt("finger_joint_ids") is None else arrays["finger_joint_ids"].astype(np.int64).reshape(-1),
        pose_corrective_directions=opt("pose_corrective_directions"),
        joint_names=tuple(meta.get("joint_names", ())),
    )
