import numpy as np
import pytest

from worldmotion.body import BodyModelAsset, FramePose
from worldmotion.mannequin import build_mannequin


@pytest.fixture(scope="session")
def mannequin():
    return build_mannequin()


@pytest.fixture(scope="session")
def asset_file(tmp_path_factory, mannequin):
    from worldmotion.body import save_asset

    path = tmp_path_factory.mktemp("asset") / "mannequin.body.bin"
    save_asset(path, mannequin)
    return path


@pytest.fixture(scope="session")
def scene_bundle_dir(tmp_path_factory, mannequin):
    """A synthetic walking-scene bundle on disk (48 frames, wobbling speed)."""
    from worldmotion.synthetic import make_bundle_dir

    path = tmp_path_factory.mktemp("scene") / "bundle"
    make_bundle_dir(path, mannequin, n_frames=48, speed_wobble=0.3)
    return path


def redraw_keypoints(bundle, every: int = 1):
    """Keypoints tracing the scene's own root ground track (the identity redraw)."""
    from worldmotion.render import project_vertices
    from worldmotion.trajectory import Keypoint

    roots = bundle.body_sequence.translations()
    ground = roots.copy()
    ground[:, 1] = 0.0
    uv, _, ok = project_vertices(ground, bundle.camera)
    assert ok.all()
    n = len(uv)
    indices = sorted(set(range(0, n, every)) | {n - 1})
    return tuple(Keypoint(u=float(uv[i, 0]), v=float(uv[i, 1]), frame=i) for i in indices)


def make_two_bone_asset():
    """Minimal 3-joint chain (root -> elbow -> tip) with one vertex per joint."""
    rest = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    template = np.array([[0.0, 0.2, 0.0], [1.0, 0.2, 0.0], [2.0, 0.2, 0.0]])
    weights = np.eye(3)
    return BodyModelAsset(
        template_vertices=template,
        faces=np.array([[0, 1, 2]], dtype=np.int64),
        joint_rest_positions=rest,
        joint_parents=np.array([-1, 0, 1], dtype=np.int64),
        skinning_weights=weights,
        semantic_vertex_colors=np.zeros((3, 3)),
        hand_joint_ids=(2, 2),
        joint_names=("root", "elbow", "tip"),
    )


def rest_pose(asset) -> FramePose:
    return FramePose.rest(asset)


@pytest.fixture
def two_bone():
    return make_two_bone_asset()
