import json

import numpy as np
import pytest

from worldmotion.errors import BundleError, DegenerateGeometryError
from worldmotion.ingest import derive_camera_registration, parse_bundle, write_bundle
from worldmotion.rotations import axis_angle_to_matrix
from worldmotion.synthetic import (
    make_scene_camera,
    make_walk_sequence,
    sequence_joint_tracks,
)
from worldmotion.trajectory import world_to_camera
from worldmotion.worldframe import CameraModel


@pytest.fixture()
def scene(mannequin):
    cam = make_scene_camera()
    seq = make_walk_sequence(mannequin, n_frames=12, speed_wobble=0.2)
    jw, jc = sequence_joint_tracks(mannequin, seq, cam)
    return seq, jw, jc, cam


def test_bundle_roundtrip(tmp_path, scene):
    seq, jw, jc, cam = scene
    path = write_bundle(tmp_path / "bundle", seq, jw, jc, cam, extra={"note": "synthetic"})
    bundle = parse_bundle(path)
    assert bundle.frame_count == seq.frame_count
    assert bundle.joint_count == jw.shape[1]
    assert np.array_equal(bundle.joints_world, jw)
    assert np.array_equal(bundle.joints_camera, jc)
    assert np.array_equal(bundle.camera.K, cam.K)
    assert bundle.hands is None
    assert bundle.depth_files is None
    assert bundle.extra == {"note": "synthetic"}
    # write-parse-write produces identical files
    again = write_bundle(tmp_path / "bundle2", bundle.body_sequence, bundle.joints_world,
                         bundle.joints_camera, bundle.camera, extra=bundle.extra)
    for name in ("bundle.json", "body.motion.json", "camera.json"):
        assert (path / name).read_bytes() == (again / name).read_bytes()


def test_bundle_minimal_has_absent_optionals(tmp_path, scene):
    seq, jw, jc, cam = scene
    path = write_bundle(tmp_path / "b", seq, jw, jc, cam)
    bundle = parse_bundle(path)
    assert bundle.hands is None and bundle.depth_files is None and bundle.depth_focal is None


def test_bundle_depth_maps(tmp_path, scene):
    seq, jw, jc, cam = scene
    depth = [np.full((cam.height // 8, cam.width // 8), 3.0, dtype=np.float32)] * seq.frame_count
    path = write_bundle(tmp_path / "b", seq, jw, jc, cam, depth_maps=depth, depth_focal=611.0)
    bundle = parse_bundle(path)
    assert bundle.depth_focal == 611.0
    assert len(bundle.depth_files) == seq.frame_count


def test_bundle_frame_count_mismatch_named(tmp_path, scene):
    seq, jw, jc, cam = scene
    path = write_bundle(tmp_path / "b", seq, jw, jc, cam)
    # truncate the world joints to provoke the mismatch
    from worldmotion.io_formats import save_arrays

    save_arrays(path / "joints_world.bin", {"joints": jw[:-2]}, {"kind": "joints/1"})
    with pytest.raises(BundleError) as err:
        parse_bundle(path)
    assert "joints_world.bin" in str(err.value)
    assert str(seq.frame_count) in str(err.value)
    assert str(seq.frame_count - 2) in str(err.value)


def test_bundle_missing_track(tmp_path, scene):
    seq, jw, jc, cam = scene
    path = write_bundle(tmp_path / "b", seq, jw, jc, cam)
    (path / "camera.json").unlink()
    with pytest.raises(BundleError, match="camera.json"):
        parse_bundle(path)


def test_bundle_nonfinite_rejected(tmp_path, scene):
    seq, jw, jc, cam = scene
    bad = jc.copy()
    bad[0, 0, 0] = np.nan
    path = write_bundle(tmp_path / "b", seq, jw, bad, cam)
    with pytest.raises(BundleError, match="joints_cam.bin"):
        parse_bundle(path)


def test_bundle_schema_version_required(tmp_path, scene):
    seq, jw, jc, cam = scene
    path = write_bundle(tmp_path / "b", seq, jw, jc, cam)
    (path / "bundle.json").write_text(json.dumps({"other": 1}))
    with pytest.raises(BundleError, match="schema_version"):
        parse_bundle(path)


def test_bundle_hands_count_checked(tmp_path, scene, mannequin):
    from worldmotion.hands import HandEstimate

    seq, jw, jc, cam = scene
    short_track = [
        {"left": HandEstimate(side="left", global_orientation=np.eye(3),
                              hand_pose=np.zeros((15, 3)), confidence=1.0)}
    ]
    path = write_bundle(tmp_path / "b", seq, jw, jc, cam, hands=short_track)
    with pytest.raises(BundleError, match="hands.json"):
        parse_bundle(path)


# ---------------------------------------------------------------------------
# camera registration
# ---------------------------------------------------------------------------

def test_registration_recovers_synthesized_transform(tmp_path, scene, mannequin):
    """Oracle: the camera track was synthesized from a known transform."""
    seq, jw, _, _ = scene
    R_true = axis_angle_to_matrix(np.array([0.1, 0.8, -0.05]))
    T_true = np.array([0.3, -1.1, 4.0])
    base = make_scene_camera()
    cam_true = CameraModel(K=base.K, f1=base.f1, R_w2c=R_true, T_w2c=T_true,
                           width=base.width, height=base.height)
    jc = world_to_camera(jw.reshape(-1, 3), cam_true).reshape(jw.shape)
    # bundle carries identity extrinsics; registration must recover the truth
    blank = CameraModel(K=base.K, f1=base.f1, R_w2c=np.eye(3), T_w2c=np.zeros(3),
                        width=base.width, height=base.height)
    path = write_bundle(tmp_path / "b", seq, jw, jc, blank)
    bundle = parse_bundle(path)
    registered, residual = derive_camera_registration(bundle)
    assert residual < 1e-9
    assert np.abs(registered.camera.R_w2c - R_true).max() < 1e-9
    assert np.abs(registered.camera.T_w2c - T_true).max() < 1e-9


def test_registration_identity_scene(tmp_path, scene):
    seq, jw, _, _ = scene
    base = make_scene_camera()
    blank = CameraModel(K=base.K, f1=base.f1, R_w2c=np.eye(3), T_w2c=np.zeros(3),
                        width=base.width, height=base.height)
    path = write_bundle(tmp_path / "b", seq, jw, jw.copy(), blank)
    bundle = parse_bundle(path)
    registered, residual = derive_camera_registration(bundle)
    assert residual < 1e-12
    assert np.abs(registered.camera.R_w2c - np.eye(3)).max() < 1e-9
    assert np.abs(registered.camera.T_w2c).max() < 1e-9


def test_registration_collinear_joints_error(tmp_path, scene):
    seq, jw, jc, cam = scene
    line = np.zeros_like(jw)
    line[..., 0] = np.linspace(0, 1, jw.shape[0])[:, None]
    path = write_bundle(tmp_path / "b", seq, line, line, cam)
    bundle = parse_bundle(path)
    with pytest.raises(DegenerateGeometryError):
        derive_camera_registration(bundle)
