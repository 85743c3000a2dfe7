import numpy as np
import pytest

from worldmotion.bank import MotionClip
from worldmotion.body import load_asset, skin_vertices
from worldmotion.config import EditConfig
from worldmotion.errors import ValidationError
from worldmotion.ingest import parse_bundle
from worldmotion.pipeline import edit_motion, hand_submesh_ids, project_root_path, render_motion
from worldmotion.synthetic import make_walk_sequence
from worldmotion.trajectory import Keypoint, cumulative_arc_length

from conftest import redraw_keypoints


@pytest.fixture(scope="module")
def bundle(scene_bundle_dir):
    return parse_bundle(scene_bundle_dir)


def test_self_edit_identity(bundle, mannequin):
    """Redrawing the original path reproduces the original motion."""
    keypoints = redraw_keypoints(bundle)
    result = edit_motion(bundle, mannequin, keypoints, EditConfig())
    orig = bundle.body_sequence.translations()
    edited = result.sequence.translations()
    assert np.abs(edited - orig).max() < 1e-3
    # orientations survive too
    for a, b in zip(result.sequence.frames, bundle.body_sequence.frames):
        assert np.abs(a.global_orientation - b.global_orientation).max() < 1e-6
    assert result.report["arc"]["rescale_factor"] == pytest.approx(1.0, abs=1e-6)
    assert result.report["registration_residual_m"] < 1e-9
    assert result.report["unprojection_route"] == "ground"


def test_straight_line_trajectory_monotone_arc(bundle, mannequin):
    kps = (Keypoint(u=430.0, v=350.0, frame=0), Keypoint(u=210.0, v=300.0, frame=47))
    result = edit_motion(bundle, mannequin, kps, EditConfig())
    arc = result.trajectory3d.cumulative_arc
    assert (np.diff(arc) >= -1e-12).all()
    assert arc[-1] > 0.5
    assert result.report["degenerate_frames"] == []
    # the edited path lies on the ground plane
    assert np.abs(result.trajectory3d.positions[:, 1]).max() < 1e-12


def test_edit_speed_profile_matches_rescaled_original(bundle, mannequin):
    """Non-uniform source speed carries onto the drawn path (L1, monotone drawn path)."""
    kps = (Keypoint(u=430.0, v=350.0, frame=0), Keypoint(u=210.0, v=300.0, frame=47))
    cfg = EditConfig(heading_smooth_window=1)
    result = edit_motion(bundle, mannequin, kps, cfg)
    src = bundle.body_sequence.translations()
    src[:, 1] = 0.0
    orig_arc = cumulative_arc_length(src, "l1")
    got = np.diff(result.trajectory3d.cumulative_arc)
    want = np.diff(orig_arc) * result.report["arc"]["rescale_factor"]
    assert np.abs(got - want).max() < 1e-6


def test_edit_headings_follow_path(bundle, mannequin):
    kps = (Keypoint(u=430.0, v=350.0, frame=0), Keypoint(u=210.0, v=300.0, frame=47))
    result = edit_motion(bundle, mannequin, kps, EditConfig(heading_smooth_window=1))
    pos = result.trajectory3d.positions
    psi = result.trajectory3d.headings
    for i in range(1, len(pos)):
        dx, dz = pos[i, 0] - pos[i - 1, 0], pos[i, 2] - pos[i - 1, 2]
        if np.hypot(dx, dz) >= 1e-5:
            assert abs(np.arctan2(dz, dx) - psi[i]) < 1e-9


def test_edit_grounds_feet(bundle, mannequin):
    kps = (Keypoint(u=430.0, v=350.0, frame=0), Keypoint(u=210.0, v=300.0, frame=47))
    result = edit_motion(bundle, mannequin, kps, EditConfig())
    for pose in result.sequence.frames[::8]:
        verts = skin_vertices(mannequin, pose).vertices
        low = verts[mannequin.foot_vertex_ids, 1].min()
        assert -1e-9 < low < 0.02


def test_edit_with_clip_substitution(bundle, mannequin):
    clip_seq = make_walk_sequence(mannequin, n_frames=24, speed_wobble=0.0, grounded=False)
    clip = MotionClip(id="walkclip", tags=("walking",), sequence=clip_seq)
    kps = (Keypoint(u=430.0, v=350.0, frame=0), Keypoint(u=210.0, v=300.0, frame=47))
    result = edit_motion(bundle, mannequin, kps, EditConfig(), clip=clip, n_frames=48,
                         blend_window=4)
    assert result.sequence.frame_count == 48
    assert result.report["clip"]["id"] == "walkclip"
    assert result.report["hands"].startswith("skipped")


def test_edit_rejects_out_of_bounds_keypoints(bundle, mannequin):
    kps = (Keypoint(u=-5.0, v=10.0, frame=0), Keypoint(u=100.0, v=100.0, frame=47))
    with pytest.raises(ValidationError):
        edit_motion(bundle, mannequin, kps, EditConfig())


def test_projected_root_path_stays_on_drawn_polyline(bundle, mannequin):
    """The edited path re-projects onto the drawn 2D polyline (pinholes map lines to lines)."""
    kps = (
        Keypoint(u=430.0, v=350.0, frame=0),
        Keypoint(u=330.0, v=330.0, frame=20),
        Keypoint(u=210.0, v=300.0, frame=47),
    )
    result = edit_motion(bundle, mannequin, kps, EditConfig())
    uv = project_root_path(result)

    def dist_to_segment(p, a, b):
        ab = b - a
        t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
        return np.linalg.norm(p - (a + t * ab))

    polyline = [np.array([k.u, k.v]) for k in kps]
    for p in uv:
        d = min(dist_to_segment(p, polyline[i], polyline[i + 1]) for i in range(len(polyline) - 1))
        assert d < 0.5


def test_hand_submeshes_cover_both_hands(mannequin):
    ids = hand_submesh_ids(mannequin)
    assert set(ids) == {"left", "right"}
    assert len(ids["left"]) > 20 and len(ids["right"]) > 20
    # disjoint vertex sets
    assert not set(ids["left"].tolist()) & set(ids["right"].tolist())


def test_depth_route_matches_ground_route(tmp_path, mannequin):
    """Unprojecting through synthetic metric depth maps agrees with the ground fallback.

    The depth maps store the camera-z of each pixel's ground intersection at
    half the pose estimator's focal, so the f2/f1 calibration is exercised.
    """
    from worldmotion.ingest import parse_bundle as _parse, write_bundle as _write
    from worldmotion.synthetic import make_scene_camera, make_walk_sequence, sequence_joint_tracks
    from worldmotion.trajectory import ground_intersect
    from worldmotion.pipeline import scene_world_frame, unproject_trajectory

    cam = make_scene_camera()
    seq = make_walk_sequence(mannequin, n_frames=6)
    jw, jc = sequence_joint_tracks(mannequin, seq, cam)

    # analytic ground-plane depth: camera z of the ray-ground intersection,
    # halved because the depth estimator's focal f2 is half of f1
    f2 = cam.f1 / 2.0
    h, w = cam.height, cam.width
    Kinv = np.linalg.inv(cam.K)
    xs, ys = np.meshgrid(np.arange(w) + 0.5, np.arange(h) + 0.5)
    rays = np.stack([xs, ys, np.ones_like(xs)], axis=-1) @ Kinv.T
    rays_world = rays @ cam.R_w2c.T
    origin = cam.center_world()
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (0.0 - origin[1]) / rays_world[..., 1]
    z_cam = np.where(t > 0, t * rays[..., 2], 1e6)  # camera depth of the ground hit
    depth_map = (z_cam * (cam.f1 / f2)).astype(np.float32)  # what the estimator reports

    bundle_dir = _write(tmp_path / "b", seq, jw, jc, cam,
                        depth_maps=[depth_map] * 6, depth_focal=f2)
    bundle = _parse(bundle_dir)
    frame = scene_world_frame(bundle, cam)

    points2d = np.array([[300.0 + 10 * i, 330.0 + 3 * i] for i in range(6)])
    via_depth, route = unproject_trajectory(points2d, cam, frame,
                                            bundle.depth_files, bundle.depth_focal)
    assert route == "depth"
    via_ground = np.stack([ground_intersect(p, cam, frame) for p in points2d])
    # nearest-pixel depth sampling quantizes to the pixel grid (cm-scale here)
    assert np.abs(via_depth - via_ground).max() < 0.05


def test_render_motion_writes_manifest(tmp_path, bundle, mannequin):
    short = bundle.body_sequence.with_frames(bundle.body_sequence.frames[:2])
    manifest = render_motion(short, mannequin, bundle.camera, (64, 64), tmp_path / "out",
                             EditConfig(workers=1))
    assert manifest["frame_count"] == 2
    assert len(manifest["hashes"]) == 10
    assert (tmp_path / "out" / "manifest.json").exists()
