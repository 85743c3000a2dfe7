import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from worldmotion.errors import DegenerateGeometryError, ValidationError
from worldmotion.rotations import axis_angle_to_matrix
from worldmotion.trajectory import (
    DepthSample,
    Keypoint,
    align_speed,
    camera_to_world,
    cumulative_arc_length,
    derive_headings,
    ground_feet,
    ground_intersect,
    ground_shifts,
    heading_rotation,
    interpolate_keypoints,
    load_keypoints,
    save_keypoints,
    unproject_point,
    world_to_camera,
)
from worldmotion.worldframe import CameraModel, build_world_frame

from test_worldframe import make_camera


def make_posed_camera(center, yaw=0.0, pitch=0.0, f=500.0, width=640, height=480):
    """Camera at `center` looking along +z rotated by yaw (about y) then pitch (about x)."""
    R_cam = axis_angle_to_matrix(np.array([0.0, yaw, 0.0])) @ axis_angle_to_matrix(
        np.array([pitch, 0.0, 0.0])
    )
    # column c2w rotation is R_cam; row-stored R_w2c equals it (see CameraModel docs)
    R_w2c = R_cam
    T_w2c = -np.asarray(center, dtype=float) @ R_w2c
    K = np.array([[f, 0.0, width / 2], [0.0, f, height / 2], [0.0, 0.0, 1.0]])
    return CameraModel(K=K, f1=f, R_w2c=R_w2c, T_w2c=T_w2c, width=width, height=height)


# ---------------------------------------------------------------------------
# keypoint interpolation
# ---------------------------------------------------------------------------

def test_interpolate_linear_ramp():
    kps = [Keypoint(0.0, 0.0, frame=0), Keypoint(100.0, 0.0, frame=10)]
    pts = interpolate_keypoints(kps, 11)
    for n in range(11):
        assert np.allclose(pts[n], [10.0 * n, 0.0])


def test_interpolate_constant():
    kps = [Keypoint(5.0, 7.0), Keypoint(5.0, 7.0)]
    pts = interpolate_keypoints(kps, 20)
    assert np.allclose(pts, [5.0, 7.0])


def test_interpolate_uneven_knots_oracle():
    """Oracle: per-segment lerp evaluated by hand."""
    kps = [Keypoint(0.0, 0.0, frame=0), Keypoint(10.0, 20.0, frame=2), Keypoint(40.0, 20.0, frame=8)]
    pts = interpolate_keypoints(kps, 9)

    def lerp(a, b, t):
        return (1 - t) * np.asarray(a) + t * np.asarray(b)

    for n in range(9):
        if n <= 2:
            expected = lerp([0, 0], [10, 20], n / 2)
        else:
            expected = lerp([10, 20], [40, 20], (n - 2) / 6)
        assert np.abs(pts[n] - expected).max() < 1e-12


def test_interpolate_uniform_spacing_without_frames():
    kps = [Keypoint(0.0, 0.0), Keypoint(30.0, 0.0), Keypoint(30.0, 30.0)]
    pts = interpolate_keypoints(kps, 21)
    assert np.allclose(pts[0], [0, 0])
    assert np.allclose(pts[10], [30, 0])
    assert np.allclose(pts[20], [30, 30])


def test_interpolate_errors():
    with pytest.raises(ValidationError):
        interpolate_keypoints([Keypoint(0, 0)], 10)
    with pytest.raises(ValidationError):
        interpolate_keypoints([Keypoint(0, 0, frame=0), Keypoint(1, 1)], 10)
    with pytest.raises(ValidationError):
        interpolate_keypoints([Keypoint(0, 0, frame=5), Keypoint(1, 1, frame=2)], 10)


def test_keypoint_file_roundtrip(tmp_path):
    kps = (Keypoint(1.5, 2.5, frame=0), Keypoint(3.0, 4.0), Keypoint(9.0, 9.0, frame=12))
    path = tmp_path / "traj.json"
    save_keypoints(path, kps)
    assert load_keypoints(path) == kps


# ---------------------------------------------------------------------------
# unprojection (focal-calibrated)
# ---------------------------------------------------------------------------

def test_unproject_principal_point():
    cam = make_camera(f=1000.0)
    out = unproject_point(cam.principal_point, cam, DepthSample(d=5.0, f2=1000.0))
    assert np.abs(out - [0.0, 0.0, 5.0]).max() < 1e-12


def test_unproject_against_inverse_oracle():
    """Oracle: generic 3x3 inverse applied to the homogeneous pixel."""
    K = np.array([[1000.0, 0.0, 320.0], [0.0, 1000.0, 240.0], [0.0, 0.0, 1.0]])
    cam = CameraModel(K=K, f1=1000.0, R_w2c=np.eye(3), T_w2c=np.zeros(3), width=640, height=480)
    out = unproject_point(np.array([820.0, 240.0]), cam, DepthSample(d=4.0, f2=1000.0))
    oracle = np.linalg.inv(K) @ np.array([820.0, 240.0, 1.0]) * 4.0
    assert np.abs(out - oracle).max() < 1e-12
    assert np.abs(out - [2.0, 0.0, 4.0]).max() < 1e-12


def test_unproject_focal_ratio_linearity():
    cam = make_camera(f=750.0)
    p = np.array([100.0, 400.0])
    base = unproject_point(p, cam, DepthSample(d=3.0, f2=750.0))
    doubled = unproject_point(p, cam, DepthSample(d=3.0, f2=1500.0))
    assert np.abs(doubled - 2.0 * base).max() < 1e-12


def test_depth_sample_validation():
    with pytest.raises(ValidationError):
        DepthSample(d=-1.0, f2=500.0)
    with pytest.raises(ValidationError):
        DepthSample(d=1.0, f2=0.0)


# ---------------------------------------------------------------------------
# camera <-> world
# ---------------------------------------------------------------------------

def test_camera_to_world_identity():
    cam = make_camera()
    p = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(camera_to_world(p, cam), p)


def test_camera_to_world_pure_translation():
    cam = make_posed_camera(center=np.zeros(3))
    cam = CameraModel(K=cam.K, f1=cam.f1, R_w2c=np.eye(3), T_w2c=np.array([0.0, 0.0, 5.0]),
                      width=cam.width, height=cam.height)
    assert np.allclose(camera_to_world(np.array([0.0, 0.0, 5.0]), cam), [0.0, 0.0, 0.0])


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    st.lists(st.floats(-3, 3), min_size=3, max_size=3),
    st.lists(st.floats(-5, 5), min_size=3, max_size=3),
)
def test_world_camera_roundtrip(aa, t, x):
    R = axis_angle_to_matrix(np.asarray(aa))
    cam = CameraModel(
        K=make_camera().K, f1=500.0, R_w2c=R, T_w2c=np.asarray(t), width=640, height=480
    )
    x = np.asarray(x)
    assert np.abs(world_to_camera(camera_to_world(x, cam), cam) - x).max() < 1e-12
    assert np.abs(camera_to_world(world_to_camera(x, cam), cam) - x).max() < 1e-12


# ---------------------------------------------------------------------------
# ground intersection
# ---------------------------------------------------------------------------

def world_frame_canonical():
    return build_world_frame(np.zeros(3), np.array([0.0, -1.0, 0.0]), np.array([0.0, 0.0, 1.0]))


def test_ground_intersect_oracle_45deg():
    """Oracle: explicit ray-plane intersection for a camera looking 45 deg down."""
    cam = make_posed_camera(center=[0.0, 2.0, 0.0], pitch=np.pi / 4)
    frame = world_frame_canonical()
    hit = ground_intersect(cam.principal_point, cam, frame)

    origin = np.array([0.0, 2.0, 0.0])
    direction = cam.view_dir_world()
    t = (0.0 - origin[1]) / direction[1]
    oracle = origin + t * direction
    assert np.abs(hit - oracle).max() < 1e-9
    assert np.abs(hit - [0.0, 0.0, 2.0]).max() < 1e-9


def test_ground_intersect_parallel_ray():
    cam = make_posed_camera(center=[0.0, 2.0, 0.0])  # looking horizontally along +z
    frame = world_frame_canonical()
    with pytest.raises(DegenerateGeometryError):
        ground_intersect(cam.principal_point, cam, frame)


def test_ground_intersect_upward_ray():
    cam = make_posed_camera(center=[0.0, 2.0, 0.0], pitch=-np.pi / 4)  # looking up
    frame = world_frame_canonical()
    with pytest.raises(DegenerateGeometryError):
        ground_intersect(cam.principal_point, cam, frame)


@settings(max_examples=50, deadline=None)
@given(st.floats(10, 630), st.floats(250, 470))
def test_ground_intersect_plane_membership(u, v):
    cam = make_posed_camera(center=[0.0, 2.0, 0.0], pitch=np.pi / 5)
    frame = world_frame_canonical()
    hit = ground_intersect(np.array([u, v]), cam, frame)
    assert hit[1] == 0.0


# ---------------------------------------------------------------------------
# arc length
# ---------------------------------------------------------------------------

def test_arc_constant_is_zero():
    pts = np.tile([1.0, 2.0, 3.0], (7, 1))
    assert np.array_equal(cumulative_arc_length(pts, "l1"), np.zeros(7))


def test_arc_axis_aligned_l1():
    pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]])
    assert np.allclose(cumulative_arc_length(pts, "l1"), [0.0, 1.0, 2.0])


def test_arc_l1_vs_l2_diagonal():
    pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 1.0]])
    assert abs(cumulative_arc_length(pts, "l1")[1] - 2.0) < 1e-12
    assert abs(cumulative_arc_length(pts, "l2")[1] - np.sqrt(2.0)) < 1e-12


def test_arc_l2_rigid_invariance():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(30, 3))
    R = axis_angle_to_matrix(rng.normal(size=3))
    moved = pts @ R.T + [4.0, -1.0, 0.5]
    assert np.abs(
        cumulative_arc_length(pts, "l2") - cumulative_arc_length(moved, "l2")
    ).max() < 1e-9


def test_arc_l1_translation_invariance_only():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(30, 3))
    shifted = pts + [4.0, -1.0, 0.5]
    assert np.abs(
        cumulative_arc_length(pts, "l1") - cumulative_arc_length(shifted, "l1")
    ).max() < 1e-12
    # but a generic rotation changes the L1 profile
    R = axis_angle_to_matrix(np.array([0.3, 0.8, -0.2]))
    rotated = pts @ R.T
    assert np.abs(
        cumulative_arc_length(pts, "l1") - cumulative_arc_length(rotated, "l1")
    ).max() > 1e-3


def test_arc_unknown_norm():
    with pytest.raises(ValidationError):
        cumulative_arc_length(np.zeros((3, 3)), "linf")


# ---------------------------------------------------------------------------
# speed alignment
# ---------------------------------------------------------------------------

def test_align_identity_reparameterization():
    rng = np.random.default_rng(2)
    steps = rng.uniform(0.01, 0.1, size=19)
    pts = np.zeros((20, 3))
    pts[1:, 0] = np.cumsum(steps)  # monotone path along +x
    arc = cumulative_arc_length(pts, "l1")
    out = align_speed(pts, arc, norm="l1")
    assert np.abs(out - pts).max() < 1e-12


def test_align_quadratic_ease_on_line_oracle():
    """Oracle: closed-form evaluation along a straight unit-speed line."""
    n = 50
    pts = np.zeros((n, 3))
    pts[:, 0] = np.arange(n) * 0.1  # unit-speed straight line, total 4.9
    total = 0.1 * (n - 1)
    s = np.linspace(0.0, 1.0, n) ** 2 * total  # quadratic ease-in, same total
    out = align_speed(pts, s, norm="l2")
    expected = np.zeros_like(pts)
    expected[:, 0] = s  # the line evaluated at those arc lengths
    assert np.abs(out - expected).max() < 1e-9


def test_align_static_original_pins_start():
    pts = np.zeros((10, 3))
    pts[:, 0] = np.linspace(0, 3, 10)
    out = align_speed(pts, np.zeros(10), norm="l1")
    assert np.array_equal(out, np.tile(pts[0], (10, 1)))


def test_align_zero_length_edited_errors():
    pts = np.tile([1.0, 0.0, 2.0], (5, 1))
    arc = np.linspace(0, 2, 5)
    with pytest.raises(DegenerateGeometryError):
        align_speed(pts, arc)


def test_align_rescales_profile():
    """A profile with total 1 re-routed onto a path of length 8 spans the whole path."""
    pts = np.zeros((5, 3))
    pts[:, 0] = [0.0, 2.0, 4.0, 6.0, 8.0]
    orig = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    out = align_speed(pts, orig, norm="l1")
    assert np.abs(out[:, 0] - [0.0, 2.0, 4.0, 6.0, 8.0]).max() < 1e-12
    # without rescaling the raw profile only covers the first meter
    raw = align_speed(pts, orig, norm="l1", rescale=False)
    assert np.abs(raw[:, 0] - orig).max() < 1e-12


def test_align_speed_preservation_l1_monotone_path():
    """On a componentwise-monotone path L1 increments match the target exactly."""
    rng = np.random.default_rng(3)
    # piecewise-linear monotone path in (x, z)
    verts = np.cumsum(rng.uniform(0.1, 1.0, size=(6, 2)), axis=0)
    verts = np.concatenate([[[0.0, 0.0]], verts])
    pts = np.zeros((7, 3))
    pts[:, 0] = verts[:, 0]
    pts[:, 2] = verts[:, 1]
    orig = np.cumsum(np.concatenate([[0.0], rng.uniform(0.05, 0.6, size=39)]))
    # interpolate the edited path to 40 frames first (keypoints every ~6 frames)
    kps = [Keypoint(u, v, frame=int(round(i * 39 / 6))) for i, (u, v) in enumerate(verts * 10)]
    px = interpolate_keypoints(kps, 40)
    path = np.zeros((40, 3))
    path[:, 0] = px[:, 0] / 10
    path[:, 2] = px[:, 1] / 10
    out = align_speed(path, orig, norm="l1")
    got = np.diff(cumulative_arc_length(out, "l1"))
    target = np.diff(orig) * (cumulative_arc_length(path, "l1")[-1] / orig[-1])
    assert np.abs(got - target).max() < 1e-9


# ---------------------------------------------------------------------------
# headings
# ---------------------------------------------------------------------------

def test_headings_along_x():
    pts = np.zeros((10, 3))
    pts[:, 0] = np.arange(10.0)
    psi, rots = derive_headings(pts, smoothing_window=1)
    assert np.abs(psi).max() == 0.0
    assert np.abs(rots - np.eye(3)).max() == 0.0


def test_headings_step_along_z_matches_matrix():
    """Substituting psi = pi/2 into the heading matrix by hand."""
    pts = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    psi, rots = derive_headings(pts, smoothing_window=1)
    assert np.allclose(psi, np.pi / 2)
    expected = np.array([[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
    assert np.abs(rots[1] - expected).max() < 1e-12


def test_headings_hold_rule_mid_sequence():
    pts = np.zeros((8, 3))
    pts[:4, 0] = np.arange(4.0)  # moving +x
    pts[4:, 0] = 3.0  # static afterwards
    pts[2:, 2] = 0.0
    psi, _ = derive_headings(pts, smoothing_window=1)
    assert np.abs(psi[4:]).max() == 0.0  # held last moving heading (0 along +x)


def test_headings_first_frame_copies_second():
    pts = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 2.0], [2.0, 0.0, 2.0]])
    psi, _ = derive_headings(pts, smoothing_window=1)
    assert psi[0] == psi[1]


def test_headings_tangent_property():
    rng = np.random.default_rng(4)
    pts = np.cumsum(rng.uniform(-0.5, 1.0, size=(30, 3)), axis=0)
    psi, _ = derive_headings(pts, smoothing_window=1)
    dx = np.diff(pts[:, 0])
    dz = np.diff(pts[:, 2])
    disp = np.hypot(dx, dz)
    for i in range(1, 30):
        if disp[i - 1] >= 1e-5:
            tangent = np.array([dx[i - 1], dz[i - 1]]) / disp[i - 1]
            assert np.abs(np.array([np.cos(psi[i]), np.sin(psi[i])]) - tangent).max() < 1e-9


def test_headings_all_static_uses_initial():
    pts = np.tile([1.0, 0.0, 1.0], (5, 1))
    psi, rots = derive_headings(pts, smoothing_window=1, initial_heading=0.3)
    assert np.allclose(psi, 0.3)


def test_headings_smoothing_reduces_jitter():
    rng = np.random.default_rng(5)
    pts = np.zeros((60, 3))
    pts[:, 0] = np.arange(60.0) * 0.2
    pts[:, 2] = rng.normal(scale=0.01, size=60)
    raw, _ = derive_headings(pts, smoothing_window=1)
    smooth, _ = derive_headings(pts, smoothing_window=9)
    assert np.std(np.diff(smooth)) < np.std(np.diff(raw))


def test_headings_matrix_form():
    rng = np.random.default_rng(6)
    for psi in rng.uniform(-np.pi, np.pi, size=20):
        R = heading_rotation(psi)
        assert np.abs(R @ R.T - np.eye(3)).max() < 1e-12
        assert abs(np.linalg.det(R) - 1.0) < 1e-12
        assert R[1, 1] == 1.0 and R[0, 1] == R[1, 0] == R[1, 2] == R[2, 1] == 0.0


def test_headings_too_short():
    with pytest.raises(ValidationError):
        derive_headings(np.zeros((1, 3)))


# ---------------------------------------------------------------------------
# retargeting
# ---------------------------------------------------------------------------

def test_retarget_identity():
    from worldmotion.trajectory import retarget_vertices

    rng = np.random.default_rng(7)
    verts = rng.normal(size=(40, 3))
    root = verts.mean(axis=0)
    out = retarget_vertices(verts, np.zeros(3), root, np.eye(3), root)
    assert np.abs(out - verts).max() < 1e-12


def test_retarget_pure_translation():
    from worldmotion.trajectory import retarget_vertices

    rng = np.random.default_rng(8)
    verts = rng.normal(size=(40, 3))
    root = np.array([1.0, 0.0, 2.0])
    new_root = np.array([5.0, 0.0, -3.0])
    out = retarget_vertices(verts, np.zeros(3), root, np.eye(3), new_root)
    assert np.abs(out - (verts + (new_root - root))).max() < 1e-12


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    st.floats(-np.pi, np.pi),
)
def test_retarget_isometry(phi, psi):
    from worldmotion.trajectory import retarget_vertices

    rng = np.random.default_rng(9)
    verts = rng.normal(size=(25, 3))
    out = retarget_vertices(
        verts, np.asarray(phi), np.array([0.5, 0.5, 0.5]), heading_rotation(psi),
        np.array([-1.0, 0.0, 2.0]),
    )
    d_in = np.linalg.norm(verts[:, None] - verts[None, :], axis=-1)
    d_out = np.linalg.norm(out[:, None] - out[None, :], axis=-1)
    assert np.abs(d_in - d_out).max() < 1e-9


def test_retarget_heading_sets_new_orientation():
    """After removing phi and applying the heading, the body faces the heading."""
    from worldmotion.trajectory import retarget_vertices

    verts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])  # a stick facing +x
    phi = np.array([0.0, 0.7, 0.0])
    R_phi = axis_angle_to_matrix(phi)
    world_verts = verts @ R_phi.T  # body yawed by phi in the original frame
    psi = np.pi / 2
    out = retarget_vertices(world_verts, phi, np.zeros(3), heading_rotation(psi), np.zeros(3))
    assert np.abs(out[1] - [np.cos(psi), 0.0, np.sin(psi)]).max() < 1e-12


def test_retarget_yaw_only_preserves_lean():
    from worldmotion.trajectory import retarget_vertices

    verts = np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]])  # vertical stick
    # lean the body forward 20 degrees about z, plus a yaw
    phi_lean = np.array([0.0, 0.0, -0.35])
    R_lean = axis_angle_to_matrix(phi_lean)
    yaw = 0.8
    R_yaw = heading_rotation(yaw)
    R_total = R_yaw @ R_lean
    from worldmotion.rotations import matrix_to_axis_angle

    world_verts = verts @ R_total.T
    out_full = retarget_vertices(world_verts, matrix_to_axis_angle(R_total), np.zeros(3), np.eye(3), np.zeros(3))
    out_yaw = retarget_vertices(
        world_verts, matrix_to_axis_angle(R_total), np.zeros(3), np.eye(3), np.zeros(3), yaw_only=True
    )
    # full inverse restores the vertical stick; yaw-only keeps the lean
    assert np.abs(out_full[1] - [0.0, 1.0, 0.0]).max() < 1e-9
    assert np.abs(out_yaw[1] - verts[1] @ R_lean.T).max() < 1e-9


# ---------------------------------------------------------------------------
# foot grounding
# ---------------------------------------------------------------------------

def _stick_frames(offsets):
    """One vertical stick per frame whose lowest vertex sits at the given offset."""
    frames = np.zeros((len(offsets), 3, 3))
    for i, off in enumerate(offsets):
        frames[i, :, 1] = [off, off + 0.5, off + 1.0]
    return frames


def test_ground_feet_already_grounded():
    frames = _stick_frames(np.zeros(6))
    out = ground_feet(frames, window=5)
    assert np.array_equal(out, frames)


def test_ground_feet_uniform_float():
    frames = _stick_frames(np.full(6, 0.05))
    out = ground_feet(frames, window=5)
    assert np.abs(out[:, :, 1] - _stick_frames(np.zeros(6))[:, :, 1]).max() < 1e-12


def test_ground_feet_single_penetration_sliding_min_oracle():
    """Oracle: hand-computed sliding minima for a single dipping frame."""
    offsets = np.zeros(11)
    offsets[5] = -0.02
    frames = _stick_frames(offsets)
    out = ground_feet(frames, window=5)
    # frames 3..7 (window 5 centered on each contains frame 5) lift by 0.02
    expected_shift = np.zeros(11)
    expected_shift[3:8] = -0.02
    for i in range(11):
        lo, hi = max(0, i - 2), min(11, i + 3)
        assert abs(offsets[lo:hi].min() - expected_shift[i]) < 1e-15
        assert np.abs(out[i, :, 1] - (frames[i, :, 1] - expected_shift[i])).max() < 1e-12


def test_ground_feet_uses_foot_vertices_only():
    frames = np.zeros((4, 2, 3))
    frames[:, 0, 1] = 0.10  # foot vertex floats
    frames[:, 1, 1] = -5.0  # non-foot vertex is irrelevant
    out = ground_feet(frames, window=3, foot_vertex_ids=np.array([0]))
    assert np.abs(out[:, 0, 1]).max() < 1e-12


def test_ground_feet_idempotent_on_grounded_and_dip():
    offsets = np.zeros(11)
    offsets[5] = -0.02
    frames = _stick_frames(offsets)
    once = ground_feet(frames, window=5)
    twice = ground_feet(once, window=5)
    assert np.array_equal(once, twice)


def test_ground_feet_validation():
    with pytest.raises(ValidationError):
        ground_feet(np.zeros((3, 2, 3)), window=4)
    with pytest.raises(ValidationError):
        ground_feet(np.zeros((0, 2, 3)), window=3)


def test_ground_shifts_window_clamps_at_ends():
    offsets = np.array([0.3, 0.2, 0.1, 0.2, 0.3])
    frames = _stick_frames(offsets)
    shifts = ground_shifts(frames, window=3)
    assert np.allclose(shifts, [0.2, 0.1, 0.1, 0.1, 0.2])
