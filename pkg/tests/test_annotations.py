"""Annotation parsing, serialization, rescaling and the scene generator."""

import math

import numpy as np
import pytest

from graspmaps import (
    AnnotationError,
    AnnotationSet,
    GraspRect,
    SynthParams,
    angular_distance,
    bin_index,
    load_depth,
    parse_cornell,
    parse_jacquard,
    points_to_rect,
    rect_corners,
    rect_iou,
    scale_annotations,
    serialize_jacquard,
    synth_scene,
)


def test_annotation_set_validates_dims():
    with pytest.raises(ValueError):
        AnnotationSet(scene_id="x", image_width=0, image_height=10, rects=())


# --- Jacquard parsing --------------------------------------------------------


def test_jacquard_direct_mapping():
    ann = parse_jacquard("512;512;0;100;50\n", 1024, 1024, scene_id="a")
    assert len(ann) == 1
    r = ann.rects[0]
    assert (r.cx, r.cy, r.width, r.height) == (512, 512, 100, 50)
    assert r.phi == 0.0
    assert ann.scene_id == "a"


def test_jacquard_degree_negation_and_normalization():
    # file angles are math-convention degrees; 90 deg lands on -pi/2
    ann = parse_jacquard("100;200;90;40;20", 1024, 1024)
    assert ann.rects[0].phi == -math.pi / 2
    ann = parse_jacquard("100;200;30;40;20", 1024, 1024)
    assert ann.rects[0].phi == pytest.approx(-math.radians(30))


def test_jacquard_blank_lines_and_duplicates():
    text = "10;10;0;20;10\n\n10;10;0;20;10\n10;10;0;20;5\n"
    ann = parse_jacquard(text, 100, 100)
    assert len(ann) == 3  # duplicates preserved; the builder deduplicates


@pytest.mark.parametrize(
    "line",
    [
        "1;2;3;4",  # wrong field count
        "1;2;3;4;5;6",
        "1;2;x;4;5",  # non-numeric
        "1;2;inf;4;5",  # non-finite
        "1;2;3;0;5",  # non-positive opening
        "1;2;3;4;-5",  # non-positive jaw
    ],
)
def test_jacquard_malformed_lines(line):
    with pytest.raises(AnnotationError) as err:
        parse_jacquard("5;5;0;10;5\n" + line + "\n", 100, 100)
    assert "line 2" in str(err.value)


def test_jacquard_serialize_roundtrip():
    rng = np.random.default_rng(4)
    rects = tuple(
        GraspRect(
            cx=rng.uniform(0, 320),
            cy=rng.uniform(0, 320),
            phi=rng.uniform(-math.pi / 2, math.pi / 2 - 1e-9),
            width=rng.uniform(1, 80),
            height=rng.uniform(1, 40),
        )
        for _ in range(25)
    )
    ann = AnnotationSet(scene_id="rt", image_width=320, image_height=320, rects=rects)
    back = parse_jacquard(serialize_jacquard(ann), 320, 320, scene_id="rt")
    assert len(back) == len(ann)
    for a, b in zip(ann.rects, back.rects):
        assert abs(a.cx - b.cx) < 1e-6
        assert abs(a.cy - b.cy) < 1e-6
        assert angular_distance(a.phi, b.phi) < 1e-6
        assert abs(a.width - b.width) < 1e-6
        assert abs(a.height - b.height) < 1e-6


def test_serialize_empty_set_is_empty_text():
    ann = AnnotationSet(scene_id="e", image_width=10, image_height=10, rects=())
    assert serialize_jacquard(ann) == ""
    assert len(parse_jacquard("", 10, 10)) == 0


# --- Cornell parsing ---------------------------------------------------------


def test_cornell_axis_aligned_group():
    text = "3 4\n7 4\n7 6\n3 6\n"
    ann, skipped = parse_cornell(text, 640, 480)
    assert skipped == 0
    r = ann.rects[0]
    assert (r.cx, r.cy, r.phi, r.width, r.height) == (5, 5, 0, 4, 2)


def test_cornell_nan_group_skipped():
    good = "3 4\n7 4\n7 6\n3 6\n"
    bad = "1 1\nNaN NaN\n2 2\n3 3\n"
    ann, skipped = parse_cornell(good + bad, 640, 480)
    assert len(ann) == 1
    assert skipped == 1


def test_cornell_degenerate_group_skipped():
    collinear = "0 0\n1 0\n2 0\n3 0\n"
    ann, skipped = parse_cornell(collinear, 640, 480)
    assert len(ann) == 0
    assert skipped == 1


def test_cornell_group_count_must_divide_by_four():
    with pytest.raises(AnnotationError):
        parse_cornell("1 2\n3 4\n5 6\n", 640, 480)


def test_cornell_non_numeric_coordinate():
    with pytest.raises(AnnotationError):
        parse_cornell("1 2\n3 4\nfive 6\n7 8\n", 640, 480)


def test_cornell_rotated_group_roundtrips():
    rng = np.random.default_rng(9)
    for _ in range(50):
        r = GraspRect(
            cx=rng.uniform(100, 500),
            cy=rng.uniform(100, 380),
            phi=rng.uniform(-math.pi / 2, math.pi / 2 - 1e-9),
            width=rng.uniform(20, 120),
            height=rng.uniform(10, 60),
        )
        corners = rect_corners(r)
        text = "\n".join(f"{x} {y}" for x, y in corners) + "\n"
        ann, skipped = parse_cornell(text, 640, 480)
        assert skipped == 0
        fit = ann.rects[0]
        back = rect_corners(fit)
        err = min(
            float(np.hypot(*(np.roll(back, k, axis=0) - corners).T).max())
            for k in range(4)
        )
        assert err < 1e-4


# --- rescaling ---------------------------------------------------------------


def test_scale_isotropic_example():
    r = GraspRect(cx=512, cy=512, phi=0.37, width=100, height=50)
    ann = AnnotationSet(scene_id="s", image_width=1024, image_height=1024, rects=(r,))
    out = scale_annotations(ann, 320, 320)
    assert (out.image_width, out.image_height) == (320, 320)
    got = out.rects[0]
    assert (got.cx, got.cy) == (160, 160)
    assert got.phi == r.phi
    assert got.width == pytest.approx(31.25)
    assert got.height == pytest.approx(15.625)


def test_scale_identity():
    r = GraspRect(cx=10, cy=20, phi=-0.5, width=8, height=4)
    ann = AnnotationSet(scene_id="i", image_width=64, image_height=48, rects=(r,))
    assert scale_annotations(ann, 64, 48).rects == (r,)


def test_scale_anisotropic_matches_corner_transform():
    rng = np.random.default_rng(21)
    for _ in range(50):
        r = GraspRect(
            cx=rng.uniform(20, 80),
            cy=rng.uniform(20, 80),
            phi=rng.uniform(-math.pi / 2, math.pi / 2 - 1e-9),
            width=rng.uniform(8, 30),
            height=rng.uniform(4, 15),
        )
        ann = AnnotationSet(
            scene_id="a", image_width=100, image_height=100, rects=(r,)
        )
        out = scale_annotations(ann, 150, 300)
        got = out.rects[0]
        expected = points_to_rect(rect_corners(r) * np.array([1.5, 3.0]))
        assert abs(got.cx - expected.cx) < 1e-9
        assert abs(got.cy - expected.cy) < 1e-9
        assert angular_distance(got.phi, expected.phi) < 1e-9
        assert abs(got.width - expected.width) < 1e-9
        assert abs(got.height - expected.height) < 1e-9


def test_scale_anisotropic_angle_formula():
    # doubling the y axis turns phi into atan(2 tan phi)
    phi = math.pi / 4
    r = GraspRect(cx=50, cy=50, phi=phi, width=20, height=10)
    ann = AnnotationSet(scene_id="f", image_width=100, image_height=100, rects=(r,))
    out = scale_annotations(ann, 100, 200)
    assert out.rects[0].phi == pytest.approx(math.atan(2 * math.tan(phi)), abs=1e-12)


def test_iou_invariant_under_common_isotropic_scale():
    rng = np.random.default_rng(3)
    for _ in range(30):
        a = GraspRect(
            cx=rng.uniform(30, 70), cy=rng.uniform(30, 70),
            phi=rng.uniform(-math.pi / 2, math.pi / 2 - 1e-9),
            width=rng.uniform(10, 30), height=rng.uniform(5, 15),
        )
        b = GraspRect(
            cx=a.cx + rng.uniform(-10, 10), cy=a.cy + rng.uniform(-10, 10),
            phi=rng.uniform(-math.pi / 2, math.pi / 2 - 1e-9),
            width=rng.uniform(10, 30), height=rng.uniform(5, 15),
        )
        ann = AnnotationSet(
            scene_id="p", image_width=100, image_height=100, rects=(a, b)
        )
        out = scale_annotations(ann, 250, 250)
        assert rect_iou(*out.rects) == pytest.approx(rect_iou(a, b), abs=1e-9)


# --- synthetic scenes --------------------------------------------------------


def test_synth_deterministic():
    p = SynthParams(seed=7, num_rects=6, duplicate_center_fraction=0.5)
    assert synth_scene(p).rects == synth_scene(p).rects


def test_synth_empty():
    assert len(synth_scene(SynthParams(seed=1, num_rects=0))) == 0


def test_synth_duplicate_pairs_structure():
    p = SynthParams(seed=11, num_rects=4, duplicate_center_fraction=1.0, bins=3)
    s = synth_scene(p)
    assert len(s) == 4
    for i in (0, 2):
        a, b = s.rects[i], s.rects[i + 1]
        assert (a.cx, a.cy) == (b.cx, b.cy)
        assert angular_distance(a.phi, b.phi) > math.pi / 3
        assert bin_index(a.phi, 3) != bin_index(b.phi, 3)


def test_synth_pairs_need_enough_bins():
    with pytest.raises(ValueError):
        synth_scene(SynthParams(seed=1, num_rects=2, duplicate_center_fraction=1.0, bins=2))


def test_synth_non_overlapping_scenes_have_disjoint_groups():
    for seed in range(20):
        p = SynthParams(
            seed=seed, num_rects=5, non_overlapping=True,
            duplicate_center_fraction=0.4, bins=3,
        )
        s = synth_scene(p)
        rects = s.rects
        for i in range(len(rects)):
            for j in range(i + 1, len(rects)):
                a, b = rects[i], rects[j]
                if (a.cx, a.cy) == (b.cx, b.cy):
                    continue  # center-sharing partners overlap by design
                assert rect_iou(a, b) == 0.0


def test_synth_half_jaw_and_snap():
    p = SynthParams(seed=5, num_rects=8, half_jaw=True, snap_centers=True)
    for r in synth_scene(p).rects:
        assert r.height == r.width / 2
        assert r.cx % 1 == 0.5
        assert r.cy % 1 == 0.5


def test_synth_rects_within_configured_ranges():
    p = SynthParams(seed=2, num_rects=20)
    for r in synth_scene(p).rects:
        assert p.center_min <= r.cx <= p.center_max
        assert p.center_min <= r.cy <= p.center_max
        assert p.width_min <= r.width <= p.width_max
        assert p.height_min <= r.height <= p.height_max
        assert r.is_normalized


def test_synth_params_validation():
    with pytest.raises(ValueError):
        SynthParams(seed=0, num_rects=-1)
    with pytest.raises(ValueError):
        SynthParams(seed=0, num_rects=1, duplicate_center_fraction=1.5)
    with pytest.raises(ValueError):
        SynthParams(seed=0, num_rects=1, width_min=0.0)


def test_synth_impossible_placement_raises():
    p = SynthParams(
        seed=0, num_rects=50, non_overlapping=True,
        center_min=50.0, center_max=51.0, width_min=40.0, width_max=60.0,
    )
    with pytest.raises(RuntimeError):
        synth_scene(p)


# --- depth adapter -----------------------------------------------------------


def test_load_depth_passes_values_through(tmp_path):
    from PIL import Image

    arr = (np.arange(12, dtype=np.uint16) * 100).reshape(3, 4)
    path = tmp_path / "d.png"
    Image.fromarray(arr).save(path)
    got = load_depth(path)
    assert got.shape == (3, 4)
    assert got.dtype == np.float64
    assert np.array_equal(got, arr.astype(np.float64))
